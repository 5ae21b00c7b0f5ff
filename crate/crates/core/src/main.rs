fn main() {
    std::process::exit(mcr_graph::evalcli::cli_main(std::env::args_os()));
}
