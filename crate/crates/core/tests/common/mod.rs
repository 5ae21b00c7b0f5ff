#![allow(dead_code)]

pub mod gradients;
pub mod invariants;
pub mod learn;
pub mod mini;
pub mod oracles;
pub mod pipeline;
pub mod planted;
