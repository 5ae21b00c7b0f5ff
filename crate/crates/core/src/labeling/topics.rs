use super::MetaTopic;

/// Keyword table in priority order; matching is a case-insensitive
/// substring test. Mirrored in `docs/topics.md`.
pub const TOPIC_KEYWORDS: [(MetaTopic, &[&str]); 4] = [
    (
        MetaTopic::Bug,
        &[
            "bug",
            "crash",
            "null pointer",
            "exception",
            "overflow",
            "leak",
            "race",
            "incorrect",
            "wrong result",
        ],
    ),
    (
        MetaTopic::Usecase,
        &[
            "requirement",
            "use case",
            "spec",
            "expected behavior",
            "user story",
        ],
    ),
    (
        MetaTopic::Structure,
        &[
            "refactor",
            "extract",
            "split",
            "duplicate",
            "coupling",
            "move this",
            "complexity",
        ],
    ),
    (
        MetaTopic::Style,
        &[
            "rename",
            "naming",
            "format",
            "indent",
            "typo",
            "convention",
            "readability",
            "comment style",
        ],
    ),
];

pub fn weak_topic_label(body: &str) -> MetaTopic {
    let lower = body.to_lowercase();
    TOPIC_KEYWORDS
        .iter()
        .find(|(_, words)| words.iter().any(|w| lower.contains(w)))
        .map_or(MetaTopic::Other, |(topic, _)| *topic)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_examples() {
        assert_eq!(
            weak_topic_label("this can throw a null pointer exception"),
            MetaTopic::Bug
        );
        assert_eq!(
            weak_topic_label("please rename this variable for readability"),
            MetaTopic::Style
        );
        assert_eq!(weak_topic_label(""), MetaTopic::Other);
    }

    #[test]
    fn priority_and_case() {
        // STRUCTURE and BUG both match; BUG wins.
        assert_eq!(
            weak_topic_label("Refactor this, it CRASHES"),
            MetaTopic::Bug
        );
        assert_eq!(
            weak_topic_label("Does this meet the REQUIREMENT? rename it"),
            MetaTopic::Usecase
        );
        assert_eq!(weak_topic_label("extract a helper"), MetaTopic::Structure);
        assert_eq!(weak_topic_label("looks good to me"), MetaTopic::Other);
    }
}
