//! Exact-match answer checking with the usual QA normalisation.

use crate::types::Verdict;

/// Lowercase, drop punctuation, drop the articles `a`/`an`/`the`, collapse
/// whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lowered: String = text
        .to_lowercase()
        .chars()
        .filter(|c| !c.is_ascii_punctuation() && !is_unicode_punctuation(*c))
        .collect();
    lowered
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn is_unicode_punctuation(c: char) -> bool {
    matches!(c, '\u{2018}' | '\u{2019}' | '\u{201c}' | '\u{201d}' | '\u{2013}' | '\u{2014}' | '\u{2026}')
}

/// Strict normalised equality. The verdict is flagged as oracle-verified
/// because the reference answer is hidden from solvers.
pub fn verify_em(oracle: &str, answer_text: &str) -> Verdict {
    let got = normalize_answer(answer_text);
    let want = normalize_answer(oracle);
    let verdict = if got.is_empty() {
        Verdict::unsolved("no answer extracted")
    } else if got == want {
        Verdict::solved()
    } else {
        Verdict::unsolved(format!("exact-match failed: {got:?} != {want:?}"))
    };
    verdict.with_oracle()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalization_rules() {
        assert_eq!(normalize_answer("The Eiffel Tower."), "eiffel tower");
        assert_eq!(normalize_answer("  An  apple "), "apple");
        assert_eq!(normalize_answer(""), "");
        assert_eq!(normalize_answer("Shreve, Lamb & Harmon"), "shreve lamb harmon");
    }

    #[test]
    fn exact_match() {
        let v = verify_em("The Beatles", "the beatles");
        assert!(v.is_solved());
        assert!(v.oracle_verified);
        assert!(!verify_em("1969", "1968").is_solved());
        assert!(!verify_em("Paris", "Paris, France").is_solved());
        assert_eq!(verify_em("Paris", "  ").detail(), "no answer extracted");
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(s in "\\PC{0,40}") {
            let once = normalize_answer(&s);
            prop_assert_eq!(normalize_answer(&once), once);
        }
    }
}
