//! The shared analyzer: lowercase, split on anything that is not
//! alphanumeric. No stemming, no stopwords.

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strips_punctuation_and_lowercases() {
        assert_eq!(tokenize("Who won?"), vec!["who", "won"]);
        assert_eq!(tokenize("T5-based QR"), vec!["t5", "based", "qr"]);
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" ?! ").is_empty());
    }

    proptest! {
        #[test]
        fn tokens_are_lowercase_alphanumeric(s in ".{0,64}") {
            for tok in tokenize(&s) {
                prop_assert!(!tok.is_empty());
                prop_assert!(tok.chars().all(char::is_alphanumeric));
                prop_assert_eq!(tokenize(&tok), vec![tok.clone()]);
            }
        }
    }
}
