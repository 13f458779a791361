/// Lowercases, splits on whitespace and detaches punctuation into standalone
/// tokens. Apostrophes between two alphanumeric characters stay inside the word.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut word = String::new();
        for (i, &c) in chars.iter().enumerate() {
            if c.is_alphanumeric() {
                word.extend(c.to_lowercase());
                continue;
            }
            let inner_apostrophe = matches!(c, '\'' | '\u{2019}')
                && i > 0
                && chars[i - 1].is_alphanumeric()
                && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
            if inner_apostrophe {
                word.push(c);
                continue;
            }
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            tokens.push(c.to_lowercase().collect());
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detaches_punctuation() {
        assert_eq!(tokenize("Great book!"), vec!["great", "book", "!"]);
        assert_eq!(tokenize("(wow)..."), vec!["(", "wow", ")", ".", ".", "."]);
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \t\n").is_empty());
    }

    #[test]
    fn keeps_inner_apostrophes() {
        assert_eq!(tokenize("C'est bon."), vec!["c'est", "bon", "."]);
        assert_eq!(tokenize("'quoted'"), vec!["'", "quoted", "'"]);
        assert_eq!(tokenize("don’t"), vec!["don’t"]);
    }

    #[test]
    fn non_ascii_lowercase() {
        assert_eq!(tokenize("ÉTÉ Schön"), vec!["été", "schön"]);
    }
}
