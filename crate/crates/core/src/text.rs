//! Text primitives shared by the codec, the filters, the ranker and the stub
//! backend: sentence segmentation, normalization and whitespace token counts.

use std::collections::BTreeSet;

/// Words ignored when matching content terms between a query or question and
/// a sentence. The list also covers the vocabulary of the stub backend's
/// question template so that template words never count as overlap.
pub const STOP_WORDS: [&str; 30] = [
    "a", "an", "the", "and", "of", "to", "in", "on", "at", "for", "with", "by", "from", "as", "is",
    "are", "was", "were", "be", "it", "this", "that", "what", "why", "how", "who", "does", "say",
    "source", "about",
];

pub fn is_stop_word(term: &str) -> bool {
    STOP_WORDS.contains(&term)
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits text into sentences.
///
/// A boundary sits after `.`, `!` or `?` when the terminator is followed by
/// whitespace and then an uppercase letter (or the end of the text). The
/// terminator stays with its sentence and surrounding whitespace is trimmed.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    while i < chars.len() {
        let (byte, c) = chars[i];
        if is_terminator(c) && i + 1 < chars.len() && chars[i + 1].1.is_whitespace() {
            let mut j = i + 1;
            while j < chars.len() && chars[j].1.is_whitespace() {
                j += 1;
            }
            if j == chars.len() || chars[j].1.is_uppercase() {
                push_trimmed(&mut sentences, &text[start..byte + c.len_utf8()]);
                start = if j == chars.len() {
                    text.len()
                } else {
                    chars[j].0
                };
                i = j;
                continue;
            }
        }
        i += 1;
    }
    push_trimmed(&mut sentences, &text[start..]);
    sentences
}

fn push_trimmed(out: &mut Vec<String>, piece: &str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece.to_string());
    }
}

fn is_strippable(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace() && c != '$' && c != '%'
}

/// Canonical form used for every textual equality test in the crate:
/// lowercase, single spaces, and each token stripped of leading and trailing
/// punctuation (`$` and `%` survive, as does anything internal to a token).
pub fn normalize(text: &str) -> String {
    let lowered = text.to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    for token in lowered.split_whitespace() {
        let token = token.trim_matches(is_strippable);
        if token.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

/// Normalized tokens in order of appearance.
pub fn terms(text: &str) -> Vec<String> {
    normalize(text)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Distinct normalized tokens that are not stop words.
pub fn content_terms(text: &str) -> BTreeSet<String> {
    terms(text)
        .into_iter()
        .filter(|t| !is_stop_word(t))
        .collect()
}

/// Reference token count: the number of maximal non-whitespace runs.
pub fn count_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Anything that can measure text against a token budget.
pub trait TokenCounter {
    fn count_tokens(&self, text: &str) -> usize;
}

/// The whitespace counting rule as a [`TokenCounter`].
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceCounter;

impl TokenCounter for WhitespaceCounter {
    fn count_tokens(&self, text: &str) -> usize {
        count_tokens(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_on_terminator_then_uppercase() {
        assert_eq!(segment_sentences("A b. C d."), vec!["A b.", "C d."]);
        assert_eq!(
            segment_sentences("Why? Because! Yes."),
            vec!["Why?", "Because!", "Yes."]
        );
    }

    #[test]
    fn empty_and_blank_input() {
        assert!(segment_sentences("").is_empty());
        assert!(segment_sentences("   \n ").is_empty());
    }

    #[test]
    fn decimal_point_is_not_a_boundary() {
        assert_eq!(
            segment_sentences("Costs $3.50 total. Yes."),
            vec!["Costs $3.50 total.", "Yes."]
        );
    }

    #[test]
    fn lowercase_continuation_is_not_a_boundary() {
        assert_eq!(
            segment_sentences("It went to the U.S. ambassador. Then it left."),
            vec!["It went to the U.S. ambassador.", "Then it left."]
        );
    }

    #[test]
    fn unterminated_tail_is_kept() {
        assert_eq!(
            segment_sentences("One. Two three"),
            vec!["One.", "Two three"]
        );
        assert_eq!(segment_sentences("One.\n\n  Two."), vec!["One.", "Two."]);
    }

    #[test]
    fn normalize_rules() {
        assert_eq!(normalize("  Hit an ICEBERG. "), "hit an iceberg");
        assert_eq!(normalize("$100,000"), "$100,000");
        assert_eq!(
            normalize("($200,000 for organizations),"),
            "$200,000 for organizations"
        );
        assert_eq!(normalize("22%"), "22%");
        assert_eq!(normalize("668-668d)"), "668-668d");
        assert_eq!(normalize("\"taking\" - eagles"), "taking eagles");
        assert_eq!(normalize(""), "");
    }

    #[test]
    fn token_counts() {
        assert_eq!(count_tokens("a b  c"), 3);
        assert_eq!(count_tokens(""), 0);
        assert_eq!(count_tokens("\t x \n"), 1);
    }

    #[test]
    fn stop_list_has_thirty_distinct_words() {
        let set: BTreeSet<_> = STOP_WORDS.iter().collect();
        assert_eq!(set.len(), 30);
    }

    #[test]
    fn content_terms_drop_stop_words() {
        let t = content_terms("Why is the sky blue?");
        assert_eq!(t.into_iter().collect::<Vec<_>>(), vec!["blue", "sky"]);
    }
}
