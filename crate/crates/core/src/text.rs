//! Tokenization shared by label indexing and document annotation.

use unicode_segmentation::UnicodeSegmentation;

/// Longest label, in tokens, that the annotator will try to match.
pub const MAX_LABEL_TOKENS: usize = 6;

/// Splits `text` on Unicode word boundaries and case-folds every word.
pub fn tokenize(text: &str) -> Vec<String> {
    text.unicode_words().map(str::to_lowercase).collect()
}

/// Canonical lookup key for a label: its tokens joined by single spaces.
pub fn normalize_label(label: &str) -> String {
    tokenize(label).join(" ")
}
