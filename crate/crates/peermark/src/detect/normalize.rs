//! Text normalization applied to both candidates and review text before any
//! matching. LLM output tends to arrive with markdown emphasis and curly
//! quotes, so matching raw strings would silently miss real occurrences.

use unicode_normalization::UnicodeNormalization;

/// Normalizes text for matching: NFC, curly quotes/apostrophes mapped to
/// straight ones, markdown emphasis markers (`*`, `_`) dropped, case folded,
/// whitespace runs collapsed to single spaces, ends trimmed.
///
/// Idempotent: `normalize(normalize(t)) == normalize(t)`.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.nfc() {
        let c = match c {
            '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '\u{2032}' => '\'',
            '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' | '\u{2033}' => '"',
            other => other,
        };
        if c == '*' || c == '_' {
            continue;
        }
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        for lower in c.to_lowercase() {
            out.push(lower);
        }
    }
    out
}

/// Whether the character counts as part of a word for boundary checks.
pub(crate) fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// True when the byte range `[start, end)` of `text` sits on word boundaries.
pub(crate) fn on_word_boundaries(text: &str, start: usize, end: usize) -> bool {
    let before_ok = start == 0
        || text[..start]
            .chars()
            .next_back()
            .is_none_or(|c| !is_word_char(c));
    let after_ok = end == text.len()
        || text[end..].chars().next().is_none_or(|c| !is_word_char(c));
    before_ok && after_ok
}
