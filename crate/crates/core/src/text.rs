//! Text normalization shared by loaders, the tokenizer and the scorer.
//!
//! A character is a Unicode scalar value after NFC normalization. Line
//! terminators are not part of a sentence.

use alloc::string::String;
use unicode_normalization::{is_nfc_quick, IsNormalized, UnicodeNormalization};

/// NFC-normalize `s`. Already-normalized input is returned byte-identical.
pub fn nfc(s: &str) -> String {
    match is_nfc_quick(s.chars()) {
        IsNormalized::Yes => String::from(s),
        _ => s.nfc().collect(),
    }
}

/// Strip one trailing `"\n"` or `"\r\n"`.
pub fn strip_line_terminator(s: &str) -> &str {
    let s = s.strip_suffix('\n').unwrap_or(s);
    s.strip_suffix('\r').unwrap_or(s)
}

/// Normalize one raw input line: strip the terminator, then NFC.
pub fn normalize_line(raw: &str) -> String {
    nfc(strip_line_terminator(raw))
}

/// Number of Unicode scalar values in the NFC form of `s`.
pub fn char_count(s: &str) -> usize {
    match is_nfc_quick(s.chars()) {
        IsNormalized::Yes => s.chars().count(),
        _ => s.nfc().count(),
    }
}
