//! Line model shared by every stage: byte ingestion with printability
//! sanitation, lossless whitespace tokenization, and per-token casing and
//! script classification.

use std::fmt;
use std::ops::Deref;

use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_script::{Script, UnicodeScript};

/// One segment of text without line terminators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Line(String);

impl Line {
    /// Wraps `text`, returning `None` if it contains a line terminator.
    pub fn new(text: impl Into<String>) -> Option<Self> {
        let text = text.into();
        if text.contains(['\n', '\r']) {
            None
        } else {
            Some(Line(text))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl Deref for Line {
    type Target = str;

    fn deref(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Line {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Result of [`decode_bytes`] for a record that survived cleaning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedLine {
    pub line: Line,
    /// True iff malformed bytes or non-printable characters were removed.
    pub cleaned: bool,
}

/// Control (Cc) and format (Cf) characters, including horizontal tab.
pub fn is_non_printable(c: char) -> bool {
    c.is_control() || get_general_category(c) == GeneralCategory::Format
}

/// Decodes one raw record, dropping malformed UTF-8 sequences and
/// non-printable characters. Returns `None` when nothing but whitespace
/// remains.
pub fn decode_bytes(raw: &[u8]) -> Option<DecodedLine> {
    let mut text = String::with_capacity(raw.len());
    let mut cleaned = false;
    for chunk in raw.utf8_chunks() {
        let valid = chunk.valid();
        if valid.chars().any(is_non_printable) {
            cleaned = true;
            text.extend(valid.chars().filter(|&c| !is_non_printable(c)));
        } else {
            text.push_str(valid);
        }
        if !chunk.invalid().is_empty() {
            cleaned = true;
        }
    }
    if text.chars().all(char::is_whitespace) {
        return None;
    }
    Some(DecodedLine {
        line: Line(text),
        cleaned,
    })
}

/// A non-whitespace run together with the whitespace that precedes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub space: &'a str,
    pub body: &'a str,
}

/// Lossless whitespace tokenization of a line.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenizedText<'a> {
    pub tokens: Vec<Token<'a>>,
    /// Whitespace after the last token (or the whole line if it has no tokens).
    pub trailing: &'a str,
}

impl TokenizedText<'_> {
    pub fn detokenize(&self) -> String {
        let len = self
            .tokens
            .iter()
            .map(|t| t.space.len() + t.body.len())
            .sum::<usize>()
            + self.trailing.len();
        let mut out = String::with_capacity(len);
        for t in &self.tokens {
            out.push_str(t.space);
            out.push_str(t.body);
        }
        out.push_str(self.trailing);
        out
    }
}

pub fn tokenize(line: &str) -> TokenizedText<'_> {
    let mut tokens = Vec::new();
    let mut rest = line;
    loop {
        let body_start = rest
            .find(|c: char| !c.is_whitespace())
            .unwrap_or(rest.len());
        if body_start == rest.len() {
            return TokenizedText {
                tokens,
                trailing: rest,
            };
        }
        let after_space = &rest[body_start..];
        let body_len = after_space
            .find(char::is_whitespace)
            .unwrap_or(after_space.len());
        tokens.push(Token {
            space: &rest[..body_start],
            body: &after_space[..body_len],
        });
        rest = &after_space[body_len..];
    }
}

pub fn detokenize(tt: &TokenizedText<'_>) -> String {
    tt.detokenize()
}

/// Character changes under lowercasing (Unicode Changes_When_Lowercased).
pub fn is_upper(c: char) -> bool {
    let mut lower = c.to_lowercase();
    !(lower.len() == 1 && lower.next() == Some(c))
}

/// Lowercase-cased character: unchanged by lowercasing but changed by uppercasing.
pub fn is_lower(c: char) -> bool {
    if is_upper(c) {
        return false;
    }
    let mut upper = c.to_uppercase();
    !(upper.len() == 1 && upper.next() == Some(c))
}

pub fn is_cased(c: char) -> bool {
    is_upper(c) || is_lower(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CasingPattern {
    NoCase,
    Lower,
    Upper,
    Title,
    Irregular,
}

pub fn classify_casing(body: &str) -> CasingPattern {
    let mut cased = body.chars().filter(|&c| is_cased(c)).map(is_upper);
    let Some(first_upper) = cased.next() else {
        return CasingPattern::NoCase;
    };
    let mut rest_upper = 0usize;
    let mut rest_lower = 0usize;
    for up in cased {
        if up {
            rest_upper += 1;
        } else {
            rest_lower += 1;
        }
    }
    match (first_upper, rest_upper, rest_lower) {
        (false, 0, _) => CasingPattern::Lower,
        (true, 0, _) => CasingPattern::Title,
        (true, _, 0) => CasingPattern::Upper,
        _ => CasingPattern::Irregular,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScriptClass {
    Latin,
    Cyrillic,
    Digit,
    Mixed,
    Other,
}

pub fn is_latin_letter(c: char) -> bool {
    c.is_alphabetic() && c.script() == Script::Latin
}

pub fn is_cyrillic_letter(c: char) -> bool {
    c.is_alphabetic() && c.script() == Script::Cyrillic
}

pub fn classify_script(body: &str) -> ScriptClass {
    let (mut latin, mut cyrillic, mut letter, mut digit) = (false, false, false, false);
    for c in body.chars() {
        if c.is_alphabetic() {
            letter = true;
            match c.script() {
                Script::Latin => latin = true,
                Script::Cyrillic => cyrillic = true,
                _ => {}
            }
        } else if c.is_numeric() {
            digit = true;
        }
    }
    match (latin, cyrillic) {
        (true, true) => ScriptClass::Mixed,
        (true, false) => ScriptClass::Latin,
        (false, true) => ScriptClass::Cyrillic,
        (false, false) if !letter && digit => ScriptClass::Digit,
        _ => ScriptClass::Other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Byte-level reference: walk the input and keep only complete, valid
    /// UTF-8 sequences, decoding them by hand.
    fn brute_force_valid_chars(raw: &[u8]) -> String {
        let mut out = String::new();
        let mut i = 0;
        while i < raw.len() {
            let b = raw[i];
            let width = match b {
                0x00..=0x7F => 1,
                0xC2..=0xDF => 2,
                0xE0..=0xEF => 3,
                0xF0..=0xF4 => 4,
                _ => 0,
            };
            if width == 0 || i + width > raw.len() {
                i += 1;
                continue;
            }
            match std::str::from_utf8(&raw[i..i + width]) {
                Ok(s) => {
                    out.push_str(s);
                    i += width;
                }
                Err(_) => i += 1,
            }
        }
        out
    }

    #[test]
    fn clean_input_is_identity() {
        let d = decode_bytes(b"Praha").unwrap();
        assert_eq!(d.line.as_str(), "Praha");
        assert!(!d.cleaned);
    }

    #[test]
    fn truncated_sequence_is_removed() {
        let raw = b"Pra\xC3ha";
        let d = decode_bytes(raw).unwrap();
        assert_eq!(d.line.as_str(), "Praha");
        assert!(d.cleaned);
        assert_eq!(brute_force_valid_chars(raw), "Praha");
    }

    #[test]
    fn control_only_is_rejected() {
        assert_eq!(decode_bytes("\u{7}".as_bytes()), None);
        assert_eq!(decode_bytes(b"  \t "), None);
        assert_eq!(decode_bytes(b""), None);
    }

    #[test]
    fn tabs_and_format_chars_are_removed() {
        let d = decode_bytes("a\tb\u{200B}c\u{FEFF}".as_bytes()).unwrap();
        assert_eq!(d.line.as_str(), "abc");
        assert!(d.cleaned);
    }

    #[test]
    fn tokenize_examples() {
        let tt = tokenize("My iPhone");
        assert_eq!(
            tt.tokens,
            vec![
                Token {
                    space: "",
                    body: "My"
                },
                Token {
                    space: " ",
                    body: "iPhone"
                }
            ]
        );
        let tt = tokenize("  a");
        assert_eq!(
            tt.tokens,
            vec![Token {
                space: "  ",
                body: "a"
            }]
        );
        assert_eq!(tt.trailing, "");
        let tt = tokenize("");
        assert!(tt.tokens.is_empty());
        assert_eq!(detokenize(&tt), "");
        let tt = tokenize("a  ");
        assert_eq!(tt.trailing, "  ");
    }

    #[test]
    fn casing_examples() {
        assert_eq!(classify_casing("iPod"), CasingPattern::Irregular);
        assert_eq!(classify_casing("McDonald"), CasingPattern::Irregular);
        assert_eq!(classify_casing("64GB"), CasingPattern::Upper);
        assert_eq!(classify_casing("My"), CasingPattern::Title);
        assert_eq!(classify_casing("gb"), CasingPattern::Lower);
        assert_eq!(classify_casing("64"), CasingPattern::NoCase);
        assert_eq!(classify_casing("A"), CasingPattern::Title);
        assert_eq!(classify_casing("Є"), CasingPattern::Title);
        assert_eq!(classify_casing("ЄВРО"), CasingPattern::Upper);
    }

    #[test]
    fn script_examples() {
        assert_eq!(classify_script("миші"), ScriptClass::Cyrillic);
        assert_eq!(classify_script("iPhone"), ScriptClass::Latin);
        assert_eq!(classify_script("Wi-фі"), ScriptClass::Mixed);
        assert_eq!(classify_script("4-5"), ScriptClass::Digit);
        assert_eq!(classify_script("..."), ScriptClass::Other);
        assert_eq!(classify_script("αβγ"), ScriptClass::Other);
    }

    proptest! {
        #[test]
        fn tokenize_round_trip(s in "[^\n\r]{0,40}") {
            let tt = tokenize(&s);
            prop_assert_eq!(detokenize(&tt), s.clone());
            for t in &tt.tokens {
                prop_assert!(!t.body.is_empty());
                prop_assert!(!t.body.contains(char::is_whitespace));
                prop_assert!(t.space.chars().all(char::is_whitespace));
            }
        }

        #[test]
        fn tokenize_round_trip_whitespace_heavy(s in "[ \t\u{a0}\u{2003}a-c]{0,30}") {
            prop_assert_eq!(detokenize(&tokenize(&s)), s);
        }

        #[test]
        fn decode_matches_byte_oracle(raw in proptest::collection::vec(any::<u8>(), 0..64)) {
            let expected: String = brute_force_valid_chars(&raw)
                .chars()
                .filter(|&c| !is_non_printable(c))
                .collect();
            match decode_bytes(&raw) {
                Some(d) => {
                    prop_assert_eq!(d.line.as_str(), expected.as_str());
                    prop_assert_eq!(d.cleaned, expected.len() != raw.len());
                }
                None => prop_assert!(expected.chars().all(char::is_whitespace)),
            }
        }

        #[test]
        fn decode_is_idempotent(raw in proptest::collection::vec(any::<u8>(), 0..64)) {
            if let Some(d) = decode_bytes(&raw) {
                let again = decode_bytes(d.line.as_bytes()).unwrap();
                prop_assert_eq!(again.line, d.line);
                prop_assert!(!again.cleaned);
            }
        }

        #[test]
        fn lowercased_tokens_are_lower_or_nocase(s in "\\PC{0,12}") {
            let p = classify_casing(&s.to_lowercase());
            prop_assert!(matches!(p, CasingPattern::NoCase | CasingPattern::Lower));
        }
    }
}
