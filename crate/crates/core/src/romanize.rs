//! Reversible romanization of Ukrainian Cyrillic into Czech-flavoured Latin.
//!
//! Encoding rules:
//! * every table letter is replaced by its Latin output; an uppercase letter
//!   gets a title-cased output, or a fully uppercased one when it touches
//!   another uppercase Cyrillic letter;
//! * a separator is placed between two outputs whenever greedy longest-match
//!   decoding could otherwise read across their boundary (`ц`+`г` is `c·h`,
//!   not `ch`);
//! * runs of characters the decoder would misread (Latin letters, the
//!   separator, the delimiters, Cyrillic outside the table, anything sharing
//!   a character with an output) are copied verbatim between `latin_open` and
//!   `latin_close`. Inside such a run the separator escapes the next
//!   character.
//!
//! Everything else (digits, punctuation, whitespace) passes through.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use thiserror::Error;
use unicode_script::{Script, UnicodeScript};

use crate::text::is_upper;

pub const DEFAULT_SEPARATOR: char = '\u{00B7}';
pub const DEFAULT_LATIN_OPEN: &str = "\u{27E6}";
pub const DEFAULT_LATIN_CLOSE: &str = "\u{27E7}";

const CZECH_ENTRIES: &[(char, &str)] = &[
    ('а', "a"),
    ('б', "b"),
    ('в', "v"),
    ('г', "h"),
    ('ґ', "g"),
    ('д', "d"),
    ('е', "e"),
    ('є', "je"),
    ('ж', "ž"),
    ('з', "z"),
    ('и', "y"),
    ('і', "i"),
    ('ї', "ji"),
    ('й', "j"),
    ('к', "k"),
    ('л', "l"),
    ('м', "m"),
    ('н', "n"),
    ('о', "o"),
    ('п', "p"),
    ('р', "r"),
    ('с', "s"),
    ('т', "t"),
    ('у', "u"),
    ('ф', "f"),
    ('х', "ch"),
    ('ц', "c"),
    ('ч', "č"),
    ('ш', "š"),
    ('щ', "šč"),
    ('ь', "\u{02BC}"),
    ('ю', "ju"),
    ('я', "ja"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RomanizationMode {
    #[default]
    Czech,
}

impl RomanizationMode {
    pub fn table(self) -> TranslitTable {
        match self {
            RomanizationMode::Czech => default_czech_table(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("line {line}: expected `<cyrillic-char><TAB><latin-string>`")]
    Syntax { line: usize },
    #[error("duplicate entry for {0:?}")]
    DuplicateKey(char),
    #[error("source letter {0:?} must be a single lowercase character")]
    KeyNotLowercase(char),
    #[error("output {0:?} is empty")]
    EmptyOutput(char),
    #[error("outputs of {0:?} and {1:?} are identical")]
    DuplicateOutput(char, char),
    #[error("output {output:?} must be lowercase with single-character case mappings")]
    OutputCase { output: String },
    #[error("output {output:?} contains a reserved separator or delimiter character")]
    ReservedChar { output: String },
    #[error("separator and delimiters must be distinct and non-empty")]
    BadReserved,
    #[error("table is not reversible: {input:?} does not round-trip (got {got:?})")]
    NotReversible { input: String, got: String },
    #[error("reading table: {0}")]
    Io(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DeromanizeError {
    #[error("unbalanced delimiter at byte {0}")]
    UnbalancedDelimiter(usize),
}

/// Cyrillic-to-Latin mapping plus the reserved characters that make it
/// reversible. Immutable once built.
#[derive(Clone)]
pub struct TranslitTable {
    entries: BTreeMap<char, String>,
    separator: char,
    latin_open: String,
    latin_close: String,
    /// letter -> index into `letters`/`outputs`
    index: HashMap<char, usize>,
    letters: Vec<char>,
    outputs: Vec<Vec<char>>,
    /// `needs_sep[a * n + b]`: output a directly followed by output b is ambiguous
    needs_sep: Vec<bool>,
    /// lowercase output string -> letter index
    decode: HashMap<String, usize>,
    max_output_chars: usize,
    output_chars: HashSet<char>,
}

impl fmt::Debug for TranslitTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TranslitTable")
            .field("entries", &self.entries)
            .field("separator", &self.separator)
            .field("latin_open", &self.latin_open)
            .field("latin_close", &self.latin_close)
            .finish()
    }
}

fn single_lower(c: char) -> char {
    let mut it = c.to_lowercase();
    match (it.next(), it.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

fn single_upper(c: char) -> Option<char> {
    let mut it = c.to_uppercase();
    match (it.next(), it.next()) {
        (Some(u), None) => Some(u),
        _ => None,
    }
}

pub fn default_czech_table() -> TranslitTable {
    TranslitTable::new(
        CZECH_ENTRIES.iter().map(|&(c, s)| (c, s.to_string())),
        DEFAULT_SEPARATOR,
        DEFAULT_LATIN_OPEN,
        DEFAULT_LATIN_CLOSE,
    )
    .expect("built-in table is valid")
}

impl TranslitTable {
    pub fn new(
        entries: impl IntoIterator<Item = (char, String)>,
        separator: char,
        latin_open: &str,
        latin_close: &str,
    ) -> Result<Self, TableError> {
        if latin_open.is_empty()
            || latin_close.is_empty()
            || latin_open == latin_close
            || latin_open.contains(separator)
            || latin_close.contains(separator)
        {
            return Err(TableError::BadReserved);
        }
        let mut map = BTreeMap::new();
        for (letter, output) in entries {
            if single_lower(letter) != letter {
                return Err(TableError::KeyNotLowercase(letter));
            }
            if output.is_empty() {
                return Err(TableError::EmptyOutput(letter));
            }
            if map.insert(letter, output).is_some() {
                return Err(TableError::DuplicateKey(letter));
            }
        }

        let reserved: HashSet<char> = latin_open
            .chars()
            .chain(latin_close.chars())
            .chain([separator])
            .collect();
        let letters: Vec<char> = map.keys().copied().collect();
        let mut outputs = Vec::with_capacity(letters.len());
        let mut decode = HashMap::new();
        let mut output_chars = HashSet::new();
        for (i, (&letter, output)) in map.iter().enumerate() {
            for c in output.chars() {
                let case_ok =
                    single_lower(c) == c && single_upper(c).is_some_and(|u| single_lower(u) == c);
                if !case_ok {
                    return Err(TableError::OutputCase {
                        output: output.clone(),
                    });
                }
                if reserved.contains(&c) {
                    return Err(TableError::ReservedChar {
                        output: output.clone(),
                    });
                }
                output_chars.insert(c);
                output_chars.extend(single_upper(c));
            }
            if let Some(&j) = decode.get(output) {
                return Err(TableError::DuplicateOutput(letters[j], letter));
            }
            decode.insert(output.clone(), i);
            outputs.push(output.chars().collect::<Vec<_>>());
        }

        let n = letters.len();
        let mut needs_sep = vec![false; n * n];
        for a in 0..n {
            for b in 0..n {
                needs_sep[a * n + b] = outputs.iter().any(|o| {
                    o.len() > outputs[a].len() && o.starts_with(&outputs[a]) && {
                        let rest = &o[outputs[a].len()..];
                        outputs[b].starts_with(rest) || rest.starts_with(&outputs[b])
                    }
                });
            }
        }

        let table = TranslitTable {
            index: letters.iter().enumerate().map(|(i, &c)| (c, i)).collect(),
            max_output_chars: outputs.iter().map(Vec::len).max().unwrap_or(0),
            entries: map,
            separator,
            latin_open: latin_open.to_string(),
            latin_close: latin_close.to_string(),
            letters,
            outputs,
            needs_sep,
            decode,
            output_chars,
        };
        table.check_pairs()?;
        Ok(table)
    }

    /// Exhaustive round trip over every ordered pair of covered letters in
    /// all case combinations.
    fn check_pairs(&self) -> Result<(), TableError> {
        let forms: Vec<char> = self
            .letters
            .iter()
            .flat_map(|&c| [Some(c), single_upper(c)])
            .flatten()
            .collect();
        let mut input = String::new();
        for &a in &forms {
            for &b in &forms {
                input.clear();
                input.push(a);
                input.push(b);
                let got = self.deromanize(&self.romanize(&input));
                if got.as_deref() != Ok(input.as_str()) {
                    return Err(TableError::NotReversible {
                        input: input.clone(),
                        got: got.unwrap_or_default(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Parses `<cyrillic-char><TAB><latin-string>` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('\t')
                .ok_or(TableError::Syntax { line: i + 1 })?;
            let mut key_chars = key.chars();
            let (Some(letter), None) = (key_chars.next(), key_chars.next()) else {
                return Err(TableError::Syntax { line: i + 1 });
            };
            if value.contains('\t') {
                return Err(TableError::Syntax { line: i + 1 });
            }
            entries.push((letter, value.to_string()));
        }
        Self::new(
            entries,
            DEFAULT_SEPARATOR,
            DEFAULT_LATIN_OPEN,
            DEFAULT_LATIN_CLOSE,
        )
    }

    pub fn load(path: &Path) -> Result<Self, TableError> {
        let text = std::fs::read_to_string(path).map_err(|e| TableError::Io(e.to_string()))?;
        Self::parse(&text)
    }

    /// Serializes the mapping in the table-file format.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push(*k);
            out.push('\t');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn lookup(&self, letter: char) -> Option<&str> {
        self.entries.get(&letter).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<char, String> {
        &self.entries
    }

    pub fn separator(&self) -> char {
        self.separator
    }

    pub fn latin_open(&self) -> &str {
        &self.latin_open
    }

    pub fn latin_close(&self) -> &str {
        &self.latin_close
    }

    fn is_reserved(&self, c: char) -> bool {
        c == self.separator || self.latin_open.contains(c) || self.latin_close.contains(c)
    }

    /// Index of the table letter `c` stands for, and whether it is uppercase.
    /// Uppercase forms whose output starts with an uncased character cannot
    /// carry their case and are therefore not covered.
    fn covered(&self, c: char) -> Option<(usize, bool)> {
        if let Some(&i) = self.index.get(&c) {
            return Some((i, false));
        }
        let lower = single_lower(c);
        let &i = self.index.get(&lower)?;
        let first = self.outputs[i][0];
        (single_upper(lower) == Some(c) && single_upper(first) != Some(first)).then_some((i, true))
    }

    fn needs_escape(&self, c: char) -> bool {
        self.is_reserved(c)
            || self.output_chars.contains(&c)
            || self.output_chars.contains(&single_lower(c))
            || matches!(c.script(), Script::Latin | Script::Cyrillic)
    }

    pub fn romanize(&self, line: &str) -> String {
        let chars: Vec<char> = line.chars().collect();
        let mut out = String::with_capacity(line.len() + line.len() / 2);
        let mut prev_output: Option<usize> = None;
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if let Some((idx, upper)) = self.covered(c) {
                if let Some(p) = prev_output {
                    if self.needs_sep[p * self.letters.len() + idx] {
                        out.push(self.separator);
                    }
                }
                let output = &self.outputs[idx];
                if upper {
                    let neighbour_upper = |j: Option<usize>| {
                        j.and_then(|j| chars.get(j))
                            .is_some_and(|&n| is_upper(n) && n.script() == Script::Cyrillic)
                    };
                    let all_caps =
                        neighbour_upper(i.checked_sub(1)) || neighbour_upper(Some(i + 1));
                    for (k, &oc) in output.iter().enumerate() {
                        if k == 0 || all_caps {
                            out.push(single_upper(oc).unwrap_or(oc));
                        } else {
                            out.push(oc);
                        }
                    }
                } else {
                    out.extend(output.iter());
                }
                prev_output = Some(idx);
                i += 1;
            } else if self.needs_escape(c) {
                out.push_str(&self.latin_open);
                while i < chars.len()
                    && self.covered(chars[i]).is_none()
                    && self.needs_escape(chars[i])
                {
                    if self.is_reserved(chars[i]) {
                        out.push(self.separator);
                    }
                    out.push(chars[i]);
                    i += 1;
                }
                out.push_str(&self.latin_close);
                prev_output = None;
            } else {
                out.push(c);
                prev_output = None;
                i += 1;
            }
        }
        out
    }

    pub fn deromanize(&self, line: &str) -> Result<String, DeromanizeError> {
        let mut out = String::with_capacity(line.len());
        let mut rest = line;
        let mut window: Vec<char> = Vec::with_capacity(self.max_output_chars);
        let mut key = String::new();
        while let Some(c) = rest.chars().next() {
            if let Some(after) = rest.strip_prefix(self.latin_open.as_str()) {
                let start = line.len() - rest.len();
                rest = self
                    .unwrap_run(after, &mut out)
                    .ok_or(DeromanizeError::UnbalancedDelimiter(start))?;
                continue;
            }
            if c == self.separator {
                rest = &rest[c.len_utf8()..];
                continue;
            }
            window.clear();
            window.extend(rest.chars().take(self.max_output_chars));
            let mut matched = None;
            for len in (1..=window.len()).rev() {
                key.clear();
                key.extend(window[..len].iter().map(|&w| single_lower(w)));
                if let Some(&idx) = self.decode.get(&key) {
                    matched = Some((idx, len));
                    break;
                }
            }
            match matched {
                Some((idx, len)) => {
                    let letter = self.letters[idx];
                    if is_upper(window[0]) {
                        out.push(single_upper(letter).unwrap_or(letter));
                    } else {
                        out.push(letter);
                    }
                    let bytes: usize = window[..len].iter().map(|w| w.len_utf8()).sum();
                    rest = &rest[bytes..];
                }
                None => {
                    out.push(c);
                    rest = &rest[c.len_utf8()..];
                }
            }
        }
        Ok(out)
    }

    /// Copies an escaped run into `out`; returns the input after the closing
    /// delimiter, or `None` if the run is not closed.
    fn unwrap_run<'a>(&self, mut rest: &'a str, out: &mut String) -> Option<&'a str> {
        loop {
            if let Some(after) = rest.strip_prefix(self.latin_close.as_str()) {
                return Some(after);
            }
            let mut it = rest.chars();
            let c = it.next()?;
            if c == self.separator {
                let escaped = it.next()?;
                out.push(escaped);
                rest = &rest[c.len_utf8() + escaped.len_utf8()..];
            } else {
                out.push(c);
                rest = &rest[c.len_utf8()..];
            }
        }
    }
}

pub fn romanize(line: &str, table: &TranslitTable) -> String {
    table.romanize(line)
}

pub fn deromanize(line: &str, table: &TranslitTable) -> Result<String, DeromanizeError> {
    table.deromanize(line)
}
