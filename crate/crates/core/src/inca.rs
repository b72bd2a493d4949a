//! Inline casing: lowercase every token and prefix a casing tag only where
//! the token's case differs from the most frequent variant recorded for it.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::Serialize;
use thiserror::Error;

use crate::text::{classify_casing, is_upper, tokenize, CasingPattern};

pub const TITLE: &str = "<titlecase>";
pub const UPPER: &str = "<all-uppercase>";
pub const LOWER: &str = "<all-lowercase>";
/// Marks the next token as literal text.
pub const ESC: &str = "<inca-esc>";

pub const DEFAULT_MIN_COUNT: u64 = 2;

#[derive(Debug, Error)]
pub enum IncaError {
    #[error("casing tag {tag} at end of line")]
    DanglingTag { tag: &'static str },
    #[error("vocabulary line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VocabEntry {
    pub variant: String,
    pub count: u64,
}

/// Most frequent casing variant per lowercased word. Words whose most
/// frequent form is plain lowercase are not stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CasingVocabulary {
    entries: BTreeMap<String, VocabEntry>,
    pub min_count: u64,
    pub source: Option<String>,
}

impl CasingVocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry keyed by its lowercase form. Lowercase variants are ignored.
    pub fn insert(&mut self, variant: &str, count: u64) {
        let key = variant.to_lowercase();
        if key != variant {
            self.entries.insert(
                key,
                VocabEntry {
                    variant: variant.to_string(),
                    count,
                },
            );
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.variant.as_str())
    }

    pub fn entry(&self, key: &str) -> Option<&VocabEntry> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &VocabEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Writes `<variant><TAB><count>` lines sorted by key, preceded by
    /// `#` metadata comments.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "# min_count={}", self.min_count)?;
        if let Some(src) = &self.source {
            writeln!(w, "# source={src}")?;
        }
        for entry in self.entries.values() {
            writeln!(w, "{}\t{}", entry.variant, entry.count)?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self, IncaError> {
        let mut vocab = CasingVocabulary::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.trim().split_once('=') {
                    match k {
                        "min_count" => vocab.min_count = v.parse().unwrap_or(0),
                        "source" => vocab.source = Some(v.to_string()),
                        _ => {}
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| IncaError::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            let (variant, count) = line
                .split_once('\t')
                .ok_or_else(|| err("expected `<variant><TAB><count>`"))?;
            let count: u64 = count.parse().map_err(|_| err("count is not an integer"))?;
            if variant.is_empty() || variant.contains(char::is_whitespace) {
                return Err(err("variant must be a single non-empty token"));
            }
            if variant.to_lowercase() == variant {
                return Err(err("variant is already lowercase"));
            }
            vocab.insert(variant, count);
        }
        Ok(vocab)
    }
}

/// Raw per-word casing counts. Counters built on shards can be merged;
/// [`VocabCounter::finish`] picks the winners.
#[derive(Debug, Clone, Default)]
pub struct VocabCounter {
    counts: HashMap<String, HashMap<String, u64>>,
}

impl VocabCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_line(&mut self, line: &str) {
        for token in tokenize(line).tokens {
            if classify_casing(token.body) == CasingPattern::NoCase {
                continue;
            }
            let key = token.body.to_lowercase();
            *self
                .counts
                .entry(key)
                .or_default()
                .entry(token.body.to_string())
                .or_default() += 1;
        }
    }

    pub fn merge(&mut self, other: VocabCounter) {
        for (key, variants) in other.counts {
            let slot = self.counts.entry(key).or_default();
            for (variant, n) in variants {
                *slot.entry(variant).or_default() += n;
            }
        }
    }

    /// Selects the most frequent variant for every word. Ties prefer the
    /// lowercase form, then the lexicographically smallest variant. A word
    /// is kept only if its winning variant occurs at least `min_count` times.
    pub fn finish(self, min_count: u64) -> CasingVocabulary {
        let mut vocab = CasingVocabulary {
            min_count,
            ..Default::default()
        };
        for (key, variants) in self.counts {
            let best = variants.iter().max_by(|(va, na), (vb, nb)| {
                na.cmp(nb)
                    .then_with(|| (*va == &key).cmp(&(*vb == &key)))
                    .then_with(|| vb.cmp(va))
            });
            if let Some((variant, &count)) = best {
                if count >= min_count && *variant != key {
                    vocab.entries.insert(
                        key,
                        VocabEntry {
                            variant: variant.clone(),
                            count,
                        },
                    );
                }
            }
        }
        vocab
    }
}

pub fn train_vocab<I, S>(corpus: I, min_count: u64) -> CasingVocabulary
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counter = VocabCounter::new();
    for line in corpus {
        counter.add_line(line.as_ref());
    }
    counter.finish(min_count)
}

fn tag_str(pattern: CasingPattern) -> Option<&'static str> {
    match pattern {
        CasingPattern::Title => Some(TITLE),
        CasingPattern::Upper => Some(UPPER),
        CasingPattern::Lower => Some(LOWER),
        _ => None,
    }
}

fn tag_pattern(token: &str) -> Option<CasingPattern> {
    match token {
        TITLE => Some(CasingPattern::Title),
        UPPER => Some(CasingPattern::Upper),
        LOWER => Some(CasingPattern::Lower),
        _ => None,
    }
}

fn is_reserved(token: &str) -> bool {
    tag_pattern(token).is_some() || token == ESC
}

fn apply_pattern(pattern: CasingPattern, lower: &str) -> String {
    match pattern {
        CasingPattern::Upper => lower.to_uppercase(),
        CasingPattern::Title => {
            let mut out = String::with_capacity(lower.len());
            let mut done = false;
            for c in lower.chars() {
                if !done && crate::text::is_cased(c) {
                    out.extend(c.to_uppercase());
                    done = true;
                } else {
                    out.push(c);
                }
            }
            out
        }
        _ => lower.to_string(),
    }
}

fn decode_untagged<'a>(token: &'a str, vocab: &'a CasingVocabulary) -> &'a str {
    if token.chars().any(is_upper) {
        token
    } else {
        vocab.get(token).unwrap_or(token)
    }
}

/// Encoded form of a single token: an optional tag and the emitted body.
fn encode_token<'a>(
    body: &'a str,
    vocab: &CasingVocabulary,
) -> (Option<&'static str>, std::borrow::Cow<'a, str>) {
    use std::borrow::Cow;
    let verbatim = || (Some(ESC), Cow::Borrowed(body));
    if is_reserved(body) {
        return verbatim();
    }
    let pattern = classify_casing(body);
    let lower = body.to_lowercase();
    let mfv = vocab.get(&lower).unwrap_or(&lower);
    let (tag, emitted) = if body == mfv {
        (None, Cow::Owned(lower.clone()))
    } else {
        match tag_str(pattern) {
            Some(tag) => (Some(tag), Cow::Owned(lower.clone())),
            None => (None, Cow::Borrowed(body)),
        }
    };
    // Fall back to an escaped literal whenever decoding would not give the
    // token back (special case mappings, tag look-alikes).
    let decoded_ok = match tag {
        Some(t) => {
            !is_reserved(&emitted) && apply_pattern(tag_pattern(t).unwrap(), &emitted) == body
        }
        None => !is_reserved(&emitted) && decode_untagged(&emitted, vocab) == body,
    };
    if decoded_ok {
        (tag, emitted)
    } else {
        verbatim()
    }
}

pub fn encode(line: &str, vocab: &CasingVocabulary) -> String {
    let tt = tokenize(line);
    let mut out = String::with_capacity(line.len() + line.len() / 4);
    for token in &tt.tokens {
        out.push_str(token.space);
        let (tag, body) = encode_token(token.body, vocab);
        if let Some(tag) = tag {
            out.push_str(tag);
            out.push(' ');
        }
        out.push_str(&body);
    }
    out.push_str(tt.trailing);
    out
}

/// Number of casing tags (excluding escapes) `encode` would emit for `line`.
pub fn count_tags(line: &str, vocab: &CasingVocabulary) -> usize {
    tokenize(line)
        .tokens
        .iter()
        .filter(|t| matches!(encode_token(t.body, vocab).0, Some(tag) if tag != ESC))
        .count()
}

pub fn decode(line: &str, vocab: &CasingVocabulary) -> Result<String, IncaError> {
    let tt = tokenize(line);
    let mut out = String::with_capacity(line.len());
    let mut tokens = tt.tokens.iter();
    while let Some(token) = tokens.next() {
        out.push_str(token.space);
        let pattern = tag_pattern(token.body);
        if pattern.is_some() || token.body == ESC {
            let tag: &'static str = match pattern {
                Some(CasingPattern::Title) => TITLE,
                Some(CasingPattern::Upper) => UPPER,
                Some(_) => LOWER,
                None => ESC,
            };
            let next = tokens.next().ok_or(IncaError::DanglingTag { tag })?;
            match pattern {
                Some(p) => out.push_str(&apply_pattern(p, next.body)),
                None => out.push_str(next.body),
            }
        } else {
            out.push_str(decode_untagged(token.body, vocab));
        }
    }
    out.push_str(tt.trailing);
    Ok(out)
}
