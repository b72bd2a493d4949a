//! Character n-gram language identification using rank-order profiles and
//! the out-of-place distance, with a script gate in front of it.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::text::ScriptClass;

pub const DEFAULT_PROFILE_SIZE: usize = 3000;
const MAX_N: usize = 3;
const PAD: char = '_';
const MODEL_MAGIC: &str = "#langid-ngram v1";

#[derive(Debug, Error)]
pub enum LangIdError {
    #[error("language {0:?} has no usable sample text")]
    EmptySample(String),
    #[error("a model needs at least two languages")]
    TooFewLanguages,
    #[error("line contains no letters")]
    Indeterminate,
    #[error("model file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub language: String,
    pub confidence: f64,
}

/// Anything that can label a line with a language.
pub trait LanguageDetector: Send + Sync {
    fn detect(&self, line: &str) -> Result<Detection, LangIdError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LangProfile {
    pub language: String,
    /// Dominant script of the training text; used to gate candidates.
    pub script: ScriptClass,
    /// n-grams ordered by rank (index = rank)
    pub ngrams: Vec<String>,
    ranks: HashMap<String, usize>,
}

impl LangProfile {
    fn new(language: String, script: ScriptClass, ngrams: Vec<String>) -> Self {
        let ranks = ngrams
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i))
            .collect();
        LangProfile {
            language,
            script,
            ngrams,
            ranks,
        }
    }

    pub fn rank(&self, ngram: &str) -> Option<usize> {
        self.ranks.get(ngram).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LangIdModel {
    pub profiles: Vec<LangProfile>,
    pub profile_size: usize,
}

/// Counts padded character n-grams (n = 1..=3) of the lowercased words
/// of `text`. Words are maximal runs of alphabetic characters.
pub fn count_ngrams(text: &str, counts: &mut HashMap<String, u64>) {
    let mut word: Vec<char> = Vec::with_capacity(32);
    let mut flush = |word: &mut Vec<char>| {
        if word.is_empty() {
            return;
        }
        let padded: Vec<char> = std::iter::once(PAD)
            .chain(word.drain(..))
            .chain(std::iter::once(PAD))
            .collect();
        let mut gram = String::with_capacity(12);
        for n in 1..=MAX_N {
            for w in padded.windows(n) {
                if n == 1 && w[0] == PAD {
                    continue;
                }
                gram.clear();
                gram.extend(w);
                if let Some(c) = counts.get_mut(gram.as_str()) {
                    *c += 1;
                } else {
                    counts.insert(gram.clone(), 1);
                }
            }
        }
    };
    for c in text.chars() {
        if c.is_alphabetic() {
            word.extend(c.to_lowercase());
        } else {
            flush(&mut word);
        }
    }
    flush(&mut word);
}

/// Orders n-grams by descending count, ties lexicographically, and keeps `k`.
fn rank_ngrams(counts: HashMap<String, u64>, k: usize) -> Vec<String> {
    let mut all: Vec<(String, u64)> = counts.into_iter().collect();
    all.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all.into_iter().map(|(g, _)| g).collect()
}

/// Latin or Cyrillic, whichever has more letters; `Other` if neither has any.
pub fn dominant_script(text: &str) -> ScriptClass {
    let (mut latin, mut cyrillic) = (0usize, 0usize);
    for c in text.chars() {
        if crate::text::is_latin_letter(c) {
            latin += 1;
        } else if crate::text::is_cyrillic_letter(c) {
            cyrillic += 1;
        }
    }
    match latin.cmp(&cyrillic) {
        std::cmp::Ordering::Greater => ScriptClass::Latin,
        std::cmp::Ordering::Less => ScriptClass::Cyrillic,
        std::cmp::Ordering::Equal if latin == 0 => ScriptClass::Other,
        std::cmp::Ordering::Equal => ScriptClass::Mixed,
    }
}

pub fn train_langid<L, I, S>(samples: L, profile_size: usize) -> Result<LangIdModel, LangIdError>
where
    L: IntoIterator<Item = (String, I)>,
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut profiles = Vec::new();
    for (language, lines) in samples {
        let mut counts = HashMap::new();
        let (mut latin, mut cyrillic) = (0usize, 0usize);
        for line in lines {
            let line = line.as_ref();
            count_ngrams(line, &mut counts);
            match dominant_script(line) {
                ScriptClass::Latin => latin += 1,
                ScriptClass::Cyrillic => cyrillic += 1,
                _ => {}
            }
        }
        if counts.is_empty() {
            return Err(LangIdError::EmptySample(language));
        }
        let script = match latin.cmp(&cyrillic) {
            std::cmp::Ordering::Greater => ScriptClass::Latin,
            std::cmp::Ordering::Less => ScriptClass::Cyrillic,
            std::cmp::Ordering::Equal => ScriptClass::Other,
        };
        profiles.push(LangProfile::new(
            language,
            script,
            rank_ngrams(counts, profile_size),
        ));
    }
    if profiles.len() < 2 {
        return Err(LangIdError::TooFewLanguages);
    }
    profiles.sort_by(|a, b| a.language.cmp(&b.language));
    Ok(LangIdModel {
        profiles,
        profile_size,
    })
}

impl LangIdModel {
    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.profiles.iter().map(|p| p.language.as_str())
    }

    /// Candidate languages for a line given its dominant script. Falls back
    /// to every language when no profile shares the script.
    pub fn candidates(&self, script: ScriptClass) -> Vec<&LangProfile> {
        let gated: Vec<&LangProfile> = self
            .profiles
            .iter()
            .filter(|p| p.script == script)
            .collect();
        if gated.is_empty() {
            self.profiles.iter().collect()
        } else {
            gated
        }
    }

    /// Out-of-place distance between the line's ranked n-grams and a profile.
    pub fn distance(&self, line_ngrams: &[String], profile: &LangProfile) -> u64 {
        line_ngrams
            .iter()
            .enumerate()
            .map(|(rank, g)| match profile.rank(g) {
                Some(r) => rank.abs_diff(r) as u64,
                None => self.profile_size as u64,
            })
            .sum()
    }

    pub fn detect(&self, line: &str) -> Result<Detection, LangIdError> {
        let mut counts = HashMap::new();
        count_ngrams(line, &mut counts);
        if counts.is_empty() {
            return Err(LangIdError::Indeterminate);
        }
        let grams = rank_ngrams(counts, self.profile_size);
        let candidates = self.candidates(dominant_script(line));
        if let [only] = candidates.as_slice() {
            return Ok(Detection {
                language: only.language.clone(),
                confidence: 1.0,
            });
        }
        // ties go to the earlier (alphabetical) language
        let mut scored: Vec<(u64, &str)> = candidates
            .iter()
            .map(|p| (self.distance(&grams, p), p.language.as_str()))
            .collect();
        scored.sort();
        let (best, lang) = scored[0];
        let second = scored[1].0;
        let confidence = if second == 0 {
            0.0
        } else {
            (second - best) as f64 / second as f64
        };
        Ok(Detection {
            language: lang.to_string(),
            confidence,
        })
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{MODEL_MAGIC}")?;
        writeln!(w, "K\t{}", self.profile_size)?;
        let langs: Vec<&str> = self.languages().collect();
        writeln!(w, "languages\t{}", langs.join("\t"))?;
        for p in &self.profiles {
            writeln!(
                w,
                "[{}]\t{}\t{}",
                p.language,
                script_name(p.script),
                p.ngrams.len()
            )?;
            for g in &p.ngrams {
                writeln!(w, "{g}")?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self, LangIdError> {
        let mut lines = r.lines().enumerate();
        let mut next = |expect: &str| -> Result<(usize, String), LangIdError> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l?)),
                None => Err(LangIdError::Format {
                    line: 0,
                    msg: format!("unexpected end of file, expected {expect}"),
                }),
            }
        };
        let fmt_err = |line: usize, msg: &str| LangIdError::Format {
            line,
            msg: msg.to_string(),
        };
        let (i, magic) = next("header")?;
        if magic != MODEL_MAGIC {
            return Err(fmt_err(i, "not a langid model (bad header)"));
        }
        let (i, k_line) = next("K")?;
        let profile_size: usize = k_line
            .strip_prefix("K\t")
            .and_then(|k| k.parse().ok())
            .ok_or_else(|| fmt_err(i, "expected `K<TAB><size>`"))?;
        let (i, lang_line) = next("languages")?;
        let languages: Vec<String> = lang_line
            .strip_prefix("languages\t")
            .ok_or_else(|| fmt_err(i, "expected `languages<TAB>...`"))?
            .split('\t')
            .map(str::to_string)
            .collect();
        let mut profiles = BTreeMap::new();
        for _ in 0..languages.len() {
            let (i, head) = next("profile header")?;
            let mut parts = head.split('\t');
            let lang = parts
                .next()
                .and_then(|l| l.strip_prefix('[')?.strip_suffix(']'))
                .ok_or_else(|| fmt_err(i, "expected `[lang]<TAB>script<TAB>count`"))?
                .to_string();
            let script = parts
                .next()
                .and_then(parse_script)
                .ok_or_else(|| fmt_err(i, "unknown script"))?;
            let count: usize = parts
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| fmt_err(i, "bad n-gram count"))?;
            if count > profile_size {
                return Err(fmt_err(i, "profile longer than K"));
            }
            let mut ngrams = Vec::with_capacity(count);
            for _ in 0..count {
                ngrams.push(next("n-gram")?.1);
            }
            profiles.insert(lang.clone(), LangProfile::new(lang, script, ngrams));
        }
        let profiles: Vec<LangProfile> = profiles.into_values().collect();
        if profiles.len() < 2 {
            return Err(LangIdError::TooFewLanguages);
        }
        Ok(LangIdModel {
            profiles,
            profile_size,
        })
    }
}

impl LanguageDetector for LangIdModel {
    fn detect(&self, line: &str) -> Result<Detection, LangIdError> {
        LangIdModel::detect(self, line)
    }
}

fn script_name(s: ScriptClass) -> &'static str {
    match s {
        ScriptClass::Latin => "Latin",
        ScriptClass::Cyrillic => "Cyrillic",
        ScriptClass::Digit => "Digit",
        ScriptClass::Mixed => "Mixed",
        ScriptClass::Other => "Other",
    }
}

fn parse_script(s: &str) -> Option<ScriptClass> {
    Some(match s {
        "Latin" => ScriptClass::Latin,
        "Cyrillic" => ScriptClass::Cyrillic,
        "Digit" => ScriptClass::Digit,
        "Mixed" => ScriptClass::Mixed,
        "Other" => ScriptClass::Other,
        _ => return None,
    })
}
