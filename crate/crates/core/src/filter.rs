//! Rule-based cleaning of parallel and monolingual corpora.
//!
//! Parallel pairs go through four steps, first failure wins:
//! printability, language identification of both sides, character length
//! ratio, and the regular-expression / lexicon rules. Corpora listed in
//! `exempt_corpora` skip the language and ratio steps.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io;
use std::path::Path;
use std::sync::Arc;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::langid::LanguageDetector;
use crate::par::map_ordered;
use crate::text::{classify_script, decode_bytes, is_non_printable, ScriptClass};

pub const REASON_EMPTY: &str = "empty";
pub const REASON_MISSING_TAB: &str = "missing-tab";
pub const REASON_NON_PRINTABLE: &str = "non-printable";
pub const REASON_LANGID_SRC: &str = "langid-src";
pub const REASON_LANGID_TGT: &str = "langid-tgt";
pub const REASON_LENGTH_RATIO: &str = "length-ratio";
pub const REASON_MONO_MAXLEN: &str = "mono-maxlen";
pub const REASON_LEXICON: &str = "municipality-lexicon";

pub const DEFAULT_RULES: &str = include_str!("../data/default_rules.toml");
pub const DEFAULT_LEXICON: &str = include_str!("../data/default_lexicon.tsv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// The ratio test applies only when both sides are longer than this.
    pub ratio_min_length_chars: usize,
    /// Ukrainian monolingual lines must be strictly shorter than this.
    pub mono_max_chars_uk: usize,
    /// Czech monolingual lines may be at most this long.
    pub mono_max_chars_cs: usize,
    pub exempt_corpora: BTreeSet<String>,
    pub langid_threshold: f64,
    pub src_lang: String,
    pub tgt_lang: String,
    pub langid: bool,
    pub length_ratio: bool,
    pub rules: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            ratio_min: 0.67,
            ratio_max: 1.5,
            ratio_min_length_chars: 10,
            mono_max_chars_uk: 300,
            mono_max_chars_cs: 1400,
            exempt_corpora: BTreeSet::from(["XLEnt".to_string()]),
            langid_threshold: 0.1,
            src_lang: "cs".to_string(),
            tgt_lang: "uk".to_string(),
            langid: true,
            length_ratio: true,
            rules: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid filter config: {0}")]
    Invalid(String),
    #[error("rule file: {0}")]
    RuleSyntax(String),
    #[error("rule {name:?}: {msg}")]
    Rule { name: String, msg: String },
    #[error("lexicon line {line}: {msg}")]
    Lexicon { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let ok = self.ratio_min > 0.0
            && self.ratio_min <= 1.0
            && self.ratio_max >= 1.0
            && self.ratio_max.is_finite()
            && self.mono_max_chars_uk > 0
            && self.mono_max_chars_cs > 0
            && (0.0..=1.0).contains(&self.langid_threshold);
        if ok {
            Ok(())
        } else {
            Err(ConfigError::Invalid(format!(
                "need 0 < ratio_min <= 1 <= ratio_max, positive lengths, threshold in [0,1]: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRecord {
    pub src: String,
    pub tgt: String,
    pub corpus_tag: String,
}

impl PairRecord {
    pub fn new(
        src: impl Into<String>,
        tgt: impl Into<String>,
        corpus_tag: impl Into<String>,
    ) -> Self {
        PairRecord {
            src: src.into(),
            tgt: tgt.into(),
            corpus_tag: corpus_tag.into(),
        }
    }

    /// `src<TAB>tgt`
    pub fn to_wire(&self) -> String {
        format!("{}\t{}", self.src, self.tgt)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterDecision {
    Kept,
    Rejected(String),
}

impl FilterDecision {
    fn reject(reason: &str) -> Self {
        FilterDecision::Rejected(reason.to_string())
    }

    pub fn is_kept(&self) -> bool {
        matches!(self, FilterDecision::Kept)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Src,
    Tgt,
    Both,
    Asymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleAction {
    RejectIfEitherMatches,
    RejectIfExactlyOneMatches,
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub name: String,
    pub side: Side,
    pub pattern_src: Option<Regex>,
    pub pattern_tgt: Option<Regex>,
    pub action: RuleAction,
}

impl Rule {
    fn fires(&self, src: &str, tgt: &str) -> bool {
        let src_hit = self.pattern_src.as_ref().is_some_and(|r| r.is_match(src));
        let tgt_hit = self.pattern_tgt.as_ref().is_some_and(|r| r.is_match(tgt));
        match self.action {
            RuleAction::RejectIfEitherMatches => src_hit || tgt_hit,
            RuleAction::RejectIfExactlyOneMatches => src_hit != tgt_hit,
        }
    }
}

/// A bilingual term whose translation must appear on the other side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    /// case-folded forms accepted on the source side
    pub cs_forms: Vec<String>,
    /// case-folded forms accepted on the target side
    pub uk_forms: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub lexicon: Vec<LexiconEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    #[serde(default)]
    rule: Vec<RuleSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleSpec {
    name: String,
    side: Side,
    pattern: Option<String>,
    pattern_src: Option<String>,
    pattern_tgt: Option<String>,
    action: RuleAction,
}

fn fixed_reasons() -> [&'static str; 8] {
    [
        REASON_EMPTY,
        REASON_MISSING_TAB,
        REASON_NON_PRINTABLE,
        REASON_LANGID_SRC,
        REASON_LANGID_TGT,
        REASON_LENGTH_RATIO,
        REASON_MONO_MAXLEN,
        REASON_LEXICON,
    ]
}

impl RuleSet {
    /// The shipped e-mail/URL/currency rules and sample municipality lexicon.
    pub fn default_rules() -> Self {
        let mut rules = RuleSet::parse_rules(DEFAULT_RULES).expect("built-in rules compile");
        rules.lexicon = parse_lexicon(DEFAULT_LEXICON).expect("built-in lexicon parses");
        rules
    }

    /// Parses a TOML rule file of `[[rule]]` tables.
    pub fn parse_rules(text: &str) -> Result<Self, ConfigError> {
        let file: RuleFile =
            toml::from_str(text).map_err(|e| ConfigError::RuleSyntax(e.to_string()))?;
        let mut names = HashSet::new();
        let mut rules = Vec::with_capacity(file.rule.len());
        for spec in file.rule {
            let err = |msg: String| ConfigError::Rule {
                name: spec.name.clone(),
                msg,
            };
            if fixed_reasons().contains(&spec.name.as_str()) || !names.insert(spec.name.clone()) {
                return Err(err("rule name is not unique".into()));
            }
            let compile = |p: &Option<String>| -> Result<Option<Regex>, ConfigError> {
                p.as_deref()
                    .map(Regex::new)
                    .transpose()
                    .map_err(|e| err(e.to_string()))
            };
            let (src, tgt) = match spec.side {
                Side::Src | Side::Tgt | Side::Both => {
                    if spec.pattern_src.is_some() || spec.pattern_tgt.is_some() {
                        return Err(err("use `pattern` unless side = \"asymmetric\"".into()));
                    }
                    let p =
                        compile(&spec.pattern)?.ok_or_else(|| err("missing `pattern`".into()))?;
                    match spec.side {
                        Side::Src => (Some(p), None),
                        Side::Tgt => (None, Some(p)),
                        _ => (Some(p.clone()), Some(p)),
                    }
                }
                Side::Asymmetric => {
                    if spec.pattern.is_some() {
                        return Err(err(
                            "asymmetric rules take `pattern_src` / `pattern_tgt`".into()
                        ));
                    }
                    let (s, t) = (compile(&spec.pattern_src)?, compile(&spec.pattern_tgt)?);
                    if s.is_none() && t.is_none() {
                        return Err(err("asymmetric rule without patterns".into()));
                    }
                    (s, t)
                }
            };
            if spec.action == RuleAction::RejectIfExactlyOneMatches
                && matches!(spec.side, Side::Src | Side::Tgt)
            {
                return Err(err("reject-if-exactly-one-matches needs both sides".into()));
            }
            rules.push(Rule {
                name: spec.name,
                side: spec.side,
                pattern_src: src,
                pattern_tgt: tgt,
                action: spec.action,
            });
        }
        Ok(RuleSet {
            rules,
            lexicon: Vec::new(),
        })
    }

    pub fn load(rules: Option<&Path>, lexicon: Option<&Path>) -> Result<Self, ConfigError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        let mut set = match rules {
            Some(p) => RuleSet::parse_rules(&read(p)?)?,
            None => RuleSet::default(),
        };
        if let Some(p) = lexicon {
            set.lexicon = parse_lexicon(&read(p)?)?;
        }
        Ok(set)
    }

    /// Every reason this rule set can report, fixed steps included.
    pub fn reasons(&self) -> Vec<String> {
        fixed_reasons()
            .iter()
            .map(|s| s.to_string())
            .chain(self.rules.iter().map(|r| r.name.clone()))
            .collect()
    }
}

/// Parses `cs_term<TAB>uk_term[<TAB>form,form,...]`. Extra forms are
/// assigned to a side by their script.
pub fn parse_lexicon(text: &str) -> Result<Vec<LexiconEntry>, ConfigError> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let err = |msg: &str| ConfigError::Lexicon {
            line: i + 1,
            msg: msg.to_string(),
        };
        let mut fields = line.split('\t');
        let (Some(cs), Some(uk)) = (fields.next(), fields.next()) else {
            return Err(err("expected `cs_term<TAB>uk_term[<TAB>forms]`"));
        };
        if cs.trim().is_empty() || uk.trim().is_empty() {
            return Err(err("empty term"));
        }
        let mut entry = LexiconEntry {
            cs_forms: vec![cs.trim().to_lowercase()],
            uk_forms: vec![uk.trim().to_lowercase()],
        };
        if let Some(forms) = fields.next() {
            for form in forms.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                match classify_script(form) {
                    ScriptClass::Latin => entry.cs_forms.push(form.to_lowercase()),
                    ScriptClass::Cyrillic => entry.uk_forms.push(form.to_lowercase()),
                    _ => return Err(err(&format!("cannot tell the language of form {form:?}"))),
                }
            }
        }
        if fields.next().is_some() {
            return Err(err("too many fields"));
        }
        entries.push(entry);
    }
    Ok(entries)
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

pub fn length_ratio_ok(src: &str, tgt: &str, cfg: &FilterConfig) -> bool {
    let (s, t) = (char_len(src), char_len(tgt));
    if s.min(t) <= cfg.ratio_min_length_chars {
        return true;
    }
    let ratio = s as f64 / t as f64;
    cfg.ratio_min <= ratio && ratio <= cfg.ratio_max
}

pub fn check_rules(pair: &PairRecord, rules: &RuleSet) -> FilterDecision {
    for rule in &rules.rules {
        if rule.fires(&pair.src, &pair.tgt) {
            return FilterDecision::Rejected(rule.name.clone());
        }
    }
    if !rules.lexicon.is_empty() {
        let src = pair.src.to_lowercase();
        let tgt = pair.tgt.to_lowercase();
        for entry in &rules.lexicon {
            let cs_hit = entry.cs_forms.iter().any(|f| src.contains(f.as_str()));
            let uk_hit = entry.uk_forms.iter().any(|f| tgt.contains(f.as_str()));
            if cs_hit != uk_hit {
                return FilterDecision::reject(REASON_LEXICON);
            }
        }
    }
    FilterDecision::Kept
}

fn printable_check(side: &str) -> Option<&'static str> {
    if side.chars().all(char::is_whitespace) {
        Some(REASON_EMPTY)
    } else if side.chars().any(is_non_printable) {
        Some(REASON_NON_PRINTABLE)
    } else {
        None
    }
}

fn langid_ok(detector: &dyn LanguageDetector, text: &str, lang: &str, threshold: f64) -> bool {
    detector
        .detect(text)
        .is_ok_and(|d| d.language == lang && d.confidence >= threshold)
}

pub fn filter_pair(
    pair: &PairRecord,
    cfg: &FilterConfig,
    detector: Option<&dyn LanguageDetector>,
    rules: &RuleSet,
) -> FilterDecision {
    if let Some(reason) = printable_check(&pair.src).or_else(|| printable_check(&pair.tgt)) {
        return FilterDecision::reject(reason);
    }
    let exempt = cfg.exempt_corpora.contains(&pair.corpus_tag);
    if !exempt && cfg.langid {
        if let Some(det) = detector {
            if !langid_ok(det, &pair.src, &cfg.src_lang, cfg.langid_threshold) {
                return FilterDecision::reject(REASON_LANGID_SRC);
            }
            if !langid_ok(det, &pair.tgt, &cfg.tgt_lang, cfg.langid_threshold) {
                return FilterDecision::reject(REASON_LANGID_TGT);
            }
        }
    }
    if !exempt && cfg.length_ratio && !length_ratio_ok(&pair.src, &pair.tgt, cfg) {
        return FilterDecision::reject(REASON_LENGTH_RATIO);
    }
    if cfg.rules {
        return check_rules(pair, rules);
    }
    FilterDecision::Kept
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonoLang {
    Cs,
    Uk,
}

pub fn filter_mono(line: &str, lang: MonoLang, cfg: &FilterConfig) -> FilterDecision {
    if let Some(reason) = printable_check(line) {
        return FilterDecision::reject(reason);
    }
    let len = char_len(line);
    let ok = match lang {
        MonoLang::Uk => len < cfg.mono_max_chars_uk,
        MonoLang::Cs => len <= cfg.mono_max_chars_cs,
    };
    if ok {
        FilterDecision::Kept
    } else {
        FilterDecision::reject(REASON_MONO_MAXLEN)
    }
}

/// Before/after accounting for one filtering run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FilterStats {
    pub total: u64,
    pub kept: u64,
    /// kept or rejected records from which characters were removed at ingestion
    pub cleaned: u64,
    pub rejected: BTreeMap<String, u64>,
}

impl FilterStats {
    pub fn record(&mut self, decision: &FilterDecision) {
        self.total += 1;
        match decision {
            FilterDecision::Kept => self.kept += 1,
            FilterDecision::Rejected(reason) => {
                *self.rejected.entry(reason.clone()).or_default() += 1
            }
        }
    }

    pub fn rejected_total(&self) -> u64 {
        self.rejected.values().sum()
    }

    pub fn merge(&mut self, other: &FilterStats) {
        self.total += other.total;
        self.kept += other.kept;
        self.cleaned += other.cleaned;
        for (k, v) in &other.rejected {
            *self.rejected.entry(k.clone()).or_default() += v;
        }
    }
}

/// Outcome of ingesting one raw bitext line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ingested {
    pub record: Option<PairRecord>,
    pub decision: FilterDecision,
    pub cleaned: bool,
}

/// Splits `src<TAB>tgt` and sanitizes both sides. Tabs beyond the first
/// are removed as non-printable.
pub fn ingest_pair(raw: &[u8], corpus_tag: &str) -> Result<(PairRecord, bool), &'static str> {
    let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
    let Some(tab) = raw.iter().position(|&b| b == b'\t') else {
        return Err(REASON_MISSING_TAB);
    };
    let src = decode_bytes(&raw[..tab]).ok_or(REASON_EMPTY)?;
    let tgt = decode_bytes(&raw[tab + 1..]).ok_or(REASON_EMPTY)?;
    Ok((
        PairRecord::new(src.line.into_string(), tgt.line.into_string(), corpus_tag),
        src.cleaned || tgt.cleaned,
    ))
}

/// Everything needed to decide a pair; cheap to share across workers.
#[derive(Clone)]
pub struct PairFilter {
    pub cfg: FilterConfig,
    pub detector: Option<Arc<dyn LanguageDetector>>,
    pub rules: RuleSet,
}

impl PairFilter {
    pub fn new(
        cfg: FilterConfig,
        detector: Option<Arc<dyn LanguageDetector>>,
        rules: RuleSet,
    ) -> Self {
        PairFilter {
            cfg,
            detector,
            rules,
        }
    }

    pub fn decide(&self, pair: &PairRecord) -> FilterDecision {
        filter_pair(pair, &self.cfg, self.detector.as_deref(), &self.rules)
    }

    pub fn ingest_and_decide(&self, raw: &[u8], corpus_tag: &str) -> Ingested {
        match ingest_pair(raw, corpus_tag) {
            Ok((record, cleaned)) => {
                let decision = self.decide(&record);
                Ingested {
                    record: Some(record),
                    decision,
                    cleaned,
                }
            }
            Err(reason) => Ingested {
                record: None,
                decision: FilterDecision::reject(reason),
                cleaned: false,
            },
        }
    }
}

#[derive(Debug, Error)]
#[error("record {record}: {source}")]
pub struct PipelineError {
    pub record: u64,
    #[source]
    pub source: io::Error,
}

/// Filters a raw bitext stream. Kept pairs reach `sink` in input order
/// whatever the worker count.
pub fn run_pipeline<I, S>(
    input: I,
    corpus_tag: &str,
    filter: &PairFilter,
    workers: usize,
    mut sink: S,
) -> Result<FilterStats, PipelineError>
where
    I: IntoIterator<Item = io::Result<Vec<u8>>>,
    S: FnMut(&PairRecord) -> io::Result<()>,
{
    let mut stats = FilterStats::default();
    let mut index = 0u64;
    let result = map_ordered(
        input.into_iter().enumerate().map(|(i, r)| {
            r.map_err(|source| PipelineError {
                record: i as u64,
                source,
            })
        }),
        workers,
        |_, raw: Vec<u8>| filter.ingest_and_decide(&raw, corpus_tag),
        |ingested| {
            let i = index;
            index += 1;
            stats.record(&ingested.decision);
            if ingested.cleaned {
                stats.cleaned += 1;
            }
            if let (FilterDecision::Kept, Some(rec)) = (&ingested.decision, &ingested.record) {
                sink(rec).map_err(|source| PipelineError { record: i, source })?;
            }
            Ok(())
        },
    );
    result.map(|()| stats)
}

/// In-memory variant over already-decoded records.
pub fn filter_records<'a>(
    records: impl IntoIterator<Item = &'a PairRecord>,
    filter: &PairFilter,
) -> (Vec<PairRecord>, FilterStats) {
    let mut stats = FilterStats::default();
    let mut kept = Vec::new();
    for rec in records {
        let d = filter.decide(rec);
        stats.record(&d);
        if d.is_kept() {
            kept.push(rec.clone());
        }
    }
    (kept, stats)
}

/// Filters a raw monolingual stream.
pub fn run_mono_pipeline<I, S>(
    input: I,
    lang: MonoLang,
    cfg: &FilterConfig,
    workers: usize,
    mut sink: S,
) -> Result<FilterStats, PipelineError>
where
    I: IntoIterator<Item = io::Result<Vec<u8>>>,
    S: FnMut(&str) -> io::Result<()>,
{
    let mut stats = FilterStats::default();
    let mut index = 0u64;
    map_ordered(
        input.into_iter().enumerate().map(|(i, r)| {
            r.map_err(|source| PipelineError {
                record: i as u64,
                source,
            })
        }),
        workers,
        |_, raw: Vec<u8>| match decode_bytes(&raw) {
            Some(d) => {
                let decision = filter_mono(d.line.as_str(), lang, cfg);
                (Some(d.line.into_string()), decision, d.cleaned)
            }
            None => (None, FilterDecision::reject(REASON_EMPTY), false),
        },
        |(line, decision, cleaned)| {
            let i = index;
            index += 1;
            stats.record(&decision);
            stats.cleaned += u64::from(cleaned);
            if let (FilterDecision::Kept, Some(line)) = (&decision, &line) {
                sink(line).map_err(|source| PipelineError { record: i, source })?;
            }
            Ok(())
        },
    )?;
    Ok(stats)
}
