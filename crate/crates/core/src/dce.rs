//! Dual cross-entropy scoring and bounded-memory top-N selection of
//! synthetic sentence pairs.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::io::BufRead;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub id: String,
    /// per-token forward cross-entropy (nats/token)
    pub fwd_xent: f64,
    /// per-token backward cross-entropy (nats/token)
    pub bwd_xent: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum DceError {
    #[error("cross-entropy must be finite and non-negative (got {fwd}, {bwd})")]
    InvalidScore { fwd: f64, bwd: f64 },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: expected `id<TAB>fwd_xent<TAB>bwd_xent`")]
    Syntax { line: usize },
    #[error("{0}")]
    Config(String),
    #[error("reading scores: {0}")]
    Io(String),
}

/// `|fwd - bwd| + (fwd + bwd) / 2`; lower is better.
pub fn dce_score(fwd: f64, bwd: f64) -> Result<f64, DceError> {
    if !(fwd.is_finite() && bwd.is_finite() && fwd >= 0.0 && bwd >= 0.0) {
        return Err(DceError::InvalidScore { fwd, bwd });
    }
    Ok((fwd - bwd).abs() + 0.5 * (fwd + bwd))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DceConfig {
    TopN(usize),
    /// Keep `ratio × authentic_count` records, rounded to nearest.
    Ratio {
        ratio: f64,
        authentic_count: u64,
    },
}

impl DceConfig {
    pub fn target(&self) -> Result<usize, DceError> {
        match *self {
            DceConfig::TopN(0) => Err(DceError::Config("top-n must be positive".into())),
            DceConfig::TopN(n) => Ok(n),
            DceConfig::Ratio {
                ratio,
                authentic_count,
            } => {
                if !(ratio.is_finite() && ratio > 0.0) || authentic_count == 0 {
                    return Err(DceError::Config(
                        "ratio and authentic count must be positive".into(),
                    ));
                }
                Ok((ratio * authentic_count as f64).round() as usize)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selected {
    /// zero-based position among all input records
    pub index: u64,
    pub id: String,
    pub score: f64,
}

struct Ranked(Selected);

impl Ranked {
    fn key(&self) -> (f64, u64) {
        (self.0.score, self.0.index)
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
    }
}

/// Streaming selector holding at most `n` records. Among equal scores the
/// earlier record wins.
pub struct Selector {
    n: usize,
    heap: BinaryHeap<Ranked>,
    seen: u64,
    invalid: u64,
}

impl Selector {
    pub fn new(n: usize) -> Self {
        Selector {
            n,
            heap: BinaryHeap::with_capacity(n.min(1 << 20) + 1),
            seen: 0,
            invalid: 0,
        }
    }

    /// Offers the next record. Records with invalid entropies are counted
    /// and skipped; they still consume an index.
    pub fn push(&mut self, record: ScoredPair) {
        let index = self.seen;
        self.seen += 1;
        let Ok(score) = dce_score(record.fwd_xent, record.bwd_xent) else {
            self.invalid += 1;
            return;
        };
        if self.n == 0 {
            return;
        }
        let candidate = Ranked(Selected {
            index,
            id: record.id,
            score,
        });
        if self.heap.len() < self.n {
            self.heap.push(candidate);
        } else if let Some(mut worst) = self.heap.peek_mut() {
            if candidate < *worst {
                *worst = candidate;
            }
        }
    }

    pub fn finish(self) -> Selection {
        let mut kept: Vec<Selected> = self.heap.into_iter().map(|r| r.0).collect();
        kept.sort_by_key(|s| s.index);
        let valid = self.seen - self.invalid;
        Selection {
            requested: self.n,
            total: self.seen,
            invalid: self.invalid,
            short_by: (self.n as u64).saturating_sub(valid),
            kept,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub requested: usize,
    pub total: u64,
    pub invalid: u64,
    /// How many fewer valid records there were than requested (0 if enough).
    pub short_by: u64,
    /// Selected records in input order.
    pub kept: Vec<Selected>,
}

impl Selection {
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.kept.iter().map(|s| s.id.as_str())
    }
}

pub fn select(
    records: impl IntoIterator<Item = ScoredPair>,
    cfg: &DceConfig,
) -> Result<Selection, DceError> {
    let mut selector = Selector::new(cfg.target()?);
    for r in records {
        selector.push(r);
    }
    Ok(selector.finish())
}

/// Parses one `id<TAB>fwd<TAB>bwd` line. Non-finite numbers parse fine and
/// are rejected later by the scorer.
pub fn parse_score_line(line: &str, line_no: usize) -> Result<ScoredPair, DceError> {
    let mut fields = line.split('\t');
    let parsed = (|| {
        let id = fields.next()?;
        let fwd: f64 = fields.next()?.trim().parse().ok()?;
        let bwd: f64 = fields.next()?.trim().parse().ok()?;
        (fields.next().is_none() && !id.is_empty()).then(|| ScoredPair {
            id: id.to_string(),
            fwd_xent: fwd,
            bwd_xent: bwd,
        })
    })();
    parsed.ok_or(DceError::Syntax { line: line_no })
}

/// Reads a score file and selects from it. Duplicate ids are a fault.
pub fn select_from_reader(reader: impl BufRead, cfg: &DceConfig) -> Result<Selection, DceError> {
    let mut selector = Selector::new(cfg.target()?);
    let mut ids: HashSet<String> = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| DceError::Io(e.to_string()))?;
        let record = parse_score_line(&line, i + 1)?;
        if !ids.insert(record.id.clone()) {
            return Err(DceError::DuplicateId {
                line: i + 1,
                id: record.id,
            });
        }
        selector.push(record);
    }
    Ok(selector.finish())
}
