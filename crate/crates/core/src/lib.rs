//! Preprocessing toolkit for Czech–Ukrainian machine translation corpora.
//!
//! * [`romanize`]: reversible Ukrainian Cyrillic → Czech-style Latin
//! * [`inca`]: inline casing tags with a most-frequent-variant vocabulary
//! * [`noise`]: seeded casing/punctuation noise
//! * [`filter`]: rule-based parallel and monolingual filtering
//! * [`langid`]: character n-gram language identification
//! * [`dce`]: dual cross-entropy top-N selection
//!
//! [`text`] holds the shared line model.

pub mod dce;
pub mod filter;
pub mod inca;
pub mod langid;
pub mod noise;
pub mod par;
pub mod romanize;
pub mod text;

pub use dce::{dce_score, select, DceConfig, ScoredPair, Selection};
pub use filter::{
    check_rules, filter_mono, filter_pair, length_ratio_ok, run_pipeline, FilterConfig,
    FilterDecision, FilterStats, MonoLang, PairFilter, PairRecord, RuleSet,
};
pub use inca::{train_vocab, CasingVocabulary};
pub use langid::{train_langid, Detection, LangIdModel, LanguageDetector};
pub use noise::{line_seed, noise_line, NoiseConfig};
pub use romanize::{default_czech_table, deromanize, RomanizationMode, TranslitTable};
pub use text::{
    classify_casing, classify_script, decode_bytes, detokenize, tokenize, CasingPattern, Line,
    ScriptClass, TokenizedText,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
