//! Seeded casing and punctuation noise for source-side training text.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{is_cased, tokenize};

const FINAL_PUNCT: &[char] = &['.', ',', '!', '?', '…'];
const ADDED_PUNCT: &[char] = &['.', '!', '?'];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub p_drop_initial_cap: f64,
    pub p_lowercase_all: f64,
    pub p_uppercase_span: f64,
    pub p_drop_final_punct: f64,
    pub p_add_punct: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            p_drop_initial_cap: 0.1,
            p_lowercase_all: 0.05,
            p_uppercase_span: 0.02,
            p_drop_final_punct: 0.1,
            p_add_punct: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("probability {name} = {value} is outside [0, 1]")]
pub struct InvalidProbability {
    pub name: &'static str,
    pub value: f64,
}

impl NoiseConfig {
    /// All probabilities zero: noise is the identity.
    pub fn zero(seed: u64) -> Self {
        NoiseConfig {
            p_drop_initial_cap: 0.0,
            p_lowercase_all: 0.0,
            p_uppercase_span: 0.0,
            p_drop_final_punct: 0.0,
            p_add_punct: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), InvalidProbability> {
        for (name, value) in [
            ("p_drop_initial_cap", self.p_drop_initial_cap),
            ("p_lowercase_all", self.p_lowercase_all),
            ("p_uppercase_span", self.p_uppercase_span),
            ("p_drop_final_punct", self.p_drop_final_punct),
            ("p_add_punct", self.p_add_punct),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(InvalidProbability { name, value });
            }
        }
        Ok(())
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-line seed, independent of processing order.
pub fn line_seed(global_seed: u64, line_index: u64) -> u64 {
    splitmix64(global_seed ^ line_index)
}

/// Which rules changed the line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Applied {
    pub lowercase_all: bool,
    pub drop_initial_cap: bool,
    pub uppercase_span: bool,
    pub drop_final_punct: bool,
    pub add_punct: bool,
}

pub fn noise_line(line: &str, cfg: &NoiseConfig, seed: u64) -> String {
    noise_line_traced(line, cfg, seed).0
}

pub fn noise_line_traced(line: &str, cfg: &NoiseConfig, seed: u64) -> (String, Applied) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // All five draws happen in a fixed order so each rule sees the same
    // random stream regardless of which others fire.
    let lowercase_all = rng.random_bool(cfg.p_lowercase_all);
    let drop_cap = rng.random_bool(cfg.p_drop_initial_cap);
    let upper_span = rng.random_bool(cfg.p_uppercase_span);
    let drop_punct = rng.random_bool(cfg.p_drop_final_punct);
    let add_punct = rng.random_bool(cfg.p_add_punct);

    let mut applied = Applied::default();
    let mut text = line.to_string();

    if lowercase_all {
        text = text.to_lowercase();
        applied.lowercase_all = true;
    } else {
        if drop_cap {
            if let Some((pos, c)) = text.char_indices().find(|&(_, c)| is_cased(c)) {
                let lower: String = c.to_lowercase().collect();
                text.replace_range(pos..pos + c.len_utf8(), &lower);
                applied.drop_initial_cap = true;
            }
        }
        if upper_span {
            let tt = tokenize(&text);
            if !tt.tokens.is_empty() {
                let start = rng.random_range(0..tt.tokens.len());
                let len = rng.random_range(1..=3usize);
                let mut out = String::with_capacity(text.len());
                for (i, t) in tt.tokens.iter().enumerate() {
                    out.push_str(t.space);
                    if i >= start && i < start + len {
                        out.push_str(&t.body.to_uppercase());
                    } else {
                        out.push_str(t.body);
                    }
                }
                out.push_str(tt.trailing);
                text = out;
                applied.uppercase_span = true;
            }
        }
    }

    let last = text.chars().next_back();
    if drop_punct && last.is_some_and(|c| FINAL_PUNCT.contains(&c)) {
        text.pop();
        applied.drop_final_punct = true;
    } else if add_punct && !text.is_empty() {
        match last {
            Some(c) if ADDED_PUNCT.contains(&c) => text.push(c),
            _ => text.push(ADDED_PUNCT[rng.random_range(0..ADDED_PUNCT.len())]),
        }
        applied.add_punct = true;
    }
    (text, applied)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn splitmix_reference_values() {
        // reference outputs of the published splitmix64 generator seeded with 0
        let mut state = 0u64;
        let mut next = || {
            let out = splitmix64(state);
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            out
        };
        assert_eq!(next(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(next(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(next(), 0x06C4_5D18_8009_454F);
        assert_eq!(line_seed(0, 0), splitmix64(0));
    }

    #[test]
    fn line_seeds_do_not_collide() {
        let mut seen: Vec<u64> = (0..1_000_000u64).map(|i| line_seed(42, i)).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 1_000_000);
        assert_eq!(line_seed(42, 7), line_seed(42, 7));
    }

    #[test]
    fn lowercase_all() {
        let cfg = NoiseConfig {
            p_lowercase_all: 1.0,
            ..NoiseConfig::zero(1)
        };
        assert_eq!(noise_line("Dobrý den.", &cfg, 5), "dobrý den.");
    }

    #[test]
    fn individual_rules() {
        let base = NoiseConfig::zero(0);
        let cap = NoiseConfig {
            p_drop_initial_cap: 1.0,
            ..base
        };
        assert_eq!(noise_line("\"Dobrý den\"", &cap, 1), "\"dobrý den\"");
        let drop = NoiseConfig {
            p_drop_final_punct: 1.0,
            ..base
        };
        assert_eq!(noise_line("Ahoj!", &drop, 1), "Ahoj");
        assert_eq!(noise_line("Ahoj…", &drop, 1), "Ahoj");
        assert_eq!(noise_line("Ahoj", &drop, 1), "Ahoj");
        let add = NoiseConfig {
            p_add_punct: 1.0,
            ..base
        };
        assert_eq!(noise_line("Ahoj?", &add, 1), "Ahoj??");
        let added = noise_line("Ahoj", &add, 1);
        assert!(["Ahoj.", "Ahoj!", "Ahoj?"].contains(&added.as_str()));
        let span = NoiseConfig {
            p_uppercase_span: 1.0,
            ..base
        };
        let out = noise_line("jedna dva tři čtyři pět", &span, 3);
        assert_eq!(out.to_lowercase(), "jedna dva tři čtyři pět");
        assert_ne!(out, "jedna dva tři čtyři pět");
    }

    #[test]
    fn validate_rejects_out_of_range() {
        let cfg = NoiseConfig {
            p_add_punct: 1.5,
            ..NoiseConfig::default()
        };
        assert_eq!(
            cfg.validate(),
            Err(InvalidProbability {
                name: "p_add_punct",
                value: 1.5
            })
        );
        assert!(NoiseConfig::default().validate().is_ok());
    }

    fn strip_final_punct(s: &str) -> &str {
        s.trim_end_matches(FINAL_PUNCT)
    }

    proptest! {
        #[test]
        fn zero_config_is_identity(s in "[^\n\r]{0,40}", seed in any::<u64>()) {
            prop_assert_eq!(noise_line(&s, &NoiseConfig::zero(0), seed), s);
        }

        #[test]
        fn deterministic(s in "[^\n\r]{0,40}", seed in any::<u64>()) {
            let cfg = NoiseConfig { p_drop_initial_cap: 0.5, p_lowercase_all: 0.3, p_uppercase_span: 0.5, p_drop_final_punct: 0.5, p_add_punct: 0.5, seed: 0 };
            prop_assert_eq!(noise_line(&s, &cfg, seed), noise_line(&s, &cfg, seed));
        }

        #[test]
        fn content_is_preserved(s in "[a-zA-Zа-яА-ЯěščřžýáíéůúĚŠČŘŽ ,.!?]{0,40}", seed in any::<u64>()) {
            let cfg = NoiseConfig { p_drop_initial_cap: 0.5, p_lowercase_all: 0.2, p_uppercase_span: 0.5, p_drop_final_punct: 0.5, p_add_punct: 0.5, seed: 0 };
            let out = noise_line(&s, &cfg, seed);
            prop_assert_eq!(strip_final_punct(&out).to_lowercase(), strip_final_punct(&s).to_lowercase());
        }
    }
}
