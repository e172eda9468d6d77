//! Election configuration, read from TOML.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use petcode_core::encoding::CodeMode;
use petcode_core::group::{GroupError, GroupParams};
use serde::{Deserialize, Serialize};

/// Environment variable supplying the default seed.
pub const SEED_ENV: &str = "PETCODE_SEED";
pub const DEFAULT_SEED: &str = "petcode";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Corrupted tellers either only leak what they see or also publish
/// malformed proofs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TellerMode {
    #[default]
    Passive,
    Active,
}

/// How return codes reach the voter: through the voting platform, which can
/// alter them, or over a separate channel it cannot touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Delivery {
    #[default]
    InBand,
    OutOfBand,
}

/// Explicit group parameters as decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplicitGroup {
    pub p: String,
    pub q: String,
    pub g: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElectionConfig {
    pub election_id: String,
    /// Bit length of a seeded safe-prime group; 3072 selects the RFC 3526
    /// group. Ignored when `group` is given.
    pub group_bits: u32,
    pub group: Option<ExplicitGroup>,
    /// `n`
    pub voters: usize,
    /// `n'`, the voters whose sheets the adversary holds.
    pub corrupted_voters: usize,
    /// `k`
    pub options: usize,
    /// `m`
    pub code_space: u64,
    /// `l`
    pub code_bits: usize,
    pub mode: CodeMode,
    pub tellers: u32,
    pub threshold: u32,
    pub corrupted_tellers: Vec<u32>,
    pub teller_mode: TellerMode,
    pub delivery: Delivery,
    pub seed: String,
    /// Shadow shuffles per mixing proof.
    pub lambda: usize,
}

impl Default for ElectionConfig {
    fn default() -> Self {
        ElectionConfig {
            election_id: "election".into(),
            group_bits: 64,
            group: None,
            voters: 5,
            corrupted_voters: 0,
            options: 2,
            code_space: 16,
            code_bits: 4,
            mode: CodeMode::Sparse,
            tellers: 3,
            threshold: 2,
            corrupted_tellers: Vec::new(),
            teller_mode: TellerMode::Passive,
            delivery: Delivery::InBand,
            seed: std::env::var(SEED_ENV).unwrap_or_else(|_| DEFAULT_SEED.into()),
            lambda: 16,
        }
    }
}

static GROUPS: Mutex<BTreeMap<u32, GroupParams>> = Mutex::new(BTreeMap::new());

/// Seeded groups are expensive to find, so each size is generated once per
/// process.
pub fn seeded_group(bits: u32) -> Result<GroupParams, GroupError> {
    if bits == 3072 {
        return Ok(GroupParams::rfc3526_3072());
    }
    let mut cache = GROUPS.lock().expect("group cache poisoned");
    if let Some(g) = cache.get(&bits) {
        return Ok(g.clone());
    }
    let g = GroupParams::generate(bits, format!("petcode-group-{bits}").as_bytes())?;
    cache.insert(bits, g.clone());
    Ok(g)
}

impl ElectionConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: ElectionConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn group_params(&self) -> Result<GroupParams, ConfigError> {
        match &self.group {
            Some(e) => {
                let parse = |s: &str| {
                    s.parse().map_err(|_| ConfigError::Invalid(format!("group parameter {s:?} is not a decimal")))
                };
                Ok(GroupParams::new(parse(&e.p)?, parse(&e.q)?, parse(&e.g)?)?)
            }
            None => Ok(seeded_group(self.group_bits)?),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if self.voters == 0 || self.options == 0 {
            return fail("at least one voter and one option are required".into());
        }
        if self.corrupted_voters >= self.voters {
            return fail("at least one voter must be honest".into());
        }
        if self.code_space <= 2 * self.voters as u64 {
            return fail(format!("code space m = {} must exceed 2n = {}", self.code_space, 2 * self.voters));
        }
        if self.code_bits == 0 || self.code_bits > 63 || self.code_space > 1u64 << self.code_bits {
            return fail(format!("m = {} codes do not fit {} code bits", self.code_space, self.code_bits));
        }
        if self.threshold == 0 || self.threshold > self.tellers {
            return fail(format!("threshold {} out of range for {} tellers", self.threshold, self.tellers));
        }
        let distinct: BTreeSet<u32> = self.corrupted_tellers.iter().copied().collect();
        if distinct.len() != self.corrupted_tellers.len() || distinct.iter().any(|&t| t == 0 || t > self.tellers) {
            return fail("corrupted tellers must be distinct indices in 1..=tellers".into());
        }
        if self.lambda == 0 {
            return fail("lambda must be positive".into());
        }
        Ok(())
    }

    /// Experiments that rely on the secrecy of the keys admit at most
    /// `t - 1` corrupted tellers.
    pub fn validate_for_experiment(&self) -> Result<(), ConfigError> {
        self.validate()?;
        if self.corrupted_tellers.len() as u32 >= self.threshold {
            return Err(ConfigError::Invalid(format!(
                "{} corrupted tellers can decrypt alone with threshold {}",
                self.corrupted_tellers.len(),
                self.threshold
            )));
        }
        Ok(())
    }

    pub fn is_corrupted_teller(&self, index: u32) -> bool {
        self.corrupted_tellers.contains(&index)
    }
}
