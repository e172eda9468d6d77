//! Small-prime encodings of voting options (γ) and of return codes (δ_i).
//!
//! Both draw from the same ascending list of primes that are quadratic
//! residues modulo `p`. Products of distinct table primes stay below `p`, so
//! they are group members and can be factored back by trial division.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::group::{GroupElement, GroupParams};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodingError {
    #[error("option {option} outside 1..={k}")]
    OptionOutOfRange { option: usize, k: usize },
    #[error("code {code} outside 1..={m}")]
    CodeOutOfRange { code: u64, m: u64 },
    #[error("expected {expected} choice bits, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("invalid code parameters: {0}")]
    InvalidParameters(String),
    #[error("group has fewer than {0} small prime residues")]
    NotEnoughPrimes(usize),
    #[error("worst-case product does not fit below p")]
    Capacity,
    #[error("malformed plaintext: {0}")]
    Malformed(String),
}

/// How code bits map to primes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeMode {
    /// One prime per bit, present iff the bit is set.
    Sparse,
    /// 32 primes per 5-bit chunk, exactly one of them present.
    Dense,
}

impl fmt::Display for CodeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeMode::Sparse => "sparse",
            CodeMode::Dense => "dense",
        })
    }
}

impl FromStr for CodeMode {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sparse" => Ok(CodeMode::Sparse),
            "dense" => Ok(CodeMode::Dense),
            other => Err(EncodingError::InvalidParameters(format!("unknown mode `{other}`"))),
        }
    }
}

const CHUNK_BITS: usize = 5;
const CHUNK_PRIMES: usize = 1 << CHUNK_BITS;

fn modpow_u64(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut b = base as u128 % m;
    let mut acc = 1u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Membership of a small prime `x` in `G` by quadratic reciprocity, so only
/// `p mod x` is ever computed on the big modulus.
pub fn small_prime_is_member(group: &GroupParams, x: u64) -> bool {
    let p = group.p();
    if BigUint::from(x) >= *p {
        return false;
    }
    let p_mod_8 = (p % 8u32).to_u32_digits().first().copied().unwrap_or(0);
    if x == 2 {
        return p_mod_8 == 1 || p_mod_8 == 7;
    }
    let r = (p % x).to_u64_digits().first().copied().unwrap_or(0);
    if r == 0 {
        return false;
    }
    let p_over_x = modpow_u64(r, (x - 1) / 2, x) == 1;
    // (x/p)(p/x) = -1 exactly when both are 3 mod 4.
    let flip = x % 4 == 3 && p_mod_8 % 4 == 3;
    p_over_x != flip
}

/// The first `count` primes that are members of `G`, ascending.
pub fn qr_primes(group: &GroupParams, count: usize) -> Result<Vec<u64>, EncodingError> {
    let mut limit = 64u64.max(count as u64 * 24);
    loop {
        let candidates = num_prime::nt_funcs::primes(limit);
        let table: Vec<u64> =
            candidates.iter().copied().filter(|&x| small_prime_is_member(group, x)).take(count).collect();
        if table.len() == count {
            return Ok(table);
        }
        if BigUint::from(limit) >= *group.p() {
            return Err(EncodingError::NotEnoughPrimes(count));
        }
        limit *= 2;
    }
}

fn product<'a>(primes: impl IntoIterator<Item = &'a u64>) -> BigUint {
    primes.into_iter().fold(BigUint::one(), |acc, &x| acc * x)
}

/// Exponent of each listed prime in `value`, and the unfactored remainder.
fn factor(value: &BigUint, primes: &[u64]) -> (Vec<u32>, BigUint) {
    let mut rest = value.clone();
    let exponents = primes
        .iter()
        .map(|&x| {
            let mut e = 0;
            loop {
                let r = &rest % x;
                if !r.is_zero() {
                    break e;
                }
                rest /= x;
                e += 1;
            }
        })
        .collect();
    (exponents, rest)
}

/// γ: option `i` (1-based) is the `i`-th prime of the table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptionEncoding {
    group: GroupParams,
    primes: Vec<u64>,
}

impl OptionEncoding {
    /// Fails if the product of all `k` primes reaches `p`.
    pub fn new(group: &GroupParams, k: usize) -> Result<Self, EncodingError> {
        if k == 0 {
            return Err(EncodingError::InvalidParameters("k must be positive".into()));
        }
        let primes = qr_primes(group, k)?;
        if product(&primes) >= *group.p() {
            return Err(EncodingError::Capacity);
        }
        Ok(OptionEncoding { group: group.clone(), primes })
    }

    pub fn k(&self) -> usize {
        self.primes.len()
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn gamma(&self, option: usize) -> Result<GroupElement, EncodingError> {
        if option == 0 || option > self.k() {
            return Err(EncodingError::OptionOutOfRange { option, k: self.k() });
        }
        Ok(self.group.element_u64(self.primes[option - 1]).expect("table primes are members"))
    }

    /// Product of the selected options' primes; the empty selection is `1`.
    pub fn encode_choice(&self, choices: &[bool]) -> Result<GroupElement, EncodingError> {
        if choices.len() != self.k() {
            return Err(EncodingError::WrongLength { expected: self.k(), got: choices.len() });
        }
        let n = product(self.primes.iter().zip(choices).filter(|(_, &c)| c).map(|(p, _)| p));
        Ok(self.group.element(n).expect("capacity checked at construction"))
    }

    pub fn decode_choice(&self, v: &GroupElement) -> Result<Vec<bool>, EncodingError> {
        let (exponents, rest) = factor(v.value(), &self.primes);
        if !rest.is_one() {
            return Err(EncodingError::Malformed(format!("residual factor {rest}")));
        }
        if let Some(i) = exponents.iter().position(|&e| e > 1) {
            return Err(EncodingError::Malformed(format!("option {} appears {} times", i + 1, exponents[i])));
        }
        Ok(exponents.into_iter().map(|e| e == 1).collect())
    }
}

/// The δ_i family for `k` options with `l`-bit codes from `1..=m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeEncoding {
    group: GroupParams,
    k: usize,
    l: usize,
    m: u64,
    mode: CodeMode,
    primes: Vec<u64>,
}

/// Primes used per option block.
fn block_len(l: usize, mode: CodeMode) -> usize {
    match mode {
        CodeMode::Sparse => l,
        CodeMode::Dense => l.div_ceil(CHUNK_BITS) * CHUNK_PRIMES,
    }
}

/// Largest product any full code vector can produce.
fn worst_case(primes: &[u64], mode: CodeMode) -> BigUint {
    match mode {
        CodeMode::Sparse => product(primes),
        CodeMode::Dense => product(primes.chunks(CHUNK_PRIMES).filter_map(|c| c.last())),
    }
}

/// Whether `k` codes of `l` bits fit in one plaintext under the true worst
/// case. Dense mode pads `l` to a multiple of 5.
pub fn capacity(group: &GroupParams, k: usize, l: usize, mode: CodeMode) -> bool {
    match qr_primes(group, k * block_len(l, mode)) {
        Ok(primes) => worst_case(&primes, mode) < *group.p(),
        Err(_) => false,
    }
}

/// Largest total number of code bits that fits, over all ways of splitting
/// it into options.
pub fn max_capacity_bits(group: &GroupParams, mode: CodeMode) -> usize {
    let unit = match mode {
        CodeMode::Sparse => 1,
        CodeMode::Dense => CHUNK_PRIMES,
    };
    let p = group.p();
    let mut acc = BigUint::one();
    let mut units = 0;
    let mut have = Vec::new();
    loop {
        if have.len() < (units + 1) * unit {
            match qr_primes(group, ((units + 1) * unit).max(2 * have.len())) {
                Ok(t) => have = t,
                Err(_) => break,
            }
        }
        acc *= have[(units + 1) * unit - 1];
        if acc >= *p {
            break;
        }
        units += 1;
    }
    match mode {
        CodeMode::Sparse => units,
        CodeMode::Dense => units * CHUNK_BITS,
    }
}

impl CodeEncoding {
    pub fn new(group: &GroupParams, k: usize, l: usize, m: u64, mode: CodeMode) -> Result<Self, EncodingError> {
        if k == 0 || l == 0 || l > 63 {
            return Err(EncodingError::InvalidParameters(format!("k = {k}, l = {l}")));
        }
        if m == 0 || m > 1 << l {
            return Err(EncodingError::InvalidParameters(format!("m = {m} does not fit in {l} bits")));
        }
        let primes = qr_primes(group, k * block_len(l, mode))?;
        if worst_case(&primes, mode) >= *group.p() {
            return Err(EncodingError::Capacity);
        }
        Ok(CodeEncoding { group: group.clone(), k, l, m, mode, primes })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn mode(&self) -> CodeMode {
        self.mode
    }

    pub fn group(&self) -> &GroupParams {
        &self.group
    }

    fn block(&self, option: usize) -> &[u64] {
        let len = block_len(self.l, self.mode);
        &self.primes[(option - 1) * len..option * len]
    }

    /// The primes multiplied into δ_option(code).
    pub fn delta_primes(&self, option: usize, code: u64) -> Result<Vec<u64>, EncodingError> {
        if option == 0 || option > self.k {
            return Err(EncodingError::OptionOutOfRange { option, k: self.k });
        }
        if code == 0 || code > self.m {
            return Err(EncodingError::CodeOutOfRange { code, m: self.m });
        }
        let pattern = code - 1;
        let block = self.block(option);
        Ok(match self.mode {
            CodeMode::Sparse => (0..self.l).filter(|&j| pattern >> j & 1 == 1).map(|j| block[j]).collect(),
            CodeMode::Dense => block
                .chunks(CHUNK_PRIMES)
                .enumerate()
                .map(|(j, chunk)| chunk[(pattern >> (CHUNK_BITS * j) & (CHUNK_PRIMES as u64 - 1)) as usize])
                .collect(),
        })
    }

    pub fn delta(&self, option: usize, code: u64) -> Result<GroupElement, EncodingError> {
        let n = product(&self.delta_primes(option, code)?);
        Ok(self.group.element(n).expect("capacity checked at construction"))
    }

    /// `δ_1(c_1) ... δ_k(c_k)` for one code per option.
    pub fn encode_codes(&self, codes: &[u64]) -> Result<GroupElement, EncodingError> {
        if codes.len() != self.k {
            return Err(EncodingError::WrongLength { expected: self.k, got: codes.len() });
        }
        let mut n = BigUint::one();
        for (i, &c) in codes.iter().enumerate() {
            n *= product(&self.delta_primes(i + 1, c)?);
        }
        Ok(self.group.element(n).expect("capacity checked at construction"))
    }

    /// Factors a product of δ values back into one code per option.
    pub fn decode_codes(&self, value: &GroupElement) -> Result<Vec<u64>, EncodingError> {
        let (exponents, rest) = factor(value.value(), &self.primes);
        if !rest.is_one() {
            return Err(EncodingError::Malformed(format!("residual factor {rest}")));
        }
        if exponents.iter().any(|&e| e > 1) {
            return Err(EncodingError::Malformed("repeated code prime".into()));
        }
        let len = block_len(self.l, self.mode);
        exponents
            .chunks(len)
            .enumerate()
            .map(|(i, block)| {
                let pattern = match self.mode {
                    CodeMode::Sparse => block.iter().enumerate().fold(0u64, |acc, (j, &e)| acc | (e as u64) << j),
                    CodeMode::Dense => {
                        let mut acc = 0u64;
                        for (j, chunk) in block.chunks(CHUNK_PRIMES).enumerate() {
                            let set: Vec<usize> = (0..CHUNK_PRIMES).filter(|&x| chunk[x] == 1).collect();
                            if set.len() != 1 {
                                return Err(EncodingError::Malformed(format!(
                                    "option {} chunk {j} has {} primes set",
                                    i + 1,
                                    set.len()
                                )));
                            }
                            acc |= (set[0] as u64) << (CHUNK_BITS * j);
                        }
                        acc
                    }
                };
                if pattern >= self.m {
                    return Err(EncodingError::Malformed(format!("option {} decodes past m", i + 1)));
                }
                Ok(pattern + 1)
            })
            .collect()
    }
}
