//! The group `G` of quadratic residues modulo a safe prime `p = 2q + 1`,
//! together with exponent arithmetic modulo `q`.
//!
//! Every [`GroupElement`] and [`Scalar`] carries a handle to the parameters it
//! was created under. Combining values from different parameter sets is a
//! programming error: the operator impls panic, the `try_*` methods return
//! [`GroupError::Mismatch`].

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::{BigUint, RandBigInt};
use num_modular::{ModularInteger, ModularSymbols, MontgomeryInt};
use num_prime::nt_funcs::is_prime;
use num_prime::PrimalityTestConfig;
use num_traits::{One, Pow, Zero};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rng::seeded_rng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupError {
    #[error("bit length {0} is below the minimum of 16")]
    TooFewBits(u32),
    #[error("no safe prime found within {0} candidates")]
    BudgetExhausted(usize),
    #[error("invalid group parameters: {0}")]
    InvalidParams(&'static str),
    #[error("{0} is not a member of the quadratic-residue subgroup")]
    NotMember(BigUint),
    #[error("operands belong to different groups")]
    Mismatch,
    #[error("malformed group parameters text: {0}")]
    Parse(String),
}

/// Primality test configuration: two fixed bases, 38 random strong-probable-prime
/// rounds and a strong Lucas test. The random rounds alone bound the error by 4^-38.
fn primality_config() -> PrimalityTestConfig {
    let mut config = PrimalityTestConfig::bpsw();
    config.sprp_trials = 2;
    config.sprp_random_trials = 38;
    config
}

pub fn is_probable_prime(n: &BigUint) -> bool {
    if n < &BigUint::from(2u32) {
        return false;
    }
    is_prime(n, Some(primality_config())).probably()
}

struct Inner {
    p: BigUint,
    q: BigUint,
    g: BigUint,
    /// `p` when it fits a machine word; selects Montgomery arithmetic.
    word: Option<u64>,
}

fn word(x: &BigUint) -> u64 {
    u64::try_from(x).expect("value below a word-sized modulus")
}

/// Parameters `(p, q, g)` of the group. Cheap to clone.
#[derive(Clone)]
pub struct GroupParams(Arc<Inner>);

impl fmt::Debug for GroupParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupParams").field("p", &self.0.p).field("q", &self.0.q).field("g", &self.0.g).finish()
    }
}

impl PartialEq for GroupParams {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.p == other.0.p && self.0.g == other.0.g)
    }
}

impl Eq for GroupParams {}

const RFC3526_3072: &str = "\
FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74\
020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437\
4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED\
EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05\
98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB\
9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B\
E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718\
3995497CEA956AE515D2261898FA051015728E5A8AAAC42DAD33170D04507A33\
A85521ABDF1CBA64ECFB850458DBEF0A8AEA71575D060C7DB3970F85A6E1E4C7\
ABF5AE8CDB0933D71E8C94E04A25619DCEE3D2261AD2EE6BF12FFA06D98A0864\
D87602733EC86A64521F2B18177B200CBBE117577A615D6C770988C0BAD946E2\
08E24FA074E5AB3143DB5BFCE0FD108E4B82D120A93AD2CAFFFFFFFFFFFFFFFF";

impl GroupParams {
    /// Validates and wraps explicit parameters.
    pub fn new(p: BigUint, q: BigUint, g: BigUint) -> Result<Self, GroupError> {
        if p != &q * 2u32 + 1u32 {
            return Err(GroupError::InvalidParams("p != 2q + 1"));
        }
        if !is_probable_prime(&q) {
            return Err(GroupError::InvalidParams("q is not prime"));
        }
        if !is_probable_prime(&p) {
            return Err(GroupError::InvalidParams("p is not prime"));
        }
        Self::with_generator(p, q, g)
    }

    /// Skips the primality tests; used for parameters whose primality is
    /// already established (generation, built-in constants).
    fn with_generator(p: BigUint, q: BigUint, g: BigUint) -> Result<Self, GroupError> {
        if g.is_zero() || g >= p {
            return Err(GroupError::InvalidParams("g out of range"));
        }
        if g.is_one() {
            return Err(GroupError::InvalidParams("g is the identity"));
        }
        if !g.modpow(&q, &p).is_one() {
            return Err(GroupError::InvalidParams("g is not a quadratic residue"));
        }
        let word = u64::try_from(&p).ok();
        Ok(GroupParams(Arc::new(Inner { p, q, g, word })))
    }

    /// Deterministically derives a safe-prime group of exactly `bits` bits from `seed`.
    /// The generator is always 4, which is a square of order `q` for every safe prime `p > 5`.
    pub fn generate(bits: u32, seed: &[u8]) -> Result<Self, GroupError> {
        Self::generate_with_budget(bits, seed, 16 * (bits as usize).pow(2))
    }

    pub fn generate_with_budget(bits: u32, seed: &[u8], budget: usize) -> Result<Self, GroupError> {
        if bits < 16 {
            return Err(GroupError::TooFewBits(bits));
        }
        let mut rng = seeded_rng(&[b"group-params".as_slice(), seed].concat());
        let top = BigUint::one() << (bits - 2);
        let three = BigUint::from(3u32);
        for _ in 0..budget {
            // q in [2^(bits-2), 2^(bits-1)), odd, q = 2 mod 3 so that 3 does not divide p.
            let mut q = rng.gen_biguint_below(&top) + &top;
            q |= BigUint::one();
            if &q % &three != BigUint::from(2u32) {
                continue;
            }
            if !is_probable_prime(&q) {
                continue;
            }
            let p = &q * 2u32 + 1u32;
            if !is_probable_prime(&p) {
                continue;
            }
            return Self::with_generator(p, q, BigUint::from(4u32));
        }
        Err(GroupError::BudgetExhausted(budget))
    }

    /// The 3072-bit MODP group of RFC 3526 with generator 2.
    pub fn rfc3526_3072() -> Self {
        let p = BigUint::parse_bytes(RFC3526_3072.as_bytes(), 16).expect("constant parses");
        let q = (&p - 1u32) >> 1;
        Self::with_generator(p, q, BigUint::from(2u32)).expect("RFC 3526 group is valid")
    }

    /// The toy group `p = 23, q = 11, g = 4`.
    pub fn toy() -> Self {
        Self::new(23u32.into(), 11u32.into(), 4u32.into()).expect("toy group is valid")
    }

    pub fn p(&self) -> &BigUint {
        &self.0.p
    }

    pub fn q(&self) -> &BigUint {
        &self.0.q
    }

    pub fn bits(&self) -> u64 {
        self.0.p.bits()
    }

    pub fn generator(&self) -> GroupElement {
        GroupElement::unchecked(self.0.g.clone(), self)
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::unchecked(BigUint::one(), self)
    }

    /// `x^q mod p = 1`, for `1 <= x <= p - 1`.
    pub fn is_member(&self, x: &BigUint) -> bool {
        !x.is_zero() && x < &self.0.p && x.modpow(&self.0.q, &self.0.p).is_one()
    }

    /// Euler's criterion through the Legendre symbol; same answer as
    /// [`is_member`](Self::is_member) without the full exponentiation.
    pub fn is_quadratic_residue(&self, x: &BigUint) -> bool {
        !x.is_zero() && x < &self.0.p && x.legendre(&self.0.p) == 1
    }

    pub fn element(&self, value: BigUint) -> Result<GroupElement, GroupError> {
        if self.is_member(&value) {
            Ok(GroupElement::unchecked(value, self))
        } else {
            Err(GroupError::NotMember(value))
        }
    }

    pub fn element_u64(&self, value: u64) -> Result<GroupElement, GroupError> {
        self.element(BigUint::from(value))
    }

    /// Reduces `value` modulo `q`.
    pub fn scalar(&self, value: BigUint) -> Scalar {
        Scalar { value: value % &self.0.q, group: self.clone() }
    }

    pub fn scalar_u64(&self, value: u64) -> Scalar {
        self.scalar(BigUint::from(value))
    }

    pub fn zero(&self) -> Scalar {
        self.scalar_u64(0)
    }

    pub fn random_scalar<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Scalar {
        Scalar { value: rng.gen_biguint_below(&self.0.q), group: self.clone() }
    }

    /// Uniform in `[1, q - 1]`.
    pub fn random_nonzero_scalar<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Scalar {
        let value = rng.gen_biguint_below(&(&self.0.q - 1u32)) + 1u32;
        Scalar { value, group: self.clone() }
    }

    /// Injects an integer `n` in `[0, q - 1]` into `G`: `x = n + 1` if it is a
    /// residue, `p - x` otherwise. Exactly one of the two is a residue since `-1`
    /// is a non-residue modulo a safe prime.
    pub fn embed(&self, n: &BigUint) -> Result<GroupElement, GroupError> {
        if n >= &self.0.q {
            return Err(GroupError::NotMember(n.clone()));
        }
        let x = n + 1u32;
        let value = if self.is_quadratic_residue(&x) { x } else { &self.0.p - x };
        Ok(GroupElement::unchecked(value, self))
    }

    pub fn embed_u64(&self, n: u64) -> Result<GroupElement, GroupError> {
        self.embed(&BigUint::from(n))
    }

    /// Inverse of [`embed`](Self::embed).
    pub fn unembed(&self, element: &GroupElement) -> BigUint {
        let v = element.value();
        if v <= &self.0.q {
            v - 1u32
        } else {
            &self.0.p - v - 1u32
        }
    }

    /// Canonical text form: three `key = decimal` lines.
    pub fn to_text(&self) -> String {
        format!("p = {}\nq = {}\ng = {}\n", self.0.p, self.0.q, self.0.g)
    }

    pub fn from_text(text: &str) -> Result<Self, GroupError> {
        let mut fields = [None, None, None];
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| GroupError::Parse(format!("expected `key = value`, got `{line}`")))?;
            let slot = match key.trim() {
                "p" => 0,
                "q" => 1,
                "g" => 2,
                other => return Err(GroupError::Parse(format!("unknown key `{other}`"))),
            };
            let n = BigUint::parse_bytes(value.trim().as_bytes(), 10)
                .ok_or_else(|| GroupError::Parse(format!("`{}` is not a decimal", value.trim())))?;
            fields[slot] = Some(n);
        }
        match fields {
            [Some(p), Some(q), Some(g)] => Self::new(p, q, g),
            _ => Err(GroupError::Parse("missing one of p, q, g".into())),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    p: String,
    q: String,
    g: String,
}

impl Serialize for GroupParams {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ParamsRepr { p: self.0.p.to_string(), q: self.0.q.to_string(), g: self.0.g.to_string() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupParams {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = ParamsRepr::deserialize(d)?;
        let parse = |s: &str| BigUint::parse_bytes(s.as_bytes(), 10).ok_or_else(|| D::Error::custom("bad decimal"));
        GroupParams::new(parse(&repr.p)?, parse(&repr.q)?, parse(&repr.g)?).map_err(D::Error::custom)
    }
}

/// A member of `G`.
#[derive(Clone)]
pub struct GroupElement {
    value: BigUint,
    group: GroupParams,
}

impl GroupElement {
    pub(crate) fn unchecked(value: BigUint, group: &GroupParams) -> Self {
        GroupElement { value, group: group.clone() }
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn group(&self) -> &GroupParams {
        &self.group
    }

    pub fn is_identity(&self) -> bool {
        self.value.is_one()
    }

    pub fn try_mul(&self, other: &GroupElement) -> Result<GroupElement, GroupError> {
        if self.group != other.group {
            return Err(GroupError::Mismatch);
        }
        let value = match self.group.0.word {
            Some(p) => {
                let (a, b) = (word(&self.value), word(&other.value));
                BigUint::from((a as u128 * b as u128 % p as u128) as u64)
            }
            None => (&self.value * &other.value) % self.group.p(),
        };
        Ok(GroupElement::unchecked(value, &self.group))
    }

    pub fn try_pow(&self, exponent: &Scalar) -> Result<GroupElement, GroupError> {
        if self.group != exponent.group {
            return Err(GroupError::Mismatch);
        }
        Ok(self.pow_uint(&exponent.value))
    }

    pub fn try_div(&self, other: &GroupElement) -> Result<GroupElement, GroupError> {
        self.try_mul(&other.inv())
    }

    pub fn pow(&self, exponent: &Scalar) -> GroupElement {
        self.try_pow(exponent).expect("exponent from a different group")
    }

    pub fn pow_uint(&self, exponent: &BigUint) -> GroupElement {
        let value = match self.group.0.word {
            // Members have order dividing q, so the exponent reduces mod q.
            Some(p) => {
                let e = word(&(exponent % self.group.q()));
                BigUint::from(MontgomeryInt::<u64>::new(word(&self.value), &p).pow(e).residue())
            }
            None => self.value.modpow(exponent, self.group.p()),
        };
        GroupElement::unchecked(value, &self.group)
    }

    pub fn pow_u64(&self, exponent: u64) -> GroupElement {
        self.pow_uint(&BigUint::from(exponent))
    }

    /// `a^(q-1)`, valid because every member has order dividing `q`.
    pub fn inv(&self) -> GroupElement {
        self.pow_uint(&(self.group.q() - 1u32))
    }

    /// Canonical bytes: big-endian magnitude.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.value.to_bytes_be()
    }
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value && self.group == other.group
    }
}

impl Eq for GroupElement {}

impl Hash for GroupElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.value.hash(state);
    }
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.cmp(&other.value)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement({})", self.value)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Mul for &GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: &GroupElement) -> GroupElement {
        self.try_mul(rhs).expect("group elements from different groups")
    }
}

impl Div for &GroupElement {
    type Output = GroupElement;

    fn div(self, rhs: &GroupElement) -> GroupElement {
        self.try_div(rhs).expect("group elements from different groups")
    }
}

/// Decimal text, with a fast path for word-size values.
fn decimal(x: &BigUint) -> String {
    u64::try_from(x).map_or_else(|_| x.to_string(), |w| w.to_string())
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&decimal(&self.value))
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let text = String::deserialize(d)?;
        let value = BigUint::parse_bytes(text.as_bytes(), 10).ok_or_else(|| D::Error::custom("bad decimal"))?;
        let group = crate::serial::context().ok_or_else(|| D::Error::custom("no group context for decoding"))?;
        group.element(value).map_err(D::Error::custom)
    }
}

/// An exponent in `Z_q`.
#[derive(Clone)]
pub struct Scalar {
    value: BigUint,
    group: GroupParams,
}

impl Scalar {
    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn group(&self) -> &GroupParams {
        &self.group
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    fn check(&self, other: &Scalar) {
        assert!(self.group == other.group, "scalars from different groups");
    }

    /// Multiplicative inverse mod `q`; `None` for zero.
    pub fn inv(&self) -> Option<Scalar> {
        if self.value.is_zero() {
            return None;
        }
        let q = self.group.q();
        Some(Scalar { value: self.value.modpow(&(q - 2u32), q), group: self.group.clone() })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.value.to_bytes_be()
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value && self.group == other.group
    }
}

impl Eq for Scalar {}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({})", self.value)
    }
}

impl Add for &Scalar {
    type Output = Scalar;

    fn add(self, rhs: &Scalar) -> Scalar {
        self.check(rhs);
        Scalar { value: (&self.value + &rhs.value) % self.group.q(), group: self.group.clone() }
    }
}

impl Sub for &Scalar {
    type Output = Scalar;

    fn sub(self, rhs: &Scalar) -> Scalar {
        self.check(rhs);
        let q = self.group.q();
        Scalar { value: (&self.value + q - &rhs.value) % q, group: self.group.clone() }
    }
}

impl Mul for &Scalar {
    type Output = Scalar;

    fn mul(self, rhs: &Scalar) -> Scalar {
        self.check(rhs);
        Scalar { value: (&self.value * &rhs.value) % self.group.q(), group: self.group.clone() }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;

    fn neg(self) -> Scalar {
        let q = self.group.q();
        Scalar { value: (q - &self.value) % q, group: self.group.clone() }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&decimal(&self.value))
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let text = String::deserialize(d)?;
        let value = BigUint::parse_bytes(text.as_bytes(), 10).ok_or_else(|| D::Error::custom("bad decimal"))?;
        let group = crate::serial::context().ok_or_else(|| D::Error::custom("no group context for decoding"))?;
        if &value >= group.q() {
            return Err(D::Error::custom("scalar out of range"));
        }
        Ok(Scalar { value, group })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn modexp_oracle(base: u64, exp: u64, modulus: u64) -> u64 {
        (0..exp).fold(1, |acc, _| acc * base % modulus)
    }

    #[test]
    fn toy_group_arithmetic() {
        let grp = GroupParams::toy();
        let g = grp.generator();
        assert!(g.pow_u64(11).is_identity());
        let x = grp.element_u64(16).unwrap();
        assert!((&x * &x.inv()).is_identity());
        assert_eq!(g.pow(&grp.scalar_u64(3)).value(), &BigUint::from(modexp_oracle(4, 3, 23)));
        assert_eq!(modexp_oracle(4, 3, 23), 18);
    }

    #[test]
    fn toy_membership_matches_enumerated_squares() {
        let grp = GroupParams::toy();
        let squares: Vec<u64> = {
            let mut s: Vec<u64> = (1..23u64).map(|x| x * x % 23).collect();
            s.sort_unstable();
            s.dedup();
            s
        };
        assert_eq!(squares, vec![1, 2, 3, 4, 6, 8, 9, 12, 13, 16, 18]);
        for x in 1..23u64 {
            let v = BigUint::from(x);
            assert_eq!(grp.is_member(&v), squares.contains(&x), "x = {x}");
            assert_eq!(grp.is_quadratic_residue(&v), squares.contains(&x), "x = {x}");
        }
        assert!(grp.is_member(&2u32.into()));
        assert!(!grp.is_member(&5u32.into()));
        assert!(grp.is_member(&1u32.into()));
        assert!(!grp.is_member(&0u32.into()));
        assert!(!grp.is_member(&23u32.into()));
        assert_eq!(grp.element_u64(5), Err(GroupError::NotMember(5u32.into())));
    }

    #[test]
    fn injected_p23_is_accepted_by_trial_division() {
        let trial_division = |n: u64| n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d));
        assert!(trial_division(11) && trial_division(23));
        assert!(GroupParams::new(23u32.into(), 11u32.into(), 4u32.into()).is_ok());
        assert!(GroupParams::new(23u32.into(), 11u32.into(), 5u32.into()).is_err());
        assert!(GroupParams::new(23u32.into(), 11u32.into(), 1u32.into()).is_err());
        assert!(GroupParams::new(19u32.into(), 9u32.into(), 4u32.into()).is_err());
    }

    #[test]
    fn generation_is_deterministic_and_sized() {
        let a = GroupParams::generate(16, b"seed").unwrap();
        assert_eq!(a.bits(), 16);
        assert_eq!(a.p(), &(a.q() * 2u32 + 1u32));
        assert!(is_probable_prime(a.q()));
        let b = GroupParams::generate(64, b"seed").unwrap();
        let c = GroupParams::generate(64, b"seed").unwrap();
        assert_eq!(b.bits(), 64);
        assert_eq!(b.to_text(), c.to_text());
        assert_ne!(b.to_text(), GroupParams::generate(64, b"other").unwrap().to_text());
        assert!(b.generator().pow_uint(b.q()).is_identity());
        assert_eq!(GroupParams::generate(8, b"seed").unwrap_err(), GroupError::TooFewBits(8));
        assert_eq!(GroupParams::generate_with_budget(64, b"seed", 0).unwrap_err(), GroupError::BudgetExhausted(0));
    }

    #[test]
    fn text_form_roundtrips() {
        let grp = GroupParams::generate(32, b"text").unwrap();
        let back = GroupParams::from_text(&grp.to_text()).unwrap();
        assert_eq!(grp, back);
        assert!(GroupParams::from_text("p = 23\nq = 11\n").is_err());
        assert!(GroupParams::from_text("p = 23\nq = 11\ng = 5\n").is_err());
    }

    #[test]
    fn rfc_group_is_valid() {
        let grp = GroupParams::rfc3526_3072();
        assert_eq!(grp.bits(), 3072);
        assert!(grp.generator().pow_uint(grp.q()).is_identity());
    }

    #[test]
    fn mixing_groups_is_an_error() {
        let a = GroupParams::toy();
        let b = GroupParams::generate(16, b"x").unwrap();
        assert_eq!(a.generator().try_mul(&b.generator()), Err(GroupError::Mismatch));
        assert_eq!(a.generator().try_pow(&b.scalar_u64(2)), Err(GroupError::Mismatch));
    }

    #[test]
    fn embedding_roundtrips() {
        let grp = GroupParams::toy();
        for n in 0..11u64 {
            let e = grp.embed_u64(n).unwrap();
            assert!(grp.is_member(e.value()));
            assert_eq!(grp.unembed(&e), BigUint::from(n));
        }
        assert!(grp.embed_u64(11).is_err());
    }

    proptest! {
        #[test]
        fn closure_and_exponent_laws(a in 0u64..1_000_000, b in 0u64..1_000_000, c in 1u64..1_000_000) {
            let grp = GroupParams::generate(64, b"prop").unwrap();
            let g = grp.generator();
            let (sa, sb) = (grp.scalar_u64(a), grp.scalar_u64(b));
            let x = g.pow(&grp.scalar_u64(c));
            let y = g.pow(&sa);
            prop_assert!(grp.is_member((&x * &y).value()));
            prop_assert!(grp.is_member(x.inv().value()));
            prop_assert!(grp.is_member(x.pow(&sb).value()));
            prop_assert_eq!(g.pow(&sa).pow(&sb), g.pow(&(&sa * &sb)));
            prop_assert!(g.pow_uint(grp.q()).is_identity());
        }

        #[test]
        fn word_arithmetic_matches_big_integers(x in 1u64.., e in any::<u64>(), y in 1u64..) {
            let grp = GroupParams::generate(64, b"prop").unwrap();
            let p = grp.p();
            let a = grp.element(BigUint::from(x) * x % p).unwrap();
            let b = grp.element(BigUint::from(y) * y % p).unwrap();
            let e = BigUint::from(e) * 3u32;
            prop_assert_eq!(a.pow_uint(&e).value().clone(), a.value().modpow(&e, p));
            prop_assert_eq!((&a * &b).value().clone(), a.value() * b.value() % p);
        }
    }
}
