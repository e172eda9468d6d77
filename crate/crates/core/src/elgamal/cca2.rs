//! Cramer–Shoup encryption over `G`.

use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::ElGamalError;
use crate::group::{GroupElement, GroupParams, Scalar};
use crate::metrics::{self, Primitive};
use crate::transcript::Transcript;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CramerShoupPublicKey {
    pub g2: GroupElement,
    pub c: GroupElement,
    pub d: GroupElement,
    pub h: GroupElement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CramerShoupSecretKey {
    x1: Scalar,
    x2: Scalar,
    y1: Scalar,
    y2: Scalar,
    z: Scalar,
    pub public: CramerShoupPublicKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CramerShoupCiphertext {
    pub u1: GroupElement,
    pub u2: GroupElement,
    pub e: GroupElement,
    pub v: GroupElement,
}

impl CramerShoupSecretKey {
    pub fn generate<R: RngCore + CryptoRng>(group: &GroupParams, rng: &mut R) -> Self {
        let g1 = group.generator();
        // g2 = g1^w for a discarded w.
        let g2 = g1.pow(&group.random_nonzero_scalar(rng));
        let mut s = || group.random_scalar(rng);
        let (x1, x2, y1, y2, z) = (s(), s(), s(), s(), s());
        let public =
            CramerShoupPublicKey { c: &g1.pow(&x1) * &g2.pow(&x2), d: &g1.pow(&y1) * &g2.pow(&y2), h: g1.pow(&z), g2 };
        CramerShoupSecretKey { x1, x2, y1, y2, z, public }
    }
}

/// The hash input binds the label, so a ciphertext cannot be transplanted
/// to another context.
fn alpha(label: &[u8], u1: &GroupElement, u2: &GroupElement, e: &GroupElement) -> Scalar {
    let mut t = Transcript::new("petcode/cramer-shoup");
    t.append_bytes(b"label", label);
    t.append_element(b"u1", u1);
    t.append_element(b"u2", u2);
    t.append_element(b"e", e);
    t.challenge(u1.group())
}

pub fn cca2_encrypt<R: RngCore + CryptoRng>(
    pk: &CramerShoupPublicKey,
    m: &GroupElement,
    label: &[u8],
    rng: &mut R,
) -> CramerShoupCiphertext {
    let group = pk.h.group();
    let r = group.random_scalar(rng);
    let u1 = group.generator().pow(&r);
    let u2 = pk.g2.pow(&r);
    let e = m * &pk.h.pow(&r);
    let a = alpha(label, &u1, &u2, &e);
    let v = &pk.c.pow(&r) * &pk.d.pow(&(&r * &a));
    CramerShoupCiphertext { u1, u2, e, v }
}

/// Rejects any ciphertext whose validity tag does not match. Counts as one
/// CCA2 decryption.
pub fn cca2_decrypt(
    sk: &CramerShoupSecretKey,
    ct: &CramerShoupCiphertext,
    label: &[u8],
) -> Result<GroupElement, ElGamalError> {
    metrics::record(Primitive::Cca2Decrypt);
    let a = alpha(label, &ct.u1, &ct.u2, &ct.e);
    let check = &ct.u1.pow(&(&sk.x1 + &(&sk.y1 * &a))) * &ct.u2.pow(&(&sk.x2 + &(&sk.y2 * &a)));
    if check != ct.v {
        return Err(ElGamalError::Integrity);
    }
    Ok(&ct.e / &ct.u1.pow(&sk.z))
}

/// Packs a bit vector (bit `i` is `bits[i]`) into a group element.
pub fn bits_to_element(group: &GroupParams, bits: &[bool]) -> Option<GroupElement> {
    let mut n = BigUint::default();
    for (i, &b) in bits.iter().enumerate() {
        if b {
            n.set_bit(i as u64, true);
        }
    }
    group.embed(&n).ok()
}

pub fn element_to_bits(group: &GroupParams, element: &GroupElement, len: usize) -> Option<Vec<bool>> {
    let n = group.unembed(element);
    if n.bits() > len as u64 {
        return None;
    }
    Some((0..len).map(|i| n.bit(i as u64)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    #[test]
    fn roundtrip_and_rejection() {
        let grp = GroupParams::generate(64, b"cs").unwrap();
        let mut rng = seeded_rng(b"cs");
        let sk = CramerShoupSecretKey::generate(&grp, &mut rng);
        let m = grp.generator().pow_u64(99);
        let ct = cca2_encrypt(&sk.public, &m, b"voter-1", &mut rng);
        assert_eq!(cca2_decrypt(&sk, &ct, b"voter-1").unwrap(), m);
        assert_eq!(cca2_decrypt(&sk, &ct, b"voter-2"), Err(ElGamalError::Integrity));

        let other = cca2_encrypt(&sk.public, &m, b"voter-1", &mut rng);
        assert_ne!(ct, other);

        let mut mauled = ct.clone();
        mauled.e = &mauled.e * &grp.generator();
        assert_eq!(cca2_decrypt(&sk, &mauled, b"voter-1"), Err(ElGamalError::Integrity));
        // Flip the lowest bit of u2; if the result leaves the group it cannot even be built.
        let flipped = ct.u2.value() ^ BigUint::from(1u32);
        if let Ok(u2) = grp.element(flipped) {
            let mauled = CramerShoupCiphertext { u2, ..ct.clone() };
            assert_eq!(cca2_decrypt(&sk, &mauled, b"voter-1"), Err(ElGamalError::Integrity));
        }
    }

    #[test]
    fn bit_vectors_pack_into_the_toy_group() {
        let grp = GroupParams::toy();
        for n in 0..8u32 {
            let bits: Vec<bool> = (0..3).map(|i| n >> i & 1 == 1).collect();
            let e = bits_to_element(&grp, &bits).unwrap();
            assert_eq!(element_to_bits(&grp, &e, 3).unwrap(), bits);
        }
        assert!(bits_to_element(&grp, &[true; 4]).is_none());
    }
}
