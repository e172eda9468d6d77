//! Re-encryption shuffle of ciphertext rows, proven by cut-and-choose.
//!
//! Every row is moved as a unit, so one permutation is shared by all of its
//! slots, while each slot gets independent randomness under its own key. The
//! prover commits to `λ` shadow shuffles of the input; a hash of everything
//! selects, per shadow, whether to open the shadow against the input or the
//! real output against the shadow. A wrong output survives with probability
//! at most `2^-λ`.

use rand::seq::SliceRandom;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use crate::elgamal::{reencrypt, Ciphertext};
use crate::group::{GroupElement, Scalar};
use crate::transcript::Transcript;

pub type Row = Vec<Ciphertext>;

/// Opening of one shadow: `target[i] = reencrypt(source[permutation[i]], randomness[i])`
/// slot by slot, where the pair is (input, shadow) or (shadow, output)
/// depending on the challenge bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadowOpening {
    pub permutation: Vec<u32>,
    pub randomness: Vec<Vec<Scalar>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixProof {
    pub shadows: Vec<Vec<Row>>,
    pub openings: Vec<ShadowOpening>,
}

/// Applies a given permutation and randomness: `out[i] = reencrypt(rows[permutation[i]])`.
pub fn shuffle_with(rows: &[Row], keys: &[GroupElement], permutation: &[u32], randomness: &[Vec<Scalar>]) -> Vec<Row> {
    permutation
        .iter()
        .zip(randomness)
        .map(|(&src, rs)| rows[src as usize].iter().zip(keys).zip(rs).map(|((c, pk), r)| reencrypt(pk, c, r)).collect())
        .collect()
}

fn random_shuffle<R: RngCore + CryptoRng>(
    rows: &[Row],
    keys: &[GroupElement],
    rng: &mut R,
) -> (Vec<Row>, Vec<u32>, Vec<Vec<Scalar>>) {
    let group = keys[0].group();
    let mut permutation: Vec<u32> = (0..rows.len() as u32).collect();
    permutation.shuffle(rng);
    let randomness: Vec<Vec<Scalar>> =
        rows.iter().map(|_| keys.iter().map(|_| group.random_scalar(rng)).collect()).collect();
    (shuffle_with(rows, keys, &permutation, &randomness), permutation, randomness)
}

fn challenge_bits(context: &[u8], input: &[Row], output: &[Row], shadows: &[Vec<Row>]) -> Vec<bool> {
    let mut t = Transcript::new("petcode/shuffle");
    t.append_bytes(b"context", context);
    let mut absorb = |label: &[u8], rows: &[Row]| {
        t.append_u64(b"rows", rows.len() as u64);
        for row in rows {
            for c in row {
                t.append_element(label, &c.a);
                t.append_element(label, &c.b);
            }
        }
    };
    absorb(b"input", input);
    absorb(b"output", output);
    for s in shadows {
        absorb(b"shadow", s);
    }
    let seed = t.digest();
    let mut bits = Vec::with_capacity(shadows.len());
    let mut block = 0u64;
    while bits.len() < shadows.len() {
        let mut t = Transcript::new("petcode/shuffle-bits");
        t.append_bytes(b"seed", &seed);
        t.append_u64(b"block", block);
        for byte in t.digest() {
            for j in 0..8 {
                bits.push(byte >> j & 1 == 1);
            }
        }
        block += 1;
    }
    bits.truncate(shadows.len());
    bits
}

/// Shuffles `rows` with a fresh secret permutation and proves it with
/// `lambda` shadows.
pub fn paired_shuffle<R: RngCore + CryptoRng>(
    rows: &[Row],
    keys: &[GroupElement],
    lambda: usize,
    context: &[u8],
    rng: &mut R,
) -> (Vec<Row>, MixProof) {
    let (output, permutation, randomness) = random_shuffle(rows, keys, rng);
    let shadow_runs: Vec<_> = (0..lambda).map(|_| random_shuffle(rows, keys, rng)).collect();
    let shadows: Vec<Vec<Row>> = shadow_runs.iter().map(|(s, _, _)| s.clone()).collect();
    let bits = challenge_bits(context, rows, &output, &shadows);
    let openings = shadow_runs
        .into_iter()
        .zip(bits)
        .map(|((_, perm_j, rand_j), bit)| {
            if !bit {
                return ShadowOpening { permutation: perm_j, randomness: rand_j };
            }
            // output[i] = reencrypt(shadow[sigma(i)]) with sigma = perm_j^-1 . perm.
            let mut inverse = vec![0u32; perm_j.len()];
            for (i, &p) in perm_j.iter().enumerate() {
                inverse[p as usize] = i as u32;
            }
            let sigma: Vec<u32> = permutation.iter().map(|&p| inverse[p as usize]).collect();
            let rho = sigma
                .iter()
                .zip(&randomness)
                .map(|(&s, r)| r.iter().zip(&rand_j[s as usize]).map(|(a, b)| a - b).collect())
                .collect();
            ShadowOpening { permutation: sigma, randomness: rho }
        })
        .collect();
    (output, MixProof { shadows, openings })
}

fn is_permutation(p: &[u32], n: usize) -> bool {
    let mut seen = vec![false; n];
    p.len() == n && p.iter().all(|&i| (i as usize) < n && !std::mem::replace(&mut seen[i as usize], true))
}

fn well_formed(rows: &[Row], n: usize, width: usize) -> bool {
    rows.len() == n && rows.iter().all(|r| r.len() == width)
}

pub fn verify_shuffle(input: &[Row], output: &[Row], keys: &[GroupElement], proof: &MixProof, context: &[u8]) -> bool {
    let (n, width) = (input.len(), keys.len());
    if !well_formed(input, n, width) || !well_formed(output, n, width) {
        return false;
    }
    if proof.shadows.len() != proof.openings.len() || proof.shadows.iter().any(|s| !well_formed(s, n, width)) {
        return false;
    }
    let bits = challenge_bits(context, input, output, &proof.shadows);
    proof.shadows.iter().zip(&proof.openings).zip(bits).all(|((shadow, opening), bit)| {
        if !is_permutation(&opening.permutation, n) || !opening.randomness.iter().all(|r| r.len() == width) {
            return false;
        }
        if opening.randomness.len() != n {
            return false;
        }
        let (source, target) = if bit { (shadow.as_slice(), output) } else { (input, shadow.as_slice()) };
        shuffle_with(source, keys, &opening.permutation, &opening.randomness) == target
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elgamal::{decrypt, encrypt, keygen};
    use crate::group::GroupParams;
    use crate::rng::seeded_rng;

    fn fixture(n: u64) -> (GroupParams, Vec<Scalar>, Vec<GroupElement>, Vec<Row>) {
        let grp = GroupParams::generate(64, b"shuffle").unwrap();
        let mut rng = seeded_rng(b"shuffle-keys");
        let k1 = keygen(&grp, &mut rng);
        let k2 = keygen(&grp, &mut rng);
        let g = grp.generator();
        let one = grp.scalar_u64(1);
        let rows = (1..=n)
            .map(|i| vec![encrypt(&k1.pk, &g.pow_u64(i), &one), encrypt(&k2.pk, &g.pow_u64(100 + i), &one)])
            .collect();
        (grp, vec![k1.sk, k2.sk], vec![k1.pk, k2.pk], rows)
    }

    fn plaintexts(sks: &[Scalar], rows: &[Row]) -> Vec<Vec<GroupElement>> {
        let mut out: Vec<Vec<GroupElement>> =
            rows.iter().map(|r| r.iter().zip(sks).map(|(c, sk)| decrypt(sk, c)).collect()).collect();
        out.sort();
        out
    }

    #[test]
    fn shuffle_preserves_plaintext_pairs_and_verifies() {
        let (_, sks, keys, rows) = fixture(12);
        let mut rng = seeded_rng(b"shuffle");
        let (out, proof) = paired_shuffle(&rows, &keys, 16, b"ctx", &mut rng);
        assert_eq!(plaintexts(&sks, &rows), plaintexts(&sks, &out));
        assert_ne!(out, rows);
        assert!(verify_shuffle(&rows, &out, &keys, &proof, b"ctx"));
        assert!(!verify_shuffle(&rows, &out, &keys, &proof, b"other"));
        // Both kinds of opening occur with 16 shadows under this seed.
        let bits = challenge_bits(b"ctx", &rows, &out, &proof.shadows);
        assert!(bits.contains(&true) && bits.contains(&false));
    }

    #[test]
    fn identity_permutation_with_zero_randomness_is_a_no_op() {
        let (grp, _, keys, rows) = fixture(5);
        let perm: Vec<u32> = (0..5).collect();
        let zero = vec![vec![grp.zero(), grp.zero()]; 5];
        assert_eq!(shuffle_with(&rows, &keys, &perm, &zero), rows);
    }

    #[test]
    fn tampered_outputs_and_proofs_are_rejected() {
        let (grp, _, keys, rows) = fixture(6);
        let mut rng = seeded_rng(b"shuffle-tamper");
        let (out, proof) = paired_shuffle(&rows, &keys, 16, b"", &mut rng);
        for i in 0..6 {
            for s in 0..2 {
                let mut bad = out.clone();
                bad[i][s].b = &bad[i][s].b * &grp.generator();
                assert!(!verify_shuffle(&rows, &bad, &keys, &proof, b""));
            }
        }
        let mut bad = proof.clone();
        bad.shadows[3][0][1].a = &bad.shadows[3][0][1].a * &grp.generator();
        assert!(!verify_shuffle(&rows, &out, &keys, &bad, b""));
        let mut bad = proof.clone();
        bad.openings[0].permutation.swap(0, 1);
        assert!(!verify_shuffle(&rows, &out, &keys, &bad, b""));
        let mut bad = proof;
        bad.openings.pop();
        assert!(!verify_shuffle(&rows, &out, &keys, &bad, b""));
    }

    #[test]
    fn swapping_slots_across_rows_breaks_the_pairing() {
        let (_, _, keys, rows) = fixture(4);
        let mut rng = seeded_rng(b"shuffle-split");
        let (mut out, proof) = paired_shuffle(&rows, &keys, 16, b"", &mut rng);
        let tmp = out[0][1].clone();
        out[0][1] = out[1][1].clone();
        out[1][1] = tmp;
        assert!(!verify_shuffle(&rows, &out, &keys, &proof, b""));
    }
}
