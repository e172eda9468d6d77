//! Per-record micro-mix: re-encrypt a record, optionally swapping its two
//! cells, and prove that the output re-encrypts either the record or its
//! swap.
//!
//! Each branch of the disjunction holds one statement per key. A statement
//! folds all ciphertexts under that key with hash-derived coefficients, so it
//! is a single Chaum–Pedersen relation over `(g, pk)` whose witness is the
//! matching combination of re-encryption factors.

use rand::{CryptoRng, RngCore};

use super::{KeySet, Record};
use crate::elgamal::{reencrypt, Ciphertext};
use crate::group::{GroupElement, GroupParams, Scalar};
use crate::proofs::{Branch, OrProof};
use crate::transcript::Transcript;

const MICRO_MIX_DOMAIN: &str = "petcode/micro-mix";

/// Positions of the eight ciphertexts grouped by key: printing, election, code.
const DOMAINS: [&[usize]; 3] = [&[0, 1, 2, 3], &[4, 6], &[5, 7]];

fn slot_keys(keys: &KeySet) -> [&GroupElement; 8] {
    let (p, e, c) = (&keys.printing, &keys.election, &keys.code);
    [p, p, p, p, e, c, e, c]
}

fn coefficients(group: &GroupParams, input: &Record, output: &Record, context: &[u8]) -> Vec<Scalar> {
    let mut t = Transcript::new("petcode/micro-mix-batch");
    t.append_bytes(b"context", context);
    for c in input.ciphertexts().into_iter().chain(output.ciphertexts()) {
        t.append_element(b"a", &c.a);
        t.append_element(b"b", &c.b);
    }
    let seed = t.digest();
    (0..8u64)
        .map(|i| {
            let mut t = Transcript::new("petcode/micro-mix-coefficient");
            t.append_bytes(b"seed", &seed);
            t.append_u64(b"index", i);
            t.challenge(group)
        })
        .collect()
}

fn branch(candidate: &Record, output: &Record, keys: &KeySet, e: &[Scalar]) -> Branch {
    let group = keys.election.group();
    let g = group.generator();
    let cand = candidate.ciphertexts();
    let out = output.ciphertexts();
    let domain_keys = [&keys.printing, &keys.election, &keys.code];
    DOMAINS
        .iter()
        .zip(domain_keys)
        .map(|(slots, pk)| {
            let (mut a, mut b) = (group.identity(), group.identity());
            for &i in *slots {
                a = &a * &(&out[i].a / &cand[i].a).pow(&e[i]);
                b = &b * &(&out[i].b / &cand[i].b).pow(&e[i]);
            }
            vec![(g.clone(), a), (pk.clone(), b)]
        })
        .collect()
}

/// Re-encrypts `input`, swapping its cells if `flip`.
pub fn micro_mix<R: RngCore + CryptoRng>(
    input: &Record,
    keys: &KeySet,
    flip: bool,
    context: &[u8],
    rng: &mut R,
) -> (Record, OrProof) {
    let group = keys.election.group().clone();
    let candidate = if flip { input.swapped() } else { input.clone() };
    let randomness: Vec<Scalar> = (0..8).map(|_| group.random_scalar(rng)).collect();
    let outputs: Vec<Ciphertext> = candidate
        .ciphertexts()
        .into_iter()
        .zip(slot_keys(keys))
        .zip(&randomness)
        .map(|((c, pk), r)| reencrypt(pk, c, r))
        .collect();
    let output = Record::from_ciphertexts(outputs);
    let e = coefficients(&group, input, &output, context);
    let witnesses: Vec<Scalar> = DOMAINS
        .iter()
        .map(|slots| slots.iter().fold(group.zero(), |acc, &i| &acc + &(&e[i] * &randomness[i])))
        .collect();
    let branches = [branch(input, &output, keys, &e), branch(&input.swapped(), &output, keys, &e)];
    let proof = OrProof::prove(MICRO_MIX_DOMAIN, context, &branches, flip as usize, &witnesses, rng);
    (output, proof)
}

pub fn verify_micro_mix(input: &Record, output: &Record, keys: &KeySet, proof: &OrProof, context: &[u8]) -> bool {
    let group = keys.election.group();
    let e = coefficients(group, input, output, context);
    let branches = [branch(input, output, keys, &e), branch(&input.swapped(), output, keys, &e)];
    proof.verify(MICRO_MIX_DOMAIN, context, &branches)
}
