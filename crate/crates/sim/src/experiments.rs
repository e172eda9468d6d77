//! The cast-as-intended and privacy experiments.

use std::collections::BTreeSet;
use std::time::Instant;

use petcode_core::board::{EntryKind, PetRecord, SharesRecord};
use petcode_core::codegen::CodeTableRow;
use petcode_core::elgamal::{combine_shares, decrypt, homomorphic_mul, reconstruct_secret, Ciphertext};
use petcode_core::protocol::Ballot;
use petcode_core::rng::derive_rng;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::config::{ConfigError, ElectionConfig};
use crate::election::{run_election, setup, Election, HarnessError, Platform, VoterPlan};

/// Confidence level of the binomial slack.
pub const CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub trials: u64,
    pub successes: u64,
    pub observed_rate: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    pub runtime_secs: f64,
    pub details: serde_json::Value,
}

/// Upper bound on the platform's success probability: one over the number
/// of codes it has not seen.
pub fn cai_bound(m: u64, n: usize, corrupted: usize) -> f64 {
    let unseen = m.saturating_sub((n + corrupted) as u64);
    if unseen <= 1 {
        1.0
    } else {
        1.0 / unseen as f64
    }
}

/// Largest success count still consistent with `bound` at the configured
/// confidence: the `CONFIDENCE` quantile of `Binomial(trials, bound)`.
pub fn binomial_threshold(trials: u64, bound: f64) -> u64 {
    if bound >= 1.0 {
        return trials;
    }
    Binomial::new(bound, trials).expect("valid binomial").inverse_cdf(CONFIDENCE)
}

/// Runs `trials` elections. In each, a corrupted platform casts the flipped
/// choice on the first option of the target voter, adjusts `b̃` so the PET
/// passes, and replaces the returned code with a uniform guess from the codes
/// it has not seen: the other voters' returned codes and both codes of the
/// corrupted voters' sheets are excluded.
pub fn experiment_cai(config: &ElectionConfig, trials: u64) -> Result<ExperimentReport, HarnessError> {
    config.validate_for_experiment()?;
    let start = Instant::now();
    let mut successes = 0;
    let mut pool_sizes = BTreeSet::new();
    for t in 0..trials {
        let (won, pool) = cai_trial(config, t)?;
        successes += won as u64;
        pool_sizes.insert(pool);
    }
    let bound = cai_bound(config.code_space, config.voters, config.corrupted_voters);
    let threshold = binomial_threshold(trials, bound);
    let observed_rate = successes as f64 / trials.max(1) as f64;
    Ok(ExperimentReport {
        name: "cai".into(),
        trials,
        successes,
        observed_rate,
        bound,
        slack: threshold as f64 / trials.max(1) as f64 - bound,
        pass: successes <= threshold,
        runtime_secs: start.elapsed().as_secs_f64(),
        details: serde_json::json!({
            "m": config.code_space,
            "n": config.voters,
            "corrupted_voters": config.corrupted_voters,
            "delivery": config.delivery,
            "threshold": threshold,
            "pool_sizes": pool_sizes,
        }),
    })
}

/// One trial: returns whether the voter accepted the forged code and the
/// size of the pool the guess came from.
fn cai_trial(config: &ElectionConfig, trial: u64) -> Result<(bool, usize), HarnessError> {
    let config = ElectionConfig { seed: format!("{}/cai/{trial}", config.seed), ..config.clone() };
    let mut rng = derive_rng(config.seed.as_bytes(), "adversary", 0);
    let authorities = setup(&config)?;
    let flips = authorities.honest_flips();
    let mut election = authorities.register(&flips)?;
    let k = config.options;

    let mut seen: BTreeSet<u64> = BTreeSet::new();
    for sheet in &election.sheets[1..=config.corrupted_voters] {
        let (no, yes) = sheet.return_codes[0];
        seen.extend([no, yes]);
    }
    for voter in 1..config.voters {
        let choices: Vec<bool> = (0..k).map(|_| rng.gen()).collect();
        let outcome = election.cast(voter, &choices, Platform::Honest)?;
        seen.insert(*outcome.received_codes.first().ok_or_else(|| lost(&outcome.voter_id))?);
    }

    let choices: Vec<bool> = (0..k).map(|_| rng.gen()).collect();
    let mut pool_size = 0;
    let mut forge = |codes: &[u64]| {
        let mut seen = seen.clone();
        seen.insert(codes[0]);
        let pool: Vec<u64> = (1..=config.code_space).filter(|c| !seen.contains(c)).collect();
        pool_size = pool.len();
        let mut forged = codes.to_vec();
        forged[0] = *pool.choose(&mut rng).expect("m > 2n leaves unseen codes");
        forged
    };
    let outcome = election.cast_with(0, &choices, Platform::FlipOption(0), Some(&mut forge))?;
    Ok((outcome.accepted, pool_size))
}

fn lost(voter: &str) -> HarnessError {
    HarnessError::State(format!("honest voter {voter} received no codes"))
}

/// A distinguisher sees one finished election and outputs a bit.
struct Distinguisher {
    name: &'static str,
    /// Whether it respects the assumptions the privacy claim rests on.
    honest: bool,
    run: fn(&Election, &Pair) -> Result<bool, HarnessError>,
}

/// The two voters whose choices are swapped between the variants.
struct Pair {
    a: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinguisherResult {
    pub name: String,
    pub honest: bool,
    pub p0: f64,
    pub p1: f64,
    pub advantage: f64,
    pub sigma: f64,
    pub pass: bool,
}

fn session_entry<T: serde::de::DeserializeOwned>(
    e: &Election,
    kind: EntryKind,
    voter: &str,
    id: impl Fn(&T) -> &str,
) -> Result<T, HarnessError> {
    for entry in e.board.read_all(Some(kind)) {
        let record: T = entry.decode(&e.public.group)?;
        if id(&record) == voter {
            return Ok(record);
        }
    }
    Err(HarnessError::State(format!("no {kind} entry for {voter}")))
}

fn voter_id(e: &Election, p: &Pair) -> String {
    e.sheets[p.a].voter_id.clone()
}

/// Finds `b̃` by matching the published `e*` against the products of the
/// public table cells.
fn recover_btilde(row: &CodeTableRow, e_star: &Ciphertext) -> Option<Vec<bool>> {
    let k = row.cells.len();
    (0u64..1 << k).find_map(|mask| {
        let bits: Vec<bool> = (0..k).map(|i| mask >> i & 1 == 1).collect();
        let product = row
            .cells
            .iter()
            .zip(&bits)
            .map(|(c, &b)| c[b as usize].choice.clone())
            .reduce(|x, y| homomorphic_mul(&x, &y))?;
        (product == *e_star).then_some(bits)
    })
}

fn published_btilde(e: &Election, p: &Pair) -> Result<Vec<bool>, HarnessError> {
    let voter = voter_id(e, p);
    let record: PetRecord = session_entry(e, EntryKind::Pet, &voter, |r: &PetRecord| &r.voter_id)?;
    let row: CodeTableRow = session_entry(e, EntryKind::CodeTable, &voter, |r: &CodeTableRow| &r.voter_id)?;
    recover_btilde(&row, &record.e_star).ok_or_else(|| HarnessError::State("e* matches no cell product".into()))
}

/// Compares the ballot entry hashes of the two swapped voters.
fn board_order(e: &Election, p: &Pair) -> Result<bool, HarnessError> {
    let hash = |i: usize| {
        let id = &e.sheets[i].voter_id;
        e.board
            .read_all(Some(EntryKind::Ballot))
            .find(|entry| entry.decode::<Ballot>(&e.public.group).is_ok_and(|b| &b.voter_id == id))
            .map(|entry| entry.entry_hash)
            .ok_or_else(|| HarnessError::State(format!("no ballot of {id}")))
    };
    Ok(hash(p.a)? < hash(p.a + 1)?)
}

/// First bit of `b̃` of voter A, recovered from the public table.
fn table_bit(e: &Election, p: &Pair) -> Result<bool, HarnessError> {
    Ok(published_btilde(e, p)?[0])
}

/// Whether the fully blinded PET quotient of voter A has a small first
/// component.
fn pet_blinding(e: &Election, p: &Pair) -> Result<bool, HarnessError> {
    let voter = voter_id(e, p);
    let record: PetRecord = session_entry(e, EntryKind::Pet, &voter, |r: &PetRecord| &r.voter_id)?;
    let blinded = record.transcript.blinded().ok_or_else(|| HarnessError::State("empty PET".into()))?;
    let half = e.public.group.p() >> 1u32;
    Ok(*blinded.a.value() < half)
}

/// Whether voter A's first returned code, derived from the published code
/// shares, lies in the lower half of the code space.
fn returned_code(e: &Election, p: &Pair) -> Result<bool, HarnessError> {
    let voter = voter_id(e, p);
    let shares: SharesRecord = session_entry(e, EntryKind::Shares, &voter, |r: &SharesRecord| &r.voter_id)?;
    let record: PetRecord = session_entry(e, EntryKind::Pet, &voter, |r: &PetRecord| &r.voter_id)?;
    let product = combine_shares(&e.public.code_key, &shares.shares, &record.c_star)
        .map_err(|err| HarnessError::State(err.to_string()))?;
    let codes =
        e.server.encodings().codes.decode_codes(&product).map_err(|err| HarnessError::State(err.to_string()))?;
    Ok(codes[0] * 2 <= e.config.code_space)
}

/// Holds voter A's sheet: the flip bits turn the public `b̃` into the vote.
fn sheet_access(e: &Election, p: &Pair) -> Result<bool, HarnessError> {
    Ok(published_btilde(e, p)?[0] ^ e.sheets[p.a].flip_bits[0])
}

/// Holds `t` election key shares and decrypts voter A's ballot.
fn threshold_shares(e: &Election, p: &Pair) -> Result<bool, HarnessError> {
    let t = e.public.election_key.threshold as usize;
    let shares: Vec<_> = e.tellers[..t].iter().map(|t| t.election.clone()).collect();
    let sk = reconstruct_secret(&shares).map_err(|err| HarnessError::State(err.to_string()))?;
    let voter = voter_id(e, p);
    let ballot: Ballot = session_entry(e, EntryKind::Ballot, &voter, |b: &Ballot| &b.voter_id)?;
    let choices = e
        .server
        .encodings()
        .options
        .decode_choice(&decrypt(&sk, &ballot.w))
        .map_err(|err| HarnessError::State(err.to_string()))?;
    Ok(choices[0])
}

const DISTINGUISHERS: [Distinguisher; 6] = [
    Distinguisher { name: "board-order", honest: true, run: board_order },
    Distinguisher { name: "table-flip-bit", honest: true, run: table_bit },
    Distinguisher { name: "pet-blinding", honest: true, run: pet_blinding },
    Distinguisher { name: "returned-code", honest: true, run: returned_code },
    Distinguisher { name: "sheet-access", honest: false, run: sheet_access },
    Distinguisher { name: "threshold-shares", honest: false, run: threshold_shares },
];

/// Runs `trials` pairs of elections that differ only in the swapped choices
/// of voters A and B: in `P_0` A votes yes and B no on every option, in `P_1`
/// the reverse, and reports every distinguisher's advantage. Honest
/// distinguishers pass within two standard errors of zero; the ones that
/// break an assumption must exceed 0.9.
pub fn experiment_privacy(config: &ElectionConfig, trials: u64) -> Result<ExperimentReport, HarnessError> {
    config.validate_for_experiment()?;
    if config.voters < 2 {
        return Err(ConfigError::Invalid("the privacy game needs two honest voters".into()).into());
    }
    let start = Instant::now();
    let pair = Pair { a: 0 };
    let mut diffs: Vec<Vec<f64>> = vec![Vec::new(); DISTINGUISHERS.len()];
    let mut ones = vec![[0u64; 2]; DISTINGUISHERS.len()];
    for t in 0..trials {
        let config = ElectionConfig { seed: format!("{}/privacy/{t}", config.seed), ..config.clone() };
        let mut rng = derive_rng(config.seed.as_bytes(), "choices", 0);
        let plans: Vec<VoterPlan> = (0..config.voters)
            .map(|_| VoterPlan {
                choices: (0..config.options).map(|_| rng.gen()).collect(),
                platform: Platform::Honest,
            })
            .collect();
        let mut outputs = [[false; 2]; DISTINGUISHERS.len()];
        for world in 0..2 {
            let mut plans = plans.clone();
            plans[0].choices = vec![world == 0; config.options];
            plans[1].choices = vec![world == 1; config.options];
            let out = run_election(&config, &plans)?;
            for (d, o) in DISTINGUISHERS.iter().zip(&mut outputs) {
                o[world] = (d.run)(&out.election, &pair)?;
            }
        }
        for ((o, d), n) in outputs.iter().zip(&mut diffs).zip(&mut ones) {
            d.push(o[0] as u8 as f64 - o[1] as u8 as f64);
            n[0] += o[0] as u64;
            n[1] += o[1] as u64;
        }
    }

    let n = trials.max(1) as f64;
    let results: Vec<DistinguisherResult> = DISTINGUISHERS
        .iter()
        .zip(&diffs)
        .zip(&ones)
        .map(|((d, diff), count)| {
            let mean = diff.iter().sum::<f64>() / n;
            let var = diff.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            let sigma = (var / n).sqrt();
            let advantage = mean.abs();
            DistinguisherResult {
                name: d.name.into(),
                honest: d.honest,
                p0: count[0] as f64 / n,
                p1: count[1] as f64 / n,
                advantage,
                sigma,
                pass: if d.honest { advantage <= 2.0 * sigma } else { advantage > 0.9 },
            }
        })
        .collect();
    let honest = results.iter().filter(|r| r.honest);
    let worst =
        honest.clone().max_by(|a, b| (a.advantage / a.sigma.max(1e-12)).total_cmp(&(b.advantage / b.sigma.max(1e-12))));
    Ok(ExperimentReport {
        name: "privacy".into(),
        trials,
        successes: results.iter().filter(|r| r.pass).count() as u64,
        observed_rate: honest.map(|r| r.advantage).fold(0.0, f64::max),
        bound: 0.0,
        slack: worst.map_or(0.0, |r| 2.0 * r.sigma),
        pass: results.iter().all(|r| r.pass),
        runtime_secs: start.elapsed().as_secs_f64(),
        details: serde_json::to_value(&results).expect("results serialize"),
    })
}
