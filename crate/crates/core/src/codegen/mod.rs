//! Verifiable generation of code tables and ballot sheets.
//!
//! 1. For each option, a deterministic list of `(cenc δ_j(c), penc c)` for
//!    every code `c`, all with randomness one.
//! 2. Each teller in turn shuffles the list as pairs.
//! 3. Consecutive shuffled pairs are organised into per-voter records.
//! 4. Each teller in turn micro-mixes every record, possibly swapping its
//!    two cells.
//! 5. The election and code halves form the public table; the printing
//!    facility decrypts the printing half into ballot sheets.

mod micromix;
mod shuffle;

pub use micromix::{micro_mix, verify_micro_mix};
pub use shuffle::{paired_shuffle, shuffle_with, verify_shuffle, MixProof, Row, ShadowOpening};

use std::fmt::Write as _;

use rand::{CryptoRng, Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::elgamal::{decrypt, encrypt, encrypt_random, Ciphertext};
use crate::encoding::{CodeEncoding, EncodingError, OptionEncoding};
use crate::group::{GroupElement, GroupParams, Scalar};
use crate::transcript;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodegenError {
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error("{needed} codes per option are needed but m = {m}")]
    InsufficientCodes { m: u64, needed: u64 },
    #[error("options of the two encodings disagree")]
    Mismatch,
    #[error("verification failed: {0}")]
    Invalid(String),
    #[error("printing facility could not read a record: {0}")]
    Printing(String),
    #[error("malformed ballot sheet: {0}")]
    Sheet(String),
}

/// Option and code encodings of one election.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encodings {
    pub options: OptionEncoding,
    pub codes: CodeEncoding,
}

impl Encodings {
    pub fn new(options: OptionEncoding, codes: CodeEncoding) -> Result<Self, CodegenError> {
        if options.k() != codes.k() {
            return Err(CodegenError::Mismatch);
        }
        Ok(Encodings { options, codes })
    }

    pub fn k(&self) -> usize {
        self.options.k()
    }

    pub fn group(&self) -> &GroupParams {
        self.codes.group()
    }
}

/// Election (`pk_e`), code (`pk_c`) and printing (`pk_p`) public keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeySet {
    pub election: GroupElement,
    pub code: GroupElement,
    pub printing: GroupElement,
}

/// Printing-facility plaintexts are integers embedded into `G`.
pub fn printing_encode(group: &GroupParams, n: u64) -> GroupElement {
    group.embed_u64(n).expect("printing plaintexts are below q")
}

pub fn printing_decode(m: &GroupElement) -> Option<u64> {
    let n = m.group().unembed(m);
    let digits = n.to_u64_digits();
    match digits.len() {
        0 => Some(0),
        1 => Some(digits[0]),
        _ => None,
    }
}

/// One `(choice, code)` half of a record together with its printing copy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    /// `penc 0` for the `no` cell, `penc 1` for the `yes` cell.
    pub print_choice: Ciphertext,
    pub print_code: Ciphertext,
    pub choice: Ciphertext,
    pub code: Ciphertext,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub cells: [Cell; 2],
}

impl Record {
    /// Printing halves first, then election/code halves, cell 0 before cell 1
    /// within each.
    pub fn ciphertexts(&self) -> [&Ciphertext; 8] {
        let [c0, c1] = &self.cells;
        [&c0.print_choice, &c0.print_code, &c1.print_choice, &c1.print_code, &c0.choice, &c0.code, &c1.choice, &c1.code]
    }

    /// Inverse of [`ciphertexts`](Self::ciphertexts). Panics unless given eight.
    pub fn from_ciphertexts(cts: Vec<Ciphertext>) -> Self {
        let [pc0, pk0, pc1, pk1, ch0, cd0, ch1, cd1]: [Ciphertext; 8] = cts.try_into().expect("eight ciphertexts");
        Record {
            cells: [
                Cell { print_choice: pc0, print_code: pk0, choice: ch0, code: cd0 },
                Cell { print_choice: pc1, print_code: pk1, choice: ch1, code: cd1 },
            ],
        }
    }

    pub fn swapped(&self) -> Record {
        Record { cells: [self.cells[1].clone(), self.cells[0].clone()] }
    }
}

/// Step 1: `(cenc δ_j(c), penc c)` for `c = 1..=m`, randomness one.
pub fn generate_code_lists(option: usize, enc: &Encodings, keys: &KeySet) -> Result<Vec<Row>, CodegenError> {
    let group = enc.group();
    let one = group.scalar_u64(1);
    (1..=enc.codes.m())
        .map(|c| {
            Ok(vec![
                encrypt(&keys.code, &enc.codes.delta(option, c)?, &one),
                encrypt(&keys.printing, &printing_encode(group, c), &one),
            ])
        })
        .collect()
}

fn list_keys(keys: &KeySet) -> Vec<GroupElement> {
    vec![keys.code.clone(), keys.printing.clone()]
}

/// Step 3: one record per voter and option from the shuffled lists, using
/// rows `2i` and `2i + 1` for voter `i`.
pub fn assemble_records(
    streams: &[Vec<Row>],
    enc: &Encodings,
    keys: &KeySet,
    voters: usize,
) -> Result<Vec<Vec<Record>>, CodegenError> {
    let group = enc.group();
    let needed = 2 * voters as u64;
    if enc.codes.m() < needed {
        return Err(CodegenError::InsufficientCodes { m: enc.codes.m(), needed });
    }
    if streams.len() != enc.k() || streams.iter().any(|s| (s.len() as u64) < needed) {
        return Err(CodegenError::Invalid("code streams do not match the encodings".into()));
    }
    let one = group.scalar_u64(1);
    let print0 = encrypt(&keys.printing, &printing_encode(group, 0), &one);
    let print1 = encrypt(&keys.printing, &printing_encode(group, 1), &one);
    let no = encrypt(&keys.election, &group.identity(), &one);
    (0..voters)
        .map(|i| {
            streams
                .iter()
                .enumerate()
                .map(|(j, rows)| {
                    let yes = encrypt(&keys.election, &enc.options.gamma(j + 1)?, &one);
                    let (first, second) = (&rows[2 * i], &rows[2 * i + 1]);
                    Ok(Record {
                        cells: [
                            Cell {
                                print_choice: print0.clone(),
                                print_code: first[1].clone(),
                                choice: no.clone(),
                                code: first[0].clone(),
                            },
                            Cell {
                                print_choice: print1.clone(),
                                print_code: second[1].clone(),
                                choice: yes,
                                code: second[0].clone(),
                            },
                        ],
                    })
                })
                .collect()
        })
        .collect()
}

/// How a teller picks its micro-mix bits. Corrupted tellers may fix them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlipStrategy {
    Random,
    Fixed(bool),
    /// Bit for record `voter * k + option - 1`; missing entries are `false`.
    Pattern(Vec<bool>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShuffleStage {
    pub teller: u32,
    pub output: Vec<Row>,
    pub proof: MixProof,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionShuffle {
    pub option: usize,
    pub input: Vec<Row>,
    pub stages: Vec<ShuffleStage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixStage {
    pub teller: u32,
    pub output: Record,
    pub proof: crate::proofs::OrProof,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordMix {
    pub voter: usize,
    pub option: usize,
    pub input: Record,
    pub stages: Vec<MixStage>,
}

impl RecordMix {
    pub fn output(&self) -> &Record {
        self.stages.last().map_or(&self.input, |s| &s.output)
    }
}

/// Everything the tellers publish while generating codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodegenTranscript {
    pub voters: Vec<String>,
    pub lambda: usize,
    pub shuffles: Vec<OptionShuffle>,
    /// Voter-major: record `(i, j)` sits at `i * k + j - 1`.
    pub records: Vec<RecordMix>,
}

fn shuffle_context(option: usize, teller: u32) -> Vec<u8> {
    let mut v = (option as u64).to_be_bytes().to_vec();
    v.extend(teller.to_be_bytes());
    v
}

fn mix_context(voter: usize, option: usize, teller: u32) -> Vec<u8> {
    let mut v = (voter as u64).to_be_bytes().to_vec();
    v.extend((option as u64).to_be_bytes());
    v.extend(teller.to_be_bytes());
    v
}

/// Steps 1–4 with teller `i + 1` following `flips[i]`.
pub fn run_codegen<R: RngCore + CryptoRng>(
    voters: &[String],
    enc: &Encodings,
    keys: &KeySet,
    lambda: usize,
    flips: &[FlipStrategy],
    rng: &mut R,
) -> Result<CodegenTranscript, CodegenError> {
    let list_keys = list_keys(keys);
    let mut shuffles = Vec::with_capacity(enc.k());
    for option in 1..=enc.k() {
        let input = generate_code_lists(option, enc, keys)?;
        let mut current = input.clone();
        let mut stages = Vec::with_capacity(flips.len());
        for teller in 1..=flips.len() as u32 {
            let (output, proof) = paired_shuffle(&current, &list_keys, lambda, &shuffle_context(option, teller), rng);
            current = output.clone();
            stages.push(ShuffleStage { teller, output, proof });
        }
        shuffles.push(OptionShuffle { option, input, stages });
    }
    let streams: Vec<Vec<Row>> =
        shuffles.iter().map(|s| s.stages.last().map_or(s.input.clone(), |t| t.output.clone())).collect();
    let assembled = assemble_records(&streams, enc, keys, voters.len())?;
    let mut records = Vec::with_capacity(voters.len() * enc.k());
    for (voter, row) in assembled.into_iter().enumerate() {
        for (j, input) in row.into_iter().enumerate() {
            let mut current = input.clone();
            let mut stages = Vec::with_capacity(flips.len());
            for (t, strategy) in flips.iter().enumerate() {
                let teller = t as u32 + 1;
                let flip = match strategy {
                    FlipStrategy::Random => rng.gen(),
                    FlipStrategy::Fixed(b) => *b,
                    FlipStrategy::Pattern(bits) => bits.get(voter * enc.k() + j).copied().unwrap_or(false),
                };
                let (output, proof) = micro_mix(&current, keys, flip, &mix_context(voter, j + 1, teller), rng);
                current = output.clone();
                stages.push(MixStage { teller, output, proof });
            }
            records.push(RecordMix { voter, option: j + 1, input, stages });
        }
    }
    Ok(CodegenTranscript { voters: voters.to_vec(), lambda, shuffles, records })
}

/// Replays the whole pipeline: recomputes the deterministic lists and
/// records, checks every shuffle and micro-mix proof, and requires each of
/// the tellers `1..=tellers` to have acted exactly once, in order, at every
/// stage.
pub fn verify_codegen(
    transcript: &CodegenTranscript,
    enc: &Encodings,
    keys: &KeySet,
    tellers: u32,
) -> Result<(), CodegenError> {
    let fail = |msg: String| Err(CodegenError::Invalid(msg));
    let k = enc.k();
    if transcript.shuffles.len() != k {
        return fail(format!("expected {k} option shuffles, found {}", transcript.shuffles.len()));
    }
    let list_keys = list_keys(keys);
    let mut streams = Vec::with_capacity(k);
    for (j, shuffle) in transcript.shuffles.iter().enumerate() {
        let option = j + 1;
        if shuffle.option != option || shuffle.input != generate_code_lists(option, enc, keys)? {
            return fail(format!("code list of option {option} differs from the deterministic one"));
        }
        if shuffle.stages.len() != tellers as usize {
            return fail(format!("option {option} has {} shuffle stages", shuffle.stages.len()));
        }
        let mut current = &shuffle.input;
        for (t, stage) in shuffle.stages.iter().enumerate() {
            if stage.teller != t as u32 + 1 || stage.proof.shadows.len() != transcript.lambda {
                return fail(format!("option {option}: unexpected shuffle stage {t}"));
            }
            if !verify_shuffle(current, &stage.output, &list_keys, &stage.proof, &shuffle_context(option, stage.teller))
            {
                return fail(format!("option {option}: shuffle proof of teller {} rejected", stage.teller));
            }
            current = &stage.output;
        }
        streams.push(current.clone());
    }
    let n = transcript.voters.len();
    let assembled = assemble_records(&streams, enc, keys, n)?;
    if transcript.records.len() != n * k {
        return fail(format!("expected {} records, found {}", n * k, transcript.records.len()));
    }
    for (idx, mix) in transcript.records.iter().enumerate() {
        let (voter, option) = (idx / k, idx % k + 1);
        if mix.voter != voter || mix.option != option || mix.input != assembled[voter][option - 1] {
            return fail(format!("record ({voter}, {option}) was not assembled from the shuffled lists"));
        }
        if mix.stages.len() != tellers as usize {
            return fail(format!("record ({voter}, {option}) has {} micro-mix stages", mix.stages.len()));
        }
        let mut current = &mix.input;
        for (t, stage) in mix.stages.iter().enumerate() {
            let ctx = mix_context(voter, option, stage.teller);
            if stage.teller != t as u32 + 1 || !verify_micro_mix(current, &stage.output, keys, &stage.proof, &ctx) {
                return fail(format!("record ({voter}, {option}): micro-mix of teller {} rejected", t + 1));
            }
            current = &stage.output;
        }
    }
    Ok(())
}

const CODE_ALPHABET: &[u8] = b"ABCDEFGHJKLMNPQRSTUVWXYZ23456789";

/// Uniform string over a 32-letter alphabet, 5 bits per character.
pub fn random_code_string<R: RngCore>(len: usize, rng: &mut R) -> String {
    (0..len).map(|_| CODE_ALPHABET[rng.gen_range(0..CODE_ALPHABET.len())] as char).collect()
}

/// Hash commitment to a finalization code. The code itself carries 80 bits
/// of entropy and serves as the opening.
pub fn fin_commitment(voter_id: &str, finalization_code: &str) -> String {
    let mut t = transcript::Transcript::new("petcode/fin-commitment");
    t.append_bytes(b"voter", voter_id.as_bytes());
    t.append_bytes(b"code", finalization_code.as_bytes());
    hex::encode(t.digest())
}

pub fn open_fin_commitment(commitment: &str, voter_id: &str, finalization_code: &str) -> bool {
    fin_commitment(voter_id, finalization_code) == commitment
}

/// Public part of a voter's finalization/confirmation material.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinPublic {
    pub voter_id: String,
    pub fin_commitment: String,
    pub conf_ciphertext: Ciphertext,
}

/// Printing-side material for one voter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinConf {
    pub public: FinPublic,
    pub auth_code: String,
    pub finalization_code: String,
    pub confirmation_code: u64,
}

/// Largest confirmation code plus one: `min(q, 2^40)`.
pub fn confirmation_space(group: &GroupParams) -> u64 {
    let cap = 1u64 << 40;
    match group.q().to_u64_digits().as_slice() {
        [q] if *q < cap => *q,
        _ => cap,
    }
}

pub fn generate_fin_conf<R: RngCore + CryptoRng>(voter_id: &str, pk_c: &GroupElement, rng: &mut R) -> FinConf {
    let group = pk_c.group();
    let finalization_code = random_code_string(16, rng);
    let auth_code = random_code_string(16, rng);
    let confirmation_code = rng.gen_range(0..confirmation_space(group));
    let (conf_ciphertext, _) = encrypt_random(pk_c, &printing_encode(group, confirmation_code), rng);
    FinConf {
        public: FinPublic {
            voter_id: voter_id.to_string(),
            fin_commitment: fin_commitment(voter_id, &finalization_code),
            conf_ciphertext,
        },
        auth_code,
        finalization_code,
        confirmation_code,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableCell {
    pub choice: Ciphertext,
    pub code: Ciphertext,
}

/// A voter's published code table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeTableRow {
    pub voter_id: String,
    pub fin_commitment: String,
    pub conf_ciphertext: Ciphertext,
    /// `(u_i^0, u_i^1)` per option.
    pub cells: Vec<[TableCell; 2]>,
}

/// What the printing facility prints for one voter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallotSheet {
    pub voter_id: String,
    pub auth_code: String,
    pub finalization_code: String,
    pub confirmation_code: u64,
    pub flip_bits: Vec<bool>,
    /// `(c_i^0, c_i^1)`: codes printed next to `no` and `yes`.
    pub return_codes: Vec<(u64, u64)>,
}

impl BallotSheet {
    /// The code expected for choice `v` on option `i` (0-based).
    pub fn expected_code(&self, option: usize, v: bool) -> u64 {
        let (no, yes) = self.return_codes[option];
        if v {
            yes
        } else {
            no
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "voter: {}", self.voter_id);
        let _ = writeln!(s, "auth: {}", self.auth_code);
        let _ = writeln!(s, "finalization: {}", self.finalization_code);
        let _ = writeln!(s, "confirmation: {}", self.confirmation_code);
        let flips: String = self.flip_bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        let _ = writeln!(s, "flips: {flips}");
        for (i, (no, yes)) in self.return_codes.iter().enumerate() {
            let _ = writeln!(s, "option {}: no={no} yes={yes}", i + 1);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, CodegenError> {
        let bad = |m: &str| CodegenError::Sheet(m.to_string());
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut field = |name: &str| -> Result<String, CodegenError> {
            let line = lines.next().ok_or_else(|| bad(&format!("missing `{name}`")))?;
            line.strip_prefix(name)
                .and_then(|r| r.strip_prefix(": "))
                .map(str::to_string)
                .ok_or_else(|| bad(&format!("expected `{name}: ...`, got `{line}`")))
        };
        let voter_id = field("voter")?;
        let auth_code = field("auth")?;
        let finalization_code = field("finalization")?;
        let confirmation_code = field("confirmation")?.parse().map_err(|_| bad("confirmation code"))?;
        let flip_bits = field("flips")?
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(bad("flip bits")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut return_codes = Vec::new();
        for i in 1..=flip_bits.len() {
            let line = field(&format!("option {i}"))?;
            let parse = |part: Option<&str>, key: &str| {
                part.and_then(|p| p.strip_prefix(key)).and_then(|v| v.parse::<u64>().ok()).ok_or_else(|| bad(&line))
            };
            let mut parts = line.split_whitespace();
            let no = parse(parts.next(), "no=")?;
            let yes = parse(parts.next(), "yes=")?;
            return_codes.push((no, yes));
        }
        if lines.next().is_some() {
            return Err(bad("trailing lines"));
        }
        Ok(BallotSheet { voter_id, auth_code, finalization_code, confirmation_code, flip_bits, return_codes })
    }
}

/// Builds the public code table from the final records.
pub fn public_table(
    transcript: &CodegenTranscript,
    fin: &[FinPublic],
    k: usize,
) -> Result<Vec<CodeTableRow>, CodegenError> {
    if fin.len() != transcript.voters.len() || transcript.records.len() != fin.len() * k {
        return Err(CodegenError::Invalid("finalization material does not match the voters".into()));
    }
    transcript
        .voters
        .iter()
        .zip(fin)
        .enumerate()
        .map(|(i, (voter, f))| {
            if &f.voter_id != voter {
                return Err(CodegenError::Invalid(format!("finalization material for {voter} is out of order")));
            }
            let cells = transcript.records[i * k..(i + 1) * k]
                .iter()
                .map(|mix| {
                    let [c0, c1] = &mix.output().cells;
                    [
                        TableCell { choice: c0.choice.clone(), code: c0.code.clone() },
                        TableCell { choice: c1.choice.clone(), code: c1.code.clone() },
                    ]
                })
                .collect();
            Ok(CodeTableRow {
                voter_id: voter.clone(),
                fin_commitment: f.fin_commitment.clone(),
                conf_ciphertext: f.conf_ciphertext.clone(),
                cells,
            })
        })
        .collect()
}

/// Step 5: the public table, and the sheets the printing facility reads off
/// the printing halves. The flip bit is the position of the `no` cell.
pub fn split_outputs(
    transcript: &CodegenTranscript,
    printing_sk: &Scalar,
    fin: &[FinConf],
    k: usize,
) -> Result<(Vec<CodeTableRow>, Vec<BallotSheet>), CodegenError> {
    let publics: Vec<FinPublic> = fin.iter().map(|f| f.public.clone()).collect();
    let table = public_table(transcript, &publics, k)?;
    let read = |c: &Ciphertext| {
        printing_decode(&decrypt(printing_sk, c)).ok_or_else(|| CodegenError::Printing("plaintext out of range".into()))
    };
    let sheets = fin
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut flip_bits = Vec::with_capacity(k);
            let mut return_codes = Vec::with_capacity(k);
            for mix in &transcript.records[i * k..(i + 1) * k] {
                let [c0, c1] = &mix.output().cells;
                let (m0, m1) = (read(&c0.print_choice)?, read(&c1.print_choice)?);
                let b = match (m0, m1) {
                    (0, 1) => false,
                    (1, 0) => true,
                    _ => return Err(CodegenError::Printing(format!("choice markers ({m0}, {m1})"))),
                };
                let (no, yes) = if b { (c1, c0) } else { (c0, c1) };
                flip_bits.push(b);
                return_codes.push((read(&no.print_code)?, read(&yes.print_code)?));
            }
            Ok(BallotSheet {
                voter_id: f.public.voter_id.clone(),
                auth_code: f.auth_code.clone(),
                finalization_code: f.finalization_code.clone(),
                confirmation_code: f.confirmation_code,
                flip_bits,
                return_codes,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((table, sheets))
}
