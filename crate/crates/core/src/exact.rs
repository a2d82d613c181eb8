//! Exact secrecy, uniformity and binning-entropy evaluation at small
//! blocklengths.
//!
//! Every source triple with positive probability is enumerated and the
//! joint laws of keys and public messages are accumulated exactly (up to
//! compensated floating-point summation). Only explicit-table codebooks are
//! accepted, since keyed hashing only emulates a random codebook.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::binning::{
    make_codebook, sequence_count, sequence_from_index, CodebookMode, CodebookParams,
};
use crate::error::{Error, Result};
use crate::protocol::{Protocol, ProtocolConfig, TerminalView, Transcript};
use crate::rng::{derive_seed, Purpose};
use crate::source::{JointDistribution, Marginal, SourceTriple, Var};
use crate::sum::{entropy_bits, CompensatedSum};
use crate::typicality::{is_strongly_typical, TypicalityParams};

/// Default limit on `(|X||Y||Z|)^n` and `|Z|^n`.
pub const DEFAULT_EXACT_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExactOptions {
    pub enumeration_cap: u64,
    /// Also run every terminal's decoder to get exact agreement
    /// probabilities.
    pub with_agreement: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            enumeration_cap: DEFAULT_EXACT_CAP,
            with_agreement: false,
        }
    }
}

/// Exact key statistics of one codebook set, normalized by `n`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExactSecrecy {
    pub n: usize,
    /// `I(K_S; F) / n`
    pub secret_leakage: f64,
    /// `I(K_P; F, Z^n) / n`
    pub private_leakage: f64,
    /// `H(K_S) / n`
    pub secret_entropy: f64,
    /// `H(K_P) / n`
    pub private_entropy: f64,
    /// `log2|K_S| / n`
    pub secret_rate: f64,
    /// `log2|K_P| / n`
    pub private_rate: f64,
    pub secret_agreement: Option<f64>,
    pub private_agreement: Option<f64>,
}

fn check_capacity(dist: &JointDistribution, n: usize, cap: u64) -> Result<()> {
    let [a, b, c] = dist.sizes();
    let per_symbol = a * b * c;
    match sequence_count(per_symbol, n) {
        Some(total) if total <= cap => Ok(()),
        _ => Err(Error::Capacity {
            what: "exact enumeration of source triples",
            required: (per_symbol as u128).saturating_pow(n.min(u32::MAX as usize) as u32),
            limit: cap as u128,
        }),
    }
}

/// Calls `visit` with every source triple of positive probability.
pub fn for_each_support_triple(
    dist: &JointDistribution,
    n: usize,
    mut visit: impl FnMut(&SourceTriple, f64) -> Result<()>,
) -> Result<()> {
    let atoms = dist.support();
    let mut digits = vec![0usize; n];
    let mut triple = SourceTriple::new(vec![0; n], vec![0; n], vec![0; n])?;
    loop {
        let mut p = 1.0;
        for (i, &d) in digits.iter().enumerate() {
            let ([x, y, z], q) = atoms[d];
            triple.x[i] = x as u8;
            triple.y[i] = y as u8;
            triple.z[i] = z as u8;
            p *= q;
        }
        visit(&triple, p)?;
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < atoms.len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

#[derive(Default)]
struct Law<K: Ord> {
    mass: BTreeMap<K, CompensatedSum>,
}

impl<K: Ord> Law<K> {
    fn add(&mut self, key: K, p: f64) {
        self.mass.entry(key).or_default().add(p);
    }

    fn entropy(&self) -> f64 {
        entropy_bits(self.mass.values().map(|s| s.value()))
    }
}

type CacheKey = (usize, Var, Vec<u8>, Vec<u64>);

/// Exact statistics of a prepared protocol.
pub fn exact_secrecy(protocol: &Protocol, options: &ExactOptions) -> Result<ExactSecrecy> {
    if !protocol.uses_explicit_tables() {
        return Err(Error::usage(
            "exact evaluation requires explicit-table codebooks",
        ));
    }
    let dist = protocol.distribution();
    let n = protocol.n();
    check_capacity(dist, n, options.enumeration_cap)?;

    let mut transcripts: Law<Vec<u64>> = Law::default();
    let mut secret: Law<u64> = Law::default();
    let mut secret_joint: Law<(u64, Vec<u64>)> = Law::default();
    let mut eve: Law<(Vec<u64>, Vec<u8>)> = Law::default();
    let mut private: Law<u64> = Law::default();
    let mut private_joint: Law<(u64, Vec<u64>, Vec<u8>)> = Law::default();
    let mut secret_agree = CompensatedSum::new();
    let mut private_agree = CompensatedSum::new();
    let mut cache: BTreeMap<CacheKey, TerminalView> = BTreeMap::new();

    for_each_support_triple(dist, n, |triple, p| {
        let transcript = protocol.transmit(triple)?;
        let f: Vec<u64> = transcript.messages.iter().map(|m| m.index).collect();
        let (ks, kp) = protocol.source_keys(triple);
        transcripts.add(f.clone(), p);
        secret.add(ks, p);
        secret_joint.add((ks, f.clone()), p);
        eve.add((f.clone(), triple.z.clone()), p);
        private.add(kp, p);
        private_joint.add((kp, f, triple.z.clone()), p);
        if options.with_agreement {
            let keys = decode_all(protocol, triple, &transcript, &mut cache)?;
            if keys.secret_agrees() {
                secret_agree.add(p);
            }
            if keys.private_agrees() {
                private_agree.add(p);
            }
        }
        Ok(())
    })?;

    let nf = n as f64;
    let mi = |a: f64, b: f64, ab: f64| (a + b - ab).max(0.0) / nf;
    let (secret_rate, private_rate) = protocol.achieved_rates();
    let secret_leakage = mi(secret.entropy(), transcripts.entropy(), secret_joint.entropy());
    let private_leakage = mi(private.entropy(), eve.entropy(), private_joint.entropy());
    Ok(ExactSecrecy {
        n,
        secret_leakage,
        private_leakage,
        secret_entropy: secret.entropy() / nf,
        private_entropy: private.entropy() / nf,
        secret_rate,
        private_rate,
        secret_agreement: options.with_agreement.then(|| secret_agree.value()),
        private_agreement: options.with_agreement.then(|| private_agree.value()),
    })
}

fn decode_all(
    protocol: &Protocol,
    triple: &SourceTriple,
    transcript: &Transcript,
    cache: &mut BTreeMap<CacheKey, TerminalView>,
) -> Result<crate::protocol::KeyOutcome> {
    let mut views = Vec::with_capacity(protocol.blocks().len());
    for (i, b) in protocol.blocks().iter().enumerate() {
        let heard: Vec<u64> = transcript.block(i).map(|m| m.index).collect();
        let mut row = [TerminalView {
            status: crate::protocol::DecodeStatus::Ok,
            secret_key: None,
            private_key: None,
        }; 3];
        for terminal in Var::ALL {
            let own = &triple.get(terminal)[b.offset..b.offset + b.len];
            let key = (i, terminal, own.to_vec(), heard.clone());
            let view = match cache.get(&key) {
                Some(v) => *v,
                None => {
                    let v = protocol.view(i, terminal, own, transcript)?;
                    cache.insert(key, v);
                    v
                }
            };
            row[terminal.index()] = view;
        }
        views.push(row);
    }
    Ok(protocol.assemble(&views))
}

/// Per-codebook results and their mean over a sampled codebook ensemble.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleSecrecy {
    pub members: Vec<ExactSecrecy>,
    pub mean: ExactSecrecy,
}

/// Replaces the codebook seed of every scheme in `config`.
pub fn with_codebook_seed(config: &ProtocolConfig, seed: u64) -> ProtocolConfig {
    let mut config = config.clone();
    match &mut config {
        ProtocolConfig::Single(c) => c.master_seed = seed,
        ProtocolConfig::TimeShare { first, second, .. } => {
            first.master_seed = seed;
            second.master_seed = derive_seed(seed, Purpose::Codebook, 1 << 40);
        }
    }
    config
}

/// Exact statistics for `count` codebook sets drawn from `seed`.
pub fn ensemble_secrecy(
    dist: &JointDistribution,
    config: &ProtocolConfig,
    count: usize,
    seed: u64,
    options: &ExactOptions,
) -> Result<EnsembleSecrecy> {
    if count == 0 {
        return Err(Error::usage("codebook ensemble must contain at least one member"));
    }
    let mut members = Vec::with_capacity(count);
    for k in 0..count {
        let member = with_codebook_seed(config, member_seed(seed, k));
        let protocol = Protocol::prepare(dist, &member)?;
        members.push(exact_secrecy(&protocol, options)?);
    }
    Ok(EnsembleSecrecy::from_members(members))
}

impl EnsembleSecrecy {
    /// Panics if `members` is empty.
    pub fn from_members(members: Vec<ExactSecrecy>) -> Self {
        let mean = mean_of(&members);
        EnsembleSecrecy { members, mean }
    }
}

/// Codebook seed of ensemble member `k`.
pub fn member_seed(seed: u64, k: usize) -> u64 {
    derive_seed(seed, Purpose::Ensemble, k as u64)
}

fn mean_of(members: &[ExactSecrecy]) -> ExactSecrecy {
    let k = members.len() as f64;
    let avg = |f: fn(&ExactSecrecy) -> f64| {
        members.iter().map(f).collect::<CompensatedSum>().value() / k
    };
    let avg_opt = |f: fn(&ExactSecrecy) -> Option<f64>| {
        let vals: Option<Vec<f64>> = members.iter().map(f).collect();
        vals.map(|v| v.into_iter().collect::<CompensatedSum>().value() / k)
    };
    ExactSecrecy {
        n: members[0].n,
        secret_leakage: avg(|m| m.secret_leakage),
        private_leakage: avg(|m| m.private_leakage),
        secret_entropy: avg(|m| m.secret_entropy),
        private_entropy: avg(|m| m.private_entropy),
        secret_rate: avg(|m| m.secret_rate),
        private_rate: avg(|m| m.private_rate),
        secret_agreement: avg_opt(|m| m.secret_agreement),
        private_agreement: avg_opt(|m| m.private_agreement),
    }
}

/// Exact conditional entropy of a binned source given its bin and sub-bin.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinningEntropyStats {
    pub n: usize,
    pub secret_rate: f64,
    pub bin_rate: f64,
    pub delta: f64,
    /// `H(Z)` in bits/symbol.
    pub source_entropy: f64,
    /// `(1/n) H(Z^n | f, φ)` for each sampled codebook.
    pub per_codebook: Vec<f64>,
    pub mean: f64,
    /// `H(Z) - R_S - R_Z + δ`.
    pub bound: f64,
    pub bound_holds: bool,
    /// Probability that `Z^n` is not ε-typical.
    pub atypical_probability: f64,
    /// Per codebook, the fraction of `(f, φ)` cells holding at least twice
    /// the expected number of typical sequences.
    pub crowded_cells: Vec<f64>,
    pub mean_crowded_cells: f64,
}

/// Computes `H(Z^n | f, φ, C)` exactly over `codebooks` sampled
/// explicit-table codebooks binning `Z^n` at `bin_rate` with sub-bins at
/// `secret_rate`.
///
/// Requires `secret_rate + bin_rate < H(Z) - 2 delta`.
#[allow(clippy::too_many_arguments)]
pub fn binning_entropy(
    z_pmf: &[f64],
    n: usize,
    secret_rate: f64,
    bin_rate: f64,
    codebooks: usize,
    delta: f64,
    epsilon: f64,
    seed: u64,
) -> Result<BinningEntropyStats> {
    let marginal = Marginal::single(Var::Z, z_pmf.to_vec())?;
    let h_z = marginal.entropy();
    let slack = h_z - 2.0 * delta - (secret_rate + bin_rate);
    if slack.is_nan() || slack <= 0.0 {
        return Err(Error::usage(format!(
            "precondition R_S + R_Z < H(Z) - 2 delta fails: {} + {} >= {} - 2 * {}",
            secret_rate, bin_rate, h_z, delta
        )));
    }
    if codebooks == 0 {
        return Err(Error::usage("codebook ensemble must contain at least one member"));
    }
    let a = marginal.alphabet_size();
    let total = sequence_count(a, n)
        .filter(|&t| t <= DEFAULT_EXACT_CAP)
        .ok_or(Error::Capacity {
            what: "exact enumeration of Z sequences",
            required: (a as u128).saturating_pow(n.min(u32::MAX as usize) as u32),
            limit: DEFAULT_EXACT_CAP as u128,
        })?;
    let params = TypicalityParams::new(epsilon, n)?;
    let pmf = marginal.pmf();

    let mut probs = Vec::with_capacity(total as usize);
    let mut typical = Vec::with_capacity(total as usize);
    let mut atypical = CompensatedSum::new();
    for index in 0..total {
        let seq = sequence_from_index(index, a, n);
        let p: f64 = seq.iter().map(|&s| pmf[s as usize]).product();
        let t = is_strongly_typical(&[&seq], &marginal, &params)?;
        if !t {
            atypical.add(p);
        }
        probs.push(p);
        typical.push(t);
    }
    let joint_entropy = entropy_bits(probs.iter().copied());
    let typical_count = typical.iter().filter(|&&t| t).count() as f64;

    let mut per_codebook = Vec::with_capacity(codebooks);
    let mut crowded_cells = Vec::with_capacity(codebooks);
    for k in 0..codebooks {
        let cb = make_codebook(CodebookParams {
            mode: CodebookMode::ExplicitTable,
            terminal: Var::Z,
            n,
            alphabet_size: a,
            bin_rate,
            sub_rate: secret_rate,
            seed: derive_seed(seed, Purpose::Ensemble, k as u64),
            table_cap: DEFAULT_EXACT_CAP,
        })?;
        let cells = cb.num_bins() as u128 * cb.num_sub_bins() as u128;
        let mut mass: BTreeMap<(u64, u64), CompensatedSum> = BTreeMap::new();
        let mut occupancy: BTreeMap<(u64, u64), u64> = BTreeMap::new();
        for index in 0..total {
            let cell = cb.lookup(index).expect("index inside the table");
            mass.entry(cell).or_default().add(probs[index as usize]);
            if typical[index as usize] {
                *occupancy.entry(cell).or_default() += 1;
            }
        }
        // f and φ are functions of Z^n, so H(Z^n | f, φ) = H(Z^n) - H(f, φ).
        let cell_entropy = entropy_bits(mass.values().map(|s| s.value()));
        per_codebook.push(((joint_entropy - cell_entropy) / n as f64).max(0.0));
        let expected = typical_count / cells as f64;
        let crowded = occupancy
            .values()
            .filter(|&&c| c as f64 >= 2.0 * expected)
            .count();
        crowded_cells.push(crowded as f64 / cells as f64);
    }
    let k = codebooks as f64;
    let mean = per_codebook.iter().copied().collect::<CompensatedSum>().value() / k;
    let bound = h_z - secret_rate - bin_rate + delta;
    Ok(BinningEntropyStats {
        n,
        secret_rate,
        bin_rate,
        delta,
        source_entropy: h_z,
        mean,
        bound,
        bound_holds: mean <= bound,
        atypical_probability: atypical.value(),
        mean_crowded_cells: crowded_cells.iter().copied().collect::<CompensatedSum>().value() / k,
        per_codebook,
        crowded_cells,
    })
}
