//! Trial campaigns and exact evaluations.

use std::collections::BTreeMap;

use log::{info, warn};
use rayon::prelude::*;
use skpk_core::binning::CodebookMode;
use skpk_core::exact::{
    exact_secrecy, member_seed, with_codebook_seed, EnsembleSecrecy, ExactOptions,
    DEFAULT_EXACT_CAP,
};
use skpk_core::protocol::{KeyOutcome, Protocol, ProtocolConfig, Scheme, SchemeConfig};
use skpk_core::rng::{derive_seed, Purpose};
use skpk_core::source::{JointDistribution, Var};
use skpk_core::sum::entropy_bits;

use crate::error::{HarnessError, Result};
use crate::report::{
    BlockRecord, CodebookRecord, EvaluationMode, ExperimentConfig, FailureCounts, NRecord,
    SchemeChoice, SimulationReport,
};

/// Environment variable overriding the number of worker threads.
pub const WORKERS_ENV: &str = "SKPK_WORKERS";

fn scheme_config(config: &ExperimentConfig, scheme: Scheme, n: usize) -> SchemeConfig {
    let mut c = SchemeConfig::new(scheme, n, config.epsilon);
    c.rate_epsilon = config.rate_epsilon;
    c.delta = config.delta;
    c.codebook_mode = config.codebook;
    c.master_seed = config.seed;
    c.search_cap = config.search_cap as u128;
    c
}

/// Protocol configuration of `config` at blocklength `n`.
pub fn protocol_config(config: &ExperimentConfig, n: usize) -> ProtocolConfig {
    match &config.scheme {
        SchemeChoice::Single(s) => ProtocolConfig::Single(scheme_config(config, *s, n)),
        SchemeChoice::TimeShare {
            first,
            second,
            lambda,
        } => {
            let mut second = scheme_config(config, *second, n);
            // Keep the two blocks' codebooks independent.
            second.master_seed = derive_seed(config.seed, Purpose::Codebook, 1 << 40);
            ProtocolConfig::TimeShare {
                first: scheme_config(config, *first, n),
                second,
                lambda: *lambda,
                n,
            }
        }
    }
}

/// Seed of trial `t` at blocklength `n`.
pub fn trial_seed(seed: u64, n: usize, t: u64) -> u64 {
    derive_seed(seed, Purpose::Trial, ((n as u64) << 32) | (t & 0xffff_ffff))
}

pub fn validate(config: &ExperimentConfig) -> Result<()> {
    if config.n_values.is_empty() || config.n_values.contains(&0) {
        return Err(HarnessError::Config(
            "blocklengths must be positive and at least one must be given".into(),
        ));
    }
    if !(config.epsilon > 0.0 && config.epsilon < 1.0) {
        return Err(HarnessError::Config(format!(
            "epsilon {} must lie in (0, 1)",
            config.epsilon
        )));
    }
    if config.delta < 0.0 || !config.delta.is_finite() {
        return Err(HarnessError::Config(format!(
            "delta {} must be finite and non-negative",
            config.delta
        )));
    }
    if let SchemeChoice::TimeShare { lambda, .. } = config.scheme {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(HarnessError::Config(format!(
                "time-sharing fraction {lambda} must lie in [0, 1]"
            )));
        }
    }
    match config.mode {
        EvaluationMode::MonteCarlo if config.trials == 0 => Err(HarnessError::Config(
            "Monte Carlo mode needs at least one trial".into(),
        )),
        EvaluationMode::Exact if config.codebook != CodebookMode::ExplicitTable => Err(
            HarnessError::Config("exact mode requires explicit-table codebooks".into()),
        ),
        EvaluationMode::Exact if config.codebooks == 0 => Err(HarnessError::Config(
            "exact mode needs at least one codebook set".into(),
        )),
        _ => Ok(()),
    }
}

/// Runs `f` on a pool sized by [`WORKERS_ENV`] when set.
pub fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let workers: usize = v.trim().parse().map_err(|_| {
                HarnessError::Config(format!("{WORKERS_ENV}={v} is not a worker count"))
            })?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

fn block_records(protocol: &Protocol) -> Vec<BlockRecord> {
    protocol
        .blocks()
        .iter()
        .map(|b| BlockRecord {
            requested: b.requested,
            scheme: b.scheme,
            len: b.len,
            r_z: b.rates.r_z,
            r_x: b.rates.r_x,
            r_y: b.rates.r_y,
            r_s: b.rates.r_s,
            r_p: b.rates.r_p,
            pk_owner: b.rates.pk_owner,
            diagnostics: b.rates.diagnostics.clone(),
        })
        .collect()
}

fn plug_in_entropy(histogram: &BTreeMap<u64, u64>, total: u64) -> f64 {
    entropy_bits(histogram.values().map(|&c| c as f64 / total as f64))
}

fn stderr_of(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

fn log_notes(protocol: &Protocol, n: usize) {
    for b in protocol.blocks() {
        if b.scheme != b.requested {
            warn!(
                "n = {n}: {} degenerates here, running {} instead",
                b.requested.as_str(),
                b.scheme.as_str()
            );
        }
        for d in &b.rates.diagnostics {
            warn!("n = {n}: {d:?}");
        }
    }
}

/// Monte Carlo agreement and uniformity statistics for one blocklength.
pub fn monte_carlo_record(
    dist: &JointDistribution,
    config: &ExperimentConfig,
    n: usize,
) -> Result<NRecord> {
    let protocol = Protocol::prepare(dist, &protocol_config(config, n))?;
    log_notes(&protocol, n);
    let outcomes: Vec<(KeyOutcome, u64, u64)> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(config.seed, n, t);
            let run = protocol.run(seed)?;
            let (secret, private) = protocol.source_keys(&run.source);
            Ok((run.keys, secret, private))
        })
        .collect::<Result<_>>()?;

    let trials = config.trials;
    let mut failures: Vec<FailureCounts> = Var::ALL.into_iter().map(FailureCounts::new).collect();
    let (mut secret_ok, mut private_ok) = (0u64, 0u64);
    let mut secret_hist = BTreeMap::new();
    let mut private_hist = BTreeMap::new();
    for (keys, secret, private) in &outcomes {
        for f in failures.iter_mut() {
            f.record(keys.status(f.terminal));
        }
        secret_ok += keys.secret_agrees() as u64;
        private_ok += keys.private_agrees() as u64;
        *secret_hist.entry(*secret).or_insert(0u64) += 1;
        *private_hist.entry(*private).or_insert(0u64) += 1;
    }
    let secret_agreement = secret_ok as f64 / trials as f64;
    let private_agreement = private_ok as f64 / trials as f64;
    let (secret_rate, private_rate) = protocol.achieved_rates();
    let nf = n as f64;
    Ok(NRecord {
        n,
        blocks: block_records(&protocol),
        trials,
        secret_agreement: Some(secret_agreement),
        private_agreement: Some(private_agreement),
        secret_agreement_stderr: Some(stderr_of(secret_agreement, trials)),
        private_agreement_stderr: Some(stderr_of(private_agreement, trials)),
        failures: Some(failures),
        secret_entropy: plug_in_entropy(&secret_hist, trials) / nf,
        private_entropy: plug_in_entropy(&private_hist, trials) / nf,
        secret_rate,
        private_rate,
        secret_leakage: None,
        private_leakage: None,
        per_codebook: None,
    }
    .rounded())
}

/// Exact leakage, uniformity and agreement averaged over codebook sets.
pub fn exact_record(dist: &JointDistribution, config: &ExperimentConfig, n: usize) -> Result<NRecord> {
    if config.exact_cap > DEFAULT_EXACT_CAP {
        warn!(
            "enumeration cap raised to {} above the default {}",
            config.exact_cap, DEFAULT_EXACT_CAP
        );
    }
    let options = ExactOptions {
        enumeration_cap: config.exact_cap,
        with_agreement: config.exact_agreement,
    };
    let base = protocol_config(config, n);
    let first = Protocol::prepare(dist, &base)?;
    log_notes(&first, n);
    // One codebook set per member, evaluated in parallel.
    let members: Vec<_> = (0..config.codebooks)
        .into_par_iter()
        .map(|k| {
            let member = with_codebook_seed(&base, member_seed(config.seed, k));
            exact_secrecy(&Protocol::prepare(dist, &member)?, &options)
        })
        .collect::<skpk_core::Result<_>>()?;
    let mean = EnsembleSecrecy::from_members(members);
    let m = &mean.mean;
    Ok(NRecord {
        n,
        blocks: block_records(&first),
        trials: 0,
        secret_agreement: m.secret_agreement,
        private_agreement: m.private_agreement,
        secret_agreement_stderr: None,
        private_agreement_stderr: None,
        failures: None,
        secret_entropy: m.secret_entropy,
        private_entropy: m.private_entropy,
        secret_rate: m.secret_rate,
        private_rate: m.private_rate,
        secret_leakage: Some(m.secret_leakage),
        private_leakage: Some(m.private_leakage),
        per_codebook: Some(
            mean.members
                .iter()
                .map(|e| CodebookRecord {
                    secret_leakage: e.secret_leakage,
                    private_leakage: e.private_leakage,
                    secret_entropy: e.secret_entropy,
                    private_entropy: e.private_entropy,
                })
                .collect(),
        ),
    }
    .rounded())
}

/// Runs every blocklength of `config` and collects the records.
pub fn run_trials(config: &ExperimentConfig) -> Result<SimulationReport> {
    validate(config)?;
    let dist = config.source.to_distribution()?;
    let mut records = Vec::with_capacity(config.n_values.len());
    for &n in &config.n_values {
        let started = std::time::Instant::now();
        let record = with_workers(|| match config.mode {
            EvaluationMode::MonteCarlo => monte_carlo_record(&dist, config, n),
            EvaluationMode::Exact => exact_record(&dist, config, n),
        })??;
        info!("n = {n} finished in {:.3?}", started.elapsed());
        records.push(record);
    }
    Ok(SimulationReport {
        command: match config.mode {
            EvaluationMode::MonteCarlo => "simulate".into(),
            EvaluationMode::Exact => "secrecy-exact".into(),
        },
        config: config.clone(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::PmfFile;
    use skpk_core::source::examples::*;
    use skpk_core::typicality::DEFAULT_SEARCH_CAP;

    pub(crate) fn config(dist: &JointDistribution, scheme: Scheme, n: &[usize]) -> ExperimentConfig {
        ExperimentConfig {
            source: PmfFile::from_distribution(dist),
            scheme: SchemeChoice::Single(scheme),
            n_values: n.to_vec(),
            mode: EvaluationMode::MonteCarlo,
            trials: 20,
            epsilon: 0.3,
            rate_epsilon: None,
            delta: 0.0,
            seed: 5,
            codebook: CodebookMode::KeyedHash,
            codebooks: 1,
            exact_agreement: true,
            search_cap: DEFAULT_SEARCH_CAP as u64,
            exact_cap: DEFAULT_EXACT_CAP,
        }
    }

    #[test]
    fn deterministic_source_agrees_always() {
        // X = Y = Z is constant: every trial decodes trivially.
        let d = JointDistribution::new([1, 1, 1], vec![1.0]).unwrap();
        let mut c = config(&d, Scheme::PointP, &[6]);
        c.trials = 1;
        let r = run_trials(&c).unwrap();
        assert_eq!(r.records[0].secret_agreement, Some(1.0));
        assert_eq!(r.records[0].private_agreement, Some(1.0));
    }

    #[test]
    fn identical_bits_agree_exactly_when_typical() {
        let d = identical_bits();
        let c = config(&d, Scheme::PointT, &[8]);
        let r = run_trials(&c).unwrap();
        let rec = &r.records[0];
        let fails = rec.failures.as_ref().unwrap();
        let x = fails.iter().find(|f| f.terminal == Var::X).unwrap();
        let agreement = rec.secret_agreement.unwrap();
        assert_eq!(agreement, x.ok as f64 / 20.0);
    }

    #[test]
    fn sweep_gives_one_record_per_n() {
        let d = xor_triple();
        let c = config(&d, Scheme::PointP, &[4, 6, 8]);
        let r = run_trials(&c).unwrap();
        let ns: Vec<_> = r.records.iter().map(|r| r.n).collect();
        assert_eq!(ns, [4, 6, 8]);
    }

    #[test]
    fn repeated_runs_are_identical() {
        let d = markov_chain(0.1, 0.3);
        let c = config(&d, Scheme::PointQ, &[10]);
        assert_eq!(run_trials(&c).unwrap(), run_trials(&c).unwrap());
    }

    #[test]
    fn exact_and_monte_carlo_agreement_match() {
        let d = symmetric_xz(0.1);
        let mut mc = config(&d, Scheme::PointP, &[6]);
        mc.trials = 10_000;
        mc.codebook = CodebookMode::ExplicitTable;
        let mut ex = mc.clone();
        ex.trials = 1;
        ex.mode = EvaluationMode::Exact;
        let pm = run_trials(&mc).unwrap().records[0].secret_agreement.unwrap();
        // Exact figures for the very codebooks the trials used.
        let protocol = Protocol::prepare(&d, &protocol_config(&mc, 6)).unwrap();
        let options = ExactOptions {
            with_agreement: true,
            ..ExactOptions::default()
        };
        let exact = exact_secrecy(&protocol, &options).unwrap().secret_agreement.unwrap();
        ex.codebooks = 3;
        let rec = &run_trials(&ex).unwrap().records[0];
        assert_eq!(rec.per_codebook.as_ref().unwrap().len(), 3);
        let sigma = (exact * (1.0 - exact) / 1e4).sqrt().max(1e-4);
        assert!((pm - exact).abs() <= 3.0 * sigma, "mc {pm} exact {exact}");
    }

    #[test]
    fn exact_mode_rejects_hash_codebooks() {
        let d = xor_triple();
        let mut c = config(&d, Scheme::PointP, &[4]);
        c.mode = EvaluationMode::Exact;
        assert_eq!(run_trials(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn exact_mode_capacity_error() {
        let d = xor_triple();
        let mut c = config(&d, Scheme::PointP, &[9]);
        c.mode = EvaluationMode::Exact;
        c.codebook = CodebookMode::ExplicitTable;
        assert_eq!(run_trials(&c).unwrap_err().exit_code(), 3);
    }
}
