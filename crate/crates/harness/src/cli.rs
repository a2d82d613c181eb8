use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use skpk_core::binning::CodebookMode;
use skpk_core::exact::{binning_entropy, DEFAULT_EXACT_CAP};
use skpk_core::protocol::Scheme;
use skpk_core::region::region_vertices;
use skpk_core::source::VarSet;
use skpk_core::typicality::DEFAULT_SEARCH_CAP;

use crate::campaign::run_trials;
use crate::error::{HarnessError, Result};
use crate::pmf::{load_pmf, PmfFile};
use crate::report::{
    emit, rounded_lemma_stats, simulation_csv, to_json, EvaluationMode, ExperimentConfig, Format,
    RegionReport, SchemeChoice,
};

#[derive(Debug, Parser)]
#[command(name = "skpk", version, about = "Secret-key and private-key agreement experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the SK-PK rate region of a distribution.
    Region {
        pmf: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Monte Carlo trial campaign.
    Simulate(SimulateArgs),
    /// Exact leakage and uniformity by enumerating every source triple.
    SecrecyExact(SimulateArgs),
    /// Exact conditional entropy of a binned source given bin and sub-bin.
    Lemma1(Lemma1Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    #[value(name = "pointE")]
    PointE,
    #[value(name = "pointT")]
    PointT,
    #[value(name = "pointP")]
    PointP,
    #[value(name = "pointQ")]
    PointQ,
    #[value(name = "timeshare")]
    TimeShare,
}

impl SchemeArg {
    fn single(self) -> Option<Scheme> {
        match self {
            SchemeArg::PointE => Some(Scheme::PointE),
            SchemeArg::PointT => Some(Scheme::PointT),
            SchemeArg::PointP => Some(Scheme::PointP),
            SchemeArg::PointQ => Some(Scheme::PointQ),
            SchemeArg::TimeShare => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CodebookArg {
    Hash,
    Table,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub pmf: PathBuf,
    #[arg(long, value_enum)]
    pub scheme: SchemeArg,
    #[arg(long, required_unless_present = "sweep")]
    pub n: Option<usize>,
    /// Comma-separated blocklengths; replaces `--n`.
    #[arg(long, value_delimiter = ',', conflicts_with = "n")]
    pub sweep: Option<Vec<usize>>,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    /// Typicality parameter of the decoders.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Slack in the rate formulas; defaults to `--epsilon`.
    #[arg(long)]
    pub rate_epsilon: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = CodebookArg::Hash)]
    pub codebook: CodebookArg,
    /// Scheme on the leading block of a time-sharing run.
    #[arg(long, value_enum)]
    pub first: Option<SchemeArg>,
    /// Scheme on the trailing block of a time-sharing run.
    #[arg(long, value_enum)]
    pub second: Option<SchemeArg>,
    /// Fraction of the blocklength given to `--first`.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Codebook sets averaged over in exact mode.
    #[arg(long, default_value_t = 1)]
    pub codebooks: usize,
    /// Skip exact agreement probabilities (exact mode).
    #[arg(long)]
    pub skip_agreement: bool,
    #[arg(long, default_value_t = DEFAULT_SEARCH_CAP as u64)]
    pub search_cap: u64,
    #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
    pub exact_cap: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct Lemma1Args {
    /// Only the Z marginal is used.
    #[arg(long)]
    pub pmf: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub rs: f64,
    #[arg(long)]
    pub rz: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub codebooks: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Typicality parameter of the atypicality and crowding counters.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SimulateArgs {
    pub fn experiment(&self, mode: EvaluationMode) -> Result<ExperimentConfig> {
        let dist = load_pmf(&self.pmf)?;
        let scheme = match self.scheme.single() {
            Some(s) => {
                if self.first.is_some() || self.second.is_some() || self.lambda.is_some() {
                    return Err(HarnessError::Config(
                        "--first, --second and --lambda apply only to --scheme timeshare".into(),
                    ));
                }
                SchemeChoice::Single(s)
            }
            None => {
                let pick = |arg: Option<SchemeArg>, flag: &str| {
                    arg.and_then(SchemeArg::single).ok_or_else(|| {
                        HarnessError::Config(format!(
                            "--scheme timeshare needs --{flag} pointE|pointT|pointP|pointQ"
                        ))
                    })
                };
                SchemeChoice::TimeShare {
                    first: pick(self.first, "first")?,
                    second: pick(self.second, "second")?,
                    lambda: self.lambda.ok_or_else(|| {
                        HarnessError::Config("--scheme timeshare needs --lambda".into())
                    })?,
                }
            }
        };
        let codebook = match (mode, self.codebook) {
            (EvaluationMode::Exact, _) | (_, CodebookArg::Table) => CodebookMode::ExplicitTable,
            (_, CodebookArg::Hash) => CodebookMode::KeyedHash,
        };
        Ok(ExperimentConfig {
            source: PmfFile::from_distribution(&dist),
            scheme,
            n_values: self.sweep.clone().or(self.n.map(|n| vec![n])).unwrap_or_default(),
            mode,
            trials: self.trials,
            epsilon: self.epsilon,
            rate_epsilon: self.rate_epsilon,
            delta: self.delta,
            seed: self.seed,
            codebook,
            codebooks: self.codebooks,
            exact_agreement: !self.skip_agreement,
            search_cap: self.search_cap,
            exact_cap: self.exact_cap,
        })
    }
}

fn simulate(args: &SimulateArgs, mode: EvaluationMode) -> Result<()> {
    let config = args.experiment(mode)?;
    let report = run_trials(&config)?;
    let body = match args.format {
        Format::Json => to_json(&report)?,
        Format::Csv => simulation_csv(&report)?,
    };
    emit(&body, args.out.as_deref())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Region { pmf, out, format } => {
            let dist = load_pmf(&pmf)?;
            let report = RegionReport::new(&region_vertices(&dist.profile()));
            let body = match format {
                Format::Json => to_json(&report)?,
                Format::Csv => report.to_csv()?,
            };
            emit(&body, out.as_deref())
        }
        Command::Simulate(args) => simulate(&args, EvaluationMode::MonteCarlo),
        Command::SecrecyExact(args) => simulate(&args, EvaluationMode::Exact),
        Command::Lemma1(args) => {
            let dist = load_pmf(&args.pmf)?;
            let z = dist.marginal(VarSet::Z);
            let stats = binning_entropy(
                z.pmf(),
                args.n,
                args.rs,
                args.rz,
                args.codebooks,
                args.delta,
                args.epsilon,
                args.seed,
            )?;
            emit(&to_json(&rounded_lemma_stats(stats))?, args.out.as_deref())
        }
    }
}
