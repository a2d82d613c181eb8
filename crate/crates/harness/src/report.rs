//! Report types and their JSON / CSV encodings.
//!
//! Every floating-point figure is rounded to 12 significant digits when the
//! record is built, so a written report parses back to an equal value.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use skpk_core::binning::CodebookMode;
use skpk_core::exact::BinningEntropyStats;
use skpk_core::protocol::{DecodeStatus, RateDiagnostic, Scheme};
use skpk_core::region::{CaseLabel, RateRegion, RegionConstants};
use skpk_core::source::Var;

use crate::error::{HarnessError, Result};
use crate::pmf::PmfFile;

/// Rounds to 12 significant decimal digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    if x == 0.0 {
        return 0.0;
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    r + 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationMode {
    MonteCarlo,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeChoice {
    Single(Scheme),
    TimeShare {
        first: Scheme,
        second: Scheme,
        lambda: f64,
    },
}

/// Everything that determines a campaign's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: PmfFile,
    pub scheme: SchemeChoice,
    /// Blocklengths, one record each.
    pub n_values: Vec<usize>,
    pub mode: EvaluationMode,
    pub trials: u64,
    pub epsilon: f64,
    pub rate_epsilon: Option<f64>,
    pub delta: f64,
    pub seed: u64,
    pub codebook: CodebookMode,
    /// Codebook sets averaged over in exact mode.
    pub codebooks: usize,
    pub exact_agreement: bool,
    pub search_cap: u64,
    pub exact_cap: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub terminal: Var,
    pub ok: u64,
    pub no_candidate: u64,
    pub ambiguous: u64,
    pub search_overflow: u64,
}

impl FailureCounts {
    pub fn new(terminal: Var) -> Self {
        FailureCounts {
            terminal,
            ok: 0,
            no_candidate: 0,
            ambiguous: 0,
            search_overflow: 0,
        }
    }

    pub fn record(&mut self, status: DecodeStatus) {
        match status {
            DecodeStatus::Ok => self.ok += 1,
            DecodeStatus::NoCandidate => self.no_candidate += 1,
            DecodeStatus::Ambiguous => self.ambiguous += 1,
            DecodeStatus::SearchOverflow => self.search_overflow += 1,
        }
    }
}

/// Exact figures of one sampled codebook set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookRecord {
    pub secret_leakage: f64,
    pub private_leakage: f64,
    pub secret_entropy: f64,
    pub private_entropy: f64,
}

/// Per-block rates actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub requested: Scheme,
    pub scheme: Scheme,
    pub len: usize,
    pub r_z: f64,
    pub r_x: f64,
    pub r_y: f64,
    pub r_s: f64,
    pub r_p: f64,
    pub pk_owner: Var,
    pub diagnostics: Vec<RateDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NRecord {
    pub n: usize,
    pub blocks: Vec<BlockRecord>,
    /// Trials in Monte Carlo mode; 0 in exact mode.
    pub trials: u64,
    pub secret_agreement: Option<f64>,
    pub private_agreement: Option<f64>,
    pub secret_agreement_stderr: Option<f64>,
    pub private_agreement_stderr: Option<f64>,
    /// Decode outcomes per terminal (Monte Carlo mode).
    pub failures: Option<Vec<FailureCounts>>,
    /// `H(K_S)/n`: plug-in estimate in Monte Carlo mode, exact ensemble
    /// mean in exact mode.
    pub secret_entropy: f64,
    pub private_entropy: f64,
    /// `log2|K_S|/n`
    pub secret_rate: f64,
    pub private_rate: f64,
    /// `I(K_S;F)/n`, ensemble mean (exact mode only).
    pub secret_leakage: Option<f64>,
    /// `I(K_P;F,Z^n)/n`, ensemble mean (exact mode only).
    pub private_leakage: Option<f64>,
    pub per_codebook: Option<Vec<CodebookRecord>>,
}

impl NRecord {
    /// Applies [`round_sig`] to every float.
    pub fn rounded(mut self) -> Self {
        let r = |x: &mut f64| *x = round_sig(*x);
        let ro = |x: &mut Option<f64>| {
            if let Some(v) = x {
                *v = round_sig(*v)
            }
        };
        for b in &mut self.blocks {
            for x in [&mut b.r_z, &mut b.r_x, &mut b.r_y, &mut b.r_s, &mut b.r_p] {
                r(x);
            }
            for d in &mut b.diagnostics {
                if let RateDiagnostic::Clamped { formula_value, .. } = d {
                    r(formula_value);
                }
            }
        }
        ro(&mut self.secret_agreement);
        ro(&mut self.private_agreement);
        ro(&mut self.secret_agreement_stderr);
        ro(&mut self.private_agreement_stderr);
        r(&mut self.secret_entropy);
        r(&mut self.private_entropy);
        r(&mut self.secret_rate);
        r(&mut self.private_rate);
        ro(&mut self.secret_leakage);
        ro(&mut self.private_leakage);
        for c in self.per_codebook.iter_mut().flatten() {
            r(&mut c.secret_leakage);
            r(&mut c.private_leakage);
            r(&mut c.secret_entropy);
            r(&mut c.private_entropy);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub command: String,
    pub config: ExperimentConfig,
    pub records: Vec<NRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| HarnessError::Encode(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn csv_float(x: f64) -> String {
    // `{}` on f64 is locale independent and round-trips.
    format!("{x}")
}

fn csv_opt(x: Option<f64>) -> String {
    x.map(csv_float).unwrap_or_default()
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| HarnessError::Encode(e.to_string());
    w.write_record(header).map_err(enc)?;
    for row in rows {
        w.write_record(&row).map_err(enc)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Encode(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Encode(e.to_string()))
}

pub fn simulation_csv(report: &SimulationReport) -> Result<String> {
    let mut header = vec![
        "n",
        "trials",
        "secret_agreement",
        "private_agreement",
        "secret_entropy",
        "private_entropy",
        "secret_rate",
        "private_rate",
        "secret_leakage",
        "private_leakage",
    ];
    let status_columns = [
        "x_no_candidate",
        "x_ambiguous",
        "x_search_overflow",
        "y_no_candidate",
        "y_ambiguous",
        "y_search_overflow",
    ];
    header.extend(status_columns);
    let rows = report
        .records
        .iter()
        .map(|r| {
            let mut row = vec![
                r.n.to_string(),
                r.trials.to_string(),
                csv_opt(r.secret_agreement),
                csv_opt(r.private_agreement),
                csv_float(r.secret_entropy),
                csv_float(r.private_entropy),
                csv_float(r.secret_rate),
                csv_float(r.private_rate),
                csv_opt(r.secret_leakage),
                csv_opt(r.private_leakage),
            ];
            for terminal in [Var::X, Var::Y] {
                let counts = r
                    .failures
                    .as_ref()
                    .and_then(|f| f.iter().find(|c| c.terminal == terminal));
                for pick in [
                    |c: &FailureCounts| c.no_candidate,
                    |c: &FailureCounts| c.ambiguous,
                    |c: &FailureCounts| c.search_overflow,
                ] {
                    row.push(counts.map(|c| pick(c).to_string()).unwrap_or_default());
                }
            }
            row
        })
        .collect();
    csv_text(&header, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledVertex {
    pub label: Option<String>,
    pub r_s: f64,
    pub r_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub case: u8,
    pub case_label: CaseLabel,
    pub constants: RegionConstants,
    pub named_points: Vec<LabeledVertex>,
    /// Counter-clockwise from the origin.
    pub vertices: Vec<LabeledVertex>,
}

/// Vertices within this distance of a corner point take its label.
const LABEL_TOLERANCE: f64 = 1e-8;

impl RegionReport {
    pub fn new(region: &RateRegion) -> Self {
        let c = region.constants;
        RegionReport {
            case: region.case_label.number(),
            case_label: region.case_label,
            constants: RegionConstants {
                r_a: round_sig(c.r_a),
                r_b: round_sig(c.r_b),
                r_c: round_sig(c.r_c),
                pk_cap: round_sig(c.pk_cap),
            },
            named_points: region
                .named_points
                .iter()
                .map(|(l, p)| LabeledVertex {
                    label: Some(l.as_str().to_string()),
                    r_s: round_sig(p.r_s),
                    r_p: round_sig(p.r_p),
                })
                .collect(),
            vertices: region
                .labeled_vertices(LABEL_TOLERANCE)
                .into_iter()
                .map(|(l, p)| LabeledVertex {
                    label: l.map(|l| l.as_str().to_string()),
                    r_s: round_sig(p.r_s),
                    r_p: round_sig(p.r_p),
                })
                .collect(),
        }
    }

    /// One row per vertex: `case,label,r_s,r_p`.
    pub fn to_csv(&self) -> Result<String> {
        let rows = self
            .vertices
            .iter()
            .map(|v| {
                vec![
                    self.case.to_string(),
                    v.label.clone().unwrap_or_default(),
                    csv_float(v.r_s),
                    csv_float(v.r_p),
                ]
            })
            .collect();
        csv_text(&["case", "label", "r_s", "r_p"], rows)
    }
}

/// Binning-entropy statistics with rounded figures.
pub fn rounded_lemma_stats(mut s: BinningEntropyStats) -> BinningEntropyStats {
    for x in [
        &mut s.secret_rate,
        &mut s.bin_rate,
        &mut s.delta,
        &mut s.source_entropy,
        &mut s.mean,
        &mut s.bound,
        &mut s.atypical_probability,
        &mut s.mean_crowded_cells,
    ] {
        *x = round_sig(*x);
    }
    s.per_codebook.iter_mut().for_each(|x| *x = round_sig(*x));
    s.crowded_cells.iter_mut().for_each(|x| *x = round_sig(*x));
    s
}

/// Writes `body` to `out`, or to stdout when `out` is `None`.
pub fn emit(body: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, body).map_err(|source| HarnessError::Write {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| HarnessError::Write {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
