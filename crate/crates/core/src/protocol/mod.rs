//! End-to-end key agreement schemes.
//!
//! A [`Protocol`] is prepared once from a distribution and a
//! [`ProtocolConfig`]: rates are resolved and codebooks built. Each trial
//! then samples a source, produces the public [`Transcript`], lets every
//! terminal decode from its own sequence plus the transcript, and collects
//! the key claims into a [`KeyOutcome`].
//!
//! Time sharing splits the blocklength into two consecutive blocks that run
//! independent schemes; keys are the concatenation of the per-block keys.

pub mod decode;
pub mod rates;

use alloc::format;
use alloc::vec::Vec;
use core::time::Duration;

use crate::binning::{
    make_codebook, sequence_count, sequence_from_index, sequence_index, BinningCodebook,
    CodebookMode, CodebookParams, DEFAULT_TABLE_CAP,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Purpose};
use crate::source::{JointDistribution, SourceTriple, Var};
use crate::typicality::{TypicalityParams, DEFAULT_SEARCH_CAP};

pub use decode::{decode_pair, decode_single, DecodeStatus, Observation, Target};
pub use rates::{derive_rates, RateAssignment, RateDiagnostic, RateName};

/// Gap below which `H(Y|X) = H(Y|XZ)` and point Q collapses onto point P.
pub const POINT_Q_DEGENERACY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Scheme {
    /// `Z` reveals its whole sequence; only a private key is generated.
    PointE,
    /// Both `X` and `Y` recover `Z`; `Y` then recovers `X`.
    PointT,
    /// The terminal closer to `Z` recovers `Z`, the other recovers both.
    PointP,
    /// `X` and `Y` each recover the other's sequence together with `Z`'s.
    PointQ,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::PointE, Scheme::PointT, Scheme::PointP, Scheme::PointQ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::PointE => "pointE",
            Scheme::PointT => "pointT",
            Scheme::PointP => "pointP",
            Scheme::PointQ => "pointQ",
        }
    }

    fn generates_secret_key(self) -> bool {
        self != Scheme::PointE
    }
}

/// Settings of one scheme on one block.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub n: usize,
    /// Typicality parameter of the decoders.
    pub epsilon: f64,
    /// Slack added to the rate formulas; defaults to `epsilon`.
    pub rate_epsilon: Option<f64>,
    pub delta: f64,
    /// Explicit rates replacing the derived ones.
    pub rates: Option<RateAssignment>,
    pub codebook_mode: CodebookMode,
    /// Seed of the codebooks. Trials vary only the source.
    pub master_seed: u64,
    pub search_cap: u128,
    pub table_cap: u64,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, n: usize, epsilon: f64) -> Self {
        SchemeConfig {
            scheme,
            n,
            epsilon,
            rate_epsilon: None,
            delta: 0.0,
            rates: None,
            codebook_mode: CodebookMode::KeyedHash,
            master_seed: 0,
            search_cap: DEFAULT_SEARCH_CAP,
            table_cap: DEFAULT_TABLE_CAP,
        }
    }

    pub fn rate_epsilon(&self) -> f64 {
        self.rate_epsilon.unwrap_or(self.epsilon)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ProtocolConfig {
    Single(SchemeConfig),
    /// `first` runs on the leading `round(lambda * n)` symbols and `second`
    /// on the rest. The inner blocklengths are ignored.
    TimeShare {
        first: SchemeConfig,
        second: SchemeConfig,
        lambda: f64,
        n: usize,
    },
}

impl ProtocolConfig {
    pub fn n(&self) -> usize {
        match self {
            ProtocolConfig::Single(c) => c.n,
            ProtocolConfig::TimeShare { n, .. } => *n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum MessageLabel {
    F,
    G,
    L,
}

impl MessageLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageLabel::F => "f",
            MessageLabel::G => "g",
            MessageLabel::L => "l",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Message {
    /// Position of the block among the non-empty blocks.
    pub block: usize,
    pub sender: Var,
    pub label: MessageLabel,
    pub index: u64,
}

/// Everything sent over the public channel, in order.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Transcript {
    pub messages: Vec<Message>,
}

impl Transcript {
    pub fn find(&self, block: usize, label: MessageLabel) -> Option<u64> {
        self.messages
            .iter()
            .find(|m| m.block == block && m.label == label)
            .map(|m| m.index)
    }

    pub fn block(&self, block: usize) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(move |m| m.block == block)
    }

    fn require(&self, block: usize, label: MessageLabel) -> Result<u64> {
        self.find(block, label).ok_or_else(|| {
            Error::usage(format!(
                "transcript lacks message {} of block {block}",
                label.as_str()
            ))
        })
    }
}

/// What one terminal concludes from one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TerminalView {
    pub status: DecodeStatus,
    pub secret_key: Option<u64>,
    pub private_key: Option<u64>,
}

impl TerminalView {
    fn own(secret_key: Option<u64>, private_key: Option<u64>) -> Self {
        TerminalView {
            status: DecodeStatus::Ok,
            secret_key,
            private_key,
        }
    }
}

/// Key claims of all terminals.
///
/// Claims are indexed by [`Var::index`]; a claim is `None` when the
/// terminal does not hold that key or failed to decode what it needs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KeyOutcome {
    pub secret_claims: [Option<u64>; 3],
    pub private_claims: [Option<u64>; 3],
    pub status: [DecodeStatus; 3],
    pub secret_alphabet: u64,
    pub private_alphabet: u64,
    /// Whether any block generates a secret key.
    pub secret_assigned: bool,
}

impl KeyOutcome {
    pub fn secret_claim(&self, terminal: Var) -> Option<u64> {
        self.secret_claims[terminal.index()]
    }

    pub fn private_claim(&self, terminal: Var) -> Option<u64> {
        self.private_claims[terminal.index()]
    }

    pub fn status(&self, terminal: Var) -> DecodeStatus {
        self.status[terminal.index()]
    }

    /// All three terminals hold the same secret key. Schemes without a
    /// secret key agree trivially.
    pub fn secret_agrees(&self) -> bool {
        if !self.secret_assigned {
            return true;
        }
        match self.secret_claims {
            [Some(a), Some(b), Some(c)] => a == b && b == c,
            _ => false,
        }
    }

    /// `X` and `Y` decoded without failure and hold the same private key.
    pub fn private_agrees(&self) -> bool {
        let (x, y) = (Var::X.index(), Var::Y.index());
        self.status[x].is_ok()
            && self.status[y].is_ok()
            && self.private_claims[x].is_some()
            && self.private_claims[x] == self.private_claims[y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CodebookSummary {
    pub block: usize,
    pub params: CodebookParams,
    pub num_bins: u64,
    pub num_sub_bins: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProtocolRun {
    pub source: SourceTriple,
    pub transcript: Transcript,
    pub keys: KeyOutcome,
    /// Per block, the view of `X`, `Y`, `Z` in index order.
    pub views: Vec<[TerminalView; 3]>,
    pub codebooks: Vec<CodebookSummary>,
    /// Wall-clock time, filled in by callers that measure it.
    pub elapsed: Option<Duration>,
}

/// One block of a prepared protocol.
#[derive(Debug, Clone)]
pub struct Block {
    /// Scheme actually run, after a degenerate point Q falls back to P.
    pub scheme: Scheme,
    pub requested: Scheme,
    pub offset: usize,
    pub len: usize,
    pub rates: RateAssignment,
    params: TypicalityParams,
    search_cap: u128,
    codebooks: [Option<BinningCodebook>; 3],
}

impl Block {
    pub fn codebook(&self, terminal: Var) -> Option<&BinningCodebook> {
        self.codebooks[terminal.index()].as_ref()
    }

    fn book(&self, terminal: Var) -> &BinningCodebook {
        self.codebook(terminal)
            .expect("scheme layout guarantees this codebook")
    }

    pub fn params(&self) -> &TypicalityParams {
        &self.params
    }

    pub fn secret_alphabet(&self) -> u64 {
        match self.codebook(Var::Z) {
            Some(cb) if self.scheme.generates_secret_key() => cb.num_sub_bins(),
            _ => 1,
        }
    }

    pub fn private_alphabet(&self) -> u64 {
        self.book(self.rates.pk_owner).num_sub_bins()
    }

    /// Terminal that decodes `Z` alone in point P; the other terminal
    /// decodes the pair.
    fn owner(&self) -> Var {
        self.rates.pk_owner
    }
}

fn other(terminal: Var) -> Var {
    match terminal {
        Var::X => Var::Y,
        Var::Y => Var::X,
        Var::Z => Var::Z,
    }
}

fn status_of<T>(r: &core::result::Result<T, DecodeStatus>) -> DecodeStatus {
    match r {
        Ok(_) => DecodeStatus::Ok,
        Err(s) => *s,
    }
}

/// A protocol with resolved rates and built codebooks.
#[derive(Debug, Clone)]
pub struct Protocol {
    dist: JointDistribution,
    n: usize,
    blocks: Vec<Block>,
    secret_alphabet: u64,
    private_alphabet: u64,
}

impl Protocol {
    pub fn prepare(dist: &JointDistribution, config: &ProtocolConfig) -> Result<Self> {
        let n = config.n();
        if n == 0 {
            return Err(Error::usage("blocklength must be at least 1"));
        }
        let parts: Vec<(&SchemeConfig, usize)> = match config {
            ProtocolConfig::Single(c) => alloc::vec![(c, n)],
            ProtocolConfig::TimeShare {
                first,
                second,
                lambda,
                ..
            } => {
                if !(0.0..=1.0).contains(lambda) {
                    return Err(Error::usage(format!(
                        "time-sharing fraction {lambda} must lie in [0, 1]"
                    )));
                }
                let head = libm::round(lambda * n as f64) as usize;
                alloc::vec![(first, head), (second, n - head)]
            }
        };
        let mut blocks = Vec::new();
        let mut offset = 0;
        for (cfg, len) in parts {
            if len > 0 {
                blocks.push(Self::block(dist, cfg, offset, len)?);
            }
            offset += len;
        }
        let product = |f: fn(&Block) -> u64| -> Result<u64> {
            blocks.iter().try_fold(1u64, |acc, b| {
                acc.checked_mul(f(b)).ok_or(Error::Capacity {
                    what: "concatenated key alphabet",
                    required: acc as u128 * f(b) as u128,
                    limit: u64::MAX as u128,
                })
            })
        };
        let secret_alphabet = product(Block::secret_alphabet)?;
        let private_alphabet = product(Block::private_alphabet)?;
        Ok(Protocol {
            dist: dist.clone(),
            n,
            blocks,
            secret_alphabet,
            private_alphabet,
        })
    }

    fn block(dist: &JointDistribution, cfg: &SchemeConfig, offset: usize, len: usize) -> Result<Block> {
        let profile = dist.profile();
        let scheme = if cfg.scheme == Scheme::PointQ
            && profile.h_y_given_x - profile.h_y_given_xz <= POINT_Q_DEGENERACY
        {
            Scheme::PointP
        } else {
            cfg.scheme
        };
        let rates = match &cfg.rates {
            Some(r) => r.clone(),
            None => derive_rates(scheme, &profile, cfg.rate_epsilon(), cfg.delta),
        };
        let params = TypicalityParams::new(cfg.epsilon, len)?;
        let owner = rates.pk_owner;
        let layout: &[(Var, f64)] = &match scheme {
            Scheme::PointE => [(Var::X, rates.r_p), (Var::Z, f64::NAN), (Var::Y, f64::NAN)],
            Scheme::PointT => [(Var::Z, rates.r_s), (Var::X, rates.r_p), (Var::Y, f64::NAN)],
            Scheme::PointP => [(Var::Z, rates.r_s), (owner, rates.r_p), (other(owner), f64::NAN)],
            Scheme::PointQ => [(Var::Z, rates.r_s), (Var::X, rates.r_p), (Var::Y, 0.0)],
        };
        let mut codebooks: [Option<BinningCodebook>; 3] = [None, None, None];
        for &(terminal, sub_rate) in layout {
            if sub_rate.is_nan() {
                continue;
            }
            codebooks[terminal.index()] = Some(make_codebook(CodebookParams {
                mode: cfg.codebook_mode,
                terminal,
                n: len,
                alphabet_size: dist.size(terminal),
                bin_rate: rates.bin_rate(terminal),
                sub_rate,
                seed: derive_seed(cfg.master_seed, Purpose::Codebook, terminal.index() as u64),
                table_cap: cfg.table_cap,
            })?);
        }
        if scheme == Scheme::PointE {
            let sizes = dist.size(Var::Z);
            if sequence_count(sizes, len).is_none() {
                return Err(Error::Capacity {
                    what: "raw sequence index of Z",
                    required: (sizes as u128).saturating_pow(len as u32),
                    limit: u64::MAX as u128,
                });
            }
        }
        Ok(Block {
            scheme,
            requested: cfg.scheme,
            offset,
            len,
            rates,
            params,
            search_cap: cfg.search_cap,
            codebooks,
        })
    }

    pub fn distribution(&self) -> &JointDistribution {
        &self.dist
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn secret_alphabet(&self) -> u64 {
        self.secret_alphabet
    }

    pub fn private_alphabet(&self) -> u64 {
        self.private_alphabet
    }

    pub fn codebook_summaries(&self) -> Vec<CodebookSummary> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            for cb in b.codebooks.iter().flatten() {
                out.push(CodebookSummary {
                    block: i,
                    params: *cb.params(),
                    num_bins: cb.num_bins(),
                    num_sub_bins: cb.num_sub_bins(),
                });
            }
        }
        out
    }

    /// Samples the source with `trial_seed` and runs the protocol on it.
    pub fn run(&self, trial_seed: u64) -> Result<ProtocolRun> {
        let source = self.dist.sample(self.n, trial_seed)?;
        self.run_on(source)
    }

    pub fn run_on(&self, source: SourceTriple) -> Result<ProtocolRun> {
        if source.len() != self.n {
            return Err(Error::usage(format!(
                "source has length {}, protocol expects {}",
                source.len(),
                self.n
            )));
        }
        let transcript = self.transmit(&source)?;
        let mut views = Vec::with_capacity(self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate() {
            let mut row = [TerminalView::own(None, None); 3];
            for terminal in Var::ALL {
                let own = &source.get(terminal)[b.offset..b.offset + b.len];
                row[terminal.index()] = self.view(i, terminal, own, &transcript)?;
            }
            views.push(row);
        }
        let keys = self.assemble(&views);
        Ok(ProtocolRun {
            source,
            transcript,
            keys,
            views,
            codebooks: self.codebook_summaries(),
            elapsed: None,
        })
    }

    /// The public messages generated by `source`.
    pub fn transmit(&self, source: &SourceTriple) -> Result<Transcript> {
        let mut messages = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            let part = |v: Var| &source.get(v)[b.offset..b.offset + b.len];
            let mut send = |sender: Var, label: MessageLabel, index: u64| {
                messages.push(Message {
                    block: i,
                    sender,
                    label,
                    index,
                })
            };
            let bin = |v: Var| b.book(v).bin_index(part(v));
            match b.scheme {
                Scheme::PointE => {
                    send(
                        Var::Z,
                        MessageLabel::F,
                        sequence_index(part(Var::Z), self.dist.size(Var::Z)),
                    );
                    send(Var::X, MessageLabel::G, bin(Var::X)?);
                }
                Scheme::PointT => {
                    send(Var::Z, MessageLabel::F, bin(Var::Z)?);
                    send(Var::X, MessageLabel::G, bin(Var::X)?);
                }
                Scheme::PointP => {
                    send(Var::Z, MessageLabel::F, bin(Var::Z)?);
                    send(b.owner(), MessageLabel::G, bin(b.owner())?);
                }
                Scheme::PointQ => {
                    send(Var::Z, MessageLabel::F, bin(Var::Z)?);
                    send(Var::X, MessageLabel::G, bin(Var::X)?);
                    send(Var::Y, MessageLabel::L, bin(Var::Y)?);
                }
            }
        }
        Ok(Transcript { messages })
    }

    /// Decodes at `terminal` on block `block` from its own block sequence
    /// and the transcript alone.
    pub fn view(
        &self,
        block: usize,
        terminal: Var,
        own: &[u8],
        transcript: &Transcript,
    ) -> Result<TerminalView> {
        let b = self
            .blocks
            .get(block)
            .ok_or_else(|| Error::usage(format!("no block {block}")))?;
        if own.len() != b.len {
            return Err(Error::usage(format!(
                "block {block} expects sequences of length {}, got {}",
                b.len,
                own.len()
            )));
        }
        let dist = &self.dist;
        let params = &b.params;
        let cap = b.search_cap;
        let target = |v: Var, label: MessageLabel| -> Result<Target<'_>> {
            Ok(Target {
                var: v,
                codebook: b.book(v),
                bin: transcript.require(block, label)?,
            })
        };
        let sk = |z: &[u8]| b.book(Var::Z).sub_bin_of(z);
        let pk = |seq: &[u8]| b.book(b.owner()).sub_bin_of(seq);

        if terminal == Var::Z {
            let secret = if b.scheme.generates_secret_key() {
                Some(sk(own))
            } else {
                None
            };
            return Ok(TerminalView::own(secret, None));
        }

        let obs = Observation::new().with(terminal, own);
        let view = match b.scheme {
            Scheme::PointE => {
                if terminal == Var::X {
                    TerminalView::own(None, Some(pk(own)))
                } else {
                    let f = transcript.require(block, MessageLabel::F)?;
                    let z = sequence_from_index(f, dist.size(Var::Z), b.len);
                    let obs = obs.with(Var::Z, &z);
                    let got = decode_single(dist, &obs, target(Var::X, MessageLabel::G)?, params, cap)?;
                    TerminalView {
                        status: status_of(&got),
                        secret_key: None,
                        private_key: got.ok().map(|x| pk(&x)),
                    }
                }
            }
            Scheme::PointT => {
                let z = decode_single(dist, &obs, target(Var::Z, MessageLabel::F)?, params, cap)?;
                if terminal == Var::X {
                    TerminalView {
                        status: status_of(&z),
                        secret_key: z.ok().map(|z| sk(&z)),
                        private_key: Some(pk(own)),
                    }
                } else {
                    match z {
                        Err(status) => TerminalView {
                            status,
                            secret_key: None,
                            private_key: None,
                        },
                        Ok(z) => {
                            let obs = obs.with(Var::Z, &z);
                            let x = decode_single(
                                dist,
                                &obs,
                                target(Var::X, MessageLabel::G)?,
                                params,
                                cap,
                            )?;
                            TerminalView {
                                status: status_of(&x),
                                secret_key: Some(sk(&z)),
                                private_key: x.ok().map(|x| pk(&x)),
                            }
                        }
                    }
                }
            }
            Scheme::PointP => {
                let owner = b.owner();
                if terminal == owner {
                    let z = decode_single(dist, &obs, target(Var::Z, MessageLabel::F)?, params, cap)?;
                    TerminalView {
                        status: status_of(&z),
                        secret_key: z.ok().map(|z| sk(&z)),
                        private_key: Some(pk(own)),
                    }
                } else {
                    let got = decode_pair(
                        dist,
                        &obs,
                        target(owner, MessageLabel::G)?,
                        target(Var::Z, MessageLabel::F)?,
                        params,
                        cap,
                    )?;
                    TerminalView {
                        status: status_of(&got),
                        secret_key: got.as_ref().ok().map(|(_, z)| sk(z)),
                        private_key: got.as_ref().ok().map(|(o, _)| pk(o)),
                    }
                }
            }
            Scheme::PointQ => {
                let (peer, label) = if terminal == Var::X {
                    (Var::Y, MessageLabel::L)
                } else {
                    (Var::X, MessageLabel::G)
                };
                let got = decode_pair(
                    dist,
                    &obs,
                    target(peer, label)?,
                    target(Var::Z, MessageLabel::F)?,
                    params,
                    cap,
                )?;
                let private_key = if terminal == Var::X {
                    Some(pk(own))
                } else {
                    got.as_ref().ok().map(|(x, _)| pk(x))
                };
                TerminalView {
                    status: status_of(&got),
                    secret_key: got.as_ref().ok().map(|(_, z)| sk(z)),
                    private_key,
                }
            }
        };
        Ok(view)
    }

    /// Combines per-block views into concatenated keys.
    pub fn assemble(&self, views: &[[TerminalView; 3]]) -> KeyOutcome {
        let mut secret_claims = [Some(0u64); 3];
        let mut private_claims = [None, None, None];
        private_claims[Var::X.index()] = Some(0u64);
        private_claims[Var::Y.index()] = Some(0u64);
        let mut status = [DecodeStatus::Ok; 3];
        let mut secret_scale = 1u64;
        let mut private_scale = 1u64;
        let mut secret_assigned = false;
        for (b, row) in self.blocks.iter().zip(views) {
            let has_secret = b.scheme.generates_secret_key();
            secret_assigned |= has_secret;
            for terminal in Var::ALL {
                let t = terminal.index();
                let v = &row[t];
                if status[t].is_ok() {
                    status[t] = v.status;
                }
                if has_secret {
                    secret_claims[t] = match (secret_claims[t], v.secret_key) {
                        (Some(acc), Some(k)) => Some(acc + k * secret_scale),
                        _ => None,
                    };
                }
                if terminal != Var::Z {
                    private_claims[t] = match (private_claims[t], v.private_key) {
                        (Some(acc), Some(k)) => Some(acc + k * private_scale),
                        _ => None,
                    };
                }
            }
            // Wraps only after the last block, whose scale is never used.
            secret_scale = secret_scale.wrapping_mul(b.secret_alphabet());
            private_scale = private_scale.wrapping_mul(b.private_alphabet());
        }
        if !secret_assigned {
            secret_claims = [None; 3];
        }
        KeyOutcome {
            secret_claims,
            private_claims,
            status,
            secret_alphabet: self.secret_alphabet,
            private_alphabet: self.private_alphabet,
            secret_assigned,
        }
    }

    /// Keys computed from the true sequences: `Z`'s secret key (0 when no
    /// block generates one) and the private-key owner's private key.
    pub fn source_keys(&self, source: &SourceTriple) -> (u64, u64) {
        let (mut secret, mut private) = (0u64, 0u64);
        let (mut secret_scale, mut private_scale) = (1u64, 1u64);
        for b in &self.blocks {
            let part = |v: Var| &source.get(v)[b.offset..b.offset + b.len];
            if b.scheme.generates_secret_key() {
                secret += b.book(Var::Z).sub_bin_of(part(Var::Z)) * secret_scale;
            }
            private += b.book(b.owner()).sub_bin_of(part(b.owner())) * private_scale;
            secret_scale = secret_scale.wrapping_mul(b.secret_alphabet());
            private_scale = private_scale.wrapping_mul(b.private_alphabet());
        }
        (secret, private)
    }

    /// Whether every codebook stores an explicit table.
    pub fn uses_explicit_tables(&self) -> bool {
        self.blocks
            .iter()
            .flat_map(|b| b.codebooks.iter().flatten())
            .all(|cb| cb.mode() == CodebookMode::ExplicitTable)
    }

    /// Achieved `(log2|K_S|/n, log2|K_P|/n)`.
    pub fn achieved_rates(&self) -> (f64, f64) {
        let n = self.n as f64;
        (
            libm::log2(self.secret_alphabet as f64) / n,
            libm::log2(self.private_alphabet as f64) / n,
        )
    }
}

fn run_scheme(
    scheme: Scheme,
    dist: &JointDistribution,
    config: &SchemeConfig,
    trial_seed: u64,
) -> Result<ProtocolRun> {
    let mut config = config.clone();
    config.scheme = scheme;
    Protocol::prepare(dist, &ProtocolConfig::Single(config))?.run(trial_seed)
}

pub fn run_point_p(dist: &JointDistribution, config: &SchemeConfig, trial_seed: u64) -> Result<ProtocolRun> {
    run_scheme(Scheme::PointP, dist, config, trial_seed)
}

/// Falls back to point P when `H(Y|X) = H(Y|XZ)`.
pub fn run_point_q(dist: &JointDistribution, config: &SchemeConfig, trial_seed: u64) -> Result<ProtocolRun> {
    run_scheme(Scheme::PointQ, dist, config, trial_seed)
}

pub fn run_point_t(dist: &JointDistribution, config: &SchemeConfig, trial_seed: u64) -> Result<ProtocolRun> {
    run_scheme(Scheme::PointT, dist, config, trial_seed)
}

pub fn run_point_e(dist: &JointDistribution, config: &SchemeConfig, trial_seed: u64) -> Result<ProtocolRun> {
    run_scheme(Scheme::PointE, dist, config, trial_seed)
}

pub fn time_share(
    dist: &JointDistribution,
    first: &SchemeConfig,
    second: &SchemeConfig,
    lambda: f64,
    n: usize,
    trial_seed: u64,
) -> Result<ProtocolRun> {
    let config = ProtocolConfig::TimeShare {
        first: first.clone(),
        second: second.clone(),
        lambda,
        n,
    };
    Protocol::prepare(dist, &config)?.run(trial_seed)
}

#[cfg(test)]
mod tests;
