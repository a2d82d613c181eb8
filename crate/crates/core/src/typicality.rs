//! Robust (strong) typicality.
//!
//! A tuple of aligned sequences is ε-typical for a law `P` when every joint
//! symbol `a` has empirical count `N(a)` with `|N(a) - nP(a)| <= ε·nP(a)`.
//! Symbols with `P(a) = 0` therefore never occur in a typical tuple.
//!
//! Decoders search companion sequences `u^n` that are jointly typical with
//! what they observe. [`conditional_candidates`] enumerates them by joint
//! type: positions are grouped by the observed symbol, each group picks an
//! admissible count vector over companion symbols, and every arrangement of
//! that multiset is visited.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::source::{JointDistribution, Marginal, VarSet, STRUCTURAL_ZERO};

/// Default limit on the number of candidates one search may visit.
pub const DEFAULT_SEARCH_CAP: u128 = 1 << 26;

/// Default limit on `|A|^n` for brute-force enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

// Absorbs rounding in `n·P(a)·(1 ± ε)` so boundary counts are admitted.
const WINDOW_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TypicalityParams {
    epsilon: f64,
    n: usize,
}

impl TypicalityParams {
    pub fn new(epsilon: f64, n: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::usage(format!(
                "typicality epsilon {epsilon} must lie in (0, 1)"
            )));
        }
        if n == 0 {
            return Err(Error::usage("blocklength must be at least 1"));
        }
        Ok(TypicalityParams { epsilon, n })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Inclusive admissible count range for one joint symbol.
pub fn count_window(p: f64, epsilon: f64, n: usize) -> (u32, u32) {
    if p <= STRUCTURAL_ZERO {
        return (0, 0);
    }
    let nominal = n as f64 * p;
    let lo = libm::ceil(nominal * (1.0 - epsilon) - WINDOW_SLACK).max(0.0);
    let hi = libm::floor(nominal * (1.0 + epsilon) + WINDOW_SLACK).min(n as f64);
    (lo as u32, hi as u32)
}

fn windows(pmf: &[f64], epsilon: f64, n: usize) -> Vec<(u32, u32)> {
    pmf.iter().map(|&p| count_window(p, epsilon, n)).collect()
}

/// Whether the aligned sequences `seqs` (one per member of
/// `marginal.vars()`, canonical order) are jointly ε-typical.
pub fn is_strongly_typical(
    seqs: &[&[u8]],
    marginal: &Marginal,
    params: &TypicalityParams,
) -> Result<bool> {
    if seqs.len() != marginal.radices().len() {
        return Err(Error::usage(format!(
            "{} sequences given for the {}-variable law over {}",
            seqs.len(),
            marginal.radices().len(),
            marginal.vars()
        )));
    }
    let n = params.n;
    if seqs.iter().any(|s| s.len() != n) {
        return Err(Error::usage(format!(
            "sequence lengths must all equal the blocklength {n}"
        )));
    }
    for (s, &r) in seqs.iter().zip(marginal.radices()) {
        if s.iter().any(|&a| a as usize >= r) {
            return Err(Error::usage("symbol outside its alphabet"));
        }
    }
    let mut counts = vec![0u32; marginal.alphabet_size()];
    let mut symbols = vec![0u8; seqs.len()];
    for i in 0..n {
        for (slot, s) in symbols.iter_mut().zip(seqs) {
            *slot = s[i];
        }
        counts[marginal.encode(&symbols)] += 1;
    }
    Ok(counts_typical(&counts, marginal.pmf(), params.epsilon, n))
}

fn counts_typical(counts: &[u32], pmf: &[f64], epsilon: f64, n: usize) -> bool {
    counts.iter().zip(pmf).all(|(&c, &p)| {
        let (lo, hi) = count_window(p, epsilon, n);
        lo <= c && c <= hi
    })
}

/// Every ε-typical sequence over the joint alphabet of `marginal`, by
/// exhaustive filtering. Symbols are joint symbols (see [`Marginal::encode`]).
pub fn enumerate_typical(
    marginal: &Marginal,
    params: &TypicalityParams,
    cap: u64,
) -> Result<Vec<Vec<u8>>> {
    let a = marginal.alphabet_size();
    let n = params.n;
    let total = crate::binning::sequence_count(a, n).filter(|&t| t <= cap);
    let total = total.ok_or(Error::Capacity {
        what: "typical-set enumeration",
        required: (a as u128).saturating_pow(n.min(u32::MAX as usize) as u32),
        limit: cap as u128,
    })?;
    if a > 256 {
        return Err(Error::usage("joint alphabet too large for byte symbols"));
    }
    let mut out = Vec::new();
    let mut counts = vec![0u32; a];
    for index in 0..total {
        let seq = crate::binning::sequence_from_index(index, a, n);
        counts.iter_mut().for_each(|c| *c = 0);
        for &s in &seq {
            counts[s as usize] += 1;
        }
        if counts_typical(&counts, marginal.pmf(), params.epsilon, n) {
            out.push(seq);
        }
    }
    Ok(out)
}

/// Law of `(observed, companion)` as a table indexed `[o][u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairLaw {
    pub observed: VarSet,
    pub companion: VarSet,
    pub observed_radices: Vec<usize>,
    pub companion_radices: Vec<usize>,
    pub table: Vec<Vec<f64>>,
}

impl PairLaw {
    pub fn new(dist: &JointDistribution, observed: VarSet, companion: VarSet) -> Result<Self> {
        if companion.is_empty() {
            return Err(Error::usage("companion variable set is empty"));
        }
        if observed.intersects(companion) {
            return Err(Error::usage(format!(
                "observed {observed} and companion {companion} overlap"
            )));
        }
        let o_rad: Vec<usize> = observed.iter().map(|v| dist.size(v)).collect();
        let u_rad: Vec<usize> = companion.iter().map(|v| dist.size(v)).collect();
        let o_size: usize = o_rad.iter().product();
        let u_size: usize = u_rad.iter().product();
        if u_size > 256 {
            return Err(Error::usage("companion alphabet exceeds 256 joint symbols"));
        }
        let mut table = vec![vec![0.0; u_size]; o_size];
        for (i, &p) in dist.pmf().iter().enumerate() {
            let coords = dist.unflatten(i);
            let o = observed
                .iter()
                .fold(0, |acc, v| acc * dist.size(v) + coords[v.index()]);
            let u = companion
                .iter()
                .fold(0, |acc, v| acc * dist.size(v) + coords[v.index()]);
            table[o][u] += p;
        }
        Ok(PairLaw {
            observed,
            companion,
            observed_radices: o_rad,
            companion_radices: u_rad,
            table,
        })
    }

    pub fn companion_size(&self) -> usize {
        self.table.first().map_or(0, Vec::len)
    }

    /// Joint observed symbol at position `i` of the aligned observations.
    pub fn observed_symbol(&self, observed: &[&[u8]], i: usize) -> usize {
        observed
            .iter()
            .zip(&self.observed_radices)
            .fold(0, |acc, (s, &r)| acc * r + s[i] as usize)
    }

    /// Splits a companion joint symbol into per-variable symbols, written
    /// into `out` in canonical order.
    pub fn split_companion(&self, u: u8, out: &mut [u8]) {
        let mut u = u as usize;
        for (slot, &r) in out.iter_mut().zip(&self.companion_radices).rev() {
            *slot = (u % r) as u8;
            u /= r;
        }
    }
}

/// Enumerates companion sequences jointly ε-typical with `observed`.
///
/// `observed` holds one aligned sequence per member of `observed_vars`
/// (canonical order; may be empty). Yields companion joint-symbol sequences
/// in a deterministic order. Fails with [`Error::SearchOverflow`] when more
/// than `cap` candidates exist.
pub fn conditional_candidates(
    observed: &[&[u8]],
    dist: &JointDistribution,
    observed_vars: VarSet,
    companion_vars: VarSet,
    params: &TypicalityParams,
    cap: u128,
) -> Result<CandidateWalker> {
    let law = PairLaw::new(dist, observed_vars, companion_vars)?;
    CandidateWalker::new(&law, observed, params, cap)
}

#[derive(Debug, Clone)]
struct Group {
    symbol: usize,
    positions: Vec<usize>,
    compositions: Vec<Vec<u32>>,
    composition: usize,
    arrangement: Vec<u8>,
}

impl Group {
    fn reset_arrangement(&mut self) {
        self.arrangement.clear();
        for (u, &c) in self.compositions[self.composition].iter().enumerate() {
            self.arrangement.extend(core::iter::repeat_n(u as u8, c as usize));
        }
    }

    /// Moves to the next (composition, arrangement); false after the last.
    fn advance(&mut self) -> bool {
        if next_permutation(&mut self.arrangement) {
            return true;
        }
        if self.composition + 1 < self.compositions.len() {
            self.composition += 1;
            self.reset_arrangement();
            return true;
        }
        self.composition = 0;
        self.reset_arrangement();
        false
    }

    fn write(&self, out: &mut [u8]) {
        for (&p, &u) in self.positions.iter().zip(&self.arrangement) {
            out[p] = u;
        }
    }
}

/// Lending iterator over typical companion sequences.
#[derive(Debug, Clone)]
pub struct CandidateWalker {
    groups: Vec<Group>,
    current: Vec<u8>,
    total: u128,
    started: bool,
    done: bool,
}

impl CandidateWalker {
    pub fn new(
        law: &PairLaw,
        observed: &[&[u8]],
        params: &TypicalityParams,
        cap: u128,
    ) -> Result<Self> {
        let n = params.n;
        if observed.len() != law.observed_radices.len() {
            return Err(Error::usage(format!(
                "{} observed sequences given for {}",
                observed.len(),
                law.observed
            )));
        }
        if observed.iter().any(|s| s.len() != n) {
            return Err(Error::usage(format!(
                "observed sequences must have length {n}"
            )));
        }
        for (s, &r) in observed.iter().zip(&law.observed_radices) {
            if s.iter().any(|&a| a as usize >= r) {
                return Err(Error::usage("observed symbol outside its alphabet"));
            }
        }
        let mut by_symbol: Vec<Vec<usize>> = vec![Vec::new(); law.table.len()];
        for i in 0..n {
            by_symbol[law.observed_symbol(observed, i)].push(i);
        }
        let mut groups = Vec::new();
        let mut total: u128 = 1;
        let mut empty = false;
        for (o, positions) in by_symbol.into_iter().enumerate() {
            if positions.is_empty() {
                continue;
            }
            let bounds = windows(&law.table[o], params.epsilon, n);
            let compositions = compositions(positions.len() as u32, &bounds);
            if compositions.is_empty() {
                empty = true;
            }
            let group_total = compositions
                .iter()
                .fold(0u128, |acc, c| acc.saturating_add(multinomial(c)));
            total = total.saturating_mul(group_total);
            groups.push(Group {
                symbol: o,
                positions,
                compositions,
                composition: 0,
                arrangement: Vec::new(),
            });
        }
        // Joint symbols whose observed part never occurs still need count 0.
        for (o, row) in law.table.iter().enumerate() {
            let seen = groups.iter().any(|g| g.symbol == o);
            if !seen && row.iter().any(|&p| count_window(p, params.epsilon, n).0 > 0) {
                empty = true;
            }
        }
        if empty {
            total = 0;
        }
        if total > cap {
            return Err(Error::SearchOverflow {
                candidates: total,
                cap,
            });
        }
        if !empty {
            for g in &mut groups {
                g.reset_arrangement();
            }
        }
        Ok(CandidateWalker {
            groups,
            current: vec![0; n],
            total,
            started: false,
            done: empty,
        })
    }

    /// Exact number of candidates this walker yields.
    pub fn total(&self) -> u128 {
        self.total
    }

    /// The next candidate, borrowed until the following call.
    pub fn advance(&mut self) -> Option<&[u8]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            for g in &self.groups {
                g.write(&mut self.current);
            }
            return Some(&self.current);
        }
        for g in self.groups.iter_mut() {
            let moved = g.advance();
            g.write(&mut self.current);
            if moved {
                return Some(&self.current);
            }
        }
        self.done = true;
        None
    }
}

impl Iterator for CandidateWalker {
    type Item = Vec<u8>;

    fn next(&mut self) -> Option<Vec<u8>> {
        self.advance().map(<[u8]>::to_vec)
    }
}

/// All count vectors `c` with `sum(c) = total` and `lo_u <= c_u <= hi_u`,
/// in lexicographic order.
fn compositions(total: u32, bounds: &[(u32, u32)]) -> Vec<Vec<u32>> {
    let mut suffix_lo = vec![0u32; bounds.len() + 1];
    let mut suffix_hi = vec![0u32; bounds.len() + 1];
    for i in (0..bounds.len()).rev() {
        suffix_lo[i] = suffix_lo[i + 1] + bounds[i].0;
        suffix_hi[i] = suffix_hi[i + 1].saturating_add(bounds[i].1);
    }
    let mut out = Vec::new();
    let mut current = vec![0u32; bounds.len()];
    fn rec(
        i: usize,
        remaining: u32,
        bounds: &[(u32, u32)],
        suffix_lo: &[u32],
        suffix_hi: &[u32],
        current: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if i == bounds.len() {
            if remaining == 0 {
                out.push(current.clone());
            }
            return;
        }
        if remaining < suffix_lo[i] || remaining > suffix_hi[i] {
            return;
        }
        let (lo, hi) = bounds[i];
        for c in lo..=hi.min(remaining) {
            current[i] = c;
            rec(i + 1, remaining - c, bounds, suffix_lo, suffix_hi, current, out);
        }
    }
    rec(0, total, bounds, &suffix_lo, &suffix_hi, &mut current, &mut out);
    out
}

fn binomial(n: u32, k: u32) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        acc = match acc.checked_mul(n as u128 - k as u128 + i) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    acc
}

fn multinomial(counts: &[u32]) -> u128 {
    let mut remaining: u32 = counts.iter().sum();
    let mut acc: u128 = 1;
    for &c in counts {
        acc = acc.saturating_mul(binomial(remaining, c));
        remaining -= c;
    }
    acc
}

/// Rearranges into the next lexicographic permutation; false when `v` was
/// the last one (it is then left in descending order).
fn next_permutation(v: &mut [u8]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
