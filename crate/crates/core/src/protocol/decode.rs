//! Bin-restricted joint-typicality decoders.
//!
//! A decoder sees only its own sequence(s), the public bin indices and the
//! codebooks. It claims the unique candidate in the announced bin(s) that
//! is jointly typical with what it holds, and fails otherwise.

use alloc::vec::Vec;

use crate::binning::BinningCodebook;
use crate::error::{Error, Result};
use crate::source::{JointDistribution, Var, VarSet};
use crate::typicality::{CandidateWalker, PairLaw, TypicalityParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DecodeStatus {
    Ok,
    NoCandidate,
    Ambiguous,
    SearchOverflow,
}

impl DecodeStatus {
    pub const ALL: [DecodeStatus; 4] = [
        DecodeStatus::Ok,
        DecodeStatus::NoCandidate,
        DecodeStatus::Ambiguous,
        DecodeStatus::SearchOverflow,
    ];

    pub fn is_ok(self) -> bool {
        self == DecodeStatus::Ok
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DecodeStatus::Ok => "ok",
            DecodeStatus::NoCandidate => "no_candidate",
            DecodeStatus::Ambiguous => "ambiguous",
            DecodeStatus::SearchOverflow => "search_overflow",
        }
    }
}

/// A sequence the decoder must recover, known only through its bin.
#[derive(Debug, Clone, Copy)]
pub struct Target<'a> {
    pub var: Var,
    pub codebook: &'a BinningCodebook,
    pub bin: u64,
}

/// Sequences held by the decoder, keyed by variable.
#[derive(Debug, Clone, Default)]
pub struct Observation<'a> {
    entries: Vec<(Var, &'a [u8])>,
}

impl<'a> Observation<'a> {
    pub fn new() -> Self {
        Observation::default()
    }

    pub fn with(mut self, var: Var, seq: &'a [u8]) -> Self {
        self.entries.retain(|(v, _)| *v != var);
        self.entries.push((var, seq));
        self.entries.sort_by_key(|(v, _)| *v);
        self
    }

    pub fn vars(&self) -> VarSet {
        self.entries
            .iter()
            .fold(VarSet::EMPTY, |s, (v, _)| s.with(*v))
    }

    fn slices(&self) -> Vec<&'a [u8]> {
        self.entries.iter().map(|(_, s)| *s).collect()
    }
}

fn overflow_to_status<T>(r: Result<T>) -> Result<core::result::Result<T, DecodeStatus>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(Error::SearchOverflow { .. }) => Ok(Err(DecodeStatus::SearchOverflow)),
        Err(e) => Err(e),
    }
}

/// Recovers one sequence from its bin.
pub fn decode_single(
    dist: &JointDistribution,
    observed: &Observation<'_>,
    target: Target<'_>,
    params: &TypicalityParams,
    cap: u128,
) -> Result<core::result::Result<Vec<u8>, DecodeStatus>> {
    let law = PairLaw::new(dist, observed.vars(), VarSet::single(target.var))?;
    let walker = CandidateWalker::new(&law, &observed.slices(), params, cap);
    let mut walker = match overflow_to_status(walker)? {
        Ok(w) => w,
        Err(status) => return Ok(Err(status)),
    };
    let mut found: Option<Vec<u8>> = None;
    while let Some(candidate) = walker.advance() {
        if target.codebook.bin_of(candidate) == target.bin {
            if found.is_some() {
                return Ok(Err(DecodeStatus::Ambiguous));
            }
            found = Some(candidate.to_vec());
        }
    }
    Ok(found.ok_or(DecodeStatus::NoCandidate))
}

/// Outcome of a joint decode: both sequences, or why the search failed.
pub type PairDecode = core::result::Result<(Vec<u8>, Vec<u8>), DecodeStatus>;

/// Recovers a pair of sequences from their bins, searching `first`
/// candidates before `second` candidates.
///
/// `cap` bounds the total number of candidates visited across the nested
/// searches.
pub fn decode_pair(
    dist: &JointDistribution,
    observed: &Observation<'_>,
    first: Target<'_>,
    second: Target<'_>,
    params: &TypicalityParams,
    cap: u128,
) -> Result<PairDecode> {
    let outer_law = PairLaw::new(dist, observed.vars(), VarSet::single(first.var))?;
    let inner_vars = observed.vars().with(first.var);
    let inner_law = PairLaw::new(dist, inner_vars, VarSet::single(second.var))?;

    let walker = CandidateWalker::new(&outer_law, &observed.slices(), params, cap);
    let mut outer = match overflow_to_status(walker)? {
        Ok(w) => w,
        Err(status) => return Ok(Err(status)),
    };
    let mut budget = cap - outer.total();
    let mut found: Option<(Vec<u8>, Vec<u8>)> = None;
    while let Some(a) = outer.advance() {
        if first.codebook.bin_of(a) != first.bin {
            continue;
        }
        let a = a.to_vec();
        let inner_obs = observed.clone().with(first.var, &a);
        let walker = CandidateWalker::new(&inner_law, &inner_obs.slices(), params, budget);
        let mut inner = match overflow_to_status(walker)? {
            Ok(w) => w,
            Err(status) => return Ok(Err(status)),
        };
        budget -= inner.total();
        while let Some(b) = inner.advance() {
            if second.codebook.bin_of(b) == second.bin {
                if found.is_some() {
                    return Ok(Err(DecodeStatus::Ambiguous));
                }
                found = Some((a.clone(), b.to_vec()));
            }
        }
    }
    Ok(found.ok_or(DecodeStatus::NoCandidate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::{make_codebook, CodebookMode, CodebookParams};
    use crate::source::examples::*;
    use crate::typicality::DEFAULT_SEARCH_CAP;

    fn codebook(terminal: Var, n: usize, rate: f64, seed: u64) -> BinningCodebook {
        make_codebook(CodebookParams {
            mode: CodebookMode::ExplicitTable,
            terminal,
            n,
            alphabet_size: 2,
            bin_rate: rate,
            sub_rate: 0.0,
            seed,
            table_cap: 1 << 20,
        })
        .unwrap()
    }

    #[test]
    fn identical_pair_decodes_exactly() {
        let d = shared_xz_independent_y();
        let p = TypicalityParams::new(0.3, 10).unwrap();
        let cb = codebook(Var::Z, 10, 0.0, 1);
        for seed in 0..20 {
            let t = d.sample(10, seed).unwrap();
            let got = decode_single(
                &d,
                &Observation::new().with(Var::X, &t.x),
                Target {
                    var: Var::Z,
                    codebook: &cb,
                    bin: cb.bin_of(&t.z),
                },
                &p,
                DEFAULT_SEARCH_CAP,
            )
            .unwrap();
            let m = d.marginal(VarSet::XZ);
            if crate::typicality::is_strongly_typical(&[&t.x, &t.z], &m, &p).unwrap() {
                assert_eq!(got, Ok(t.z.clone()));
            } else {
                assert_eq!(got, Err(DecodeStatus::NoCandidate));
            }
        }
    }

    #[test]
    fn single_bin_over_many_candidates_is_ambiguous() {
        let d = independent_bits();
        let p = TypicalityParams::new(0.5, 8).unwrap();
        let cb = codebook(Var::Z, 8, 0.0, 1);
        let x = [0u8, 1, 0, 1, 0, 1, 0, 1];
        let got = decode_single(
            &d,
            &Observation::new().with(Var::X, &x),
            Target {
                var: Var::Z,
                codebook: &cb,
                bin: 0,
            },
            &p,
            DEFAULT_SEARCH_CAP,
        )
        .unwrap();
        assert_eq!(got, Err(DecodeStatus::Ambiguous));
    }

    #[test]
    fn tiny_cap_overflows() {
        let d = independent_bits();
        let p = TypicalityParams::new(0.5, 8).unwrap();
        let cb = codebook(Var::Z, 8, 1.0, 1);
        let x = [0u8, 1, 0, 1, 0, 1, 0, 1];
        let target = Target {
            var: Var::Z,
            codebook: &cb,
            bin: 3,
        };
        let obs = Observation::new().with(Var::X, &x);
        assert_eq!(
            decode_single(&d, &obs, target, &p, 4).unwrap(),
            Err(DecodeStatus::SearchOverflow)
        );
    }

    #[test]
    fn pair_decoding_on_xor_with_full_rate_bins() {
        // Full-rate bins identify every sequence, so the pair is recovered
        // whenever the true triple is typical.
        let d = xor_triple();
        let p = TypicalityParams::new(0.5, 8).unwrap();
        let cz = codebook(Var::Z, 8, 1.0, 2);
        let cx = codebook(Var::X, 8, 1.0, 3);
        let m = d.marginal(VarSet::XYZ);
        let mut decoded = 0;
        for seed in 0..30 {
            let t = d.sample(8, seed).unwrap();
            let typical = crate::typicality::is_strongly_typical(&[&t.x, &t.y, &t.z], &m, &p)
                .unwrap();
            let got = decode_pair(
                &d,
                &Observation::new().with(Var::Y, &t.y),
                Target {
                    var: Var::X,
                    codebook: &cx,
                    bin: cx.bin_of(&t.x),
                },
                Target {
                    var: Var::Z,
                    codebook: &cz,
                    bin: cz.bin_of(&t.z),
                },
                &p,
                DEFAULT_SEARCH_CAP,
            )
            .unwrap();
            if typical {
                let (x, z) = got.expect("typical triple must decode");
                assert_eq!((x, z), (t.x.clone(), t.z.clone()));
                decoded += 1;
            }
        }
        assert!(decoded > 0);
    }
}
