//! Random binning codebooks.
//!
//! A codebook assigns every length-`n` sequence of one terminal a bin index
//! in `[0, num_bins)` and an independent sub-bin index in
//! `[0, num_sub_bins)`. Two interchangeable backings exist:
//!
//! * [`CodebookMode::ExplicitTable`] draws both indices uniformly for every
//!   sequence from seeded ChaCha8 streams and stores them. This is the exact
//!   random-binning ensemble and is only feasible for small `|A|^n`.
//! * [`CodebookMode::KeyedHash`] evaluates SipHash-1-3, keyed by the seed and
//!   the purpose tag, over the bit-packed sequence and reduces it modulo the
//!   index range. It emulates the ensemble at any blocklength.

use alloc::format;
use alloc::vec::Vec;
use core::hash::Hasher;

use rand::Rng;
use siphasher::sip::SipHasher13;

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::source::Var;

/// Default largest `|A|^n` stored in explicit-table mode.
pub const DEFAULT_TABLE_CAP: u64 = 1 << 24;

/// Largest bin count a codebook may have.
pub const MAX_BINS: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CodebookMode {
    ExplicitTable,
    KeyedHash,
}

/// `max(1, round(2^(n·rate)))`.
pub fn index_count(n: usize, rate: f64) -> Result<u64> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::usage(format!("rate {rate} must be finite and non-negative")));
    }
    let exponent = n as f64 * rate;
    if exponent > 62.0 {
        return Err(Error::Capacity {
            what: "bin index range",
            required: libm::round(libm::exp2(exponent.min(127.0))) as u128,
            limit: MAX_BINS as u128,
        });
    }
    Ok((libm::round(libm::exp2(exponent)) as u64).max(1))
}

/// Number of length-`n` sequences over an alphabet, if it fits in `u64`.
pub fn sequence_count(alphabet_size: usize, n: usize) -> Option<u64> {
    (alphabet_size as u64).checked_pow(u32::try_from(n).ok()?)
}

/// Lexicographic rank of a sequence, first symbol most significant.
pub fn sequence_index(seq: &[u8], alphabet_size: usize) -> u64 {
    seq.iter()
        .fold(0u64, |acc, &s| acc * alphabet_size as u64 + s as u64)
}

/// Inverse of [`sequence_index`].
pub fn sequence_from_index(mut index: u64, alphabet_size: usize, n: usize) -> Vec<u8> {
    let mut seq = alloc::vec![0u8; n];
    for slot in seq.iter_mut().rev() {
        *slot = (index % alphabet_size as u64) as u8;
        index /= alphabet_size as u64;
    }
    seq
}

/// FNV-1a of a purpose tag; keys the tag's stream.
pub fn tag_id(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn bin_tag(terminal: Var) -> &'static str {
    match terminal {
        Var::X => "bin-X",
        Var::Y => "bin-Y",
        Var::Z => "bin-Z",
    }
}

pub fn sub_tag(terminal: Var) -> &'static str {
    match terminal {
        Var::X => "sub-X",
        Var::Y => "sub-Y",
        Var::Z => "sub-Z",
    }
}

/// Construction parameters of one terminal's codebook.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CodebookParams {
    pub mode: CodebookMode,
    pub terminal: Var,
    pub n: usize,
    pub alphabet_size: usize,
    pub bin_rate: f64,
    pub sub_rate: f64,
    pub seed: u64,
    pub table_cap: u64,
}

#[derive(Debug, Clone, PartialEq)]
enum Backing {
    Table { bins: Vec<u64>, subs: Vec<u64> },
    Hash { bin_key: (u64, u64), sub_key: (u64, u64) },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinningCodebook {
    params: CodebookParams,
    num_bins: u64,
    num_sub_bins: u64,
    bits_per_symbol: u32,
    backing: Backing,
}

pub fn make_codebook(params: CodebookParams) -> Result<BinningCodebook> {
    BinningCodebook::new(params)
}

impl BinningCodebook {
    pub fn new(params: CodebookParams) -> Result<Self> {
        if params.n == 0 || params.alphabet_size == 0 || params.alphabet_size > 256 {
            return Err(Error::usage(format!(
                "codebook needs n >= 1 and alphabet in [1, 256], got n = {}, |A| = {}",
                params.n, params.alphabet_size
            )));
        }
        let num_bins = index_count(params.n, params.bin_rate)?;
        let num_sub_bins = index_count(params.n, params.sub_rate)?;
        let bin_tag = bin_tag(params.terminal);
        let sub_tag = sub_tag(params.terminal);
        let backing = match params.mode {
            CodebookMode::ExplicitTable => {
                let count = sequence_count(params.alphabet_size, params.n)
                    .filter(|&c| c <= params.table_cap)
                    .ok_or_else(|| Error::Capacity {
                        what: "explicit binning table",
                        required: (params.alphabet_size as u128)
                            .saturating_pow(params.n.min(u32::MAX as usize) as u32),
                        limit: params.table_cap as u128,
                    })?;
                let draw = |purpose, tag, range: u64| -> Vec<u64> {
                    if range == 1 {
                        return Vec::new();
                    }
                    let mut rng = rng::stream(params.seed, purpose, tag_id(tag));
                    (0..count).map(|_| rng.gen_range(0..range)).collect()
                };
                Backing::Table {
                    bins: draw(Purpose::BinTable, bin_tag, num_bins),
                    subs: draw(Purpose::SubBinTable, sub_tag, num_sub_bins),
                }
            }
            CodebookMode::KeyedHash => Backing::Hash {
                bin_key: (params.seed, tag_id(bin_tag)),
                sub_key: (params.seed, tag_id(sub_tag)),
            },
        };
        let bits_per_symbol = usize::BITS - (params.alphabet_size - 1).leading_zeros();
        Ok(BinningCodebook {
            params,
            num_bins,
            num_sub_bins,
            bits_per_symbol,
            backing,
        })
    }

    pub fn params(&self) -> &CodebookParams {
        &self.params
    }

    pub fn mode(&self) -> CodebookMode {
        self.params.mode
    }

    pub fn terminal(&self) -> Var {
        self.params.terminal
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn alphabet_size(&self) -> usize {
        self.params.alphabet_size
    }

    pub fn num_bins(&self) -> u64 {
        self.num_bins
    }

    pub fn num_sub_bins(&self) -> u64 {
        self.num_sub_bins
    }

    fn check(&self, seq: &[u8]) -> Result<()> {
        if seq.len() != self.params.n {
            return Err(Error::usage(format!(
                "sequence has length {}, codebook blocklength is {}",
                seq.len(),
                self.params.n
            )));
        }
        if let Some(&s) = seq.iter().find(|&&s| s as usize >= self.params.alphabet_size) {
            return Err(Error::usage(format!(
                "symbol {s} outside alphabet of size {}",
                self.params.alphabet_size
            )));
        }
        Ok(())
    }

    /// The bin index `f(seq)`.
    pub fn bin_index(&self, seq: &[u8]) -> Result<u64> {
        self.check(seq)?;
        Ok(self.bin_of(seq))
    }

    /// The sub-bin index `φ(seq)`.
    pub fn sub_bin_index(&self, seq: &[u8]) -> Result<u64> {
        self.check(seq)?;
        Ok(self.sub_bin_of(seq))
    }

    /// Bin index without validating `seq`.
    pub fn bin_of(&self, seq: &[u8]) -> u64 {
        if self.num_bins == 1 {
            return 0;
        }
        match &self.backing {
            Backing::Table { bins, .. } => {
                bins[sequence_index(seq, self.params.alphabet_size) as usize]
            }
            Backing::Hash { bin_key, .. } => self.keyed(*bin_key, seq) % self.num_bins,
        }
    }

    /// Sub-bin index without validating `seq`.
    pub fn sub_bin_of(&self, seq: &[u8]) -> u64 {
        if self.num_sub_bins == 1 {
            return 0;
        }
        match &self.backing {
            Backing::Table { subs, .. } => {
                subs[sequence_index(seq, self.params.alphabet_size) as usize]
            }
            Backing::Hash { sub_key, .. } => self.keyed(*sub_key, seq) % self.num_sub_bins,
        }
    }

    /// Table lookup by sequence rank (explicit-table mode only).
    pub fn lookup(&self, index: u64) -> Option<(u64, u64)> {
        match &self.backing {
            Backing::Table { bins, subs } => {
                let i = usize::try_from(index).ok()?;
                if index >= sequence_count(self.params.alphabet_size, self.params.n)? {
                    return None;
                }
                Some((
                    bins.get(i).copied().unwrap_or(0),
                    subs.get(i).copied().unwrap_or(0),
                ))
            }
            Backing::Hash { .. } => None,
        }
    }

    /// SipHash-1-3 over the symbols packed `bits_per_symbol` bits each,
    /// least significant first, in little-endian 64-bit words.
    fn keyed(&self, key: (u64, u64), seq: &[u8]) -> u64 {
        let mut h = SipHasher13::new_with_keys(key.0, key.1);
        let width = self.bits_per_symbol;
        let mut word = 0u64;
        let mut filled = 0u32;
        for &s in seq {
            word |= (s as u64) << filled;
            filled += width;
            if filled >= 64 {
                h.write(&word.to_le_bytes());
                filled -= 64;
                word = if filled == 0 {
                    0
                } else {
                    (s as u64) >> (width - filled)
                };
            }
        }
        if filled > 0 {
            let bytes = word.to_le_bytes();
            h.write(&bytes[..filled.div_ceil(8) as usize]);
        }
        h.finish()
    }
}
