//! The discrete memoryless source `P_XYZ` and its information measures.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::sum::{entropy_bits, CompensatedSum};

/// Probabilities below this are structural zeros for typicality purposes.
pub const STRUCTURAL_ZERO: f64 = 1e-15;

/// Largest deviation of the table sum from one that is silently rescaled.
pub const NORMALIZATION_SLACK: f64 = 1e-6;

/// Mutual informations above `-MI_CLAMP` are clamped to zero.
pub const MI_CLAMP: f64 = 1e-12;

/// One of the three terminals, and the source component it observes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Var {
    X,
    Y,
    Z,
}

impl Var {
    pub const ALL: [Var; 3] = [Var::X, Var::Y, Var::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Var::X => "X",
            Var::Y => "Y",
            Var::Z => "Z",
        };
        f.write_str(s)
    }
}

/// A subset of `{X, Y, Z}`, stored as a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VarSet(u8);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);
    pub const X: VarSet = VarSet(1);
    pub const Y: VarSet = VarSet(2);
    pub const Z: VarSet = VarSet(4);
    pub const XY: VarSet = VarSet(3);
    pub const XZ: VarSet = VarSet(5);
    pub const YZ: VarSet = VarSet(6);
    pub const XYZ: VarSet = VarSet(7);

    /// Builds a set from a list, rejecting duplicates.
    pub fn from_vars(vars: &[Var]) -> Result<VarSet> {
        let mut set = VarSet::EMPTY;
        for &v in vars {
            if set.contains(v) {
                return Err(Error::usage(format!("variable {v} listed twice")));
            }
            set = set.with(v);
        }
        Ok(set)
    }

    pub fn single(v: Var) -> VarSet {
        VarSet(1 << v.index())
    }

    pub fn with(self, v: Var) -> VarSet {
        VarSet(self.0 | (1 << v.index()))
    }

    pub fn contains(self, v: Var) -> bool {
        self.0 & (1 << v.index()) != 0
    }

    pub fn union(self, other: VarSet) -> VarSet {
        VarSet(self.0 | other.0)
    }

    pub fn intersects(self, other: VarSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    /// Members in canonical `X, Y, Z` order.
    pub fn iter(self) -> impl Iterator<Item = Var> {
        Var::ALL.into_iter().filter(move |&v| self.contains(v))
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("{}");
        }
        for v in self.iter() {
            fmt::Display::fmt(&v, f)?;
        }
        Ok(())
    }
}

/// A finite joint PMF over `X × Y × Z`.
///
/// The table is dense and row-major with `z` varying fastest, then `y`,
/// then `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    sizes: [usize; 3],
    pmf: Vec<f64>,
}

impl JointDistribution {
    pub const DEFAULT_ALPHABET_CAP: usize = 8;

    pub fn new(sizes: [usize; 3], pmf: Vec<f64>) -> Result<Self> {
        Self::with_alphabet_cap(sizes, pmf, Self::DEFAULT_ALPHABET_CAP)
    }

    /// Validates and, when the total is within [`NORMALIZATION_SLACK`] of
    /// one, rescales the table.
    pub fn with_alphabet_cap(sizes: [usize; 3], mut pmf: Vec<f64>, cap: usize) -> Result<Self> {
        let cap = cap.min(256);
        for (v, &s) in Var::ALL.iter().zip(&sizes) {
            if s == 0 || s > cap {
                return Err(Error::InvalidDistribution(format!(
                    "alphabet size of {v} is {s}, must be in [1, {cap}]"
                )));
            }
        }
        let len = sizes.iter().product::<usize>();
        if pmf.len() != len {
            return Err(Error::InvalidDistribution(format!(
                "table has {} entries, alphabet product is {len}",
                pmf.len()
            )));
        }
        if let Some((i, p)) = pmf
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is {p}, probabilities must be finite and non-negative"
            )));
        }
        let total = pmf.iter().copied().collect::<CompensatedSum>().value();
        if (total - 1.0).abs() > NORMALIZATION_SLACK {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, expected 1"
            )));
        }
        if total != 1.0 {
            for p in &mut pmf {
                *p /= total;
            }
        }
        Ok(JointDistribution { sizes, pmf })
    }

    /// Builds a table from a probability function of `(x, y, z)`.
    pub fn from_fn(sizes: [usize; 3], f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let mut pmf = Vec::with_capacity(sizes.iter().product());
        for x in 0..sizes[0] {
            for y in 0..sizes[1] {
                for z in 0..sizes[2] {
                    pmf.push(f(x, y, z));
                }
            }
        }
        Self::new(sizes, pmf)
    }

    pub fn sizes(&self) -> [usize; 3] {
        self.sizes
    }

    pub fn size(&self, v: Var) -> usize {
        self.sizes[v.index()]
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn prob(&self, x: usize, y: usize, z: usize) -> f64 {
        self.pmf[self.flat_index(x, y, z)]
    }

    pub fn flat_index(&self, x: usize, y: usize, z: usize) -> usize {
        (x * self.sizes[1] + y) * self.sizes[2] + z
    }

    pub fn unflatten(&self, i: usize) -> [usize; 3] {
        let z = i % self.sizes[2];
        let rest = i / self.sizes[2];
        [rest / self.sizes[1], rest % self.sizes[1], z]
    }

    /// Atoms with probability above [`STRUCTURAL_ZERO`], as `([x, y, z], p)`.
    pub fn support(&self) -> Vec<([usize; 3], f64)> {
        self.pmf
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > STRUCTURAL_ZERO)
            .map(|(i, &p)| (self.unflatten(i), p))
            .collect()
    }

    /// Marginal on `vars`. An empty set yields the trivial one-point law.
    pub fn marginal(&self, vars: VarSet) -> Marginal {
        let radices: Vec<usize> = vars.iter().map(|v| self.size(v)).collect();
        let mut pmf = vec![0.0; radices.iter().product()];
        for (i, &p) in self.pmf.iter().enumerate() {
            let coords = self.unflatten(i);
            let mut idx = 0;
            for v in vars.iter() {
                idx = idx * self.size(v) + coords[v.index()];
            }
            pmf[idx] += p;
        }
        Marginal { vars, radices, pmf }
    }

    pub fn entropy(&self, vars: VarSet) -> Result<f64> {
        if vars.is_empty() {
            return Err(Error::usage("entropy of an empty variable set"));
        }
        Ok(self.raw_entropy(vars))
    }

    fn raw_entropy(&self, vars: VarSet) -> f64 {
        if vars.is_empty() {
            return 0.0;
        }
        entropy_bits(self.marginal(vars).pmf.iter().copied())
    }

    /// `H(A|B) = H(A ∪ B) - H(B)`.
    pub fn conditional_entropy(&self, a: VarSet, b: VarSet) -> Result<f64> {
        if a.is_empty() {
            return Err(Error::usage("conditional entropy of an empty variable set"));
        }
        disjoint(&[a, b])?;
        Ok((self.raw_entropy(a.union(b)) - self.raw_entropy(b)).max(0.0))
    }

    /// `I(A;B) = H(A) + H(B) - H(AB)`.
    pub fn mutual_information(&self, a: VarSet, b: VarSet) -> Result<f64> {
        self.conditional_mutual_information(a, b, VarSet::EMPTY)
    }

    /// `I(A;B|C) = H(A|C) - H(A|BC)`.
    pub fn conditional_mutual_information(&self, a: VarSet, b: VarSet, c: VarSet) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::usage("mutual information of an empty variable set"));
        }
        disjoint(&[a, b, c])?;
        let value = self.raw_entropy(a.union(c)) + self.raw_entropy(b.union(c))
            - self.raw_entropy(a.union(b).union(c))
            - self.raw_entropy(c);
        Ok(clamp_mi(value))
    }

    pub fn profile(&self) -> InfoProfile {
        let mut h = [0.0; 8];
        for (mask, slot) in h.iter_mut().enumerate().skip(1) {
            *slot = self.raw_entropy(VarSet(mask as u8));
        }
        InfoProfile::from_entropies(h)
    }

    /// Draws `n` i.i.d. symbol triples.
    ///
    /// The generator is the `(seed, Source, 0)` ChaCha8 stream; each symbol
    /// triple consumes one 53-bit uniform and is located by inverse CDF over
    /// the flattened table.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SourceTriple> {
        if n == 0 {
            return Err(Error::usage("blocklength must be at least 1"));
        }
        let atoms = self.support();
        let mut cumulative = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for (_, p) in &atoms {
            acc += p;
            cumulative.push(acc);
        }
        let mut rng = rng::stream(seed, Purpose::Source, 0);
        let mut triple = SourceTriple {
            x: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            z: Vec::with_capacity(n),
        };
        for _ in 0..n {
            let u: f64 = rng.gen::<f64>() * acc;
            let k = cumulative
                .partition_point(|&c| c <= u)
                .min(atoms.len() - 1);
            let [x, y, z] = atoms[k].0;
            triple.x.push(x as u8);
            triple.y.push(y as u8);
            triple.z.push(z as u8);
        }
        Ok(triple)
    }
}

fn disjoint(sets: &[VarSet]) -> Result<()> {
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            if a.intersects(*b) {
                return Err(Error::usage(format!(
                    "variable sets {a} and {b} overlap"
                )));
            }
        }
    }
    Ok(())
}

fn clamp_mi(value: f64) -> f64 {
    debug_assert!(value > -1e-9, "mutual information {value} is badly negative");
    if value < MI_CLAMP {
        value.max(0.0)
    } else {
        value
    }
}

/// A marginal law over the product alphabet of a variable subset.
///
/// Joint symbols are mixed-radix indices with the first member of the set
/// most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    vars: VarSet,
    radices: Vec<usize>,
    pmf: Vec<f64>,
}

impl Marginal {
    /// A marginal over one variable from an explicit probability vector.
    pub fn single(var: Var, pmf: Vec<f64>) -> Result<Self> {
        let dist = match var {
            Var::X => JointDistribution::new([pmf.len(), 1, 1], pmf)?,
            Var::Y => JointDistribution::new([1, pmf.len(), 1], pmf)?,
            Var::Z => JointDistribution::new([1, 1, pmf.len()], pmf)?,
        };
        Ok(dist.marginal(VarSet::single(var)))
    }

    pub fn vars(&self) -> VarSet {
        self.vars
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn alphabet_size(&self) -> usize {
        self.pmf.len()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(self.pmf.iter().copied())
    }

    /// Joint symbol of per-variable symbols given in canonical order.
    pub fn encode(&self, symbols: &[u8]) -> usize {
        symbols
            .iter()
            .zip(&self.radices)
            .fold(0, |acc, (&s, &r)| acc * r + s as usize)
    }
}

/// Every Shannon measure the region and the schemes use, in bits/symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InfoProfile {
    pub h_x: f64,
    pub h_y: f64,
    pub h_z: f64,
    pub h_xy: f64,
    pub h_xz: f64,
    pub h_yz: f64,
    pub h_xyz: f64,
    pub i_x_y: f64,
    pub i_x_z: f64,
    pub i_y_z: f64,
    pub i_z_xy: f64,
    pub i_x_yz: f64,
    pub i_y_xz: f64,
    pub i_x_y_given_z: f64,
    pub h_z_given_x: f64,
    pub h_z_given_y: f64,
    pub h_z_given_xy: f64,
    pub h_x_given_y: f64,
    pub h_x_given_z: f64,
    pub h_x_given_yz: f64,
    pub h_xz_given_y: f64,
    pub h_y_given_x: f64,
    pub h_y_given_xz: f64,
    pub h_xy_given_z: f64,
    pub h_yz_given_x: f64,
}

impl InfoProfile {
    /// Builds the profile from `H(S)` indexed by the `VarSet` bit mask.
    pub fn from_entropies(h: [f64; 8]) -> Self {
        let e = |s: VarSet| h[s.0 as usize];
        let cond = |a: VarSet, b: VarSet| (e(a.union(b)) - e(b)).max(0.0);
        let mi = |a: VarSet, b: VarSet, c: VarSet| {
            clamp_mi(e(a.union(c)) + e(b.union(c)) - e(a.union(b).union(c)) - e(c))
        };
        let none = VarSet::EMPTY;
        InfoProfile {
            h_x: e(VarSet::X),
            h_y: e(VarSet::Y),
            h_z: e(VarSet::Z),
            h_xy: e(VarSet::XY),
            h_xz: e(VarSet::XZ),
            h_yz: e(VarSet::YZ),
            h_xyz: e(VarSet::XYZ),
            i_x_y: mi(VarSet::X, VarSet::Y, none),
            i_x_z: mi(VarSet::X, VarSet::Z, none),
            i_y_z: mi(VarSet::Y, VarSet::Z, none),
            i_z_xy: mi(VarSet::Z, VarSet::XY, none),
            i_x_yz: mi(VarSet::X, VarSet::YZ, none),
            i_y_xz: mi(VarSet::Y, VarSet::XZ, none),
            i_x_y_given_z: mi(VarSet::X, VarSet::Y, VarSet::Z),
            h_z_given_x: cond(VarSet::Z, VarSet::X),
            h_z_given_y: cond(VarSet::Z, VarSet::Y),
            h_z_given_xy: cond(VarSet::Z, VarSet::XY),
            h_x_given_y: cond(VarSet::X, VarSet::Y),
            h_x_given_z: cond(VarSet::X, VarSet::Z),
            h_x_given_yz: cond(VarSet::X, VarSet::YZ),
            h_xz_given_y: cond(VarSet::XZ, VarSet::Y),
            h_y_given_x: cond(VarSet::Y, VarSet::X),
            h_y_given_xz: cond(VarSet::Y, VarSet::XZ),
            h_xy_given_z: cond(VarSet::XY, VarSet::Z),
            h_yz_given_x: cond(VarSet::YZ, VarSet::X),
        }
    }

    /// `H(X) + H(Y) + H(Z) - H(XYZ)`, twice the constant `R_C`.
    pub fn total_correlation(&self) -> f64 {
        self.h_x + self.h_y + self.h_z - self.h_xyz
    }
}

/// Aligned length-`n` observations of the three terminals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SourceTriple {
    pub x: Vec<u8>,
    pub y: Vec<u8>,
    pub z: Vec<u8>,
}

impl SourceTriple {
    pub fn new(x: Vec<u8>, y: Vec<u8>, z: Vec<u8>) -> Result<Self> {
        if x.len() != y.len() || y.len() != z.len() || x.is_empty() {
            return Err(Error::usage(format!(
                "sequence lengths differ or are zero: {}, {}, {}",
                x.len(),
                y.len(),
                z.len()
            )));
        }
        Ok(SourceTriple { x, y, z })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn get(&self, v: Var) -> &[u8] {
        match v {
            Var::X => &self.x,
            Var::Y => &self.y,
            Var::Z => &self.z,
        }
    }

    /// Symbols `range` of every component.
    pub fn slice(&self, range: core::ops::Range<usize>) -> SourceTriple {
        SourceTriple {
            x: self.x[range.clone()].to_vec(),
            y: self.y[range.clone()].to_vec(),
            z: self.z[range].to_vec(),
        }
    }
}

/// Reference distributions used throughout tests and examples.
pub mod examples {
    use super::*;

    fn bern_xor(a: usize, b: usize, p: f64) -> f64 {
        if a == b {
            1.0 - p
        } else {
            p
        }
    }

    /// `X, Y` i.i.d. uniform bits and `Z = X ⊕ Y`.
    pub fn xor_triple() -> JointDistribution {
        JointDistribution::from_fn([2, 2, 2], |x, y, z| if z == x ^ y { 0.25 } else { 0.0 })
            .expect("valid table")
    }

    /// `X = Y = Z`, a single uniform bit.
    pub fn identical_bits() -> JointDistribution {
        JointDistribution::from_fn([2, 2, 2], |x, y, z| {
            if x == y && y == z {
                0.5
            } else {
                0.0
            }
        })
        .expect("valid table")
    }

    /// Three mutually independent uniform bits.
    pub fn independent_bits() -> JointDistribution {
        JointDistribution::from_fn([2, 2, 2], |_, _, _| 0.125).expect("valid table")
    }

    /// `X = Y` uniform bit, `Z` an independent uniform bit.
    pub fn shared_xy_independent_z() -> JointDistribution {
        JointDistribution::from_fn([2, 2, 2], |x, y, _| if x == y { 0.25 } else { 0.0 })
            .expect("valid table")
    }

    /// `X` uniform, `Y = X ⊕ Bern(p_y)`, `Z = X ⊕ Bern(p_z)`.
    pub fn markov_chain(p_y: f64, p_z: f64) -> JointDistribution {
        JointDistribution::from_fn([2, 2, 2], |x, y, z| {
            0.5 * bern_xor(x, y, p_y) * bern_xor(x, z, p_z)
        })
        .expect("valid table")
    }

    /// Doubly symmetric binary pair `X, Z` with crossover `p`, and `Y` an
    /// independent uniform bit.
    pub fn symmetric_xz(p: f64) -> JointDistribution {
        JointDistribution::from_fn([2, 2, 2], |x, _, z| 0.25 * bern_xor(x, z, p))
            .expect("valid table")
    }

    /// `X = Z` uniform bit, `Y` an independent uniform bit.
    pub fn shared_xz_independent_y() -> JointDistribution {
        symmetric_xz(0.0)
    }

    /// All three alphabets of size one.
    pub fn point_mass() -> JointDistribution {
        JointDistribution::new([1, 1, 1], vec![1.0]).expect("valid table")
    }
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_bits([p, 1.0 - p])
}
