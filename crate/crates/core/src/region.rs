//! The SK-PK capacity region of the three-terminal source model.
//!
//! The region is the set of `(R_S, R_P)` with
//!
//! ```text
//! R_S <= R_A,  R_P <= I(X;Y|Z),  R_S + R_P <= R_B,  2 R_S + R_P <= 2 R_C,
//! R_S >= 0,    R_P >= 0
//! ```
//!
//! where `R_A = I(Z;XY)`, `R_B = min{I(X;YZ), I(Y;XZ)}` and
//! `R_C = (H(X) + H(Y) + H(Z) - H(XYZ)) / 2`. Vertices come from a generic
//! halfplane intersection; the closed-form corner points are attached as
//! labels and serve as a cross-check.

use alloc::vec::Vec;
use core::fmt;

use crate::source::InfoProfile;

/// Constants are treated as equal when they differ by at most this much.
pub const CASE_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegionConstants {
    pub r_a: f64,
    pub r_b: f64,
    pub r_c: f64,
    /// `I(X;Y|Z)`, the largest private-key rate.
    pub pk_cap: f64,
}

pub fn region_constants(profile: &InfoProfile) -> RegionConstants {
    RegionConstants {
        r_a: profile.i_z_xy,
        r_b: profile.i_x_yz.min(profile.i_y_xz),
        r_c: (profile.total_correlation() / 2.0).max(0.0),
        pk_cap: profile.i_x_y_given_z,
    }
}

/// Which of `R_B`, `R_C`, `R_A` is the smallest; ties go to the lower case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CaseLabel {
    Case1,
    Case2,
    Case3,
}

impl CaseLabel {
    pub fn number(self) -> u8 {
        match self {
            CaseLabel::Case1 => 1,
            CaseLabel::Case2 => 2,
            CaseLabel::Case3 => 3,
        }
    }
}

pub fn classify_case(c: &RegionConstants) -> CaseLabel {
    let le = |a: f64, b: f64| a <= b + CASE_TIE_TOLERANCE;
    if le(c.r_b, c.r_a) && le(c.r_b, c.r_c) {
        CaseLabel::Case1
    } else if le(c.r_c, c.r_a) {
        CaseLabel::Case2
    } else {
        CaseLabel::Case3
    }
}

/// A rate pair in bits per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatePair {
    pub r_s: f64,
    pub r_p: f64,
}

impl RatePair {
    pub const ORIGIN: RatePair = RatePair { r_s: 0.0, r_p: 0.0 };

    pub fn new(r_s: f64, r_p: f64) -> Self {
        RatePair { r_s, r_p }
    }

    pub fn distance(&self, other: &RatePair) -> f64 {
        libm::hypot(self.r_s - other.r_s, self.r_p - other.r_p)
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &RatePair, lambda: f64) -> RatePair {
        RatePair {
            r_s: lambda * self.r_s + (1.0 - lambda) * other.r_s,
            r_p: lambda * self.r_p + (1.0 - lambda) * other.r_p,
        }
    }
}

/// The closed halfplane `a·R_S + b·R_P <= c`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HalfPlane {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        HalfPlane { a, b, c }
    }

    /// Signed violation; positive outside the halfplane.
    pub fn excess(&self, p: &RatePair) -> f64 {
        self.a * p.r_s + self.b * p.r_p - self.c
    }

    pub fn contains(&self, p: &RatePair, tol: f64) -> bool {
        self.excess(p) <= tol
    }

    fn boundary_meets(&self, other: &HalfPlane) -> Option<RatePair> {
        let det = self.a * other.b - other.a * self.b;
        if det.abs() < 1e-14 {
            return None;
        }
        // `+ 0.0` turns a negative zero into a positive one
        Some(RatePair {
            r_s: (self.c * other.b - other.c * self.b) / det + 0.0,
            r_p: (self.a * other.c - other.a * self.c) / det + 0.0,
        })
    }
}

/// Vertices of the bounded intersection of `planes`, counter-clockwise
/// starting from the lowest-leftmost one.
///
/// Candidates are the pairwise boundary intersections that satisfy every
/// constraint within `constraint_tol`; duplicates within `dedup_tol` are
/// merged and points that are not extreme are dropped.
pub fn halfplane_intersection(
    planes: &[HalfPlane],
    constraint_tol: f64,
    dedup_tol: f64,
) -> Vec<RatePair> {
    let mut points = Vec::new();
    for (i, p) in planes.iter().enumerate() {
        for q in &planes[i + 1..] {
            if let Some(v) = p.boundary_meets(q) {
                if planes.iter().all(|h| h.contains(&v, constraint_tol)) {
                    points.push(v);
                }
            }
        }
    }
    convex_hull(points, dedup_tol)
}

/// Andrew's monotone chain. Collinear and duplicate points are removed.
pub fn convex_hull(mut points: Vec<RatePair>, dedup_tol: f64) -> Vec<RatePair> {
    points.sort_by(|a, b| {
        a.r_s
            .total_cmp(&b.r_s)
            .then_with(|| a.r_p.total_cmp(&b.r_p))
    });
    let mut unique: Vec<RatePair> = Vec::with_capacity(points.len());
    for p in points {
        if !unique.iter().any(|u| u.distance(&p) <= dedup_tol) {
            unique.push(p);
        }
    }
    if unique.len() <= 2 {
        return unique;
    }
    let cross = |o: &RatePair, a: &RatePair, b: &RatePair| {
        (a.r_s - o.r_s) * (b.r_p - o.r_p) - (a.r_p - o.r_p) * (b.r_s - o.r_s)
    };
    // turns this close to zero count as collinear
    let turn_tol = dedup_tol * dedup_tol;
    let mut hull: Vec<RatePair> = Vec::with_capacity(unique.len() * 2);
    for p in &unique {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= turn_tol
        {
            hull.pop();
        }
        hull.push(*p);
    }
    // the upper chain may not eat into the lower one
    let floor = hull.len() + 1;
    for p in unique.iter().rev().skip(1) {
        while hull.len() >= floor
            && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= turn_tol
        {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    if hull.len() == 2 && hull[0].distance(&hull[1]) <= dedup_tol {
        hull.pop();
    }
    hull
}

/// Labels of the corner points drawn in the region figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PointLabel {
    O,
    E,
    T,
    B,
    P,
    C,
    Q,
    A,
}

impl PointLabel {
    pub const ALL: [PointLabel; 8] = [
        PointLabel::O,
        PointLabel::E,
        PointLabel::T,
        PointLabel::B,
        PointLabel::P,
        PointLabel::C,
        PointLabel::Q,
        PointLabel::A,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PointLabel::O => "O",
            PointLabel::E => "E",
            PointLabel::T => "T",
            PointLabel::B => "B",
            PointLabel::P => "P",
            PointLabel::C => "C",
            PointLabel::Q => "Q",
            PointLabel::A => "A",
        }
    }
}

impl fmt::Display for PointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegionTolerances {
    pub constraint: f64,
    pub dedup: f64,
}

impl Default for RegionTolerances {
    fn default() -> Self {
        RegionTolerances {
            constraint: 1e-9,
            dedup: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateRegion {
    pub constants: RegionConstants,
    pub case_label: CaseLabel,
    /// `R_S <= R_A`, `R_P <= I(X;Y|Z)`, `R_S + R_P <= R_B`,
    /// `2R_S + R_P <= 2R_C`, `R_S >= 0`, `R_P >= 0`, in that order.
    pub constraints: [HalfPlane; 6],
    /// Counter-clockwise, starting at the origin.
    pub vertices: Vec<RatePair>,
    /// Corner points of this case, in canonical label order.
    pub named_points: Vec<(PointLabel, RatePair)>,
    pub tolerances: RegionTolerances,
}

pub fn region_vertices(profile: &InfoProfile) -> RateRegion {
    region_vertices_with(profile, RegionTolerances::default())
}

pub fn region_vertices_with(profile: &InfoProfile, tolerances: RegionTolerances) -> RateRegion {
    let constants = region_constants(profile);
    let case_label = classify_case(&constants);
    let constraints = constraints_of(&constants);
    let vertices = halfplane_intersection(&constraints, tolerances.constraint, tolerances.dedup);
    let named_points = named_points(profile, &constants, case_label);
    RateRegion {
        constants,
        case_label,
        constraints,
        vertices,
        named_points,
        tolerances,
    }
}

pub fn constraints_of(c: &RegionConstants) -> [HalfPlane; 6] {
    [
        HalfPlane::new(1.0, 0.0, c.r_a),
        HalfPlane::new(0.0, 1.0, c.pk_cap),
        HalfPlane::new(1.0, 1.0, c.r_b),
        HalfPlane::new(2.0, 1.0, 2.0 * c.r_c),
        HalfPlane::new(-1.0, 0.0, 0.0),
        HalfPlane::new(0.0, -1.0, 0.0),
    ]
}

/// Closed-form corner points realized in `case`.
///
/// Case 1 draws `O-E-T-B`, case 2 `O-E-T-P-C` and case 3 `O-E-T-P-Q-A`.
pub fn named_points(
    p: &InfoProfile,
    c: &RegionConstants,
    case: CaseLabel,
) -> Vec<(PointLabel, RatePair)> {
    let strongest = p.i_x_z.max(p.i_y_z);
    let mut out = alloc::vec![
        (PointLabel::O, RatePair::ORIGIN),
        (PointLabel::E, RatePair::new(0.0, c.pk_cap)),
        (PointLabel::T, RatePair::new(c.r_b - c.pk_cap, c.pk_cap)),
    ];
    match case {
        CaseLabel::Case1 => {
            out.push((PointLabel::B, RatePair::new(c.r_b, 0.0)));
        }
        CaseLabel::Case2 => {
            out.push((PointLabel::P, RatePair::new(strongest, c.r_b - strongest)));
            out.push((PointLabel::C, RatePair::new(c.r_c, 0.0)));
        }
        CaseLabel::Case3 => {
            out.push((PointLabel::P, RatePair::new(strongest, c.r_b - strongest)));
            out.push((PointLabel::Q, RatePair::new(c.r_a, p.i_x_y - c.r_a)));
            out.push((PointLabel::A, RatePair::new(c.r_a, 0.0)));
        }
    }
    out
}

impl RateRegion {
    pub fn contains(&self, pair: &RatePair) -> bool {
        self.constraints
            .iter()
            .all(|h| h.contains(pair, self.tolerances.constraint))
    }

    pub fn named(&self, label: PointLabel) -> Option<RatePair> {
        self.named_points
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, p)| *p)
    }

    /// The polygon spanned by the closed-form corner points alone.
    pub fn analytic_vertices(&self) -> Vec<RatePair> {
        convex_hull(
            self.named_points.iter().map(|(_, p)| *p).collect(),
            self.tolerances.dedup,
        )
    }

    /// The first corner label (in `O, E, T, B, P, C, Q, A` order) sitting
    /// on each vertex, if any.
    pub fn labeled_vertices(&self, tol: f64) -> Vec<(Option<PointLabel>, RatePair)> {
        self.vertices
            .iter()
            .map(|v| {
                let label = PointLabel::ALL.into_iter().find(|&l| {
                    self.named(l)
                        .map(|p| p.distance(v) <= tol)
                        .unwrap_or(false)
                });
                (label, *v)
            })
            .collect()
    }
}
