use alloc::vec::Vec;

use crate::region::{classify_case, region_constants, CaseLabel};
use crate::source::{InfoProfile, Var};

use super::Scheme;

/// Which rate a diagnostic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RateName {
    Z,
    X,
    Y,
    Secret,
    Private,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RateDiagnostic {
    /// The formula went negative and the rate was set to zero.
    Clamped { rate: RateName, formula_value: f64 },
    /// The scheme targets a corner point that the distribution's case does
    /// not draw.
    CaseMismatch { scheme: Scheme, case: CaseLabel },
}

/// Bin and key rates of one scheme, in bits per symbol.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateAssignment {
    /// Bin rate of `Z`'s public message.
    pub r_z: f64,
    /// Bin rate of `X`'s public message.
    pub r_x: f64,
    /// Bin rate of `Y`'s public message.
    pub r_y: f64,
    /// Secret-key (sub-bin of `Z`) rate.
    pub r_s: f64,
    /// Private-key (sub-bin of the private-key owner) rate.
    pub r_p: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Terminal whose sequence carries the private key: `X`, or `Y` when the
    /// point-P construction runs with the roles of `X` and `Y` swapped.
    pub pk_owner: Var,
    pub diagnostics: Vec<RateDiagnostic>,
}

impl RateAssignment {
    /// Bin rate of `terminal`'s public message.
    pub fn bin_rate(&self, terminal: Var) -> f64 {
        match terminal {
            Var::X => self.r_x,
            Var::Y => self.r_y,
            Var::Z => self.r_z,
        }
    }
}

fn expected_cases(scheme: Scheme) -> &'static [CaseLabel] {
    match scheme {
        Scheme::PointE | Scheme::PointT => &[CaseLabel::Case1, CaseLabel::Case2, CaseLabel::Case3],
        Scheme::PointP => &[CaseLabel::Case2, CaseLabel::Case3],
        Scheme::PointQ => &[CaseLabel::Case3],
    }
}

/// The scheme's rate formulas with slacks `epsilon` and `delta` applied.
///
/// Negative rates are clamped to zero and reported in `diagnostics`. The
/// point-P construction lets `X` help when `I(X;Z) >= I(Y;Z)` and swaps the
/// roles of `X` and `Y` otherwise.
pub fn derive_rates(scheme: Scheme, p: &InfoProfile, epsilon: f64, delta: f64) -> RateAssignment {
    let mut diagnostics = Vec::new();
    let case = classify_case(&region_constants(p));
    if !expected_cases(scheme).contains(&case) {
        diagnostics.push(RateDiagnostic::CaseMismatch { scheme, case });
    }
    let mut clamp = |rate: RateName, value: f64| {
        if value < 0.0 {
            diagnostics.push(RateDiagnostic::Clamped {
                rate,
                formula_value: value,
            });
            0.0
        } else {
            value
        }
    };
    let r_z;
    let (mut r_x, mut r_y) = (0.0, 0.0);
    let mut pk_owner = Var::X;
    let (r_s, r_p) = match scheme {
        Scheme::PointE => {
            r_z = p.h_z;
            r_x = clamp(RateName::X, p.h_x_given_yz + epsilon);
            (0.0, clamp(RateName::Private, p.i_x_y_given_z - epsilon - 2.0 * delta))
        }
        Scheme::PointT => {
            r_z = clamp(RateName::Z, p.h_z_given_x.max(p.h_z_given_y) + epsilon);
            r_x = clamp(RateName::X, p.h_x_given_yz + epsilon);
            (
                clamp(
                    RateName::Secret,
                    p.i_x_z.min(p.i_y_z) - 2.0 * delta - 2.0 * epsilon,
                ),
                clamp(RateName::Private, p.i_x_y_given_z - 2.0 * delta - epsilon),
            )
        }
        Scheme::PointP => {
            if p.i_x_z >= p.i_y_z {
                r_z = clamp(RateName::Z, p.h_z_given_x + epsilon);
                r_x = clamp(RateName::X, p.h_xz_given_y - p.h_z_given_x);
                (
                    clamp(RateName::Secret, p.i_x_z - 2.0 * delta - 2.0 * epsilon),
                    clamp(
                        RateName::Private,
                        p.i_y_xz - p.i_x_z - 2.0 * delta - epsilon,
                    ),
                )
            } else {
                pk_owner = Var::Y;
                r_z = clamp(RateName::Z, p.h_z_given_y + epsilon);
                r_y = clamp(RateName::Y, p.h_yz_given_x - p.h_z_given_y);
                (
                    clamp(RateName::Secret, p.i_y_z - 2.0 * delta - 2.0 * epsilon),
                    clamp(
                        RateName::Private,
                        p.i_x_yz - p.i_y_z - 2.0 * delta - epsilon,
                    ),
                )
            }
        }
        Scheme::PointQ => {
            r_z = clamp(RateName::Z, p.h_z_given_xy + epsilon + 2.0 * delta);
            r_x = clamp(RateName::X, p.h_x_given_y + epsilon);
            r_y = clamp(RateName::Y, p.h_y_given_x - 2.0 * delta);
            (
                clamp(RateName::Secret, p.i_z_xy - 2.0 * epsilon - 4.0 * delta),
                clamp(
                    RateName::Private,
                    p.i_x_y - p.i_z_xy - 2.0 * epsilon - 2.0 * delta,
                ),
            )
        }
    };
    RateAssignment {
        r_z,
        r_x,
        r_y,
        r_s,
        r_p,
        epsilon,
        delta,
        pk_owner,
        diagnostics,
    }
}
