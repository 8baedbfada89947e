//! Optimal unambiguous discrimination of the two detector states.
//!
//! The detector space is enlarged to three dimensions with orthonormal basis
//! `|q1>, |q2>, |q3>` so that
//!
//! ```text
//! |d1> = alpha |q1> + beta  |q3>
//! |d2> = gamma |q2> + delta |q3>
//! ```
//!
//! Measuring `A = |q1><q1| + 2|q2><q2| + 3|q3><q3|` then identifies `|d1>` on
//! eigenvalue 1, `|d2>` on eigenvalue 2, and fails on eigenvalue 3.
//! `beta` is kept real and non-negative; the whole phase of `<d1|d2>` sits on
//! `delta`.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Case, PathAmplitudes};

/// Agreement required between the two probability routes to `D_Q`.
pub const CONSISTENCY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UqsdBasis {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: Complex64,
    pub case_label: Case,
    pub p_outcome1: f64,
    pub p_outcome2: f64,
    pub p_outcome3: f64,
}

/// Builds the optimal basis. `theta` is `arg <d1|d2>` in canonical labels.
pub fn build_basis(amps: &PathAmplitudes, overlap: f64, theta: f64) -> UqsdBasis {
    let (c1, c2) = (amps.c1, amps.c2);
    let case_label = crate::model::classify_case(c1, c2, overlap);
    let (alpha, beta, gamma, delta_mod) = match case_label {
        Case::CaseA => {
            if overlap == 0.0 {
                // orthogonal detector states: no |q3> component at all
                (1.0, 0.0, 1.0, 0.0)
            } else {
                let beta_sq = overlap * c2 / c1;
                let delta_sq = overlap * c1 / c2;
                (
                    (1.0 - beta_sq).max(0.0).sqrt(),
                    beta_sq.sqrt(),
                    (1.0 - delta_sq).max(0.0).sqrt(),
                    delta_sq.sqrt(),
                )
            }
        }
        Case::CaseB => ((1.0 - overlap * overlap).max(0.0).sqrt(), overlap, 0.0, 1.0),
    };
    let delta = Complex64::from_polar(delta_mod, theta);
    let mut basis = UqsdBasis {
        alpha,
        beta,
        gamma,
        delta,
        case_label,
        p_outcome1: 0.0,
        p_outcome2: 0.0,
        p_outcome3: 0.0,
    };
    let (p1, p2, p3) = outcome_probabilities(&basis, amps);
    basis.p_outcome1 = p1;
    basis.p_outcome2 = p2;
    basis.p_outcome3 = p3;
    basis
}

/// `(c1^2 alpha^2, c2^2 gamma^2, c1^2 |beta|^2 + c2^2 |delta|^2)`.
pub fn outcome_probabilities(basis: &UqsdBasis, amps: &PathAmplitudes) -> (f64, f64, f64) {
    let (c1s, c2s) = (amps.c1 * amps.c1, amps.c2 * amps.c2);
    (
        c1s * basis.alpha * basis.alpha,
        c2s * basis.gamma * basis.gamma,
        c1s * basis.beta * basis.beta + c2s * basis.delta.norm_sqr(),
    )
}

/// Path distinguishability from the failure and success probabilities.
///
/// Both `1 - P3` and `P1 + P2` are evaluated; a disagreement beyond
/// [`CONSISTENCY_TOL`] means the coefficients are broken.
pub fn distinguishability(basis: &UqsdBasis, amps: &PathAmplitudes) -> Result<f64> {
    let (p1, p2, p3) = outcome_probabilities(basis, amps);
    let from_failure = 1.0 - p3;
    let from_success = p1 + p2;
    if (from_failure - from_success).abs() > CONSISTENCY_TOL {
        return Err(Error::Consistency(format!(
            "1 - P3 = {from_failure} but P1 + P2 = {from_success}"
        )));
    }
    Ok(from_success)
}

/// Closed form `1 - 2 c1 c2 overlap`, optimal when `overlap <= c2/c1`.
pub fn dq_case_a(amps: &PathAmplitudes, overlap: f64) -> f64 {
    1.0 - 2.0 * amps.c1 * amps.c2 * overlap
}

/// Closed form `c1^2 (1 - overlap^2)`, optimal when `overlap > c2/c1`.
pub fn dq_case_b(amps: &PathAmplitudes, overlap: f64) -> f64 {
    amps.c1 * amps.c1 * (1.0 - overlap * overlap)
}

/// Closed form for whichever case applies.
pub fn dq_closed_form(amps: &PathAmplitudes, overlap: f64) -> f64 {
    match crate::model::classify_case(amps.c1, amps.c2, overlap) {
        Case::CaseA => dq_case_a(amps, overlap),
        Case::CaseB => dq_case_b(amps, overlap),
    }
}

/// Explicit detector states as vectors in the `{q1, q2, q3}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorVectors {
    pub d1: Vector3<Complex64>,
    pub d2: Vector3<Complex64>,
}

impl DetectorVectors {
    pub fn from_basis(basis: &UqsdBasis) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        DetectorVectors {
            d1: Vector3::new(Complex64::new(basis.alpha, 0.0), zero, Complex64::new(basis.beta, 0.0)),
            d2: Vector3::new(zero, Complex64::new(basis.gamma, 0.0), basis.delta),
        }
    }

    /// `<d1|d2>`.
    pub fn inner(&self) -> Complex64 {
        self.d1.dotc(&self.d2)
    }
}

/// Eigenvalues of the discriminating observable, index-aligned with `q1..q3`.
pub const OBSERVABLE_EIGENVALUES: [f64; 3] = [1.0, 2.0, 3.0];

/// Probability of each eigenvalue of `A` when the detector is in `state`.
pub fn observable_distribution(state: &Vector3<Complex64>) -> [f64; 3] {
    [state[0].norm_sqr(), state[1].norm_sqr(), state[2].norm_sqr()]
}
