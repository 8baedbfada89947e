//! Free propagation of the two slit packets and the resulting screen intensity.
//!
//! A packet leaving the slit as `exp(-(x - c)^2 / w^2)` reaches the screen as
//!
//! ```text
//! sqrt(w^2 / (w^2 + i G)) exp(-(x - c)^2 / (w^2 + i G)),   G = lambda D / pi,
//! ```
//!
//! which is exact for free evolution. The far-field (Fraunhofer) form keeps
//! only the leading order in `w^2 / G`. Both are normalized to unit norm.
//! The small spatial overlap of the two packets is neglected, so the joint
//! norm is one only when the slits are well separated.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::Experiment;
use crate::model::ExperimentConfig;

/// Minimum grid size.
pub const DEFAULT_POINTS: usize = 4096;
/// Samples per fringe the default grid is grown to guarantee.
pub const MIN_POINTS_PER_FRINGE: usize = 32;
/// Separation (in packet widths) below which packet overlap is no longer negligible.
pub const MIN_SEPARATION_WIDTHS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Fraunhofer,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Mode::Exact),
            "fraunhofer" => Ok(Mode::Fraunhofer),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Fraunhofer => "fraunhofer",
        })
    }
}

/// Which detections contribute to a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conditioning {
    All,
    Outcome1,
    Outcome2,
    Outcome3,
}

impl FromStr for Conditioning {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(Conditioning::All),
            "outcome1" | "1" => Ok(Conditioning::Outcome1),
            "outcome2" | "2" => Ok(Conditioning::Outcome2),
            "outcome3" | "3" => Ok(Conditioning::Outcome3),
            other => Err(Error::InvalidArgument(format!(
                "unknown conditioning `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Conditioning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Conditioning::All => "all",
            Conditioning::Outcome1 => "outcome1",
            Conditioning::Outcome2 => "outcome2",
            Conditioning::Outcome3 => "outcome3",
        })
    }
}

/// One propagated slit packet, normalized to unit norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Packet {
    pub center: f64,
    /// Gaussian width parameter at the slit.
    pub width: f64,
    pub gamma: f64,
}

impl Packet {
    pub fn new(center: f64, width: f64, gamma: f64) -> Self {
        Packet {
            center,
            width,
            gamma,
        }
    }

    /// Exact screen amplitude.
    pub fn amplitude(&self, x: f64) -> Complex64 {
        let w2 = self.width * self.width;
        let q = Complex64::new(w2, self.gamma);
        let u = x - self.center;
        let pre = (2.0 / PI).powf(0.25) / self.width.sqrt();
        (Complex64::new(w2, 0.0) / q).sqrt() * (-(u * u) / q).exp() * pre
    }

    /// Leading far-field amplitude, valid for `gamma >> width^2`.
    pub fn far_field_amplitude(&self, x: f64) -> Complex64 {
        let u = x - self.center;
        let g = self.gamma;
        let w = self.width;
        let modulus = (2.0 / PI).powf(0.25) * (w / g).sqrt() * (-(w * u / g).powi(2)).exp();
        Complex64::from_polar(modulus, u * u / g - FRAC_PI_4)
    }

    pub fn amplitude_in(&self, mode: Mode, x: f64) -> Complex64 {
        match mode {
            Mode::Exact => self.amplitude(x),
            Mode::Fraunhofer => self.far_field_amplitude(x),
        }
    }

    /// Standard deviation of `|psi|^2` on the screen (exact).
    pub fn sigma(&self) -> f64 {
        let w2 = self.width * self.width;
        (w2 * w2 + self.gamma * self.gamma).sqrt() / (2.0 * self.width)
    }

    /// `|psi(x)|^2` from the closed-form Gaussian (exact mode).
    pub fn density(&self, x: f64) -> f64 {
        let s = self.sigma();
        let z = (x - self.center) / s;
        (-0.5 * z * z).exp() / (s * (2.0 * PI).sqrt())
    }
}

/// Screen packets `[slit 1 at +x0, slit 2 at -x0]` in the user's labeling.
pub fn wavepackets_at_screen(cfg: &ExperimentConfig) -> [Packet; 2] {
    let g = cfg.gamma();
    [
        Packet::new(cfg.x0, cfg.epsilon, g),
        Packet::new(-cfg.x0, cfg.xi * cfg.epsilon, g),
    ]
}

/// Uniform, strictly increasing screen grid symmetric about zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenGrid {
    xs: Vec<f64>,
}

impl ScreenGrid {
    pub fn uniform(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "grid half-width must be positive, got {half_width}"
            )));
        }
        if points < 3 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 3 points, got {points}"
            )));
        }
        let step = 2.0 * half_width / (points - 1) as f64;
        let xs = (0..points)
            .map(|i| {
                // mirror the upper half so the grid is exactly symmetric
                let j = i.min(points - 1 - i);
                let x = -half_width + j as f64 * step;
                if i > points - 1 - i {
                    -x
                } else {
                    x
                }
            })
            .collect();
        Ok(ScreenGrid { xs })
    }

    /// `[-L, L]` with `L = max(6 sigma_max + x0, 10 fringe widths)` and at
    /// least [`DEFAULT_POINTS`] points, grown to keep [`MIN_POINTS_PER_FRINGE`].
    pub fn default_for(cfg: &ExperimentConfig) -> Self {
        let sigma = wavepackets_at_screen(cfg)
            .iter()
            .map(Packet::sigma)
            .fold(0.0, f64::max);
        let w = cfg.fringe_width();
        let half = (6.0 * sigma + cfg.x0).max(10.0 * w);
        let per_fringe = (2.0 * half / w * MIN_POINTS_PER_FRINGE as f64).ceil() as usize;
        let points = DEFAULT_POINTS.max(per_fringe + 1);
        Self::uniform(half, points).expect("positive half-width")
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn step(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationParams {
    pub gamma: f64,
    pub grid: ScreenGrid,
    pub mode: Mode,
}

impl PropagationParams {
    pub fn new(cfg: &ExperimentConfig, mode: Mode) -> Self {
        PropagationParams {
            gamma: cfg.gamma(),
            grid: ScreenGrid::default_for(cfg),
            mode,
        }
    }

    pub fn with_grid(cfg: &ExperimentConfig, mode: Mode, grid: ScreenGrid) -> Self {
        PropagationParams {
            gamma: cfg.gamma(),
            grid,
            mode,
        }
    }
}

/// Sampled screen intensity for one conditioning.
///
/// Besides the total, the two direct (single-path) contributions are kept per
/// grid point along with their integrated weights; fringe metrology divides
/// them out to get an envelope-free contrast.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityPattern {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub mode: Mode,
    pub conditioning: Conditioning,
    pub norm_estimate: f64,
    /// `|k_j psi_j(x)|^2 / P` for the canonical paths j = 1, 2.
    pub direct: [Vec<f64>; 2],
    /// `|k_j|^2 / P`, the share of the pattern carried by each path.
    pub weights: [f64; 2],
}

/// Trapezoidal rule on a (possibly non-uniform) grid.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Branch amplitudes `(k1, k2)`, the complex factor linking the two
/// detector components, and the branch probability.
fn branch(exp: &Experiment, conditioning: Conditioning) -> Result<(Complex64, Complex64, Complex64, f64)> {
    let a = &exp.amplitudes;
    let b = &exp.basis;
    let re = |v: f64| Complex64::new(v, 0.0);
    let out = match conditioning {
        Conditioning::All => (
            re(a.c1),
            re(a.c2),
            Complex64::from_polar(exp.config.overlap, exp.canonical_theta()),
            1.0,
        ),
        Conditioning::Outcome1 => (re(a.c1 * b.alpha), re(0.0), re(0.0), b.p_outcome1),
        Conditioning::Outcome2 => (re(0.0), re(a.c2 * b.gamma), re(0.0), b.p_outcome2),
        Conditioning::Outcome3 => (re(a.c1 * b.beta), b.delta * a.c2, re(1.0), b.p_outcome3),
    };
    if out.3 <= 0.0 {
        let k = match conditioning {
            Conditioning::Outcome1 => 1,
            Conditioning::Outcome2 => 2,
            _ => 3,
        };
        return Err(Error::ZeroProbabilityBranch(k));
    }
    Ok(out)
}

/// Screen intensity for the given conditioning.
///
/// The joint state is `c1 psi1 |d1> + c2 psi2 |d2>`; conditioning on an
/// outcome of the discriminating measurement keeps the matching component
/// of the expansion in `|q1>, |q2>, |q3>` and renormalizes by its probability.
/// Path dephasing scales every cross term by `kappa`.
pub fn intensity(
    exp: &Experiment,
    params: &PropagationParams,
    conditioning: Conditioning,
) -> Result<IntensityPattern> {
    let cfg = &exp.config;
    let widest = cfg.epsilon.max(cfg.xi * cfg.epsilon);
    if cfg.slit_separation() < MIN_SEPARATION_WIDTHS * widest {
        log::warn!(
            "slit separation {} is below {MIN_SEPARATION_WIDTHS} packet widths; packet overlap is neglected",
            cfg.slit_separation()
        );
    }
    let (k1, k2, link, prob) = branch(exp, conditioning)?;
    let kappa = cfg.kappa;
    let mut packets = exp.canonical_packets();
    for p in &mut packets {
        p.gamma = params.gamma;
    }
    let mode = params.mode;
    let xs = params.grid.xs().to_vec();

    let rows: Vec<(f64, f64, f64)> = xs
        .par_iter()
        .map(|&x| {
            let u1 = k1 * packets[0].amplitude_in(mode, x);
            let u2 = k2 * packets[1].amplitude_in(mode, x);
            let d1 = u1.norm_sqr() / prob;
            let d2 = u2.norm_sqr() / prob;
            let cross = 2.0 * kappa * (u1.conj() * u2 * link).re / prob;
            ((d1 + d2 + cross).max(0.0), d1, d2)
        })
        .collect();

    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let direct = [
        rows.iter().map(|r| r.1).collect(),
        rows.iter().map(|r| r.2).collect(),
    ];
    let norm_estimate = trapezoid(&xs, &values);
    Ok(IntensityPattern {
        xs,
        values,
        mode,
        conditioning,
        norm_estimate,
        direct,
        weights: [k1.norm_sqr() / prob, k2.norm_sqr() / prob],
    })
}

/// Largest `|I_exact - I_fraunhofer|` on the default grid relative to the
/// exact peak intensity.
pub fn fraunhofer_consistency(exp: &Experiment) -> Result<f64> {
    let cfg = &exp.config;
    let ratio = cfg.lambda * cfg.big_d / (cfg.epsilon * cfg.epsilon);
    if ratio < 1e3 {
        log::warn!("lambda D / epsilon^2 = {ratio} is outside the far-field regime (>= 1e3)");
    }
    let grid = ScreenGrid::default_for(cfg);
    let exact = intensity(
        exp,
        &PropagationParams::with_grid(cfg, Mode::Exact, grid.clone()),
        Conditioning::All,
    )?;
    let far = intensity(
        exp,
        &PropagationParams::with_grid(cfg, Mode::Fraunhofer, grid),
        Conditioning::All,
    )?;
    let peak = exact.values.iter().cloned().fold(0.0, f64::max);
    let dev = exact
        .values
        .iter()
        .zip(&far.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(dev / peak)
}
