//! Experiment configuration and the effective path amplitudes it implies.
//!
//! The quanton leaves the double slit as `sqrt(p1)|psi1> + sqrt(p2)|psi2>`,
//! with Gaussian packets of widths `epsilon` (slit 1, centred at `+x0`) and
//! `xi * epsilon` (slit 2, centred at `-x0`). Because the packets carry
//! different norms, the probability of finding the detector in `|d_k>` is
//! not `p_k` but `c_k^2` with
//!
//! ```text
//! c1 = sqrt(p1 / (p1 + xi p2)),   c2 = sqrt(xi p2 / (p1 + xi p2)).
//! ```
//!
//! Everything downstream assumes `c1 >= c2`. Configurations with the opposite
//! ordering are canonicalized by exchanging the path labels; [`PathAmplitudes::swapped`]
//! records that so results can be reported in the user's labeling.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on `p1 + p2` before the inputs are rejected outright.
pub const PROBABILITY_SUM_SLACK: f64 = 0.01;

/// Config keys accepted in files and as sweep axes, in canonical order.
pub const CONFIG_KEYS: [&str; 10] = [
    "p1", "p2", "x0", "epsilon", "xi", "lambda", "D", "overlap", "theta", "kappa",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub p1: f64,
    pub p2: f64,
    /// Half the slit separation, `d = 2 x0`.
    pub x0: f64,
    /// Gaussian width of the slit-1 packet.
    pub epsilon: f64,
    /// Slit-2 width in units of `epsilon`.
    pub xi: f64,
    pub lambda: f64,
    /// Slit-to-screen distance.
    #[serde(rename = "D")]
    pub big_d: f64,
    /// `|<d1|d2>|`.
    pub overlap: f64,
    /// `arg <d1|d2>` in radians.
    pub theta: f64,
    /// Survival factor of the path coherence; 1 is a pure state.
    pub kappa: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            p1: 0.5,
            p2: 0.5,
            x0: 10.0,
            epsilon: 1.0,
            xi: 1.0,
            lambda: 0.5,
            big_d: 1.0e4,
            overlap: 1.0,
            theta: 0.0,
            kappa: 1.0,
        }
    }
}

impl ExperimentConfig {
    /// Checks every invariant and returns the config with `p1 + p2 = 1`.
    ///
    /// Sums within [`PROBABILITY_SUM_SLACK`] of one are rescaled (with a
    /// warning unless the discrepancy is rounding noise); anything further
    /// off is rejected.
    pub fn validated(mut self) -> Result<Self> {
        for (field, value) in self.named_values() {
            if !value.is_finite() {
                return Err(Error::config(field, format!("must be finite, got {value}")));
            }
        }
        if self.p1 < 0.0 {
            return Err(Error::config("p1", format!("must be >= 0, got {}", self.p1)));
        }
        if self.p2 < 0.0 {
            return Err(Error::config("p2", format!("must be >= 0, got {}", self.p2)));
        }
        let sum = self.p1 + self.p2;
        if (sum - 1.0).abs() > PROBABILITY_SUM_SLACK {
            return Err(Error::config(
                "p1",
                format!("p1 + p2 = {sum} is not within {PROBABILITY_SUM_SLACK} of 1"),
            ));
        }
        if sum != 1.0 {
            if (sum - 1.0).abs() > 1e-12 {
                log::warn!("p1 + p2 = {sum}; renormalizing to 1");
            }
            self.p1 /= sum;
            self.p2 /= sum;
        }
        for (field, value) in [
            ("x0", self.x0),
            ("epsilon", self.epsilon),
            ("xi", self.xi),
            ("lambda", self.lambda),
            ("D", self.big_d),
        ] {
            if value <= 0.0 {
                return Err(Error::config(field, format!("must be > 0, got {value}")));
            }
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::config(
                "overlap",
                format!("must lie in [0, 1], got {}", self.overlap),
            ));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::config(
                "kappa",
                format!("must lie in [0, 1], got {}", self.kappa),
            ));
        }
        Ok(self)
    }

    fn named_values(&self) -> [(&'static str, f64); 10] {
        [
            ("p1", self.p1),
            ("p2", self.p2),
            ("x0", self.x0),
            ("epsilon", self.epsilon),
            ("xi", self.xi),
            ("lambda", self.lambda),
            ("D", self.big_d),
            ("overlap", self.overlap),
            ("theta", self.theta),
            ("kappa", self.kappa),
        ]
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.named_values()
            .into_iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
    }

    /// Sets one field by its config-file key.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "p1" => &mut self.p1,
            "p2" => &mut self.p2,
            "x0" => &mut self.x0,
            "epsilon" => &mut self.epsilon,
            "xi" => &mut self.xi,
            "lambda" => &mut self.lambda,
            "D" => &mut self.big_d,
            "overlap" => &mut self.overlap,
            "theta" => &mut self.theta,
            "kappa" => &mut self.kappa,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown config key `{other}` (expected one of {})",
                    CONFIG_KEYS.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    /// Slit separation `d`.
    pub fn slit_separation(&self) -> f64 {
        2.0 * self.x0
    }

    /// Propagation parameter `lambda D / pi`.
    pub fn gamma(&self) -> f64 {
        self.lambda * self.big_d / std::f64::consts::PI
    }

    /// Far-field fringe width `lambda D / d`.
    pub fn fringe_width(&self) -> f64 {
        self.lambda * self.big_d / self.slit_separation()
    }

    /// Parses the flat `key = value` format. Keys not present keep their
    /// current value; the result is not validated.
    pub fn parse_into(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
                line: idx + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value: f64 = value.trim().parse().map_err(|_| Error::ConfigParse {
                line: idx + 1,
                reason: format!("`{}` is not a number", value.trim()),
            })?;
            self.set(key, value).map_err(|e| Error::ConfigParse {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }

    /// Serializes to the flat key-value format, one key per line.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.named_values() {
            out.push_str(&format!("{k} = {}\n", crate::output::fmt_f64(v)));
        }
        out
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.parse_into(s)?;
        Ok(cfg)
    }
}

/// Which optimal-UQSD regime applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `overlap <= c2/c1`: both detector states are identified with nonzero probability.
    CaseA,
    /// `overlap > c2/c1`: the less likely state is never identified.
    CaseB,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Case::CaseA => f.write_str("CaseA"),
            Case::CaseB => f.write_str("CaseB"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathAmplitudes {
    pub c1: f64,
    pub c2: f64,
    /// True when the user's slit 2 carries the larger amplitude and the
    /// labels were exchanged.
    pub swapped: bool,
    pub p0_pred: f64,
    pub v0: f64,
    pub case_label: Case,
}

impl PathAmplitudes {
    /// Amplitudes given directly, canonicalized so that `c1 >= c2`.
    /// Inputs are rescaled to `c1^2 + c2^2 = 1`.
    pub fn from_raw(c1: f64, c2: f64, overlap: f64) -> Result<Self> {
        if !(c1 >= 0.0 && c2 >= 0.0) || !c1.is_finite() || !c2.is_finite() {
            return Err(Error::config("p1", "amplitudes must be finite and non-negative"));
        }
        let norm = c1.hypot(c2);
        if norm == 0.0 {
            return Err(Error::config("p1", "both path amplitudes vanish"));
        }
        let (a, b) = (c1 / norm, c2 / norm);
        let (c1, c2, swapped) = if a < b { (b, a, true) } else { (a, b, false) };
        let (p0_pred, v0) = a_priori_stats(c1, c2);
        Ok(PathAmplitudes {
            c1,
            c2,
            swapped,
            p0_pred,
            v0,
            case_label: classify_case(c1, c2, overlap),
        })
    }

    /// Maps a phase `arg <d1|d2>` given in the user's labels to canonical labels.
    pub fn canonical_theta(&self, theta: f64) -> f64 {
        if self.swapped {
            -theta
        } else {
            theta
        }
    }
}

/// Effective path amplitudes for a validated config.
pub fn derive_amplitudes(cfg: &ExperimentConfig) -> Result<PathAmplitudes> {
    let cfg = cfg.validated()?;
    let denom = cfg.p1 + cfg.xi * cfg.p2;
    let c1 = (cfg.p1 / denom).sqrt();
    let c2 = (cfg.xi * cfg.p2 / denom).sqrt();
    PathAmplitudes::from_raw(c1, c2, cfg.overlap)
}

/// A-priori predictability `(c1^2 - c2^2)/(c1^2 + c2^2)` and visibility `2 c1 c2`.
pub fn a_priori_stats(c1: f64, c2: f64) -> (f64, f64) {
    let p0 = (c1 * c1 - c2 * c2) / (c1 * c1 + c2 * c2);
    (p0, 2.0 * c1 * c2)
}

/// CaseA iff `overlap <= c2/c1`; the boundary belongs to CaseA.
pub fn classify_case(c1: f64, c2: f64, overlap: f64) -> Case {
    if overlap * c1 <= c2 {
        Case::CaseA
    } else {
        Case::CaseB
    }
}
