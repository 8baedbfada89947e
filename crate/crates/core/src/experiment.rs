use serde::Serialize;

use crate::error::Result;
use crate::model::{derive_amplitudes, ExperimentConfig, PathAmplitudes};
use crate::optics::{wavepackets_at_screen, Packet};
use crate::uqsd::{build_basis, distinguishability, UqsdBasis};

/// A validated configuration together with everything derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub amplitudes: PathAmplitudes,
    pub basis: UqsdBasis,
}

impl Experiment {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let config = cfg.validated()?;
        let amplitudes = derive_amplitudes(&config)?;
        let theta = amplitudes.canonical_theta(config.theta);
        let basis = build_basis(&amplitudes, config.overlap, theta);
        Ok(Experiment {
            config,
            amplitudes,
            basis,
        })
    }

    /// `arg <d1|d2>` with the canonical (c1 >= c2) labels.
    pub fn canonical_theta(&self) -> f64 {
        self.amplitudes.canonical_theta(self.config.theta)
    }

    /// Screen packets ordered by canonical label.
    pub fn canonical_packets(&self) -> [Packet; 2] {
        let [slit1, slit2] = wavepackets_at_screen(&self.config);
        if self.amplitudes.swapped {
            [slit2, slit1]
        } else {
            [slit1, slit2]
        }
    }

    pub fn distinguishability(&self) -> Result<f64> {
        distinguishability(&self.basis, &self.amplitudes)
    }

    /// Outcome probabilities `(P1, P2, P3)` of the discriminating measurement.
    pub fn outcome_probabilities(&self) -> [f64; 3] {
        [
            self.basis.p_outcome1,
            self.basis.p_outcome2,
            self.basis.p_outcome3,
        ]
    }
}
