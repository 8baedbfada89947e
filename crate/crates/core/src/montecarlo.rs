//! Single-quanton detections in coincidence with the discriminating measurement.
//!
//! Each trial draws the detector outcome from `(P1, P2, P3)` and then a
//! screen position from the matching conditioned density. Outcomes 1 and 2
//! leave a single propagated packet, whose density is an exact Gaussian.
//! Outcome 3 leaves `c1 beta psi1 + c2 delta psi2`, sampled by rejection
//! under the mixture of its two direct terms; since
//! `|u1 + u2|^2 <= (1 + kappa)(|u1|^2 + |u2|^2)` holds for the cross term
//! scaled by `kappa`, the acceptance rate is `1 / (1 + kappa) >= 1/2`.
//!
//! Every trial owns an independent ChaCha stream selected by its index, so a
//! run is reproducible for a given seed whatever the thread count.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::experiment::Experiment;
use crate::optics::Packet;

/// Fewest histogram bins accepted by [`group_statistics`].
pub const MIN_BINS: usize = 32;
/// Fewest fringe widths the histogram range must cover.
pub const MIN_FRINGES: f64 = 8.0;
const DEFAULT_BINS_PER_FRINGE: f64 = 8.0;
const SIMPSON_INTERVALS: usize = 8;
const MIN_EXPECTED_PER_CELL: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub trial: u64,
    /// Eigenvalue of the discriminating observable (canonical labels).
    pub outcome: u8,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    pub records: Vec<SampleRecord>,
    /// Candidate positions drawn while sampling outcome-3 trials.
    pub outcome3_proposals: u64,
}

impl SampleRun {
    pub fn counts(&self) -> [u64; 3] {
        outcome_counts(&self.records)
    }

    /// Accepted fraction of outcome-3 proposals, if any were made.
    pub fn acceptance_rate(&self) -> Option<f64> {
        let n3 = self.counts()[2];
        (self.outcome3_proposals > 0).then(|| n3 as f64 / self.outcome3_proposals as f64)
    }
}

pub fn outcome_counts(records: &[SampleRecord]) -> [u64; 3] {
    let mut n = [0u64; 3];
    for r in records {
        n[(r.outcome - 1) as usize] += 1;
    }
    n
}

struct Sampler {
    packets: [Packet; 2],
    thresholds: [f64; 2],
    normals: [Normal<f64>; 2],
    /// Complex amplitudes of the outcome-3 branch on each packet.
    branch3: [Complex64; 2],
    /// Mixture weight of packet 1 in the outcome-3 proposal.
    mix1: f64,
    kappa: f64,
}

impl Sampler {
    fn new(exp: &Experiment) -> Self {
        let packets = exp.canonical_packets();
        let [p1, p2, p3] = exp.outcome_probabilities();
        let total = p1 + p2 + p3;
        let thresholds = [
            p1 / total,
            if p3 == 0.0 { 1.0 } else { (p1 + p2) / total },
        ];
        let normals = packets.map(|p| Normal::new(p.center, p.sigma()).expect("finite sigma"));
        let a = &exp.amplitudes;
        let b = &exp.basis;
        let branch3 = [Complex64::new(a.c1 * b.beta, 0.0), b.delta * a.c2];
        let w1 = branch3[0].norm_sqr();
        let w2 = branch3[1].norm_sqr();
        let mix1 = if w1 + w2 > 0.0 { w1 / (w1 + w2) } else { 0.0 };
        Sampler {
            packets,
            thresholds,
            normals,
            branch3,
            mix1,
            kappa: exp.config.kappa,
        }
    }

    /// Returns the record and the number of outcome-3 proposals used.
    fn trial(&self, key: [u8; 32], trial: u64) -> (SampleRecord, u64) {
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(trial);
        let u: f64 = rng.random();
        let outcome = if u < self.thresholds[0] {
            1
        } else if u < self.thresholds[1] {
            2
        } else {
            3
        };
        let (x, proposals) = match outcome {
            1 => (self.normals[0].sample(&mut rng), 0),
            2 => (self.normals[1].sample(&mut rng), 0),
            _ => self.sample_outcome3(&mut rng),
        };
        (SampleRecord { trial, outcome, x }, proposals)
    }

    fn sample_outcome3(&self, rng: &mut ChaCha8Rng) -> (f64, u64) {
        let bound = 1.0 + self.kappa;
        let mut proposals = 0;
        loop {
            proposals += 1;
            let comp = usize::from(rng.random::<f64>() >= self.mix1);
            let x = self.normals[comp].sample(rng);
            let proposal = self.mix1 * self.packets[0].density(x)
                + (1.0 - self.mix1) * self.packets[1].density(x);
            let target = self.outcome3_density(x);
            if rng.random::<f64>() * bound * proposal <= target {
                return (x, proposals);
            }
        }
    }

    /// Outcome-3 density up to the normalization `c1^2 beta^2 + c2^2 |delta|^2`.
    fn outcome3_density(&self, x: f64) -> f64 {
        let u1 = self.branch3[0] * self.packets[0].amplitude(x);
        let u2 = self.branch3[1] * self.packets[1].amplitude(x);
        let s = self.branch3[0].norm_sqr() + self.branch3[1].norm_sqr();
        (u1.norm_sqr() + u2.norm_sqr() + 2.0 * self.kappa * (u1.conj() * u2).re) / s
    }
}

fn stream_key(seed: u64) -> [u8; 32] {
    ChaCha8Rng::seed_from_u64(seed).get_seed()
}

/// Draws `n` detections. Deterministic in `(exp, n, seed)`.
pub fn sample_run(exp: &Experiment, n: u64, seed: u64) -> SampleRun {
    let sampler = Sampler::new(exp);
    let key = stream_key(seed);
    let (records, proposals): (Vec<SampleRecord>, Vec<u64>) = (0..n)
        .into_par_iter()
        .map(|t| sampler.trial(key, t))
        .unzip();
    SampleRun {
        records,
        outcome3_proposals: proposals.iter().sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl HistogramSpec {
    /// Centred on the origin, covering `max(3 sigma, 4 fringe widths)` each way.
    pub fn default_for(exp: &Experiment, bins: Option<usize>) -> Result<Self> {
        let sigma = exp
            .canonical_packets()
            .iter()
            .map(Packet::sigma)
            .fold(0.0, f64::max);
        let w = exp.config.fringe_width();
        let half = (3.0 * sigma).max(0.5 * MIN_FRINGES * w);
        let bins = match bins {
            Some(b) => b,
            None => ((2.0 * half / w) * DEFAULT_BINS_PER_FRINGE).ceil().max(MIN_BINS as f64) as usize,
        };
        if bins < MIN_BINS {
            return Err(Error::InvalidArgument(format!(
                "need at least {MIN_BINS} bins, got {bins}"
            )));
        }
        Ok(HistogramSpec {
            lo: -half,
            hi: half,
            bins,
        })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn edges(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let w = self.width();
        (0..self.bins).map(move |i| (self.lo + i as f64 * w, self.lo + (i + 1) as f64 * w))
    }

    pub fn fill<'a>(&self, xs: impl Iterator<Item = &'a f64>) -> Vec<u64> {
        let mut counts = vec![0u64; self.bins];
        let w = self.width();
        for &x in xs {
            if x >= self.lo && x < self.hi {
                let i = (((x - self.lo) / w) as usize).min(self.bins - 1);
                counts[i] += 1;
            }
        }
        counts
    }

    /// Composite-Simpson integral of `f` over every bin.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let m = SIMPSON_INTERVALS;
        self.edges()
            .map(|(a, b)| {
                let h = (b - a) / m as f64;
                let mut acc = f(a) + f(b);
                for k in 1..m {
                    acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
                }
                acc * h / 3.0
            })
            .collect()
    }
}

/// Fringe modulation fitted at the known fringe phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationFit {
    pub visibility: f64,
    /// Phase offset in the user's labeling.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub n1: u64,
    pub n2: u64,
    pub n3: u64,
    pub histogram: HistogramSpec,
    /// Outcomes 1 and 2 pooled; expected to show no modulation.
    pub group12_fit: Option<ModulationFit>,
    pub group3_visibility: Option<f64>,
    pub group3_phase: Option<f64>,
    /// `2 c1 c2 overlap kappa / P3`, the exact outcome-3 visibility.
    pub expected_group3_visibility: Option<f64>,
    /// Chi-square p-value of outcomes 1, 2 against their fringe-free envelopes.
    pub pvalue_flat: Option<f64>,
    /// Chi-square p-value of all detections against the full intensity.
    pub pvalue_pooled: Option<f64>,
}

/// Weighted linear least squares for `counts ~ A e + a c + b s`;
/// returns (A, a, b).
fn fit_modulation(counts: &[u64], e: &[f64], c: &[f64], s: &[f64], n: f64) -> Option<(f64, f64, f64)> {
    let mut m = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for i in 0..counts.len() {
        let w = 1.0 / (n * e[i]).max(1.0);
        let f = Vector3::new(e[i], c[i], s[i]);
        m += f * f.transpose() * w;
        rhs += f * (counts[i] as f64 * w);
    }
    let sol = m.lu().solve(&rhs)?;
    (sol[0] > 0.0).then_some((sol[0], sol[1], sol[2]))
}

/// Chi-square p-value; bins with small expectation are pooled with the
/// out-of-range remainder, which is kept only if it is itself large enough.
fn chi_square_pvalue(counts: &[u64], probs: &[f64], n: u64) -> Option<f64> {
    let n_f = n as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    let mut rest_obs = n as f64 - counts.iter().sum::<u64>() as f64;
    let mut rest_exp = n_f * (1.0 - probs.iter().sum::<f64>()).max(0.0);
    for (&o, &p) in counts.iter().zip(probs) {
        let e = n_f * p;
        if e < MIN_EXPECTED_PER_CELL {
            rest_obs += o as f64;
            rest_exp += e;
            continue;
        }
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    if rest_exp >= MIN_EXPECTED_PER_CELL {
        stat += (rest_obs - rest_exp).powi(2) / rest_exp;
        cells += 1;
    }
    if cells < 2 {
        return None;
    }
    let dist = ChiSquared::new((cells - 1) as f64).ok()?;
    Some(1.0 - dist.cdf(stat))
}

pub fn group_statistics(records: &[SampleRecord], exp: &Experiment, bins: Option<usize>) -> Result<GroupStats> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to analyse".into()));
    }
    let hist = HistogramSpec::default_for(exp, bins)?;
    let [n1, n2, n3] = outcome_counts(records);
    let [pk1, pk2] = exp.canonical_packets();
    let [p1, p2, p3] = exp.outcome_probabilities();
    let kappa = exp.config.kappa;
    let theta = exp.canonical_theta();
    let a = &exp.amplitudes;
    let to_user = |phase: f64| if a.swapped { -phase } else { phase };

    // conj(psi1) psi2 carries the known fringe phase
    let cross = |x: f64| pk1.amplitude(x).conj() * pk2.amplitude(x);
    let cross_re = hist.integrate(|x| cross(x).re);
    let cross_im = hist.integrate(|x| cross(x).im);

    let xs12: Vec<f64> = records.iter().filter(|r| r.outcome != 3).map(|r| r.x).collect();
    let (group12_fit, pvalue_flat) = if xs12.is_empty() {
        (None, None)
    } else {
        let counts = hist.fill(xs12.iter());
        let norm = p1 + p2;
        let env = |x: f64| (p1 * pk1.density(x) + p2 * pk2.density(x)) / norm;
        let e = hist.integrate(env);
        let phase = |x: f64| cross(x).arg();
        let c = hist.integrate(|x| env(x) * phase(x).cos());
        let s = hist.integrate(|x| env(x) * phase(x).sin());
        let n = xs12.len() as f64;
        let fit = fit_modulation(&counts, &e, &c, &s, n).map(|(amp, ca, sa)| ModulationFit {
            visibility: ca.hypot(sa) / amp,
            phase: to_user((-sa).atan2(ca)),
        });
        (fit, chi_square_pvalue(&counts, &e, xs12.len() as u64))
    };

    let w1 = (a.c1 * exp.basis.beta).powi(2);
    let w2 = (a.c2 * exp.basis.delta.norm()).powi(2);
    let (group3_visibility, group3_phase) = if n3 == 0 || w1 == 0.0 || w2 == 0.0 {
        (None, None)
    } else {
        let xs3: Vec<f64> = records.iter().filter(|r| r.outcome == 3).map(|r| r.x).collect();
        let counts = hist.fill(xs3.iter());
        let e = hist.integrate(|x| (w1 * pk1.density(x) + w2 * pk2.density(x)) / (w1 + w2));
        // density = e + V Re(e^{i theta} conj(psi1) psi2), V the flat-envelope visibility
        match fit_modulation(&counts, &e, &cross_re, &cross_im, n3 as f64) {
            Some((amp, ca, sa)) => (Some(ca.hypot(sa) / amp), Some(to_user((-sa).atan2(ca)))),
            None => (None, None),
        }
    };
    let expected_group3_visibility =
        (p3 > 0.0).then(|| 2.0 * a.c1 * a.c2 * exp.config.overlap * kappa / p3);

    let all_xs: Vec<f64> = records.iter().map(|r| r.x).collect();
    let counts = hist.fill(all_xs.iter());
    let ov = Complex64::from_polar(exp.config.overlap, theta);
    let full = |x: f64| {
        a.c1 * a.c1 * pk1.density(x)
            + a.c2 * a.c2 * pk2.density(x)
            + 2.0 * kappa * a.c1 * a.c2 * (cross(x) * ov).re
    };
    let pvalue_pooled = chi_square_pvalue(&counts, &hist.integrate(full), records.len() as u64);

    Ok(GroupStats {
        n1,
        n2,
        n3,
        histogram: hist,
        group12_fit,
        group3_visibility,
        group3_phase,
        expected_group3_visibility,
        pvalue_flat,
        pvalue_pooled,
    })
}

/// Multinomial standard deviation of an outcome frequency.
pub fn frequency_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
