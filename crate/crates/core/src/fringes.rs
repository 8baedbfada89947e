//! Fringe metrology on sampled patterns.
//!
//! Two contrasts are reported. `v_raw` is the textbook
//! `(I_max - I_min)/(I_max + I_min)` taken at the fringe nearest the centre of
//! the two-path overlap. `v_envelope_comp` first rescales each path's direct
//! contribution to a flat profile,
//!
//! ```text
//! J(x) = W1 + W2 + (I - A1 - A2) sqrt(W1 W2) / sqrt(A1 A2),
//! ```
//!
//! which leaves `W1 + W2 + 2 sqrt(W1 W2) mu cos(phase)` and therefore the
//! slit-width-free visibility `2 sqrt(W1 W2) mu / (W1 + W2)`.

use serde::{Deserialize, Serialize};

use crate::model::ExperimentConfig;
use crate::optics::IntensityPattern;

/// Extrema of the total intensity below this fraction of the envelope peak are
/// ignored as tail noise.
const ENVELOPE_FLOOR: f64 = 1e-6;
/// Window for the compensated signal, as a fraction of the peak cross envelope.
const CROSS_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeMetrics {
    pub v_raw: f64,
    pub v_envelope_comp: f64,
    pub spacing: Option<f64>,
    pub n_extrema: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub value: f64,
    pub kind: ExtremumKind,
}

/// Visibility predicted for a perfectly flat envelope,
/// `2 sqrt(p1 p2 xi) / (p1 + xi p2) * overlap * kappa`.
pub fn ideal_visibility(cfg: &ExperimentConfig) -> f64 {
    let (p1, p2, xi) = (cfg.p1, cfg.p2, cfg.xi);
    2.0 * (p1 * p2 * xi).sqrt() / (p1 + xi * p2) * cfg.overlap * cfg.kappa
}

/// Vertex of the parabola through three equally spaced samples, as
/// (offset in steps, value). The offset is clamped to half a step.
pub fn parabolic_vertex(y_prev: f64, y: f64, y_next: f64) -> (f64, f64) {
    let curvature = y_prev - 2.0 * y + y_next;
    if curvature.abs() < f64::MIN_POSITIVE {
        return (0.0, y);
    }
    let delta = (0.5 * (y_prev - y_next) / curvature).clamp(-0.5, 0.5);
    (delta, y - 0.25 * (y_prev - y_next) * delta)
}

/// Local extrema of `ys` over the index range where `keep(i)` holds, refined
/// by 3-point parabolic interpolation. Assumes a uniform grid.
pub fn find_extrema(xs: &[f64], ys: &[f64], keep: impl Fn(usize) -> bool) -> Vec<Extremum> {
    let mut out = Vec::new();
    if xs.len() < 3 {
        return out;
    }
    let h = xs[1] - xs[0];
    for i in 1..ys.len() - 1 {
        if !keep(i) {
            continue;
        }
        let (a, b, c) = (ys[i - 1], ys[i], ys[i + 1]);
        let kind = if b > a && b >= c {
            ExtremumKind::Max
        } else if b < a && b <= c {
            ExtremumKind::Min
        } else {
            continue;
        };
        let (delta, value) = parabolic_vertex(a, b, c);
        out.push(Extremum {
            x: xs[i] + delta * h,
            value,
            kind,
        });
    }
    out
}

fn argmax(ys: &[f64]) -> usize {
    ys.iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
        .0
}

/// Contrast between the maximum nearest `center` and its closer neighbouring minimum.
fn central_contrast(extrema: &[Extremum], center: f64) -> Option<f64> {
    let (j, _) = extrema
        .iter()
        .enumerate()
        .filter(|(_, e)| e.kind == ExtremumKind::Max)
        .min_by(|a, b| (a.1.x - center).abs().total_cmp(&(b.1.x - center).abs()))?;
    let imax = extrema[j].value;
    let neighbours = [j.checked_sub(1), Some(j + 1)];
    let imin = neighbours
        .into_iter()
        .flatten()
        .filter_map(|k| extrema.get(k))
        .filter(|e| e.kind == ExtremumKind::Min)
        .min_by(|a, b| (a.x - center).abs().total_cmp(&(b.x - center).abs()))?
        .value;
    let denom = imax + imin;
    (denom > 0.0).then(|| (imax - imin) / denom)
}

struct Compensated {
    signal: Vec<f64>,
    window: Vec<bool>,
}

/// Envelope-flattened signal normalized to mean one, or `None` when the
/// pattern has no two-path cross term.
fn compensated(pattern: &IntensityPattern) -> Option<Compensated> {
    let [w1, w2] = pattern.weights;
    if w1 <= 0.0 || w2 <= 0.0 {
        return None;
    }
    let [a1, a2] = &pattern.direct;
    let env: Vec<f64> = a1.iter().zip(a2).map(|(p, q)| (p * q).sqrt()).collect();
    let peak = env.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return None;
    }
    let window: Vec<bool> = env.iter().map(|e| *e >= CROSS_FLOOR * peak).collect();
    let scale = (w1 * w2).sqrt();
    let total = w1 + w2;
    let mut largest_cross = 0.0f64;
    let signal: Vec<f64> = (0..pattern.values.len())
        .map(|i| {
            if !window[i] {
                return 1.0;
            }
            let cross = pattern.values[i] - a1[i] - a2[i];
            largest_cross = largest_cross.max(cross.abs() / (a1[i] + a2[i]));
            (total + cross * scale / env[i]) / total
        })
        .collect();
    // pure rounding residue means there is no interference term
    if largest_cross < 1e-10 {
        return None;
    }
    Some(Compensated { signal, window })
}

fn envelope_center(pattern: &IntensityPattern) -> f64 {
    let [a1, a2] = &pattern.direct;
    let env: Vec<f64> = a1.iter().zip(a2).map(|(p, q)| p * q).collect();
    if env.iter().any(|v| *v > 0.0) {
        pattern.xs[argmax(&env)]
    } else {
        pattern.xs[argmax(&pattern.values)]
    }
}

fn raw_extrema(pattern: &IntensityPattern) -> Vec<Extremum> {
    let [a1, a2] = &pattern.direct;
    let incoherent: Vec<f64> = a1.iter().zip(a2).map(|(p, q)| p + q).collect();
    let peak = incoherent.iter().cloned().fold(0.0, f64::max);
    find_extrema(&pattern.xs, &pattern.values, |i| {
        incoherent[i] >= ENVELOPE_FLOOR * peak
    })
}

pub fn measure_visibility(pattern: &IntensityPattern) -> FringeMetrics {
    let center = envelope_center(pattern);
    let extrema = raw_extrema(pattern);
    let v_raw = if extrema.len() >= 3 {
        central_contrast(&extrema, center).unwrap_or(0.0)
    } else {
        0.0
    };
    let v_envelope_comp = compensated(pattern)
        .and_then(|c| {
            let ext = find_extrema(&pattern.xs, &c.signal, |i| {
                c.window[i - 1] && c.window[i] && c.window[i + 1]
            });
            central_contrast(&ext, center)
        })
        .unwrap_or(0.0);
    FringeMetrics {
        v_raw,
        v_envelope_comp,
        spacing: measure_spacing(pattern),
        n_extrema: extrema.len(),
    }
}

/// Mean distance between consecutive interpolated maxima, using the
/// envelope-compensated signal when the pattern has a cross term. `None`
/// with fewer than three maxima.
pub fn measure_spacing(pattern: &IntensityPattern) -> Option<f64> {
    let maxima: Vec<f64> = match compensated(pattern) {
        Some(c) => find_extrema(&pattern.xs, &c.signal, |i| {
            c.window[i - 1] && c.window[i] && c.window[i + 1]
        }),
        None => raw_extrema(pattern),
    }
    .into_iter()
    .filter(|e| e.kind == ExtremumKind::Max)
    .map(|e| e.x)
    .collect();
    if maxima.len() < 3 {
        return None;
    }
    Some((maxima[maxima.len() - 1] - maxima[0]) / (maxima.len() - 1) as f64)
}

/// Interpolated positions of the fringe maxima (compensated signal when available).
pub fn fringe_maxima(pattern: &IntensityPattern) -> Vec<f64> {
    match compensated(pattern) {
        Some(c) => find_extrema(&pattern.xs, &c.signal, |i| {
            c.window[i - 1] && c.window[i] && c.window[i + 1]
        }),
        None => raw_extrema(pattern),
    }
    .into_iter()
    .filter(|e| e.kind == ExtremumKind::Max)
    .map(|e| e.x)
    .collect()
}
