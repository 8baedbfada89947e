//! Cartesian parameter sweeps over the duality closed forms.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duality::{evaluate_duality, QuantonDetectorState};
use crate::error::{Error, Result};
use crate::experiment::Experiment;
use crate::model::{Case, ExperimentConfig, CONFIG_KEYS};
use crate::output::fmt_f64;

/// One swept key and its values, parsed from `key=start:stop:step`
/// (inclusive of `stop`) or `key=value`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<f64>,
}

impl std::str::FromStr for GridAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidArgument(format!("grid `{s}`: {why}"));
        let (key, range) = s.split_once('=').ok_or_else(|| bad("expected key=start:stop:step"))?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(bad("unknown key"));
        }
        let nums: Vec<f64> = range
            .split(':')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("not a number"))?;
        let values = match nums.as_slice() {
            [v] => vec![*v],
            [start, stop, step] => {
                if step.is_nan() || *step <= 0.0 || stop < start {
                    return Err(bad("need step > 0 and stop >= start"));
                }
                // tolerate rounding in (stop - start) / step
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| start + i as f64 * step).collect()
            }
            _ => return Err(bad("expected key=start:stop:step")),
        };
        Ok(GridAxis {
            key: key.to_string(),
            values,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p1: f64,
    pub xi: f64,
    pub overlap: f64,
    pub theta: f64,
    pub kappa: f64,
    pub case: Case,
    pub d_q: f64,
    pub v: f64,
    pub lhs1: f64,
    pub lhs2: f64,
    pub saturated1: bool,
    pub saturated2: bool,
}

pub const SWEEP_COLUMNS: [&str; 12] = [
    "p1", "xi", "overlap", "theta", "kappa", "case", "d_q", "v", "lhs1", "lhs2", "saturated1",
    "saturated2",
];

/// Config at one grid point. When exactly one of `p1`/`p2` is an axis the
/// other is set to its complement.
fn point_config(base: &ExperimentConfig, axes: &[GridAxis], idx: &[usize]) -> Result<ExperimentConfig> {
    let mut cfg = *base;
    let mut has_p1 = false;
    let mut has_p2 = false;
    for (axis, &i) in axes.iter().zip(idx) {
        cfg.set(&axis.key, axis.values[i])?;
        has_p1 |= axis.key == "p1";
        has_p2 |= axis.key == "p2";
    }
    if has_p1 && !has_p2 {
        cfg.p2 = 1.0 - cfg.p1;
    } else if has_p2 && !has_p1 {
        cfg.p1 = 1.0 - cfg.p2;
    }
    Ok(cfg)
}

pub fn evaluate_point(cfg: &ExperimentConfig) -> Result<SweepRow> {
    let exp = Experiment::new(cfg)?;
    let state = QuantonDetectorState::from_experiment(&exp);
    let r = evaluate_duality(&state, &exp.basis)?;
    let c = &exp.config;
    Ok(SweepRow {
        p1: c.p1,
        xi: c.xi,
        overlap: c.overlap,
        theta: c.theta,
        kappa: c.kappa,
        case: r.case_label,
        d_q: r.d_q,
        v: r.v_analytic,
        lhs1: r.lhs_duality1,
        lhs2: r.lhs_duality2,
        saturated1: r.saturated1,
        saturated2: r.saturated2,
    })
}

/// Evaluates every grid point; rows come back in row-major order with the
/// first axis outermost, independent of scheduling.
pub fn run_sweep(base: &ExperimentConfig, axes: &[GridAxis]) -> Result<Vec<SweepRow>> {
    let sizes: Vec<usize> = axes.iter().map(|a| a.values.len()).collect();
    let total: usize = sizes.iter().product();
    (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0; sizes.len()];
            let mut rem = flat;
            for (slot, &n) in idx.iter_mut().zip(&sizes).rev() {
                *slot = rem % n;
                rem /= n;
            }
            evaluate_point(&point_config(base, axes, &idx)?)
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        w.write_record([
            fmt_f64(r.p1),
            fmt_f64(r.xi),
            fmt_f64(r.overlap),
            fmt_f64(r.theta),
            fmt_f64(r.kappa),
            r.case.to_string(),
            fmt_f64(r.d_q),
            fmt_f64(r.v),
            fmt_f64(r.lhs1),
            fmt_f64(r.lhs2),
            r.saturated1.to_string(),
            r.saturated2.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
