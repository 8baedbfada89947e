//! Acceptance criteria, one line per criterion.
//!
//! Run with `cargo test --test acceptance`. Exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use asymduality::duality::{
    coherence, englert_limit, evaluate_duality, l1_coherence, reduced_path_density, QuantonDetectorState,
};
use asymduality::fringes::{ideal_visibility, measure_visibility};
use asymduality::model::{derive_amplitudes, Case, ExperimentConfig};
use asymduality::montecarlo::{frequency_sigma, group_statistics, sample_run};
use asymduality::optics::{fraunhofer_consistency, intensity, Conditioning, Mode, PropagationParams};
use asymduality::uqsd::{dq_case_a, dq_case_b, dq_closed_form};
use asymduality::Experiment;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_probabilities(rng: &mut ChaCha8Rng, cfg: &mut ExperimentConfig) {
    cfg.p1 = rng.random_range(0.01..0.99);
    cfg.p2 = 1.0 - cfg.p1;
    cfg.xi = rng.random_range(0.2..5.0);
    cfg.theta = rng.random_range(-PI..PI);
}

/// Pure config with overlap drawn on the requested side of `c2/c1`.
fn random_pure(rng: &mut ChaCha8Rng, case: Case) -> ExperimentConfig {
    loop {
        let mut cfg = ExperimentConfig::default();
        random_probabilities(rng, &mut cfg);
        let a = derive_amplitudes(&cfg).unwrap();
        let boundary = a.c2 / a.c1;
        let u: f64 = rng.random();
        cfg.overlap = match case {
            Case::CaseA => u * boundary,
            Case::CaseB => boundary + (1.0 - u) * (1.0 - boundary),
        };
        if case == Case::CaseA || cfg.overlap > boundary {
            return cfg;
        }
    }
}

fn saturation(case: Case, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let e = Experiment::new(&random_pure(&mut rng, case)).unwrap();
        let state = QuantonDetectorState::from_experiment(&e);
        let r = evaluate_duality(&state, &e.basis).unwrap();
        assert_eq!(r.case_label, case);
        let lhs = match case {
            Case::CaseA => r.lhs_duality1,
            Case::CaseB => r.lhs_duality2,
        };
        worst = worst.max((lhs - 1.0).abs());
    }
    let t = start.elapsed();
    outcome(
        worst < 1e-12 && t < Duration::from_secs(1),
        format!("max |lhs - 1| = {worst:.2e}, {:.3} s", t.as_secs_f64()),
    )
}

fn criterion1() -> Outcome {
    saturation(Case::CaseA, 101)
}

fn criterion2() -> Outcome {
    saturation(Case::CaseB, 102)
}

fn criterion3() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..=10 {
        let e = Experiment::new(&ExperimentConfig {
            overlap: k as f64 / 10.0,
            ..Default::default()
        })
        .unwrap();
        let state = QuantonDetectorState::from_experiment(&e);
        let (_, lhs) = englert_limit(&state, &e.basis).unwrap();
        worst = worst.max((lhs - 1.0).abs());
    }
    outcome(worst < 1e-12, format!("max |D^2 + V^2 - 1| = {worst:.2e}"))
}

fn criterion4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst_excess = f64::MIN;
    let mut smallest_gap = f64::MAX;
    for _ in 0..100_000 {
        let mut cfg = ExperimentConfig::default();
        random_probabilities(&mut rng, &mut cfg);
        cfg.overlap = rng.random();
        cfg.kappa = rng.random();
        let e = Experiment::new(&cfg).unwrap();
        let r = evaluate_duality(&QuantonDetectorState::from_experiment(&e), &e.basis).unwrap();
        worst_excess = worst_excess.max(r.lhs_duality1 - 1.0);
        if cfg.kappa <= 0.99 && cfg.overlap >= 0.01 {
            smallest_gap = smallest_gap.min(1.0 - r.lhs_duality1);
        }
    }
    outcome(
        worst_excess <= 1e-12 && smallest_gap > 1e-6,
        format!("max (D_Q + V - 1) = {worst_excess:.2e}, min strict gap = {smallest_gap:.2e}"),
    )
}

fn criterion5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let cfg = random_pure(&mut rng, Case::CaseB);
        let a = derive_amplitudes(&cfg).unwrap();
        let lhs = dq_case_a(&a, cfg.overlap) - dq_case_b(&a, cfg.overlap);
        let rhs = a.c1 * a.c1 * (cfg.overlap - a.c2 / a.c1).powi(2);
        worst = worst.max((lhs - rhs).abs());
    }
    outcome(worst < 1e-12, format!("max residual = {worst:.2e}"))
}

fn criterion6() -> Outcome {
    let start = Instant::now();
    let mut worst_norm = 0.0f64;
    for (p1, xi, overlap, kappa) in [(0.5, 1.0, 1.0, 1.0), (0.8, 1.5, 0.4, 0.7), (0.3, 0.5, 0.9, 1.0)] {
        let e = Experiment::new(&ExperimentConfig {
            p1,
            p2: 1.0 - p1,
            xi,
            overlap,
            kappa,
            ..Default::default()
        })
        .unwrap();
        let pat = intensity(&e, &PropagationParams::new(&e.config, Mode::Exact), Conditioning::All).unwrap();
        worst_norm = worst_norm.max((pat.norm_estimate - 1.0).abs());
    }
    let far = |big_d: f64| {
        let e = Experiment::new(&ExperimentConfig {
            p1: 0.7,
            p2: 0.3,
            xi: 1.2,
            overlap: 0.8,
            big_d,
            ..Default::default()
        })
        .unwrap();
        fraunhofer_consistency(&e).unwrap()
    };
    // lambda = 0.5, epsilon = 1
    let dev3 = far(2e3);
    let dev5 = far(2e5);
    let t = start.elapsed();
    outcome(
        worst_norm < 1e-6 && dev3 < 1e-2 && dev5 < 1e-4 && t < Duration::from_secs(5),
        format!(
            "max |norm - 1| = {worst_norm:.2e}, deviation {dev3:.2e} @1e3, {dev5:.2e} @1e5, {:.3} s",
            t.as_secs_f64()
        ),
    )
}

fn criterion7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let start = Instant::now();
    let mut worst_spacing = 0.0f64;
    let mut worst_vis = 0.0f64;
    for _ in 0..100 {
        let mut cfg = ExperimentConfig::default();
        random_probabilities(&mut rng, &mut cfg);
        cfg.xi = rng.random_range(0.5..2.0);
        cfg.epsilon = rng.random_range(0.5..2.0);
        cfg.x0 = rng.random_range(3.0..6.0) * cfg.epsilon * cfg.xi.max(1.0);
        cfg.overlap = rng.random_range(0.05..1.0);
        cfg.kappa = rng.random_range(0.2..1.0);
        let regime = cfg.epsilon * cfg.x0 * (1.0 + cfg.xi * cfg.xi).sqrt();
        let gamma = rng.random_range(150.0..1000.0) * regime;
        cfg.big_d = PI * gamma / cfg.lambda;
        let e = Experiment::new(&cfg).unwrap();
        let pat = intensity(&e, &PropagationParams::new(&e.config, Mode::Exact), Conditioning::All).unwrap();
        let m = measure_visibility(&pat);
        let spacing = m.spacing.unwrap_or(f64::NAN);
        let rel = (spacing / cfg.fringe_width() - 1.0).abs();
        worst_spacing = worst_spacing.max(if rel.is_nan() { f64::INFINITY } else { rel });
        worst_vis = worst_vis.max((m.v_envelope_comp - ideal_visibility(&e.config)).abs());
    }
    let t = start.elapsed();
    outcome(
        worst_spacing < 0.01 && worst_vis < 1e-3 && t < Duration::from_secs(10),
        format!(
            "max spacing error {:.3}%, max visibility error {worst_vis:.2e}, {:.3} s",
            100.0 * worst_spacing,
            t.as_secs_f64()
        ),
    )
}

fn criterion8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let (mut worst_sum, mut worst_form, mut worst_inner) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100_000 {
        let mut cfg = ExperimentConfig::default();
        random_probabilities(&mut rng, &mut cfg);
        cfg.overlap = rng.random();
        let e = Experiment::new(&cfg).unwrap();
        let b = &e.basis;
        worst_sum = worst_sum.max(((1.0 - b.p_outcome3) - (b.p_outcome1 + b.p_outcome2)).abs());
        worst_form = worst_form.max((dq_closed_form(&e.amplitudes, cfg.overlap) - (b.p_outcome1 + b.p_outcome2)).abs());
        let inner = b.delta * b.beta;
        let expected = Complex64::from_polar(cfg.overlap, e.canonical_theta());
        worst_inner = worst_inner.max((inner - expected).norm());
    }
    outcome(
        worst_sum < 1e-12 && worst_form < 1e-12 && worst_inner < 1e-12,
        format!("residuals: sum {worst_sum:.2e}, closed form {worst_form:.2e}, beta* delta {worst_inner:.2e}"),
    )
}

fn criterion9() -> Outcome {
    const N: u64 = 1_000_000;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for (label, p1, seed) in [("symmetric", 0.5, 9001u64), ("c1^2=0.9", 0.9, 9002)] {
        let e = Experiment::new(&ExperimentConfig {
            p1,
            p2: 1.0 - p1,
            overlap: 0.5,
            ..Default::default()
        })
        .unwrap();
        let (run, stats) = pool.install(|| {
            let run = sample_run(&e, N, seed);
            let stats = group_statistics(&run.records, &e, None).unwrap();
            (run, stats)
        });
        let probs = e.outcome_probabilities();
        let counts = run.counts();
        let max_z = (0..3)
            .map(|k| {
                let sigma = frequency_sigma(probs[k], N);
                let dev = (counts[k] as f64 / N as f64 - probs[k]).abs();
                if sigma > 0.0 {
                    dev / sigma
                } else if dev == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max);
        let mod12 = stats.group12_fit.map(|f| f.visibility).unwrap_or(f64::NAN);
        let v3 = stats.group3_visibility.unwrap_or(f64::NAN);
        let v3_expected = stats.expected_group3_visibility.unwrap_or(f64::NAN);
        let ok = max_z < 3.0 && mod12 < 0.01 && (v3 - v3_expected).abs() < 0.01;
        pass &= ok;
        details.push(format!(
            "{label}: max z {max_z:.2}, group12 modulation {mod12:.4}, group3 V {v3:.4} vs {v3_expected:.4}"
        ));
    }
    let t = start.elapsed();
    pass &= t < Duration::from_secs(60);
    details.push(format!("{:.1} s", t.as_secs_f64()));
    outcome(pass, details.join("; "))
}

fn criterion10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let mut worst = 0.0f64;
    let mut monotone = true;
    for _ in 0..10_000 {
        let mut cfg = ExperimentConfig::default();
        random_probabilities(&mut rng, &mut cfg);
        cfg.overlap = rng.random();
        let e = Experiment::new(&cfg).unwrap();
        let state = QuantonDetectorState::from_experiment(&e);
        let a = &e.amplitudes;
        let v_analytic = 2.0 * a.c1 * a.c2 * cfg.overlap;
        let c_matrix = l1_coherence(&reduced_path_density(&state.joint_density(&e.basis)));
        worst = worst.max((coherence(&state) - v_analytic).abs()).max((c_matrix - v_analytic).abs());
        let mut last = f64::INFINITY;
        for k in (0..=20).rev() {
            let dephased = Experiment::new(&ExperimentConfig {
                kappa: k as f64 / 20.0,
                ..cfg
            })
            .unwrap();
            let c = coherence(&QuantonDetectorState::from_experiment(&dephased));
            monotone &= c <= last;
            last = c;
        }
    }
    outcome(
        worst < 1e-12 && monotone,
        format!("max |C - V| = {worst:.2e}, monotone in kappa: {monotone}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("duality saturation, case A", criterion1),
        ("duality saturation, case B", criterion2),
        ("Englert recovery in the symmetric case", criterion3),
        ("global inequality with dephasing", criterion4),
        ("case-boundary identity", criterion5),
        ("optics normalization and far-field consistency", criterion6),
        ("fringe spacing and compensated visibility", criterion7),
        ("discriminating measurement consistency", criterion8),
        ("Monte Carlo group split", criterion9),
        ("coherence equals visibility", criterion10),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let r = check();
        if !r.pass {
            failures += 1;
        }
        println!(
            "[{}] {:>2} {name}: {}",
            if r.pass { "PASS" } else { "FAIL" },
            i + 1,
            r.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
