use std::f64::consts::PI;

use asymduality::fringes::{fringe_maxima, measure_spacing, measure_visibility};
use asymduality::model::ExperimentConfig;
use asymduality::optics::{fraunhofer_consistency, intensity, Conditioning, Mode, PropagationParams};
use asymduality::Experiment;

fn exp(cfg: ExperimentConfig) -> Experiment {
    Experiment::new(&cfg).unwrap()
}

fn pattern(e: &Experiment, conditioning: Conditioning) -> asymduality::IntensityPattern {
    intensity(e, &PropagationParams::new(&e.config, Mode::Exact), conditioning).unwrap()
}

#[test]
fn fringe_spacing_is_lambda_d_over_d() {
    let e = exp(ExperimentConfig::default());
    let spacing = measure_spacing(&pattern(&e, Conditioning::All)).unwrap();
    assert!((spacing / 250.0 - 1.0).abs() < 0.01, "spacing {spacing}");
}

#[test]
fn doubling_distance_doubles_spacing() {
    let near = exp(ExperimentConfig::default());
    let far = exp(ExperimentConfig {
        big_d: 2e4,
        ..Default::default()
    });
    let s1 = measure_spacing(&pattern(&near, Conditioning::All)).unwrap();
    let s2 = measure_spacing(&pattern(&far, Conditioning::All)).unwrap();
    assert!((s2 / s1 - 2.0).abs() < 0.01);
}

#[test]
fn quarter_period_phase_moves_fringes_a_quarter_width() {
    let base = exp(ExperimentConfig::default());
    let shifted = exp(ExperimentConfig {
        theta: PI / 2.0,
        ..Default::default()
    });
    let w = base.config.fringe_width();
    let m0 = fringe_maxima(&pattern(&base, Conditioning::All));
    let m1 = fringe_maxima(&pattern(&shifted, Conditioning::All));
    let central: Vec<f64> = m1.into_iter().filter(|x| x.abs() < 3.0 * w).collect();
    assert!(central.len() >= 4);
    for x in central {
        let nearest = m0.iter().map(|y| x - y).min_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap();
        assert!((nearest.abs() / (w / 4.0) - 1.0).abs() < 0.01, "shift {nearest}");
    }
}

#[test]
fn far_field_deviation_shrinks_with_fresnel_ratio() {
    let devs: Vec<f64> = [2e3, 2e4, 2e5]
        .iter()
        .map(|&big_d| {
            fraunhofer_consistency(&exp(ExperimentConfig {
                p1: 0.6,
                p2: 0.4,
                xi: 1.4,
                overlap: 0.7,
                big_d,
                ..Default::default()
            }))
            .unwrap()
        })
        .collect();
    assert!(devs[0] < 1e-2 && devs[2] < 1e-4);
    assert!(devs[0] > devs[1] && devs[1] > devs[2]);
}

#[test]
fn every_conditioning_is_normalized() {
    let e = exp(ExperimentConfig {
        p1: 0.6,
        p2: 0.4,
        xi: 1.5,
        overlap: 0.4,
        theta: 1.1,
        kappa: 0.8,
        ..Default::default()
    });
    for c in [Conditioning::All, Conditioning::Outcome1, Conditioning::Outcome2, Conditioning::Outcome3] {
        let p = pattern(&e, c);
        assert!((p.norm_estimate - 1.0).abs() < 1e-6, "{c}: {}", p.norm_estimate);
    }
}

#[test]
fn which_path_outcomes_show_no_fringes() {
    let e = exp(ExperimentConfig {
        overlap: 0.5,
        ..Default::default()
    });
    for c in [Conditioning::Outcome1, Conditioning::Outcome2] {
        let m = measure_visibility(&pattern(&e, c));
        assert_eq!(m.v_envelope_comp, 0.0);
        assert!(m.v_raw < 1e-6);
    }
}

#[test]
fn inconclusive_outcome_has_full_contrast_in_case_a() {
    let e = exp(ExperimentConfig {
        p1: 0.6,
        p2: 0.4,
        overlap: 0.3,
        ..Default::default()
    });
    let m = measure_visibility(&pattern(&e, Conditioning::Outcome3));
    assert!((m.v_envelope_comp - 1.0).abs() < 1e-6);
}

#[test]
fn raw_and_compensated_contrast_agree_for_symmetric_slits() {
    for overlap in [0.2, 0.5, 1.0] {
        let e = exp(ExperimentConfig {
            overlap,
            ..Default::default()
        });
        let m = measure_visibility(&pattern(&e, Conditioning::All));
        assert!((m.v_raw - m.v_envelope_comp).abs() < 0.01);
        if overlap == 1.0 {
            assert!((m.v_raw - 1.0).abs() < 1e-3);
        }
    }
}

#[test]
fn compensated_contrast_tracks_slit_asymmetry() {
    let e = exp(ExperimentConfig {
        p1: 0.5,
        p2: 0.5,
        xi: 3.0,
        overlap: 0.9,
        x0: 20.0,
        ..Default::default()
    });
    let expected = 2.0 * 3f64.sqrt() / 4.0 * 0.9;
    let m = measure_visibility(&pattern(&e, Conditioning::All));
    assert!((m.v_envelope_comp - expected).abs() < 1e-3);
}
