use approx::assert_abs_diff_eq;
use spinport_core::engine::{run_analytic, run_monte_carlo, EngineOptions};
use spinport_core::gaussian::GaussianState;
use spinport_core::oracle::{propagate, propagate_exact};
use spinport_core::protocols::{run_program, ProtocolConfig, ProtocolKind};
use spinport_core::validation::{sigma_distance, validate_point, DEFAULT_R, DEFAULT_RATIOS};

fn grid() -> impl Iterator<Item = (ProtocolKind, ProtocolConfig)> {
    ProtocolKind::ALL.into_iter().flat_map(|kind| {
        DEFAULT_R.into_iter().flat_map(move |r| {
            DEFAULT_RATIOS.into_iter().map(move |ratio| (kind, ProtocolConfig { readout_ratio: ratio, ..ProtocolConfig::with_r(r) }))
        })
    })
}

#[test]
fn oracle_matches_analytic_on_grid() {
    for (kind, cfg) in grid() {
        let program = kind.program(&cfg).unwrap();
        let initial = program.initial_states(&[]).unwrap();
        let a = run_analytic(&program, &initial, EngineOptions::default()).unwrap();
        let table = propagate(&program).unwrap();
        let (mean, cov) = table.output_moments(&program, &initial);
        assert!((&cov - &a.cov).amax() < 1e-10, "{} r={} ratio={}", kind.name(), cfg.r, cfg.readout_ratio);
        assert!((&mean - &a.mean).amax() < 1e-10);
        assert!(table.commutator_defect() < 1e-12);
    }
}

#[test]
fn oracle_rows_match_documented_patterns() {
    let cfg = ProtocolConfig::with_r(20.0);
    for kind in ProtocolKind::ALL {
        let program = kind.program(&cfg).unwrap();
        let g = propagate(&program).unwrap().gain_matrix(&program);
        assert_abs_diff_eq!(g, kind.expected_gain(), epsilon = 1e-12);
    }
}

#[test]
fn exact_commutators_at_r0() {
    for ratio in DEFAULT_RATIOS {
        for kind in ProtocolKind::ALL {
            let cfg = ProtocolConfig { readout_ratio: ratio, ..ProtocolConfig::default() };
            let table = propagate_exact(&kind.program(&cfg).unwrap()).unwrap();
            assert!(table.commutators_exact(), "{} ratio={ratio}", kind.name());
        }
    }
    let squeezed = ProtocolKind::Swap.program(&ProtocolConfig::with_r(0.5)).unwrap();
    assert!(propagate_exact(&squeezed).is_err());
}

#[test]
fn validation_grid_passes() {
    for (kind, cfg) in grid() {
        let row = validate_point(kind, &cfg, 20_000, 11, EngineOptions::default()).unwrap();
        assert!(row.pass, "{row:?}");
    }
}

#[test]
fn injected_gain_error_is_caught() {
    let cfg = ProtocolConfig::with_r(1.0);
    let row = validate_point(ProtocolKind::AtomToLight, &cfg, 1000, 1, EngineOptions { gain_error: 1e-3 }).unwrap();
    assert!(!row.pass && row.oracle_deviation > 1e-6);
}

#[test]
fn monte_carlo_agrees_with_analytic() {
    for kind in ProtocolKind::ALL {
        let program = kind.program(&ProtocolConfig::with_r(0.5)).unwrap();
        let overrides: Vec<_> = kind
            .input_labels()
            .iter()
            .zip([GaussianState::coherent(1.0, -2.0), GaussianState::coherent(0.5, 0.25)])
            .map(|(l, s)| (l.to_string(), s))
            .collect();
        let initial = program.initial_states(&overrides).unwrap();
        let a = run_analytic(&program, &initial, EngineOptions::default()).unwrap();
        let mc = run_monte_carlo(&program, &initial, 100_000, 3).unwrap();
        assert!(sigma_distance(&mc, &a.mean, &a.cov) < 5.0, "{}", kind.name());
    }
}

#[test]
fn monte_carlo_is_deterministic_across_thread_counts() {
    let cfg = ProtocolConfig { r: 1.0, ..ProtocolConfig::default() }.monte_carlo(5000, 42);
    let run = || ProtocolKind::AtomToAtom.run(&cfg, &[]).unwrap().to_json();
    let reference = run();
    assert_eq!(run(), reference);
    for threads in [1, 3] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        assert_eq!(pool.install(run), reference);
    }
    let other = ProtocolKind::AtomToAtom.run(&ProtocolConfig { seed: Some(43), ..cfg.clone() }, &[]).unwrap().to_json();
    assert_ne!(other, reference);
}

#[test]
fn single_shot_has_no_standard_errors() {
    let cfg = ProtocolConfig::default().monte_carlo(1, 9);
    let rep = ProtocolKind::Swap.run(&cfg, &[]).unwrap();
    assert!(rep.standard_errors.is_none());
    assert_eq!(rep.measurement_records.len(), 2);
}

#[test]
fn fidelity_increases_with_r() {
    for kind in ProtocolKind::ALL {
        let mut last = 0.0;
        for i in 0..=16 {
            let rep = kind.run(&ProtocolConfig::with_r(0.25 * i as f64), &[]).unwrap();
            assert!(rep.fidelity_coherent > last, "{} step {i}", kind.name());
            last = rep.fidelity_coherent;
        }
    }
}

#[test]
fn added_noise_does_not_depend_on_input() {
    let cfg = ProtocolConfig::with_r(0.7);
    let squeezed = GaussianState::vacuum(2).two_mode_squeeze(0, 1, 0.4).unwrap().partial_trace(&[0]).unwrap();
    let inputs = [GaussianState::vacuum(1), GaussianState::coherent(3.0, -1.0), squeezed];
    for kind in ProtocolKind::ALL {
        let reference = kind.run(&cfg, &[]).unwrap();
        for s in &inputs {
            let rep = kind.run(&cfg, &[s.clone(), s.clone()][..kind.input_labels().len()]).unwrap();
            for (a, b) in rep.added_noise.iter().zip(&reference.added_noise) {
                assert_abs_diff_eq!(a.x, b.x, epsilon = 1e-12);
                assert_abs_diff_eq!(a.p, b.p, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn gain_error_option_is_analytic_only() {
    let cfg = ProtocolConfig::with_r(1.0);
    let program = ProtocolKind::Swap.program(&cfg).unwrap();
    let rep = run_program(&program, &cfg, &[], EngineOptions { gain_error: 0.01 }).unwrap();
    assert!((rep.gain() + nalgebra::DMatrix::<f64>::identity(4, 4)).amax() > 1e-3);
}
