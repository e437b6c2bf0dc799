use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use spinport_core::gaussian::GaussianState;
use spinport_core::protocols::{
    swap_states, teleport_atom_to_atom, teleport_atom_to_light, ProtocolConfig, ProtocolError, ProtocolKind,
};

fn vac() -> GaussianState {
    GaussianState::vacuum(1)
}

#[test]
fn atom_to_light_noise_and_gain() {
    for r in [0.0, 0.5, 1.0, 2.0] {
        let cfg = ProtocolConfig::with_r(r);
        let rep = teleport_atom_to_light(&cfg, &GaussianState::coherent(0.3, -0.4)).unwrap();
        assert_abs_diff_eq!(rep.gain(), DMatrix::identity(2, 2), epsilon = 1e-12);
        let n = rep.noise("epr2").unwrap();
        let e = (-2.0 * r).exp();
        assert_abs_diff_eq!(n.x, e, epsilon = 1e-12);
        assert_abs_diff_eq!(n.p, e + 0.5 / cfg.readout_ratio, epsilon = 1e-12);
        let out = rep.output("epr2").unwrap();
        assert_abs_diff_eq!(out.mean[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(out.mean[1], -0.4, epsilon = 1e-12);
    }
}

#[test]
fn atom_to_light_fidelity_at_r1() {
    let rep = teleport_atom_to_light(&ProtocolConfig::with_r(1.0), &vac()).unwrap();
    assert_abs_diff_eq!(rep.fidelity_coherent, 1.0 / (1.0 + (-2.0f64).exp()), epsilon = 1e-6);
}

#[test]
fn zero_coupling_is_rejected() {
    let cfg = ProtocolConfig { kappa: 0.0, ..ProtocolConfig::default() };
    assert_eq!(teleport_atom_to_light(&cfg, &vac()).unwrap_err(), ProtocolError::ZeroCoupling);
}

#[test]
fn atom_to_atom_pattern_and_noise() {
    for r in [0.0, 1.0] {
        let cfg = ProtocolConfig::with_r(r);
        let bob = GaussianState::coherent(5.0, -3.0);
        let rep = teleport_atom_to_atom(&cfg, &GaussianState::coherent(0.7, -0.3), &bob).unwrap();
        assert_abs_diff_eq!(rep.gain(), ProtocolKind::AtomToAtom.expected_gain(), epsilon = 1e-12);
        let out = rep.output("bob").unwrap();
        assert_abs_diff_eq!(out.mean[0], 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(out.mean[1], 0.7, epsilon = 1e-9);
        let n = rep.noise("bob").unwrap();
        let e = (-2.0 * r).exp() + 0.5 / cfg.readout_ratio;
        assert_abs_diff_eq!(n.x, e, epsilon = 1e-12);
        assert_abs_diff_eq!(n.p, e, epsilon = 1e-12);
    }
}

#[test]
fn swap_pattern_and_noise() {
    let cfg = ProtocolConfig::with_r(0.5);
    let rep = swap_states(&cfg, &GaussianState::coherent(1.0, 0.0), &GaussianState::coherent(0.0, 1.0)).unwrap();
    assert_abs_diff_eq!(rep.gain(), -DMatrix::identity(4, 4), epsilon = 1e-12);
    for sys in ["a", "b"] {
        let n = rep.noise(sys).unwrap();
        assert_abs_diff_eq!(n.x, (-1.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(n.p, (-1.0f64).exp(), epsilon = 1e-12);
    }
    assert_abs_diff_eq!(rep.output("a").unwrap().mean[1], -1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(rep.output("b").unwrap().mean[0], -1.0, epsilon = 1e-12);
}
