use std::f64::consts::{FRAC_PI_2, PI};

use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use super::*;

fn weights(n_modes: usize, terms: &[(usize, f64)]) -> DVector<f64> {
    let mut w = DVector::zeros(2 * n_modes);
    for &(i, c) in terms {
        w[i] = c;
    }
    w
}

#[test]
fn vacuum_shapes() {
    let v1 = GaussianState::vacuum(1);
    assert_eq!(v1.mean().as_slice(), &[0.0, 0.0]);
    assert_eq!(v1.cov(), &(DMatrix::identity(2, 2) * 0.5));
    let v0 = GaussianState::vacuum(0);
    assert_eq!(v0.num_modes(), 0);
    assert!(v0.mean().is_empty());
    let v3 = GaussianState::vacuum(3);
    assert_eq!(v3.cov().shape(), (6, 6));
    for i in 0..6 {
        for j in 0..6 {
            assert_eq!(v3.cov()[(i, j)], if i == j { 0.5 } else { 0.0 });
        }
    }
}

#[test]
fn displacement_composes() {
    let v = GaussianState::vacuum(1);
    let d = v.displace(0, 1.0, 0.0).unwrap();
    assert_eq!(d.mean().as_slice(), &[1.0, 0.0]);
    assert_eq!(d.cov(), v.cov());
    let twice = v.displace(0, 0.3, -1.2).unwrap().displace(0, 0.5, 0.7).unwrap();
    let once = v.displace(0, 0.8, -0.5).unwrap();
    assert_abs_diff_eq!(twice.mean(), once.mean(), epsilon = 1e-15);
    assert!(matches!(v.displace(1, 0.0, 0.0), Err(GaussianError::ModeOutOfRange { .. })));
}

#[test]
fn phase_shift_convention() {
    let s = GaussianState::coherent(1.0, 0.0);
    assert_eq!(s.phase_shift(0, 0.0).unwrap(), s);
    let q = s.phase_shift(0, FRAC_PI_2).unwrap();
    assert_eq!(q.mean().as_slice(), &[0.0, -1.0]);
    let h = GaussianState::coherent(1.0, 2.0).phase_shift(0, PI).unwrap();
    assert_eq!(h.mean().as_slice(), &[-1.0, -2.0]);
}

#[test]
fn two_mode_squeeze_correlations() {
    let v = GaussianState::vacuum(2);
    assert_eq!(v.two_mode_squeeze(0, 1, 0.0).unwrap(), v);

    let s = v.two_mode_squeeze(0, 1, 1.0).unwrap();
    let sum_x = s.variance_of(&weights(2, &[(0, 1.0), (2, 1.0)]));
    let diff_p = s.variance_of(&weights(2, &[(1, 1.0), (3, -1.0)]));
    let diff_x = s.variance_of(&weights(2, &[(0, 1.0), (2, -1.0)]));
    let sum_p = s.variance_of(&weights(2, &[(1, 1.0), (3, 1.0)]));
    assert_abs_diff_eq!(sum_x, 0.1353352832366127, epsilon = 1e-12);
    assert_abs_diff_eq!(diff_p, (-2.0f64).exp(), epsilon = 1e-12);
    assert_abs_diff_eq!(diff_x, 2.0f64.exp(), epsilon = 1e-12);
    assert_abs_diff_eq!(sum_p, 2.0f64.exp(), epsilon = 1e-12);
    // x1 = ((x1+x2) + (x1-x2)) / 2 with the two combinations uncorrelated.
    let single = (sum_x + diff_x) / 4.0;
    assert_abs_diff_eq!(s.cov()[(0, 0)], single, epsilon = 1e-12);
    assert_abs_diff_eq!(s.cov()[(0, 0)], 1.8810978455418157, epsilon = 1e-12);
    assert!(matches!(v.two_mode_squeeze(1, 1, 0.3), Err(GaussianError::SameMode(1))));
}

#[test]
fn qnd_gate_propagation() {
    let s = GaussianState::vacuum(2).displace(1, 1.0, 0.0).unwrap();
    let out = s.qnd_gate(0, 1, 1.0).unwrap();
    assert_eq!(out.mean()[1], 1.0);
    assert_eq!(s.qnd_gate(0, 1, 0.0).unwrap(), s);

    let v = GaussianState::vacuum(2).qnd_gate(0, 1, 1.0).unwrap();
    assert_abs_diff_eq!(v.cov()[(1, 1)], 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(v.cov()[(1, 2)], 0.5, epsilon = 1e-15);
    assert!(GaussianState::vacuum(2).qnd_gate(0, 0, 1.0).is_err());
}

#[test]
fn homodyne_on_vacuum_empties_state() {
    let (m, post) = GaussianState::vacuum(1).homodyne_measure(0, 0.0, Outcome::Fixed(0.3)).unwrap();
    assert_eq!(m, 0.3);
    assert_eq!(post.num_modes(), 0);
}

/// Conditional moments of `y` given `x = m` by trapezoidal quadrature of the
/// bivariate normal density along `y`.
fn brute_force_conditional(mu: [f64; 2], cov: [[f64; 2]; 2], m: f64) -> (f64, f64) {
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    let (ixx, ixy, iyy) = (cov[1][1] / det, -cov[0][1] / det, cov[0][0] / det);
    let sy = cov[1][1].sqrt();
    let span = 12.0 + ((m - mu[0]) / cov[0][0].sqrt()).abs();
    let n = 40_001;
    let (lo, hi) = (mu[1] - span * sy, mu[1] + span * sy);
    let h = (hi - lo) / (n - 1) as f64;
    let (mut z0, mut z1, mut z2) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let y = lo + h * k as f64;
        let (dx, dy) = (m - mu[0], y - mu[1]);
        let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        let pdf = (-0.5 * (ixx * dx * dx + 2.0 * ixy * dx * dy + iyy * dy * dy)).exp() * w;
        z0 += pdf;
        z1 += pdf * y;
        z2 += pdf * y * y;
    }
    let mean = z1 / z0;
    (mean, z2 / z0 - mean * mean)
}

#[test]
fn homodyne_matches_bivariate_conditioning() {
    let r: f64 = 0.6;
    let s = GaussianState::vacuum(2).two_mode_squeeze(0, 1, r).unwrap();
    let m = 0.8;
    let (_, post) = s.homodyne_measure(0, 0.0, Outcome::Fixed(m)).unwrap();
    let expected_mean = -(2.0 * r).tanh() * m;
    let expected_var = 1.0 / (2.0 * (2.0 * r).cosh());
    assert_abs_diff_eq!(post.mean()[0], expected_mean, epsilon = 1e-12);
    assert_abs_diff_eq!(post.cov()[(0, 0)], expected_var, epsilon = 1e-12);
    let c = s.cov();
    let (bm, bv) = brute_force_conditional([0.0, 0.0], [[c[(0, 0)], c[(0, 2)]], [c[(2, 0)], c[(2, 2)]]], m);
    assert_abs_diff_eq!(post.mean()[0], bm, epsilon = 1e-12);
    assert_abs_diff_eq!(post.cov()[(0, 0)], bv, epsilon = 1e-11);
}

#[test]
fn homodyne_on_product_leaves_partner_untouched() {
    let s = GaussianState::coherent(0.4, -0.2)
        .tensor(&GaussianState::coherent(1.5, 0.5))
        .with_labels(["a", "b"])
        .unwrap();
    let (_, post) = s.homodyne_measure(0, 0.3, Outcome::Fixed(2.0)).unwrap();
    assert_eq!(post.mean().as_slice(), &[1.5, 0.5]);
    assert_eq!(post.cov(), &(DMatrix::identity(2, 2) * 0.5));
    assert_eq!(post.labels(), &["b".to_string()]);
}

#[test]
fn partial_trace_examples() {
    let s = GaussianState::vacuum(2).two_mode_squeeze(0, 1, 0.7).unwrap();
    assert_eq!(s.partial_trace(&[0, 1]).unwrap(), s);
    let one = s.partial_trace(&[0]).unwrap();
    let v = (1.4f64).cosh() / 2.0;
    assert_abs_diff_eq!(one.cov(), &(DMatrix::identity(2, 2) * v), epsilon = 1e-12);
    let p = GaussianState::vacuum(1).tensor(&GaussianState::coherent(3.0, -1.0));
    assert_eq!(p.partial_trace(&[1]).unwrap().mean().as_slice(), &[3.0, -1.0]);
    assert!(p.partial_trace(&[2]).is_err());
}

/// Moduli of the eigenvalues of `Ω V`, which come in pairs `±iν`.
fn direct_symplectic_eigenvalues(cov: &DMatrix<f64>) -> Vec<f64> {
    let omega = symplectic_form(cov.nrows() / 2);
    let mut nu: Vec<f64> = (omega * cov).complex_eigenvalues().iter().map(|z| z.norm()).collect();
    nu.sort_by(|a, b| a.total_cmp(b));
    nu.chunks(2).map(|c| c[0]).collect()
}

#[test]
fn symplectic_eigenvalue_examples() {
    for nu in GaussianState::vacuum(2).symplectic_eigenvalues().unwrap() {
        assert_abs_diff_eq!(nu, 0.5, epsilon = 1e-15);
    }
    for r in [0.1, 0.5, 1.0, 2.0] {
        let s = GaussianState::vacuum(2).two_mode_squeeze(0, 1, r).unwrap();
        let nu = s.symplectic_eigenvalues().unwrap();
        let direct = direct_symplectic_eigenvalues(s.cov());
        for (a, b) in nu.iter().zip(&direct) {
            assert_abs_diff_eq!(*a, 0.5, epsilon = 1e-9);
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-9);
        }
    }
    let thermal = GaussianState::new(DVector::zeros(2), DMatrix::identity(2, 2) * 2.3).unwrap();
    assert_abs_diff_eq!(thermal.symplectic_eigenvalues().unwrap()[0], 2.3, epsilon = 1e-12);
    let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.1, 1.0]);
    assert!(matches!(symplectic_spectrum(&asym), Err(GaussianError::Asymmetric(_))));
}

#[test]
fn rejects_unphysical_covariance() {
    let too_small = DMatrix::identity(2, 2) * 0.3;
    assert!(matches!(GaussianState::new(DVector::zeros(2), too_small), Err(GaussianError::Unphysical(_))));
    let mut nan = DMatrix::identity(2, 2);
    nan[(0, 0)] = f64::NAN;
    assert_eq!(GaussianState::new(DVector::zeros(2), nan), Err(GaussianError::NonFinite));
}

/// `<α| ρ |α>` for a displaced thermal state `ρ` (mean photon number `nbar`,
/// displacement `β`) and a coherent state `α`, both real, summed in the
/// number basis of `D(-β)|α> = |α - β>`.
fn fock_overlap(alpha: f64, beta: f64, nbar: f64) -> f64 {
    let a = alpha - beta;
    let mut term = (-a * a).exp();
    let mut total = 0.0;
    for n in 0..200 {
        if n > 0 {
            term *= a * a / n as f64;
        }
        let p = nbar.powi(n) / (nbar + 1.0).powi(n + 1);
        total += p * term;
    }
    total
}

fn displaced_thermal(x: f64, variance: f64) -> GaussianState {
    GaussianState::new(DVector::from_vec(vec![x, 0.0]), DMatrix::identity(2, 2) * variance).unwrap()
}

#[test]
fn fidelity_against_fock_oracle() {
    let c = GaussianState::coherent(0.4, -1.1);
    assert_abs_diff_eq!(gaussian_fidelity(&c, &c).unwrap(), 1.0, epsilon = 1e-12);

    let coherent = GaussianState::coherent(0.0, 0.0);
    let noisy = displaced_thermal(0.0, 1.5);
    let oracle = fock_overlap(0.0, 0.0, 1.0);
    assert_abs_diff_eq!(oracle, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(gaussian_fidelity(&coherent, &noisy).unwrap(), oracle, epsilon = 1e-12);

    // x = √2 Re α, so a separation d in x is |α - β| = d/√2.
    for d in [0.3, 1.0, 2.5] {
        let a = GaussianState::coherent(0.0, 0.0);
        let b = GaussianState::coherent(d, 0.0);
        let oracle = fock_overlap(0.0, d / 2f64.sqrt(), 0.0);
        assert_abs_diff_eq!(oracle, (-d * d / 2.0).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(gaussian_fidelity(&a, &b).unwrap(), oracle, epsilon = 1e-12);
    }

    let nbar = 0.7;
    let th = displaced_thermal(1.2, nbar + 0.5);
    let coh = GaussianState::coherent(-0.4, 0.0);
    let oracle = fock_overlap(-0.4 / 2f64.sqrt(), 1.2 / 2f64.sqrt(), nbar);
    assert_abs_diff_eq!(gaussian_fidelity(&coh, &th).unwrap(), oracle, epsilon = 1e-12);
    assert_abs_diff_eq!(gaussian_fidelity(&th, &coh).unwrap(), oracle, epsilon = 1e-12);

    let same = displaced_thermal(0.3, 1.7);
    assert_abs_diff_eq!(gaussian_fidelity(&same, &same).unwrap(), 1.0, epsilon = 1e-12);
    assert!(matches!(
        gaussian_fidelity(&GaussianState::vacuum(2), &coh),
        Err(GaussianError::NotSingleMode(2))
    ));
}

#[test]
fn phase_pi_conjugation_flips_qnd_gain() {
    let k = 0.8;
    let pi = Gate::Phase { mode: 1, theta: PI }.symplectic(2).unwrap();
    let q = Gate::Qnd { a: 0, b: 1, gain: k }.symplectic(2).unwrap();
    let conj = pi.after(&q).unwrap().after(&pi).unwrap();
    let flipped = Gate::Qnd { a: 0, b: 1, gain: -k }.symplectic(2).unwrap();
    assert_abs_diff_eq!(conj.matrix, flipped.matrix, epsilon = 1e-15);
}

#[test]
fn factored_state_tracks_covariance() {
    let parts = [GaussianState::coherent(0.2, 0.1), GaussianState::vacuum(2)];
    let mut f = FactoredState::from_parts(&parts);
    let mut s = parts[0].tensor(&parts[1]);
    for g in [
        Gate::TwoModeSqueeze { a: 1, b: 2, r: 0.9 },
        Gate::Qnd { a: 0, b: 1, gain: 1.3 },
        Gate::Phase { mode: 2, theta: 0.4 },
    ] {
        f.apply_gate(g).unwrap();
        s = s.apply_gate(g).unwrap();
    }
    assert_abs_diff_eq!(f.cov(), s.cov().clone(), epsilon = 1e-12);
    assert_abs_diff_eq!(f.mean(), s.mean(), epsilon = 1e-12);

    let (_, post) = s.homodyne_measure(1, 0.7, Outcome::Fixed(0.0)).unwrap();
    let cond = f.condition(1, 0.7).unwrap();
    assert_abs_diff_eq!(f.cov(), post.cov().clone(), epsilon = 1e-12);
    assert_abs_diff_eq!(cond.sigma * cond.sigma, s.variance_of(&weights(3, &[(2, 0.7f64.cos()), (3, 0.7f64.sin())])), epsilon = 1e-12);
}

#[test]
fn factored_state_is_stable_at_large_squeezing() {
    let r = 20.0;
    let mut f = FactoredState::from_parts(&[GaussianState::vacuum(2)]);
    f.apply_gate(Gate::TwoModeSqueeze { a: 0, b: 1, r }).unwrap();
    let (_, x0) = f.quadrature(0, 0.0).unwrap();
    let (_, x1) = f.quadrature(1, 0.0).unwrap();
    let sum = x0 + x1;
    assert!(sum.norm_squared() < 1e-12);
}

fn arb_gate(num_modes: usize) -> impl Strategy<Value = Gate> {
    let m = 0..num_modes;
    prop_oneof![
        (m.clone(), -7.0..7.0f64).prop_map(|(mode, theta)| Gate::Phase { mode, theta }),
        (m.clone(), 1..num_modes, -1.0..1.0f64)
            .prop_map(move |(a, off, r)| Gate::TwoModeSqueeze { a, b: (a + off) % num_modes, r }),
        (m, 1..num_modes, -2.0..2.0f64).prop_map(move |(a, off, gain)| Gate::Qnd { a, b: (a + off) % num_modes, gain }),
    ]
}

proptest! {
    #[test]
    fn gates_are_symplectic(gate in arb_gate(3)) {
        let t = gate.symplectic(3).unwrap();
        prop_assert!(t.symplectic_defect() <= SYMMETRY_TOL);
    }

    #[test]
    fn uncertainty_survives_gate_sequences(gates in prop::collection::vec(arb_gate(3), 1..8)) {
        let mut s = GaussianState::vacuum(3);
        for g in gates {
            s = s.apply_gate(g).unwrap();
        }
        let nu = s.symplectic_eigenvalues().unwrap();
        // Round-off in the spectrum grows with the largest covariance entry.
        let slack = EIGEN_SLACK * (1.0 + s.cov().amax());
        prop_assert!(nu.iter().all(|&v| v >= 0.5 - slack), "{nu:?}");
    }

    #[test]
    fn squeeze_inverse_is_identity(r in -3.0..3.0f64) {
        let g = Gate::TwoModeSqueeze { a: 0, b: 1, r };
        let t = g.inverse().symplectic(2).unwrap().after(&g.symplectic(2).unwrap()).unwrap();
        prop_assert!((t.matrix - DMatrix::identity(4, 4)).amax() <= 1e-12);
    }

    #[test]
    fn homodyne_total_moments(gates in prop::collection::vec(arb_gate(3), 1..6), angle in -3.2..3.2f64) {
        let mut s = GaussianState::vacuum(3).displace(1, 0.3, -0.8).unwrap();
        for g in gates {
            s = s.apply_gate(g).unwrap();
        }
        // Posterior means are affine in the outcome; recover the slope and
        // check the laws of total expectation and total variance.
        let (c, si) = cos_sin(angle);
        let mq = c * s.mean()[0] + si * s.mean()[1];
        let vq = s.variance_of(&weights(3, &[(0, c), (1, si)]));
        let (_, at_mean) = s.homodyne_measure(0, angle, Outcome::Fixed(mq)).unwrap();
        let (_, shifted) = s.homodyne_measure(0, angle, Outcome::Fixed(mq + 1.0)).unwrap();
        let slope = shifted.mean() - at_mean.mean();
        let prior = s.partial_trace(&[1, 2]).unwrap();
        prop_assert!((at_mean.mean() - prior.mean()).amax() <= 1e-9 * (1.0 + prior.mean().amax()));
        let total = at_mean.cov() + &slope * slope.transpose() * vq;
        prop_assert!((total - prior.cov()).amax() <= 1e-9 * (1.0 + prior.cov().amax()));
    }
}
