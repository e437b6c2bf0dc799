//! Hand-written step lists of the three protocols.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use super::config::{BEAM_PHOTONS, ENSEMBLE_ATOMS, ENSEMBLE_F};
use crate::program::{ModeDecl, ModeKind, Program, Quadrature, Step};

struct Builder<'a> {
    vars: &'a BTreeMap<String, f64>,
    steps: Vec<Step>,
}

impl Builder<'_> {
    fn var(&self, name: &str) -> f64 {
        self.vars[name]
    }

    fn squeeze(&mut self, a: &str, b: &str, r: f64) {
        self.steps.push(Step::Squeeze { a: a.into(), b: b.into(), r });
    }

    fn qnd(&mut self, a: &str, b: &str, gain: f64) {
        self.steps.push(Step::Qnd { a: a.into(), b: b.into(), gain });
    }

    fn phase(&mut self, mode: &str, theta: f64) {
        self.steps.push(Step::Phase { mode: mode.into(), theta });
    }

    /// Rigid rotation of an x-polarized ensemble about x.
    fn rotate(&mut self, mode: &str, angle: f64) {
        self.phase(mode, angle);
    }

    fn measure(&mut self, mode: &str, angle: f64, id: &str) {
        self.steps.push(Step::Measure { mode: mode.into(), angle, id: id.into() });
    }

    fn displace(&mut self, mode: &str, quadrature: Quadrature, terms: &[(&str, f64)]) {
        self.steps.push(Step::Displace {
            mode: mode.into(),
            quadrature,
            terms: terms.iter().map(|(id, g)| (id.to_string(), *g)).collect(),
            constant: 0.0,
        });
    }

    /// Readout of the atomic `p` through a bright probe: turn the spin so the
    /// probe sees `F_y`, couple, turn back, then detect the probe's phase
    /// quadrature (rotated onto `x`).
    fn probe_readout(&mut self, atom: &str, probe: &str, id: &str) {
        let k = self.var("k_probe");
        self.rotate(atom, FRAC_PI_2);
        self.phase(probe, FRAC_PI_2);
        self.qnd(atom, probe, k);
        self.rotate(atom, -FRAC_PI_2);
        self.phase(probe, -FRAC_PI_2);
        self.measure(probe, 0.0, id);
    }
}

fn spin(label: &str) -> ModeDecl {
    ModeDecl { label: label.into(), kind: ModeKind::Spin { f: ENSEMBLE_F, n_atoms: ENSEMBLE_ATOMS } }
}

fn light(label: &str, n_photons: f64) -> ModeDecl {
    ModeDecl { label: label.into(), kind: ModeKind::Light { n_photons } }
}

pub(super) fn atom_to_light(vars: &BTreeMap<String, f64>) -> Program {
    let mut b = Builder { vars, steps: Vec::new() };
    let (r, k) = (b.var("r"), b.var("k"));
    b.squeeze("epr1", "epr2", r);
    b.qnd("atom", "epr1", k);
    b.measure("epr1", FRAC_PI_2, "s1");
    b.rotate("atom", FRAC_PI_2);
    b.qnd("atom", "coh", b.var("k_probe"));
    b.measure("coh", FRAC_PI_2, "s2");
    b.displace("epr2", Quadrature::P, &[("s1", b.var("ff1"))]);
    b.displace("epr2", Quadrature::X, &[("s2", b.var("ff2"))]);
    // Relabel the beam's axes so the output reads in the spin's frame.
    b.phase("epr2", -FRAC_PI_2);
    Program {
        name: "atom_to_light".into(),
        description: "Teleport a collective spin onto the second beam of an EPR pair.".into(),
        modes: vec![
            spin("atom"),
            light("epr1", BEAM_PHOTONS),
            light("epr2", BEAM_PHOTONS),
            light("coh", b.var("n_probe")),
        ],
        steps: b.steps,
        io: vec![("atom".into(), "epr2".into())],
    }
}

pub(super) fn atom_to_atom(vars: &BTreeMap<String, f64>) -> Program {
    let mut b = Builder { vars, steps: Vec::new() };
    let (r, k) = (b.var("r"), b.var("k"));
    b.squeeze("epr_a", "epr_b", r);
    b.phase("epr_a", -FRAC_PI_2);
    b.qnd("alice", "epr_a", k);
    b.measure("epr_a", FRAC_PI_2, "d_a1");
    b.probe_readout("bob", "probe_b", "d_b1");
    b.probe_readout("alice", "probe_a", "d_a2");
    b.qnd("bob", "epr_b", k);
    b.measure("epr_b", FRAC_PI_2, "d_b2");
    b.displace("bob", Quadrature::X, &[("d_a2", b.var("ff1")), ("d_b2", b.var("ff2"))]);
    b.displace("bob", Quadrature::P, &[("d_a1", b.var("ff3")), ("d_b1", b.var("ff4"))]);
    Program {
        name: "atom_to_atom".into(),
        description: "Teleport Alice's collective spin onto Bob's ensemble through an EPR pair.".into(),
        modes: vec![
            spin("alice"),
            spin("bob"),
            light("epr_a", BEAM_PHOTONS),
            light("epr_b", BEAM_PHOTONS),
            light("probe_a", b.var("n_probe")),
            light("probe_b", b.var("n_probe")),
        ],
        steps: b.steps,
        io: vec![("alice".into(), "bob".into())],
    }
}

pub(super) fn swap(vars: &BTreeMap<String, f64>) -> Program {
    let mut b = Builder { vars, steps: Vec::new() };
    let (r, k) = (b.var("r"), b.var("k"));
    b.squeeze("epr1", "epr2", r);
    b.qnd("a", "epr1", k);
    b.qnd("b", "epr1", k);
    b.measure("epr1", FRAC_PI_2, "d1");
    b.phase("epr2", -FRAC_PI_2);
    b.rotate("a", FRAC_PI_2);
    b.rotate("b", FRAC_PI_2);
    b.qnd("a", "epr2", k);
    b.qnd("b", "epr2", k);
    b.rotate("a", -FRAC_PI_2);
    b.rotate("b", -FRAC_PI_2);
    b.measure("epr2", FRAC_PI_2, "d2");
    b.displace("a", Quadrature::X, &[("d1", b.var("ff1"))]);
    b.displace("b", Quadrature::X, &[("d1", b.var("ff2"))]);
    b.displace("a", Quadrature::P, &[("d2", b.var("ff3"))]);
    b.displace("b", Quadrature::P, &[("d2", b.var("ff4"))]);
    Program {
        name: "swap".into(),
        description: "Exchange the states of two atomic ensembles using one EPR pair.".into(),
        modes: vec![spin("a"), spin("b"), light("epr1", BEAM_PHOTONS), light("epr2", BEAM_PHOTONS)],
        steps: b.steps,
        io: vec![("a".into(), "b".into()), ("b".into(), "a".into())],
    }
}
