#![allow(dead_code)]

use std::collections::HashMap;

use approxlie::expr::NormalForm;
use approxlie::invariance::{InvarianceEngine, PdeSystem};
use approxlie::model::{self, GivenFunctions, ModelParams};
use approxlie::prolong::{commutator, Generator};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn nf(s: &str) -> NormalForm {
    NormalForm::parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        (-3i32..=3, 1i32..=4).prop_map(|(n, d)| format!("({n}/{d})")),
    ]
}

/// Expressions in `x`, `y` mixing every constructor the kernel supports;
/// logarithm arguments are kept positive.
pub fn expr_text() -> impl Strategy<Value = String> {
    leaf().prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), 2u32..=3).prop_map(|(a, k)| format!("({a})^{k}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})/(2 + ({b})^2)")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp({a})")),
            inner.clone().prop_map(|a| format!("arctan({a})")),
            inner.clone().prop_map(|a| format!("log(1 + ({a})^2)")),
        ]
    })
}

pub struct Generators {
    pub sys: PdeSystem,
    pub plain: InvarianceEngine,
    pub modulo: InvarianceEngine,
    pub generators: Vec<(String, Generator)>,
}

impl Generators {
    pub fn new() -> Generators {
        let params = ModelParams::symbolic();
        let sys = model::creeping_system(&params);
        let given = GivenFunctions::symbolic();
        let plain = InvarianceEngine::new(&sys, 1).unwrap();
        let modulo = InvarianceEngine::with_modulo(&sys, 1, &model::constraint_rules(&given, &params)).unwrap();
        let generators = model::symmetry_generators(&given, &params);
        Generators {
            sys,
            plain,
            modulo,
            generators,
        }
    }

    pub fn engine(&self, name: &str) -> &InvarianceEngine {
        if model::needs_constraint(name) {
            &self.modulo
        } else {
            &self.plain
        }
    }

    /// Every generator passes at first order.
    pub fn all_pass(&self) -> Vec<(String, bool)> {
        self.generators
            .iter()
            .map(|(n, g)| (n.clone(), self.engine(n).verify(n, g).passed))
            .collect()
    }

    /// The zeroth-order part of each generator is an exact symmetry of the
    /// unperturbed system.
    pub fn stable_parts(&self) -> Vec<(String, bool)> {
        let sys0 = self.sys.eps_zero().unwrap();
        let params = ModelParams::symbolic();
        let given = GivenFunctions::symbolic();
        let plain = InvarianceEngine::new(&sys0, 0).unwrap();
        let modulo = InvarianceEngine::with_modulo(&sys0, 0, &model::constraint_rules(&given, &params)).unwrap();
        self.generators
            .iter()
            .map(|(n, g)| {
                let e = if model::needs_constraint(n) { &modulo } else { &plain };
                (n.clone(), e.verify(n, &g.with_order(0)).passed)
            })
            .collect()
    }

    /// `eps X` is again a first-order approximate symmetry.
    pub fn eps_multiples(&self) -> Vec<(String, bool)> {
        self.generators
            .iter()
            .map(|(n, g)| (n.clone(), self.engine(n).verify(n, &g.shift(1)).passed))
            .collect()
    }

    /// Truncated commutators of every pair verify.
    pub fn commutators(&self) -> Vec<(String, bool)> {
        let mut out = Vec::new();
        for (i, (a, ga)) in self.generators.iter().enumerate() {
            for (b, gb) in &self.generators[i + 1..] {
                let c = commutator(ga, gb).unwrap();
                let name = format!("[{a}, {b}]");
                let engine = if model::needs_constraint(a) || model::needs_constraint(b) {
                    &self.modulo
                } else {
                    &self.plain
                };
                out.push((name.clone(), engine.verify(&name, &c).passed));
            }
        }
        out
    }

    /// Generators with one slot perturbed by a random non-symmetric term.
    pub fn mutations(&self, n: usize, seed: u64) -> Vec<(String, Generator)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let slots = ["xi_x", "xi_y", "eta_u", "eta_v", "eta_p"];
        let terms = ["x^2", "x*y", "y^2", "x^2*y", "u0*x", "u0*v0", "v0^2", "p0*y", "y^3", "u0^2"];
        (0..n)
            .map(|i| {
                let (name, g) = &self.generators[rng.random_range(0..self.generators.len())];
                let slot = slots[rng.random_range(0..slots.len())];
                let order = rng.random_range(0..2usize);
                let term = terms[rng.random_range(0..terms.len())];
                let c = rng.random_range(1..=5i64) * if rng.random_bool(0.5) { 1 } else { -1 };
                let current: Vec<NormalForm> = g
                    .slots()
                    .into_iter()
                    .find(|(k, _)| k == slot)
                    .map(|(_, s)| s.coeffs().to_vec())
                    .unwrap();
                let mut forms = current;
                forms[order] = forms[order].add(&nf(&format!("{c}*{term}")));
                let mut m = g.clone();
                m.set_slot(slot, forms).unwrap();
                (format!("mutant{i} {name} {slot} eps^{order} {c:+}*{term}"), m)
            })
            .collect()
    }
}

pub fn bindings(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Point functions of `x, y, u, v, p` for random infinitesimals.
pub fn point_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("u".to_string()),
        Just("v".to_string()),
        Just("p".to_string()),
        (-3i32..=3).prop_map(|n| format!("({n})")),
    ];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
        ]
    })
}
