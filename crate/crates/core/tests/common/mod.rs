#![allow(dead_code)]

use proptest::prelude::*;
use seorder_core::linalg;
use seorder_core::nalgebra::{DMatrix, DVector};
use seorder_core::{GeneratorKind, SkewEllipticalParams};

pub fn generator() -> impl Strategy<Value = GeneratorKind> {
    prop_oneof![
        Just(GeneratorKind::Normal),
        Just(GeneratorKind::StudentT { nu: 4.0 }),
        Just(GeneratorKind::StudentT { nu: 7.0 }),
    ]
}

/// `Omega = L L' + 0.3 I`, `delta_w = 0.9 Omega^{1/2} u` with `|u| < 1`.
pub fn law_in(n: usize, gen: GeneratorKind) -> impl Strategy<Value = SkewEllipticalParams> {
    (
        proptest::collection::vec(-2.0..2.0f64, n),
        proptest::collection::vec(-1.0..1.0f64, n * n),
        proptest::collection::vec(-1.0..1.0f64, n),
        0.0..0.95f64,
    )
        .prop_map(move |(mu, l, u, r)| {
            let l = DMatrix::from_vec(n, n, l);
            let omega = &l * l.transpose() + DMatrix::identity(n, n) * 0.3;
            let u = DVector::from_vec(u);
            let u = if u.norm() > 0.0 { u.normalize() * r } else { u };
            let dw = linalg::psd_sqrt(&omega) * u * 0.9;
            SkewEllipticalParams::from_delta_w(mu, omega, dw.iter().copied().collect(), gen).expect("feasible by construction")
        })
}

pub fn law(max_dim: usize) -> impl Strategy<Value = SkewEllipticalParams> {
    (1..=max_dim, generator()).prop_flat_map(|(n, g)| law_in(n, g))
}

pub fn pair(max_dim: usize) -> impl Strategy<Value = (SkewEllipticalParams, SkewEllipticalParams)> {
    (1..=max_dim, generator()).prop_flat_map(|(n, g)| (law_in(n, g), law_in(n, g)))
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
