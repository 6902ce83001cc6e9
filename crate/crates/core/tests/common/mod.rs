#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use magwave::fields::{make_builtin, Builtin, ParamValue, Params};
use magwave::harness::RunConfig;
use magwave::packet::{CanonicalState, GaussianPacket, C64};

pub fn fixture_path(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "configs", name].iter().collect()
}

pub fn fixture(name: &str) -> RunConfig {
    RunConfig::load(fixture_path(name)).unwrap()
}

/// `Q = L U`, `P = (K L + i L^-T) U` with `L` unit-ish lower triangular,
/// `K` symmetric and `U` a scalar phase. Always satisfies the
/// symplecticity condition.
pub fn symplectic_widths(rng: &mut impl Rng, d: usize) -> (DMatrix<C64>, DMatrix<C64>) {
    let l = DMatrix::from_fn(d, d, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => rng.random_range(0.6..1.4),
        std::cmp::Ordering::Greater => rng.random_range(-0.4..0.4),
        std::cmp::Ordering::Less => 0.0,
    });
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.5..0.5));
    let k = &a + a.transpose();
    let u = C64::from_polar(1.0, rng.random_range(0.0..6.0));
    let lit = l.clone().try_inverse().unwrap().transpose();
    let q = l.map(|v| C64::new(v, 0.0)) * u;
    let p = ((&k * &l).map(|v| C64::new(v, 0.0)) + lit.map(|v| C64::new(0.0, v))) * u;
    (q, p)
}

pub fn random_packet(rng: &mut impl Rng, d: usize, eps: f64) -> GaussianPacket {
    let (qm, pm) = symplectic_widths(rng, d);
    GaussianPacket::new(
        eps,
        DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)),
        DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)),
        qm,
        pm,
        rng.random_range(-1.0..1.0),
    )
    .unwrap()
}

pub fn random_state(rng: &mut impl Rng, d: usize, eps: f64) -> CanonicalState {
    random_packet(rng, d, eps).vectorize(0.0)
}

pub fn harmonic(omega: f64, d: usize) -> Builtin {
    let p = Params::from([
        ("omega".to_string(), ParamValue::Scalar(omega)),
        ("d".to_string(), ParamValue::Scalar(d as f64)),
    ]);
    make_builtin("harmonic", &p).unwrap()
}

pub fn trig(alpha: f64) -> Builtin {
    make_builtin("trig2d", &Params::from([("alpha".to_string(), ParamValue::Scalar(alpha))])).unwrap()
}

pub fn builtin(id: &str) -> Builtin {
    make_builtin(id, &Params::new()).unwrap()
}

/// `Y^T Omega Y` defect of the Jacobian of `map` at `z`, by central
/// differences.
pub fn jacobian(map: impl Fn(&DVector<f64>) -> DVector<f64>, z: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let n = z.len();
    let mut j = DMatrix::zeros(map(z).len(), n);
    for c in 0..n {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[c] += h;
        zm[c] -= h;
        j.set_column(c, &((map(&zp) - map(&zm)) / (2.0 * h)));
    }
    j
}

/// Standard structure matrix `[[0, I], [-I, 0]]` of size `2n`.
pub fn standard_omega(n: usize) -> DMatrix<f64> {
    let mut om = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        om[(i, n + i)] = 1.0;
        om[(n + i, i)] = -1.0;
    }
    om
}
