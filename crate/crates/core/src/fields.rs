//! Scalar and vector potentials with analytic derivatives.
//!
//! Every field supplies `A`, its Jacobian, Hessians and third derivatives,
//! `dA/dt` with its Jacobian, and `V` with gradient and Hessian, all at a
//! caller-chosen time. The builtins cover the closed-form potentials used by
//! the packaged experiments.

use std::collections::BTreeMap;
use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result};

/// Pointwise values of a field and its derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldValues {
    pub d: usize,
    pub a: DVector<f64>,
    /// `ja[(k, j)] = d_j A_k`
    pub ja: DMatrix<f64>,
    /// `ha[k][(i, j)] = d_i d_j A_k`
    pub ha: Vec<DMatrix<f64>>,
    /// `d_m d_i d_j A_k`, flat with index `((k d + m) d + i) d + j`
    pub ta: Vec<f64>,
    pub dta: DVector<f64>,
    pub jdta: DMatrix<f64>,
    pub v: f64,
    pub gv: DVector<f64>,
    pub hv: DMatrix<f64>,
}

impl FieldValues {
    pub fn new(d: usize) -> Self {
        FieldValues {
            d,
            a: DVector::zeros(d),
            ja: DMatrix::zeros(d, d),
            ha: vec![DMatrix::zeros(d, d); d],
            ta: vec![0.0; d * d * d * d],
            dta: DVector::zeros(d),
            jdta: DMatrix::zeros(d, d),
            v: 0.0,
            gv: DVector::zeros(d),
            hv: DMatrix::zeros(d, d),
        }
    }

    pub fn clear(&mut self) {
        self.a.fill(0.0);
        self.ja.fill(0.0);
        for h in &mut self.ha {
            h.fill(0.0);
        }
        self.ta.fill(0.0);
        self.dta.fill(0.0);
        self.jdta.fill(0.0);
        self.v = 0.0;
        self.gv.fill(0.0);
        self.hv.fill(0.0);
    }

    #[inline]
    pub fn ta_index(&self, k: usize, m: usize, i: usize, j: usize) -> usize {
        let d = self.d;
        ((k * d + m) * d + i) * d + j
    }

    #[inline]
    pub fn ta(&self, k: usize, m: usize, i: usize, j: usize) -> f64 {
        self.ta[self.ta_index(k, m, i, j)]
    }
}

/// A magnetic Schrödinger potential pair `(A, V)`.
pub trait Field: Send + Sync + Debug {
    fn dim(&self) -> usize;

    /// `A(t, x) = M_A(t) x`
    fn is_linear_a(&self) -> bool {
        false
    }

    fn is_time_dependent(&self) -> bool {
        false
    }

    /// Overwrites every entry of `out` with the values at `(t, x)`.
    fn eval(&self, t: f64, x: &[f64], out: &mut FieldValues);
}

/// Evaluates all derivative values of `field` at `(t, x)`.
pub fn eval_bundle(field: &dyn Field, t: f64, x: &[f64]) -> FieldValues {
    let mut out = FieldValues::new(field.dim());
    field.eval(t, x, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

pub type Params = BTreeMap<String, ParamValue>;

/// The closed-form fields shipped with the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    /// `A = (sin u, -sin u)`, `u = x1 + x2 + alpha sin t`, `V = x1^2 + x2^2`.
    Trig2d { alpha: f64 },
    /// `A = a (-x2, x1, 0)`, `V = v (x3^2 - (x1^2 + x2^2)/2)`.
    Penning { a_coef: f64, v_coef: f64 },
    /// `A = (sin(x1 - x2), sin(x1 - x2))`, `V = (x1 - x2)^2`.
    SymTranslation,
    /// `A = (-x2, x1) / (1 + |x|^2)`, `V = |x|^2 / 2`.
    SymRotation,
    /// `A = 0`, `V = omega^2 |x|^2 / 2` in `d` dimensions.
    Harmonic { omega: f64, d: usize },
    /// `A = M x`, `V = x^T K x / 2` with `K` symmetric.
    LinearA { m_a: DMatrix<f64>, v_hess: DMatrix<f64> },
}

pub const PENNING_A: f64 = 57.125;
pub const PENNING_V: f64 = 113.25;

/// `(id, parameters, description)` of every builtin.
pub const BUILTINS: &[(&str, &str, &str)] = &[
    ("trig2d", "alpha", "A = (sin u, -sin u), u = x1 + x2 + alpha sin t; V = x1^2 + x2^2"),
    (
        "penning",
        "a_coef = 57.125, v_coef = 113.25 (optional)",
        "A = a_coef (-x2, x1, 0); V = v_coef (x3^2 - (x1^2 + x2^2)/2)",
    ),
    ("sym_translation", "-", "A = sin(x1 - x2) (1, 1); V = (x1 - x2)^2"),
    ("sym_rotation", "-", "A = (-x2, x1)/(1 + |x|^2); V = |x|^2/2"),
    ("harmonic", "omega, d", "A = 0; V = omega^2 |x|^2 / 2"),
    ("linear_a", "m_a (d x d), v_hess (d x d, symmetric)", "A = m_a x; V = x^T v_hess x / 2"),
];

fn take_scalar(params: &Params, key: &str) -> Result<Option<f64>> {
    match params.get(key) {
        None => Ok(None),
        Some(ParamValue::Scalar(v)) if v.is_finite() => Ok(Some(*v)),
        Some(other) => Err(Error::BadParams(format!(
            "'{key}' must be a finite number, got {other:?}"
        ))),
    }
}

fn require_scalar(params: &Params, id: &str, key: &str) -> Result<f64> {
    take_scalar(params, key)?
        .ok_or_else(|| Error::BadParams(format!("{id}: missing parameter '{key}'")))
}

fn require_matrix(params: &Params, id: &str, key: &str) -> Result<DMatrix<f64>> {
    match params.get(key) {
        Some(ParamValue::Matrix(rows)) => {
            let n = rows.len();
            if n == 0 || rows.iter().any(|r| r.len() != n) {
                return Err(Error::BadParams(format!("{id}: '{key}' must be square")));
            }
            Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
        }
        Some(other) => Err(Error::BadParams(format!(
            "{id}: '{key}' must be a matrix, got {other:?}"
        ))),
        None => Err(Error::BadParams(format!("{id}: missing parameter '{key}'"))),
    }
}

fn check_keys(params: &Params, id: &str, allowed: &[&str]) -> Result<()> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::BadParams(format!("{id}: unknown parameter '{k}'"))),
        None => Ok(()),
    }
}

/// Builds a builtin field from its id and parameter table.
pub fn make_builtin(id: &str, params: &Params) -> Result<Builtin> {
    match id {
        "trig2d" => {
            check_keys(params, id, &["alpha"])?;
            Ok(Builtin::Trig2d {
                alpha: require_scalar(params, id, "alpha")?,
            })
        }
        "penning" => {
            check_keys(params, id, &["a_coef", "v_coef"])?;
            Ok(Builtin::Penning {
                a_coef: take_scalar(params, "a_coef")?.unwrap_or(PENNING_A),
                v_coef: take_scalar(params, "v_coef")?.unwrap_or(PENNING_V),
            })
        }
        "sym_translation" => {
            check_keys(params, id, &[])?;
            Ok(Builtin::SymTranslation)
        }
        "sym_rotation" => {
            check_keys(params, id, &[])?;
            Ok(Builtin::SymRotation)
        }
        "harmonic" => {
            check_keys(params, id, &["omega", "d"])?;
            let omega = require_scalar(params, id, "omega")?;
            let d = require_scalar(params, id, "d")?;
            if d < 1.0 || d.fract() != 0.0 {
                return Err(Error::BadParams(format!(
                    "harmonic: 'd' must be a positive integer, got {d}"
                )));
            }
            Ok(Builtin::Harmonic {
                omega,
                d: d as usize,
            })
        }
        "linear_a" => {
            check_keys(params, id, &["m_a", "v_hess"])?;
            let m_a = require_matrix(params, id, "m_a")?;
            let v_hess = require_matrix(params, id, "v_hess")?;
            if m_a.nrows() != v_hess.nrows() {
                return Err(Error::BadParams(
                    "linear_a: 'm_a' and 'v_hess' must have the same size".into(),
                ));
            }
            if (&v_hess - v_hess.transpose()).amax() > 0.0 {
                return Err(Error::BadParams("linear_a: 'v_hess' must be symmetric".into()));
            }
            Ok(Builtin::LinearA { m_a, v_hess })
        }
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

/// `A_k = sigma_k sin(u)`, `u = s . x + phase`, and its time derivative with
/// `du/dt = u_dot`.
fn ridge_potential(sigma: [f64; 2], s: [f64; 2], u: f64, u_dot: f64, out: &mut FieldValues) {
    let (sn, cs) = u.sin_cos();
    for k in 0..2 {
        out.a[k] = sigma[k] * sn;
        out.dta[k] = sigma[k] * cs * u_dot;
        for j in 0..2 {
            out.ja[(k, j)] = sigma[k] * cs * s[j];
            out.jdta[(k, j)] = -sigma[k] * sn * u_dot * s[j];
            for i in 0..2 {
                out.ha[k][(i, j)] = -sigma[k] * sn * s[i] * s[j];
                for m in 0..2 {
                    let idx = out.ta_index(k, m, i, j);
                    out.ta[idx] = -sigma[k] * cs * s[m] * s[i] * s[j];
                }
            }
        }
    }
}

/// Writes `A = M x` (constant Jacobian, vanishing higher derivatives) and
/// `V = x^T K x / 2`.
fn linear_quadratic(m_a: &DMatrix<f64>, v_hess: &DMatrix<f64>, x: &[f64], out: &mut FieldValues) {
    let d = x.len();
    out.v = 0.0;
    for k in 0..d {
        let mut ak = 0.0;
        let mut gk = 0.0;
        for j in 0..d {
            ak += m_a[(k, j)] * x[j];
            gk += v_hess[(k, j)] * x[j];
        }
        out.a[k] = ak;
        out.gv[k] = gk;
        out.v += 0.5 * x[k] * gk;
    }
    out.ja.copy_from(m_a);
    out.hv.copy_from(v_hess);
}

impl Builtin {
    /// `M_A` for fields with linear vector potential.
    pub fn linear_a_matrix(&self) -> Option<DMatrix<f64>> {
        match self {
            Builtin::Penning { a_coef, .. } => Some(DMatrix::from_row_slice(
                3,
                3,
                &[0.0, -a_coef, 0.0, *a_coef, 0.0, 0.0, 0.0, 0.0, 0.0],
            )),
            Builtin::LinearA { m_a, .. } => Some(m_a.clone()),
            Builtin::Harmonic { d, .. } => Some(DMatrix::zeros(*d, *d)),
            _ => None,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Builtin::Trig2d { .. } => "trig2d",
            Builtin::Penning { .. } => "penning",
            Builtin::SymTranslation => "sym_translation",
            Builtin::SymRotation => "sym_rotation",
            Builtin::Harmonic { .. } => "harmonic",
            Builtin::LinearA { .. } => "linear_a",
        }
    }
}

impl Field for Builtin {
    fn dim(&self) -> usize {
        match self {
            Builtin::Trig2d { .. } | Builtin::SymTranslation | Builtin::SymRotation => 2,
            Builtin::Penning { .. } => 3,
            Builtin::Harmonic { d, .. } => *d,
            Builtin::LinearA { m_a, .. } => m_a.nrows(),
        }
    }

    fn is_linear_a(&self) -> bool {
        matches!(
            self,
            Builtin::Penning { .. } | Builtin::Harmonic { .. } | Builtin::LinearA { .. }
        )
    }

    fn is_time_dependent(&self) -> bool {
        matches!(self, Builtin::Trig2d { alpha } if *alpha != 0.0)
    }

    fn eval(&self, t: f64, x: &[f64], out: &mut FieldValues) {
        out.clear();
        match self {
            Builtin::Trig2d { alpha } => {
                let u = x[0] + x[1] + alpha * t.sin();
                ridge_potential([1.0, -1.0], [1.0, 1.0], u, alpha * t.cos(), out);
                out.v = x[0] * x[0] + x[1] * x[1];
                out.gv[0] = 2.0 * x[0];
                out.gv[1] = 2.0 * x[1];
                out.hv[(0, 0)] = 2.0;
                out.hv[(1, 1)] = 2.0;
            }
            Builtin::SymTranslation => {
                let u = x[0] - x[1];
                ridge_potential([1.0, 1.0], [1.0, -1.0], u, 0.0, out);
                out.v = u * u;
                out.gv[0] = 2.0 * u;
                out.gv[1] = -2.0 * u;
                out.hv.copy_from_slice(&[2.0, -2.0, -2.0, 2.0]);
            }
            Builtin::SymRotation => {
                rotational_potential(x, out);
                out.v = 0.5 * (x[0] * x[0] + x[1] * x[1]);
                out.gv[0] = x[0];
                out.gv[1] = x[1];
                out.hv[(0, 0)] = 1.0;
                out.hv[(1, 1)] = 1.0;
            }
            Builtin::Penning { a_coef, v_coef } => {
                out.a[0] = -a_coef * x[1];
                out.a[1] = a_coef * x[0];
                out.ja[(0, 1)] = -a_coef;
                out.ja[(1, 0)] = *a_coef;
                out.v = v_coef * (x[2] * x[2] - 0.5 * (x[0] * x[0] + x[1] * x[1]));
                out.gv[0] = -v_coef * x[0];
                out.gv[1] = -v_coef * x[1];
                out.gv[2] = 2.0 * v_coef * x[2];
                out.hv[(0, 0)] = -v_coef;
                out.hv[(1, 1)] = -v_coef;
                out.hv[(2, 2)] = 2.0 * v_coef;
            }
            Builtin::Harmonic { omega, .. } => {
                let w2 = omega * omega;
                for (i, xi) in x.iter().enumerate() {
                    out.v += 0.5 * w2 * xi * xi;
                    out.gv[i] = w2 * xi;
                    out.hv[(i, i)] = w2;
                }
            }
            Builtin::LinearA { m_a, v_hess } => linear_quadratic(m_a, v_hess, x, out),
        }
    }
}

/// `A = f(|x|^2) J x` with `f(r2) = 1/(1 + r2)` and `J` the planar rotation
/// generator; derivatives by the product rule on the scalar factor and the
/// linear map.
fn rotational_potential(x: &[f64], out: &mut FieldValues) {
    let jm = [[0.0, -1.0], [1.0, 0.0]];
    let l = [-x[1], x[0]];
    let f = 1.0 / (1.0 + x[0] * x[0] + x[1] * x[1]);
    let (f2, f3, f4) = (f * f, f * f * f, f * f * f * f);
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let df = |i: usize| -2.0 * x[i] * f2;
    let d2f = |i: usize, j: usize| -2.0 * delta(i, j) * f2 + 8.0 * x[i] * x[j] * f3;
    let d3f = |m: usize, i: usize, j: usize| {
        8.0 * (delta(i, j) * x[m] + delta(m, i) * x[j] + delta(m, j) * x[i]) * f3
            - 48.0 * x[i] * x[j] * x[m] * f4
    };
    for k in 0..2 {
        out.a[k] = f * l[k];
        for j in 0..2 {
            out.ja[(k, j)] = df(j) * l[k] + f * jm[k][j];
            for i in 0..2 {
                out.ha[k][(i, j)] = d2f(i, j) * l[k] + df(j) * jm[k][i] + df(i) * jm[k][j];
                for m in 0..2 {
                    let idx = out.ta_index(k, m, i, j);
                    out.ta[idx] = d3f(m, i, j) * l[k]
                        + d2f(i, j) * jm[k][m]
                        + d2f(m, j) * jm[k][i]
                        + d2f(m, i) * jm[k][j];
                }
            }
        }
    }
}
