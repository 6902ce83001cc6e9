//! Gaussian averages by tensorized Gauss–Hermite quadrature and the averaged
//! potentials built from them.
//!
//! All averages are taken over the position marginal of the packet, a normal
//! law with mean `q` and covariance `Sigma11 = Xr Xr^T + Xi Xi^T`, where
//! `Xr`, `Xi` are the scaled width blocks stored in `qB`. Derivatives of the
//! averaged potentials are formed from averages of analytic field derivatives,
//! never by differentiating a quadrature sum.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fields::{Field, FieldValues};
use crate::packet::{assemble, canonical_dim, width_block, CanonicalState};

/// One-dimensional Gauss–Hermite rule for the standard normal density.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Orthonormal probabilists' Hermite values `h_0(x), ..., h_n(x)`.
fn hermite_values(x: f64, n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n + 1];
    h[0] = 1.0;
    if n >= 1 {
        h[1] = x;
    }
    for k in 1..n {
        h[k + 1] = (x * h[k] - (k as f64).sqrt() * h[k - 1]) / ((k + 1) as f64).sqrt();
    }
    h
}

/// Nodes from the eigenvalues of the Jacobi matrix, refined by Newton on
/// `h_n`; weights from the Christoffel function.
pub fn hermite_rule(n: usize) -> QuadratureRule {
    assert!(n >= 1, "a quadrature rule needs at least one node");
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    for x in &mut nodes {
        for _ in 0..3 {
            let h = hermite_values(*x, n);
            let dh = nf.sqrt() * h[n - 1];
            if dh == 0.0 {
                break;
            }
            *x -= h[n] / dh;
        }
    }
    // Enforce the reflection symmetry of the rule.
    for i in 0..n / 2 {
        let m = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -m;
        nodes[n - 1 - i] = m;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let h = hermite_values(x, n);
            1.0 / h[..n].iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    QuadratureRule { n, nodes, weights }
}

/// Quadrature points `q + chol(Sigma11) xi` with product weights, for the
/// positions `qB` of a canonical state. The first axis varies fastest.
pub fn position_nodes_qb(qb: &DVector<f64>, d: usize, rule: &QuadratureRule) -> Result<Vec<(DVector<f64>, f64)>> {
    let mut out = Vec::with_capacity(rule.n.pow(d as u32));
    for_each_node(qb, d, rule, |x, w| out.push((DVector::from_column_slice(x), w)))?;
    Ok(out)
}

pub fn position_nodes(state: &CanonicalState, rule: &QuadratureRule) -> Result<Vec<(DVector<f64>, f64)>> {
    position_nodes_qb(&state.qb, state.d, rule)
}

/// Gaussian averages of the field and its derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedBundle {
    pub d: usize,
    /// `<A>`
    pub a0: DVector<f64>,
    /// `<J_A>`
    pub g1: DMatrix<f64>,
    /// `<Hess A_k>`
    pub h: Vec<DMatrix<f64>>,
    /// `<d_m d_i d_j A_k>`, flat with index `((k d + m) d + i) d + j`
    pub g3: Vec<f64>,
    /// `<W>`, `W = V + |A|^2 / 2`
    pub w0: f64,
    pub gw: DVector<f64>,
    pub hw: DMatrix<f64>,
    /// `<dA/dt>`
    pub dta0: DVector<f64>,
    pub gdta: DMatrix<f64>,
    /// `<V>`
    pub vbar0: f64,
}

impl AveragedBundle {
    fn zeros(d: usize) -> Self {
        AveragedBundle {
            d,
            a0: DVector::zeros(d),
            g1: DMatrix::zeros(d, d),
            h: vec![DMatrix::zeros(d, d); d],
            g3: vec![0.0; d * d * d * d],
            w0: 0.0,
            gw: DVector::zeros(d),
            hw: DMatrix::zeros(d, d),
            dta0: DVector::zeros(d),
            gdta: DMatrix::zeros(d, d),
            vbar0: 0.0,
        }
    }

    #[inline]
    pub fn g3(&self, k: usize, m: usize, i: usize, j: usize) -> f64 {
        let d = self.d;
        self.g3[((k * d + m) * d + i) * d + j]
    }

    /// Averaged scalar potential `VB`.
    pub fn vb(&self) -> f64 {
        self.w0
    }

    fn accumulate(&mut self, f: &FieldValues, w: f64) {
        let d = self.d;
        let mut a2 = 0.0;
        for k in 0..d {
            self.a0[k] += w * f.a[k];
            self.dta0[k] += w * f.dta[k];
            a2 += f.a[k] * f.a[k];
        }
        self.w0 += w * (f.v + 0.5 * a2);
        self.vbar0 += w * f.v;
        for (acc, v) in self.g3.iter_mut().zip(&f.ta) {
            *acc += w * v;
        }
        for j in 0..d {
            // (J_A^T A)_j
            let mut jta = 0.0;
            for k in 0..d {
                jta += f.ja[(k, j)] * f.a[k];
            }
            self.gw[j] += w * (f.gv[j] + jta);
            for i in 0..d {
                self.g1[(i, j)] += w * f.ja[(i, j)];
                self.gdta[(i, j)] += w * f.jdta[(i, j)];
                let mut hw = f.hv[(i, j)];
                for k in 0..d {
                    hw += f.ja[(k, i)] * f.ja[(k, j)] + f.a[k] * f.ha[k][(i, j)];
                    self.h[k][(i, j)] += w * f.ha[k][(i, j)];
                }
                self.hw[(i, j)] += w * hw;
            }
        }
    }
}

/// Calls `visit(x, w)` for every tensor-grid node.
fn for_each_node(
    qb: &DVector<f64>,
    d: usize,
    rule: &QuadratureRule,
    mut visit: impl FnMut(&[f64], f64),
) -> Result<()> {
    let xr = width_block(qb, d, 1);
    let xi = width_block(qb, d, 2);
    let sigma11 = &xr * xr.transpose() + &xi * xi.transpose();
    let chol = Cholesky::new(sigma11).ok_or(Error::NotPositiveDefinite("Sigma11"))?;
    let l = chol.l();
    let n = rule.n;
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    for _ in 0..n.pow(d as u32) {
        let mut w = 1.0;
        for a in 0..d {
            w *= rule.weights[idx[a]];
        }
        for (r, xr) in x.iter_mut().enumerate() {
            *xr = qb[r];
            for a in 0..=r {
                *xr += l[(r, a)] * rule.nodes[idx[a]];
            }
        }
        visit(&x, w);
        for a in 0..d {
            idx[a] += 1;
            if idx[a] < n {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(())
}

/// Averages of the field over the packet positions encoded in `qB`.
pub fn avg_bundle_qb(field: &dyn Field, t: f64, qb: &DVector<f64>, rule: &QuadratureRule) -> Result<AveragedBundle> {
    let d = field.dim();
    if qb.len() != canonical_dim(d) {
        return Err(Error::DimensionMismatch {
            expected: canonical_dim(d),
            got: qb.len(),
        });
    }
    let mut bundle = AveragedBundle::zeros(d);
    let mut values = FieldValues::new(d);
    for_each_node(qb, d, rule, |x, w| {
        field.eval(t, x, &mut values);
        bundle.accumulate(&values, w);
    })?;
    Ok(bundle)
}

pub fn avg_bundle(field: &dyn Field, t: f64, state: &CanonicalState, rule: &QuadratureRule) -> Result<AveragedBundle> {
    avg_bundle_qb(field, t, &state.qb, rule)
}

/// `(c; vec(G Xr); vec(G Xi))`
fn lift(c: &DVector<f64>, g: &DMatrix<f64>, qb: &DVector<f64>, d: usize) -> DVector<f64> {
    let xr = width_block(qb, d, 1);
    let xi = width_block(qb, d, 2);
    assemble(c, &(g * xr), &(g * xi))
}

/// Averaged vector potential `AB(qB)`.
pub fn assemble_ab(qb: &DVector<f64>, bundle: &AveragedBundle) -> DVector<f64> {
    lift(&bundle.a0, &bundle.g1, qb, bundle.d)
}

/// Time derivative of `AB` at fixed `qB`.
pub fn assemble_dtab(qb: &DVector<f64>, bundle: &AveragedBundle) -> DVector<f64> {
    lift(&bundle.dta0, &bundle.gdta, qb, bundle.d)
}

/// Gradient of the averaged scalar potential `VB`.
pub fn grad_vb(qb: &DVector<f64>, bundle: &AveragedBundle) -> DVector<f64> {
    lift(&bundle.gw, &bundle.hw, qb, bundle.d)
}

/// `J_AB(qB)^T v`. The momentum-dependent width coupling is read from the
/// width blocks of `v`, so the map is linear in `v`.
pub fn apply_jabt(qb: &DVector<f64>, bundle: &AveragedBundle, v: &DVector<f64>) -> DVector<f64> {
    let d = bundle.d;
    let xr = width_block(qb, d, 1);
    let xi = width_block(qb, d, 2);
    let pr = width_block(v, d, 1);
    let pi = width_block(v, d, 2);
    let p = v.rows(0, d);
    let s21 = &pr * xr.transpose() + &pi * xi.transpose();

    let mut center = bundle.g1.tr_mul(&p.into_owned());
    let mut s = DMatrix::zeros(d, d);
    for k in 0..d {
        // (Sigma21 H_k)_{k, l}
        let row = s21.row(k) * &bundle.h[k];
        for l in 0..d {
            center[l] += row[l];
        }
        s += p[k] * &bundle.h[k];
        for m in 0..d {
            let c = s21[(k, m)];
            if c == 0.0 {
                continue;
            }
            for i in 0..d {
                for j in 0..d {
                    s[(i, j)] += c * bundle.g3(k, m, i, j);
                }
            }
        }
    }
    let g1t = bundle.g1.transpose();
    let re = &s * xr + &g1t * pr;
    let im = &s * xi + &g1t * pi;
    assemble(&center, &re, &im)
}

/// The transposed Jacobian `J_AB^T` as a dense `D x D` matrix, the matrix
/// of [`apply_jabt`].
pub fn assemble_jabt(qb: &DVector<f64>, bundle: &AveragedBundle) -> DMatrix<f64> {
    let d = bundle.d;
    let n = d * d;
    let dd = canonical_dim(d);
    let x = [width_block(qb, d, 1), width_block(qb, d, 2)];
    let off = |blk: usize, i: usize, c: usize| d + blk * n + i + c * d;
    let mut jt = DMatrix::zeros(dd, dd);

    for k in 0..d {
        let hx = [&bundle.h[k] * &x[0], &bundle.h[k] * &x[1]];
        for l in 0..d {
            jt[(l, k)] = bundle.g1[(k, l)];
        }
        for blk in 0..2 {
            for c in 0..d {
                for i in 0..d {
                    // centre rows against width momenta, and width rows against p
                    jt[(i, off(blk, k, c))] = hx[blk][(i, c)];
                    jt[(off(blk, i, c), k)] = hx[blk][(i, c)];
                }
            }
        }
        // width rows against width momenta: G1 coupling plus the third-derivative term
        for m in 0..d {
            let g3km = DMatrix::from_fn(d, d, |i, j| bundle.g3(k, m, i, j));
            let gx = [&g3km * &x[0], &g3km * &x[1]];
            for row_blk in 0..2 {
                for col_blk in 0..2 {
                    for cp in 0..d {
                        let xm = x[col_blk][(m, cp)];
                        if xm == 0.0 {
                            continue;
                        }
                        let col = off(col_blk, k, cp);
                        for c in 0..d {
                            for i in 0..d {
                                jt[(off(row_blk, i, c), col)] += xm * gx[row_blk][(i, c)];
                            }
                        }
                    }
                }
            }
        }
        for blk in 0..2 {
            for c in 0..d {
                for i in 0..d {
                    jt[(off(blk, i, c), off(blk, k, c))] += bundle.g1[(k, i)];
                }
            }
        }
    }
    jt
}

/// The Jacobian `J_AB` as a dense `D x D` matrix.
pub fn assemble_jab(qb: &DVector<f64>, bundle: &AveragedBundle) -> DMatrix<f64> {
    assemble_jabt(qb, bundle).transpose()
}

/// Magnetic matrix `BB = J_AB - J_AB^T` and electric field
/// `EB = -grad VB + J_AB^T AB - dAB/dt` of the charged-particle form.
pub fn boris_fields(qb: &DVector<f64>, bundle: &AveragedBundle) -> (DMatrix<f64>, DVector<f64>) {
    let jab = assemble_jab(qb, bundle);
    let bb = &jab - jab.transpose();
    let ab = assemble_ab(qb, bundle);
    let eb = -grad_vb(qb, bundle) + jab.tr_mul(&ab) - assemble_dtab(qb, bundle);
    (bb, eb)
}

/// `hB = pB^T pB / 2 - pB^T AB + VB` from precomputed averages.
pub fn hamiltonian(qb: &DVector<f64>, pb: &DVector<f64>, bundle: &AveragedBundle) -> f64 {
    0.5 * pb.norm_squared() - pb.dot(&assemble_ab(qb, bundle)) + bundle.vb()
}

/// Averaged Hamiltonian of `state` at time `t`.
pub fn energy(field: &dyn Field, t: f64, state: &CanonicalState, rule: &QuadratureRule) -> Result<f64> {
    let bundle = avg_bundle(field, t, state, rule)?;
    Ok(hamiltonian(&state.qb, &state.pb, &bundle))
}
