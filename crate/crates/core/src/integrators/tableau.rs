//! Butcher tableaux for the magnetic substep and the momentum one-step map.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// An explicit tableau `(L, b)` together with its partner `Lhat`.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherPair {
    pub s: usize,
    pub l: DMatrix<f64>,
    pub b: DVector<f64>,
    pub l_hat: DMatrix<f64>,
}

impl ButcherPair {
    /// Explicit trapezoidal rule.
    pub fn heun() -> Self {
        make_partner_tableau(
            &DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]),
            &DVector::from_row_slice(&[0.5, 0.5]),
        )
        .expect("Heun weights are nonzero")
    }

    /// The classical fourth-order Runge–Kutta method.
    pub fn rk4() -> Self {
        #[rustfmt::skip]
        let l = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, 0.0, 0.0,
            0.5, 0.0, 0.0, 0.0,
            0.0, 0.5, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
        ]);
        let b = DVector::from_row_slice(&[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]);
        make_partner_tableau(&l, &b).expect("RK4 weights are nonzero")
    }

    /// Largest `|b_i Lhat_ij + b_j L_ji - b_i b_j|`.
    pub fn compatibility_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.s {
            for j in 0..self.s {
                let r = self.b[i] * self.l_hat[(i, j)] + self.b[j] * self.l[(j, i)] - self.b[i] * self.b[j];
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// Root `x > 0` of `sum_k rho_k x^k = 1`, where `rho_k` sums `|b L...L|`
    /// over all index chains of length `k`. Steps with
    /// `tau max_i |M_i| < kappa` have a well-defined momentum map.
    pub fn kappa(&self) -> f64 {
        let coeffs = chain_weights(&self.l, &self.b);
        let poly = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c) * x;
        let mut lo = 0.0;
        let mut hi = 1.0 / coeffs[0];
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if poly(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `rho_k`, `k = 1..=s`, from chains `j_1 < ... < j_k` weighted by
/// `|b_{j_k} L_{j_2 j_1} ... L_{j_k j_{k-1}}|`.
fn chain_weights(l: &DMatrix<f64>, b: &DVector<f64>) -> Vec<f64> {
    let s = b.len();
    let mut level: Vec<f64> = b.iter().map(|v| v.abs()).collect();
    let mut out = vec![level.iter().sum()];
    for _ in 1..s {
        level = (0..s)
            .map(|i| ((i + 1)..s).map(|j| l[(j, i)].abs() * level[j]).sum())
            .collect();
        out.push(level.iter().sum());
    }
    out
}

/// `Lhat = 1 b^T - diag(b)^-1 L^T diag(b)`.
pub fn make_partner_tableau(l: &DMatrix<f64>, b: &DVector<f64>) -> Result<ButcherPair> {
    let s = b.len();
    if l.nrows() != s || l.ncols() != s {
        return Err(Error::BadTableau(format!("L is {}x{}, expected {s}x{s}", l.nrows(), l.ncols())));
    }
    for i in 0..s {
        for j in i..s {
            if l[(i, j)] != 0.0 {
                return Err(Error::BadTableau("L must be strictly lower triangular".into()));
            }
        }
    }
    if let Some(i) = b.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroWeight(i));
    }
    let l_hat = DMatrix::from_fn(s, s, |i, j| b[j] - l[(j, i)] * b[j] / b[i]);
    Ok(ButcherPair {
        s,
        l: l.clone(),
        b: b.clone(),
        l_hat,
    })
}

/// `rho = sum_k (-tau)^k sum_{j_1 < ... < j_k} M_{j_1} ... M_{j_k} b_{j_k} prod L_{j_{l+1} j_l}`,
/// accumulated backwards over the first chain index.
pub fn rho_matrix(ms: &[DMatrix<f64>], tau: f64, tableau: &ButcherPair) -> DMatrix<f64> {
    let s = tableau.s;
    assert_eq!(ms.len(), s, "one stage matrix per stage");
    let n = ms[0].nrows();
    let mut f: Vec<DMatrix<f64>> = Vec::with_capacity(s);
    for i in (0..s).rev() {
        let mut inner = DMatrix::identity(n, n) * tableau.b[i];
        for (j, fj) in ((i + 1)..s).zip(f.iter().rev()) {
            let c = tableau.l[(j, i)];
            if c != 0.0 {
                inner += c * fj;
            }
        }
        f.push(-tau * &ms[i] * inner);
    }
    f.into_iter().fold(DMatrix::zeros(n, n), |acc, fi| acc + fi)
}

/// Upper bound `sqrt(|M|_1 |M|_inf)` on the spectral norm.
fn norm_bound(m: &DMatrix<f64>) -> f64 {
    let one = m.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max);
    let inf = m.row_iter().map(|r| r.lp_norm(1)).fold(0.0, f64::max);
    (one * inf).sqrt()
}

/// Fails with `StepTooLarge` when `|tau| max_i |M_i|_2 >= guard kappa`.
pub fn check_step(ms: &[DMatrix<f64>], tau: f64, tableau: &ButcherPair, guard: f64) -> Result<()> {
    let threshold = guard * tableau.kappa();
    let mut worst = 0.0f64;
    for m in ms {
        let mut nrm = norm_bound(m);
        if tau.abs() * nrm >= threshold {
            nrm = m.clone().singular_values().max();
        }
        worst = worst.max(nrm);
    }
    let scaled_norm = tau.abs() * worst;
    if scaled_norm >= threshold {
        return Err(Error::StepTooLarge {
            scaled_norm,
            threshold,
        });
    }
    Ok(())
}

/// `(I + rho)^-1 pB` by a dense LU solve.
pub fn momentum_map(ms: &[DMatrix<f64>], tau: f64, tableau: &ButcherPair, pb: &DVector<f64>) -> Result<DVector<f64>> {
    let n = pb.len();
    let lhs = DMatrix::identity(n, n) + rho_matrix(ms, tau, tableau);
    lhs.lu().solve(pb).ok_or(Error::StepTooLarge {
        scaled_norm: f64::INFINITY,
        threshold: tableau.kappa(),
    })
}
