//! Hagedorn wave packets and their canonical vectorization.
//!
//! A packet `(eps, q, p, Q, P, S)` is flattened into canonical coordinates
//! `qB = (q, s vec(Re Q), s vec(Im Q))` and `pB = (p, s vec(Re P), s vec(Im P))`
//! with `s = sqrt(eps/2)` and column-major `vec`. Each has length
//! `D = d + 2 d^2`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Default absolute Frobenius tolerance on `Y^T Omega Y - Omega`.
pub const TOL_SYMPL: f64 = 1e-10;

/// Number of canonical position coordinates for a `d`-dimensional packet.
pub fn canonical_dim(d: usize) -> usize {
    d + 2 * d * d
}

/// `sqrt(eps/2)`, the scale between `Y` and its covariance factor.
pub fn width_scale(eps: f64) -> f64 {
    (0.5 * eps).sqrt()
}

/// The standard structure matrix `[[0, I], [-I, 0]]` of size `2d`.
pub fn omega(d: usize) -> DMatrix<f64> {
    let mut om = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        om[(i, d + i)] = 1.0;
        om[(d + i, i)] = -1.0;
    }
    om
}

/// Assemble `[[a, b], [c, e]]` from four `d x d` blocks.
pub(crate) fn block2(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    e: &DMatrix<f64>,
) -> DMatrix<f64> {
    let d = a.nrows();
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    m.view_mut((0, 0), (d, d)).copy_from(a);
    m.view_mut((0, d), (d, d)).copy_from(b);
    m.view_mut((d, 0), (d, d)).copy_from(c);
    m.view_mut((d, d), (d, d)).copy_from(e);
    m
}

/// `Y = [[Re Q, Im Q], [Re P, Im P]]`.
pub fn y_matrix(q_mat: &DMatrix<C64>, p_mat: &DMatrix<C64>) -> DMatrix<f64> {
    block2(
        &q_mat.map(|z| z.re),
        &q_mat.map(|z| z.im),
        &p_mat.map(|z| z.re),
        &p_mat.map(|z| z.im),
    )
}

/// `|| Y^T Omega Y - Omega ||_F`.
pub fn symplecticity_residual(q_mat: &DMatrix<C64>, p_mat: &DMatrix<C64>) -> f64 {
    y_residual(&y_matrix(q_mat, p_mat))
}

pub(crate) fn y_residual(y: &DMatrix<f64>) -> f64 {
    let om = omega(y.nrows() / 2);
    (y.transpose() * &om * y - om).norm()
}

/// Residual of the kinetic-momentum form of the symplecticity condition:
/// with `Y_M = [[Re Q, Im Q], [Re P - M Re Q, Im P - M Im Q]]` this is
/// `|| Y_M^T [[M - M^T, I], [-I, 0]] Y_M - Omega ||_F`.
pub fn kinetic_residual(q_mat: &DMatrix<C64>, p_mat: &DMatrix<C64>, m: &DMatrix<f64>) -> f64 {
    let d = q_mat.nrows();
    let qr = q_mat.map(|z| z.re);
    let qi = q_mat.map(|z| z.im);
    let pr = p_mat.map(|z| z.re) - m * &qr;
    let pi = p_mat.map(|z| z.im) - m * &qi;
    let ym = block2(&qr, &qi, &pr, &pi);
    let structure = block2(
        &(m - m.transpose()),
        &DMatrix::identity(d, d),
        &(-DMatrix::<f64>::identity(d, d)),
        &DMatrix::zeros(d, d),
    );
    (ym.transpose() * structure * &ym - omega(d)).norm()
}

/// Normalized Gaussian wave packet in Hagedorn's parametrization.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPacket {
    pub eps: f64,
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    pub q_mat: DMatrix<C64>,
    pub p_mat: DMatrix<C64>,
    pub phase: f64,
}

impl GaussianPacket {
    /// Builds a packet and checks the defining relations with the default tolerance.
    pub fn new(
        eps: f64,
        q: DVector<f64>,
        p: DVector<f64>,
        q_mat: DMatrix<C64>,
        p_mat: DMatrix<C64>,
        phase: f64,
    ) -> Result<Self> {
        Self::with_tolerance(eps, q, p, q_mat, p_mat, phase, TOL_SYMPL)
    }

    pub fn with_tolerance(
        eps: f64,
        q: DVector<f64>,
        p: DVector<f64>,
        q_mat: DMatrix<C64>,
        p_mat: DMatrix<C64>,
        phase: f64,
        tol_sympl: f64,
    ) -> Result<Self> {
        let d = q.len();
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::BadParams(format!("eps must be positive, got {eps}")));
        }
        for (len, what) in [
            (p.len(), d),
            (q_mat.nrows(), d),
            (q_mat.ncols(), d),
            (p_mat.nrows(), d),
            (p_mat.ncols(), d),
        ] {
            if len != what {
                return Err(Error::DimensionMismatch {
                    expected: what,
                    got: len,
                });
            }
        }
        let packet = GaussianPacket {
            eps,
            q,
            p,
            q_mat,
            p_mat,
            phase,
        };
        packet.validate(tol_sympl)?;
        Ok(packet)
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Checks invertibility of `Q`, `P`, the symplecticity relation and
    /// positive definiteness of `Im(P Q^-1)`.
    pub fn validate(&self, tol_sympl: f64) -> Result<()> {
        let res = symplecticity_residual(&self.q_mat, &self.p_mat);
        if !(res <= tol_sympl) {
            return Err(Error::NotSymplectic(res));
        }
        let q_inv = self
            .q_mat
            .clone()
            .try_inverse()
            .ok_or(Error::NotInvertible("Q"))?;
        if self.p_mat.clone().try_inverse().is_none() {
            return Err(Error::NotInvertible("P"));
        }
        let c_im = (&self.p_mat * q_inv).map(|z| z.im);
        let sym = (&c_im + c_im.transpose()) * 0.5;
        if sym.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("Im(P Q^-1)"));
        }
        Ok(())
    }

    pub fn y(&self) -> DMatrix<f64> {
        y_matrix(&self.q_mat, &self.p_mat)
    }

    pub fn symplecticity_residual(&self) -> f64 {
        symplecticity_residual(&self.q_mat, &self.p_mat)
    }

    /// Flatten into canonical coordinates at time `t`.
    pub fn vectorize(&self, t: f64) -> CanonicalState {
        let d = self.dim();
        let s = width_scale(self.eps);
        let dd = canonical_dim(d);
        let mut qb = DVector::zeros(dd);
        let mut pb = DVector::zeros(dd);
        qb.rows_mut(0, d).copy_from(&self.q);
        pb.rows_mut(0, d).copy_from(&self.p);
        // column-major iteration matches vec()
        for (k, z) in self.q_mat.iter().enumerate() {
            qb[d + k] = s * z.re;
            qb[d + d * d + k] = s * z.im;
        }
        for (k, z) in self.p_mat.iter().enumerate() {
            pb[d + k] = s * z.re;
            pb[d + d * d + k] = s * z.im;
        }
        CanonicalState {
            d,
            eps: self.eps,
            qb,
            pb,
            t,
            phase: self.phase,
        }
    }

    pub fn wigner_moments(&self) -> WignerMoments {
        let d = self.dim();
        let mut z = DVector::zeros(2 * d);
        z.rows_mut(0, d).copy_from(&self.q);
        z.rows_mut(d, d).copy_from(&self.p);
        let y = self.y();
        let sigma = (&y * y.transpose()) * (0.5 * self.eps);
        WignerMoments { z, sigma }
    }
}

/// Gaussian phase-space mean and covariance of a packet's Wigner function.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerMoments {
    pub z: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl WignerMoments {
    /// Position block of the covariance.
    pub fn sigma11(&self) -> DMatrix<f64> {
        let d = self.z.len() / 2;
        self.sigma.view((0, 0), (d, d)).into_owned()
    }
}

pub fn wigner_moments(packet: &GaussianPacket) -> WignerMoments {
    packet.wigner_moments()
}

pub fn vectorize(packet: &GaussianPacket) -> CanonicalState {
    packet.vectorize(0.0)
}

pub fn devectorize(state: &CanonicalState) -> Result<GaussianPacket> {
    state.devectorize()
}

/// Vectorized phase-space point `(qB, pB)` plus the time and phase carried with it.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalState {
    pub d: usize,
    pub eps: f64,
    pub qb: DVector<f64>,
    pub pb: DVector<f64>,
    pub t: f64,
    pub phase: f64,
}

/// Reads the `d x d` block number `idx` (1 = real part, 2 = imaginary part)
/// out of a canonical vector.
pub(crate) fn width_block(v: &DVector<f64>, d: usize, idx: usize) -> DMatrix<f64> {
    let off = d + (idx - 1) * d * d;
    DMatrix::from_column_slice(d, d, &v.as_slice()[off..off + d * d])
}

/// Assembles a canonical vector from its centre part and two width blocks.
pub(crate) fn assemble(
    center: &DVector<f64>,
    re: &DMatrix<f64>,
    im: &DMatrix<f64>,
) -> DVector<f64> {
    let d = center.len();
    let mut v = DVector::zeros(canonical_dim(d));
    v.rows_mut(0, d).copy_from(center);
    v.rows_mut(d, d * d)
        .copy_from_slice(re.as_slice());
    v.rows_mut(d + d * d, d * d)
        .copy_from_slice(im.as_slice());
    v
}

impl CanonicalState {
    /// Builds a state from raw vectors, checking the layout length.
    pub fn from_vectors(
        d: usize,
        eps: f64,
        qb: DVector<f64>,
        pb: DVector<f64>,
        t: f64,
        phase: f64,
    ) -> Result<Self> {
        let dd = canonical_dim(d);
        if qb.len() + pb.len() != 2 * dd || qb.len() != dd {
            return Err(Error::DimensionMismatch {
                expected: 2 * dd,
                got: qb.len() + pb.len(),
            });
        }
        Ok(CanonicalState {
            d,
            eps,
            qb,
            pb,
            t,
            phase,
        })
    }

    /// Splits a single `2D` vector `(qB, pB)`.
    pub fn from_flat(d: usize, eps: f64, z: &[f64], t: f64, phase: f64) -> Result<Self> {
        let dd = canonical_dim(d);
        if z.len() != 2 * dd {
            return Err(Error::DimensionMismatch {
                expected: 2 * dd,
                got: z.len(),
            });
        }
        Ok(CanonicalState {
            d,
            eps,
            qb: DVector::from_column_slice(&z[..dd]),
            pb: DVector::from_column_slice(&z[dd..]),
            t,
            phase,
        })
    }

    pub fn scale(&self) -> f64 {
        width_scale(self.eps)
    }

    pub fn q(&self) -> DVector<f64> {
        self.qb.rows(0, self.d).into_owned()
    }

    pub fn p(&self) -> DVector<f64> {
        self.pb.rows(0, self.d).into_owned()
    }

    /// `s Re Q`
    pub fn x_re(&self) -> DMatrix<f64> {
        width_block(&self.qb, self.d, 1)
    }

    /// `s Im Q`
    pub fn x_im(&self) -> DMatrix<f64> {
        width_block(&self.qb, self.d, 2)
    }

    /// `s Re P`
    pub fn p_re(&self) -> DMatrix<f64> {
        width_block(&self.pb, self.d, 1)
    }

    /// `s Im P`
    pub fn p_im(&self) -> DMatrix<f64> {
        width_block(&self.pb, self.d, 2)
    }

    /// Unscaled `Y` recovered from the canonical blocks.
    pub fn y(&self) -> DMatrix<f64> {
        let s = self.scale();
        block2(&self.x_re(), &self.x_im(), &self.p_re(), &self.p_im()) / s
    }

    /// Position covariance `Sigma11 = s^2 (Re Q Re Q^T + Im Q Im Q^T)`.
    pub fn sigma11(&self) -> DMatrix<f64> {
        let xr = self.x_re();
        let xi = self.x_im();
        &xr * xr.transpose() + &xi * xi.transpose()
    }

    /// Momentum/position cross covariance `Sigma21 = s^2 (Re P Re Q^T + Im P Im Q^T)`.
    pub fn sigma21(&self) -> DMatrix<f64> {
        sigma21(&self.qb, &self.pb, self.d)
    }

    pub fn symplecticity_residual(&self) -> f64 {
        y_residual(&self.y())
    }

    /// Residual of the quadratic family `qB^T I_k pB = vec(Omega)_k`.
    ///
    /// Column `a` of `Y` (scaled by `s`) sits at offset `d + a d` in both
    /// `qB` (top half) and `pB` (bottom half), so entry `(a, b)` of `Y^T Omega Y`
    /// is the bilinear form `sum_r qB[ia + r] pB[ib + r] - pB[ia + r] qB[ib + r]`.
    pub fn quadratic_family_residual(&self) -> f64 {
        let d = self.d;
        let s2 = self.scale().powi(2);
        let om = omega(d);
        let mut acc = 0.0;
        for b in 0..2 * d {
            for a in 0..2 * d {
                let (ia, ib) = (d + a * d, d + b * d);
                let v: f64 = (0..d)
                    .map(|r| self.qb[ia + r] * self.pb[ib + r] - self.pb[ia + r] * self.qb[ib + r])
                    .sum();
                let diff = v / s2 - om[(a, b)];
                acc += diff * diff;
            }
        }
        acc.sqrt()
    }

    pub fn devectorize(&self) -> Result<GaussianPacket> {
        let dd = canonical_dim(self.d);
        if self.qb.len() != dd || self.pb.len() != dd {
            return Err(Error::DimensionMismatch {
                expected: 2 * dd,
                got: self.qb.len() + self.pb.len(),
            });
        }
        let s = self.scale();
        let q_mat = DMatrix::from_fn(self.d, self.d, |i, j| {
            let k = i + j * self.d;
            C64::new(self.qb[self.d + k] / s, self.qb[self.d + self.d * self.d + k] / s)
        });
        let p_mat = DMatrix::from_fn(self.d, self.d, |i, j| {
            let k = i + j * self.d;
            C64::new(self.pb[self.d + k] / s, self.pb[self.d + self.d * self.d + k] / s)
        });
        Ok(GaussianPacket {
            eps: self.eps,
            q: self.q(),
            p: self.p(),
            q_mat,
            p_mat,
            phase: self.phase,
        })
    }

    /// `(eps/4) Re tr(P Q^*)`, the quantity added to the phase in its evolution law.
    pub fn phase_shift(&self) -> f64 {
        let d = self.d;
        let n = d * d;
        0.5 * (self.qb.rows(d, 2 * n).dot(&self.pb.rows(d, 2 * n)))
    }
}

pub(crate) fn sigma21(qb: &DVector<f64>, pb: &DVector<f64>, d: usize) -> DMatrix<f64> {
    let xr = width_block(qb, d, 1);
    let xi = width_block(qb, d, 2);
    let pr = width_block(pb, d, 1);
    let pi = width_block(pb, d, 2);
    pr * xr.transpose() + pi * xi.transpose()
}

/// Canonical positions with kinetic momenta `vB = pB - AB(t, qB)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticState {
    pub d: usize,
    pub eps: f64,
    pub qb: DVector<f64>,
    pub vb: DVector<f64>,
    pub t: f64,
    pub phase: f64,
}

impl KineticState {
    pub fn scale(&self) -> f64 {
        width_scale(self.eps)
    }

    /// `Y` built from position and kinetic-momentum width blocks, unscaled.
    pub fn y_kinetic(&self) -> DMatrix<f64> {
        let d = self.d;
        block2(
            &width_block(&self.qb, d, 1),
            &width_block(&self.qb, d, 2),
            &width_block(&self.vb, d, 1),
            &width_block(&self.vb, d, 2),
        ) / self.scale()
    }
}
