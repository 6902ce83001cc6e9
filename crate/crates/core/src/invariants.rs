//! Conserved and nearly conserved quantities along a trajectory.

use nalgebra::DMatrix;

use crate::averaging::{avg_bundle, hamiltonian, QuadratureRule};
use crate::error::{Error, Result};
use crate::fields::Field;
use crate::packet::{block2, width_block, CanonicalState};

/// Values of all monitored quantities at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub t: f64,
    pub sympl_residual: f64,
    /// Deviation of `Y^T Omega_B(tau) Y` from its initial value, with `Y`
    /// built from the kinetic width momenta.
    pub modified_boris_residual: f64,
    pub linear_momentum: f64,
    pub angular_momentum: DMatrix<f64>,
    pub energy: f64,
    pub phase: f64,
}

/// `sum_j p_j`
pub fn linear_momentum(state: &CanonicalState) -> f64 {
    state.pb.rows(0, state.d).sum()
}

/// `L = p q^T - q p^T + (eps/2) Re(P Q^* - Q P^*)`
pub fn angular_momentum(state: &CanonicalState) -> DMatrix<f64> {
    let q = state.q();
    let p = state.p();
    let s21 = state.sigma21();
    &p * q.transpose() - &q * p.transpose() + &s21 - s21.transpose()
}

/// `p^T K q + tr(Pr^T K Xr) + tr(Pi^T K Xi)` for skew `K`, equal to
/// `tr(L^T K) / 2`.
pub fn angular_momentum_form(state: &CanonicalState, k: &DMatrix<f64>) -> Result<f64> {
    let d = state.d;
    if k.nrows() != d || k.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: k.nrows(),
        });
    }
    if (k + k.transpose()).amax() != 0.0 {
        return Err(Error::NotSkew);
    }
    let mut total = state.p().dot(&(k * state.q()));
    for idx in 1..=2 {
        let x = width_block(&state.qb, d, idx);
        let p = width_block(&state.pb, d, idx);
        total += p.dot(&(k * x));
    }
    Ok(total)
}

/// `Omega_B(tau) = [[B, I], [-I, -tau^2/4 B]]`
pub fn modified_structure(b: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let d = b.nrows();
    let mut om = DMatrix::zeros(2 * d, 2 * d);
    om.view_mut((0, 0), (d, d)).copy_from(b);
    om.view_mut((d, d), (d, d)).copy_from(&(-0.25 * tau * tau * b));
    for i in 0..d {
        om[(i, d + i)] = 1.0;
        om[(d + i, i)] = -1.0;
    }
    om
}

/// `Y^T Omega_B(tau) Y` with `Y` from the position widths and the kinetic
/// width momenta `Pi - G1 X`, where `G1` is the averaged Jacobian of `A`.
pub fn modified_form(state: &CanonicalState, g1: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let xr = state.x_re();
    let xi = state.x_im();
    let vr = state.p_re() - g1 * &xr;
    let vi = state.p_im() - g1 * &xi;
    let y = block2(&xr, &xi, &vr, &vi) / state.scale();
    let b = g1 - g1.transpose();
    y.transpose() * modified_structure(&b, tau) * y
}

/// Evaluates [`InvariantReport`]s relative to an initial state.
#[derive(Debug)]
pub struct Monitor<'a> {
    field: &'a dyn Field,
    rule: QuadratureRule,
    tau: f64,
    modified_reference: DMatrix<f64>,
}

impl<'a> Monitor<'a> {
    pub fn new(field: &'a dyn Field, rule: QuadratureRule, tau: f64, initial: &CanonicalState) -> Result<Self> {
        let bundle = avg_bundle(field, initial.t, initial, &rule)?;
        let modified_reference = modified_form(initial, &bundle.g1, tau);
        Ok(Monitor {
            field,
            rule,
            tau,
            modified_reference,
        })
    }

    /// `Y_0^T Omega_B(tau) Y_0`
    pub fn modified_reference(&self) -> &DMatrix<f64> {
        &self.modified_reference
    }

    pub fn report(&self, state: &CanonicalState) -> Result<InvariantReport> {
        let bundle = avg_bundle(self.field, state.t, state, &self.rule)?;
        let modified = modified_form(state, &bundle.g1, self.tau);
        Ok(InvariantReport {
            t: state.t,
            sympl_residual: state.symplecticity_residual(),
            modified_boris_residual: (modified - &self.modified_reference).norm(),
            linear_momentum: linear_momentum(state),
            angular_momentum: angular_momentum(state),
            energy: hamiltonian(&state.qb, &state.pb, &bundle),
            phase: state.phase,
        })
    }
}

/// The planar rotation generator `[[0, -1], [1, 0]]` embedded in the first
/// two coordinates.
pub fn rotation_generator(d: usize) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(d, d);
    if d >= 2 {
        k[(0, 1)] = -1.0;
        k[(1, 0)] = 1.0;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::hermite_rule;
    use crate::fields::{make_builtin, Params};
    use crate::packet::{GaussianPacket, C64};
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};

    fn packet(q: &[f64], p: &[f64], qm: DMatrix<C64>, pm: DMatrix<C64>, eps: f64) -> CanonicalState {
        GaussianPacket::new(
            eps,
            DVector::from_column_slice(q),
            DVector::from_column_slice(p),
            qm,
            pm,
            0.0,
        )
        .unwrap()
        .vectorize(0.0)
    }

    fn random_symplectic(rng: &mut impl Rng, d: usize) -> (DMatrix<C64>, DMatrix<C64>) {
        // Q = L U, P = (K L + i L^{-T}) U with K symmetric, U a complex phase
        let l = DMatrix::from_fn(d, d, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Equal => rng.random_range(0.5..1.5),
            std::cmp::Ordering::Greater => rng.random_range(-0.5..0.5),
            std::cmp::Ordering::Less => 0.0,
        });
        let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.5..0.5));
        let k = &a + a.transpose();
        let theta = rng.random_range(0.0..6.0);
        let u = C64::from_polar(1.0, theta);
        let cplx = |m: &DMatrix<f64>| m.map(|v| C64::new(v, 0.0));
        let lit = l.clone().try_inverse().unwrap().transpose();
        let q = cplx(&l) * u;
        let p = (cplx(&(&k * &l)) + lit.map(|v| C64::new(0.0, v))) * u;
        (q, p)
    }

    #[test]
    fn identity_widths() {
        let d = 2;
        let id = DMatrix::<C64>::identity(d, d);
        let st = packet(&[0.4, -0.1], &[0.2, 0.9], id.clone(), id * C64::new(0.0, 1.0), 0.1);
        assert!(st.symplecticity_residual() < 1e-15);
        let l = angular_momentum(&st);
        let q = st.q();
        let p = st.p();
        let classical = &p * q.transpose() - &q * p.transpose();
        assert!((l - classical).amax() < 1e-16);
        assert_eq!(angular_momentum_form(&st, &DMatrix::zeros(2, 2)).unwrap(), 0.0);
    }

    #[test]
    fn equal_centres_have_no_classical_part() {
        let id = DMatrix::<C64>::identity(2, 2);
        let st = packet(&[0.3, 0.7], &[0.3, 0.7], id.clone(), id * C64::new(0.0, 1.0), 0.1);
        let k = rotation_generator(2);
        assert!(angular_momentum_form(&st, &k).unwrap().abs() < 1e-16);
    }

    #[test]
    fn form_matches_half_trace() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for d in 1..=3 {
            for _ in 0..20 {
                let (qm, pm) = random_symplectic(&mut rng, d);
                let q: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let p: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let st = packet(&q, &p, qm, pm, 0.3);
                let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
                let k = &a - a.transpose();
                let l = angular_momentum(&st);
                assert!((&l + l.transpose()).amax() < 1e-14);
                let lhs = angular_momentum_form(&st, &k).unwrap();
                let rhs = 0.5 * (l.transpose() * &k).trace();
                assert!((lhs - rhs).abs() < 1e-13);
            }
        }
        let id = DMatrix::<C64>::identity(2, 2);
        let st = packet(&[0.0, 0.0], &[0.0, 0.0], id.clone(), id * C64::new(0.0, 1.0), 0.1);
        assert!(matches!(
            angular_momentum_form(&st, &DMatrix::identity(2, 2)),
            Err(Error::NotSkew)
        ));
    }

    #[test]
    fn monitor_starts_at_zero_residual() {
        let f = make_builtin("penning", &Params::new()).unwrap();
        let q0 = [0.133, 0.133, 0.258];
        let qm = DMatrix::from_diagonal(&DVector::from_column_slice(&q0));
        let pm = qm.clone().try_inverse().unwrap();
        let st = packet(
            &q0,
            &[0.133, 7.492, 3.879],
            qm.map(|v| C64::new(v, 0.0)),
            pm.map(|v| C64::new(0.0, v)),
            1.19e-8,
        );
        let m = Monitor::new(&f, hermite_rule(5), 1e-3, &st).unwrap();
        let r = m.report(&st).unwrap();
        assert_eq!(r.modified_boris_residual, 0.0);
        assert!(r.sympl_residual < 1e-12);
        assert!((r.linear_momentum - (0.133 + 7.492 + 3.879)).abs() < 1e-14);
        // With tau = 0 the modified structure is Omega of the kinetic lemma,
        // and symplectic data satisfy Y^T Omega_B(0) Y = Omega.
        let bundle = avg_bundle(&f, 0.0, &st, &hermite_rule(5)).unwrap();
        let form = modified_form(&st, &bundle.g1, 0.0);
        assert!((form - crate::packet::omega(3)).norm() < 1e-9);
    }
}
