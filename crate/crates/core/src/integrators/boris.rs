//! Boris-type schemes on positions and kinetic momenta `(qB, vB)`.

use nalgebra::{DMatrix, DVector};

use crate::averaging::{assemble_ab, avg_bundle_qb, boris_fields, QuadratureRule};
use crate::error::{Error, Result};
use crate::fields::Field;
use crate::packet::{CanonicalState, KineticState};

/// `(I + X)^-1 (I - X)`
pub fn cayley(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    (&id + x)
        .lu()
        .solve(&(&id - x))
        .ok_or(Error::NotInvertible("I + X"))
}

/// `(I + X)^-1 rhs`
fn solve_shifted(x: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let n = x.nrows();
    (DMatrix::<f64>::identity(n, n) + x)
        .lu()
        .solve(rhs)
        .ok_or(Error::NotInvertible("I + X"))
}

/// `vB = pB - AB(t, qB)`
pub fn to_kinetic(state: &CanonicalState, field: &dyn Field, rule: &QuadratureRule) -> Result<KineticState> {
    let bundle = avg_bundle_qb(field, state.t, &state.qb, rule)?;
    Ok(KineticState {
        d: state.d,
        eps: state.eps,
        qb: state.qb.clone(),
        vb: &state.pb - assemble_ab(&state.qb, &bundle),
        t: state.t,
        phase: state.phase,
    })
}

/// `pB = vB + AB(t, qB)`
pub fn to_canonical(state: &KineticState, field: &dyn Field, rule: &QuadratureRule) -> Result<CanonicalState> {
    let bundle = avg_bundle_qb(field, state.t, &state.qb, rule)?;
    Ok(CanonicalState {
        d: state.d,
        eps: state.eps,
        qb: state.qb.clone(),
        pb: &state.vb + assemble_ab(&state.qb, &bundle),
        t: state.t,
        phase: state.phase,
    })
}

/// Explicit half step `v_1/2 = v_0 - tau/2 BB v_0 + tau/2 EB` at the initial
/// data. Returns the staggered pair `(q_1, v_1/2)` with `q_1 = q_0 + tau v_1/2`
/// at time `t_0 + tau`.
pub fn boris_init(z0: &CanonicalState, tau: f64, field: &dyn Field, rule: &QuadratureRule) -> Result<KineticState> {
    let bundle = avg_bundle_qb(field, z0.t, &z0.qb, rule)?;
    let v0 = &z0.pb - assemble_ab(&z0.qb, &bundle);
    let (bb, eb) = boris_fields(&z0.qb, &bundle);
    let v_half = &v0 - 0.5 * tau * (&bb * &v0) + 0.5 * tau * eb;
    Ok(KineticState {
        d: z0.d,
        eps: z0.eps,
        qb: &z0.qb + tau * &v_half,
        vb: v_half,
        t: z0.t + tau,
        phase: z0.phase,
    })
}

/// One staggered step `w = R(tau/2 BB) v + tau (I + tau/2 BB)^-1 EB`,
/// `q <- q + tau w`, fields at `t_eval`.
pub fn boris_step(state: &KineticState, tau: f64, t_eval: f64, field: &dyn Field, rule: &QuadratureRule) -> Result<KineticState> {
    let bundle = avg_bundle_qb(field, t_eval, &state.qb, rule)?;
    let (bb, eb) = boris_fields(&state.qb, &bundle);
    let x = 0.5 * tau * bb;
    let rhs = &state.vb - &x * &state.vb + tau * eb;
    let w = solve_shifted(&x, &rhs)?;
    Ok(KineticState {
        qb: &state.qb + tau * &w,
        vb: w,
        t: state.t + tau,
        ..state.clone()
    })
}

/// `kin(tau/2) pot(tau/2) mag(tau) pot(tau/2) kin(tau/2)` on `(qB, vB)`, with
/// one field evaluation at the midpoint position, at time `t + tau/2` for
/// time-dependent potentials.
pub fn boris_splitting_step(state: &KineticState, tau: f64, field: &dyn Field, rule: &QuadratureRule) -> Result<KineticState> {
    let half = 0.5 * tau;
    let t_eval = if field.is_time_dependent() {
        state.t + half
    } else {
        state.t
    };
    let q_mid = &state.qb + half * &state.vb;
    let bundle = avg_bundle_qb(field, t_eval, &q_mid, rule)?;
    let (bb, eb) = boris_fields(&q_mid, &bundle);
    let x = half * bb;
    let v1 = &state.vb + half * &eb;
    let v2 = solve_shifted(&x, &(&v1 - &x * &v1))?;
    let v3 = v2 + half * eb;
    Ok(KineticState {
        qb: q_mid + half * &v3,
        vb: v3,
        t: state.t + tau,
        ..state.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::hermite_rule;
    use crate::fields::{make_builtin, ParamValue, Params};
    use crate::packet::{GaussianPacket, C64};

    fn state(field_d: usize, eps: f64) -> CanonicalState {
        let id = DMatrix::<C64>::identity(field_d, field_d);
        GaussianPacket::new(
            eps,
            DVector::from_fn(field_d, |i, _| 0.2 + 0.1 * i as f64),
            DVector::from_fn(field_d, |i, _| 1.0 - 0.3 * i as f64),
            id.clone(),
            id * C64::new(0.0, 1.0),
            0.0,
        )
        .unwrap()
        .vectorize(0.0)
    }

    #[test]
    fn cayley_examples() {
        let zero = DMatrix::zeros(3, 3);
        assert_eq!(cayley(&zero).unwrap(), DMatrix::identity(3, 3));
        let s = 0.7;
        let r = cayley(&DMatrix::from_row_slice(2, 2, &[0.0, -s, s, 0.0])).unwrap();
        let c = 1.0 / (1.0 + s * s);
        let expected = DMatrix::from_row_slice(2, 2, &[1.0 - s * s, 2.0 * s, -2.0 * s, 1.0 - s * s]) * c;
        assert!((&r - expected).amax() < 1e-15);
        assert!((r.transpose() * &r - DMatrix::identity(2, 2)).amax() < 1e-15);
    }

    #[test]
    fn free_drift() {
        let mut p = Params::new();
        p.insert("omega".into(), ParamValue::Scalar(0.0));
        p.insert("d".into(), ParamValue::Scalar(2.0));
        let free = make_builtin("harmonic", &p).unwrap();
        let rule = hermite_rule(3);
        let z0 = state(2, 0.1);
        let k0 = to_kinetic(&z0, &free, &rule).unwrap();
        assert_eq!(k0.vb, z0.pb);
        let k1 = boris_step(&k0, 0.2, 0.0, &free, &rule).unwrap();
        assert!((&k1.qb - (&z0.qb + 0.2 * &z0.pb)).amax() < 1e-15);
        assert_eq!(k1.vb, z0.pb);
        let s1 = boris_splitting_step(&k0, 0.2, &free, &rule).unwrap();
        assert!((&s1.qb - &k1.qb).amax() < 1e-15);
        let init = boris_init(&z0, 0.0, &free, &rule).unwrap();
        assert_eq!(init.vb, z0.pb);
        assert_eq!(init.qb, z0.qb);
    }

    #[test]
    fn init_without_vector_potential() {
        let mut p = Params::new();
        p.insert("omega".into(), ParamValue::Scalar(1.5));
        p.insert("d".into(), ParamValue::Scalar(2.0));
        let f = make_builtin("harmonic", &p).unwrap();
        let rule = hermite_rule(3);
        let z0 = state(2, 0.1);
        let tau = 0.1;
        let init = boris_init(&z0, tau, &f, &rule).unwrap();
        let b = avg_bundle_qb(&f, 0.0, &z0.qb, &rule).unwrap();
        let (_, eb) = boris_fields(&z0.qb, &b);
        assert!((&init.vb - (&z0.pb + 0.5 * tau * eb)).amax() < 1e-15);
        assert!((init.t - tau).abs() < 1e-16);
    }

    #[test]
    fn penning_init_uses_block_rotation() {
        let f = make_builtin("penning", &Params::new()).unwrap();
        let rule = hermite_rule(5);
        let z0 = state(3, 1e-2);
        let tau = 1e-3;
        let init = boris_init(&z0, tau, &f, &rule).unwrap();
        let m_a = f.linear_a_matrix().unwrap();
        let b = &m_a - m_a.transpose();
        let k0 = to_kinetic(&z0, &f, &rule).unwrap();
        let bundle = avg_bundle_qb(&f, 0.0, &z0.qb, &rule).unwrap();
        let (_, eb) = boris_fields(&z0.qb, &bundle);
        let mut expected = DVector::zeros(21);
        for blk in 0..7 {
            let v = k0.vb.rows(3 * blk, 3).into_owned();
            let e = eb.rows(3 * blk, 3).into_owned();
            expected.rows_mut(3 * blk, 3).copy_from(&(&v - 0.5 * tau * (&b * &v) + 0.5 * tau * e));
        }
        assert!((&init.vb - expected).amax() < 1e-12);
    }

    #[test]
    fn round_trip_through_kinetic_momenta() {
        let f = make_builtin("sym_rotation", &Params::new()).unwrap();
        let rule = hermite_rule(5);
        let z0 = state(2, 0.05);
        let back = to_canonical(&to_kinetic(&z0, &f, &rule).unwrap(), &f, &rule).unwrap();
        assert!((&back.pb - &z0.pb).amax() < 1e-15);
    }
}
