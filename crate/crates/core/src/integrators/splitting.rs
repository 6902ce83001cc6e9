//! Symplectic splitting: exact kinetic and potential flows, a partitioned
//! Runge–Kutta magnetic substep, and their symmetric compositions.

use nalgebra::{DMatrix, DVector};

use crate::averaging::{
    assemble_ab, assemble_jabt, avg_bundle_qb, grad_vb, AveragedBundle, QuadratureRule,
};
use crate::error::{Error, Result};
use crate::fields::Field;
use crate::packet::CanonicalState;

use super::tableau::{check_step, momentum_map, ButcherPair};

/// Triple-jump weights `(g, 1 - 2 g, g)` with `g = 1 / (2 - 2^(1/3))`.
pub fn triple_jump() -> [f64; 3] {
    let g = 1.0 / (2.0 - 2f64.cbrt());
    [g, 1.0 - 2.0 * g, g]
}

/// `qB <- qB + tau pB`
pub fn kinetic_substep(state: &CanonicalState, tau: f64) -> CanonicalState {
    let mut out = state.clone();
    out.qb.axpy(tau, &state.pb, 1.0);
    out
}

/// `pB <- pB - tau grad VB(qB)` with the fields at `t_eval`.
pub fn potential_substep(
    state: &CanonicalState,
    tau: f64,
    t_eval: f64,
    field: &dyn Field,
    rule: &QuadratureRule,
) -> Result<CanonicalState> {
    let bundle = avg_bundle_qb(field, t_eval, &state.qb, rule)?;
    Ok(potential_with(state, tau, &bundle))
}

fn potential_with(state: &CanonicalState, tau: f64, bundle: &AveragedBundle) -> CanonicalState {
    let mut out = state.clone();
    out.pb.axpy(-tau, &grad_vb(&state.qb, bundle), 1.0);
    out
}

/// Explicit stages of the magnetic flow `qB' = -AB(qB)`,
/// `pB' = J_AB(qB)^T pB`; positions by `(L, b)`, momenta by the partner
/// tableau, solved in closed form through the momentum map.
pub fn magnetic_substep_prk(
    state: &CanonicalState,
    tau: f64,
    t_eval: f64,
    field: &dyn Field,
    rule: &QuadratureRule,
    tableau: &ButcherPair,
    guard: f64,
) -> Result<CanonicalState> {
    magnetic_inner(state, tau, t_eval, field, rule, tableau, guard, None)
}

/// `first`, when given, holds the averages at `state.qb`, which is always the
/// first stage.
#[allow(clippy::too_many_arguments)]
fn magnetic_inner(
    state: &CanonicalState,
    tau: f64,
    t_eval: f64,
    field: &dyn Field,
    rule: &QuadratureRule,
    tableau: &ButcherPair,
    guard: f64,
    mut first: Option<AveragedBundle>,
) -> Result<CanonicalState> {
    let s = tableau.s;
    let mut ks: Vec<DVector<f64>> = Vec::with_capacity(s);
    let mut ms: Vec<DMatrix<f64>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut stage = state.qb.clone();
        for (j, kj) in ks.iter().enumerate() {
            let c = tableau.l[(i, j)];
            if c != 0.0 {
                stage.axpy(tau * c, kj, 1.0);
            }
        }
        let bundle = match first.take() {
            Some(b) => b,
            None => avg_bundle_qb(field, t_eval, &stage, rule)?,
        };
        ks.push(-assemble_ab(&stage, &bundle));
        ms.push(assemble_jabt(&stage, &bundle));
    }
    check_step(&ms, tau, tableau, guard)?;
    let mut out = state.clone();
    for (i, k) in ks.iter().enumerate() {
        out.qb.axpy(tau * tableau.b[i], k, 1.0);
    }
    out.pb = momentum_map(&ms, tau, tableau, &state.pb)?;
    Ok(out)
}

/// `1/2 pB^T pB - VB`, the rate of change of `S + (eps/4) Re tr(P Q^*)`.
pub fn phase_integrand(state: &CanonicalState, bundle: &AveragedBundle) -> f64 {
    0.5 * state.pb.norm_squared() - bundle.vb()
}

fn integrand_at(state: &CanonicalState, field: &dyn Field, rule: &QuadratureRule) -> Result<f64> {
    let bundle = avg_bundle_qb(field, state.t, &state.qb, rule)?;
    Ok(phase_integrand(state, &bundle))
}

/// Trapezoidal update of the phase across one step from precomputed
/// integrand values at the endpoints.
pub fn phase_update(phase: f64, before: &CanonicalState, after: &CanonicalState, tau: f64, f_before: f64, f_after: f64) -> f64 {
    phase + 0.5 * tau * (f_before + f_after) - (after.phase_shift() - before.phase_shift())
}

/// Phase at the end of the step `before -> after`, starting from `phase`.
pub fn phase_step(
    phase: f64,
    before: &CanonicalState,
    after: &CanonicalState,
    tau: f64,
    field: &dyn Field,
    rule: &QuadratureRule,
) -> Result<f64> {
    let f0 = integrand_at(before, field, rule)?;
    let f1 = integrand_at(after, field, rule)?;
    Ok(phase_update(phase, before, after, tau, f0, f1))
}

/// Strang step without the phase; fields frozen at `t_eval`.
fn strang_flow(
    state: &CanonicalState,
    tau: f64,
    t_eval: f64,
    field: &dyn Field,
    rule: &QuadratureRule,
    tableau: &ButcherPair,
    guard: f64,
) -> Result<CanonicalState> {
    let half = 0.5 * tau;
    let mut z = kinetic_substep(state, half);
    let bundle = avg_bundle_qb(field, t_eval, &z.qb, rule)?;
    z = potential_with(&z, half, &bundle);
    z = magnetic_inner(&z, tau, t_eval, field, rule, tableau, guard, Some(bundle))?;
    z = potential_substep(&z, half, t_eval, field, rule)?;
    z = kinetic_substep(&z, half);
    z.t = state.t + tau;
    Ok(z)
}

/// Strang step that reuses the phase integrand at the start and returns the
/// one at the end.
pub(crate) fn strang_step_cached(
    state: &CanonicalState,
    tau: f64,
    field: &dyn Field,
    rule: &QuadratureRule,
    tableau: &ButcherPair,
    guard: f64,
    f_start: f64,
) -> Result<(CanonicalState, f64)> {
    let t_eval = if field.is_time_dependent() {
        state.t + 0.5 * tau
    } else {
        state.t
    };
    let mut z = strang_flow(state, tau, t_eval, field, rule, tableau, guard)?;
    let f_end = integrand_at(&z, field, rule)?;
    z.phase = phase_update(state.phase, state, &z, tau, f_start, f_end);
    Ok((z, f_end))
}

/// `kin(tau/2) pot(tau/2) mag(tau) pot(tau/2) kin(tau/2)`, fields evaluated
/// at `t + tau/2` for time-dependent potentials.
pub fn strang_step(
    state: &CanonicalState,
    tau: f64,
    field: &dyn Field,
    rule: &QuadratureRule,
    tableau: &ButcherPair,
    guard: f64,
) -> Result<CanonicalState> {
    let f0 = integrand_at(state, field, rule)?;
    Ok(strang_step_cached(state, tau, field, rule, tableau, guard, f0)?.0)
}

pub(crate) fn order4_step_cached(
    state: &CanonicalState,
    tau: f64,
    field: &dyn Field,
    rule: &QuadratureRule,
    tableau: &ButcherPair,
    guard: f64,
    f_start: f64,
) -> Result<(CanonicalState, f64)> {
    if field.is_time_dependent() {
        return Err(Error::TimeDependentUnsupported);
    }
    let mut z = state.clone();
    let mut f = f_start;
    for g in triple_jump() {
        (z, f) = strang_step_cached(&z, g * tau, field, rule, tableau, guard, f)?;
    }
    z.t = state.t + tau;
    Ok((z, f))
}

/// Triple-jump composition of Strang steps around the fourth-order magnetic
/// substep given by `tableau`.
pub fn order4_step(
    state: &CanonicalState,
    tau: f64,
    field: &dyn Field,
    rule: &QuadratureRule,
    tableau: &ButcherPair,
    guard: f64,
) -> Result<CanonicalState> {
    if field.is_time_dependent() {
        return Err(Error::TimeDependentUnsupported);
    }
    let f0 = integrand_at(state, field, rule)?;
    Ok(order4_step_cached(state, tau, field, rule, tableau, guard, f0)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_builtin, Builtin, ParamValue, Params};
    use crate::packet::{GaussianPacket, C64};

    fn harmonic(omega: f64, d: usize) -> Builtin {
        let mut p = Params::new();
        p.insert("omega".into(), ParamValue::Scalar(omega));
        p.insert("d".into(), ParamValue::Scalar(d as f64));
        make_builtin("harmonic", &p).unwrap()
    }

    fn unit_state(eps: f64, q: &[f64], p: &[f64]) -> CanonicalState {
        let d = q.len();
        let id = DMatrix::<C64>::identity(d, d);
        GaussianPacket::new(
            eps,
            DVector::from_column_slice(q),
            DVector::from_column_slice(p),
            id.clone(),
            id * C64::new(0.0, 1.0),
            0.3,
        )
        .unwrap()
        .vectorize(0.0)
    }

    #[test]
    fn kinetic_examples() {
        let st = unit_state(2.0, &[0.0], &[1.0]);
        assert_eq!(kinetic_substep(&st, 0.0), st);
        let z = kinetic_substep(&st, 0.5);
        assert_eq!(z.qb.as_slice(), &[0.5, 1.0, 0.5]);
        assert_eq!(z.pb, st.pb);
        assert_eq!(kinetic_substep(&kinetic_substep(&st, 0.25), 0.25), z);
    }

    #[test]
    fn potential_examples() {
        let rule = crate::averaging::hermite_rule(3);
        let st = unit_state(0.4, &[0.7, -0.2], &[0.1, 0.3]);
        let free = harmonic(0.0, 2);
        assert_eq!(potential_substep(&st, 0.3, 0.0, &free, &rule).unwrap(), st);
        // V = x^2 in one dimension
        let mut p = Params::new();
        p.insert("m_a".into(), ParamValue::Matrix(vec![vec![0.0]]));
        p.insert("v_hess".into(), ParamValue::Matrix(vec![vec![2.0]]));
        let quad = make_builtin("linear_a", &p).unwrap();
        let st = unit_state(0.4, &[0.7], &[0.1]);
        let z = potential_substep(&st, 0.3, 0.0, &quad, &rule).unwrap();
        assert_eq!(z.qb, st.qb);
        assert!((&z.pb - (&st.pb - 0.6 * &st.qb)).amax() < 1e-15);
    }

    #[test]
    fn magnetic_substep_without_vector_potential_is_identity() {
        let rule = crate::averaging::hermite_rule(3);
        let st = unit_state(0.4, &[0.7, -0.2], &[0.1, 0.3]);
        for tab in [ButcherPair::heun(), ButcherPair::rk4()] {
            let z = magnetic_substep_prk(&st, 0.1, 0.0, &harmonic(1.0, 2), &rule, &tab, 1.0).unwrap();
            assert_eq!(z, st);
        }
    }

    #[test]
    fn free_drift_and_phase() {
        let rule = crate::averaging::hermite_rule(2);
        let st = unit_state(0.4, &[0.7, -0.2], &[0.1, 0.3]);
        let free = harmonic(0.0, 2);
        let tau = 0.25;
        let z = strang_step(&st, tau, &free, &rule, &ButcherPair::heun(), 1.0).unwrap();
        assert!((&z.qb - (&st.qb + tau * &st.pb)).amax() < 1e-15);
        assert_eq!(z.pb, st.pb);
        assert!((z.t - 0.25).abs() == 0.0);
        // S gains tau |p|^2 / 2
        assert!((z.phase - (0.3 + tau * 0.5 * (0.01 + 0.09))).abs() < 1e-15);
        let same = phase_step(st.phase, &st, &st, 0.0, &free, &rule).unwrap();
        assert_eq!(same, st.phase);
    }

    #[test]
    fn triple_jump_weights() {
        let g = triple_jump();
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(g[0], g[2]);
        assert!((2.0 * g[0].powi(3) + g[1].powi(3)).abs() < 1e-14);
    }

    #[test]
    fn order4_rejects_time_dependence() {
        let mut p = Params::new();
        p.insert("alpha".into(), ParamValue::Scalar(0.5));
        let f = make_builtin("trig2d", &p).unwrap();
        let st = unit_state(1e-3, &[1.0, 1.0], &[1.0, 0.0]);
        assert!(matches!(
            order4_step(&st, 0.01, &f, &crate::averaging::hermite_rule(3), &ButcherPair::rk4(), 1.0),
            Err(Error::TimeDependentUnsupported)
        ));
    }
}
