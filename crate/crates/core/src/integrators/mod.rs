//! One-step maps and the trajectory driver.
//!
//! Four schemes are available: the staggered Boris scheme, its symmetric
//! splitting form, and symplectic splittings of order two and four whose
//! magnetic part is a partitioned Runge–Kutta step.

pub mod boris;
pub mod splitting;
pub mod tableau;

use std::fmt;
use std::str::FromStr;

use crate::averaging::{assemble_ab, avg_bundle_qb, AveragedBundle, QuadratureRule};
use crate::error::{Error, Result};
use crate::fields::Field;
use crate::packet::{CanonicalState, KineticState};

pub use boris::{boris_init, boris_splitting_step, boris_step, cayley, to_canonical, to_kinetic};
pub use splitting::{
    kinetic_substep, magnetic_substep_prk, order4_step, phase_integrand, phase_step, phase_update,
    potential_substep, strang_step, triple_jump,
};
pub use tableau::{check_step, make_partner_tableau, momentum_map, rho_matrix, ButcherPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Boris,
    BorisSplitting,
    Symplectic2,
    Symplectic4,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Boris,
        Scheme::BorisSplitting,
        Scheme::Symplectic2,
        Scheme::Symplectic4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Boris => "boris",
            Scheme::BorisSplitting => "boris_splitting",
            Scheme::Symplectic2 => "symplectic2",
            Scheme::Symplectic4 => "symplectic4",
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Scheme::Symplectic4 => 4,
            _ => 2,
        }
    }

    pub fn is_boris(self) -> bool {
        matches!(self, Scheme::Boris | Scheme::BorisSplitting)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub tau: f64,
    /// Multiplies the admissible bound on `tau |M|` of the magnetic substep.
    pub guard: f64,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, tau: f64) -> Self {
        SchemeConfig {
            scheme,
            tau,
            guard: 1.0,
        }
    }
}

/// Advances canonical states with a fixed scheme and step size.
#[derive(Debug)]
pub struct Stepper<'a> {
    field: &'a dyn Field,
    rule: QuadratureRule,
    config: SchemeConfig,
    tableau: ButcherPair,
}

impl<'a> Stepper<'a> {
    pub fn new(field: &'a dyn Field, rule: QuadratureRule, config: SchemeConfig) -> Result<Self> {
        if !(config.tau > 0.0 && config.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", config.tau)));
        }
        if !(config.guard > 0.0) {
            return Err(Error::Config(format!("guard must be positive, got {}", config.guard)));
        }
        if config.scheme == Scheme::Symplectic4 && field.is_time_dependent() {
            return Err(Error::TimeDependentUnsupported);
        }
        let tableau = match config.scheme {
            Scheme::Symplectic4 => ButcherPair::rk4(),
            _ => ButcherPair::heun(),
        };
        Ok(Stepper {
            field,
            rule,
            config,
            tableau,
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn field(&self) -> &dyn Field {
        self.field
    }

    fn bundle(&self, t: f64, qb: &nalgebra::DVector<f64>) -> Result<AveragedBundle> {
        avg_bundle_qb(self.field, t, qb, &self.rule)
    }

    /// Canonical state for `(qB, vB)` and the phase integrand there.
    fn canonical(&self, k: &KineticState) -> Result<(CanonicalState, f64)> {
        let b = self.bundle(k.t, &k.qb)?;
        let z = CanonicalState {
            d: k.d,
            eps: k.eps,
            qb: k.qb.clone(),
            pb: &k.vb + assemble_ab(&k.qb, &b),
            t: k.t,
            phase: k.phase,
        };
        let f = phase_integrand(&z, &b);
        Ok((z, f))
    }

    fn integrand(&self, z: &CanonicalState) -> Result<f64> {
        Ok(phase_integrand(z, &self.bundle(z.t, &z.qb)?))
    }

    /// Takes `steps` steps from `init`, calling `observe(n, z_n)` for
    /// `n = 0..=steps` with canonical states on the integer time grid.
    /// Boris trajectories report the averaged staggered kinetic momenta.
    pub fn run(
        &self,
        init: &CanonicalState,
        steps: usize,
        mut observe: impl FnMut(usize, &CanonicalState) -> Result<()>,
    ) -> Result<CanonicalState> {
        let tau = self.config.tau;
        let at = |step: usize| move |e: Error| Error::AtStep { step, source: Box::new(e) };
        observe(0, init)?;
        let mut z = init.clone();
        let mut f = self.integrand(&z).map_err(at(0))?;
        match self.config.scheme {
            Scheme::Symplectic2 | Scheme::Symplectic4 => {
                for n in 0..steps {
                    let (guard, field, rule, tab) = (self.config.guard, self.field, &self.rule, &self.tableau);
                    (z, f) = if self.config.scheme == Scheme::Symplectic2 {
                        splitting::strang_step_cached(&z, tau, field, rule, tab, guard, f)
                    } else {
                        splitting::order4_step_cached(&z, tau, field, rule, tab, guard, f)
                    }
                    .map_err(at(n))?;
                    z.t = init.t + (n + 1) as f64 * tau;
                    observe(n + 1, &z)?;
                }
            }
            Scheme::BorisSplitting => {
                let mut k = to_kinetic(init, self.field, &self.rule).map_err(at(0))?;
                for n in 0..steps {
                    k = boris_splitting_step(&k, tau, self.field, &self.rule).map_err(at(n))?;
                    k.t = init.t + (n + 1) as f64 * tau;
                    let (mut next, f_next) = self.canonical(&k).map_err(at(n))?;
                    next.phase = phase_update(z.phase, &z, &next, tau, f, f_next);
                    k.phase = next.phase;
                    (z, f) = (next, f_next);
                    observe(n + 1, &z)?;
                }
            }
            Scheme::Boris => {
                if steps == 0 {
                    return Ok(z);
                }
                // cur = (q_n, v_{n-1/2}) for n >= 1
                let mut cur = boris_init(init, tau, self.field, &self.rule).map_err(at(0))?;
                for n in 1..=steps {
                    let next = boris_step(&cur, tau, cur.t, self.field, &self.rule).map_err(at(n))?;
                    let mut k = cur.clone();
                    k.vb = 0.5 * (&cur.vb + &next.vb);
                    k.t = init.t + n as f64 * tau;
                    let (mut row, f_row) = self.canonical(&k).map_err(at(n))?;
                    row.phase = phase_update(z.phase, &z, &row, tau, f, f_row);
                    (z, f) = (row, f_row);
                    observe(n, &z)?;
                    cur = next;
                }
            }
        }
        Ok(z)
    }

    /// State after `steps` steps.
    pub fn propagate(&self, init: &CanonicalState, steps: usize) -> Result<CanonicalState> {
        self.run(init, steps, |_, _| Ok(()))
    }
}
