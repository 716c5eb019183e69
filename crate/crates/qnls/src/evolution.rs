//! Time integration by symmetrized split-step Fourier (Strang) with
//! conservation monitoring and blowup detection.

use num_complex::Complex64;

use crate::diagnostics::{energy, mass};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::ground_state;
use crate::spectral::{dealias_multiplier, derivative, l2_norm};

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Upper bound on the step size (and the fixed step when `adaptive` is
    /// off).
    pub dt_init: f64,
    /// Step controller constant: dt = dt_safety / (1 + ||u||_inf^4).
    pub dt_safety: f64,
    /// 2/3-rule smooth spectral mask on the linear half-steps.
    pub dealias: bool,
    pub max_steps: usize,
    /// Halt when ||u_x||_{L^2} exceeds this.
    pub blowup_grad_threshold: f64,
    /// Halt when the fitted scale proxy ||Q_x|| / ||u_x|| drops below this.
    pub blowup_lambda_floor: f64,
    /// Relative mass drift beyond which a warning is attached.
    pub conservation_tol: f64,
    /// Record every k-th accepted step (the final state is always recorded).
    pub output_every: usize,
    pub adaptive: bool,
    /// Plumbing switch for scheme verification against the free propagator.
    pub nonlinear: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-3,
            dt_safety: 5e-4,
            dealias: true,
            max_steps: 2_000_000,
            blowup_grad_threshold: 1e3,
            blowup_lambda_floor: 1e-2,
            conservation_tol: 1e-8,
            output_every: 8,
            adaptive: true,
            nonlinear: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.dt_init > 0.0, "dt_init must be positive"),
            (self.dt_safety > 0.0, "dt_safety must be positive"),
            (
                self.blowup_grad_threshold > 0.0,
                "blowup_grad_threshold must be positive",
            ),
            (
                self.blowup_lambda_floor > 0.0,
                "blowup_lambda_floor must be positive",
            ),
            (self.conservation_tol > 0.0, "conservation_tol must be positive"),
            (self.max_steps > 0, "max_steps must be positive"),
            (self.output_every > 0, "output_every must be positive"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidArgument(msg.into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltReason {
    GradThreshold,
    LambdaFloor,
    MaxSteps,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub t: f64,
    pub field: Field,
    /// Relative drift against the t = 0 value.
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub halted: Option<HaltReason>,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub steps: Vec<StepResult>,
    pub n_steps: usize,
    pub halted: Option<HaltReason>,
    pub warnings: Vec<String>,
}

impl Evolution {
    pub fn final_state(&self) -> &StepResult {
        self.steps.last().expect("evolution records at least t = 0")
    }
}

/// Free propagator: multiply coefficient j by e^{-i k_j^2 dt}. Exactly
/// unitary in L^2.
pub fn linear_step(u: &Field, dt: f64) -> Field {
    u.map_coefficients(|k, c| c * Complex64::from_polar(1.0, -k * k * dt))
}

/// Exact nonlinear flow: pointwise phase rotation u <- u e^{i |u|^4 dt}.
pub fn nonlinear_step(u: &Field, dt: f64) -> Field {
    let values = u
        .values()
        .iter()
        .map(|v| {
            let a2 = v.norm_sqr();
            v * Complex64::from_polar(1.0, a2 * a2 * dt)
        })
        .collect();
    Field::new(u.grid().clone(), values).expect("same grid")
}

fn half_linear(u: &Field, dt: f64, dealias: bool) -> Field {
    let k_max = u.grid().k_max();
    u.map_coefficients(|k, c| {
        let mut out = c * Complex64::from_polar(1.0, -k * k * (dt / 2.0));
        if dealias {
            out *= dealias_multiplier(k, k_max);
        }
        out
    })
}

fn strang_step(u: &Field, dt: f64, cfg: &SolverConfig) -> Field {
    let mid = half_linear(u, dt, cfg.dealias);
    let rotated = if cfg.nonlinear {
        nonlinear_step(&mid, dt)
    } else {
        mid
    };
    half_linear(&rotated, dt, cfg.dealias)
}

/// Strang-split evolution to `t_final` (negative values evolve backward).
/// Halts early when a blowup threshold trips; non-finite samples abort with
/// the last good prefix attached to the error.
pub fn evolve(u0: &Field, t_final: f64, cfg: &SolverConfig) -> Result<Evolution> {
    cfg.validate()?;
    if t_final == 0.0 {
        return Ok(Evolution {
            steps: vec![StepResult {
                t: 0.0,
                field: u0.clone(),
                mass_drift: 0.0,
                energy_drift: 0.0,
                halted: None,
            }],
            n_steps: 0,
            halted: None,
            warnings: Vec::new(),
        });
    }
    let direction = t_final.signum();
    let span = t_final.abs();
    let mass0 = mass(u0);
    let energy0 = energy(u0);
    let q_grad = ground_state::constants(u0.grid())?.grad_sq.sqrt();

    let mut u = u0.clone();
    let mut t_abs = 0.0;
    let mut n_steps = 0usize;
    let mut warnings: Vec<String> = Vec::new();
    let mut halted = None;
    let mut steps = vec![StepResult {
        t: 0.0,
        field: u0.clone(),
        mass_drift: 0.0,
        energy_drift: 0.0,
        halted: None,
    }];
    let mut worst_mass_drift = 0.0f64;

    while t_abs < span {
        if n_steps >= cfg.max_steps {
            halted = Some(HaltReason::MaxSteps);
            warnings.push(format!("max_steps = {} reached at t = {}", cfg.max_steps, direction * t_abs));
            break;
        }
        let mut dt = if cfg.adaptive {
            let peak = u.max_abs();
            cfg.dt_init.min(cfg.dt_safety / (1.0 + peak.powi(4)))
        } else {
            cfg.dt_init
        };
        // absorb the remainder into one final step (at most 1.5 dt) so
        // accumulation roundoff never leaves a degenerate micro-step
        let remaining = span - t_abs;
        if remaining <= 1.5 * dt {
            dt = remaining;
        }
        let next = strang_step(&u, direction * dt, cfg);
        if !next.is_finite() {
            return Err(Error::Numerical {
                reason: format!("non-finite samples at t = {}", direction * (t_abs + dt)),
                last_good: Some(Box::new(Evolution {
                    steps,
                    n_steps,
                    halted: None,
                    warnings,
                })),
            });
        }
        u = next;
        t_abs += dt;
        n_steps += 1;

        let m = mass(&u);
        let mass_drift = (m - mass0).abs() / mass0.max(f64::MIN_POSITIVE);
        worst_mass_drift = worst_mass_drift.max(mass_drift);

        let ux_norm = l2_norm(&derivative(&u, 1)?);
        if ux_norm > cfg.blowup_grad_threshold {
            halted = Some(HaltReason::GradThreshold);
        } else if ux_norm > 0.0 && q_grad / ux_norm < cfg.blowup_lambda_floor {
            halted = Some(HaltReason::LambdaFloor);
        }

        let record = halted.is_some() || t_abs >= span || n_steps % cfg.output_every == 0;
        if record {
            let e = energy(&u);
            steps.push(StepResult {
                t: direction * t_abs,
                field: u.clone(),
                mass_drift,
                energy_drift: (e - energy0).abs() / energy0.abs().max(1.0),
                halted,
            });
        }
        if halted.is_some() {
            break;
        }
    }

    if worst_mass_drift > cfg.conservation_tol * span.max(1.0) {
        warnings.push(format!(
            "mass drift {worst_mass_drift:.3e} exceeded conservation_tol over the run"
        ));
    }

    Ok(Evolution {
        steps,
        n_steps,
        halted,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// Observed order from the two coarsest refinements; `None` when the
    /// propagator is exact to roundoff.
    pub order: Option<f64>,
    /// (dt, error against the dt/8 reference) for dt, dt/2, dt/4.
    pub errors: Vec<(f64, f64)>,
    pub exact_propagator: bool,
}

/// Observed order from a refinement table, log2 of successive error ratios
/// averaged. Rejects duplicate step sizes (degenerate Richardson ratio).
pub fn refinement_order(table: &[(f64, f64)]) -> Result<f64> {
    if table.len() < 2 {
        return Err(Error::InvalidArgument(
            "order estimate needs at least two refinements".into(),
        ));
    }
    for w in table.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::InvalidArgument(
                "duplicate step sizes give a degenerate refinement ratio".into(),
            ));
        }
    }
    let mut orders = Vec::new();
    for w in table.windows(2) {
        let (dt0, e0) = w[0];
        let (dt1, e1) = w[1];
        if e1 == 0.0 {
            return Err(Error::InvalidArgument("zero fine-grid error".into()));
        }
        orders.push((e0 / e1).ln() / (dt0 / dt1).ln());
    }
    Ok(orders.iter().sum::<f64>() / orders.len() as f64)
}

/// Self-convergence study: fixed-step runs at dt, dt/2, dt/4 against a dt/8
/// reference.
pub fn convergence_order(u0: &Field, t_final: f64, dt: f64, cfg: &SolverConfig) -> Result<ConvergenceReport> {
    if !(dt > 0.0) || t_final == 0.0 {
        return Err(Error::InvalidArgument(
            "convergence study needs dt > 0 and t_final != 0".into(),
        ));
    }
    let mut fixed = *cfg;
    fixed.adaptive = false;
    fixed.output_every = usize::MAX;
    let run = |step: f64| -> Result<Field> {
        let mut c = fixed;
        c.dt_init = step;
        Ok(evolve(u0, t_final, &c)?.final_state().field.clone())
    };
    // consecutive-refinement differences down to the dt/8 reference; the
    // difference u_dt - u_{dt/2} scales like the error at dt without the
    // bias a shared fine reference puts on the finest ratio
    let solutions: Vec<Field> = [dt, dt / 2.0, dt / 4.0, dt / 8.0]
        .into_iter()
        .map(run)
        .collect::<Result<_>>()?;
    let mut errors = Vec::new();
    for (i, step) in [dt, dt / 2.0, dt / 4.0].into_iter().enumerate() {
        let mut diff = solutions[i].clone();
        for (d, r) in diff.values_mut().iter_mut().zip(solutions[i + 1].values()) {
            *d -= r;
        }
        errors.push((step, l2_norm(&diff)));
    }
    let scale = l2_norm(u0).max(1.0);
    let exact = errors.iter().all(|(_, e)| *e < 1e-13 * scale);
    let order = if exact {
        None
    } else {
        Some(refinement_order(&errors)?)
    };
    Ok(ConvergenceReport {
        order,
        errors,
        exact_propagator: exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::ground_state::q_field;
    use std::sync::Arc;

    fn grid() -> Arc<Grid> {
        Grid::new(32.0, 1024).unwrap()
    }

    #[test]
    fn linear_step_identity_and_unitarity() {
        let g = grid();
        let q = q_field(&g);
        let same = linear_step(&q, 0.0);
        for (a, b) in same.values().iter().zip(q.values()) {
            assert!((a - b).norm() < 1e-14);
        }
        let moved = linear_step(&q, 0.37);
        assert!((l2_norm(&moved) - l2_norm(&q)).abs() < 1e-13);
    }

    #[test]
    fn linear_step_spreads_a_packet() {
        let g = grid();
        let packet = Field::from_real_fn(g, |x| (-x * x / 2.0).exp());
        let later = linear_step(&packet, 0.5);
        assert!(later.max_abs() < packet.max_abs());
    }

    #[test]
    fn nonlinear_step_rotates_phase_only() {
        let g = grid();
        let q = q_field(&g);
        let out = nonlinear_step(&q, 0.3);
        for (a, b) in out.values().iter().zip(q.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        let same = nonlinear_step(&q, 0.0);
        for (a, b) in same.values().iter().zip(q.values()) {
            assert_eq!(a, b);
        }
        // constant-modulus field gains the uniform phase e^{i c^4 dt}
        let c = Field::from_fn(grid(), |_| Complex64::new(0.6, 0.0));
        let rot = nonlinear_step(&c, 0.25);
        let expect = Complex64::from_polar(0.6, 0.6f64.powi(4) * 0.25);
        for v in rot.values() {
            assert!((v - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn soliton_evolves_by_global_phase() {
        let g = grid();
        let q = q_field(&g);
        let cfg = SolverConfig::default();
        let out = evolve(&q, 1.0, &cfg).unwrap();
        let fin = out.final_state();
        assert!((fin.t - 1.0).abs() < 1e-12);
        let mut diff = fin.field.clone();
        let rot = Complex64::from_polar(1.0, 1.0);
        for (d, v) in diff.values_mut().iter_mut().zip(q.values()) {
            *d -= rot * v;
        }
        assert!(l2_norm(&diff) <= 1e-6, "soliton error {}", l2_norm(&diff));
        assert!(fin.mass_drift <= 1e-10);
        assert!(fin.energy_drift <= 1e-8);
        assert!(out.halted.is_none());
    }

    #[test]
    fn strang_order_is_two() {
        let g = grid();
        let q = q_field(&g);
        let report = convergence_order(&q, 0.5, 4e-3, &SolverConfig::default()).unwrap();
        let order = report.order.unwrap();
        assert!((1.8..=2.2).contains(&order), "observed order {order}");
    }

    #[test]
    fn linear_only_run_flags_exact_propagator() {
        let g = grid();
        let mut cfg = SolverConfig::default();
        cfg.nonlinear = false;
        cfg.dealias = false;
        let packet = Field::from_real_fn(g, |x| 0.1 * (-x * x / 4.0).exp());
        let report = convergence_order(&packet, 0.5, 4e-3, &cfg).unwrap();
        assert!(report.exact_propagator);
        assert!(report.order.is_none());
    }

    #[test]
    fn duplicate_dt_is_rejected() {
        assert!(refinement_order(&[(1e-3, 1.0), (1e-3, 0.5)]).is_err());
    }

    #[test]
    fn fixed_step_evolution_is_time_reversible() {
        // n = 2048 keeps the dealias taper far above the field's content,
        // so the fixed-step scheme is an involution to roundoff
        let g = Grid::new(32.0, 2048).unwrap();
        let q = q_field(&g);
        let u0 = Field::new(
            g,
            q.values()
                .iter()
                .enumerate()
                .map(|(j, v)| v + Complex64::new(0.0, 0.01) * v * ((j as f64) * 0.001).sin())
                .collect(),
        )
        .unwrap();
        let mut cfg = SolverConfig::default();
        cfg.adaptive = false;
        cfg.dt_init = 5e-4;
        cfg.output_every = usize::MAX;
        let fwd = evolve(&u0, 0.5, &cfg).unwrap();
        let back = evolve(&fwd.final_state().field, -0.5, &cfg).unwrap();
        let mut diff = back.final_state().field.clone();
        for (d, v) in diff.values_mut().iter_mut().zip(u0.values()) {
            *d -= v;
        }
        assert!(l2_norm(&diff) <= 1e-8, "reversal error {}", l2_norm(&diff));
    }

    #[test]
    fn blowup_run_halts_at_lambda_floor() {
        let g = Grid::new(32.0, 2048).unwrap();
        let u0 = crate::symmetries::pseudoconformal_soliton(-0.35, 0.0, 1.0, 0.0, 0.0, 0.0, &g)
            .unwrap();
        let mut cfg = SolverConfig::default();
        cfg.blowup_lambda_floor = 0.25;
        cfg.max_steps = 400_000;
        let out = evolve(&u0, 0.34, &cfg).unwrap();
        assert_eq!(out.halted, Some(HaltReason::LambdaFloor));
        assert!(out.final_state().t < 0.34);
    }

    #[test]
    fn non_finite_samples_return_the_last_good_prefix() {
        let g = Grid::new(32.0, 64).unwrap();
        // an absurd amplitude overflows the quintic phase within a step
        let u0 = Field::from_fn(g, |_| Complex64::new(1e200, 0.0));
        let mut cfg = SolverConfig::default();
        cfg.adaptive = false;
        cfg.dt_init = 1e-3;
        match evolve(&u0, 0.01, &cfg) {
            Err(crate::error::Error::Numerical { last_good, .. }) => {
                let prefix = last_good.expect("prefix attached");
                assert!(!prefix.steps.is_empty());
            }
            other => panic!("expected a numerical failure, got {other:?}"),
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = SolverConfig::default();
        cfg.dt_init = -1.0;
        assert!(evolve(&q_field(&grid()), 1.0, &cfg).is_err());
    }
}
