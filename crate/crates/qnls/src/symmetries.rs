//! The symmetry group of the equation acting on fields — scaling, phase,
//! translation, Galilean boost — plus closed-form soliton families and the
//! pseudoconformal transformation.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::ground_state::eval_q;

/// Scale bounds for on-grid Fourier resampling; outside this window the
/// caller must re-grid.
pub const LAMBDA_MIN: f64 = 0.125;
pub const LAMBDA_MAX: f64 = 8.0;

/// Symmetry coordinates (lambda, gamma, x0, xi).
///
/// `apply` realizes the literal action
/// `e^{i gamma} e^{i x xi} lambda^{1/2} u(lambda x + x0)`,
/// so for a fitted decomposition `lambda` is the soliton width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationParams {
    pub lambda: f64,
    pub gamma: f64,
    pub x0: f64,
    pub xi: f64,
}

impl ModulationParams {
    pub fn identity() -> Self {
        Self {
            lambda: 1.0,
            gamma: 0.0,
            x0: 0.0,
            xi: 0.0,
        }
    }

    /// Validating constructor; stores gamma reduced to [0, 2 pi).
    pub fn new(lambda: f64, gamma: f64, x0: f64, xi: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            lambda,
            gamma: gamma.rem_euclid(TAU),
            x0,
            xi,
        })
    }

    /// Gamma reduced to [0, 2 pi).
    pub fn gamma_canonical(&self) -> f64 {
        self.gamma.rem_euclid(TAU)
    }

    /// Distance to another parameter tuple, gamma compared mod 2 pi and
    /// lambda relatively.
    pub fn distance(&self, other: &Self) -> f64 {
        let dg = (self.gamma - other.gamma).rem_euclid(TAU);
        let dg = dg.min(TAU - dg);
        (self.lambda / other.lambda - 1.0).abs()
            + dg
            + (self.x0 - other.x0).abs()
            + (self.xi - other.xi).abs()
    }
}

/// Group composition: the action of `compose(first, then)` equals applying
/// `first` and then `then`.
pub fn compose(first: &ModulationParams, then: &ModulationParams) -> ModulationParams {
    ModulationParams {
        lambda: first.lambda * then.lambda,
        gamma: first.gamma + then.gamma + then.x0 * first.xi,
        x0: first.lambda * then.x0 + first.x0,
        xi: then.xi + then.lambda * first.xi,
    }
}

/// Group inverse, including the phase cross-term from composing the
/// translation with the boost.
pub fn invert(p: &ModulationParams) -> ModulationParams {
    ModulationParams {
        lambda: 1.0 / p.lambda,
        gamma: -p.gamma + p.x0 * p.xi / p.lambda,
        x0: -p.x0 / p.lambda,
        xi: -p.xi / p.lambda,
    }
}

/// `e^{i gamma} e^{i x xi} lambda^{1/2} u(lambda x + x0)` sampled on u's
/// grid. Rescaling and translation use Fourier interpolation; arguments
/// landing outside the box evaluate to zero (the field stands in for a
/// decaying function on the line).
pub fn apply(params: &ModulationParams, u: &Field) -> Result<Field> {
    if !(LAMBDA_MIN..=LAMBDA_MAX).contains(&params.lambda) {
        return Err(Error::Domain(format!(
            "lambda = {} outside the resampling window [{LAMBDA_MIN}, {LAMBDA_MAX}]; re-grid instead",
            params.lambda
        )));
    }
    let grid = u.grid().clone();
    let l = grid.half_length();
    let h = grid.spacing();
    let resampled = u.eval_equispaced(-params.lambda * l + params.x0, params.lambda * h);
    let amp = params.lambda.sqrt();
    let phase0 = Complex64::from_polar(amp, params.gamma);
    let values = resampled
        .into_iter()
        .enumerate()
        .map(|(j, v)| {
            let x = grid.point(j);
            phase0 * Complex64::from_polar(1.0, x * params.xi) * v
        })
        .collect();
    Field::new(grid, values)
}

/// `e^{-i t xi^2} e^{i x xi} u(x - 2 t xi)`: the Galilean boost of a field
/// known at time t. The translation is a Fourier shift (periodic); exact
/// covariance on the grid needs xi on the grid's frequency lattice.
pub fn galilean_boost(u: &Field, xi: f64, t: f64) -> Field {
    let shift = 2.0 * t * xi;
    let translated = u.map_coefficients(|k, c| c * Complex64::from_polar(1.0, -k * shift));
    let grid = translated.grid().clone();
    let phase = Complex64::from_polar(1.0, -t * xi * xi);
    let values = translated
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| phase * Complex64::from_polar(1.0, grid.point(j) * xi) * v)
        .collect();
    Field::new(grid, values).expect("same grid")
}

fn periodized_q(arg: impl Fn(f64) -> f64, grid: &Arc<Grid>) -> Vec<f64> {
    let l = grid.half_length();
    grid.points()
        .map(|x| (-2..=2).map(|m| eval_q(arg(x + 2.0 * l * m as f64))).sum())
        .collect()
}

/// The moving soliton
/// `e^{-i theta - i t xi0^2} e^{i lambda^2 t} e^{i x xi0} lambda^{1/2}
///  Q(lambda (x - 2 t xi0) + x0)` sampled at time t.
pub fn soliton(
    t: f64,
    lambda: f64,
    theta: f64,
    x0: f64,
    xi0: f64,
    grid: &Arc<Grid>,
) -> Result<Field> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("lambda must be positive".into()));
    }
    let profile = periodized_q(|x| lambda * (x - 2.0 * t * xi0) + x0, grid);
    let global = Complex64::from_polar(
        lambda.sqrt(),
        -theta - t * xi0 * xi0 + lambda * lambda * t,
    );
    let values = profile
        .into_iter()
        .enumerate()
        .map(|(j, q)| global * Complex64::from_polar(1.0, grid.point(j) * xi0) * q)
        .collect();
    Field::new(grid.clone(), values)
}

/// The blowup family concentrating at time T and position xi0:
/// `lambda^{1/2} (T-t)^{-1/2} e^{i theta} e^{i (x - xi0)^2 / (4 (t - T))}
///  e^{i lambda^2 / (t - T)} Q(lambda (x - xi0) / (T - t) - x0)`.
///
/// The `lambda^{1/2}` factor normalizes the family to soliton mass for
/// every parameter choice, as the pseudoconformal image of the moving
/// soliton family requires.
pub fn pseudoconformal_soliton(
    t: f64,
    big_t: f64,
    lambda: f64,
    theta: f64,
    x0: f64,
    xi0: f64,
    grid: &Arc<Grid>,
) -> Result<Field> {
    if !(t < big_t) {
        return Err(Error::Domain(format!(
            "pseudoconformal soliton needs t < T, got t = {t}, T = {big_t}"
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("lambda must be positive".into()));
    }
    let tau = big_t - t;
    let profile = periodized_q(|x| lambda * (x - xi0) / tau - x0, grid);
    let amp = (lambda / tau).sqrt();
    let values = profile
        .into_iter()
        .enumerate()
        .map(|(j, q)| {
            let x = grid.point(j);
            let phase = theta - (x - xi0) * (x - xi0) / (4.0 * tau) - lambda * lambda / tau;
            Complex64::from_polar(amp, phase) * q
        })
        .collect();
    Field::new(grid.clone(), values)
}

/// Pointwise support threshold for the pseudoconformal map: the outer
/// quarter of the box must stay below this amplitude.
pub const SUPPORT_TOL: f64 = 1e-12;

/// `v(t, x) = t^{-1/2} conj(u(1/t, x/t)) e^{i x^2 / (4 t)}` where `u` holds
/// the field at time 1/t. Requires |u| < `SUPPORT_TOL` on the outer quarter
/// of the box; for |t| < 1 the points x/t leave the box and the tail is
/// dropped (the support check is what makes that loss negligible).
pub fn pseudoconformal_conjugate(u: &Field, t: f64) -> Result<Field> {
    if t == 0.0 {
        return Err(Error::Domain("pseudoconformal conjugation needs t != 0".into()));
    }
    let grid = u.grid().clone();
    let l = grid.half_length();
    let outer = u
        .values()
        .iter()
        .enumerate()
        .filter(|(j, _)| grid.point(*j).abs() >= 0.75 * l)
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    if outer >= SUPPORT_TOL {
        return Err(Error::Domain(format!(
            "field is not negligible in the outer quarter of the box (max {outer:.3e}); \
             re-grid on a larger box before conjugating"
        )));
    }
    let sampled = u.eval_equispaced(-l / t, grid.spacing() / t);
    let amp = t.abs().powf(-0.5);
    let values = sampled
        .into_iter()
        .enumerate()
        .map(|(j, v)| {
            let x = grid.point(j);
            Complex64::from_polar(amp, x * x / (4.0 * t)) * v.conj()
        })
        .collect();
    Field::new(grid, values)
}
