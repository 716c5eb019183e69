//! Scalar functionals on fields and trajectories: mass, energy, the sharp
//! interpolation ratio, variance/virial identities, the frequency-localized
//! momentum potential, truncated energy, and bilinear interaction size.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::ground_state;
use crate::spectral::{derivative, inner_product, l2_norm, lp_norm, project, ProjectionSpec, Sharpness};

/// M(u) = ∫ |u|^2 dx.
pub fn mass(u: &Field) -> f64 {
    let h = u.grid().spacing();
    h * u.values().iter().map(|v| v.norm_sqr()).sum::<f64>()
}

/// E(u) = 1/2 ∫ |u_x|^2 dx - 1/6 ∫ |u|^6 dx, with the spectral derivative.
pub fn energy(u: &Field) -> f64 {
    let ux = derivative(u, 1).expect("order 1 is valid");
    let h = u.grid().spacing();
    let grad: f64 = h * ux.values().iter().map(|v| v.norm_sqr()).sum::<f64>();
    let sext: f64 = h * u
        .values()
        .iter()
        .map(|v| {
            let a = v.norm_sqr();
            a * a * a
        })
        .sum::<f64>();
    0.5 * grad - sext / 6.0
}

/// ‖u‖_{L^6}^6 / [ 3 (‖u‖²/‖Q‖²)² ‖u_x‖² ]: equals 1 exactly on the soliton
/// orbit and is < 1 off it (sharp constant).
pub fn gn_ratio(u: &Field) -> Result<f64> {
    let m = mass(u);
    let ux = derivative(u, 1)?;
    let grad = inner_product(&ux, &ux)?;
    if m == 0.0 || grad == 0.0 {
        return Err(Error::Domain(
            "Gagliardo-Nirenberg ratio needs a nonzero, nonconstant field".into(),
        ));
    }
    let l6 = lp_norm(u, Some(6))?.powi(6);
    let q_mass = ground_state::constants(u.grid())?.mass_sq;
    Ok(l6 / (3.0 * (m / q_mass).powi(2) * grad))
}

/// V(u) = ∫ x^2 |u|^2 dx.
pub fn variance(u: &Field) -> f64 {
    let g = u.grid();
    let h = g.spacing();
    h * u
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let x = g.point(j);
            x * x * v.norm_sqr()
        })
        .sum::<f64>()
}

/// 4 Im ∫ x conj(u) u_x dx — the exact expression for dV/dt.
pub fn variance_flux(u: &Field) -> f64 {
    let ux = derivative(u, 1).expect("order 1 is valid");
    let g = u.grid();
    let h = g.spacing();
    4.0 * h
        * u.values()
            .iter()
            .zip(ux.values())
            .enumerate()
            .map(|(j, (a, b))| g.point(j) * (a.conj() * b).im)
            .sum::<f64>()
}

#[derive(Debug, Clone, Copy)]
pub struct VarianceSample {
    pub t: f64,
    pub variance: f64,
    /// dV/dt by finite differences minus the flux formula, absolute.
    pub first_residual: Option<f64>,
    /// d2V/dt2 by finite differences minus 16 E, absolute.
    pub second_residual: Option<f64>,
    pub d2v_dt2: Option<f64>,
    pub energy_16: f64,
    /// Set when the field has visible amplitude near the box edge.
    pub support_warning: bool,
}

/// Evaluate the variance identities along a trajectory. Time derivatives
/// use centered differences at interior samples; endpoints carry `None`.
pub fn variance_and_virial(traj: &[(f64, Field)]) -> Result<Vec<VarianceSample>> {
    if traj.len() < 3 {
        return Err(Error::InvalidArgument(
            "variance identities need at least 3 samples".into(),
        ));
    }
    let vs: Vec<f64> = traj.iter().map(|(_, u)| variance(u)).collect();
    let fluxes: Vec<f64> = traj.iter().map(|(_, u)| variance_flux(u)).collect();
    let mut out = Vec::with_capacity(traj.len());
    for (i, (t, u)) in traj.iter().enumerate() {
        let e16 = 16.0 * energy(u);
        let (first, second, d2v) = if i == 0 || i + 1 == traj.len() {
            (None, None, None)
        } else {
            let (t0, t1, t2) = (traj[i - 1].0, traj[i].0, traj[i + 1].0);
            let (h1, h2) = (t1 - t0, t2 - t1);
            let dv = (vs[i + 1] * h1 * h1 - vs[i - 1] * h2 * h2
                + vs[i] * (h2 * h2 - h1 * h1))
                / (h1 * h2 * (h1 + h2));
            let d2v = 2.0
                * (vs[i - 1] / (h1 * (h1 + h2)) - vs[i] / (h1 * h2) + vs[i + 1] / (h2 * (h1 + h2)));
            (Some((dv - fluxes[i]).abs()), Some((d2v - e16).abs()), Some(d2v))
        };
        let g = u.grid();
        let l = g.half_length();
        let peak = u.max_abs();
        let edge = u
            .values()
            .iter()
            .enumerate()
            .filter(|(j, _)| g.point(*j).abs() >= 0.9 * l)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        out.push(VarianceSample {
            t: *t,
            variance: vs[i],
            first_residual: first,
            second_residual: second,
            d2v_dt2: d2v,
            energy_16: e16,
            support_warning: peak > 0.0 && edge > 1e-8 * peak,
        });
    }
    Ok(out)
}

/// Named taper profiles for the momentum-potential weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsiProfile {
    /// 1 on |x| <= 1, C^2 polynomial taper to 0 on 1 < |x| < 2, 0 beyond.
    #[default]
    SmoothstepC2,
}

impl PsiProfile {
    pub fn eval(&self, y: f64) -> f64 {
        let a = y.abs();
        if a <= 1.0 {
            1.0
        } else if a >= 2.0 {
            0.0
        } else {
            let t = a - 1.0;
            1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        }
    }
}

/// Configuration of the frequency-localized momentum potential
/// M(t) = ∫ phi(x) Im[conj(P u) d_x P u] dx with P a low-pass at dyadic
/// level `cutoff_level + 9` and phi the antiderivative of psi^2(eta1 x / r).
#[derive(Debug, Clone, Copy)]
pub struct MorawetzConfig {
    pub r: f64,
    pub eta1: f64,
    pub cutoff_level: i32,
    pub psi: PsiProfile,
}

impl MorawetzConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) {
            return Err(Error::InvalidArgument("Morawetz R must be positive".into()));
        }
        if !(self.eta1 > 0.0 && self.eta1 <= 1.0) {
            return Err(Error::InvalidArgument(
                "Morawetz eta1 must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn for_grid(grid_half_length: f64) -> Self {
        Self {
            r: grid_half_length / 4.0,
            eta1: 0.5,
            cutoff_level: 0,
            psi: PsiProfile::default(),
        }
    }
}

/// The weight phi on the grid: cumulative rectangle-rule quadrature of
/// psi^2(eta1 y / R), shifted so phi(0) = 0. Odd for the even psi, and
/// exactly x on the plateau |x| <= R / eta1.
pub fn morawetz_weight(u_grid: &crate::grid::Grid, cfg: &MorawetzConfig) -> Vec<f64> {
    let n = u_grid.n_points();
    let h = u_grid.spacing();
    let chi = |j: usize| {
        let y = u_grid.point(j);
        cfg.psi.eval(cfg.eta1 * y / cfg.r).powi(2)
    };
    // cumulative sum outward from x = 0 (index n/2), which keeps phi exactly
    // antisymmetric on the grid for the even chi
    let mut phi = vec![0.0; n];
    let mid = n / 2;
    let mut acc = 0.0;
    for j in mid + 1..n {
        acc += chi(j) * h;
        phi[j] = acc;
    }
    acc = 0.0;
    for j in (0..mid).rev() {
        acc -= chi(j) * h;
        phi[j] = acc;
    }
    phi
}

/// M(t) = ∫ phi Im[conj(P u) d_x (P u)] dx.
pub fn morawetz_potential(u: &Field, cfg: &MorawetzConfig) -> Result<f64> {
    cfg.validate()?;
    let spec = ProjectionSpec::low_pass(cfg.cutoff_level + 9, Sharpness::Sharp);
    let pu = project(u, &spec);
    let pux = derivative(&pu, 1)?;
    let phi = morawetz_weight(u.grid(), cfg);
    let h = u.grid().spacing();
    Ok(h * phi
        .iter()
        .zip(pu.values().iter().zip(pux.values()))
        .map(|(w, (a, b))| w * (a.conj() * b).im)
        .sum::<f64>())
}

/// E(P_{<= 2^level} u): energy after a sharp low-pass at the given level.
pub fn truncated_energy(u: &Field, level: i32) -> f64 {
    energy(&project(u, &ProjectionSpec::low_pass(level, Sharpness::Sharp)))
}

#[derive(Debug, Clone)]
pub struct TruncatedEnergySeries {
    /// Per-time E(P_{<= k + 9} u(t)).
    pub values: Vec<(f64, f64)>,
    /// sup over the window of the truncated energy.
    pub sup: f64,
}

/// Per-time truncated energy over a trajectory, at dyadic level k + 9.
pub fn truncated_energy_drift(traj: &[(f64, Field)], k: i32) -> TruncatedEnergySeries {
    let values: Vec<(f64, f64)> = traj
        .iter()
        .map(|(t, u)| (*t, truncated_energy(u, k + 9)))
        .collect();
    let sup = values.iter().map(|(_, e)| e.abs()).fold(0.0, f64::max);
    TruncatedEnergySeries { values, sup }
}

/// Fixed-time bilinear interaction size
/// 2^{i/2} ‖ (P_{>= i} u)(P_{<= i-3} u) ‖_{L^2}, with P_{>= i} the
/// complement of the low-pass at level i - 1.
pub fn bilinear_interaction(u: &Field, i: i32) -> Result<f64> {
    if i < 3 {
        return Err(Error::InvalidArgument(format!(
            "bilinear interaction needs level i >= 3, got {i}"
        )));
    }
    let hi = project(u, &ProjectionSpec::high_pass(i - 1, Sharpness::Sharp));
    let lo = project(u, &ProjectionSpec::low_pass(i - 3, Sharpness::Sharp));
    let vals: Vec<Complex64> = hi
        .values()
        .iter()
        .zip(lo.values())
        .map(|(a, b)| a * b)
        .collect();
    let prod = Field::new(u.grid().clone(), vals)?;
    Ok((i as f64 / 2.0).exp2() * l2_norm(&prod))
}

/// One row of the per-time diagnostic record.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticSample {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub gn_ratio: Option<f64>,
    pub variance: Option<f64>,
    pub morawetz: Option<f64>,
    pub truncated_energy: Option<f64>,
    pub eps_l2: Option<f64>,
}
