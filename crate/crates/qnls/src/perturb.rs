//! Band-limited Gaussian perturbations with optional projection to the
//! admissible subspace and mass renormalization. Deterministic given a
//! seed; shared by the coercivity ensembles and the scenario harness.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::Result;
use crate::field::Field;
use crate::grid::Grid;
use crate::ground_state::{q_cubed_field, q_field, q_prime_field};
use crate::spectral::l2_norm;
use std::sync::Arc;

#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    /// Target L^2 amplitude.
    pub amplitude: f64,
    /// Highest excited wavenumber magnitude.
    pub k_band: f64,
    /// Restrict to even fields (even coefficients in k).
    pub even: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            amplitude: 1e-3,
            k_band: 2.0,
            even: false,
        }
    }
}

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Complex Gaussian noise, band-limited and scaled to the requested L^2
/// amplitude.
pub fn band_limited_noise(grid: &Arc<Grid>, spec: &NoiseSpec, seed: u64) -> Result<Field> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = grid.n_points();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for m in 0..n {
        let k = grid.wavenumbers()[m];
        if k.abs() > spec.k_band {
            continue;
        }
        if spec.even && k < 0.0 {
            continue; // filled from the mirror below
        }
        let z = Complex64::new(gauss(&mut rng), gauss(&mut rng));
        coeffs[m] = z;
        if spec.even && m > 0 {
            coeffs[n - m] = z;
        }
    }
    let mut f = Field::from_coefficients(grid.clone(), coeffs)?;
    let norm = l2_norm(&f);
    if norm > 0.0 {
        let s = spec.amplitude / norm;
        for v in f.values_mut() {
            *v *= s;
        }
    }
    Ok(f)
}

/// Remove the components along the orthogonality directions
/// {Q^3, iQ^3, Q_x, iQ_x} (real inner product: project the real and
/// imaginary parts separately).
pub fn project_admissible(eps: &Field, full: bool) -> Result<Field> {
    let grid = eps.grid().clone();
    let h = grid.spacing();
    let q3: Vec<f64> = q_cubed_field(&grid).values().iter().map(|v| v.re).collect();
    let qx: Vec<f64> = q_prime_field(&grid).values().iter().map(|v| v.re).collect();
    let q3_sq: f64 = h * q3.iter().map(|v| v * v).sum::<f64>();
    let qx_sq: f64 = h * qx.iter().map(|v| v * v).sum::<f64>();

    let mut re: Vec<f64> = eps.values().iter().map(|v| v.re).collect();
    let mut im: Vec<f64> = eps.values().iter().map(|v| v.im).collect();
    for part in [&mut re, &mut im] {
        let c3 = h * part.iter().zip(&q3).map(|(a, b)| a * b).sum::<f64>() / q3_sq;
        for (p, b) in part.iter_mut().zip(&q3) {
            *p -= c3 * b;
        }
        if full {
            let cx = h * part.iter().zip(&qx).map(|(a, b)| a * b).sum::<f64>() / qx_sq;
            for (p, b) in part.iter_mut().zip(&qx) {
                *p -= cx * b;
            }
        }
    }
    Field::new(
        grid,
        re.into_iter()
            .zip(im)
            .map(|(r, i)| Complex64::new(r, i))
            .collect(),
    )
}

/// Iterate admissible projection and mass renormalization of Q + eps to a
/// joint fixed point: returns eps with (eps, Q^3) = (eps, iQ^3) = 0
/// (plus the Q_x pair when `full`) and ||Q + eps|| = ||Q|| to roundoff.
pub fn admissible_mass_renormalized(eps0: &Field, full: bool) -> Result<Field> {
    let grid = eps0.grid().clone();
    let q = q_field(&grid);
    let target = l2_norm(&q);
    let mut eps = eps0.clone();
    // the alternation contracts geometrically; run to the roundoff floor
    for _ in 0..600 {
        eps = project_admissible(&eps, full)?;
        let mut u = q.clone();
        for (uv, ev) in u.values_mut().iter_mut().zip(eps.values()) {
            *uv += ev;
        }
        let s = target / l2_norm(&u);
        if (s - 1.0).abs() < 1e-16 {
            return Ok(eps);
        }
        let mut next = u;
        for (nv, qv) in next.values_mut().iter_mut().zip(q.values()) {
            *nv = *nv * s - qv;
        }
        eps = next;
    }
    Ok(project_admissible(&eps, full)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::mass;
    use crate::spectral::inner_product;

    #[test]
    fn noise_is_deterministic_and_scaled() {
        let g = Grid::new(32.0, 256).unwrap();
        let spec = NoiseSpec {
            amplitude: 1e-2,
            k_band: 3.0,
            even: false,
        };
        let a = band_limited_noise(&g, &spec, 42).unwrap();
        let b = band_limited_noise(&g, &spec, 42).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_eq!(x, y);
        }
        assert!((l2_norm(&a) - 1e-2).abs() < 1e-15);
        let c = band_limited_noise(&g, &spec, 43).unwrap();
        assert!(l2_norm(&a) > 0.0 && a.values() != c.values());
    }

    #[test]
    fn even_noise_is_even() {
        let g = Grid::new(32.0, 256).unwrap();
        let spec = NoiseSpec {
            amplitude: 1.0,
            k_band: 4.0,
            even: true,
        };
        let f = band_limited_noise(&g, &spec, 5).unwrap();
        let n = g.n_points();
        for j in 1..n {
            assert!((f.values()[j] - f.values()[n - j]).norm() < 1e-12);
        }
    }

    #[test]
    fn renormalized_perturbation_meets_both_constraints() {
        let g = Grid::new(32.0, 512).unwrap();
        let spec = NoiseSpec {
            amplitude: 5e-3,
            k_band: 4.0,
            even: true,
        };
        let raw = band_limited_noise(&g, &spec, 9).unwrap();
        let eps = admissible_mass_renormalized(&raw, false).unwrap();
        let q3 = q_cubed_field(&g);
        let re = Field::new(
            g.clone(),
            eps.values().iter().map(|v| Complex64::new(v.re, 0.0)).collect(),
        )
        .unwrap();
        let im = Field::new(
            g.clone(),
            eps.values().iter().map(|v| Complex64::new(v.im, 0.0)).collect(),
        )
        .unwrap();
        assert!(inner_product(&re, &q3).unwrap().abs() < 1e-12);
        assert!(inner_product(&im, &q3).unwrap().abs() < 1e-12);
        let q = q_field(&g);
        let mut u = q.clone();
        for (uv, ev) in u.values_mut().iter_mut().zip(eps.values()) {
            *uv += ev;
        }
        assert!((mass(&u) - mass(&q)).abs() < 1e-13);
    }
}
