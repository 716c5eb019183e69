//! Quadrature, spectral differentiation, norms, and Littlewood–Paley
//! frequency projections on periodic fields.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;

/// Real L^2 pairing `(f, g) = Re ∫ f conj(g) dx` by the rectangle rule,
/// which is spectrally accurate on periodic data.
pub fn inner_product(f: &Field, g: &Field) -> Result<f64> {
    f.same_grid(g)?;
    let h = f.grid().spacing();
    Ok(h * f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a.re * b.re + a.im * b.im)
        .sum::<f64>())
}

/// Spectral derivative of the given order (1 or 2). The Nyquist mode is
/// zeroed for odd orders, the usual convention for real data.
pub fn derivative(f: &Field, order: u32) -> Result<Field> {
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "derivative order must be 1 or 2, got {order}"
        )));
    }
    let k_max = f.grid().k_max();
    Ok(f.map_coefficients(|k, c| {
        if order == 1 {
            if k.abs() >= k_max {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k) * c
            }
        } else {
            -k * k * c
        }
    }))
}

/// L^p norm by quadrature; `None` exponent means L^infinity (max modulus).
pub fn lp_norm(f: &Field, p: Option<u32>) -> Result<f64> {
    match p {
        None => Ok(f.max_abs()),
        Some(p) => {
            if ![1, 2, 4, 6, 8].contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "unsupported L^p exponent {p}"
                )));
            }
            let h = f.grid().spacing();
            let sum: f64 = f.values().iter().map(|v| v.norm().powi(p as i32)).sum();
            Ok((h * sum).powf(1.0 / p as f64))
        }
    }
}

pub fn l2_norm(f: &Field) -> f64 {
    lp_norm(f, Some(2)).expect("p = 2 is always valid")
}

/// Relative Parseval defect between quadrature mass and coefficient mass.
pub fn parseval_defect(f: &Field) -> f64 {
    let h = f.grid().spacing();
    let phys: f64 = h * f.values().iter().map(|v| v.norm_sqr()).sum::<f64>();
    let two_l = 2.0 * f.grid().half_length();
    let spec: f64 = two_l * f.coefficients().iter().map(|c| c.norm_sqr()).sum::<f64>();
    (phys - spec).abs() / phys.max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionKind {
    /// Keep |k| <= 2^level.
    LowPass,
    /// Keep the dyadic band 2^(level-1) < |k| <= 2^level; level 0 is the
    /// low-pass at 1.
    Band,
    /// Complement of the low-pass at the same level.
    HighPass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sharpness {
    Sharp,
    /// cos^2 taper over one dyadic octave above the cutoff.
    Smooth,
}

/// A Littlewood–Paley style frequency cutoff. Negative levels denote the
/// zero operator (for `LowPass`/`Band`) or the identity (for `HighPass`,
/// as the complement).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionSpec {
    pub kind: ProjectionKind,
    pub level: i32,
    pub sharpness: Sharpness,
}

impl ProjectionSpec {
    pub fn low_pass(level: i32, sharpness: Sharpness) -> Self {
        Self {
            kind: ProjectionKind::LowPass,
            level,
            sharpness,
        }
    }

    pub fn band(level: i32, sharpness: Sharpness) -> Self {
        Self {
            kind: ProjectionKind::Band,
            level,
            sharpness,
        }
    }

    pub fn high_pass(level: i32, sharpness: Sharpness) -> Self {
        Self {
            kind: ProjectionKind::HighPass,
            level,
            sharpness,
        }
    }

    /// Multiplier value at wavenumber k.
    pub fn multiplier(&self, k: f64) -> f64 {
        match self.kind {
            ProjectionKind::LowPass => low_profile(self.level, self.sharpness, k),
            ProjectionKind::HighPass => 1.0 - low_profile(self.level, self.sharpness, k),
            ProjectionKind::Band => {
                low_profile(self.level, self.sharpness, k)
                    - low_profile(self.level - 1, self.sharpness, k)
            }
        }
    }
}

fn low_profile(level: i32, sharpness: Sharpness, k: f64) -> f64 {
    if level < 0 {
        return 0.0;
    }
    let cut = (level as f64).exp2();
    let a = k.abs();
    match sharpness {
        Sharpness::Sharp => {
            if a <= cut {
                1.0
            } else {
                0.0
            }
        }
        Sharpness::Smooth => {
            if a <= cut {
                1.0
            } else if a >= 2.0 * cut {
                0.0
            } else {
                let t = (a / cut).log2(); // in (0, 1)
                (std::f64::consts::FRAC_PI_2 * t).cos().powi(2)
            }
        }
    }
}

/// Multiply a coefficient array by the projection profile in place. Sharp
/// profiles are exactly idempotent at this level (0/1 multipliers).
pub fn project_coefficients(coeffs: &mut [Complex64], wavenumbers: &[f64], spec: &ProjectionSpec) {
    for (c, &k) in coeffs.iter_mut().zip(wavenumbers) {
        *c *= spec.multiplier(k);
    }
}

/// Apply a frequency projection by multiplying Fourier coefficients.
pub fn project(f: &Field, spec: &ProjectionSpec) -> Field {
    f.map_coefficients(|k, c| c * spec.multiplier(k))
}

/// Smooth 2/3-rule dealiasing multiplier: identity below k_max/3, zero at
/// and above 2 k_max/3, cos^2 taper in between (one octave).
pub fn dealias_multiplier(k: f64, k_max: f64) -> f64 {
    let t = k.abs() / k_max;
    if t <= 1.0 / 3.0 {
        1.0
    } else if t >= 2.0 / 3.0 {
        0.0
    } else {
        let s = (t - 1.0 / 3.0) * 3.0;
        (std::f64::consts::FRAC_PI_2 * s).cos().powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use proptest::prelude::*;

    fn test_grid() -> std::sync::Arc<Grid> {
        Grid::new(16.0, 256).unwrap()
    }

    #[test]
    fn inner_product_is_real_part_pairing() {
        let g = test_grid();
        let f = Field::from_real_fn(g.clone(), |x| (-x * x).exp());
        let fi = Field::new(
            g,
            f.values().iter().map(|v| v * Complex64::new(0.0, 1.0)).collect(),
        )
        .unwrap();
        // (f, i f) = 0 for real f
        assert!(inner_product(&f, &fi).unwrap().abs() < 1e-14);
    }

    #[test]
    fn derivative_of_pure_mode_is_exact() {
        let g = test_grid();
        let k1 = g.wavenumbers()[1];
        let f = Field::from_real_fn(g.clone(), |x| (k1 * x).sin());
        let d = derivative(&f, 1).unwrap();
        let exact = Field::from_real_fn(g, |x| k1 * (k1 * x).cos());
        let err: f64 = d
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "pure mode derivative error {err}");
    }

    #[test]
    fn second_derivative_of_constant_is_zero() {
        let g = test_grid();
        let f = Field::from_real_fn(g, |_| 2.5);
        let d = derivative(&f, 2).unwrap();
        assert!(d.max_abs() < 1e-13);
    }

    #[test]
    fn derivative_of_even_field_is_odd() {
        let g = test_grid();
        let f = Field::from_real_fn(g.clone(), |x| (-x * x / 3.0).exp());
        let d = derivative(&f, 1).unwrap();
        let n = g.n_points();
        // sample symmetry: d(x_j) = -d(x_{n-j}) for the even input
        for j in 1..n {
            let a = d.values()[j];
            let b = d.values()[n - j];
            assert!((a + b).norm() < 1e-12);
        }
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let f = Field::zeros(Grid::new(16.0, 256).unwrap());
        let g = Field::zeros(Grid::new(16.0, 128).unwrap());
        assert!(inner_product(&f, &g).is_err());
    }

    #[test]
    fn sharp_low_plus_high_is_identity_and_idempotent() {
        let g = test_grid();
        let f = Field::from_fn(g, |x| Complex64::new((-x * x / 7.0).exp(), (x / 3.0).sin()));
        let lo = project(&f, &ProjectionSpec::low_pass(2, Sharpness::Sharp));
        let hi = project(&f, &ProjectionSpec::high_pass(2, Sharpness::Sharp));
        for ((l, h), v) in lo.values().iter().zip(hi.values()).zip(f.values()) {
            assert!((l + h - v).norm() < 1e-12);
        }
        // idempotence, bit-for-bit in coefficient space
        let spec = ProjectionSpec::low_pass(2, Sharpness::Sharp);
        let mut once = f.coefficients();
        project_coefficients(&mut once, f.grid().wavenumbers(), &spec);
        let mut twice = once.clone();
        project_coefficients(&mut twice, f.grid().wavenumbers(), &spec);
        assert_eq!(once, twice);
    }

    #[test]
    fn low_pass_above_nyquist_is_identity() {
        let g = test_grid();
        let f = Field::from_fn(g.clone(), |x| Complex64::new((x / 5.0).cos(), x.sin()));
        let level = g.k_max().log2().ceil() as i32;
        let p = project(&f, &ProjectionSpec::low_pass(level, Sharpness::Sharp));
        for (a, b) in p.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn high_pass_of_constant_is_zero() {
        let g = test_grid();
        let f = Field::from_real_fn(g, |_| 1.0);
        let p = project(&f, &ProjectionSpec::high_pass(0, Sharpness::Sharp));
        assert!(p.max_abs() < 1e-13);
    }

    #[test]
    fn negative_level_band_is_zero_operator() {
        let g = test_grid();
        let f = Field::from_real_fn(g, |x| (x / 4.0).cos());
        let p = project(&f, &ProjectionSpec::band(-1, Sharpness::Sharp));
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn low_pass_tail_of_q_decays_rapidly() {
        // once the cutoff covers the profile's spectral content the tail
        // norm collapses below 1e-10
        let g = Grid::new(32.0, 2048).unwrap();
        let q = crate::ground_state::q_field(&g);
        let tail = |level: i32| {
            let kept = project(&q, &ProjectionSpec::low_pass(level, Sharpness::Sharp));
            let mut diff = kept;
            for (d, v) in diff.values_mut().iter_mut().zip(q.values()) {
                *d -= v;
            }
            l2_norm(&diff)
        };
        assert!(tail(2) > 1e-2, "low cutoff keeps a visible tail");
        assert!(tail(5) <= 1e-10, "tail at level 5: {}", tail(5));
    }

    #[test]
    fn lp_norms_of_the_ground_state() {
        let g = Grid::new(32.0, 2048).unwrap();
        let q = crate::ground_state::q_field(&g);
        // quadrature oracles: closed forms 3 and 3 sqrt(3) pi / 4
        let l4 = lp_norm(&q, Some(4)).unwrap().powi(4);
        assert!((l4 - 3.0).abs() < 1e-10, "l4^4 = {l4}");
        let l6 = lp_norm(&q, Some(6)).unwrap().powi(6);
        assert!((l6 - 4.08104856952699).abs() < 1e-10, "l6^6 = {l6}");
        assert!(lp_norm(&q, Some(3)).is_err());
    }

    #[test]
    fn lp_norm_of_zero_field() {
        let g = test_grid();
        let z = Field::zeros(g);
        for p in [Some(1), Some(2), Some(4), Some(6), Some(8), None] {
            assert_eq!(lp_norm(&z, p).unwrap(), 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn inner_product_symmetry(seed in 0u64..1000) {
            let g = test_grid();
            let f = Field::from_fn(g.clone(), |x| {
                Complex64::new((x + seed as f64).sin(), (0.3 * x).cos())
            });
            let h = Field::from_fn(g, |x| Complex64::new((0.7 * x).cos(), (x - 1.0).sin()));
            let a = inner_product(&f, &h).unwrap();
            let b = inner_product(&h, &f).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn parseval_holds(w in 0.5f64..4.0) {
            let g = test_grid();
            let f = Field::from_fn(g, |x| Complex64::new((-x * x / w).exp(), (x / w).sin()));
            prop_assert!(parseval_defect(&f) < 1e-12);
        }

        #[test]
        fn smooth_band_sum_telescopes(level in 1i32..5) {
            // low(level) = low(level-1) + band(level), by construction
            let g = test_grid();
            let f = Field::from_fn(g, |x| Complex64::new((1.3 * x).cos(), (-x * x / 9.0).exp()));
            let lo = project(&f, &ProjectionSpec::low_pass(level, Sharpness::Smooth));
            let lo_prev = project(&f, &ProjectionSpec::low_pass(level - 1, Sharpness::Smooth));
            let band = project(&f, &ProjectionSpec::band(level, Sharpness::Smooth));
            for ((a, b), c) in lo.values().iter().zip(lo_prev.values()).zip(band.values()) {
                prop_assert!((a - (b + c)).norm() < 1e-12);
            }
        }
    }
}
