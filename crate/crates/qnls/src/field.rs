use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::Grid;

const TWO_PI_HI: f64 = std::f64::consts::TAU;
/// Double-double correction: TAU_HI + TAU_LO carries 2 pi to ~1e-32.
const TWO_PI_LO: f64 = 2.4492935982947064e-16;

/// Complex-valued samples of a function on a periodic [`Grid`].
///
/// The spectral representation used throughout is
/// `u(x_j) = sum_m c_m exp(i k_m (x_j + L))`, so coefficient index m matches
/// the grid's FFT wavenumber layout and the basis phase is anchored at the
/// left box edge (the first sample point).
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n_points();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().map(f).collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "L={} n={} vs L={} n={}",
                self.grid.half_length(),
                self.grid.n_points(),
                other.grid.half_length(),
                other.grid.n_points()
            )))
        }
    }

    /// Fourier coefficients, normalized so that
    /// `u(x_j) = sum_m c_m exp(i k_m (x_j + L))`.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        fft::forward(&mut buf);
        let scale = 1.0 / self.values.len() as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
        buf
    }

    pub fn from_coefficients(grid: Arc<Grid>, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a grid of {} points",
                coeffs.len(),
                grid.n_points()
            )));
        }
        let n = coeffs.len() as f64;
        for v in coeffs.iter_mut() {
            *v *= n;
        }
        fft::inverse(&mut coeffs);
        Ok(Self {
            grid,
            values: coeffs,
        })
    }

    /// Apply a multiplier to the Fourier coefficients, returning a new field.
    pub fn map_coefficients(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        let mut buf = self.values.clone();
        fft::forward(&mut buf);
        for (c, &k) in buf.iter_mut().zip(self.grid.wavenumbers()) {
            *c = f(k, *c);
        }
        fft::inverse(&mut buf);
        Self {
            grid: self.grid.clone(),
            values: buf,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Evaluate the trigonometric interpolant at the n equispaced points
    /// `offset + j * spacing`. Points outside [-L, L) evaluate to zero: the
    /// samples stand in for a decaying function on the line, not its
    /// periodic extension.
    pub fn eval_equispaced(&self, offset: f64, spacing: f64) -> Vec<Complex64> {
        let vals = bluestein_eval(&self.coefficients(), self.grid.half_length(), offset, spacing);
        let l = self.grid.half_length();
        vals.into_iter()
            .enumerate()
            .map(|(j, v)| {
                let p = offset + spacing * j as f64;
                if (-l..l).contains(&p) {
                    v
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    }
}

/// e^{i beta q} for exactly representable q, with double-double reduction of
/// the phase mod 2 pi. `beta * q` can reach ~1e5, where a plain product loses
/// five digits of phase.
fn expi_scaled(beta: f64, q: f64) -> Complex64 {
    let p = beta * q;
    let err = beta.mul_add(q, -p);
    let k = (p / TWO_PI_HI).round();
    let mut r = (-k).mul_add(TWO_PI_HI, p);
    r += err;
    r = (-k).mul_add(TWO_PI_LO, r);
    Complex64::new(r.cos(), r.sin())
}

/// Chirp-z evaluation of `sum_m c_m exp(i k_m (w + L))` at the n points
/// `w_j = offset + j * spacing`, as one circular convolution.
fn bluestein_eval(coeffs: &[Complex64], half_length: f64, offset: f64, spacing: f64) -> Vec<Complex64> {
    let n = coeffs.len();
    let half = (n / 2) as i64;
    let phi = std::f64::consts::PI / half_length;
    let w0 = offset + half_length;
    let beta = 0.5 * phi * spacing; // alpha / 2

    let n2 = (2 * n).next_power_of_two();
    let zero = Complex64::new(0.0, 0.0);

    // A_i = c_{m(i)} * exp(i phi m w0) * exp(i beta m^2), m = i - n/2
    let mut a = vec![zero; n2];
    for (i, slot) in a.iter_mut().enumerate().take(n) {
        let m = i as i64 - half;
        let c = coeffs[(m.rem_euclid(n as i64)) as usize];
        let mf = m as f64;
        *slot = c * expi_scaled(phi * w0, mf) * expi_scaled(beta, mf * mf);
    }

    // K[(q') mod n2] = exp(-i beta (q' + n/2)^2) for q' in [-(n-1), n-1]
    let mut kernel = vec![zero; n2];
    for qp in -(n as i64 - 1)..=(n as i64 - 1) {
        let q = (qp + half) as f64;
        kernel[qp.rem_euclid(n2 as i64) as usize] = expi_scaled(-beta, q * q);
    }

    fft::forward(&mut a);
    fft::forward(&mut kernel);
    for (av, kv) in a.iter_mut().zip(kernel.iter()) {
        *av *= *kv;
    }
    fft::inverse(&mut a);

    (0..n)
        .map(|j| {
            let jf = j as f64;
            a[j] * expi_scaled(beta, jf * jf)
        })
        .collect()
}
