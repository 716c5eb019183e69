use std::sync::Arc;

use crate::error::{Error, Result};

/// Periodic computational box [-L, L) with n equispaced points.
///
/// Wavenumbers follow the standard FFT layout: index j carries
/// k_j = (pi/L) * j for j < n/2 and k_j = (pi/L) * (j - n) for j >= n/2,
/// so k at index j and index n-j are negatives of each other and index
/// n/2 holds the (signed-negative) Nyquist mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    half_length: f64,
    n_points: usize,
    spacing: f64,
    wavenumbers: Vec<f64>,
}

impl Grid {
    pub fn new(half_length: f64, n_points: usize) -> Result<Arc<Self>> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "half_length must be positive and finite, got {half_length}"
            )));
        }
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "n_points must be a power of two >= 16, got {n_points}"
            )));
        }
        let spacing = 2.0 * half_length / n_points as f64;
        let base = std::f64::consts::PI / half_length;
        let wavenumbers = (0..n_points)
            .map(|j| {
                let m = if j < n_points / 2 {
                    j as i64
                } else {
                    j as i64 - n_points as i64
                };
                base * m as f64
            })
            .collect();
        Ok(Arc::new(Self {
            half_length,
            n_points,
            spacing,
            wavenumbers,
        }))
    }

    /// Default desk-scale box. Chosen so the ground state's tail at the
    /// boundary sits below 1e-13 and wrap-around stays under quadrature
    /// tolerance.
    pub fn default_box() -> Arc<Self> {
        Self::new(32.0, 2048).expect("default grid parameters are valid")
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Largest resolved wavenumber magnitude (the Nyquist mode).
    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI / self.spacing
    }

    pub fn point(&self, j: usize) -> f64 {
        -self.half_length + self.spacing * j as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|j| self.point(j))
    }
}
