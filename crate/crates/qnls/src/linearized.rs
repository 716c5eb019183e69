//! The linearized operators around Q: application, dense assembly,
//! eigen-analysis, constrained coercivity, and the energy expansion of
//! E(Q + eps).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::diagnostics::energy;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::ground_state::{constants, q_field};
use crate::spectral::{derivative, inner_product, l2_norm};

/// Which linearized block: `LPlus` couples to the real part (potential
/// -5Q^4), `LMinus` to the imaginary part (potential -Q^4).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    LPlus,
    LMinus,
}

impl OperatorKind {
    fn potential_factor(&self) -> f64 {
        match self {
            OperatorKind::LPlus => 5.0,
            OperatorKind::LMinus => 1.0,
        }
    }
}

/// `-f_xx - c Q^4 f + f` with spectral differentiation, applied
/// componentwise (the operators are real-linear).
pub fn apply_operator(which: OperatorKind, f: &Field) -> Result<Field> {
    let q = q_field(f.grid());
    let c = which.potential_factor();
    let mut out = derivative(f, 2)?;
    for ((o, v), qv) in out.values_mut().iter_mut().zip(f.values()).zip(q.values()) {
        let q4 = qv.re.powi(4);
        *o = -*o - c * q4 * v + v;
    }
    Ok(out)
}

/// Dense discretization of a linearized operator.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub which: OperatorKind,
    pub grid: Arc<Grid>,
    pub entries: DMatrix<f64>,
}

impl OperatorMatrix {
    /// max |M - M^T|.
    pub fn asymmetry(&self) -> f64 {
        let m = &self.entries;
        let n = m.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        worst
    }
}

/// Assemble the dense matrix by applying the operator to unit samples, so
/// the matrix action agrees with [`apply_operator`] by construction.
pub fn assemble(which: OperatorKind, grid: &Arc<Grid>) -> Result<OperatorMatrix> {
    let n = grid.n_points();
    let mut entries = DMatrix::zeros(n, n);
    let mut unit = Field::zeros(grid.clone());
    for j in 0..n {
        unit.values_mut()[j] = Complex64::new(1.0, 0.0);
        let col = apply_operator(which, &unit)?;
        for (i, v) in col.values().iter().enumerate() {
            entries[(i, j)] = v.re;
        }
        unit.values_mut()[j] = Complex64::new(0.0, 0.0);
    }
    // symmetrize away the roundoff asymmetry of the FFT round trip
    let entries = (entries.clone() + entries.transpose()) * 0.5;
    Ok(OperatorMatrix {
        which,
        grid: grid.clone(),
        entries,
    })
}

/// An eigenvalue with its eigenvector, normalized in the quadrature L^2
/// inner product.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Field,
}

/// Lowest `count` eigenpairs by dense symmetric eigen-solve.
pub fn low_spectrum(op: &OperatorMatrix, count: usize) -> Result<Vec<EigenPair>> {
    if count == 0 || count > 10 {
        return Err(Error::InvalidArgument(format!(
            "count must be in 1..=10, got {count}"
        )));
    }
    let eig = nalgebra::SymmetricEigen::new(op.entries.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let h = op.grid.spacing();
    let scale = 1.0 / h.sqrt(); // Euclidean-unit -> L^2-unit
    order
        .into_iter()
        .take(count)
        .map(|idx| {
            let col = eig.eigenvectors.column(idx);
            let vector = Field::new(
                op.grid.clone(),
                col.iter().map(|&v| Complex64::new(v * scale, 0.0)).collect(),
            )?;
            Ok(EigenPair {
                value: eig.eigenvalues[idx],
                vector,
            })
        })
        .collect()
}

/// L^2 residual ‖op v - mu v‖ of an eigenpair.
pub fn eigen_residual_for(which: OperatorKind, pair: &EigenPair) -> Result<f64> {
    let mut r = apply_operator(which, &pair.vector)?;
    for (rv, v) in r.values_mut().iter_mut().zip(pair.vector.values()) {
        *rv -= pair.value * v;
    }
    Ok(l2_norm(&r))
}

fn real_vector(f: &Field) -> DVector<f64> {
    DVector::from_iterator(f.values().len(), f.values().iter().map(|v| v.re))
}

/// Quadrature-weighted Gram–Schmidt; returns vectors orthonormal in the
/// h-weighted inner product.
fn orthonormalize(h: f64, raw: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for v in raw {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = h * w.dot(b);
                w -= b * c;
            }
        }
        let norm = (h * w.dot(&w)).sqrt();
        if norm > 1e-12 {
            basis.push(w / norm);
        }
    }
    basis
}

fn project_out(h: f64, basis: &[DVector<f64>], v: &mut DVector<f64>) {
    for _ in 0..2 {
        for b in basis {
            let c = h * v.dot(b);
            *v -= b * c;
        }
    }
}

/// Minimum of (op u, u) / ||u||_{H^1}^2 over u orthogonal to the given
/// constraint fields: a projected dense eigen-solve cross-checked against
/// random trials. Returns the empirical coercivity constant.
pub fn constrained_coercivity(
    which: OperatorKind,
    constraints: &[Field],
    trials: usize,
    grid: &Arc<Grid>,
    seed: u64,
) -> Result<f64> {
    let op = assemble(which, grid)?;
    let n = grid.n_points();
    let h = grid.spacing();

    // H^1 Gram matrix h (I + D1^T D1) via spectral first derivative columns
    let mut d1 = DMatrix::zeros(n, n);
    let mut unit = Field::zeros(grid.clone());
    for j in 0..n {
        unit.values_mut()[j] = Complex64::new(1.0, 0.0);
        let col = derivative(&unit, 1)?;
        for (i, v) in col.values().iter().enumerate() {
            d1[(i, j)] = v.re;
        }
        unit.values_mut()[j] = Complex64::new(0.0, 0.0);
    }
    let b = (DMatrix::identity(n, n) + d1.transpose() * &d1) * h;
    let a = &op.entries * h;
    let a = (a.clone() + a.transpose()) * 0.5;
    let b = (b.clone() + b.transpose()) * 0.5;

    let basis = orthonormalize(h, &constraints.iter().map(real_vector).collect::<Vec<_>>());

    // transform to the B-inner product: minimize w^T (L^-1 A L^-T) w / w^T w
    let chol = nalgebra::Cholesky::new(b.clone())
        .ok_or_else(|| Error::Numerical {
            reason: "H^1 Gram matrix not positive definite".into(),
            last_good: None,
        })?;
    let linv_a = chol.l_dirty().clone();
    let l = linv_a; // L from B = L L^T
    // w-space constraint directions: L^T v_i (so that w ⊥ them ⇔ u ⊥_B' ...)
    // We need u ⊥_h v_i with u = L^{-T} w, i.e. h v_i^T L^{-T} w = 0:
    // direction in w-space is L^{-1} (h v_i) ... solve L y = v_i.
    let mut w_dirs: Vec<DVector<f64>> = Vec::new();
    for v in &basis {
        let mut y = v.clone();
        l.solve_lower_triangular_mut(&mut y);
        w_dirs.push(y);
    }
    let w_basis = orthonormalize(1.0, &w_dirs);

    // A~ = L^{-1} A L^{-T}
    let mut at = a.clone();
    // solve L X = A  (column-wise)
    for j in 0..n {
        let mut col = at.column(j).clone_owned();
        l.solve_lower_triangular_mut(&mut col);
        at.set_column(j, &col);
    }
    let mut at_t = at.transpose();
    for j in 0..n {
        let mut col = at_t.column(j).clone_owned();
        l.solve_lower_triangular_mut(&mut col);
        at_t.set_column(j, &col);
    }
    let mut a_tilde = at_t;
    a_tilde = (a_tilde.clone() + a_tilde.transpose()) * 0.5;

    // project out the constraint directions in w-space
    for b_dir in &w_basis {
        let ab = &a_tilde * b_dir;
        let ba = b_dir.transpose() * &a_tilde;
        let bb = (b_dir.transpose() * &ab)[(0, 0)];
        a_tilde -= &ab * b_dir.transpose();
        a_tilde -= b_dir * ba;
        a_tilde += b_dir * b_dir.transpose() * bb;
        // push the constrained directions to a large positive shift so they
        // cannot appear as the minimum
        a_tilde += b_dir * b_dir.transpose() * 1e6;
    }
    a_tilde = (a_tilde.clone() + a_tilde.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(a_tilde);
    let mut c_min = f64::INFINITY;
    for v in eig.eigenvalues.iter() {
        c_min = c_min.min(*v);
    }

    // random-trial cross-check
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let k_band = 4.0;
    for _ in 0..trials {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (m, c) in coeffs.iter_mut().enumerate() {
            let k = grid.wavenumbers()[m];
            if k.abs() <= k_band {
                *c = Complex64::new(gauss(&mut rng), gauss(&mut rng));
            }
        }
        let f = Field::from_coefficients(grid.clone(), coeffs)?;
        let mut v = real_vector(&f);
        project_out(h, &basis, &mut v);
        let h1 = (v.dot(&(&b * &v))).max(f64::MIN_POSITIVE);
        let quad = v.dot(&(&a * &v));
        c_min = c_min.min(quad / h1);
    }
    Ok(c_min)
}

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    // Box–Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// The exact bookkeeping of E(Q + eps):
///
/// `direct = ground - mass_defect/2 + quad_plus + quad_minus + remainder`
/// up to (eps, Q'' + Q^5 - Q), which sits at the grid's equation-residual
/// floor. Under the mass constraint `mass_defect = 0` and the linear term
/// equals `linear_mass_term = ||eps||^2 / 2`.
#[derive(Debug, Clone, Copy)]
pub struct EnergyBreakdown {
    pub direct: f64,
    pub ground: f64,
    /// ||Q + eps||^2 - ||Q||^2.
    pub mass_defect: f64,
    /// ||eps||^2 / 2: the linear term's value under the mass constraint.
    pub linear_mass_term: f64,
    /// (1/2)(L+ eps1, eps1).
    pub quad_plus: f64,
    /// (1/2)(L- eps2, eps2).
    pub quad_minus: f64,
    /// All cubic-and-higher terms, computed explicitly.
    pub remainder: f64,
    pub decomposed: f64,
}

impl EnergyBreakdown {
    pub fn discrepancy(&self) -> f64 {
        self.direct - self.decomposed
    }
}

pub fn energy_expansion(eps: &Field) -> Result<EnergyBreakdown> {
    let e_l2 = l2_norm(eps);
    if e_l2 > 0.5 {
        return Err(Error::Domain(format!(
            "energy expansion holds for ||eps|| <= 0.5, got {e_l2:.3}"
        )));
    }
    let grid = eps.grid().clone();
    let q = q_field(&grid);
    let h = grid.spacing();

    let u = Field::new(
        grid.clone(),
        q.values().iter().zip(eps.values()).map(|(a, b)| a + b).collect(),
    )?;
    let direct = energy(&u);
    let ground = energy(&q);
    let mass_q = constants(&grid)?.mass_sq;
    let mass_defect = crate::diagnostics::mass(&u) - mass_q;

    let eps1 = Field::new(
        grid.clone(),
        eps.values().iter().map(|v| Complex64::new(v.re, 0.0)).collect(),
    )?;
    let eps2 = Field::new(
        grid.clone(),
        eps.values().iter().map(|v| Complex64::new(v.im, 0.0)).collect(),
    )?;
    let quad_plus = 0.5 * inner_product(&apply_operator(OperatorKind::LPlus, &eps1)?, &eps1)?;
    let quad_minus = 0.5 * inner_product(&apply_operator(OperatorKind::LMinus, &eps2)?, &eps2)?;

    // cubic and higher: -[ 2∫Q^3 e1 |eps|^2 + (1/2)∫Q^2 |eps|^4
    //                      + (1/6)∫(2 Q e1 + |eps|^2)^3 ]
    let mut cubic = 0.0;
    let mut quartic = 0.0;
    let mut bcube = 0.0;
    for (qv, ev) in q.values().iter().zip(eps.values()) {
        let qr = qv.re;
        let m2 = ev.norm_sqr();
        cubic += qr.powi(3) * ev.re * m2;
        quartic += qr * qr * m2 * m2;
        let b = 2.0 * qr * ev.re + m2;
        bcube += b * b * b;
    }
    let remainder = -(2.0 * cubic + 0.5 * quartic + bcube / 6.0) * h;

    let linear_mass_term = 0.5 * e_l2 * e_l2;
    let decomposed = ground - 0.5 * mass_defect + quad_plus + quad_minus + remainder;
    Ok(EnergyBreakdown {
        direct,
        ground,
        mass_defect,
        linear_mass_term,
        quad_plus,
        quad_minus,
        remainder,
        decomposed,
    })
}
