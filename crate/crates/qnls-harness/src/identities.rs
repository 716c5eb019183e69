//! The static identity suite: every closed-form fact about the ground
//! state, the sharp constant, and the linearized operators, measured at two
//! resolutions and reported with its tolerance and oracle.

use std::sync::Arc;

use serde::Serialize;

use qnls::diagnostics::{energy, gn_ratio};
use qnls::ground_state::{constants, ode_residual, q_cubed_field, q_field, q_prime_field};
use qnls::linearized::{apply_operator, assemble, low_spectrum, OperatorKind};
use qnls::spectral::{inner_product, l2_norm};
use qnls::Grid;

// Oracle values: high-resolution quadrature cross-checked against the
// closed forms sqrt(3) pi/2, 3, 3 sqrt(3) pi/4, sqrt(3) pi/4.
const MASS_SQ: f64 = 2.720699046351327;
const L4_FOURTH: f64 = 3.0;
const L6_SIXTH: f64 = 4.08104856952699;
const GRAD_SQ: f64 = 1.3603495231756633;

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub grid: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    /// Whether the tolerance is on the relative or absolute deviation.
    pub relative: bool,
    pub pass: bool,
    /// Where the expected value comes from.
    pub oracle: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
    pub all_pass: bool,
}

fn push(
    checks: &mut Vec<IdentityCheck>,
    grid_label: &str,
    name: &str,
    measured: f64,
    expected: f64,
    tolerance: f64,
    relative: bool,
    oracle: &str,
) {
    let dev = if relative {
        (measured - expected).abs() / expected.abs().max(f64::MIN_POSITIVE)
    } else {
        (measured - expected).abs()
    };
    checks.push(IdentityCheck {
        name: name.to_string(),
        grid: grid_label.to_string(),
        measured,
        expected,
        tolerance,
        relative,
        pass: dev <= tolerance,
        oracle: oracle.to_string(),
    });
}

fn check_grid(checks: &mut Vec<IdentityCheck>, grid: &Arc<Grid>) -> anyhow::Result<()> {
    let label = format!("L={},n={}", grid.half_length(), grid.n_points());
    let q = q_field(grid);

    push(
        checks,
        &label,
        "ground_state_equation_residual",
        ode_residual(grid),
        0.0,
        1e-9,
        false,
        "Q solves its defining equation exactly",
    );
    push(
        checks,
        &label,
        "zero_energy",
        energy(&q),
        0.0,
        1e-9,
        false,
        "dilation identity forces E(Q) = 0",
    );
    let c = constants(grid).map_err(|e| anyhow::anyhow!("{e}"))?;
    push(
        checks,
        &label,
        "gradient_sextic_relation",
        c.grad_sq - c.l6_sixth / 3.0,
        0.0,
        1e-9,
        false,
        "zero energy ties the gradient to the sextic norm",
    );
    push(
        checks,
        &label,
        "mass_sq",
        c.mass_sq,
        MASS_SQ,
        1e-8,
        true,
        "quadrature of sqrt(3) sech(2x); closed form sqrt(3) pi/2",
    );
    push(
        checks,
        &label,
        "l4_fourth",
        c.l4_fourth,
        L4_FOURTH,
        1e-8,
        true,
        "quadrature of 3 sech^2(2x); antiderivative tanh(2x)/2",
    );
    push(
        checks,
        &label,
        "l6_sixth",
        c.l6_sixth,
        L6_SIXTH,
        1e-8,
        true,
        "quadrature of 3^(3/2) sech^3(2x); closed form 3 sqrt(3) pi/4",
    );
    push(
        checks,
        &label,
        "grad_sq",
        c.grad_sq,
        GRAD_SQ,
        1e-8,
        true,
        "quadrature of |Q'|^2; closed form sqrt(3) pi/4",
    );
    push(
        checks,
        &label,
        "sharp_ratio_saturation",
        gn_ratio(&q).map_err(|e| anyhow::anyhow!("{e}"))?,
        1.0,
        1e-9,
        false,
        "the interpolation inequality is saturated on the soliton orbit",
    );

    // pairings entering the modulation Jacobian, two quadrature routes
    let qx = q_prime_field(grid);
    let q3 = q_cubed_field(grid);
    let h = grid.spacing();
    let mut dilation_pairing = 0.0;
    let mut boost_pairing = 0.0;
    for (j, (qv, qxv)) in q.values().iter().zip(qx.values()).enumerate() {
        let x = grid.point(j);
        dilation_pairing += (qv.re / 2.0 + x * qxv.re) * qv.re.powi(3);
        boost_pairing += x * qv.re * qxv.re;
    }
    push(
        checks,
        &label,
        "dilation_pairing",
        dilation_pairing * h,
        c.l4_fourth / 4.0,
        1e-9,
        false,
        "(Q/2 + xQ_x, Q^3) equals a quarter of the quartic norm",
    );
    push(
        checks,
        &label,
        "boost_pairing",
        boost_pairing * h,
        -c.mass_sq / 2.0,
        1e-9,
        false,
        "(ixQ, iQ_x) equals minus half the mass",
    );

    // spectral facts of the linearized operators, as applied residuals
    let mut r = apply_operator(OperatorKind::LPlus, &q3).map_err(|e| anyhow::anyhow!("{e}"))?;
    for (rv, v) in r.values_mut().iter_mut().zip(q3.values()) {
        *rv += 8.0 * v;
    }
    push(
        checks,
        &label,
        "lplus_eigenrelation_q3",
        l2_norm(&r),
        0.0,
        1e-9,
        false,
        "Q^3 is the negative eigenvector at -8",
    );
    push(
        checks,
        &label,
        "lplus_kernel_qx",
        l2_norm(&apply_operator(OperatorKind::LPlus, &qx).map_err(|e| anyhow::anyhow!("{e}"))?),
        0.0,
        1e-9,
        false,
        "translation direction is annihilated",
    );
    push(
        checks,
        &label,
        "lminus_kernel_q",
        l2_norm(&apply_operator(OperatorKind::LMinus, &q).map_err(|e| anyhow::anyhow!("{e}"))?),
        0.0,
        1e-9,
        false,
        "the defining equation puts Q in the kernel",
    );

    // dense eigen-solve only on desk-scale matrices
    if grid.n_points() <= 1024 {
        let op = assemble(OperatorKind::LPlus, grid).map_err(|e| anyhow::anyhow!("{e}"))?;
        let pairs = low_spectrum(&op, 2).map_err(|e| anyhow::anyhow!("{e}"))?;
        push(
            checks,
            &label,
            "lplus_bottom_eigenvalue",
            pairs[0].value,
            -8.0,
            1e-6,
            false,
            "dense symmetric eigen-solve",
        );
        let align = inner_product(&pairs[0].vector, &q3).map_err(|e| anyhow::anyhow!("{e}"))?
            / (l2_norm(&pairs[0].vector) * l2_norm(&q3));
        push(
            checks,
            &label,
            "lplus_bottom_alignment",
            align.abs(),
            1.0,
            1e-8,
            false,
            "bottom eigenvector is parallel to Q^3",
        );
        push(
            checks,
            &label,
            "lplus_second_eigenvalue",
            pairs[1].value,
            0.0,
            1e-6,
            false,
            "dense symmetric eigen-solve",
        );
    }
    Ok(())
}

/// Run the suite at two resolutions (the default pair, or the caller's).
pub fn check_identities(grids: Option<Vec<Arc<Grid>>>) -> anyhow::Result<IdentityReport> {
    let grids = match grids {
        Some(g) => g,
        None => vec![
            Grid::new(32.0, 1024).map_err(|e| anyhow::anyhow!("{e}"))?,
            Grid::new(32.0, 2048).map_err(|e| anyhow::anyhow!("{e}"))?,
        ],
    };
    let mut checks = Vec::new();
    for g in &grids {
        check_grid(&mut checks, g)?;
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(IdentityReport { checks, all_pass })
}

pub fn print_report(report: &IdentityReport) {
    for c in &report.checks {
        println!(
            "{} [{}] {}: measured {:+.9e}, expected {:+.3e} ({}tol {:.1e}) — {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.grid,
            c.name,
            c.measured,
            c.expected,
            if c.relative { "rel " } else { "" },
            c.tolerance,
            c.oracle,
        );
    }
    println!(
        "identity suite: {}/{} checks passed",
        report.checks.iter().filter(|c| c.pass).count(),
        report.checks.len()
    );
}
