//! Acceptance suite: one test per numbered criterion, each printing a
//! PASS/FAIL line with the measured value and its tolerance. Criteria 1-6
//! are static identities, 7-12 exercise the solver and the modulation
//! machinery. Criterion 13 (run formats and manifest atomicity) lives in
//! the CLI crate's acceptance tests.
//!
//! Grids: static identities run on the default box (L = 32, n = 2048);
//! the heavier dynamical checks state smaller n where the physics allows.

use std::sync::Arc;

use num_complex::Complex64;
use qnls::diagnostics::{
    energy, gn_ratio, mass, morawetz_potential, variance_and_virial, MorawetzConfig,
};
use qnls::evolution::{convergence_order, evolve, SolverConfig};
use qnls::field::Field;
use qnls::grid::Grid;
use qnls::ground_state::{constants, ode_residual, q_cubed_field, q_field, q_prime_field};
use qnls::linearized::{apply_operator, assemble, low_spectrum, OperatorKind};
use qnls::modulation::{
    decompose, ode_residuals, seed_guess, track, virial_in_s, DecomposeMode,
};
use qnls::perturb::{admissible_mass_renormalized, band_limited_noise, NoiseSpec};
use qnls::spectral::{derivative, inner_product, l2_norm};
use qnls::symmetries::{
    apply, galilean_boost, invert, pseudoconformal_soliton, ModulationParams,
};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "{} criterion {criterion}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion}: {detail}");
}

fn default_grid() -> Arc<Grid> {
    Grid::new(32.0, 2048).unwrap()
}

fn l2_diff(a: &Field, b: &Field) -> f64 {
    let mut d = a.clone();
    for (x, y) in d.values_mut().iter_mut().zip(b.values()) {
        *x -= y;
    }
    l2_norm(&d)
}

#[test]
fn criterion_01_ground_state_equation() {
    let res = ode_residual(&default_grid());
    report(
        "1",
        res <= 1e-9,
        &format!("ground-state equation residual {res:.3e} (tol 1e-9)"),
    );
}

#[test]
fn criterion_02_zero_energy_and_pohozaev() {
    let g = default_grid();
    let e = energy(&q_field(&g)).abs();
    let defect = constants(&g).unwrap().pohozaev_defect();
    report(
        "2",
        e <= 1e-9 && defect <= 1e-9,
        &format!("|E(Q)| = {e:.3e}, gradient/sextic relation defect {defect:.3e} (tol 1e-9)"),
    );
}

#[test]
fn criterion_03_functional_constants() {
    // oracle values: high-resolution quadrature, cross-checked against the
    // closed forms sqrt(3)pi/2, 3, 3 sqrt(3) pi / 4, sqrt(3) pi / 4
    const MASS_SQ: f64 = 2.720699046351327;
    const L4: f64 = 3.0;
    const L6: f64 = 4.08104856952699;
    const GRAD: f64 = 1.3603495231756633;
    let c = constants(&default_grid()).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let worst = [
        rel(c.mass_sq, MASS_SQ),
        rel(c.l4_fourth, L4),
        rel(c.l6_sixth, L6),
        rel(c.grad_sq, GRAD),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    report(
        "3",
        worst <= 1e-8,
        &format!(
            "constants ({:.9}, {:.9}, {:.9}, {:.9}) vs oracles, worst rel err {worst:.3e} (tol 1e-8)",
            c.mass_sq, c.l4_fourth, c.l6_sixth, c.grad_sq
        ),
    );
}

#[test]
fn criterion_04_sharp_interpolation_ratio() {
    let g = default_grid();
    let at_q = gn_ratio(&q_field(&g)).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..1000u64 {
        let amp = 10f64.powf(-2.0 + 2.0 * (seed % 7) as f64 / 6.0);
        let noise = band_limited_noise(
            &g,
            &NoiseSpec {
                amplitude: amp,
                k_band: 2.0 + (seed % 11) as f64,
                even: false,
            },
            seed,
        )
        .unwrap();
        let r = gn_ratio(&noise).unwrap();
        worst = worst.max(r);
    }
    report(
        "4",
        (at_q - 1.0).abs() <= 1e-9 && worst <= 1.0 + 1e-9,
        &format!(
            "ratio(Q) - 1 = {:.3e} (tol 1e-9); max over 1000 random fields {worst:.6} (bound 1 + 1e-9)",
            at_q - 1.0
        ),
    );
}

#[test]
fn criterion_05_linearized_spectrum() {
    // eigen-solve on n = 1024 (spectrally converged well below the
    // tolerance); residual identities on the default grid
    let g_eig = Grid::new(32.0, 1024).unwrap();
    let op = assemble(OperatorKind::LPlus, &g_eig).unwrap();
    let pairs = low_spectrum(&op, 2).unwrap();
    let bottom = pairs[0].value;
    let q3 = q_cubed_field(&g_eig);
    let align = inner_product(&pairs[0].vector, &q3).unwrap()
        / (l2_norm(&pairs[0].vector) * l2_norm(&q3));

    let g = default_grid();
    let r_kernel = l2_norm(&apply_operator(OperatorKind::LPlus, &q_prime_field(&g)).unwrap());
    let r_minus = l2_norm(&apply_operator(OperatorKind::LMinus, &q_field(&g)).unwrap());
    report(
        "5",
        (bottom + 8.0).abs() <= 1e-6
            && align.abs() >= 1.0 - 1e-8
            && r_kernel <= 1e-9
            && r_minus <= 1e-9,
        &format!(
            "lowest eigenvalue {bottom:.9} (tol -8 ± 1e-6), alignment 1 - {:.2e}, \
             kernel residuals {r_kernel:.2e}, {r_minus:.2e} (tol 1e-9)",
            1.0 - align.abs()
        ),
    );
}

/// Measured once on this ensemble (seed 0..100 below) and frozen; the
/// criterion asks for regression stability within 20%.
const COERCIVITY_REGRESSION: f64 = 0.4917;

#[test]
fn criterion_06_constrained_energy_coercivity() {
    let g = default_grid();
    let q = q_field(&g);
    let mut c_min = f64::INFINITY;
    for seed in 0..100u64 {
        let amp = 1e-2 * 10f64.powf(-((seed % 3) as f64) / 2.0);
        let raw = band_limited_noise(
            &g,
            &NoiseSpec {
                amplitude: amp,
                k_band: 4.0,
                even: true,
            },
            seed,
        )
        .unwrap();
        let eps = admissible_mass_renormalized(&raw, false).unwrap();
        let mut u = q.clone();
        for (uv, ev) in u.values_mut().iter_mut().zip(eps.values()) {
            *uv += ev;
        }
        let e = energy(&u);
        let h1 = l2_norm(&eps).powi(2) + l2_norm(&derivative(&eps, 1).unwrap()).powi(2);
        c_min = c_min.min(e / h1);
    }
    let pass = c_min > 0.0 && (c_min / COERCIVITY_REGRESSION - 1.0).abs() <= 0.2;
    report(
        "6",
        pass,
        &format!(
            "measured coercivity constant {c_min:.4} over 100 admissible even perturbations \
             (frozen {COERCIVITY_REGRESSION} ± 20%)"
        ),
    );
}

#[test]
fn criterion_07_solver_exactness_on_the_orbit() {
    let g = default_grid();
    let q = q_field(&g);
    let cfg = SolverConfig::default();
    let run = evolve(&q, 1.0, &cfg).unwrap();
    let fin = run.final_state();
    let mut exact = q.clone();
    let rot = Complex64::from_polar(1.0, 1.0);
    for v in exact.values_mut() {
        *v *= rot;
    }
    let err = l2_diff(&fin.field, &exact);
    let order = convergence_order(&q, 0.5, 4e-3, &cfg)
        .unwrap()
        .order
        .unwrap();
    let pass = err <= 1e-6
        && (1.8..=2.2).contains(&order)
        && fin.mass_drift <= 1e-10
        && fin.energy_drift <= 1e-8;
    report(
        "7",
        pass,
        &format!(
            "|evolve(Q,1) - e^i Q| = {err:.3e} (tol 1e-6), order {order:.3}, \
             mass drift {:.2e} (tol 1e-10), energy drift {:.2e} (tol 1e-8)",
            fin.mass_drift, fin.energy_drift
        ),
    );
}

#[test]
fn criterion_08_pseudoconformal_family() {
    let g = default_grid();
    let q_mass = mass(&q_field(&g));
    let big_t = 0.0;
    let mut worst_mass = 0.0f64;
    for t in [-2.0, -1.1, -0.55] {
        let p = pseudoconformal_soliton(t, big_t, 1.0, 0.3, 0.0, 0.0, &g).unwrap();
        worst_mass = worst_mass.max((mass(&p) - q_mass).abs());
    }

    // evolve across the window [T-2, T-0.5], sampling uniformly in t
    let mut u = pseudoconformal_soliton(-2.0, big_t, 1.0, 0.0, 0.0, 0.0, &g).unwrap();
    let mut cfg = SolverConfig::default();
    cfg.output_every = usize::MAX;
    cfg.blowup_lambda_floor = 1e-3;
    let n_frames = 25;
    let mut frames = vec![(-2.0f64, u.clone())];
    let dt_frame = 1.5 / (n_frames - 1) as f64;
    for i in 1..n_frames {
        let run = evolve(&u, dt_frame, &cfg).unwrap();
        u = run.final_state().field.clone();
        frames.push((-2.0 + i as f64 * dt_frame, u.clone()));
    }
    let series = track(&frames, DecomposeMode::Symmetric2, None).unwrap();
    assert!(series.truncated.is_none(), "{:?}", series.truncated);
    // least-squares trend lambda ~ lambda_bar * (T - t)
    let (mut num, mut den) = (0.0, 0.0);
    for r in &series.rows {
        let tau = big_t - r.t;
        num += r.lambda * tau;
        den += tau * tau;
    }
    let slope = num / den;
    let mut worst_dev = 0.0f64;
    for r in &series.rows {
        let tau = big_t - r.t;
        worst_dev = worst_dev.max((r.lambda / (slope * tau) - 1.0).abs());
    }
    report(
        "8",
        worst_mass <= 1e-10 && worst_dev <= 0.05,
        &format!(
            "family mass defect {worst_mass:.2e} (tol 1e-10); evolved window \
             lambda/(T-t) trend deviation {worst_dev:.4} (tol 0.05, trend {slope:.4})"
        ),
    );
}

#[test]
fn criterion_09_modulation_round_trip_and_stability() {
    let g = default_grid();
    let q = q_field(&g);
    let p_star = ModulationParams {
        lambda: 1.1,
        gamma: 2.0,
        x0: 0.3,
        xi: 0.25,
    };
    let u = apply(&p_star, &q).unwrap();
    let d = decompose(&u, DecomposeMode::Full4, &seed_guess(&u).unwrap()).unwrap();
    let rec = invert(&d.params);
    let tau = std::f64::consts::TAU;
    let dg = (rec.gamma - p_star.gamma).rem_euclid(tau);
    let param_err = (rec.lambda / p_star.lambda - 1.0)
        .abs()
        .max(dg.min(tau - dg))
        .max((rec.x0 - p_star.x0).abs())
        .max((rec.xi - p_star.xi).abs());

    // stability: recovered-parameter error scales linearly over two decades
    let mut errs = Vec::new();
    for amp in [1e-4, 1e-3, 1e-2] {
        let noise = band_limited_noise(
            &g,
            &NoiseSpec {
                amplitude: amp,
                k_band: 3.0,
                even: false,
            },
            17,
        )
        .unwrap();
        let mut pert = q.clone();
        for (pv, nv) in pert.values_mut().iter_mut().zip(noise.values()) {
            *pv += nv;
        }
        let un = apply(&p_star, &pert).unwrap();
        let dn = decompose(&un, DecomposeMode::Full4, &seed_guess(&un).unwrap()).unwrap();
        let rn = invert(&dn.params);
        let dgn = (rn.gamma - p_star.gamma).rem_euclid(tau);
        let e = (rn.lambda / p_star.lambda - 1.0)
            .abs()
            .max(dgn.min(tau - dgn))
            .max((rn.x0 - p_star.x0).abs())
            .max((rn.xi - p_star.xi).abs())
            + dn.eps_l2;
        errs.push(e / amp);
    }
    let spread = errs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        / errs.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = param_err <= 1e-9 && d.eps_l2 <= 1e-10 && spread <= 3.0;
    report(
        "9",
        pass,
        &format!(
            "round-trip parameter error {param_err:.2e} (tol 1e-9), eps {:.2e} (tol 1e-10); \
             error/amplitude over two decades {errs:.3?} (spread {spread:.2} <= 3)",
            d.eps_l2
        ),
    );
}

fn perturbed_run(amp: f64, grid: &Arc<Grid>) -> qnls::modulation::ModulationSeries {
    let q = q_field(grid);
    let noise = band_limited_noise(
        grid,
        &NoiseSpec {
            amplitude: amp,
            k_band: 2.0,
            even: false,
        },
        11,
    )
    .unwrap();
    let mut u0 = q.clone();
    for (uv, nv) in u0.values_mut().iter_mut().zip(noise.values()) {
        *uv += nv;
    }
    let mut cfg = SolverConfig::default();
    cfg.output_every = 4;
    let run = evolve(&u0, 0.25, &cfg).unwrap();
    let frames: Vec<(f64, Field)> = run.steps.iter().map(|s| (s.t, s.field.clone())).collect();
    track(&frames, DecomposeMode::Full4, Some(ModulationParams::identity())).unwrap()
}

fn interior_max(vals: &[f64]) -> f64 {
    vals[1..vals.len() - 1]
        .iter()
        .fold(0.0f64, |a, b| a.max(b.abs()))
}

#[test]
fn criterion_10_modulation_parameter_laws() {
    // exact soliton series: all four residuals at the discretization floor
    let g = default_grid();
    let q = q_field(&g);
    let traj: Vec<(f64, Field)> = (0..21)
        .map(|i| {
            let t = 0.025 * i as f64;
            let rot = Complex64::from_polar(1.0, t);
            (
                t,
                Field::new(g.clone(), q.values().iter().map(|v| rot * v).collect()).unwrap(),
            )
        })
        .collect();
    let series = track(&traj, DecomposeMode::Full4, Some(ModulationParams::identity())).unwrap();
    let res = ode_residuals(&series).unwrap();
    let mut exact_worst = 0.0f64;
    for k in 0..4 {
        let vals: Vec<f64> = res.iter().map(|r| r[k]).collect();
        exact_worst = exact_worst.max(interior_max(&vals));
    }

    // perturbed runs: quadratic shrink under amplitude halving
    let g_run = Grid::new(32.0, 1024).unwrap();
    let coarse = perturbed_run(2e-2, &g_run);
    let fine = perturbed_run(1e-2, &g_run);
    let rc = ode_residuals(&coarse).unwrap();
    let rf = ode_residuals(&fine).unwrap();
    let mut ratios = [0.0f64; 4];
    for k in 0..4 {
        let a: Vec<f64> = rc.iter().map(|r| r[k]).collect();
        let b: Vec<f64> = rf.iter().map(|r| r[k]).collect();
        ratios[k] = interior_max(&a) / interior_max(&b);
    }
    let shrink_ok = ratios.iter().all(|r| (3.0..=5.0).contains(r));
    report(
        "10",
        exact_worst <= 1e-8 && shrink_ok,
        &format!(
            "exact-series residual max {exact_worst:.2e} (tol 1e-8); \
             amplitude-halving shrink factors {ratios:.2?} (range 3..5)"
        ),
    );
}

#[test]
fn criterion_11_virial_identities() {
    // d^2V/dt^2 = 16E on an evolved boosted soliton
    let g = Grid::new(32.0, 1024).unwrap();
    let q = q_field(&g);
    let xi0 = 3.0 * std::f64::consts::PI / g.half_length();
    let boosted = galilean_boost(&q, xi0, 0.0);
    let mut cfg = SolverConfig::default();
    cfg.output_every = 200;
    let run = evolve(&boosted, 0.8, &cfg).unwrap();
    let frames: Vec<(f64, Field)> = run.steps.iter().map(|s| (s.t, s.field.clone())).collect();
    let samples = variance_and_virial(&frames).unwrap();
    let mut worst_second = 0.0f64;
    for s in &samples {
        if let Some(r) = s.second_residual {
            worst_second = worst_second.max(r / s.energy_16.abs());
        }
    }

    // and on the closed-form pseudoconformal window
    let pc: Vec<(f64, Field)> = (0..9)
        .map(|i| {
            let t = -2.0 + 0.125 * i as f64;
            (
                t,
                pseudoconformal_soliton(t, 0.0, 1.0, 0.0, 0.0, 0.0, &g).unwrap(),
            )
        })
        .collect();
    let pc_samples = variance_and_virial(&pc).unwrap();
    let mut worst_pc = 0.0f64;
    for s in &pc_samples {
        if let Some(r) = s.second_residual {
            worst_pc = worst_pc.max(r / s.energy_16.abs());
        }
    }

    // rescaled-time virial: exact series floor and quadratic shrink
    let g2 = default_grid();
    let q2 = q_field(&g2);
    let traj: Vec<(f64, Field)> = (0..21)
        .map(|i| {
            let t = 0.025 * i as f64;
            let rot = Complex64::from_polar(1.0, t);
            (
                t,
                Field::new(g2.clone(), q2.values().iter().map(|v| rot * v).collect()).unwrap(),
            )
        })
        .collect();
    let exact_series =
        track(&traj, DecomposeMode::Full4, Some(ModulationParams::identity())).unwrap();
    let exact_virial = interior_max(&virial_in_s(&exact_series).unwrap());

    let coarse = perturbed_run(2e-2, &g);
    let fine = perturbed_run(1e-2, &g);
    let shrink = interior_max(&virial_in_s(&coarse).unwrap())
        / interior_max(&virial_in_s(&fine).unwrap());

    let pass = worst_second <= 0.01
        && worst_pc <= 0.01
        && exact_virial <= 1e-8
        && (3.0..=5.0).contains(&shrink);
    report(
        "11",
        pass,
        &format!(
            "d2V/dt2 = 16E relative residual: boosted {worst_second:.2e}, pseudoconformal \
             {worst_pc:.2e} (tol 0.01); rescaled-time virial floor {exact_virial:.2e} (tol 1e-8), \
             shrink {shrink:.2} (range 3..5)"
        ),
    );
}

#[test]
fn criterion_12_morawetz_potential() {
    let g = default_grid();
    let q = q_field(&g);
    let cfg = MorawetzConfig::for_grid(g.half_length());
    let on_real = morawetz_potential(&q, &cfg).unwrap().abs();

    // literal iQ perturbation: the pairing (Q, Q/2 + xQ_x) vanishes, so the
    // potential stays at zero
    let mut iq = q.clone();
    for v in iq.values_mut() {
        *v += Complex64::new(0.0, 1e-2) * *v;
    }
    let on_iq = morawetz_potential(&iq, &cfg).unwrap().abs();

    // structure: u = Q + a(Q + iQ^3) has leading term -2a (Q^3, Q/2 + xQ_x)
    // = -2a ||Q||_4^4/4 and a genuine quadratic correction
    let q3 = q_cubed_field(&g);
    let c = constants(&g).unwrap();
    let lead_coeff = -2.0 * c.l4_fourth / 4.0;
    let dev = |a: f64| {
        let mut u = q.clone();
        for ((uv, qv), cv) in u.values_mut().iter_mut().zip(q.values()).zip(q3.values()) {
            *uv += a * qv + Complex64::new(0.0, a) * cv;
        }
        (morawetz_potential(&u, &cfg).unwrap() - a * lead_coeff).abs()
    };
    let d1 = dev(1e-2);
    let d2 = dev(5e-3);
    let quad_ratio = d1 / d2;
    let pass = on_real <= 1e-12
        && on_iq <= 1e-12
        && (3.2..=4.8).contains(&quad_ratio)
        && d1 <= 10.0 * 1e-4;
    report(
        "12",
        pass,
        &format!(
            "M on real field {on_real:.2e}, on (1+ia)Q {on_iq:.2e} (tol 1e-12); \
             deviation from the linear law {d1:.3e} at a = 1e-2, halving ratio \
             {quad_ratio:.2} (range 3.2..4.8)"
        ),
    );
}
