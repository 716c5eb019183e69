//! Cached FFT plans. rustfft's planner is not Sync, so plans are built once
//! per size under a mutex and the resulting `Arc<dyn Fft>` handles (which are
//! Send + Sync) are shared.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

struct Plans {
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
}

fn plans() -> &'static Mutex<Plans> {
    static PLANS: OnceLock<Mutex<Plans>> = OnceLock::new();
    PLANS.get_or_init(|| {
        Mutex::new(Plans {
            forward: HashMap::new(),
            inverse: HashMap::new(),
        })
    })
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut guard = plans().lock().expect("fft plan cache poisoned");
    let map = if inverse {
        &mut guard.inverse
    } else {
        &mut guard.forward
    };
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// In-place unnormalized forward DFT.
pub fn forward(buf: &mut [Complex64]) {
    plan(buf.len(), false).process(buf);
}

/// In-place inverse DFT, normalized by 1/n so forward-then-inverse is the
/// identity.
pub fn inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    plan(n, true).process(buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}
