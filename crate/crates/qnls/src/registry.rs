//! Name-keyed registry of scalar field diagnostics. Each functional sits
//! behind a common trait so the harness can enable a set by name from the
//! scenario config.

use std::collections::BTreeMap;

use crate::diagnostics::{
    bilinear_interaction, energy, gn_ratio, mass, morawetz_potential, truncated_energy, variance,
    MorawetzConfig,
};
use crate::error::Result;
use crate::field::Field;

/// A scalar functional of a single field snapshot.
pub trait ScalarDiagnostic: Send + Sync {
    fn name(&self) -> &'static str;
    fn evaluate(&self, u: &Field) -> Result<f64>;
}

struct Mass;
impl ScalarDiagnostic for Mass {
    fn name(&self) -> &'static str {
        "mass"
    }
    fn evaluate(&self, u: &Field) -> Result<f64> {
        Ok(mass(u))
    }
}

struct Energy;
impl ScalarDiagnostic for Energy {
    fn name(&self) -> &'static str {
        "energy"
    }
    fn evaluate(&self, u: &Field) -> Result<f64> {
        Ok(energy(u))
    }
}

struct GnRatio;
impl ScalarDiagnostic for GnRatio {
    fn name(&self) -> &'static str {
        "gn_ratio"
    }
    fn evaluate(&self, u: &Field) -> Result<f64> {
        gn_ratio(u)
    }
}

struct Variance;
impl ScalarDiagnostic for Variance {
    fn name(&self) -> &'static str {
        "variance"
    }
    fn evaluate(&self, u: &Field) -> Result<f64> {
        Ok(variance(u))
    }
}

struct Morawetz(MorawetzConfig);
impl ScalarDiagnostic for Morawetz {
    fn name(&self) -> &'static str {
        "morawetz"
    }
    fn evaluate(&self, u: &Field) -> Result<f64> {
        morawetz_potential(u, &self.0)
    }
}

struct TruncatedEnergy(i32);
impl ScalarDiagnostic for TruncatedEnergy {
    fn name(&self) -> &'static str {
        "truncated_energy"
    }
    fn evaluate(&self, u: &Field) -> Result<f64> {
        Ok(truncated_energy(u, self.0 + 9))
    }
}

struct Bilinear(i32);
impl ScalarDiagnostic for Bilinear {
    fn name(&self) -> &'static str {
        "bilinear"
    }
    fn evaluate(&self, u: &Field) -> Result<f64> {
        bilinear_interaction(u, self.0)
    }
}

/// All built-in diagnostics, keyed by name. The map order is the stable
/// column order used by writers.
pub fn builtin_diagnostics(
    morawetz: MorawetzConfig,
    truncation_level: i32,
    bilinear_level: i32,
) -> BTreeMap<&'static str, Box<dyn ScalarDiagnostic>> {
    let entries: Vec<Box<dyn ScalarDiagnostic>> = vec![
        Box::new(Mass),
        Box::new(Energy),
        Box::new(GnRatio),
        Box::new(Variance),
        Box::new(Morawetz(morawetz)),
        Box::new(TruncatedEnergy(truncation_level)),
        Box::new(Bilinear(bilinear_level)),
    ];
    entries.into_iter().map(|d| (d.name(), d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::ground_state::q_field;

    #[test]
    fn registry_evaluates_by_name() {
        let g = Grid::new(32.0, 512).unwrap();
        let q = q_field(&g);
        let reg = builtin_diagnostics(MorawetzConfig::for_grid(32.0), 5, 4);
        let m = reg["mass"].evaluate(&q).unwrap();
        assert!((m - 2.720699046351327).abs() < 1e-8);
        let e = reg["energy"].evaluate(&q).unwrap();
        assert!(e.abs() < 1e-9);
        assert!(reg.contains_key("gn_ratio"));
        assert!(reg.contains_key("morawetz"));
        // unknown names simply don't exist in the registry
        assert!(!reg.contains_key("entropy"));
    }
}
