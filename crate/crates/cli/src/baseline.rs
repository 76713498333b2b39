//! Regression baselines: named constants with relative tolerances.

use std::collections::BTreeMap;
use std::path::Path;

use pucci_core::diagnostics::energy_star;
use pucci_core::{find_critical_with, to_json_string, OpSign, Params};
use serde::{Deserialize, Serialize};

use crate::commands::create;
use crate::config::RunConfig;
use crate::verify::Line;
use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Entry {
    pub value: f64,
    pub rel_tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Baseline {
    pub params: Params,
    pub values: BTreeMap<String, Entry>,
}

const FIELDS: [(&str, f64); 4] = [("p_star", 1e-8), ("c1", 1e-6), ("R0", 1e-8), ("Sigma", 1e-6)];

/// Constants for both operators at the configured `(λ, Λ, N)`. Cells with no
/// valid operator (`Ñ ≤ 2`) are skipped.
pub fn measure(cfg: &RunConfig) -> Result<Baseline, CliError> {
    let mut values = BTreeMap::new();
    for op in [OpSign::Plus, OpSign::Minus] {
        let Ok(params) = cfg.params.with_op(op) else { continue };
        let crit = find_critical_with(&params, &cfg.critical_options())?;
        let measured = [crit.p_star, crit.c1.value, crit.r0, energy_star(&crit)?.value];
        for ((name, tol), v) in FIELDS.iter().zip(measured) {
            values.insert(format!("{name}_{}", op.as_str()), Entry { value: v, rel_tol: *tol });
        }
    }
    Ok(Baseline { params: cfg.params, values })
}

pub fn write(cfg: &RunConfig, path: &Path) -> Result<(), CliError> {
    use std::io::Write;
    let text = to_json_string(&measure(cfg)?)?;
    create(path)?.write_all(text.as_bytes())?;
    Ok(())
}

pub fn compare(cfg: &RunConfig, path: &Path) -> Result<Vec<Line>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let stored: Baseline =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("baseline {}: {e}", path.display())))?;
    let current = measure(&RunConfig { params: stored.params, ..cfg.clone() })?;
    Ok(stored
        .values
        .iter()
        .map(|(name, want)| match current.values.get(name) {
            Some(got) => {
                let rel = ((got.value - want.value) / want.value).abs();
                Line::new("baseline", name, rel, want.rel_tol, rel <= want.rel_tol)
            }
            None => Line::new("baseline", name, f64::NAN, want.rel_tol, false),
        })
        .collect())
}
