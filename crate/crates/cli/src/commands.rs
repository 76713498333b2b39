use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use pucci_core::ball::solve_ball_eps_with;
use pucci_core::critical::{entire_space_solver, CriticalSummary};
use pucci_core::diagnostics::energy_star;
use pucci_core::{
    find_critical_with, solve_ball_from, to_json_string, to_phase, CriticalResult, CriticalStatus, Error, Integrator, OpSign,
    Params, StopCondition,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// JSON to the `--out-json` file, or stdout.
pub fn emit_json<T: Serialize>(cfg: &RunConfig, value: &T) -> Result<(), CliError> {
    let text = to_json_string(value)?;
    match &cfg.out_json {
        Some(path) => create(path)?.write_all(text.as_bytes())?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn no_baseline(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.baseline.is_some() || cfg.write_baseline.is_some() {
        return Err(CliError::Config("--baseline and --write-baseline apply to verify only".into()));
    }
    Ok(())
}

pub fn solve_critical(cfg: &RunConfig, params: &Params) -> Result<CriticalResult, CliError> {
    Ok(find_critical_with(params, &cfg.critical_options())?)
}

pub fn critical(cfg: &RunConfig) -> Result<u8, CliError> {
    no_baseline(cfg)?;
    let crit = solve_critical(cfg, &cfg.params)?;
    emit_json(cfg, &crit.summary())?;
    if let Some(path) = &cfg.out_profile {
        crit.profile.write_csv(create(path)?)?;
    }
    Ok(if crit.status == CriticalStatus::BudgetExhausted { 3 } else { 0 })
}

pub fn ball(cfg: &RunConfig) -> Result<u8, CliError> {
    no_baseline(cfg)?;
    let ball = match (cfg.p, cfg.eps) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either --p or --eps, not both".into())),
        (None, None) => return Err(CliError::Config("ball needs --p or --eps".into())),
        (Some(p), None) => {
            let ball = solve_ball_from(&cfg.params, p, 1.0, cfg.ball_solver())?;
            if !cfg.params.is_laplacian() {
                let crit = solve_critical(cfg, &cfg.params)?;
                if p >= crit.p_star {
                    return Err(Error::Supercritical { p, p_star: crit.p_star }.into());
                }
            }
            ball
        }
        (None, Some(eps)) => solve_ball_eps_with(&solve_critical(cfg, &cfg.params)?, eps, cfg.ball_solver())?,
    };
    emit_json(cfg, &ball.summary())?;
    if let Some(path) = &cfg.out_profile {
        ball.write_csv(create(path)?, cfg.points - 1)?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct SweepEntry {
    #[serde(flatten)]
    summary: Option<CriticalSummary>,
    in_bracket: Option<bool>,
    #[serde(rename = "Sigma")]
    sigma: Option<f64>,
    error: Option<String>,
    error_kind: &'static str,
}

#[derive(Serialize)]
struct SweepPoint {
    ratio: f64,
    lambda: f64,
    #[serde(rename = "Lambda")]
    big_lambda: f64,
    dim: u32,
    plus: SweepEntry,
    minus: SweepEntry,
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParams(_) | Error::InvalidExponent { .. } => "invalid_params",
        Error::DegenerateDimension(_) => "degenerate_dimension",
        Error::BracketViolated { .. } => "bracket_violated",
        Error::Integration { .. } => "integration",
        Error::DivergentTail(_) | Error::Quadrature(_) => "quadrature",
        _ => "other",
    }
}

fn sweep_entry(cfg: &RunConfig, lambda: f64, big: f64, op: OpSign) -> SweepEntry {
    let run = || -> Result<(CriticalResult, f64), Error> {
        let params = Params::new(lambda, big, cfg.params.dim, op)?;
        let crit = find_critical_with(&params, &cfg.critical_options())?;
        let sigma = energy_star(&crit)?.value;
        Ok((crit, sigma))
    };
    match run() {
        Ok((crit, sigma)) => {
            let kind = match crit.status {
                CriticalStatus::BudgetExhausted => "budget_exhausted",
                CriticalStatus::HorizonLimited => "horizon_limited",
                _ => "ok",
            };
            SweepEntry {
                in_bracket: Some(crit.params.exponent_bracket().contains_strictly(crit.p_star)),
                summary: Some(crit.summary()),
                sigma: Some(sigma),
                error: None,
                error_kind: kind,
            }
        }
        Err(e) => SweepEntry { summary: None, in_bracket: None, sigma: None, error_kind: error_kind(&e), error: Some(e.to_string()) },
    }
}

fn csv_field(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_else(|| "nan".into())
}

pub fn sweep(cfg: &RunConfig) -> Result<u8, CliError> {
    no_baseline(cfg)?;
    if cfg.ratios.is_empty() {
        return Err(CliError::EmptyGrid);
    }
    let lambda = cfg.params.lambda;
    let points: Vec<SweepPoint> = cfg
        .ratios
        .par_iter()
        .map(|&ratio| SweepPoint {
            ratio,
            lambda,
            big_lambda: ratio * lambda,
            dim: cfg.params.dim,
            plus: sweep_entry(cfg, lambda, ratio * lambda, OpSign::Plus),
            minus: sweep_entry(cfg, lambda, ratio * lambda, OpSign::Minus),
        })
        .collect();
    emit_json(cfg, &points)?;
    if let Some(path) = &cfg.out_profile {
        let mut w = create(path)?;
        writeln!(
            w,
            "ratio,lambda,Lambda,dim,p_star_plus,c1_plus,R0_plus,Sigma_plus,in_bracket_plus,status_plus,p_star_minus,c1_minus,R0_minus,Sigma_minus,in_bracket_minus,status_minus"
        )?;
        for pt in &points {
            let cols = |e: &SweepEntry| {
                let s = e.summary.as_ref();
                format!(
                    "{},{},{},{},{},{}",
                    csv_field(s.map(|s| s.p_star)),
                    csv_field(s.map(|s| s.c1)),
                    csv_field(s.map(|s| s.r0)),
                    csv_field(e.sigma),
                    e.in_bracket.map_or("", |b| if b { "true" } else { "false" }),
                    e.error_kind
                )
            };
            writeln!(w, "{:.16e},{:.16e},{:.16e},{},{},{}", pt.ratio, pt.lambda, pt.big_lambda, pt.dim, cols(&pt.plus), cols(&pt.minus))?;
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct PhaseOutput {
    params: Params,
    p: f64,
    #[serde(flatten)]
    metadata: pucci_core::emden_fowler::TrajectoryMetadata,
}

pub fn phase(cfg: &RunConfig) -> Result<u8, CliError> {
    no_baseline(cfg)?;
    let (p, profile) = match cfg.p {
        Some(p) => {
            let mut solver = entire_space_solver();
            if let Some(r) = cfg.rel_tol {
                solver.rel_tol = r;
            }
            let prof = Integrator::new(cfg.params, p).with_options(solver).integrate(1.0, StopCondition::EfTime(cfg.t_max))?;
            (p, std::sync::Arc::new(prof))
        }
        None => {
            let crit = solve_critical(cfg, &cfg.params)?;
            (crit.p_star, crit.profile.clone())
        }
    };
    let traj = to_phase(&profile, cfg.params.exponent_constants(p)?)?;
    emit_json(cfg, &PhaseOutput { params: cfg.params, p, metadata: traj.metadata() })?;
    if let Some(path) = &cfg.out_profile {
        traj.write_csv(create(path)?)?;
    }
    Ok(0)
}
