//! Run configuration: command-line flags over a flat `key = value` file over defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use pucci_core::{OpSign, Params};

use crate::CliError;

pub const DEFAULT_EPS_LIST: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];
pub const DEFAULT_RATIOS: [f64; 4] = [1.0, 1.5, 2.0, 4.0];

/// Flags shared by every subcommand. Anything left unset falls back to the
/// config file, then to the defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Flat `key = value` file; keys are flag names without the leading dashes.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long = "Lambda")]
    pub big_lambda: Option<f64>,
    #[arg(long)]
    pub dim: Option<u32>,
    /// plus or minus
    #[arg(long)]
    pub op: Option<String>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Comma-separated list of ε values.
    #[arg(long = "eps-list")]
    pub eps_list: Option<String>,
    /// Comma-separated grid of Λ/λ ratios (sweep).
    #[arg(long)]
    pub ratios: Option<String>,
    #[arg(long = "p-tol")]
    pub p_tol: Option<f64>,
    /// Initial classification horizon in log-radius.
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    #[arg(long = "rel-tol")]
    pub rel_tol: Option<f64>,
    /// oracle, pohozaev, bounds, energy, theorem1 or all
    #[arg(long)]
    pub suite: Option<String>,
    /// Grid points for ball profile CSVs.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long = "out-json")]
    pub out_json: Option<PathBuf>,
    #[arg(long = "out-profile")]
    pub out_profile: Option<PathBuf>,
    /// Regression JSON to compare against.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Write the measured constants as a new regression JSON.
    #[arg(long = "write-baseline")]
    pub write_baseline: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Oracle,
    Pohozaev,
    Bounds,
    Energy,
    Theorem1,
    All,
}

impl Suite {
    pub fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s.trim() {
            "oracle" => Suite::Oracle,
            "pohozaev" => Suite::Pohozaev,
            "bounds" => Suite::Bounds,
            "energy" => Suite::Energy,
            "theorem1" => Suite::Theorem1,
            "all" => Suite::All,
            other => return Err(CliError::Config(format!("unknown suite '{other}'"))),
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub params: Params,
    pub p: Option<f64>,
    pub eps: Option<f64>,
    pub eps_list: Vec<f64>,
    pub ratios: Vec<f64>,
    pub p_tol: f64,
    pub t_max: f64,
    pub rel_tol: Option<f64>,
    pub suite: Suite,
    pub points: usize,
    pub out_json: Option<PathBuf>,
    pub out_profile: Option<PathBuf>,
    pub baseline: Option<PathBuf>,
    pub write_baseline: Option<PathBuf>,
}

pub fn parse_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| CliError::Config(format!("bad number '{t}'"))))
        .collect()
}

struct Layer {
    file: BTreeMap<String, String>,
}

impl Layer {
    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(v) => v.parse().map(Some).map_err(|_| CliError::Config(format!("config key {key}: bad value '{v}'"))),
            None => Ok(None),
        }
    }

    fn path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.file.get(key).map(PathBuf::from))
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn resolve(args: CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => parse_file(path)?,
            None => BTreeMap::new(),
        };
        let known = [
            "lambda", "Lambda", "dim", "op", "p", "eps", "eps_list", "ratios", "p_tol", "t_max", "rel_tol", "suite", "points",
            "out_json", "out_profile", "baseline", "write_baseline",
        ];
        if let Some(k) = file.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(CliError::Config(format!("unknown config key '{k}'")));
        }
        let layer = Layer { file };
        let dim = layer.get(args.dim, "dim")?.ok_or_else(|| CliError::Config("missing --dim".into()))?;
        let lambda = layer.get(args.lambda, "lambda")?.unwrap_or(1.0);
        let big_lambda = layer.get(args.big_lambda, "Lambda")?.unwrap_or(1.0);
        let op: OpSign = match layer.get(args.op, "op")? {
            Some(s) => s.parse::<OpSign>()?,
            None => OpSign::Plus,
        };
        let params = Params::new(lambda, big_lambda, dim, op)?;
        let eps_list = match layer.get(args.eps_list, "eps_list")? {
            Some(s) => parse_list(&s)?,
            None => DEFAULT_EPS_LIST.to_vec(),
        };
        for &e in &eps_list {
            positive("eps", e)?;
        }
        let ratios = match layer.get(args.ratios, "ratios")? {
            Some(s) => parse_list(&s)?,
            None => DEFAULT_RATIOS.to_vec(),
        };
        let suite = match layer.get(args.suite, "suite")? {
            Some(s) => s.parse()?,
            None => Suite::All,
        };
        let p_tol = positive("p-tol", layer.get(args.p_tol, "p_tol")?.unwrap_or(1e-10))?;
        let t_max = positive("t-max", layer.get(args.t_max, "t_max")?.unwrap_or(35.0))?;
        let rel_tol = layer.get(args.rel_tol, "rel_tol")?.map(|v| positive("rel-tol", v)).transpose()?;
        let eps = layer.get(args.eps, "eps")?.map(|v| positive("eps", v)).transpose()?;
        let p = layer.get(args.p, "p")?;
        if let Some(p) = p {
            if !(p > 1.0) {
                return Err(CliError::Config(format!("p must exceed 1, got {p}")));
            }
        }
        Ok(RunConfig {
            params,
            p,
            eps,
            eps_list,
            ratios,
            p_tol,
            t_max,
            rel_tol,
            suite,
            points: layer.get(args.points, "points")?.unwrap_or(1001).max(2),
            out_json: layer.path(args.out_json, "out_json"),
            out_profile: layer.path(args.out_profile, "out_profile"),
            baseline: layer.path(args.baseline, "baseline"),
            write_baseline: layer.path(args.write_baseline, "write_baseline"),
        })
    }

    pub fn critical_options(&self) -> pucci_core::CriticalOptions {
        let mut opts = pucci_core::CriticalOptions::default().with_p_tol(self.p_tol);
        opts.t_max = self.t_max;
        if let Some(r) = self.rel_tol {
            opts.solver.rel_tol = r;
        }
        opts
    }

    pub fn ball_solver(&self) -> pucci_core::SolverOptions {
        let mut s = pucci_core::ball::solver_for_ball();
        if let Some(r) = self.rel_tol {
            s.rel_tol = r;
        }
        s
    }
}
