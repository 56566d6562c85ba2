use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mvgeg::params::{check_nu, parse_ell};
use mvgeg::verify::Suite;
use serde_json::Value;

#[derive(Parser, Debug)]
#[command(name = "mvgeg", version, about = "Matrix-valued Gegenbauer polynomials")]
pub struct Cli {
    /// JSON run configuration; flags take precedence over its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Coefficients of P_n for one or more routes, or values at --x.
    Eval(EvalArgs),
    /// W_pol, its unipotent factor L and the diagonal t_k.
    Weight(PointArgs),
    /// P_n and the norms H_n for n = 0..=n-max.
    Table(TableArgs),
    /// Run verification suites; exit 1 if any case fails.
    Verify(VerifyArgs),
    /// Time evaluation of P_n(x) by each route on a (d, n) grid.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
pub struct PointArgs {
    /// ℓ as "3/2", "1.5" or "2".
    #[arg(long)]
    pub ell: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<String>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated subset of recurrence, hyper, racah.
    #[arg(long)]
    pub route: Option<String>,
    /// Evaluate W_pol(x) and P_n(x) instead of printing coefficients.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long)]
    pub n_max: Option<usize>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Comma-separated: weight, operators, mvop, hyper, racah, all.
    #[arg(long)]
    pub suite: Option<String>,
    /// Largest ℓ on the grid; every 2ℓ from 1 up is included.
    #[arg(long)]
    pub ell_max: Option<String>,
    /// Comma-separated ν values.
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<String>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Tolerance for every case, replacing the per-identity defaults.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random pairs per (ℓ, ν) in the pairing checks.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub ell_max: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<String>,
    /// Degrees 1, 2, 4, … up to this value.
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub route: Option<String>,
    /// Repetitions per timing; the median is reported.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Point at which each route evaluates P_n.
    #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
    pub x: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Route {
    Recurrence,
    Hyper,
    Racah,
}

impl Route {
    pub const ALL: [Route; 3] = [Route::Recurrence, Route::Hyper, Route::Racah];

    pub fn name(self) -> &'static str {
        match self {
            Route::Recurrence => "recurrence",
            Route::Hyper => "hyper",
            Route::Racah => "racah",
        }
    }
}

/// A failure with its exit code: 2 for usage errors, 1 otherwise.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { code: 2, msg: msg.into() }
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError { code: 1, msg: msg.into() }
    }
}

impl From<mvgeg::Error> for CliError {
    fn from(e: mvgeg::Error) -> Self {
        use mvgeg::Error::*;
        match e {
            InvalidParams(_) | Parse(_) | Domain(_) => CliError::usage(e.to_string()),
            _ => CliError::runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Settings read from `--config`, mirroring the flags.
#[derive(Debug, Default)]
pub struct FileConfig {
    pub ell: Option<String>,
    pub nu: Option<Vec<f64>>,
    pub n_max: Option<usize>,
    pub routes: Option<Vec<Route>>,
    pub tolerances: Vec<(Suite, f64)>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        Self::from_json(&v)
    }

    pub fn from_json(v: &Value) -> CliResult<Self> {
        let obj = v.as_object().ok_or_else(|| CliError::usage("config must be a JSON object"))?;
        let bad = |k: &str| CliError::usage(format!("config field {k:?} has the wrong type"));
        let mut c = FileConfig::default();
        for (k, val) in obj {
            match k.as_str() {
                "ell" => {
                    c.ell = Some(match val {
                        Value::String(s) => s.clone(),
                        Value::Number(n) => n.to_string(),
                        _ => return Err(bad(k)),
                    })
                }
                "nu" => {
                    c.nu = Some(match val {
                        Value::Array(a) => {
                            a.iter().map(|x| x.as_f64().ok_or_else(|| bad(k))).collect::<CliResult<_>>()?
                        }
                        _ => vec![val.as_f64().ok_or_else(|| bad(k))?],
                    })
                }
                "nMax" => c.n_max = Some(val.as_u64().ok_or_else(|| bad(k))? as usize),
                "routes" => {
                    let names: Vec<&str> = match val {
                        Value::Array(a) => {
                            a.iter().map(|x| x.as_str().ok_or_else(|| bad(k))).collect::<CliResult<_>>()?
                        }
                        Value::String(s) => vec![s.as_str()],
                        _ => return Err(bad(k)),
                    };
                    c.routes = Some(parse_routes(&names.join(","))?);
                }
                "tolerances" => {
                    for (s, t) in val.as_object().ok_or_else(|| bad(k))? {
                        let t = t.as_f64().filter(|t| *t > 0.0).ok_or_else(|| bad(k))?;
                        for suite in Suite::parse_list(s)? {
                            c.tolerances.push((suite, t));
                        }
                    }
                }
                "outputFormat" => {
                    c.format = Some(match val.as_str() {
                        Some("json") => Format::Json,
                        Some("csv") => Format::Csv,
                        _ => return Err(bad(k)),
                    })
                }
                "seed" => c.seed = Some(val.as_u64().ok_or_else(|| bad(k))?),
                other => return Err(CliError::usage(format!("unknown config field {other:?}"))),
            }
        }
        Ok(c)
    }
}

pub fn parse_routes(s: &str) -> CliResult<Vec<Route>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let r = Route::ALL
            .into_iter()
            .find(|r| r.name() == part)
            .ok_or_else(|| CliError::usage(format!("unknown route {part:?}; expected recurrence, hyper or racah")))?;
        if !out.contains(&r) {
            out.push(r);
        }
    }
    if out.is_empty() {
        return Err(CliError::usage("no route selected"));
    }
    Ok(out)
}

pub fn parse_nus(s: &str) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let v: f64 = part.parse().map_err(|_| CliError::usage(format!("ν = {part:?} is not a number")))?;
        check_nu(v)?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(CliError::usage("no ν given"));
    }
    Ok(out)
}

pub fn ell_or(flag: &Option<String>, file: &FileConfig, default: &str) -> CliResult<usize> {
    let s = flag.as_deref().or(file.ell.as_deref()).unwrap_or(default);
    Ok(parse_ell(s)?)
}

/// A single ν from the flag or the first config value.
pub fn nu_or(flag: &Option<String>, file: &FileConfig, default: f64) -> CliResult<f64> {
    match flag {
        Some(s) => {
            let v = parse_nus(s)?;
            if v.len() != 1 {
                return Err(CliError::usage("this command takes a single ν"));
            }
            Ok(v[0])
        }
        None => {
            let v = file.nu.as_ref().and_then(|v| v.first().copied()).unwrap_or(default);
            check_nu(v)?;
            Ok(v)
        }
    }
}
