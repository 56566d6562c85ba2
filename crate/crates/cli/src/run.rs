use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use mvgeg::hyper::{default_alpha, p_n_2h1};
use mvgeg::matpoly::number;
use mvgeg::mvop::{eval_by_recurrence, monic_family, norm_matrix};
use mvgeg::params::format_ell;
use mvgeg::racah::p_n_racah;
use mvgeg::real::re;
use mvgeg::verify::{run_suite, Suite, VerificationReport, VerifyConfig};
use mvgeg::{operators, weight, Extended, Mat, MatrixPolynomial, Precision, Real, WeightParams};
use serde_json::{json, Value};

use crate::config::*;

const CSV_DIGITS: usize = 12;

/// Significant digits in JSON: 17 for double, enough to round-trip the
/// quad type otherwise.
fn json_digits<T: Real>() -> usize {
    if T::DIGITS <= 17 {
        17
    } else {
        T::DIGITS + 2
    }
}

struct Ctx {
    file: FileConfig,
    format: Format,
    out: Option<std::path::PathBuf>,
}

impl Ctx {
    fn emit(&self, json: Value, csv: impl FnOnce() -> String) -> CliResult<()> {
        let text = match self.format {
            Format::Json => serde_json::to_string_pretty(&json).expect("serializable") + "\n",
            Format::Csv => csv(),
        };
        match &self.out {
            Some(p) => std::fs::write(p, text).map_err(|e| CliError::runtime(format!("{}: {e}", p.display()))),
            None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::runtime(e.to_string())),
        }
    }
}

pub fn dispatch(cli: Cli) -> CliResult<ExitCode> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let format = cli.format.or(file.format).unwrap_or(Format::Json);
    let ctx = Ctx { file, format, out: cli.out };
    match Precision::from_env()? {
        Precision::Double => run::<f64>(&ctx, cli.cmd),
        Precision::Extended => run::<Extended>(&ctx, cli.cmd),
    }
}

fn run<T: Real>(ctx: &Ctx, cmd: Command) -> CliResult<ExitCode> {
    match cmd {
        Command::Eval(a) => eval::<T>(ctx, a),
        Command::Weight(a) => weight_cmd::<T>(ctx, a),
        Command::Table(a) => table::<T>(ctx, a),
        Command::Verify(a) => verify::<T>(ctx, a),
        Command::Bench(a) => bench::<T>(ctx, a),
    }
}

fn params<T: Real>(ctx: &Ctx, point: &PointArgs) -> CliResult<WeightParams<T>> {
    let two_ell = ell_or(&point.ell, &ctx.file, "1/2")?;
    let nu = nu_or(&point.nu, &ctx.file, 1.0)?;
    Ok(WeightParams::new(two_ell, re(nu))?)
}

fn header<T: Real>(p: &WeightParams<T>) -> Value {
    json!({
        "ell": format_ell(p.two_ell),
        "nu": number(p.nu, json_digits::<T>()),
        "precision": Precision::from_env().map(|p| p.name()).unwrap_or("double"),
    })
}

fn mat_json<T: Real>(m: &Mat<T>) -> Value {
    Value::Array(
        m.to_rows().iter().map(|r| Value::Array(r.iter().map(|&v| number(v, json_digits::<T>())).collect())).collect(),
    )
}

fn mat_csv<T: Real>(out: &mut String, prefix: &str, m: &Mat<T>) {
    for (i, r) in m.to_rows().iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            out.push_str(&format!("{prefix},{i},{j},{}\n", v.to_decimal(CSV_DIGITS)));
        }
    }
}

fn poly_csv<T: Real>(out: &mut String, prefix: &str, p: &MatrixPolynomial<T>) {
    for (k, c) in p.coeffs().iter().enumerate() {
        mat_csv(out, &format!("{prefix},{k}"), c);
    }
}

/// `P_n` by the chosen route.
fn route_poly<T: Real>(r: Route, p: &WeightParams<T>, n: usize) -> CliResult<MatrixPolynomial<T>> {
    Ok(match r {
        Route::Recurrence => monic_family(p, n).polys[n].clone(),
        Route::Hyper => p_n_2h1(p, default_alpha(), n)?,
        Route::Racah => p_n_racah(p, n)?,
    })
}

/// Largest coefficient gap between routes, relative to the coefficient size.
fn route_gap<T: Real>(polys: &[MatrixPolynomial<T>]) -> CliResult<f64> {
    let mut gap = 0.0f64;
    for q in &polys[1..] {
        let scale = polys[0].max_abs_coeff().max(T::one());
        gap = gap.max((polys[0].max_abs_diff(q)? / scale).f());
    }
    Ok(gap)
}

fn eval<T: Real>(ctx: &Ctx, a: EvalArgs) -> CliResult<ExitCode> {
    let p = params::<T>(ctx, &a.point)?;
    let n = a.n.or(ctx.file.n_max).unwrap_or(0);
    let routes = match &a.route {
        Some(s) => parse_routes(s)?,
        None => ctx.file.routes.clone().unwrap_or(vec![Route::Recurrence]),
    };
    let polys: Vec<_> = routes.iter().map(|&r| route_poly(r, &p, n)).collect::<CliResult<_>>()?;
    let mut out = header(&p);
    out["n"] = json!(n);
    if routes.len() > 1 {
        out["max_route_gap"] = json!(route_gap(&polys)?);
    }
    match a.x {
        Some(x) => {
            let xt: T = re(x);
            let w = weight::weight_pol(&p)?.eval(xt);
            out["x"] = json!(x);
            out["W_pol"] = mat_json(&w);
            let vals: Vec<Mat<T>> = polys.iter().map(|q| q.eval(xt)).collect();
            out["routes"] =
                routes.iter().zip(&vals).map(|(r, v)| json!({"route": r.name(), "P_n": mat_json(v)})).collect();
            ctx.emit(out, || {
                let mut s = String::from("kind,row,col,value\n");
                mat_csv(&mut s, "W_pol", &w);
                for (r, v) in routes.iter().zip(&vals) {
                    mat_csv(&mut s, r.name(), v);
                }
                s
            })?;
        }
        None => {
            out["routes"] = routes
                .iter()
                .zip(&polys)
                .map(|(r, q)| json!({"route": r.name(), "P_n": q.to_json(json_digits::<T>())}))
                .collect();
            ctx.emit(out, || {
                let mut s = String::from("route,power,row,col,value\n");
                for (r, q) in routes.iter().zip(&polys) {
                    poly_csv(&mut s, r.name(), q);
                }
                s
            })?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn weight_cmd<T: Real>(ctx: &Ctx, a: PointArgs) -> CliResult<ExitCode> {
    let p = params::<T>(ctx, &a)?;
    let w = weight::weight_pol(&p)?;
    let f = weight::ldu_factors(&p)?;
    let digits = json_digits::<T>();
    let mut out = header(&p);
    out["W_pol"] = w.to_json(digits);
    out["L"] = f.l.to_json(digits);
    out["tdiag"] = f.tdiag.iter().map(|&t| number(t, digits)).collect();
    ctx.emit(out, || {
        let mut s = String::from("matrix,power,row,col,value\n");
        poly_csv(&mut s, "W_pol", &w);
        poly_csv(&mut s, "L", &f.l);
        for (k, t) in f.tdiag.iter().enumerate() {
            s.push_str(&format!("tdiag,0,{k},{k},{}\n", t.to_decimal(CSV_DIGITS)));
        }
        s
    })?;
    Ok(ExitCode::SUCCESS)
}

fn table<T: Real>(ctx: &Ctx, a: TableArgs) -> CliResult<ExitCode> {
    let p = params::<T>(ctx, &a.point)?;
    let n_max = a.n_max.or(ctx.file.n_max).unwrap_or(4);
    let fam = monic_family(&p, n_max);
    let norms: Vec<Mat<T>> = (0..=n_max).map(|n| norm_matrix(&p, n)).collect();
    let mut out = header(&p);
    out["n_max"] = json!(n_max);
    out["rows"] = fam
        .polys
        .iter()
        .zip(&norms)
        .enumerate()
        .map(|(n, (q, h))| json!({"n": n, "P_n": q.to_json(json_digits::<T>()), "H_n": mat_json(h)}))
        .collect();
    ctx.emit(out, || {
        let mut s = String::from("n,kind,power,row,col,value\n");
        for (n, (q, h)) in fam.polys.iter().zip(&norms).enumerate() {
            poly_csv(&mut s, &format!("{n},P"), q);
            mat_csv(&mut s, &format!("{n},H,0"), h);
        }
        s
    })?;
    Ok(ExitCode::SUCCESS)
}

/// `(A2, A1, A0)` of D and E on the grid, for the operators suite dump.
fn operator_dump<T: Real>(cfg: &VerifyConfig) -> CliResult<Value> {
    let digits = json_digits::<T>();
    let dump = |op: &operators::RightDifferentialOperator<T>| json!({"A2": op.coeff(2).to_json(digits), "A1": op.coeff(1).to_json(digits), "A0": op.coeff(0).to_json(digits)});
    let mut out = Vec::new();
    for two_ell in 1..=cfg.two_ell_max {
        for &nu in &cfg.nus {
            let p = WeightParams::new(two_ell, re::<T>(nu))?;
            out.push(json!({
                "ell": format_ell(two_ell),
                "nu": nu,
                "D": dump(&operators::build_d(&p)),
                "E": dump(&operators::build_e(&p)?),
            }));
        }
    }
    Ok(Value::Array(out))
}

fn verify<T: Real>(ctx: &Ctx, a: VerifyArgs) -> CliResult<ExitCode> {
    let suites = Suite::parse_list(a.suite.as_deref().unwrap_or("all"))?;
    let ell_max = a.ell_max.clone().or(ctx.file.ell.clone());
    let two_ell_max = ell_or(&ell_max, &FileConfig::default(), "3/2")?;
    let nus = match &a.nu {
        Some(s) => parse_nus(s)?,
        None => match &ctx.file.nu {
            Some(v) => {
                v.iter().try_for_each(|&x| mvgeg::params::check_nu(x))?;
                v.clone()
            }
            None => VerifyConfig::default().nus,
        },
    };
    if let Some(t) = a.tol {
        if t.is_nan() || t <= 0.0 {
            return Err(CliError::usage(format!("--tol {t} must be positive")));
        }
    }
    let base = VerifyConfig {
        two_ell_max,
        nus,
        n_max: a.n_max.or(ctx.file.n_max).unwrap_or(6),
        seed: a.seed.or(ctx.file.seed).unwrap_or(0),
        tol: a.tol,
        trials: a.trials.unwrap_or(50),
        threads: a.threads.unwrap_or(0),
    };
    let mut reports: Vec<VerificationReport> = Vec::new();
    for &s in &suites {
        let file_tol = ctx.file.tolerances.iter().rev().find(|(x, _)| *x == s).map(|(_, t)| *t);
        let cfg = VerifyConfig { tol: base.tol.or(file_tol), ..base.clone() };
        let r = run_suite::<T>(s, &cfg)?;
        let failed = r.failures().count();
        eprintln!("{}: {} cases, {} failed ({:.2}s)", s, r.cases.len(), failed, r.wall_time_s);
        for c in r.failures() {
            eprintln!(
                "  FAIL {} [{}] residual {:e} > tol {:e}{}",
                c.id,
                c.params,
                c.residual,
                c.tol,
                c.note.as_ref().map(|n| format!(": {n}")).unwrap_or_default()
            );
        }
        reports.push(r);
    }
    let pass = reports.iter().all(VerificationReport::passed);
    let mut out = json!({
        "precision": T::NAME,
        "seed": base.seed,
        "pass": pass,
        "reports": reports.iter().map(|r| r.to_json(false)).collect::<Vec<_>>(),
    });
    if suites.contains(&Suite::Operators) {
        out["operators"] = operator_dump::<T>(&base)?;
    }
    ctx.emit(out, || {
        let mut s = String::new();
        for (i, r) in reports.iter().enumerate() {
            let csv = r.to_csv();
            s.push_str(if i == 0 { &csv } else { csv.split_once('\n').map(|x| x.1).unwrap_or("") });
        }
        s
    })?;
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

fn bench<T: Real>(ctx: &Ctx, a: BenchArgs) -> CliResult<ExitCode> {
    let two_ell_max = ell_or(&a.ell_max, &ctx.file, "3/2")?;
    let nu = nu_or(&a.nu, &ctx.file, 1.0)?;
    let n_max = a.n_max.or(ctx.file.n_max).unwrap_or(8).max(1);
    let routes = match &a.route {
        Some(s) => parse_routes(s)?,
        None => ctx.file.routes.clone().unwrap_or(Route::ALL.to_vec()),
    };
    if a.reps == 0 {
        return Err(CliError::usage("--reps must be at least 1"));
    }
    let ns: Vec<usize> = std::iter::successors(Some(1usize), |n| Some(n * 2)).take_while(|&n| n <= n_max).collect();
    let mut rows = Vec::new();
    for two_ell in 1..=two_ell_max {
        let p = WeightParams::new(two_ell, re::<T>(nu))?;
        for &n in &ns {
            // every route must agree before anything is timed
            let polys: Vec<_> = routes.iter().map(|&r| route_poly(r, &p, n)).collect::<CliResult<_>>()?;
            let gap = route_gap(&polys)?;
            if gap > 1e-8 {
                return Err(CliError::runtime(format!("routes disagree at d={} n={n}: relative gap {gap:e}", p.dim())));
            }
            let x: T = re(a.x);
            for &r in &routes {
                let times = (0..a.reps)
                    .map(|_| {
                        let t = Instant::now();
                        let v = match r {
                            Route::Recurrence => Ok(eval_by_recurrence(&p, n, x)),
                            _ => route_poly(r, &p, n).map(|q| q.eval(x)),
                        };
                        v.map(|v| {
                            std::hint::black_box(v);
                            t.elapsed().as_secs_f64()
                        })
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                rows.push((r, p.dim(), n, median(times)));
            }
        }
    }
    if let Some(s) = recurrence_slope(&rows) {
        eprintln!("recurrence: log-log slope of time against n is {s:.2}");
    }
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|(r, d, n, t)| json!({"route": r.name(), "d": d, "n": n, "median_s": t, "reps": a.reps}))
        .collect();
    ctx.emit(json!({"precision": T::NAME, "nu": nu, "x": a.x, "rows": json_rows}), || {
        let mut s = String::from("route,d,n,median_s,reps\n");
        for (r, d, n, t) in &rows {
            s.push_str(&format!("{},{d},{n},{t:.6e},{}\n", r.name(), a.reps));
        }
        s
    })?;
    Ok(ExitCode::SUCCESS)
}

/// Least-squares slope of log time against log n for the recurrence route at
/// the largest d, over n ≥ 2.
fn recurrence_slope(rows: &[(Route, usize, usize, f64)]) -> Option<f64> {
    let d = rows.iter().filter(|r| r.0 == Route::Recurrence).map(|r| r.1).max()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.0 == Route::Recurrence && r.1 == d && r.2 >= 2 && r.3 > 0.0)
        .map(|r| ((r.2 as f64).ln(), r.3.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_k() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn slope_of_linear_cost() {
        let rows: Vec<_> = [2usize, 4, 8, 16].iter().map(|&n| (Route::Recurrence, 3, n, 1e-6 * n as f64)).collect();
        assert!((recurrence_slope(&rows).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn digits() {
        assert_eq!(json_digits::<f64>(), 17);
        assert_eq!(json_digits::<Extended>(), 36);
    }
}
