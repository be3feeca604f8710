//! Command-line driver: configuration, commands and artifact writers.
//!
//! A run is described by a TOML file with sections `[coefficients]`,
//! `[distribution]`, `[solver]` and `[output]`. Every key can be set or
//! overridden on the command line as `--section.key=value`; flags win over the
//! file. Floats in CSV output are written with 17 significant digits so that
//! identical configurations produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use toml::{Table, Value};

use crate::equilibrium::{solve_mfg, solve_no_dropout_baseline, solve_nplayer_with, EquilibriumSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::experiments::{convergence_against, quantile_positions, ScenarioSpec};
use crate::model::{
    make_constant_coefficients, make_empirical, make_exponential_sellers, make_two_sided,
    validate_assumptions, CoefficientSet, InitialDistribution,
};
use crate::par::{self, Execution};
use crate::riccati::{solve_riccati, RiccatiBundle};
use crate::strategies::{self, player_path, CompetitorSpec, PlayerPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Riccati,
    SolveMfg,
    SolveNplayer,
    Baseline,
    Compare,
    Converge,
    Paths,
}

impl Command {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "riccati" => Command::Riccati,
            "solve-mfg" => Command::SolveMfg,
            "solve-nplayer" => Command::SolveNplayer,
            "baseline" => Command::Baseline,
            "compare" => Command::Compare,
            "converge" => Command::Converge,
            "paths" => Command::Paths,
            other => return Err(Error::config("command", format!("unknown command `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum CoefficientConfig {
    Constant { eta: f64, kappa: f64, lambda: f64 },
    /// CSV with columns `t, eta, kappa, lambda` and optionally `eta_dot, kappa_dot`.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionConfig {
    Exponential { mean: f64 },
    TwoSided { w_sell: f64, mean_sell: f64, w_buy: f64, mean_buy: f64 },
    Empirical { positions: Vec<f64> },
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub coefficients: CoefficientConfig,
    pub horizon: f64,
    pub distribution: DistributionConfig,
    #[serde(rename = "M")]
    pub m: usize,
    pub delta: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "Ns")]
    pub ns: Vec<usize>,
    pub tol: f64,
    pub residual_nodes: usize,
    pub parallel: bool,
    pub out_dir: PathBuf,
    pub x_samples: Vec<f64>,
}

const KEYS: &[(&str, &[&str])] = &[
    ("coefficients", &["eta", "kappa", "lambda", "horizon", "file"]),
    (
        "distribution",
        &["kind", "mean", "w_sell", "mean_sell", "w_buy", "mean_buy", "positions", "positions_file"],
    ),
    ("solver", &["M", "delta", "N", "Ns", "tol", "residual_nodes", "parallel"]),
    ("output", &["dir", "x_samples"]),
];

const SHORTHANDS: &[(&str, &str)] = &[
    ("M", "solver.M"),
    ("N", "solver.N"),
    ("Ns", "solver.Ns"),
    ("delta", "solver.delta"),
    ("tol", "solver.tol"),
    ("out", "output.dir"),
];

/// Reads the optional config file and applies `overrides` (raw command-line
/// tokens after the subcommand).
pub fn parse_config(command: Command, file: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut table = match file {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
            text.parse::<Table>()
                .map_err(|e| Error::config("config", format!("invalid TOML: {e}")))?
        }
        None => Table::new(),
    };
    let base = file.and_then(Path::parent).unwrap_or(Path::new(""));
    for (key, raw) in split_overrides(overrides)? {
        set_key(&mut table, &key, parse_value(&raw))?;
    }
    check_keys(&table)?;
    resolve(command, &table, base)
}

fn split_overrides(tokens: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = tokens.iter();
    while let Some(tok) = it.next() {
        let Some(flag) = tok.strip_prefix("--") else {
            return Err(Error::config(tok.clone(), "expected a --key=value flag"));
        };
        let (name, value) = match flag.split_once('=') {
            Some((n, v)) => (n.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| Error::config(flag, "flag is missing its value"))?;
                (flag.to_string(), v.clone())
            }
        };
        let key = SHORTHANDS
            .iter()
            .find(|(s, _)| *s == name)
            .map_or(name, |(_, full)| full.to_string());
        out.push((key, value));
    }
    Ok(out)
}

/// TOML literal if it parses as one, comma lists as arrays, else a string.
fn parse_value(raw: &str) -> Value {
    if let Ok(t) = format!("v = {raw}").parse::<Table>() {
        if let Some(v) = t.get("v") {
            return v.clone();
        }
    }
    if raw.contains(',') {
        let items: Vec<Value> = raw.split(',').map(|s| parse_value(s.trim())).collect();
        return Value::Array(items);
    }
    Value::String(raw.to_string())
}

fn set_key(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let Some((section, name)) = key.split_once('.') else {
        return Err(Error::config(key, "unknown key; expected section.key"));
    };
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    match entry {
        Value::Table(t) => {
            t.insert(name.to_string(), value);
            Ok(())
        }
        _ => Err(Error::config(section, "expected a table")),
    }
}

fn check_keys(table: &Table) -> Result<()> {
    for (section, value) in table {
        let Some((_, allowed)) = KEYS.iter().find(|(s, _)| s == section) else {
            return Err(Error::config(section.clone(), "unknown section"));
        };
        let Value::Table(t) = value else {
            return Err(Error::config(section.clone(), "expected a table"));
        };
        for key in t.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::config(format!("{section}.{key}"), "unknown key"));
            }
        }
    }
    Ok(())
}

struct Lookup<'a> {
    table: &'a Table,
}

impl Lookup<'_> {
    fn get(&self, key: &str) -> Option<&Value> {
        let (section, name) = key.split_once('.')?;
        self.table.get(section)?.as_table()?.get(name)
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(Error::config(key, "expected a number")),
        }
    }

    fn req_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| Error::config(key, "missing required key"))
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(_) => Err(Error::config(key, "expected a non-negative integer")),
        }
    }

    fn string(&self, key: &str) -> Result<Option<&str>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(Error::config(key, "expected a string")),
        }
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(Error::config(key, "expected true or false")),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(i) => Ok(*i as f64),
                    _ => Err(Error::config(key, "expected a list of numbers")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(Value::Float(x)) => Ok(Some(vec![*x])),
            Some(Value::Integer(i)) => Ok(Some(vec![*i as f64])),
            Some(_) => Err(Error::config(key, "expected a list of numbers")),
        }
    }

    fn usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i > 0 => Ok(*i as usize),
                    _ => Err(Error::config(key, "expected a list of positive integers")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(Value::Integer(i)) if *i > 0 => Ok(Some(vec![*i as usize])),
            Some(_) => Err(Error::config(key, "expected a list of positive integers")),
        }
    }
}

fn resolve(command: Command, table: &Table, base: &Path) -> Result<RunConfig> {
    let l = Lookup { table };
    let coefficients = match l.string("coefficients.file")? {
        Some(p) => {
            for key in ["coefficients.eta", "coefficients.kappa", "coefficients.lambda"] {
                if l.get(key).is_some() {
                    return Err(Error::config(key, "conflicts with coefficients.file"));
                }
            }
            CoefficientConfig::File { path: base.join(p) }
        }
        None => CoefficientConfig::Constant {
            eta: l.req_f64("coefficients.eta")?,
            kappa: l.req_f64("coefficients.kappa")?,
            lambda: l.req_f64("coefficients.lambda")?,
        },
    };
    let horizon = l.f64("coefficients.horizon")?.unwrap_or(1.0);

    let kind = l
        .string("distribution.kind")?
        .ok_or_else(|| Error::config("distribution.kind", "missing required key"))?;
    let distribution = match kind {
        "exponential" => DistributionConfig::Exponential {
            mean: l.req_f64("distribution.mean")?,
        },
        "two_sided" => DistributionConfig::TwoSided {
            w_sell: l.req_f64("distribution.w_sell")?,
            mean_sell: l.req_f64("distribution.mean_sell")?,
            w_buy: l.req_f64("distribution.w_buy")?,
            mean_buy: l.req_f64("distribution.mean_buy")?,
        },
        "empirical" => {
            let positions = match (
                l.f64_list("distribution.positions")?,
                l.string("distribution.positions_file")?,
            ) {
                (Some(p), None) => p,
                (None, Some(file)) => read_positions(&base.join(file))?,
                (Some(_), Some(_)) => {
                    return Err(Error::config("distribution.positions_file", "conflicts with distribution.positions"))
                }
                (None, None) => return Err(Error::config("distribution.positions", "missing required key")),
            };
            DistributionConfig::Empirical { positions }
        }
        _ => return Err(Error::config("distribution.kind", "unsupported distribution kind")),
    };

    let m = l.usize("solver.M")?.unwrap_or(2000);
    if m < 2 {
        return Err(Error::config("solver.M", "need at least 2 intervals"));
    }
    let tol = l.f64("solver.tol")?.unwrap_or(1e-10);
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::config("solver.tol", "must be positive"));
    }
    let n = l.usize("solver.N")?;
    if n == Some(0) {
        return Err(Error::config("solver.N", "need at least one player"));
    }
    Ok(RunConfig {
        command,
        coefficients,
        horizon,
        distribution,
        m,
        delta: l.f64("solver.delta")?,
        n,
        ns: l.usize_list("solver.Ns")?.unwrap_or_else(|| vec![7, 15, 100]),
        tol,
        residual_nodes: l.usize("solver.residual_nodes")?.unwrap_or(strategies::RESIDUAL_NODES),
        parallel: l.bool("solver.parallel")?.unwrap_or(true),
        out_dir: PathBuf::from(l.string("output.dir")?.unwrap_or("./out")),
        x_samples: l
            .f64_list("output.x_samples")?
            .unwrap_or_else(|| vec![0.05, 0.25, 0.5, 0.75, 1.0, 1.5, 3.0]),
    })
}

fn read_positions(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::config("distribution.positions_file", e.to_string()))?;
    let col = column(&mut rdr, "x", "distribution.positions_file")?;
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| Error::config("distribution.positions_file", e.to_string()))?;
            number(&r[col], "distribution.positions_file")
        })
        .collect()
}

fn column(rdr: &mut csv::Reader<fs::File>, name: &str, key: &str) -> Result<usize> {
    let headers = rdr.headers().map_err(|e| Error::config(key, e.to_string()))?;
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::config(key, format!("missing column `{name}`")))
}

fn number(s: &str, key: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::config(key, format!("`{s}` is not a number")))
}

fn read_coefficients(path: &Path, m: usize) -> Result<CoefficientSet> {
    let key = "coefficients.file";
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::config(key, e.to_string()))?;
    let names = ["t", "eta", "kappa", "lambda"];
    let cols: Vec<usize> = names
        .iter()
        .map(|n| column(&mut rdr, n, key))
        .collect::<Result<_>>()?;
    let headers = rdr.headers().map_err(|e| Error::config(key, e.to_string()))?.clone();
    let find = |n: &str| headers.iter().position(|h| h.trim() == n);
    let dots = find("eta_dot").zip(find("kappa_dot"));
    let mut data: Vec<Vec<f64>> = vec![Vec::new(); 6];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::config(key, e.to_string()))?;
        for (j, &c) in cols.iter().enumerate() {
            data[j].push(number(&rec[c], key)?);
        }
        if let Some((a, b)) = dots {
            data[4].push(number(&rec[a], key)?);
            data[5].push(number(&rec[b], key)?);
        }
    }
    let derivatives = dots.map(|_| (data[4].as_slice(), data[5].as_slice()));
    CoefficientSet::from_samples(&data[0], &data[1], &data[2], &data[3], derivatives, m)
}

impl RunConfig {
    pub fn execution(&self) -> Execution {
        if self.parallel {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }

    pub fn coeffs(&self) -> Result<CoefficientSet> {
        match &self.coefficients {
            CoefficientConfig::Constant { eta, kappa, lambda } => {
                make_constant_coefficients(*eta, *kappa, *lambda, self.horizon, self.m)
            }
            CoefficientConfig::File { path } => read_coefficients(path, self.m),
        }
    }

    pub fn dist(&self) -> Result<InitialDistribution> {
        match &self.distribution {
            DistributionConfig::Exponential { mean } => make_exponential_sellers(*mean),
            DistributionConfig::TwoSided {
                w_sell,
                mean_sell,
                w_buy,
                mean_buy,
            } => make_two_sided(*w_sell, *mean_sell, *w_buy, *mean_buy),
            DistributionConfig::Empirical { positions } => make_empirical(positions),
        }
    }

    /// Player positions for the `N`-player commands.
    pub fn positions(&self, dist: &InitialDistribution) -> Result<Vec<f64>> {
        match (&self.distribution, self.n) {
            (DistributionConfig::Empirical { positions }, None) => Ok(positions.clone()),
            (DistributionConfig::Empirical { positions }, Some(n)) if n == positions.len() => {
                Ok(positions.clone())
            }
            (DistributionConfig::Empirical { positions }, Some(n)) => Err(Error::config(
                "solver.N",
                format!("{n} players but {} positions", positions.len()),
            )),
            (_, Some(n)) => quantile_positions(dist, n),
            (_, None) => Err(Error::config("solver.N", "missing required key for an analytic measure")),
        }
    }

    fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            ..SolverOptions::default()
        }
    }
}

/// Numbers printed to standard output after a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub x_hat: Option<f64>,
    pub mu_terminal: Option<f64>,
    pub alpha_terminal: f64,
    pub residual: Option<f64>,
    pub files: Vec<PathBuf>,
}

impl std::fmt::Display for RunReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.12e}"));
        writeln!(f, "x_hat    = {}", opt(self.x_hat))?;
        writeln!(f, "mu_T     = {}", opt(self.mu_terminal))?;
        writeln!(f, "alpha_T  = {:.12e}", self.alpha_terminal)?;
        write!(f, "residual = {}", opt(self.residual))
    }
}

/// Executes the configured command and writes its artifacts.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    let coeffs = cfg.coeffs()?;
    let exec = cfg.execution();
    fs::create_dir_all(&cfg.out_dir)?;
    let mut out = Output::new(&cfg.out_dir);
    let echo = serde_json::to_value(cfg).map_err(|e| Error::Numerical(e.to_string()))?;

    let report = match cfg.command {
        Command::Riccati => {
            let delta = match (cfg.delta, cfg.n) {
                (Some(d), _) => d,
                (None, Some(n)) => 1.0 / n as f64,
                (None, None) => 0.0,
            };
            validate_assumptions(&coeffs, delta).into_error(delta > 0.0)?;
            let b = solve_riccati(&coeffs, delta)?;
            out.write("riccati.csv", &riccati_csv(&b))?;
            out.write_json(
                "summary.json",
                &json!({
                    "delta": delta,
                    "alpha_T": b.alpha_terminal(),
                    "h_T": b.h_terminal(),
                    "A_0": b.a[0],
                    "config": echo,
                }),
            )?;
            RunReport {
                x_hat: None,
                mu_terminal: None,
                alpha_terminal: b.alpha_terminal(),
                residual: None,
                files: out.files,
            }
        }
        Command::SolveMfg | Command::Baseline | Command::Paths => {
            let dist = cfg.dist()?;
            let mut eq = if cfg.command == Command::Baseline {
                solve_no_dropout_baseline(&coeffs, &dist)?
            } else {
                crate::equilibrium::solve_equilibrium(
                    &coeffs,
                    &dist,
                    0.0,
                    crate::equilibrium::Market::DropOut,
                    &cfg.options(),
                )?
            };
            let residual = strategies::fixed_point_residual(&eq, cfg.residual_nodes, exec)?;
            eq.residual = Some(residual);
            let paths = par::try_map(exec, &cfg.x_samples, |&x| player_path(x, &eq))?;
            if cfg.command != Command::Paths {
                out.write("mu.csv", &mu_csv(&eq))?;
            }
            out.write("paths.csv", &paths_csv(eq.grid(), &paths))?;
            out.write("players.csv", &players_csv(&paths))?;
            out.write_json("summary.json", &summary_json(&eq, echo))?;
            report(&eq, out.files)
        }
        Command::SolveNplayer => {
            let dist = cfg.dist()?;
            let positions = cfg.positions(&dist)?;
            let mut eq = solve_nplayer_with(&coeffs, &positions, &cfg.options())?;
            let residual = strategies::fixed_point_residual(&eq, positions.len(), exec)?;
            eq.residual = Some(residual);
            let paths = par::try_map(exec, &positions, |&x| player_path(x, &eq))?;
            let nash = strategies::nash_check(&positions, &eq, &CompetitorSpec::battery(), exec)?;
            out.write("mu.csv", &mu_csv(&eq))?;
            out.write("paths.csv", &paths_csv(eq.grid(), &paths))?;
            out.write("players.csv", &players_csv(&paths))?;
            let mut summary = summary_json(&eq, echo);
            summary["N"] = json!(positions.len());
            summary["nash_violations"] = json!(nash.violations);
            summary["nash_min_margin"] = json!(nash.min_margin());
            out.write_json("summary.json", &summary)?;
            report(&eq, out.files)
        }
        Command::Compare => {
            let dist = cfg.dist()?;
            let mut drop = solve_mfg(&coeffs, &dist)?;
            let mut base = solve_no_dropout_baseline(&coeffs, &dist)?;
            for eq in [&mut drop, &mut base] {
                let r = strategies::fixed_point_residual(eq, cfg.residual_nodes, exec)?;
                eq.residual = Some(r);
            }
            out.write("mu_dropout.csv", &mu_csv(&drop))?;
            out.write("mu_baseline.csv", &mu_csv(&base))?;
            let mut summary = summary_json(&drop, echo);
            summary["baseline"] = summary_json(&base, serde_json::Value::Null);
            summary["baseline"].as_object_mut().map(|o| o.remove("config"));
            out.write_json("summary.json", &summary)?;
            report(&drop, out.files)
        }
        Command::Converge => {
            let dist = cfg.dist()?;
            let mfg = solve_mfg(&coeffs, &dist)?;
            let spec = ScenarioSpec::custom(coeffs.clone(), dist, cfg.x_samples.clone());
            let rows = convergence_against(&mfg, &spec, &cfg.ns, exec)?;
            let mut csv = String::from("N,sup_error,x_hat_N\n");
            for r in &rows {
                writeln!(csv, "{},{},{}", r.n, float(r.sup_error), float(r.x_hat_n)).unwrap();
            }
            out.write("convergence.csv", &csv)?;
            let mut summary = summary_json(&mfg, echo);
            summary["convergence"] = serde_json::to_value(&rows).map_err(|e| Error::Numerical(e.to_string()))?;
            out.write_json("summary.json", &summary)?;
            report(&mfg, out.files)
        }
    };
    Ok(report)
}

fn report(eq: &EquilibriumSolution, files: Vec<PathBuf>) -> RunReport {
    RunReport {
        x_hat: Some(eq.x_hat),
        mu_terminal: Some(eq.mu_terminal),
        alpha_terminal: eq.alpha_terminal,
        residual: eq.residual,
        files,
    }
}

struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &Path) -> Self {
        Output {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }
}

/// 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn mu_csv(eq: &EquilibriumSolution) -> String {
    let mut s = String::from("t,mu,f\n");
    for ((t, m), f) in eq.grid().iter().zip(&eq.mu).zip(&eq.f_curve) {
        writeln!(s, "{},{},{}", float(*t), float(*m), float(*f)).unwrap();
    }
    s
}

pub fn paths_csv(grid: &[f64], paths: &[PlayerPath]) -> String {
    let mut s = String::from("player_id,t,X,Y,xi\n");
    for (id, p) in paths.iter().enumerate() {
        for (i, t) in grid.iter().enumerate() {
            writeln!(
                s,
                "{id},{},{},{},{}",
                float(*t),
                float(p.inventory[i]),
                float(p.adjoint[i]),
                float(p.xi[i])
            )
            .unwrap();
        }
    }
    s
}

pub fn players_csv(paths: &[PlayerPath]) -> String {
    let mut s = String::from("player_id,x,tau,cost\n");
    for (id, p) in paths.iter().enumerate() {
        writeln!(s, "{id},{},{},{}", float(p.x), float(p.tau), float(p.cost)).unwrap();
    }
    s
}

/// `A` is left blank at `T`, where it is infinite.
pub fn riccati_csv(b: &RiccatiBundle) -> String {
    let mut s = String::from("t,y,A,alpha,D,Efac,h,h_dot\n");
    for (i, t) in b.grid().iter().enumerate() {
        let a = if b.a[i].is_finite() { float(b.a[i]) } else { String::new() };
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            float(*t),
            float(b.y[i]),
            a,
            float(b.alpha[i]),
            float(b.d[i]),
            float(b.efac[i]),
            float(b.h[i]),
            float(b.h_dot[i])
        )
        .unwrap();
    }
    s
}

pub fn summary_json(eq: &EquilibriumSolution, config: serde_json::Value) -> serde_json::Value {
    json!({
        "delta": eq.delta,
        "market": eq.market,
        "x_hat": eq.x_hat,
        "mu_T": eq.mu_terminal,
        "mu_0": eq.mu_initial(),
        "alpha_T": eq.alpha_terminal,
        "K1": eq.k1,
        "K2": eq.k2,
        "residual": eq.residual,
        "bisection_evaluations": eq.iterations,
        "c_upper": eq.c_upper,
        "config": config,
    })
}
