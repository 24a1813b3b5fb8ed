//! Command-line driver: parses flags, runs a convergence study or a
//! time-dependent scenario and writes CSV files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use cweno_net::cweno::{validate_conditions, NamedSet, ParamSet};
use cweno_net::harness::scenarios::{convergence_study, run_scenario, EdgeSnapshot, ScenarioKind, Snapshot};
use cweno_net::harness::{ConvergenceRow, ConvergenceTable};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] clap::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Solver(#[from] cweno_net::Error),

    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("malformed CSV at line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmitKind {
    /// Convergence table `n,h,error,eoc`.
    Table,
    /// Cell averages per edge at the snapshot times.
    Snapshot,
}

/// Parameter selection: a built-in set or user-supplied values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamChoice {
    Named(NamedSet),
    Custom(ParamSet),
}

impl ParamChoice {
    pub fn params(&self) -> ParamSet {
        match self {
            ParamChoice::Named(s) => s.params(),
            ParamChoice::Custom(p) => *p,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ParamChoice::Named(s) => s.name(),
            ParamChoice::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub scenario: ScenarioKind,
    pub param_set: ParamChoice,
    pub n_min: u32,
    pub n_max: u32,
    /// Table file (stdout when absent) or snapshot directory.
    pub out: Option<PathBuf>,
    pub emit: EmitKind,
    /// Snapshot times; the scenario defaults when empty.
    pub times: Vec<f64>,
    /// Reference level override for reference-based error measures.
    pub n_ref: Option<u32>,
    /// Violated accuracy conditions of custom parameters.
    pub warnings: Vec<String>,
}

#[derive(Debug, Parser)]
#[command(name = "cweno-net", version, about = "CWENO finite-volume solver on networks")]
struct Args {
    /// Scenario name, e.g. recon-smooth, traffic-smooth, channel-network, dam-break-a.
    #[arg(long)]
    scenario: String,

    /// sigma1 | sigma2 | sigma3 | sigma4 | sigma5.1 | sigma5.2 | sigma5.3 | sigma6.2 | custom
    #[arg(long, default_value = "sigma1")]
    params: String,

    #[arg(long = "n-min")]
    n_min: Option<u32>,

    #[arg(long = "n-max")]
    n_max: Option<u32>,

    /// Output file (table) or directory (snapshot).
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = EmitKind::Table)]
    emit: EmitKind,

    /// Comma-separated snapshot times.
    #[arg(long, value_delimiter = ',')]
    times: Vec<f64>,

    /// Reference level for scenarios measured against a fine solution.
    #[arg(long = "n-ref")]
    n_ref: Option<u32>,

    #[arg(long = "K")]
    k: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    p: Option<u32>,
    #[arg(long = "K0")]
    k0: Option<f64>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long = "K1")]
    k1: Option<f64>,
    #[arg(long)]
    gamma1: Option<f64>,
    /// Constant epsilon (sets q = 0).
    #[arg(long)]
    eps: Option<f64>,
}

impl Args {
    fn custom_given(&self) -> bool {
        [self.k, self.q, self.k0, self.gamma0, self.k1, self.gamma1, self.eps].iter().any(Option::is_some)
            || self.p.is_some()
    }

    /// Unset custom values default to the first named set.
    fn custom_params(&self) -> Result<ParamSet> {
        let base = NamedSet::Sigma1.params();
        let p = self.p.unwrap_or(base.p);
        let k0 = self.k0.unwrap_or(base.k0);
        let gamma0 = self.gamma0.unwrap_or(base.gamma0);
        let k1 = self.k1.unwrap_or(base.k1);
        let gamma1 = self.gamma1.unwrap_or(base.gamma1);
        let set = match self.eps {
            Some(eps) => {
                if self.q.is_some_and(|q| q != 0.0) || self.k.is_some() {
                    return Err(CliError::Config("--eps cannot be combined with --K or a nonzero --q".into()));
                }
                ParamSet::constant_eps(eps, p, k0, gamma0, k1, gamma1)
            }
            None => ParamSet::scaled(self.k.unwrap_or(base.k), self.q.unwrap_or(base.q), p, k0, gamma0, k1, gamma1),
        };
        Ok(set?)
    }
}

/// Parses the arguments following the program name.
pub fn parse_args<I, S>(argv: I) -> Result<CliConfig>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(std::iter::once("cweno-net".into()).chain(argv.into_iter().map(Into::into)))?;
    let scenario: ScenarioKind = args.scenario.parse()?;
    let mut warnings = Vec::new();
    let param_set = if args.params.eq_ignore_ascii_case("custom") {
        let p = args.custom_params()?;
        let report = validate_conditions(&p);
        for c in report.failures() {
            warnings.push(format!("accuracy condition {} violated ({} vs {})", c.condition, c.lhs, c.rhs));
        }
        ParamChoice::Custom(p)
    } else {
        if args.custom_given() {
            return Err(CliError::Config("--K/--q/--p/--K0/--gamma0/--K1/--gamma1/--eps need --params custom".into()));
        }
        ParamChoice::Named(args.params.parse()?)
    };
    let spec = scenario.spec();
    let n_max = args.n_max.unwrap_or(spec.levels.1);
    let n_min = args.n_min.unwrap_or(spec.levels.0.min(n_max));
    if n_min > n_max {
        return Err(CliError::Config(format!("--n-min {n_min} exceeds --n-max {n_max}")));
    }
    if let Some(t) = args.times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(CliError::Config(format!("snapshot time {t} is not a non-negative number")));
    }
    if args.emit == EmitKind::Snapshot && args.out.is_none() {
        return Err(CliError::Config("--emit snapshot needs --out <directory>".into()));
    }
    Ok(CliConfig {
        scenario,
        param_set,
        n_min,
        n_max,
        out: args.out,
        emit: args.emit,
        times: args.times,
        n_ref: args.n_ref,
        warnings,
    })
}

/// Scientific notation with a signed exponent of at least two digits.
fn pad_exponent(s: String) -> String {
    match s.split_once('e') {
        Some((m, e)) => {
            let (sign, digits) = match e.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', e),
            };
            format!("{m}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

/// Six mantissa decimals: `3.220000e-01`.
pub fn format_error(x: f64) -> String {
    pad_exponent(format!("{x:.6e}"))
}

/// Shortest round-trip mantissa with at least two decimals: `1.25e-01`, `5.00e-01`.
pub fn format_exact(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:e}");
    let (m, e) = s.split_once('e').expect("exponent present");
    let m = match m.split_once('.') {
        Some((i, f)) if f.len() >= 2 => format!("{i}.{f}"),
        Some((i, f)) => format!("{i}.{f:0<2}"),
        None => format!("{m}.00"),
    };
    pad_exponent(format!("{m}e{e}"))
}

pub fn write_table_csv(table: &ConvergenceTable, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "n,h,error,eoc")?;
    for r in &table.rows {
        let eoc = r.eoc.map(|e| format!("{e:.2}")).unwrap_or_default();
        writeln!(w, "{},{},{},{}", r.n, format_exact(r.h), format_error(r.error), eoc)?;
    }
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Writes the table as CSV to `path`.
pub fn emit_table_csv(table: &ConvergenceTable, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_table_csv(table, &mut buf).expect("writing to memory");
    fs::write(path, buf).map_err(io_err(path))
}

/// Parses CSV written by [`write_table_csv`].
pub fn parse_table_csv(text: &str, scenario: &str, params: &str) -> Result<ConvergenceTable> {
    let mut lines = text.lines();
    if lines.next() != Some("n,h,error,eoc") {
        return Err(CliError::Csv { line: 1, msg: "expected header n,h,error,eoc".into() });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let bad = |msg: &str| CliError::Csv { line: i + 2, msg: format!("{msg}: '{line}'") };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        rows.push(ConvergenceRow {
            n: f[0].parse().map_err(|_| bad("bad n"))?,
            h: f[1].parse().map_err(|_| bad("bad h"))?,
            error: f[2].parse().map_err(|_| bad("bad error"))?,
            eoc: if f[3].is_empty() { None } else { Some(f[3].parse().map_err(|_| bad("bad eoc"))?) },
        });
    }
    Ok(ConvergenceTable { scenario: scenario.into(), params: params.into(), rows })
}

pub fn write_edge_csv(edge: &EdgeSnapshot, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "x_center,{}", edge.components.join(","))?;
    for (x, vals) in edge.x_center.iter().zip(&edge.values) {
        write!(w, "{}", format_exact(*x))?;
        for v in vals {
            write!(w, ",{}", format_exact(*v))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Writes one file per edge, `<stem>_t<t>_<edge>.csv`, into `dir`.
pub fn emit_snapshot_csv(snapshot: &Snapshot, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::with_capacity(snapshot.edges.len());
    for edge in &snapshot.edges {
        let path = dir.join(format!("{stem}_t{}_{}.csv", snapshot.t, edge.name));
        let mut buf = Vec::new();
        write_edge_csv(edge, &mut buf).expect("writing to memory");
        fs::write(&path, buf).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutput {
    Table { table: ConvergenceTable, path: Option<PathBuf> },
    Snapshots { files: Vec<PathBuf>, steps: usize },
}

pub fn run(config: &CliConfig) -> Result<RunOutput> {
    let spec = config.scenario.spec();
    let params = config.param_set.params();
    match config.emit {
        EmitKind::Table => {
            let ns: Vec<u32> = (config.n_min..=config.n_max).collect();
            let table = convergence_study(&spec, &params, config.param_set.name(), &ns, config.n_ref)?;
            match &config.out {
                Some(path) => emit_table_csv(&table, path)?,
                None => write_table_csv(&table, io::stdout().lock()).map_err(io_err(Path::new("<stdout>")))?,
            }
            Ok(RunOutput::Table { table, path: config.out.clone() })
        }
        EmitKind::Snapshot => {
            let dir = config.out.as_deref().ok_or_else(|| CliError::Config("snapshot output needs --out".into()))?;
            let n = config.n_max;
            let outcome = run_scenario(&spec, &params, n, &config.times)?;
            let stem = format!("{}_{}_n{n}", config.scenario, config.param_set.name());
            let mut files = Vec::new();
            for shot in &outcome.snapshots {
                files.extend(emit_snapshot_csv(shot, dir, &stem)?);
            }
            Ok(RunOutput::Snapshots { files, steps: outcome.steps })
        }
    }
}
