//! The `cwbench` command line.
//!
//! [`run`] takes the argument list and output streams and returns the exit
//! code, so the binary is a one-line wrapper and tests drive it in-process.
//! Exit codes: 0 ok, 1 unexpected check failure, 2 usage or input error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::formulas::{FormulaId, FormulaParams};
use crate::geometry::{flattened_mci, BodySpec, QuadratureGrid, SupportBody};
use crate::grassmann::{frame_at, SubspaceFrame};
use crate::report::{to_csv, to_jsonl, to_text, CheckReport, Config, ConfigValue, Sig17};
use crate::symbolic::Atom;
use crate::verify::{self, Summary};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "cwbench", version, about = "Mean curvature integral workbench: exact formulas and numeric oracles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print a formula as a canonical polynomial, or evaluate it on a body.
    Eval(EvalArgs),
    /// Quadrature quantities of a body, or derived body specs.
    Body(BodyArgs),
    /// Run a check or a suite and emit reports.
    Verify(VerifyArgs),
    /// Dump uniformly random frames of r-planes.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Default, Args)]
struct Indices {
    #[arg(long)]
    n: Option<i64>,
    #[arg(long)]
    r: Option<i64>,
    #[arg(long)]
    l: Option<i64>,
    #[arg(long)]
    i: Option<i64>,
    #[arg(long)]
    s: Option<i64>,
    #[arg(long)]
    q: Option<i64>,
    #[arg(long)]
    t: Option<i64>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Formula id, e.g. thm-1.1 or eq-2.7.
    id: String,
    #[command(flatten)]
    idx: Indices,
    /// Body spec file; binds every atom numerically.
    #[arg(long)]
    body: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Width h; defaults to the body's constant width.
    #[arg(long)]
    h: Option<f64>,
    /// Seed of a random projection frame; the coordinate r-plane otherwise.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Quantity {
    Mci,
    Volume,
    Width,
    Project,
    Parallel,
}

#[derive(Debug, Args)]
struct BodyArgs {
    quantity: Quantity,
    /// Body spec file.
    spec: PathBuf,
    /// Dimension of a ball spec without `dim`.
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Index of the mean curvature integral; all indices when absent.
    #[arg(long)]
    i: Option<usize>,
    /// Quadrature resolution (circle nodes or Gauss–Legendre order).
    #[arg(long)]
    resolution: Option<usize>,
    /// Width: report max and min over the validation grid.
    #[arg(long)]
    all: bool,
    /// Width: direction, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    dir: Option<Vec<f64>>,
    /// Project: rank of the target plane.
    #[arg(long)]
    r: Option<usize>,
    /// Project: seed of a random frame (coordinate plane otherwise).
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel: distance.
    #[arg(long)]
    rho: Option<f64>,
    /// Where to write a derived body spec (stdout otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Suite (exact-identities, oracle-numeric, statistical, full) or check id.
    target: String,
    #[command(flatten)]
    idx: Indices,
    #[arg(long)]
    body: Option<PathBuf>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sweep 2 <= n <= n-max over every (r, l) for the internal checks.
    #[arg(long)]
    n_max: Option<usize>,
    /// JSON-lines report path; a CSV summary is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads (0: one per core).
    #[arg(long, env = "CWBENCH_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 10)]
    count: u64,
    #[arg(long, default_value_t = verify::DEFAULT_SEED)]
    seed: u64,
}

/// A failure with its exit code.
struct Exit(i32, String);

fn usage(e: impl std::fmt::Display) -> Exit {
    Exit(2, e.to_string())
}

/// Decimal with 17 significant digits (exponent form outside `1e-5..1e17`).
pub fn sig17_plain(x: f64) -> String {
    if x == 0.0 {
        return "0.0000000000000000".into();
    }
    let sci = Sig17::format(x);
    let Some((mantissa, exp)) = sci.split_once('e') else { return sci };
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..=16).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let body = if exp >= 0 {
        let (int, frac) = digits.split_at(exp as usize + 1);
        if frac.is_empty() {
            int.to_string()
        } else {
            format!("{int}.{frac}")
        }
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    format!("{sign}{body}")
}

fn read_spec(path: &Path) -> Result<BodySpec, Exit> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    BodySpec::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Writes `contents` to `path` through a temporary sibling and a rename.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Exit> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)
        .and_then(|_| fs::rename(&tmp, path))
        .map_err(|e| Exit(2, format!("cannot write {}: {e}", path.display())))
}

fn echo(err: &mut dyn Write, args: &[OsString], effective: &serde_json::Value) {
    let line: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let _ = writeln!(err, "# cwbench {VERSION}: {}", line.join(" "));
    let _ = writeln!(err, "# effective: {effective}");
}

/// Runs the command line; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Eval(a) => cmd_eval(a, &args, out, err),
        Command::Body(a) => cmd_body(a, &args, out, err),
        Command::Verify(a) => cmd_verify(a, &args, out, err),
        Command::Sample(a) => cmd_sample(a, &args, out, err),
    };
    match result {
        Ok(code) => code,
        Err(Exit(code, message)) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

fn indices_json(idx: &Indices) -> serde_json::Map<String, serde_json::Value> {
    let mut m = serde_json::Map::new();
    for (k, v) in [("n", idx.n), ("r", idx.r), ("l", idx.l), ("i", idx.i), ("s", idx.s), ("q", idx.q), ("t", idx.t)] {
        if let Some(v) = v {
            m.insert(k.into(), v.into());
        }
    }
    m
}

/// Lazily computed numeric values of every atom kind.
struct Binder<'a> {
    body: &'a SupportBody,
    frame_seed: Option<u64>,
    r_flag: Option<usize>,
    projections: BTreeMap<usize, SupportBody>,
}

impl Binder<'_> {
    fn projection(&mut self, r: usize) -> Result<&SupportBody, Exit> {
        if !self.projections.contains_key(&r) {
            let n = self.body.dim();
            let frame = match self.frame_seed {
                Some(seed) => frame_at(n, r, seed, 0),
                None => SubspaceFrame::coordinate(n, r),
            }
            .map_err(usage)?;
            let proj = self.body.project(&frame).map_err(usage)?;
            self.projections.insert(r, proj);
        }
        Ok(&self.projections[&r])
    }

    fn quermass(body: &SupportBody, k: usize) -> Result<f64, Exit> {
        let n = body.dim();
        if k == 0 {
            body.volume().map_err(usage)
        } else {
            Ok(body.mean_curvature_integral(k - 1).map_err(usage)? / n as f64)
        }
    }

    fn value(&mut self, atom: Atom) -> Result<f64, Exit> {
        let n = self.body.dim();
        let check_n = |d: u32| {
            if d as usize == n {
                Ok(())
            } else {
                Err(usage(format!("atom {atom} needs a body of dimension {d}, got {n}")))
            }
        };
        match atom {
            Atom::VolProj(r) => self.projection(r as usize)?.volume().map_err(usage),
            Atom::MciProj(r, i) => self.projection(r as usize)?.mean_curvature_integral(i as usize).map_err(usage),
            Atom::QuermassProj(r, k) => Self::quermass(self.projection(r as usize)?, k as usize),
            Atom::MciBody(d, i) => {
                check_n(d)?;
                self.body.mean_curvature_integral(i as usize).map_err(usage)
            }
            Atom::Quermass(d, k) => {
                check_n(d)?;
                Self::quermass(self.body, k as usize)
            }
            Atom::MciFlat(d, q) => {
                check_n(d)?;
                let r = self.r_flag.ok_or_else(|| usage(format!("atom {atom} needs --r")))?;
                let proj = self.projection(r)?.clone();
                flattened_mci(n, &proj, q as usize).map_err(usage)
            }
            Atom::Width | Atom::Rho => unreachable!("bound by the caller"),
        }
    }
}

fn cmd_eval(a: &EvalArgs, args: &[OsString], out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    let id: FormulaId = a.id.parse().map_err(|e| {
        let ids: Vec<&str> = FormulaId::ALL.iter().map(|f| f.as_str()).collect();
        usage(format!("{e}; valid ids: {}", ids.join(", ")))
    })?;
    let params = FormulaParams { n: a.idx.n, r: a.idx.r, l: a.idx.l, i: a.idx.i, s: a.idx.s, q: a.idx.q, t: a.idx.t };
    let poly = id.build(&params).map_err(usage)?;
    let mut effective = indices_json(&a.idx);
    effective.insert("id".into(), id.as_str().into());
    let Some(path) = &a.body else {
        echo(err, args, &effective.into());
        let _ = writeln!(out, "{poly}");
        return Ok(0);
    };
    let spec = read_spec(path)?;
    let dim = a.idx.n.map(|n| n as usize).unwrap_or(3);
    let body = spec.build(dim).map_err(usage)?;
    let h = match a.h {
        Some(h) => h,
        None => body.constant_width(verify::WIDTH_TOLERANCE).map_err(usage)?.unwrap_or(f64::NAN),
    };
    effective.insert("body".into(), serde_json::to_value(&spec).expect("spec serializes"));
    effective.insert("rho".into(), a.rho.into());
    if h.is_finite() {
        effective.insert("h".into(), h.into());
    }
    if let Some(seed) = a.seed {
        effective.insert("seed".into(), seed.into());
    }
    echo(err, args, &effective.into());
    let mut binder = Binder {
        body: &body,
        frame_seed: a.seed,
        r_flag: a.idx.r.map(|r| r as usize),
        projections: BTreeMap::new(),
    };
    let mut bindings = BTreeMap::from([(Atom::Rho, a.rho)]);
    for atom in poly.atoms() {
        match atom {
            Atom::Rho => {}
            Atom::Width if !h.is_finite() => return Err(usage("body is not of constant width; pass --h")),
            Atom::Width => {
                bindings.insert(atom, h);
            }
            other => {
                bindings.insert(other, binder.value(other)?);
            }
        }
    }
    let value = poly.eval(&bindings).map_err(usage)?;
    let _ = writeln!(out, "{}", sig17_plain(value));
    if let Some(exact) = poly.as_constant() {
        let _ = writeln!(err, "# exact: {exact}");
    }
    Ok(0)
}

fn cmd_body(a: &BodyArgs, args: &[OsString], out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    let spec = read_spec(&a.spec)?;
    let body = spec.build(a.dim).map_err(usage)?;
    let grid = match a.resolution {
        Some(res) => QuadratureGrid::with_resolution(body.dim(), res).map_err(usage)?,
        None => QuadratureGrid::default_for(body.dim()).map_err(usage)?.clone(),
    };
    let mut effective = serde_json::Map::new();
    effective.insert("quantity".into(), format!("{:?}", a.quantity).to_lowercase().into());
    effective.insert("body".into(), serde_json::to_value(body.to_spec()).expect("spec serializes"));
    effective.insert("resolution".into(), grid.resolution().into());
    match a.quantity {
        Quantity::Mci => {
            let indices: Vec<usize> = match a.i {
                Some(i) => vec![i],
                None => (0..body.dim()).collect(),
            };
            echo(err, args, &effective.into());
            for i in indices {
                let m = body.mean_curvature_integral_on(&grid, i).map_err(usage)?;
                let _ = writeln!(out, "M_{i} = {}  (resolution {})", sig17_plain(m), grid.resolution());
            }
        }
        Quantity::Volume => {
            echo(err, args, &effective.into());
            let v = body.volume_on(&grid).map_err(usage)?;
            let _ = writeln!(out, "volume = {}  (resolution {})", sig17_plain(v), grid.resolution());
        }
        Quantity::Width => {
            echo(err, args, &effective.into());
            if let Some(dir) = &a.dir {
                let w = body.width(dir).map_err(usage)?;
                let _ = writeln!(out, "width = {}", sig17_plain(w));
            }
            if a.all || a.dir.is_none() {
                let (lo, hi) = body.width_range().map_err(usage)?;
                let _ = writeln!(out, "max {}", sig17_plain(hi));
                let _ = writeln!(out, "min {}", sig17_plain(lo));
            }
        }
        Quantity::Project => {
            let r = a.r.ok_or_else(|| usage("project needs --r"))?;
            let frame = match a.seed {
                Some(seed) => frame_at(body.dim(), r, seed, 0),
                None => SubspaceFrame::coordinate(body.dim(), r),
            }
            .map_err(usage)?;
            effective.insert("r".into(), r.into());
            if let Some(seed) = a.seed {
                effective.insert("seed".into(), seed.into());
            }
            echo(err, args, &effective.into());
            emit_spec(&body.project(&frame).map_err(usage)?.to_spec(), a.out.as_deref(), out)?;
        }
        Quantity::Parallel => {
            let rho = a.rho.ok_or_else(|| usage("parallel needs --rho"))?;
            effective.insert("rho".into(), rho.into());
            echo(err, args, &effective.into());
            emit_spec(&body.parallel(rho).map_err(usage)?.to_spec(), a.out.as_deref(), out)?;
        }
    }
    Ok(0)
}

fn emit_spec(spec: &BodySpec, path: Option<&Path>, out: &mut dyn Write) -> Result<(), Exit> {
    let text = serde_json::to_string_pretty(spec).expect("spec serializes") + "\n";
    match path {
        Some(p) => write_atomic(p, &text),
        None => {
            let _ = write!(out, "{text}");
            Ok(())
        }
    }
}

fn verify_config(a: &VerifyArgs) -> Result<Config, Exit> {
    let mut config = Config::new();
    for (k, v) in [
        ("n", a.idx.n),
        ("r", a.idx.r),
        ("l", a.idx.l),
        ("i", a.idx.i),
        ("s", a.idx.s),
        ("q", a.idx.q),
        ("t", a.idx.t),
    ] {
        if let Some(v) = v {
            config.insert(k.into(), ConfigValue::Int(v));
        }
    }
    if let Some(rho) = a.rho {
        config.insert("rho".into(), ConfigValue::Real(rho));
    }
    for (k, v) in [("samples", a.samples), ("seed", a.seed)] {
        if let Some(v) = v {
            let v = i64::try_from(v).map_err(|_| usage(format!("--{k} is too large")))?;
            config.insert(k.into(), ConfigValue::Int(v));
        }
    }
    if let Some(path) = &a.body {
        config.insert("body".into(), ConfigValue::Body(read_spec(path)?));
    }
    Ok(config)
}

fn cmd_verify(a: &VerifyArgs, args: &[OsString], out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    let config = verify_config(a)?;
    let mut effective = serde_json::Map::new();
    effective.insert("target".into(), a.target.clone().into());
    effective.insert("threads".into(), a.threads.into());
    effective.insert("config".into(), serde_json::to_value(&config).expect("config serializes"));
    let configs: Vec<(&str, Config)> = if verify::SUITES.contains(&a.target.as_str()) {
        verify::suite_configs(&a.target).map_err(usage)?
    } else {
        let id = verify::check_ids()
            .into_iter()
            .find(|c| *c == a.target)
            .ok_or_else(|| usage(verify::VerifyError::UnknownCheck(a.target.clone())))?;
        match a.n_max {
            Some(n_max) if matches!(id, "thm1-internal" | "thm2-internal") => {
                effective.insert("n_max".into(), n_max.into());
                verify::exact_sweep(id, n_max)
            }
            Some(_) => return Err(usage("--n-max applies to thm1-internal and thm2-internal only")),
            None => vec![(id, config)],
        }
    };
    echo(err, args, &effective.into());
    let reports: Vec<CheckReport> = verify::with_threads(a.threads, || verify::run_all(&configs)).map_err(usage)?;
    let rendered = match a.format {
        Format::Json => to_jsonl(&reports),
        Format::Csv => to_csv(&reports),
        Format::Text => to_text(&reports),
    };
    let _ = write!(out, "{rendered}");
    if let Some(path) = &a.out {
        write_atomic(path, &to_jsonl(&reports))?;
        write_atomic(&path.with_extension("csv"), &to_csv(&reports))?;
    }
    let summary = Summary::of(&reports);
    let _ = writeln!(
        err,
        "# {} reports: pass={} fail={} discrepancy-documented={}",
        reports.len(),
        summary.pass,
        summary.fail,
        summary.documented
    );
    Ok(if summary.ok() { 0 } else { 1 })
}

fn cmd_sample(a: &SampleArgs, args: &[OsString], out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    let mut effective = serde_json::Map::new();
    for (k, v) in [("n", a.n as u64), ("r", a.r as u64), ("count", a.count), ("seed", a.seed)] {
        effective.insert(k.into(), v.into());
    }
    echo(err, args, &effective.into());
    for k in 0..a.count {
        let frame = frame_at(a.n, a.r, a.seed, k).map_err(usage)?;
        let vectors: Vec<Vec<Sig17>> = frame.vectors().iter().map(|v| v.iter().map(|&x| Sig17(x)).collect()).collect();
        let line = serde_json::json!({ "index": k, "seed": a.seed, "vectors": vectors });
        let _ = writeln!(out, "{line}");
    }
    Ok(0)
}
