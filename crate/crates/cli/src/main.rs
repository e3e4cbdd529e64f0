//! `qgrad` experiment runner.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use qgrad::gradient::Route;
use qgrad::suite::{self, round15, ExperimentConfig, Table};

#[derive(Parser)]
#[command(name = "qgrad", version, about = "q-Fock gradient laboratory: verification and decay reports")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the identity checks; exit 1 if any fails.
    Verify(Flags),
    /// Level norms and the Schatten ratio of Ψ^{a,b}.
    Decay(Flags),
    /// Schatten verdicts over a q grid.
    Threshold(Flags),
    /// T-block norms of the AO witness.
    AoDecay(Flags),
    /// Ψ^{e_l,e_m} coefficients on the circle.
    Torus(Flags),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct Flags {
    /// JSON file with config fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; verify defaults to json, the rest to csv.
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    max_level: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    /// Comma-separated 1-based basis indices, one per tensor factor.
    #[arg(long, value_delimiter = ',')]
    word_a: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    word_b: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    word_x: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    word_y: Option<Vec<usize>>,
    /// Frequency window K (torus, Poisson AO model).
    #[arg(long)]
    window: Option<i64>,
    /// lo:hi:step
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override every verification tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// direct, partition or rstar.
    #[arg(long)]
    route: Option<String>,
    /// Torus semigroup: heat or poisson.
    #[arg(long)]
    kind: Option<String>,
    /// AO model: ou or poisson.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    l: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    m: Option<i64>,
    /// Samples per identity in verify.
    #[arg(long)]
    tuples: Option<usize>,
}

impl Flags {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { c.$f = v.clone(); } )* };
        }
        set!(q, dim, p, word_a, word_b, word_x, word_y, window, grid, seed, kind, model, l, m, tuples);
        if self.max_level.is_some() {
            c.max_level = self.max_level;
        }
        if self.tol.is_some() {
            c.tol = self.tol;
        }
        if let Some(r) = &self.route {
            c.route = r.parse::<Route>()?;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Serializes with every float rounded to 15 significant digits.
fn to_json<T: Serialize>(v: &T) -> anyhow::Result<String> {
    fn walk(v: &mut Value) {
        match v {
            Value::Number(n) if n.is_f64() => {
                if let Some(x) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round15(x))) {
                    *n = x;
                }
            }
            Value::Array(a) => a.iter_mut().for_each(walk),
            Value::Object(o) => o.values_mut().for_each(walk),
            _ => {}
        }
    }
    let mut value = serde_json::to_value(v)?;
    walk(&mut value);
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

fn to_csv(t: &Table) -> anyhow::Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(&t.header)?;
    for r in &t.rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

fn emit(flags: &Flags, default: Format, table: &Table, report: &impl Serialize) -> anyhow::Result<()> {
    let text = match flags.format.unwrap_or(default) {
        Format::Csv => to_csv(table)?,
        Format::Json => to_json(report)?,
    };
    match &flags.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Ok(true) when every check passed.
fn run(cmd: &Cmd) -> anyhow::Result<bool> {
    match cmd {
        Cmd::Verify(f) => {
            let r = suite::run_verify(&f.resolve()?)?;
            emit(f, Format::Json, &r.table(), &r)?;
            if !r.pass {
                eprintln!("verification failed: {}", r.failed_checks.join(", "));
            }
            Ok(r.pass)
        }
        Cmd::Decay(f) => {
            let r = suite::run_decay(&f.resolve()?)?;
            emit(f, Format::Csv, &r.table(), &r)?;
            Ok(true)
        }
        Cmd::Threshold(f) => {
            let r = suite::run_threshold(&f.resolve()?)?;
            emit(f, Format::Csv, &r.table(), &r)?;
            Ok(true)
        }
        Cmd::AoDecay(f) => {
            let r = suite::run_ao(&f.resolve()?)?;
            emit(f, Format::Csv, &r.table(), &r)?;
            Ok(true)
        }
        Cmd::Torus(f) => {
            let r = suite::run_torus(&f.resolve()?)?;
            emit(f, Format::Csv, &r.table(), &r)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
