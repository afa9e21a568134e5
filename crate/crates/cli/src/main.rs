//! `fatpoint`: dimensions and non-speciality certificates for `L_d(m^n)`.
//!
//! Exit codes: 0 ok or certified, 1 usage, 2 probably special, 3 unknown,
//! 4 certification (or self-test) failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fatpoint::calculus::{expected_proj_dim, expected_vec_dim, virtual_dim};
use fatpoint::certify::{check_certificate, CertPolicy, Certifier, FactorStrategy, Family};
use fatpoint::tables::{CaseTables, ThirdCaseSign};
use fatpoint::oracle::{probe_speciality, OracleConfig, PrimeField, Speciality, DEFAULT_PRIME, DEFAULT_TRIALS};
use fatpoint::selftest::{self, SelftestOptions};
use fatpoint::store::{CacheEntry, Evidence, ResultStore, Status};
use fatpoint::sweep::{self, SweepOptions, SweepRow, COLUMNS};
use fatpoint::{Exec, SystemSpec};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_SPECIAL: u8 = 2;
const EXIT_UNKNOWN: u8 = 3;
const EXIT_FAILED: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "fatpoint", version, about = "Dimensions of linear systems of plane curves through fat points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Prime modulus for the rank oracle (below 2^31)
    #[arg(long, global = true, default_value_t = DEFAULT_PRIME)]
    prime: u64,
    /// Random point configurations tried per prime
    #[arg(long, global = true, default_value_t = DEFAULT_TRIALS)]
    trials: u32,
    /// RNG seed: decimal, 0x-hex, or `random`
    #[arg(long, global = true, default_value = "0xF47")]
    seed: String,
    /// JSON-lines result cache, read before and written after the run
    #[arg(long, global = true, value_name = "PATH")]
    cache: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the main output (certificate, table) here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Run without the rayon pool
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Virtual, expected and actual dimension of L_d(m^n)
    Dim(SpecArgs),
    /// Build and verify a non-speciality certificate for L_d(m^n)
    Certify {
        #[command(flatten)]
        spec: SpecArgs,
        /// Split n = N1 * N2 at the root
        #[arg(long, num_args = 2, value_names = ["N1", "N2"])]
        factor: Option<Vec<u64>>,
    },
    /// One row per (d, m, n) over explicit ranges
    Sweep(SweepArgs),
    /// Property grids and acceptance checks
    Selftest {
        /// Smaller grids
        #[arg(long)]
        quick: bool,
        /// Flip the sign of the third image-intersection case (negative control)
        #[arg(long, hide = true)]
        inject_image_sign_flip: bool,
    },
}

#[derive(Args, Debug)]
struct SpecArgs {
    #[arg(allow_negative_numbers = true)]
    d: i64,
    m: u64,
    n: u64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Degree range LO:HI (inclusive) or a single value
    #[arg(long, value_name = "LO:HI", value_parser = parse_range)]
    d: (i64, i64),
    /// Multiplicity range LO:HI (inclusive) or a single value
    #[arg(long, value_name = "LO:HI", value_parser = parse_range)]
    m: (i64, i64),
    /// Point counts, comma separated
    #[arg(long, value_delimiter = ',', required_unless_present = "family", conflicts_with = "family")]
    n: Vec<u64>,
    /// Point-count family: 4^h, 9^h or 4^h*9^k
    #[arg(long)]
    family: Option<Family>,
    #[arg(long, num_args = 2, value_names = ["N1", "N2"])]
    factor: Option<Vec<u64>>,
    /// Oracle only, no certificates
    #[arg(long)]
    no_certify: bool,
    /// Write 0 in wall_time_ms for byte-reproducible output
    #[arg(long)]
    no_timing: bool,
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let parse = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}"));
    match s.split_once(':') {
        Some((lo, hi)) => Ok((parse(lo)?, parse(hi)?)),
        None => parse(s).map(|v| (v, v)),
    }
}

fn parse_seed(s: &str) -> Result<u64> {
    if s.eq_ignore_ascii_case("random") {
        use std::hash::BuildHasher;
        let seed = std::collections::hash_map::RandomState::new().hash_one(std::time::SystemTime::now());
        eprintln!("seed: {seed:#x}");
        return Ok(seed);
    }
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.with_context(|| format!("invalid seed {s:?}"))
}

/// Errors that map to exit code 1.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

struct Ctx {
    oracle: OracleConfig,
    exec: Exec,
    format: Format,
    out: Option<PathBuf>,
    cache: Option<PathBuf>,
}

impl Ctx {
    fn from_opts(g: &GlobalOpts) -> Result<Ctx> {
        PrimeField::new(g.prime).map_err(|e| usage(format!("--prime: {e}")))?;
        let seed = parse_seed(&g.seed).map_err(|e| usage(e.to_string()))?;
        let exec = if g.sequential { Exec::Sequential } else { Exec::Parallel };
        Ok(Ctx {
            oracle: OracleConfig { prime: g.prime, trials: g.trials, seed, exec },
            exec,
            format: g.format,
            out: g.out.clone(),
            cache: g.cache.clone(),
        })
    }

    fn policy(&self, factor: Option<&[u64]>) -> Result<CertPolicy> {
        let factor_strategy = match factor {
            Some(&[n1, n2]) => {
                if n1 < 2 || n2 < 2 {
                    return Err(usage("--factor needs both factors at least 2"));
                }
                FactorStrategy::Fixed { n1, n2 }
            }
            _ => FactorStrategy::Auto,
        };
        Ok(CertPolicy { oracle: self.oracle, factor_strategy, ..CertPolicy::default() })
    }

    fn load_store(&self) -> Result<Arc<ResultStore>> {
        let Some(path) = &self.cache else { return Ok(Arc::default()) };
        if !path.exists() {
            return Ok(Arc::default());
        }
        let report = ResultStore::load(path)?;
        for bad in &report.malformed {
            eprintln!("warning: {}:{}: skipped malformed entry: {}", path.display(), bad.line, bad.reason);
        }
        Ok(Arc::new(report.store))
    }

    fn save_store(&self, store: &ResultStore) -> Result<()> {
        if let Some(path) = &self.cache {
            store.save(path)?;
        }
        Ok(())
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => write_file(path, text),
            None => {
                io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn spec_of(a: &SpecArgs) -> Result<SystemSpec> {
    SystemSpec::new(a.d, a.m, a.n).map_err(|e| usage(e.to_string()))
}

// ---------------------------------------------------------------------------

fn run_dim(ctx: &Ctx, args: &SpecArgs) -> Result<u8> {
    let spec = spec_of(args)?;
    let store = ctx.load_store()?;
    let expected = expected_vec_dim(spec);
    let (actual, status) = if spec.d < 0 {
        (Some(0), Status::NonSpecial)
    } else {
        let probe = probe_speciality(spec, &ctx.oracle).map_err(|e| usage(e.to_string()))?;
        let status = match probe.status {
            Speciality::NonSpecialCertified => Status::NonSpecial,
            Speciality::ProbablySpecial(gap) => Status::ProbablySpecial(gap),
            Speciality::Unknown => Status::Unknown,
        };
        let r = probe.witness().unwrap_or(&probe.primary);
        let evidence =
            Evidence::Oracle { prime: r.prime, seed: r.seed, trials: r.trials_run, witness_trial: r.witness_trial };
        store.put(CacheEntry::new(spec, status, evidence))?;
        (Some(probe.vec_dim().0), status)
    };
    ctx.save_store(&store)?;

    let virt = virtual_dim(spec).ok();
    let proj = expected_proj_dim(spec).unwrap_or(-1);
    let status_text = sweep::status_string(status);
    let text = match ctx.format {
        Format::Json => {
            let v = serde_json::json!({
                "spec": spec,
                "virtual": virt,
                "expected_projective": proj,
                "expected_vec": expected.0,
                "actual_vec": actual,
                "actual_projective": actual.map(|a| a as i64 - 1),
                "status": status_text,
            });
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Csv => {
            let row = SweepRow {
                d: spec.d,
                m: spec.m,
                n: spec.n,
                virtual_dim: virt.unwrap_or(-1),
                expected_vec: expected.0,
                oracle_vec: actual,
                status: status_text,
                cert_method: None,
                wall_time_ms: 0,
                error: None,
            };
            rows_csv(&[row])?
        }
        Format::Table => {
            let actual = actual.unwrap_or(0);
            let virt = virt.map_or("undefined".to_string(), |v| v.to_string());
            format!(
                "{spec}\n  virtual dimension        {virt}\n  expected dimension       {proj} (projective), {} (vector space)\n  \
                 actual dimension         {} (projective), {actual} (vector space)\n  status                   {status_text}\n",
                expected.0,
                actual as i64 - 1,
            )
        }
    };
    ctx.emit(&text)?;
    Ok(match status {
        Status::NonSpecial => EXIT_OK,
        Status::ProbablySpecial(_) => EXIT_SPECIAL,
        Status::Unknown => EXIT_UNKNOWN,
    })
}

fn run_certify(ctx: &Ctx, args: &SpecArgs, factor: Option<&[u64]>) -> Result<u8> {
    let spec = spec_of(args)?;
    let policy = ctx.policy(factor)?;
    let store = ctx.load_store()?;
    let certifier = Certifier::with_store(policy, store.clone());
    let cert = match certifier.certify(spec) {
        Ok(c) => c,
        Err(f) => {
            eprintln!("certification failed for {spec}: {f}");
            ctx.save_store(&store)?;
            return Ok(EXIT_FAILED);
        }
    };
    ctx.save_store(&store)?;
    let verdict = check_certificate(&cert, ctx.exec);

    let json = cert.to_json_pretty() + "\n";
    match (&ctx.out, ctx.format) {
        (Some(path), _) => {
            write_file(path, &json)?;
            print!("{}", cert.summary());
        }
        (None, Format::Json) => print!("{json}"),
        (None, _) => print!("{}", cert.summary()),
    }
    match verdict {
        Ok(()) => {
            eprintln!("verified: {spec} has dimension {} (vector space)", cert.proven_dim());
            Ok(EXIT_OK)
        }
        Err(e) => {
            eprintln!("verification failed: {e}");
            Ok(EXIT_FAILED)
        }
    }
}

fn run_sweep(ctx: &Ctx, args: &SweepArgs) -> Result<u8> {
    let (d_lo, d_hi) = args.d;
    let (m_lo, m_hi) = args.m;
    if m_lo < 0 {
        return Err(usage("--m must be non-negative"));
    }
    let ns = match args.family {
        Some(f) => vec![f.points()],
        None => args.n.clone(),
    };
    let ms: Vec<u64> = (m_lo..=m_hi).map(|m| m as u64).collect();
    let specs = sweep::grid(d_lo..=d_hi, &ms, &ns);
    for s in &specs {
        SystemSpec::new(s.d, s.m, s.n).map_err(|e| usage(e.to_string()))?;
    }

    let mut policy = ctx.policy(args.factor.as_deref())?;
    if args.family.is_some() && policy.factor_strategy == FactorStrategy::Auto {
        policy.factor_strategy = FactorStrategy::Peel(vec![4, 9]);
    }
    let opts = SweepOptions { policy, certify: !args.no_certify, timing: !args.no_timing, exec: ctx.exec };
    let store = ctx.load_store()?;
    let rows = sweep::sweep(&specs, &opts, Some(store.clone()));
    ctx.save_store(&store)?;

    let text = match ctx.format {
        Format::Csv => rows_csv(&rows)?,
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
        Format::Table => rows_table(&rows),
    };
    ctx.emit(&text)?;
    let errored = rows.iter().filter(|r| r.error.is_some()).count();
    if errored > 0 {
        eprintln!("{errored} of {} rows recorded an error", rows.len());
        return Ok(EXIT_FAILED);
    }
    Ok(EXIT_OK)
}

fn rows_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn rows_table(rows: &[SweepRow]) -> String {
    let cells: Vec<[String; 10]> = rows
        .iter()
        .map(|r| {
            [
                r.d.to_string(),
                r.m.to_string(),
                r.n.to_string(),
                r.virtual_dim.to_string(),
                r.expected_vec.to_string(),
                r.oracle_vec.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
                r.status.clone(),
                r.cert_method.clone().unwrap_or_else(|| "-".into()),
                r.wall_time_ms.to_string(),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let mut widths = COLUMNS.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |fields: &[&str]| {
        let parts: Vec<String> = fields.iter().zip(widths).map(|(f, w)| format!("{f:<w$}")).collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&COLUMNS);
    for row in &cells {
        out += &line(&row.each_ref().map(String::as_str));
    }
    out
}

fn run_selftest(ctx: &Ctx, quick: bool, flip: bool) -> Result<u8> {
    let tables = CaseTables { third_case_sign: if flip { ThirdCaseSign::Plus } else { ThirdCaseSign::Minus } };
    let opts = SelftestOptions { quick, tables, oracle: ctx.oracle, exec: ctx.exec };
    let report = selftest::run(&opts);
    let mut text = String::new();
    for c in &report.checks {
        text += &c.line();
        text.push('\n');
    }
    ctx.emit(&text)?;
    match report.first_failure() {
        None => {
            eprintln!("selftest: all {} checks passed", report.checks.len());
            Ok(EXIT_OK)
        }
        Some(c) => {
            eprintln!("selftest failed: {}", c.name);
            Ok(EXIT_FAILED)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let ctx = Ctx::from_opts(&cli.global)?;
    match &cli.command {
        Command::Dim(a) => run_dim(&ctx, a),
        Command::Certify { spec, factor } => run_certify(&ctx, spec, factor.as_deref()),
        Command::Sweep(a) => run_sweep(&ctx, a),
        Command::Selftest { quick, inject_image_sign_flip } => run_selftest(&ctx, *quick, *inject_image_sign_flip),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<Usage>() { EXIT_USAGE } else { EXIT_FAILED })
        }
    }
}
