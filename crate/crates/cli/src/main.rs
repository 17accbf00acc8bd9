use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use mlv_core::combinatorics::HarmonicWord;
use mlv_core::cyclotomic::{rat_int, CyclotomicNumber};
use mlv_core::harmonic::{harmonic_csv, harmonic_sum, valuation_at, HarmonicRow};
use mlv_core::lvalue::{
    l_direct, l_theorem_series, max_feasible_level, LSpec, SeriesSpec, Side, StabilizationStatus, ValueRecord,
};
use mlv_core::padic::{is_prime, primes_up_to, Exponent};
use mlv_core::verify::{central_row, run_suites, Grid, Suite};
use mlv_core::{Error, Strategy};

#[derive(Parser, Debug)]
#[command(name = "mlv", version, about = "p-adic multiple L-values and cyclotomic multiple harmonic values")]
struct Cli {
    /// TOML file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    strategy: Option<StrategyArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StrategyArg {
    Sequential,
    Parallel,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Sequential => Strategy::Sequential,
            StrategyArg::Parallel => Strategy::Parallel,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tables of harmonic sums H_m or harmonic values p^w H_p.
    Harmonic(HarmonicArgs),
    /// The defining integral as Riemann sums over increasing levels.
    Ldirect(LArgs),
    /// The harmonic-value series, truncated to a target precision.
    Lseries(LArgs),
    /// Both sides of the identity and the number of matching digits.
    Compare(LArgs),
    /// Verification suites.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Default)]
struct HarmonicArgs {
    #[arg(long)]
    c: Option<u64>,
    /// Word "n1,n2;t1,t2" with twists 1, -1, z or z^a.
    #[arg(long)]
    word: Option<String>,
    /// Upper index m, or a range "a..b" (inclusive).
    #[arg(long)]
    m: Option<String>,
    #[arg(long, value_delimiter = ',')]
    primes: Option<Vec<u64>>,
    #[arg(long = "primes-up-to")]
    primes_up_to: Option<u64>,
}

#[derive(Args, Debug, Default)]
struct LArgs {
    #[arg(long)]
    c: Option<u64>,
    #[arg(long = "p", value_delimiter = ',')]
    primes: Option<Vec<u64>>,
    #[arg(long = "primes-up-to")]
    primes_up_to: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u32>>,
    /// Integer exponents s_i (with --k), instead of --n.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    s: Option<Vec<i64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    k: Option<Vec<i64>>,
    /// Digits carried by the direct evaluator.
    #[arg(long)]
    precision: Option<u32>,
    #[arg(long = "M-max")]
    m_max: Option<u32>,
    #[arg(long = "L-max")]
    l_max: Option<u32>,
    /// Absolute precision requested from the series.
    #[arg(long = "target-val")]
    target_valuation: Option<i64>,
    /// Digits beyond the valuation required by compare.
    #[arg(long)]
    digits: Option<i64>,
}

#[derive(Args, Debug, Default)]
struct VerifyArgs {
    #[arg(long = "suite")]
    suites: Option<Vec<String>>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long = "M")]
    level: Option<u32>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Keys accepted in the configuration file; flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    c: Option<u64>,
    primes: Option<Vec<u64>>,
    primes_up_to: Option<u64>,
    n: Option<Vec<u32>>,
    s: Option<Vec<i64>>,
    k: Option<Vec<i64>>,
    precision: Option<u32>,
    m_max: Option<u32>,
    l_max: Option<u32>,
    target_valuation: Option<i64>,
    digits: Option<i64>,
    word: Option<String>,
    m: Option<String>,
    format: Option<Format>,
    output: Option<PathBuf>,
    strategy: Option<StrategyArg>,
    suites: Option<Vec<String>>,
    r: Option<usize>,
    level: Option<u32>,
    samples: Option<usize>,
    seed: Option<u64>,
}

/// The configuration after applying flags, file and defaults; echoed into
/// every output.
#[derive(Debug, Default, Clone, Serialize)]
struct Resolved {
    command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    primes: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    precision: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_valuation: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    digits: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    word: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<(u64, u64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    suites: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<Grid>,
    format: Format,
    strategy: Strategy,
}

enum Failure {
    Validation(String),
    Infeasible(String),
    Suites(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible(_) => Failure::Infeasible(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

fn read_config(path: &Option<PathBuf>) -> Run<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn check_primes(primes: &[u64], c: u64) -> Run<()> {
    for &p in primes {
        if p == 2 {
            return Err(Error::UnsupportedPrime.into());
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p).into());
        }
        if c.is_multiple_of(p) {
            return Err(Error::PrimeDividesConductor { p, c }.into());
        }
    }
    Ok(())
}

/// An explicit list is validated as given; a bound keeps the odd primes
/// prime to `c`.
fn resolve_primes(list: Option<Vec<u64>>, bound: Option<u64>, c: u64) -> Run<Option<Vec<u64>>> {
    let primes = match (list, bound) {
        (Some(list), _) => list,
        (None, Some(b)) => primes_up_to(b).into_iter().filter(|&p| p != 2 && !c.is_multiple_of(p)).collect(),
        (None, None) => return Ok(None),
    };
    if primes.is_empty() {
        return Err(invalid("no primes selected"));
    }
    check_primes(&primes, c)?;
    let mut primes = primes;
    primes.sort_unstable();
    primes.dedup();
    Ok(Some(primes))
}

fn parse_range(s: &str) -> Run<(u64, u64)> {
    let bad = || invalid(format!("bad index range {s:?}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s.trim(), s.trim()),
    };
    let a: u64 = a.parse().map_err(|_| bad())?;
    let b: u64 = b.parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn valuation_text(v: Option<i64>) -> String {
    v.map_or_else(|| "inf".to_string(), |v| v.to_string())
}

fn emit(out: &Option<PathBuf>, text: String) -> Run<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| invalid(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn digits_text(rec: &ValueRecord) -> String {
    let coords: Vec<String> = rec
        .digits
        .iter()
        .map(|d| d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
        .collect();
    format!("[{}]", coords.join(" | "))
}

fn record_text(rec: &ValueRecord) -> String {
    format!(
        "p={} side={} valuation={} guaranteed={} digits={}",
        rec.p,
        match rec.side {
            Side::Direct => "direct",
            Side::Series => "series",
        },
        valuation_text(rec.valuation),
        rec.guaranteed_precision,
        digits_text(rec)
    )
}

fn run_harmonic(cli: &Cli, a: &HarmonicArgs, file: FileConfig) -> Run<()> {
    let c = a.c.or(file.c).unwrap_or(2);
    let word_text = a.word.clone().or(file.word).ok_or_else(|| invalid("--word is required"))?;
    let word = HarmonicWord::parse(&word_text, c)?;
    let format = cli.format.or(file.format).unwrap_or(Format::Csv);
    let strategy: Strategy = cli.strategy.or(file.strategy).map_or(Strategy::default(), Into::into);
    let m = a.m.clone().or(file.m).map(|s| parse_range(&s)).transpose()?;
    let primes = resolve_primes(a.primes.clone().or(file.primes), a.primes_up_to.or(file.primes_up_to), c)?;
    if m.is_some() == primes.is_some() {
        return Err(invalid("give exactly one of --m or --primes/--primes-up-to"));
    }
    let resolved = Resolved {
        command: "harmonic".into(),
        c: Some(c),
        primes: primes.clone(),
        word: Some(word.to_string()),
        m,
        format,
        strategy,
        ..Resolved::default()
    };
    let mut rows = Vec::new();
    if let Some((lo, hi)) = m {
        for m in lo..=hi {
            let v = harmonic_sum(m, &word);
            rows.push(HarmonicRow {
                index: m,
                word: word.clone(),
                value: v.to_string(),
                valuation: None,
            });
        }
    } else {
        let primes = primes.expect("checked");
        let items: Vec<Run<HarmonicRow>> = strategy.map(primes, |p| {
            let scale = rat_int(p as i64).pow(word.weight() as i32);
            let v: CyclotomicNumber = harmonic_sum(p, &word).scale(&scale);
            let ctx = mlv_core::lvalue::field_context(p, c)?;
            Ok(HarmonicRow {
                index: p,
                word: word.clone(),
                valuation: valuation_at(&v, &ctx)?,
                value: v.to_string(),
            })
        });
        for r in items {
            rows.push(r?);
        }
    }
    let text = match format {
        Format::Csv => {
            let cfg = serde_json::to_string(&resolved).expect("serializable");
            format!("# config: {cfg}\n{}", harmonic_csv(&rows))
        }
        Format::Json => {
            let recs: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "index": r.index,
                        "word": r.word.to_string(),
                        "value": r.value,
                        "valuation": r.valuation,
                    })
                })
                .collect();
            to_json(&json!({ "config": resolved, "records": recs }))
        }
        Format::Text => {
            let mut s = String::new();
            for r in &rows {
                let v = r.valuation.map(|v| format!("  (valuation {v})")).unwrap_or_default();
                writeln!(s, "{}  {}  {}{v}", r.index, r.word, r.value).unwrap();
            }
            s
        }
    };
    emit(&cli.output.clone().or(file.output), text)
}

struct LConfig {
    resolved: Resolved,
    primes: Vec<u64>,
    c: u64,
    n: Option<Vec<u32>>,
    s: Vec<i64>,
    k: Vec<i64>,
    format: Format,
    out: Option<PathBuf>,
}

fn resolve_l(cli: &Cli, name: &str, a: &LArgs, file: FileConfig) -> Run<LConfig> {
    let c = a.c.or(file.c).unwrap_or(2);
    if c < 2 {
        return Err(invalid("conductor must be at least 2"));
    }
    let primes = resolve_primes(a.primes.clone().or(file.primes), a.primes_up_to.or(file.primes_up_to), c)?
        .ok_or_else(|| invalid("--p or --primes-up-to is required"))?;
    let n = a.n.clone().or(file.n);
    let s = a.s.clone().or(file.s);
    let k = a.k.clone().or(file.k);
    let (n, s, k) = match (n, s, k) {
        (Some(n), None, None) => {
            if n.is_empty() || n.contains(&0) {
                return Err(invalid("n must be a nonempty tuple of positive integers"));
            }
            let s = n.iter().map(|&x| x as i64).collect();
            let k = n.iter().map(|&x| -(x as i64)).collect();
            (Some(n), s, k)
        }
        (None, Some(s), Some(k)) if name == "ldirect" => {
            if s.is_empty() || s.len() != k.len() {
                return Err(invalid("s and k must have the same positive length"));
            }
            (None, s, k)
        }
        _ if name == "ldirect" => return Err(invalid("give --n, or both --s and --k")),
        _ => return Err(invalid("--n is required")),
    };
    let format = cli.format.or(file.format).unwrap_or(Format::Json);
    if format == Format::Csv {
        return Err(invalid("csv output is available for harmonic tables only"));
    }
    let strategy: Strategy = cli.strategy.or(file.strategy).map_or(Strategy::default(), Into::into);
    let resolved = Resolved {
        command: name.into(),
        c: Some(c),
        primes: Some(primes.clone()),
        n: n.clone(),
        s: n.is_none().then(|| s.clone()),
        k: n.is_none().then(|| k.clone()),
        precision: a.precision.or(file.precision),
        m_max: a.m_max.or(file.m_max),
        l_max: a.l_max.or(file.l_max),
        target_valuation: a.target_valuation.or(file.target_valuation),
        digits: a.digits.or(file.digits),
        format,
        strategy,
        ..Resolved::default()
    };
    Ok(LConfig {
        resolved,
        primes,
        c,
        n,
        s,
        k,
        format,
        out: cli.output.clone().or(file.output),
    })
}

fn run_ldirect(cfg: LConfig) -> Run<()> {
    let mut r = cfg.resolved;
    let precision = r.precision.unwrap_or(10);
    let m_max = r.m_max.unwrap_or(4);
    r.precision = Some(precision);
    r.m_max = Some(m_max);
    let mut records = Vec::new();
    let mut text = String::new();
    for &p in &cfg.primes {
        let spec = LSpec {
            c: cfg.c,
            p,
            s: cfg.s.iter().map(|&x| Exponent::Integer(x)).collect(),
            k: cfg.k.clone(),
            precision,
            m_max,
        };
        let st = l_direct(&spec, r.strategy)?;
        let n = cfg.n.clone().unwrap_or_default();
        let rec = ValueRecord::new(st.value.as_cyc(), cfg.c, &n, Side::Direct, st.digits, (None, Some(m_max)))?;
        let status = match st.status {
            StabilizationStatus::Stabilized => "stabilized",
            StabilizationStatus::NotStabilized => "not_stabilized",
        };
        writeln!(
            text,
            "{} stable={:?} monotone={} status={status}",
            record_text(&rec),
            st.stable,
            st.monotone
        )
        .unwrap();
        records.push(json!({
            "record": rec,
            "stable_digits": st.stable,
            "monotone": st.monotone,
            "status": status,
        }));
    }
    let out = match cfg.format {
        Format::Json => to_json(&json!({ "config": r, "records": records })),
        _ => text,
    };
    emit(&cfg.out, out)
}

fn run_lseries(cfg: LConfig) -> Run<()> {
    let mut r = cfg.resolved;
    let n = cfg.n.expect("checked");
    let sn: i64 = n.iter().sum::<u32>() as i64;
    let target = r.target_valuation.unwrap_or(sn + 4);
    r.target_valuation = Some(target);
    let spec = SeriesSpec {
        n: n.clone(),
        c: cfg.c,
        primes: cfg.primes.clone(),
        l_max: r.l_max,
        target_valuation: target,
    };
    let values = l_theorem_series(&spec, r.strategy)?;
    let mut records = Vec::new();
    let mut text = String::new();
    for v in values.values() {
        let rec = ValueRecord::new(&v.value, cfg.c, &n, Side::Series, v.guaranteed_precision, (Some(v.l_max), None))?;
        writeln!(text, "{} L_max={}", record_text(&rec), v.l_max).unwrap();
        records.push(rec);
    }
    let out = match cfg.format {
        Format::Json => to_json(&json!({ "config": r, "records": records })),
        _ => text,
    };
    emit(&cfg.out, out)
}

fn run_compare(cfg: LConfig) -> Run<()> {
    let mut r = cfg.resolved;
    let n = cfg.n.expect("checked");
    let digits = r.digits.unwrap_or(4);
    r.digits = Some(digits);
    let mut rows = Vec::new();
    let mut text = String::new();
    for &p in &cfg.primes {
        let m_max = r.m_max.unwrap_or_else(|| max_feasible_level(cfg.c, p, n.len()));
        let row = central_row(&n, cfg.c, p, digits, Some(m_max), r.strategy)?;
        writeln!(
            text,
            "p={} matched={} required={} levels={} L_max={} guaranteed={}\n  {}\n  {}",
            p,
            row.matched,
            row.required,
            row.levels,
            row.l_max,
            row.guaranteed_precision,
            record_text(&row.direct),
            record_text(&row.series)
        )
        .unwrap();
        rows.push(row);
    }
    let out = match cfg.format {
        Format::Json => to_json(&json!({ "config": r, "records": rows })),
        _ => text,
    };
    emit(&cfg.out, out)
}

fn run_verify(cli: &Cli, a: &VerifyArgs, file: FileConfig) -> Run<()> {
    let names = a.suites.clone().or(file.suites);
    let suites: Vec<Suite> = match &names {
        Some(list) => list.iter().map(|s| s.parse()).collect::<Result<_, Error>>()?,
        None => Suite::ALL.to_vec(),
    };
    let p = a.p.or(file.primes.as_ref().and_then(|v| v.first().copied()));
    if let Some(p) = p {
        check_primes(&[p], 1)?;
    }
    let format = cli.format.or(file.format).unwrap_or(Format::Json);
    if format == Format::Csv {
        return Err(invalid("csv output is available for harmonic tables only"));
    }
    let strategy: Strategy = cli.strategy.or(file.strategy).map_or(Strategy::default(), Into::into);
    let grid = Grid {
        r: a.r.or(file.r),
        p,
        level: a.level.or(file.level),
        samples: a.samples.or(file.samples),
        seed: a.seed.or(file.seed),
        strategy,
    };
    if grid.level == Some(0) || grid.r == Some(0) {
        return Err(invalid("r and M must be positive"));
    }
    let resolved = Resolved {
        command: "verify".into(),
        suites: Some(suites.iter().map(|s| s.to_string()).collect()),
        grid: Some(grid.clone()),
        format,
        strategy,
        ..Resolved::default()
    };
    let reports = run_suites(&suites, &grid);
    for rep in &reports {
        eprintln!("{}: {:.2}s", rep.name, rep.seconds);
    }
    let passed = reports.iter().all(|r| r.passed);
    let out = match format {
        Format::Json => to_json(&json!({ "config": resolved, "passed": passed, "suites": reports })),
        _ => {
            let mut s = String::new();
            for rep in &reports {
                let status = if rep.passed { "PASS" } else { "FAIL" };
                writeln!(s, "{status} {} ({} checks)", rep.name, rep.checks).unwrap();
                for d in &rep.details {
                    writeln!(s, "    {d}").unwrap();
                }
                for f in &rep.failures {
                    writeln!(s, "    failure: {f}").unwrap();
                }
            }
            s
        }
    };
    emit(&cli.output.clone().or(file.output), out)?;
    if passed {
        Ok(())
    } else {
        let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
        Err(Failure::Suites(failed.join(", ")))
    }
}

fn run(cli: &Cli) -> Run<()> {
    let file = read_config(&cli.config)?;
    match &cli.command {
        Command::Harmonic(a) => run_harmonic(cli, a, file),
        Command::Ldirect(a) => run_ldirect(resolve_l(cli, "ldirect", a, file)?),
        Command::Lseries(a) => run_lseries(resolve_l(cli, "lseries", a, file)?),
        Command::Compare(a) => run_compare(resolve_l(cli, "compare", a, file)?),
        Command::Verify(a) => run_verify(cli, a, file),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Suites(names)) => {
            eprintln!("error: failing suites: {names}");
            ExitCode::from(1)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Infeasible(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
