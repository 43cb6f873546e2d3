//! Benchmark and validation driver for the pencilfft library.
//!
//! Three subcommands: `validate` solves a reference case over a resolution
//! sweep and reports max-norm errors plus the fitted convergence order,
//! `metrics` turns measured timings into speedup/efficiency columns with a
//! fitted serial fraction, and `switch-bench` times the pencil-switch
//! strategies against each other on one topology change.
//!
//! Exit codes: 2 for usage problems (bad flags, bad config, bad input
//! files), 1 for runtime failures (unsupported kernel/boundary combinations,
//! solver errors, strategy disagreement).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pencilfft::decomp::Topology;
use pencilfft::exchange::transport::run_ranks;
use pencilfft::exchange::{execute_switch, Strategy, SwitchKnobs, SwitchPlan};
use pencilfft::field::FieldBuffer;
use pencilfft::greens::{KernelId, KernelTag};
use pencilfft::grid::Layout;
use pencilfft::solver::{DerivativeScheme, SolverOptions};
use pencilfft::validation::{
    convergence_order, fit_strong_serial_fraction, fit_weak_serial_fraction, run_case, CaseKind,
};

const CSV_HEADER: &str = "case,kernel,strategy,layout,N,P,Einf,order";

/// Extra 1D transforms a fully unbounded solve performs relative to a
/// periodic one of the same resolution, used to normalize throughput.
const UNBOUNDED_WORK_FACTOR: f64 = 14.0 / 3.0;

#[derive(Parser)]
#[command(name = "pencilfft", version, about = "FFT Poisson/Biot-Savart solver benchmarks")]
struct Cli {
    /// Plain key=value file supplying defaults for flags not given
    /// explicitly (flags win over the file, the file wins over built-ins).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one reference case over a resolution sweep; emit CSV errors.
    Validate(ValidateArgs),
    /// Speedup/efficiency table and fitted serial fraction from timings.
    Metrics(MetricsArgs),
    /// Time the exchange strategies on one pencil switch.
    SwitchBench(SwitchBenchArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Reference problem to solve.
    #[arg(long, value_parser = parse_case)]
    case: Option<CaseKind>,

    /// Green's function: CHAT2 or HEJ{0,2,4,6,8,10}.
    #[arg(long, value_parser = parse_kernel, default_value = "CHAT2")]
    kernel: KernelTag,

    #[arg(long, value_enum, default_value_t = LayoutArg::Node)]
    layout: LayoutArg,

    #[arg(long, value_enum, default_value_t = StrategyArg::Nb)]
    strategy: StrategyArg,

    /// Sample counts per direction, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "33,65,129")]
    nres: Vec<usize>,

    /// Simulated rank count.
    #[arg(long, default_value_t = 2)]
    p: usize,

    /// Smoothing length over grid spacing for the regularized kernels.
    #[arg(long, default_value_t = 2.0)]
    sigma_ratio: f64,

    /// First-derivative symbol used by the rotational (tube) solve.
    #[arg(long, value_enum, default_value_t = DerivativeArg::Spectral)]
    derivative: DerivativeArg,

    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write an aggregated per-stage JSON timing profile here.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// CSV of measured timings, rows `r,T` with a baseline at r=1.
    #[arg(long)]
    input: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = ModeArg::Strong)]
    mode: ModeArg,

    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SwitchBenchArgs {
    /// Simulated rank count.
    #[arg(long, default_value_t = 4)]
    p: usize,

    /// Grid extent per direction.
    #[arg(long, default_value_t = 32)]
    n: usize,

    #[arg(long, value_enum, default_value_t = BenchStrategyArg::All)]
    strategy: BenchStrategyArg,

    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Cell,
    Node,
}

impl LayoutArg {
    fn to_lib(self) -> Layout {
        match self {
            LayoutArg::Cell => Layout::CellCentered,
            LayoutArg::Node => Layout::NodeCentered,
        }
    }

    fn name(self) -> &'static str {
        match self {
            LayoutArg::Cell => "cell",
            LayoutArg::Node => "node",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    A2a,
    Nb,
    Isr,
}

impl StrategyArg {
    fn to_lib(self) -> Strategy {
        match self {
            StrategyArg::A2a => Strategy::A2a,
            StrategyArg::Nb => Strategy::Nb,
            StrategyArg::Isr => Strategy::Isr,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchStrategyArg {
    A2a,
    Nb,
    Isr,
    All,
}

impl BenchStrategyArg {
    fn to_list(self) -> Vec<Strategy> {
        match self {
            BenchStrategyArg::A2a => vec![Strategy::A2a],
            BenchStrategyArg::Nb => vec![Strategy::Nb],
            BenchStrategyArg::Isr => vec![Strategy::Isr],
            BenchStrategyArg::All => Strategy::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DerivativeArg {
    Spectral,
    Fd2,
    Fd4,
    Fd6,
}

impl DerivativeArg {
    fn to_lib(self) -> DerivativeScheme {
        match self {
            DerivativeArg::Spectral => DerivativeScheme::Spectral,
            DerivativeArg::Fd2 => DerivativeScheme::Fd2,
            DerivativeArg::Fd4 => DerivativeScheme::Fd4,
            DerivativeArg::Fd6 => DerivativeScheme::Fd6,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModeArg {
    Strong,
    Weak,
}

enum CliError {
    /// Bad invocation or bad input file; exit 2 like a flag-parse error.
    Usage(String),
    /// The run itself failed; exit 1.
    Run(String),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_case(s: &str) -> Result<CaseKind, String> {
    s.parse()
}

fn parse_kernel(s: &str) -> Result<KernelTag, String> {
    let up = s.to_ascii_uppercase();
    KernelTag::ALL
        .into_iter()
        .find(|t| t.name() == up)
        .ok_or_else(|| {
            let names: Vec<_> = KernelTag::ALL.iter().map(|t| t.name()).collect();
            format!("unknown kernel '{s}'; expected one of {}", names.join(", "))
        })
}

fn parse_nres(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|tok| tok.trim().parse::<usize>().map_err(|e| format!("resolution '{tok}': {e}")))
        .collect()
}

/// Plain key=value defaults, keyed by the long flag spelling. Blank lines
/// and # comments are skipped; keys other subcommands use are ignored.
struct FileCfg(BTreeMap<String, String>);

impl FileCfg {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut map = BTreeMap::new();
        for (ln, line) in text.lines().enumerate() {
            let s = line.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| usage(format!("{}:{}: expected key=value", path.display(), ln + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self(map))
    }

    fn empty() -> Self {
        Self(BTreeMap::new())
    }
}

/// Replace `slot` with the config value under `key` unless the flag with id
/// `id` was given on the command line.
fn overlay<T>(
    sub: &ArgMatches,
    cfg: &FileCfg,
    id: &str,
    key: &str,
    slot: &mut T,
    parse: &dyn Fn(&str) -> Result<T, String>,
) -> Result<(), CliError> {
    if sub.value_source(id) == Some(ValueSource::CommandLine) {
        return Ok(());
    }
    if let Some(raw) = cfg.0.get(key) {
        *slot = parse(raw).map_err(|e| usage(format!("config key '{key}': {e}")))?;
    }
    Ok(())
}

fn overlay_opt<T>(
    sub: &ArgMatches,
    cfg: &FileCfg,
    id: &str,
    key: &str,
    slot: &mut Option<T>,
    parse: &dyn Fn(&str) -> Result<T, String>,
) -> Result<(), CliError> {
    if sub.value_source(id) == Some(ValueSource::CommandLine) {
        return Ok(());
    }
    if let Some(raw) = cfg.0.get(key) {
        *slot = Some(parse(raw).map_err(|e| usage(format!("config key '{key}': {e}")))?);
    }
    Ok(())
}

fn value_enum_parser<T: ValueEnum>(s: &str) -> Result<T, String> {
    T::from_str(s, true)
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let cfg = match cli.config.as_deref().map(FileCfg::load).transpose() {
        Ok(c) => c.unwrap_or_else(FileCfg::empty),
        Err(e) => return report(e),
    };
    let result = match cli.cmd {
        Cmd::Validate(mut a) => {
            let sub = matches.subcommand_matches("validate").expect("subcommand parsed");
            merge_validate(&mut a, sub, &cfg).and_then(|()| run_validate(a))
        }
        Cmd::Metrics(mut a) => {
            let sub = matches.subcommand_matches("metrics").expect("subcommand parsed");
            merge_metrics(&mut a, sub, &cfg).and_then(|()| run_metrics(a))
        }
        Cmd::SwitchBench(mut a) => {
            let sub = matches.subcommand_matches("switch-bench").expect("subcommand parsed");
            merge_switch_bench(&mut a, sub, &cfg).and_then(|()| run_switch_bench(a))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> ExitCode {
    match e {
        CliError::Usage(m) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        CliError::Run(m) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn merge_validate(a: &mut ValidateArgs, sub: &ArgMatches, cfg: &FileCfg) -> Result<(), CliError> {
    overlay_opt(sub, cfg, "case", "case", &mut a.case, &parse_case)?;
    overlay(sub, cfg, "kernel", "kernel", &mut a.kernel, &parse_kernel)?;
    overlay(sub, cfg, "layout", "layout", &mut a.layout, &value_enum_parser)?;
    overlay(sub, cfg, "strategy", "strategy", &mut a.strategy, &value_enum_parser)?;
    overlay(sub, cfg, "nres", "nres", &mut a.nres, &parse_nres)?;
    overlay(sub, cfg, "p", "p", &mut a.p, &|s| s.parse().map_err(|e| format!("{e}")))?;
    overlay(sub, cfg, "sigma_ratio", "sigma-ratio", &mut a.sigma_ratio, &|s| {
        s.parse().map_err(|e| format!("{e}"))
    })?;
    overlay(sub, cfg, "derivative", "derivative", &mut a.derivative, &value_enum_parser)?;
    overlay_opt(sub, cfg, "out", "out", &mut a.out, &|s| Ok(PathBuf::from(s)))?;
    overlay_opt(sub, cfg, "profile", "profile", &mut a.profile, &|s| Ok(PathBuf::from(s)))?;
    Ok(())
}

fn merge_metrics(a: &mut MetricsArgs, sub: &ArgMatches, cfg: &FileCfg) -> Result<(), CliError> {
    overlay_opt(sub, cfg, "input", "input", &mut a.input, &|s| Ok(PathBuf::from(s)))?;
    overlay(sub, cfg, "mode", "mode", &mut a.mode, &value_enum_parser)?;
    overlay_opt(sub, cfg, "out", "out", &mut a.out, &|s| Ok(PathBuf::from(s)))?;
    Ok(())
}

fn merge_switch_bench(
    a: &mut SwitchBenchArgs,
    sub: &ArgMatches,
    cfg: &FileCfg,
) -> Result<(), CliError> {
    overlay(sub, cfg, "p", "p", &mut a.p, &|s| s.parse().map_err(|e| format!("{e}")))?;
    overlay(sub, cfg, "n", "n", &mut a.n, &|s| s.parse().map_err(|e| format!("{e}")))?;
    overlay(sub, cfg, "strategy", "strategy", &mut a.strategy, &value_enum_parser)?;
    overlay_opt(sub, cfg, "out", "out", &mut a.out, &|s| Ok(PathBuf::from(s)))?;
    Ok(())
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Disjoint per-stage buckets: `comm_s` is reported net of `overlap_s`, so
/// the three time fields tile each stage's wall clock.
#[derive(Serialize)]
struct Buckets {
    compute_s: f64,
    overlap_s: f64,
    comm_s: f64,
    bytes: u64,
}

fn run_validate(a: ValidateArgs) -> Result<(), CliError> {
    let kind = a.case.ok_or_else(|| usage("--case is required (flag or config file)"))?;
    let layout = a.layout.to_lib();
    if a.p == 0 {
        return Err(usage("--p must be at least 1"));
    }
    if !(a.sigma_ratio > 0.0) {
        return Err(usage("--sigma-ratio must be positive"));
    }
    if a.nres.is_empty() {
        return Err(usage("--nres needs at least one resolution"));
    }
    if a.nres.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("--nres must be strictly increasing"));
    }
    let cells_of = |n: usize| match layout {
        Layout::NodeCentered => n.saturating_sub(1),
        Layout::CellCentered => n,
    };
    if let Some(&n) = a.nres.iter().find(|&&n| cells_of(n) < 4) {
        return Err(usage(format!(
            "N={n} is below the 4-cell minimum for the {} layout",
            a.layout.name()
        )));
    }

    let kernel = KernelId::with_sigma_ratio(a.kernel, a.sigma_ratio);
    let options = SolverOptions {
        strategy: a.strategy.to_lib(),
        derivative: a.derivative.to_lib(),
        ..Default::default()
    };

    let mut hs = Vec::new();
    let mut errs = Vec::new();
    let mut scale = 0.0f64;
    let mut stage_acc: BTreeMap<String, Buckets> = BTreeMap::new();
    let mut wall_acc = 0.0f64;

    for &n in &a.nres {
        let cells = cells_of(n);
        let domain = kind.domain(cells, layout).map_err(|e| CliError::Run(e.to_string()))?;
        let run = run_case(kind, kernel, layout, cells, a.p, options)
            .map_err(|e| CliError::Run(e.to_string()))?;

        hs.push(run.h);
        errs.push(run.einf);
        scale = scale.max(run.ref_scale);
        wall_acc += run.profile.wall_s;
        for st in &run.profile.stages {
            let b = st.label.clone();
            let e = stage_acc.entry(b).or_insert(Buckets {
                compute_s: 0.0,
                overlap_s: 0.0,
                comm_s: 0.0,
                bytes: 0,
            });
            e.compute_s += st.compute_s;
            e.overlap_s += st.overlap_s;
            e.comm_s += st.comm_s - st.overlap_s;
            e.bytes += st.bytes;
        }

        let factor = if (0..3).all(|d| domain.bc(d).is_fully_unbounded()) {
            UNBOUNDED_WORK_FACTOR
        } else {
            1.0
        };
        let points: usize = domain.sample_counts().iter().product();
        let throughput = factor * points as f64 / (run.wall_s * a.p as f64);
        let note = if factor != 1.0 { " (14/3 unbounded work factor)" } else { "" };
        eprintln!(
            "# {} kernel={} N={} P={} Einf={:.3e} wall={:.3}s throughput={:.3e} points/s/rank{}",
            kind.name(),
            a.kernel.name(),
            n,
            a.p,
            run.einf,
            run.wall_s,
            throughput,
            note
        );
    }

    // a rate needs at least two resolutions; single-point runs report nan
    let order = if a.nres.len() >= 2 {
        convergence_order(&hs, &errs, scale).to_string()
    } else {
        "nan".to_string()
    };
    eprintln!("# fitted order: {order}");

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for (i, &n) in a.nres.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{:.6e},{}",
            kind.name(),
            a.kernel.name(),
            a.strategy.to_lib().name(),
            a.layout.name(),
            n,
            a.p,
            errs[i],
            order
        );
    }
    write_out(&a.out, &csv)?;

    if let Some(path) = &a.profile {
        let json = serde_json::to_string_pretty(&stage_acc)
            .map_err(|e| CliError::Run(format!("profile serialization: {e}")))?;
        fs::write(path, json)
            .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
        eprintln!("# profile wall_s {:.9} -> {}", wall_acc, path.display());
    }
    Ok(())
}

fn run_metrics(a: MetricsArgs) -> Result<(), CliError> {
    let input = a.input.ok_or_else(|| usage("--input is required (flag or config file)"))?;
    let text = fs::read_to_string(&input)
        .map_err(|e| usage(format!("cannot read {}: {e}", input.display())))?;

    let mut rows: Vec<(f64, f64)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let mut it = s.split(',');
        let parsed = (|| {
            let r = it.next()?.trim().parse::<f64>().ok()?;
            let t = it.next()?.trim().parse::<f64>().ok()?;
            Some((r, t))
        })();
        match parsed {
            Some(pair) => rows.push(pair),
            // a header line is tolerated at the top
            None if ln == 0 => {}
            None => {
                return Err(usage(format!("{}:{}: expected 'r,T'", input.display(), ln + 1)))
            }
        }
    }
    if rows.is_empty() {
        return Err(usage(format!("{}: no timing rows", input.display())));
    }
    let t0 = rows
        .iter()
        .find(|(r, _)| *r == 1.0)
        .map(|(_, t)| *t)
        .ok_or_else(|| usage("timings need a baseline row at r=1"))?;
    if !(t0 > 0.0) || rows.iter().any(|(r, t)| !(*r >= 1.0) || !(*t > 0.0)) {
        return Err(usage("resources must be >= 1 and times positive"));
    }

    let ranks: Vec<f64> = rows.iter().map(|(r, _)| *r).collect();
    // strong: s = T1/Tr, eta = s/r; weak: eta = T1/Tr, scaled speedup r*eta
    let (speedups, etas): (Vec<f64>, Vec<f64>) = match a.mode {
        ModeArg::Strong => {
            let s: Vec<f64> = rows.iter().map(|(_, t)| t0 / t).collect();
            let e = s.iter().zip(&ranks).map(|(s, r)| s / r).collect();
            (s, e)
        }
        ModeArg::Weak => {
            let e: Vec<f64> = rows.iter().map(|(_, t)| t0 / t).collect();
            let s = e.iter().zip(&ranks).map(|(e, r)| e * r).collect();
            (s, e)
        }
    };
    let beta = match a.mode {
        ModeArg::Strong => fit_strong_serial_fraction(&ranks, &speedups),
        ModeArg::Weak => fit_weak_serial_fraction(&ranks, &etas),
    };
    let alpha = 1.0 - beta;
    eprintln!(
        "# mode={} beta={:.6e} alpha={:.6e}",
        if a.mode == ModeArg::Strong { "strong" } else { "weak" },
        beta,
        alpha
    );

    let mut csv = String::from("r,T,speedup,efficiency,alpha,beta\n");
    for (i, (r, t)) in rows.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{:.9},{:.9},{:.9},{:.9}",
            r, t, speedups[i], etas[i], alpha, beta
        );
    }
    write_out(&a.out, &csv)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a64(mut h: u64, word: u64) -> u64 {
    for b in word.to_le_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn run_switch_bench(a: SwitchBenchArgs) -> Result<(), CliError> {
    if a.p == 0 {
        return Err(usage("--p must be at least 1"));
    }
    let global = [a.n; 3];
    let src = Topology::new(0, global, a.p, 1).map_err(|e| CliError::Run(e.to_string()))?;
    let dst = Topology::new(1, global, a.p, 1).map_err(|e| CliError::Run(e.to_string()))?;
    let cap = src.max_local_len().max(dst.max_local_len());
    let plan = SwitchPlan::new(src.clone(), dst.clone(), [0; 3], [0; 3], SwitchKnobs::default(), 11)
        .map_err(|e| CliError::Run(e.to_string()))?;

    let mut csv = String::from("strategy,p,n,bytes,wall_s,checksum\n");
    let mut checksums: Vec<u64> = Vec::new();
    for strat in a.strategy.to_list() {
        let outs = run_ranks(a.p, |rank, ep| -> pencilfft::Result<(f64, usize, u64)> {
            let mut field = FieldBuffer::new(cap);
            let n_src = src.local_len(rank);
            for (i, v) in field.active_mut()[..n_src].iter_mut().enumerate() {
                let bits = splitmix64((rank as u64) << 40 | i as u64);
                *v = (bits >> 11) as f64 / (1u64 << 53) as f64;
            }
            let t0 = Instant::now();
            let stats = execute_switch(strat, &plan, &mut field, ep, None)?;
            let wall = t0.elapsed().as_secs_f64().max(stats.wall_s);
            let n_dst = dst.local_len(rank);
            let mut h = 0xcbf2_9ce4_8422_2325;
            for v in &field.active()[..n_dst] {
                h = fnv1a64(h, v.to_bits());
            }
            Ok((wall, stats.bytes_sent, h))
        });
        let mut wall = 0.0f64;
        let mut bytes = 0usize;
        let mut checksum = 0xcbf2_9ce4_8422_2325u64;
        for o in outs {
            let (w, b, h) = o.map_err(|e| CliError::Run(e.to_string()))?;
            wall = wall.max(w);
            bytes += b;
            checksum = fnv1a64(checksum, h);
        }
        checksums.push(checksum);
        let _ = writeln!(
            csv,
            "{},{},{},{},{:.6e},{:016x}",
            strat.name(),
            a.p,
            a.n,
            bytes,
            wall,
            checksum
        );
        eprintln!("# {} wall={:.3e}s bytes={}", strat.name(), wall, bytes);
    }
    if checksums.windows(2).any(|w| w[0] != w[1]) {
        return Err(CliError::Run(
            "switch strategies disagree on the exchanged data".into(),
        ));
    }
    write_out(&a.out, &csv)
}
