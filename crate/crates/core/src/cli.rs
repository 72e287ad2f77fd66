//! `apsk-capacity` command line: CSV tables plus a JSON run manifest next
//! to each output file.
//!
//! Exit codes: 0 success, 2 invalid arguments, 3 estimator or output failure.

use std::ffi::OsString;
use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bounds::{bounds_curve, grid_point_stream, BlockTerm, BoundsOptions, BoundsRow};
use crate::capacity_mc::{coherent_capacity, CapacityEstimate, ChannelParams, McConfig, LEAF_SAMPLES};
use crate::constellation::{build_apsk_with, BuildOptions, Constellation};
use crate::error::Error;
use crate::numerics::RandomStreamSpec;
use crate::oracle::{candidate_count, exact_block_ami, OracleConfig, ReferenceSymbol, DEFAULT_BUDGET};
use crate::sweep::{linear_grid, ring_ratio_sweep, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

/// Smallest sample count accepted for a published estimate.
pub const MIN_SAMPLES: usize = 1000;

const TAG_ORACLE: u64 = 6;

#[derive(Debug, Parser)]
#[command(name = "apsk-capacity", version, about = "Capacity bounds for APSK over the blockwise noncoherent AWGN channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the points of an APSK constellation.
    Constellation(ConstellationArgs),
    /// Coherent capacity, optionally swept over the ring ratio.
    Coherent(CoherentArgs),
    /// Upper and lower bounds on the noncoherent capacity.
    Bounds(BoundsArgs),
    /// Brute-force block mutual information for small M^L.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
struct McArgs {
    /// Monte Carlo samples per estimate.
    #[arg(long, env = "APSK_SAMPLES", default_value_t = 200_000)]
    samples: usize,
    #[arg(long, env = "APSK_SEED", default_value_t = 1)]
    seed: u64,
    /// Worker threads; does not change results.
    #[arg(long)]
    threads: Option<usize>,
    /// Samples per parallel task; does not change results.
    #[arg(long, default_value_t = 16 * LEAF_SAMPLES)]
    chunk_size: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SnrArgs {
    /// First SNR point, E_s/N_0 in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr_start: f64,
    /// Last SNR point (defaults to the first).
    #[arg(long, allow_hyphen_values = true)]
    snr_stop: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    snr_step: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ConstellationArgs {
    #[arg(long)]
    rings: usize,
    #[arg(long)]
    phases: usize,
    #[arg(long)]
    ring_ratio: f64,
    #[arg(long, default_value_t = 1.0)]
    avg_energy: f64,
    #[arg(long)]
    allow_degenerate: bool,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct CoherentArgs {
    #[arg(long)]
    rings: usize,
    #[arg(long)]
    phases: usize,
    #[arg(long, required_unless_present = "ring_ratio_sweep", conflicts_with = "ring_ratio_sweep")]
    ring_ratio: Option<f64>,
    /// Ring-ratio grid `lo:step:hi`.
    #[arg(long)]
    ring_ratio_sweep: Option<String>,
    /// Draw independent streams per ring ratio instead of common random numbers.
    #[arg(long)]
    independent_streams: bool,
    #[arg(long)]
    allow_degenerate: bool,
    #[command(flatten)]
    snr: SnrArgs,
    #[command(flatten)]
    mc: McArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct BoundsArgs {
    #[arg(long)]
    rings: usize,
    #[arg(long)]
    phases: usize,
    #[arg(long)]
    ring_ratio: f64,
    /// Comma-separated block lengths, each at least 2.
    #[arg(long, value_delimiter = ',', required = true)]
    block_lengths: Vec<usize>,
    /// Use the block-energy form of I(theta; R | S).
    #[arg(long)]
    exact_block_term: bool,
    /// Fill the oracle columns where M^L fits the budget.
    #[arg(long)]
    oracle_check: bool,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    oracle_budget: u64,
    #[command(flatten)]
    snr: SnrArgs,
    #[command(flatten)]
    mc: McArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct OracleArgs {
    #[arg(long)]
    rings: usize,
    #[arg(long)]
    phases: usize,
    #[arg(long)]
    ring_ratio: f64,
    #[arg(long)]
    block_len: usize,
    /// Largest admissible M^L.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Treat the first symbol of the block as unknown too.
    #[arg(long)]
    unknown_reference: bool,
    #[command(flatten)]
    snr: SnrArgs,
    #[command(flatten)]
    mc: McArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Everything needed to regenerate an output file byte for byte.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    /// Full argument vector, binary name first.
    pub argv: Vec<String>,
    pub command: &'static str,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub stream_layout: String,
    pub timestamp: String,
    pub estimates: Vec<EstimateCount>,
    pub notes: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct EstimateCount {
    pub key: String,
    pub samples_used: u64,
}

/// `%.6g`, without locale.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn snr_grid(a: &SnrArgs) -> CliResult<Vec<f64>> {
    let stop = a.snr_stop.unwrap_or(a.snr_start);
    if stop == a.snr_start {
        return Ok(vec![a.snr_start]);
    }
    linear_grid(a.snr_start, a.snr_step, stop).map_err(usage)
}

fn mc_config(a: &McArgs) -> CliResult<McConfig> {
    if a.samples < MIN_SAMPLES {
        return Err(CliError::Usage(format!("--samples must be at least {MIN_SAMPLES}, got {}", a.samples)));
    }
    if a.chunk_size == 0 {
        return Err(CliError::Usage("--chunk-size must be positive".into()));
    }
    if a.threads == Some(0) {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    Ok(McConfig { samples: a.samples, stream: RandomStreamSpec::new(a.seed, 0), chunk_size: a.chunk_size })
}

fn constellation(rings: usize, phases: usize, ring_ratio: f64, avg_energy: f64, allow_degenerate: bool) -> CliResult<Constellation> {
    let opts = BuildOptions { allow_degenerate, ..Default::default() };
    build_apsk_with(rings, phases, ring_ratio, avg_energy, &opts).map_err(usage)
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Failure(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let io = |e: csv::Error| CliError::Failure(format!("writing {}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Failure(format!("writing {}: {e}", path.display())))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_manifest(out: &Path, manifest: &RunManifest) -> CliResult<()> {
    let path = manifest_path(out);
    let file = File::create(&path).map_err(|e| CliError::Failure(format!("writing {}: {e}", path.display())))?;
    serde_json::to_writer_pretty(file, manifest).map_err(|e| CliError::Failure(format!("writing {}: {e}", path.display())))
}

fn manifest(argv: &[String], command: &'static str, params: &impl Serialize, seed: u64, layout: &str) -> RunManifest {
    RunManifest {
        tool: "apsk-capacity",
        version: env!("CARGO_PKG_VERSION"),
        argv: argv.to_vec(),
        command,
        parameters: serde_json::to_value(params).unwrap_or(serde_json::Value::Null),
        seed,
        stream_layout: layout.to_string(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        estimates: Vec::new(),
        notes: Vec::new(),
    }
}

fn count(key: String, e: &CapacityEstimate) -> EstimateCount {
    EstimateCount { key, samples_used: e.samples_used }
}

fn cmd_constellation(a: &ConstellationArgs) -> CliResult<()> {
    let c = constellation(a.rings, a.phases, a.ring_ratio, a.avg_energy, a.allow_degenerate)?;
    let header = ["index", "ring", "phase_index", "re", "im", "amplitude", "phase_rad"];
    let rows: Vec<Vec<String>> = c
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let phase = p.arg().rem_euclid(std::f64::consts::TAU);
            vec![
                i.to_string(),
                (i / c.phases_per_ring()).to_string(),
                (i % c.phases_per_ring()).to_string(),
                format_sig(p.re),
                format_sig(p.im),
                format_sig(p.norm()),
                format_sig(phase),
            ]
        })
        .collect();
    match &a.out {
        Some(path) => write_csv(path, &header, &rows),
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            let io = |e: csv::Error| CliError::Failure(e.to_string());
            w.write_record(header).map_err(io)?;
            for row in &rows {
                w.write_record(row).map_err(io)?;
            }
            w.flush().map_err(|e| CliError::Failure(e.to_string()))
        }
    }
}

fn cmd_coherent(a: &CoherentArgs, argv: &[String]) -> CliResult<()> {
    let mc = mc_config(&a.mc)?;
    let snrs = snr_grid(&a.snr)?;
    let mut man = manifest(argv, "coherent", a, a.mc.seed, "");

    let (header, rows): (Vec<&str>, Vec<Vec<String>>) = if let Some(sweep) = &a.ring_ratio_sweep {
        let parts: Vec<f64> = sweep
            .split(':')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| CliError::Usage(format!("--ring-ratio-sweep expects lo:step:hi, got `{sweep}`")))?;
        let [lo, step, hi] = parts[..] else {
            return Err(CliError::Usage(format!("--ring-ratio-sweep expects lo:step:hi, got `{sweep}`")));
        };
        let r_grid = linear_grid(lo, step, hi).map_err(usage)?;
        for &r in &r_grid {
            constellation(a.rings, a.phases, r, 1.0, a.allow_degenerate)?;
        }
        let mut spec = SweepSpec::new(a.rings, a.phases, r_grid, snrs, mc);
        spec.common_random_numbers = !a.independent_streams;
        spec.allow_degenerate = a.allow_degenerate;
        let table = with_threads(a.mc.threads, || ring_ratio_sweep(&spec))??;
        let max_bits = ((a.rings * a.phases) as f64).log2();
        let rows = table
            .cells
            .iter()
            .map(|cell| {
                vec![
                    format_sig(cell.snr_db),
                    format_sig(cell.ring_ratio),
                    format_sig(cell.capacity.clamped(max_bits)),
                    format_sig(cell.capacity.std_error),
                    if table.is_tied_argmax(cell) { "1" } else { "0" }.to_string(),
                ]
            })
            .collect();
        man.stream_layout = if spec.common_random_numbers {
            "stream (seed, 0).derive(snr_index), shared by every ring ratio at that SNR".into()
        } else {
            "stream (seed, 0).derive(snr_index).derive(r_index)".into()
        };
        man.notes.push("is_argmax = 1 marks every ring ratio within 2 combined standard errors of the best estimate at that SNR".into());
        for o in &table.optima {
            let (lo, hi) = o.tie_interval();
            man.notes.push(format!(
                "snr_db {}: argmax r = {}, {} bits; tied interval [{}, {}] ({} cells)",
                format_sig(o.snr_db),
                format_sig(o.argmax_r),
                format_sig(o.capacity.mean_bits),
                format_sig(lo),
                format_sig(hi),
                o.tied_r.len()
            ));
        }
        man.estimates = table
            .cells
            .iter()
            .map(|c| count(format!("snr={} r={}", format_sig(c.snr_db), format_sig(c.ring_ratio)), &c.capacity))
            .collect();
        (vec!["snr_db", "r", "capacity_bits", "capacity_se", "is_argmax"], rows)
    } else {
        let r = a.ring_ratio.expect("clap requires --ring-ratio without a sweep");
        let c = constellation(a.rings, a.phases, r, 1.0, a.allow_degenerate)?;
        let max_bits = (c.size() as f64).log2();
        let estimates = with_threads(a.mc.threads, || {
            snrs.iter()
                .enumerate()
                .map(|(si, &snr)| {
                    let ch = ChannelParams::new(snr)?;
                    coherent_capacity(&c, &ch, &mc.derive(si as u64))
                })
                .collect::<crate::Result<Vec<_>>>()
        })??;
        man.stream_layout = "stream (seed, 0).derive(snr_index)".into();
        man.estimates = snrs.iter().zip(&estimates).map(|(s, e)| count(format!("snr={}", format_sig(*s)), e)).collect();
        let rows = snrs
            .iter()
            .zip(&estimates)
            .map(|(s, e)| vec![format_sig(*s), format_sig(e.clamped(max_bits)), format_sig(e.std_error)])
            .collect();
        (vec!["snr_db", "capacity_bits", "capacity_se"], rows)
    };
    write_csv(&a.out, &header, &rows)?;
    write_manifest(&a.out, &man)
}

pub const BOUNDS_HEADER: [&str; 15] = [
    "snr_db",
    "L",
    "coherent_bits",
    "coherent_se",
    "upper_bits",
    "upper_se",
    "lower_bits",
    "lower_raw_bits",
    "lower_se",
    "i_theta_r_disc",
    "i_theta_r_cont",
    "i_theta_rs_disc",
    "i_theta_rs_cont",
    "oracle_bits",
    "oracle_se",
];

fn bounds_record(row: &BoundsRow, oracle: Option<&CapacityEstimate>) -> Vec<String> {
    let f = format_sig;
    vec![
        f(row.snr_db),
        row.block_len.to_string(),
        f(row.coherent.mean_bits),
        f(row.coherent.std_error),
        f(row.upper_bits),
        f(row.upper_se),
        f(row.lower_bits),
        f(row.lower_raw_bits),
        f(row.lower_se),
        f(row.i_theta_r_discrete.mean_bits),
        f(row.i_theta_r_continuous.mean_bits),
        f(row.i_theta_r_given_s_discrete.mean_bits),
        f(row.i_theta_r_given_s_continuous.mean_bits),
        oracle.map(|o| f(o.mean_bits)).unwrap_or_default(),
        oracle.map(|o| f(o.std_error)).unwrap_or_default(),
    ]
}

fn cmd_bounds(a: &BoundsArgs, argv: &[String]) -> CliResult<()> {
    if let Some(&l) = a.block_lengths.iter().find(|&&l| l < 2) {
        return Err(CliError::Usage(format!(
            "--block-lengths: minimum block length is 2 (one symbol overlaps consecutive blocks), got {l}"
        )));
    }
    let mc = mc_config(&a.mc)?;
    let snrs = snr_grid(&a.snr)?;
    let c = constellation(a.rings, a.phases, a.ring_ratio, 1.0, false)?;
    let opts = BoundsOptions { block_term: if a.exact_block_term { BlockTerm::ExactBlock } else { BlockTerm::Literal } };
    let oracle_cfg = OracleConfig { budget: a.oracle_budget, reference: ReferenceSymbol::Known };

    let (rows, oracles) = with_threads(a.mc.threads, || -> crate::Result<_> {
        let rows = bounds_curve(&c, &a.block_lengths, &snrs, &mc, &opts)?;
        let mut oracles = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let (si, li) = (i / a.block_lengths.len(), i % a.block_lengths.len());
            let fits = candidate_count(c.size(), row.block_len).is_some_and(|n| n <= oracle_cfg.budget);
            if a.oracle_check && fits {
                let ch = ChannelParams::new(row.snr_db)?;
                let point = mc.with_stream(grid_point_stream(mc.stream, li, si).derive(TAG_ORACLE));
                oracles.push(Some(exact_block_ami(&c, row.block_len, &ch, &point, &oracle_cfg)?.per_symbol));
            } else {
                oracles.push(None);
            }
        }
        Ok((rows, oracles))
    })??;

    let records: Vec<Vec<String>> = rows.iter().zip(&oracles).map(|(r, o)| bounds_record(r, o.as_ref())).collect();
    write_csv(&a.out, &BOUNDS_HEADER, &records)?;

    let mut man = manifest(argv, "bounds", a, a.mc.seed, "stream (seed, 0).derive(0x53520000 + snr_index).derive(l_index), one child per term");
    for (r, o) in rows.iter().zip(&oracles) {
        let key = |term: &str| format!("snr={} L={} {term}", format_sig(r.snr_db), r.block_len);
        man.estimates.push(count(key("coherent"), &r.coherent));
        man.estimates.push(count(key("i_theta_r_disc"), &r.i_theta_r_discrete));
        man.estimates.push(count(key("i_theta_r_cont"), &r.i_theta_r_continuous));
        man.estimates.push(count(key("i_theta_rs_disc"), &r.i_theta_r_given_s_discrete));
        man.estimates.push(count(key("i_theta_rs_cont"), &r.i_theta_r_given_s_continuous));
        if let Some(o) = o {
            man.estimates.push(count(key("oracle"), o));
        }
    }
    man.notes.push(format!("block term: {:?}", opts.block_term));
    if a.oracle_check {
        man.notes.push("oracle: reference-conditioned block AMI I(S;R|s0)/(L-1)".into());
    }
    write_manifest(&a.out, &man)
}

fn cmd_oracle(a: &OracleArgs, argv: &[String]) -> CliResult<()> {
    if a.block_len < 2 {
        return Err(CliError::Usage(format!("--block-len: minimum block length is 2, got {}", a.block_len)));
    }
    let mc = mc_config(&a.mc)?;
    let snrs = snr_grid(&a.snr)?;
    let c = constellation(a.rings, a.phases, a.ring_ratio, 1.0, false)?;
    match candidate_count(c.size(), a.block_len) {
        Some(n) if n <= a.budget => {}
        n => {
            let shown = n.map(|n| n.to_string()).unwrap_or_else(|| format!("{}^{}", c.size(), a.block_len));
            return Err(CliError::Usage(format!(
                "oracle budget exceeded: M^L = {}^{} = {shown} candidate blocks, budget {}",
                c.size(),
                a.block_len,
                a.budget
            )));
        }
    }
    let reference = if a.unknown_reference { ReferenceSymbol::Unknown } else { ReferenceSymbol::Known };
    let cfg = OracleConfig { budget: a.budget, reference };
    let estimates = with_threads(a.mc.threads, || {
        snrs.iter()
            .enumerate()
            .map(|(si, &snr)| {
                let ch = ChannelParams::new(snr)?;
                exact_block_ami(&c, a.block_len, &ch, &mc.derive(si as u64), &cfg)
            })
            .collect::<crate::Result<Vec<_>>>()
    })??;
    let rows: Vec<Vec<String>> = snrs
        .iter()
        .zip(&estimates)
        .map(|(s, e)| {
            vec![format_sig(*s), a.block_len.to_string(), format_sig(e.per_symbol.mean_bits), format_sig(e.per_symbol.std_error)]
        })
        .collect();
    write_csv(&a.out, &["snr_db", "L", "oracle_bits", "oracle_se"], &rows)?;
    let mut man = manifest(argv, "oracle", a, a.mc.seed, "stream (seed, 0).derive(snr_index)");
    man.estimates = snrs.iter().zip(&estimates).map(|(s, e)| count(format!("snr={}", format_sig(*s)), &e.block)).collect();
    man.notes.push(format!("reference symbol: {reference:?}; oracle_bits is per symbol, block AMI / (L - 1)"));
    write_manifest(&a.out, &man)
}

/// Parses `args` (binary name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let argv: Vec<String> = argv.iter().map(|s| s.to_string_lossy().into_owned()).collect();
    let outcome = match &cli.command {
        Command::Constellation(a) => cmd_constellation(a),
        Command::Coherent(a) => cmd_coherent(a, &argv),
        Command::Bounds(a) => cmd_bounds(a, &argv),
        Command::Oracle(a) => cmd_oracle(a, &argv),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}
