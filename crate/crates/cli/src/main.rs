//! `nrsim`: CSI feedback link-level sweeps, overhead calculator, codebook
//! dumps and channel self-tests.
//!
//! Exit status: 0 on success, 2 on a configuration or usage error, 1 on a
//! runtime failure.

mod config;
mod probe;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nrsim_core::codebook::{oversampling_factors, Type1Codebook, Type2CodebookSpace};
use nrsim_core::overhead::{type1_overhead_bits, type2_overhead_bits, OverheadBreakdown};
use nrsim_core::par::configure_threads;
use nrsim_core::sim::{
    compare_modes, write_comparison_csv, write_cqi_hist_csv, write_ri_hist_csv, write_sweep_csv,
    Comparison,
};
use nrsim_core::{Error, Result};

use config::{FileConfig, Overrides, Resolved};

const THREADS_ENV: &str = "NRSIM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "nrsim", version, about = "5G NR Type I / Type II CSI feedback simulator")]
struct Cli {
    /// TOML configuration file; flags take precedence over it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// SNR sweep over one or more codebooks on a shared channel.
    Sweep(SweepArgs),
    /// PMI report size per index.
    Overhead(OverheadArgs),
    /// Codebook inspection.
    Codebook {
        #[command(subcommand)]
        action: CodebookAction,
    },
    /// Channel generator checks.
    Channel {
        #[command(subcommand)]
        action: ChannelAction,
    },
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// SNR points as min:step:max in dB.
    #[arg(long, value_name = "MIN:STEP:MAX", allow_hyphen_values = true)]
    snr: Option<String>,
    #[arg(long, value_name = "N")]
    slots: Option<usize>,
    /// Comma-separated list of type1, type2, svd.
    #[arg(long, value_delimiter = ',', value_name = "MODES")]
    codebook: Option<Vec<String>>,
    /// Receive antennas.
    #[arg(long, value_name = "N")]
    rx: Option<usize>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Type1,
    Type2,
}

#[derive(Debug, Args)]
struct OverheadArgs {
    #[arg(long, value_enum, default_value = "type1")]
    codebook: Family,
    #[arg(long, default_value_t = 1)]
    rank: usize,
    /// Subbands reporting subband indices; 1 gives the wideband count.
    #[arg(long, default_value_t = 1)]
    subbands: usize,
    /// Also write `overhead.csv` into this directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CodebookAction {
    /// Writes every precoder entry as CSV.
    Dump {
        #[arg(long, value_enum, default_value = "type1")]
        codebook: Family,
        /// Type I rank; ignored for Type II, which dumps its beam grid.
        #[arg(long, default_value_t = 1)]
        rank: usize,
        /// Write into this directory instead of standard output.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum ChannelAction {
    /// Checks ensemble power, tap powers and slot correlation.
    Probe(probe::ProbeArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    apply_thread_limit()?;
    let (file, base_dir) = match &cli.config {
        Some(p) => (
            config::load_file(p)?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (FileConfig::default(), PathBuf::from(".")),
    };
    match cli.command {
        Command::Sweep(args) => sweep(&file, &base_dir, args),
        Command::Overhead(args) => overhead(&file, &base_dir, &args),
        Command::Codebook {
            action: CodebookAction::Dump { codebook, rank, out },
        } => dump(&file, &base_dir, codebook, rank, out.as_deref()),
        Command::Channel {
            action: ChannelAction::Probe(args),
        } => {
            let r = config::resolve(&file, &Overrides::default(), &base_dir)?;
            probe::run(&r.base.channel, &args)
        }
    }
}

fn apply_thread_limit() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::config(THREADS_ENV, format!("`{raw}` is not a positive integer")))?;
    configure_threads(n);
    Ok(())
}

/// Writes via a sibling temporary file and a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn manifest(r: &Resolved, outputs: &[&str]) -> Result<String> {
    let mut run = toml::Table::new();
    run.insert("tool".into(), "nrsim".into());
    run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    run.insert("seed".into(), toml::Value::Integer(r.base.seed as i64));
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    run.insert("timestamp_unix".into(), toml::Value::Integer(now as i64));
    run.insert(
        "outputs".into(),
        toml::Value::Array(outputs.iter().map(|&o| o.into()).collect()),
    );
    let file = FileConfig {
        run: Some(run),
        ..config::snapshot(r)
    };
    toml::to_string(&file).map_err(|e| Error::InvalidArgument(format!("manifest serialization: {e}")))
}

fn sweep(file: &FileConfig, base_dir: &Path, args: SweepArgs) -> Result<ExitCode> {
    let over = Overrides {
        snr: args.snr,
        slots: args.slots,
        codebooks: args.codebook,
        rx: args.rx,
        seed: args.seed,
    };
    let resolved = config::resolve(file, &over, base_dir)?;
    fs::create_dir_all(&args.out)?;

    let mut outputs = vec!["sweep.csv", "ri_hist.csv", "cqi_hist.csv"];
    if resolved.modes.len() > 1 {
        outputs.push("comparison.csv");
    }
    write_atomic(&args.out.join("manifest.toml"), manifest(&resolved, &outputs)?.as_bytes())?;

    let start = std::time::Instant::now();
    let cmp = compare_modes(&resolved.sweep_configs())?;
    let results = &cmp.results;
    write_atomic(&args.out.join("sweep.csv"), &csv_bytes(|b| write_sweep_csv(b, results))?)?;
    write_atomic(&args.out.join("ri_hist.csv"), &csv_bytes(|b| write_ri_hist_csv(b, results))?)?;
    write_atomic(&args.out.join("cqi_hist.csv"), &csv_bytes(|b| write_cqi_hist_csv(b, results))?)?;
    if resolved.modes.len() > 1 {
        write_atomic(&args.out.join("comparison.csv"), &csv_bytes(|b| write_comparison_csv(b, &cmp))?)?;
    }
    print_summary(&cmp);
    eprintln!(
        "{} slots x {} SNR points x {} modes in {:.1?}, results in {}",
        resolved.base.num_slots,
        resolved.base.snr_points_db.len(),
        resolved.modes.len(),
        start.elapsed(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn print_summary(cmp: &Comparison) {
    let mut header = format!("{:>8}", "snr_db");
    for m in &cmp.modes {
        header.push_str(&format!("{:>14}", format!("{m} b/s/Hz")));
    }
    if cmp.modes.len() > 1 {
        header.push_str(&format!("{:>8}", "best"));
    }
    println!("{header}");
    for row in &cmp.rows {
        let mut line = format!("{:>8}", row.snr_db);
        for t in &row.throughput {
            line.push_str(&format!("{t:>14.3}"));
        }
        if cmp.modes.len() > 1 {
            line.push_str(&format!("{:>8}", cmp.winner_label(row)));
        }
        println!("{line}");
    }
}

fn overhead(file: &FileConfig, base_dir: &Path, args: &OverheadArgs) -> Result<ExitCode> {
    let r = config::resolve(file, &Overrides::default(), base_dir)?;
    let antenna = &r.base.antenna;
    let ov = oversampling_factors(antenna)?;
    let b: OverheadBreakdown = match args.codebook {
        Family::Type1 => type1_overhead_bits(antenna, &ov, args.rank, args.subbands)?,
        Family::Type2 => type2_overhead_bits(antenna, &ov, &r.base.type2, args.rank, args.subbands)?,
    };
    let family = match args.codebook {
        Family::Type1 => "type1",
        Family::Type2 => "type2",
    };
    println!(
        "codebook {family}, rank {}, N1={} N2={} O1={} O2={}, {} subband(s)",
        args.rank, antenna.n1, antenna.n2, ov.o1, ov.o2, args.subbands
    );
    let width = b.per_index_bits.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(5);
    for (name, bits) in &b.per_index_bits {
        println!("  {name:<width$} {bits:>5}");
    }
    println!("  {:<width$} {:>5}", "total", b.total_bits);
    println!();
    let mut csv = String::from("index,bits\n");
    for (name, bits) in &b.per_index_bits {
        csv.push_str(&format!("{name},{bits}\n"));
    }
    csv.push_str(&format!("total,{}\n", b.total_bits));
    print!("{csv}");
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        write_atomic(&dir.join("overhead.csv"), csv.as_bytes())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn dump(file: &FileConfig, base_dir: &Path, family: Family, rank: usize, out: Option<&Path>) -> Result<ExitCode> {
    let r = config::resolve(file, &Overrides::default(), base_dir)?;
    let antenna = &r.base.antenna;
    let ov = oversampling_factors(antenna)?;
    let mut csv = String::new();
    let name = match family {
        Family::Type1 => {
            let cb = Type1Codebook::build(antenna, rank, &ov)?;
            csv.push_str("i11,i12,i13,i2,port,layer,re,im\n");
            for e in cb.entries() {
                for layer in 0..e.w.ncols() {
                    for port in 0..e.w.nrows() {
                        let z = e.w[(port, layer)];
                        csv.push_str(&format!(
                            "{},{},{},{},{port},{layer},{},{}\n",
                            e.i11, e.i12, e.i13, e.i2, z.re, z.im
                        ));
                    }
                }
            }
            format!("codebook_type1_rank{rank}.csv")
        }
        Family::Type2 => {
            let space = Type2CodebookSpace::build(antenna, &r.base.type2, &ov)?;
            csv.push_str("q1,q2,beam,element,re,im\n");
            for q1 in 0..ov.o1 {
                for q2 in 0..ov.o2 {
                    for a in 0..space.num_orthogonal_beams() {
                        for (k, z) in space.orthogonal_beam(q1, q2, a).iter().enumerate() {
                            csv.push_str(&format!("{q1},{q2},{a},{k},{},{}\n", z.re, z.im));
                        }
                    }
                }
            }
            "codebook_type2_beams.csv".to_string()
        }
    };
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write_atomic(&dir.join(&name), csv.as_bytes())?;
            eprintln!("wrote {}", dir.join(&name).display());
        }
        None => {
            // A closed pipe (e.g. `| head`) is not an error.
            match std::io::stdout().lock().write_all(csv.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
