//! The `rp` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::alloc;
use crate::archive::{self, CompressionStats};
use crate::compress::{compress_with, CompressConfig};
use crate::error::{Error, Result};
use crate::grammar::Grammar;
use crate::oracle::naive_compress;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rp", version, about = "Re-Pair grammar compressor", color = clap::ColorChoice::Never)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress a file into an archive.
    C(CompressArgs),
    /// Restore the original file from an archive.
    D { input: PathBuf, output: PathBuf },
    /// Report the size accounting of an archive.
    Stats {
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Share of the input size given to the low-frequency queue, in (0, 1].
    #[arg(long, default_value_t = 0.25, value_parser = parse_epsilon)]
    pub epsilon: f64,
    /// Print every rule as `freq<TAB>left<TAB>right<TAB>symbol` on stderr.
    #[arg(long)]
    pub trace: bool,
    /// Use the quadratic reference compressor (small inputs only).
    #[arg(long)]
    pub oracle: bool,
    /// Print the report as one JSON object.
    #[arg(long)]
    pub json: bool,
}

fn parse_epsilon(s: &str) -> std::result::Result<f64, String> {
    let e: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if e > 0.0 && e <= 1.0 {
        Ok(e)
    } else {
        Err(format!("{e} is outside (0, 1]"))
    }
}

/// What `rp c` reports.
#[derive(Debug, Serialize)]
pub struct CompressReport {
    #[serde(flatten)]
    pub stats: CompressionStats,
    pub seconds: f64,
    /// Peak heap bytes allocated by the compressor; 0 unless the counting
    /// allocator is installed.
    pub peak_bytes: u64,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn trace_lines(g: &Grammar, err: &mut dyn Write) -> Result<()> {
    let freqs = g.substitution_freqs().unwrap_or_default();
    for (i, r) in g.rules().iter().enumerate() {
        let f = freqs.get(i).copied().unwrap_or(0);
        writeln!(err, "{f}\t{}\t{}\t{}", r.left, r.right, g.symbol_of(i))?;
    }
    Ok(())
}

fn compress_file(args: &CompressArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let data = read(&args.input)?;
    let config = CompressConfig {
        epsilon: args.epsilon,
        ..CompressConfig::default()
    };
    config.validate()?;
    let start = Instant::now();
    let (result, peak) = alloc::measure(|| {
        if args.oracle {
            naive_compress(&data, config.sigma)
        } else {
            compress_with(&data, &config).map(|c| (c.grammar, c.final_text))
        }
    });
    let (grammar, final_text) = result?;
    let seconds = start.elapsed().as_secs_f64();
    if args.trace {
        trace_lines(&grammar, err)?;
    }
    let bytes = archive::to_bytes(&grammar, &final_text, data.len() as u64)?;
    write(&args.output, &bytes)?;

    let report = CompressReport {
        stats: archive::stats(&bytes)?,
        seconds,
        peak_bytes: peak as u64,
    };
    if args.json {
        writeln!(out, "{}", serde_json::to_string(&report).map_err(std::io::Error::other)?)?;
    } else {
        let s = &report.stats;
        let m = s.m.map_or_else(|| "-".to_string(), |m| m.to_string());
        writeln!(
            out,
            "n={} d={} t={} M={m} bytes={} rate={:.2}% seconds={:.3} peak_bytes={}",
            s.n, s.d, s.t, s.archive_bytes, s.rate, report.seconds, report.peak_bytes
        )?;
    }
    Ok(())
}

fn decompress_file(input: &Path, output: &Path) -> Result<()> {
    let bytes = read(input)?;
    let data = archive::decompress(&bytes)?;
    write(output, &data)
}

fn stats_file(input: &Path, json: bool, out: &mut dyn Write) -> Result<()> {
    let bytes = read(input)?;
    let s = archive::stats(&bytes)?;
    if json {
        writeln!(out, "{}", serde_json::to_string(&s).map_err(std::io::Error::other)?)?;
    } else {
        writeln!(out, "{}", CompressionStats::TABLE_HEADER)?;
        writeln!(out, "{}", s.table_row())?;
        writeln!(
            out,
            "t={} sigma={} R={} grammar_bits={} text_bits={} lower_bound_bits={:.2} archive_bytes={}",
            s.t, s.sigma, s.runs, s.grammar_bits, s.text_bits, s.lower_bound_bits, s.archive_bytes
        )?;
    }
    Ok(())
}

/// Runs one command and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::C(args) => compress_file(args, out, err),
        Command::D { input, output } => decompress_file(input, output),
        Command::Stats { input, json } => stats_file(input, *json, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "rp: {e}");
            if matches!(e, Error::Config(_)) {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            }
        }
    }
}
