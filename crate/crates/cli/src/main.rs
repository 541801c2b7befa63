use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mdwc_core::bitio::Mode;
use mdwc_core::container::CodedStream;
use mdwc_core::metrics::psnr;
use mdwc_core::par::Exec;
use mdwc_core::rd::{self, Options};
use mdwc_core::ImagePlane;

/// Embedded wavelet image codec with morphological dilation coding.
#[derive(Parser)]
#[command(name = "mdwc", version)]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CodingArgs {
    /// Use raw bits instead of arithmetic coding.
    #[arg(long)]
    no_ac: bool,
    /// Number of wavelet decomposition levels.
    #[arg(long, default_value_t = rd::DEFAULT_LEVELS)]
    levels: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a PGM image.
    Encode {
        input: PathBuf,
        output: PathBuf,
        /// Target rate in bits per pixel, header included.
        #[arg(long)]
        rate: f64,
        #[command(flatten)]
        coding: CodingArgs,
    },
    /// Decompress a stream, optionally stopping early.
    Decode {
        input: PathBuf,
        output: PathBuf,
        /// Decode only the first `rate` bits per pixel of the stream.
        #[arg(long)]
        rate: Option<f64>,
    },
    /// PSNR between two PGM images.
    Psnr { a: PathBuf, b: PathBuf },
    /// Rate-distortion sweep written as CSV.
    Rd {
        input: PathBuf,
        /// Comma-separated rates in bits per pixel.
        #[arg(long, value_delimiter = ',', default_value = "0.125,0.25,0.5,1,2")]
        rates: Vec<f64>,
        #[command(flatten)]
        coding: CodingArgs,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Per-bitplane histograms of M (significant members per group), as CSV.
    Stats {
        input: PathBuf,
        #[arg(long, default_value_t = rd::DEFAULT_LEVELS)]
        levels: u8,
        /// Write to a file instead of standard output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn options(coding: &CodingArgs, exec: Exec) -> Options {
    Options {
        levels: coding.levels,
        mode: if coding.no_ac { Mode::Raw } else { Mode::Arithmetic },
        exec,
    }
}

fn read_image(path: &PathBuf) -> Result<ImagePlane> {
    ImagePlane::read_pgm(path).with_context(|| format!("reading {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match cli.command {
        Command::Encode {
            input,
            output,
            rate,
            coding,
        } => {
            let img = read_image(&input)?;
            let stream = rd::compress(&img, Some(rate), &options(&coding, exec))?;
            stream.write(&output).with_context(|| format!("writing {}", output.display()))?;
            let bits = stream.total_bits();
            eprintln!(
                "{} bytes, {:.4} bpp",
                bits / 8,
                bits as f64 / (img.width() * img.height()) as f64
            );
        }
        Command::Decode { input, output, rate } => {
            let stream = CodedStream::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let img = rd::decompress(&stream, rate, exec)?;
            img.write_pgm(&output).with_context(|| format!("writing {}", output.display()))?;
        }
        Command::Psnr { a, b } => {
            let p = psnr(&read_image(&a)?, &read_image(&b)?)?;
            if p.is_infinite() {
                println!("inf");
            } else {
                println!("{p:.4}");
            }
        }
        Command::Rd {
            input,
            rates,
            coding,
            csv,
        } => {
            if rates.is_empty() {
                bail!("no rates given");
            }
            let img = read_image(&input)?;
            let points = rd::rd_sweep(&img, &rates, &options(&coding, exec))?;
            fs::write(&csv, rd::rd_csv(&points)).with_context(|| format!("writing {}", csv.display()))?;
        }
        Command::Stats { input, levels, csv } => {
            let img = read_image(&input)?;
            let opts = Options {
                levels,
                exec,
                ..Options::default()
            };
            let text = rd::plane_histograms(&img, &opts)?.to_csv();
            match csv {
                Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
