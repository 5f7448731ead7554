//! The `tem` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::decoders::{
    decode_if, decode_with, default_tau, if_boundaries, DecodeResult, DecoderKind, IterConfig,
};
use crate::encoders::{
    density_report, encode_crossing, encode_if, sample_amplitudes, EncoderConfig, SpikeTrain,
    TestFunction,
};
use crate::error::{Error, Result};
use crate::generators::{
    density_bound, frame_bounds, spectral_profile, GeneratorSpec, DEFAULT_GRID,
};
use crate::noiselab::{
    normalize_sup, quantize_train, random_coefficients, run_experiment, NoiseExperimentConfig,
};
use crate::siss::{PeriodicSignal, PeriodicSpace};

#[derive(Debug, Parser)]
#[command(name = "tem", version, about = "Time encoding and decoding on periodic spline spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Crossing,
    If,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Frame bounds and critical density of a generator.
    Analyze {
        #[arg(long)]
        generator: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Alias truncation; defaults to 64 for splines, 1 for sinc.
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// Random signal with uniform [−1, 1] coefficients.
    GenSignal {
        /// Generator spec file; cubic B-spline with K = 50 when omitted.
        #[arg(long)]
        generator: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rescale to unit sup-norm.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode a signal file into a spike train.
    Encode {
        #[arg(long)]
        signal: PathBuf,
        /// cosine:AMPLITUDE:PERIOD, ramp:SPAN or const:LEVEL
        #[arg(long, value_parser = parse_testfn)]
        testfn: TestFunction,
        #[arg(long, value_enum, default_value_t = Mode::Crossing)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode a spike train into coefficients.
    Decode {
        #[arg(long)]
        generator: PathBuf,
        /// Train file, CSV (header `t`) or JSON ({"K", "times"}).
        #[arg(long)]
        train: PathBuf,
        #[arg(long, value_parser = parse_testfn)]
        testfn: TestFunction,
        #[arg(long, value_parser = parse_decoder, default_value = "pinv")]
        decoder: DecoderKind,
        /// Integrate-and-fire trains always use the direct decoder.
        #[arg(long, value_enum, default_value_t = Mode::Crossing)]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode, optionally quantize, decode and report the errors.
    Roundtrip {
        #[arg(long)]
        signal: PathBuf,
        #[arg(long, value_parser = parse_testfn)]
        testfn: TestFunction,
        #[arg(long, value_parser = parse_decoder, default_value = "pinv")]
        decoder: DecoderKind,
        #[arg(long, default_value_t = 0.0)]
        quantize: f64,
        /// Reconstructed signal JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quantization noise experiment.
    NoiseSweep {
        /// Experiment config JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_testfn(s: &str) -> std::result::Result<TestFunction, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_decoder(s: &str) -> std::result::Result<DecoderKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Exit status for an error: input problems are 1, numerical failures 2.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_)
        | Error::Json(_)
        | Error::InvalidInput(_)
        | Error::SpaceMismatch
        | Error::UnsupportedOrder(_)
        | Error::UnsupportedGenerator(_) => 1,
        _ => 2,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn read_train(path: &Path, k: usize) -> Result<SpikeTrain> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        let train: SpikeTrain = serde_json::from_str(&text)?;
        if train.period() != k {
            return Err(Error::SpaceMismatch);
        }
        Ok(train)
    } else {
        SpikeTrain::from_csv(&text, k)
    }
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string(v)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: f64,
    tau: f64,
    grid: usize,
    kmax: usize,
}

#[derive(Debug, Serialize)]
struct RoundtripReport {
    spikes: usize,
    max_gap: f64,
    decoder: String,
    iterations: usize,
    converged: bool,
    coeff_l2_error: f64,
    #[serde(rename = "signal_L2_error")]
    signal_l2_error: f64,
}

fn decode_crossing(
    space: &PeriodicSpace,
    train: &SpikeTrain,
    phi: &TestFunction,
    decoder: DecoderKind,
) -> Result<DecodeResult> {
    let y = sample_amplitudes(phi, train);
    let tau = default_tau(space)?;
    decode_with(decoder, space, train, &y, tau, &IterConfig::default())
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Analyze {
            generator,
            grid,
            kmax,
        } => {
            let spec: GeneratorSpec = read_json(&generator)?;
            let kmax = kmax.unwrap_or_else(|| spec.default_k_max());
            let profile = spectral_profile(&spec, grid, kmax)?;
            let bounds = frame_bounds(&profile)?;
            let tau = density_bound(&profile)?.tau;
            let report = AnalyzeReport {
                a: bounds.lower,
                b: bounds.upper,
                tau,
                grid,
                kmax,
            };
            stdout.write_all(to_json(&report)?.as_bytes())?;
        }
        Command::GenSignal {
            generator,
            seed,
            normalize,
            out,
        } => {
            let spec = match generator {
                Some(p) => read_json(&p)?,
                None => GeneratorSpec::bspline(3, 50),
            };
            spec.validate()?;
            let k = spec.period;
            let mut sig = PeriodicSignal::new(spec, random_coefficients(seed, 0, k))?;
            if normalize {
                sig = normalize_sup(sig)?;
            }
            emit(&out, &to_json(&sig)?, stdout)?;
        }
        Command::Encode {
            signal,
            testfn,
            mode,
            format,
            out,
        } => {
            let sig: PeriodicSignal = read_json(&signal)?;
            let cfg = EncoderConfig::default();
            let train = match mode {
                Mode::Crossing => encode_crossing(&sig, &testfn, &cfg)?,
                Mode::If => encode_if(&sig, &testfn, &cfg)?,
            };
            let text = match format {
                Format::Csv => train.to_csv(),
                Format::Json => to_json(&train)?,
            };
            emit(&out, &text, stdout)?;
        }
        Command::Decode {
            generator,
            train,
            testfn,
            decoder,
            mode,
            out,
        } => {
            let spec: GeneratorSpec = read_json(&generator)?;
            let space = PeriodicSpace::new(spec)?;
            let train = read_train(&train, space.dim())?;
            let result = match mode {
                Mode::Crossing => decode_crossing(&space, &train, &testfn, decoder)?,
                Mode::If => {
                    let q = sample_amplitudes(&testfn, &train);
                    decode_if(&space, &if_boundaries(&train), &q)?
                }
            };
            emit(&out, &to_json(&result)?, stdout)?;
        }
        Command::Roundtrip {
            signal,
            testfn,
            decoder,
            quantize,
            out,
        } => {
            if !(quantize >= 0.0 && quantize.is_finite()) {
                return Err(Error::InvalidInput(format!("bad quantization step {quantize}")));
            }
            let sig: PeriodicSignal = read_json(&signal)?;
            let space = PeriodicSpace::new(sig.generator.clone())?;
            let train = encode_crossing(&sig, &testfn, &EncoderConfig::default())?;
            let train = quantize_train(&train, quantize);
            let result = decode_crossing(&space, &train, &testfn, decoder)?;
            let diff: Vec<f64> = result
                .coeffs
                .iter()
                .zip(&sig.coeffs)
                .map(|(a, b)| a - b)
                .collect();
            let report = RoundtripReport {
                spikes: train.len(),
                max_gap: density_report(&train)?.max_gap,
                decoder: decoder.to_string(),
                iterations: result.iterations,
                converged: result.converged,
                coeff_l2_error: diff.iter().map(|d| d * d).sum::<f64>().sqrt(),
                signal_l2_error: space.coeff_norm(&diff),
            };
            stdout.write_all(to_json(&report)?.as_bytes())?;
            if let Some(p) = out {
                fs::write(p, to_json(&space.signal(result.coeffs)?)?)?;
            }
        }
        Command::NoiseSweep { config, out } => {
            let cfg: NoiseExperimentConfig = match config {
                Some(p) => read_json(&p)?,
                None => NoiseExperimentConfig::default(),
            };
            let summary = run_experiment(&cfg)?;
            let csv = summary.to_csv();
            let line = match summary.fit {
                Some(f) => format!(
                    "slope={:.16e} intercept={:.16e} r_squared={:.16e} records={} failures={}\n",
                    f.slope,
                    f.intercept,
                    f.r_squared,
                    summary.binned(),
                    summary.failures
                ),
                None => format!(
                    "slope=NA intercept=NA r_squared=NA records={} failures={}\n",
                    summary.binned(),
                    summary.failures
                ),
            };
            match out {
                Some(p) => {
                    fs::write(p, csv)?;
                    stdout.write_all(line.as_bytes())?;
                }
                None => {
                    stdout.write_all(csv.as_bytes())?;
                    stderr.write_all(line.as_bytes())?;
                }
            }
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
