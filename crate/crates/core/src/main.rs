use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use softmax_kit::bench::{
    self, any_failed, render_bench, render_probe, render_profile, render_verify, BenchConfig,
    Check, OutputFormat,
};
use softmax_kit::KernelVariant;

const EXIT_CORRECTNESS: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "softmax-kit", version, about = "Softmax kernel verification, benchmarks and profiling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare every variant with a double-precision softmax.
    Verify(SweepArgs),
    /// Time every variant and a buffer copy, relative to the baseline.
    Bench(SweepArgs),
    /// Per-phase profiling tables.
    Profile(SweepArgs),
    /// Kernel time versus copy time (memory-boundedness probe).
    Probe(SweepArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Batch size (repeatable) [default: 1 8 32 128]
    #[arg(long = "batch-size", value_name = "N")]
    batch_size: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    num_classes: usize,
    /// Kernel variant (repeatable) [default: all]
    #[arg(long = "variant", value_name = "NAME", value_parser = parse_variant)]
    variant: Vec<KernelVariant>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 10)]
    warmup: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lower bound of the uniform logit fill
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    low: f32,
    /// Upper bound of the uniform logit fill
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    high: f32,
    /// text, csv or json
    #[arg(long, default_value = "text", value_parser = parse_format)]
    format: OutputFormat,
    /// Variant the others are compared with [default: ReferenceClipped, or the
    /// first selected variant when ReferenceClipped is not selected]
    #[arg(long, value_parser = parse_variant)]
    baseline: Option<KernelVariant>,
}

fn parse_variant(s: &str) -> Result<KernelVariant, String> {
    s.parse().map_err(|e: softmax_kit::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: softmax_kit::Error| e.to_string())
}

impl SweepArgs {
    fn config(self) -> softmax_kit::Result<BenchConfig> {
        let defaults = BenchConfig::default();
        let baseline = self.baseline.unwrap_or_else(|| {
            let chosen = &self.variant;
            if chosen.is_empty() || chosen.contains(&defaults.baseline) {
                defaults.baseline
            } else {
                *chosen.iter().min().expect("non-empty")
            }
        });
        BenchConfig {
            batch_sizes: if self.batch_size.is_empty() { defaults.batch_sizes } else { self.batch_size },
            num_classes: self.num_classes,
            variants: if self.variant.is_empty() { defaults.variants } else { self.variant },
            reps: self.reps,
            warmup: self.warmup,
            seed: self.seed,
            fill_low: self.low,
            fill_high: self.high,
            format: self.format,
            baseline,
        }
        .normalized()
    }
}

fn emit(body: &str, checks: &[Check], format: OutputFormat) {
    print!("{body}");
    if format != OutputFormat::Text {
        for c in checks {
            eprintln!("{c}");
        }
    }
}

fn run(command: Command) -> softmax_kit::Result<u8> {
    let (args, kind) = match command {
        Command::Verify(a) => (a, 0),
        Command::Bench(a) => (a, 1),
        Command::Profile(a) => (a, 2),
        Command::Probe(a) => (a, 3),
    };
    let cfg = args.config()?;
    let failed = match kind {
        0 => {
            let s = bench::run_verify(&cfg)?;
            print!("{}", render_verify(&s, cfg.format)?);
            if cfg.format != OutputFormat::Text {
                for r in s.failures() {
                    eprintln!(
                        "FAIL: {} batch {} row {}: elem relerr {:.3e}, rowsum dev {:.3e}",
                        r.variant, r.batch, r.worst_row, r.max_elem_relerr, r.max_rowsum_dev
                    );
                }
            }
            !s.passed()
        }
        1 => {
            let r = bench::run_bench(&cfg)?;
            emit(&render_bench(&r, cfg.format)?, &r.checks, cfg.format);
            any_failed(&r.checks)
        }
        2 => {
            let s = bench::run_profile(&cfg)?;
            emit(&render_profile(&s, cfg.format)?, &s.checks, cfg.format);
            any_failed(&s.checks)
        }
        _ => {
            let t = bench::run_probe(&cfg)?;
            emit(&render_probe(&t, cfg.format)?, &t.checks, cfg.format);
            any_failed(&t.checks)
        }
    };
    Ok(if failed { EXIT_CORRECTNESS } else { 0 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Err(e) = bench::check_thread_env() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(softmax_kit::Error::Argument(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CORRECTNESS)
        }
    }
}
