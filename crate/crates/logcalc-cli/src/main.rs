//! Command-line verification runner: loads an instance, executes named
//! suites, and emits machine-readable reports.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;

use logcalc::instance::{load_instance, load_instance_str, Instance, MOBIUS_CT_8, TRIVIAL_2DIM};
use logcalc::scalar::Scalar;
use logcalc::suite::{emit_report, run_suite, ScalarMode, SuiteConfig, SUITE_NAMES};

#[derive(Parser)]
#[command(
    name = "verify",
    about = "Run identity-verification suites over a bundled or user instance"
)]
struct Args {
    /// Suite to run (calculus, delta, modules, algebra-axioms, liop,
    /// transforms, pz, qz, aux-lemmas, all)
    #[arg(long, default_value = "all")]
    suite: String,

    /// Path to an instance JSON file, or one of the bundled names
    /// `trivial-2dim` / `mobius-ct-8`
    #[arg(long, default_value = "trivial-2dim")]
    instance: String,

    /// Exponent window as `lo,hi` (symmetric magnitude is used)
    #[arg(long, default_value = "-4,4")]
    window: String,

    /// Maximum log power considered in window comparisons
    #[arg(long, default_value_t = 4)]
    log_cap: u32,

    /// Expansion order for y-graded identities
    #[arg(long, default_value_t = 4)]
    y_order: u32,

    /// Scalar mode: `exact` or `approx:<tol>`
    #[arg(long, default_value = "exact")]
    mode: String,

    /// Attachment points z (exact scalars such as `2` or `1+1*i`); repeat
    /// the flag for several values
    #[arg(long = "z")]
    z_values: Vec<String>,

    /// Output format: `json` or `text`
    #[arg(long, default_value = "text")]
    format: String,

    /// Named perturbation with seed, `<id>:<seed>` (negative control)
    #[arg(long)]
    perturb: Option<String>,

    /// Include wall-clock timing in text output
    #[arg(long, default_value_t = false)]
    timings: bool,
}

fn parse_args(args: &Args) -> Result<(SuiteConfig, Instance)> {
    if !SUITE_NAMES.contains(&args.suite.as_str()) {
        bail!(
            "unknown suite `{}`; expected one of {}",
            args.suite,
            SUITE_NAMES.join(", ")
        );
    }
    let instance = match args.instance.as_str() {
        "trivial-2dim" => load_instance_str(TRIVIAL_2DIM)?,
        "mobius-ct-8" => load_instance_str(MOBIUS_CT_8)?,
        path => load_instance(&PathBuf::from(path))?,
    };
    let window: i64 = {
        let parts: Vec<&str> = args.window.split(',').collect();
        if parts.len() != 2 {
            bail!("--window expects `lo,hi`");
        }
        let lo: i64 = parts[0].trim().parse().context("window lower bound")?;
        let hi: i64 = parts[1].trim().parse().context("window upper bound")?;
        lo.abs().max(hi.abs())
    };
    let mode = if args.mode == "exact" {
        ScalarMode::Exact
    } else if let Some(tol) = args.mode.strip_prefix("approx:") {
        ScalarMode::Approx(tol.parse().context("approx tolerance")?)
    } else {
        bail!("--mode expects `exact` or `approx:<tol>`");
    };
    let mut z_values = Vec::new();
    for z in &args.z_values {
        let s: Scalar = z.parse()?;
        if s.is_zero() {
            bail!("z must be nonzero");
        }
        z_values.push(s);
    }
    if z_values.is_empty() {
        z_values = vec![Scalar::from_int(1), Scalar::from_int(2), Scalar::gauss(1, 1, 1, 1)];
    }
    let perturb = match &args.perturb {
        None => None,
        Some(spec) => {
            let (id, seed) = spec
                .split_once(':')
                .context("--perturb expects `<id>:<seed>`")?;
            Some((id.to_string(), seed.parse().context("perturbation seed")?))
        }
    };
    Ok((
        SuiteConfig {
            suite: args.suite.clone(),
            window,
            log_cap: args.log_cap,
            y_order: args.y_order,
            mode,
            z_values,
            p_range: vec![-1, 0, 1],
            r_range: vec![-2, -1, 0, 1, 2],
            perturb,
        },
        instance,
    ))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let started = std::time::Instant::now();
    let (config, instance) = match parse_args(&args) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let report = match run_suite(&config, &instance) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let json = args.format == "json";
    print!("{}", emit_report(&report, json));
    if args.timings && !json {
        println!("wall time: {} ms", started.elapsed().as_millis());
    }
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
