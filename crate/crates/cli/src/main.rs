//! `susykit construct|verify|spectrum <config>`
//!
//! Exit codes: 0 success, 1 failed verification, 2 usage or config error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use susykit_core::config::{Model, ModelConfig};
use susykit_core::report::{
    potential_table, spectrum, supercharge_table, verify, SystemSummary, Table, ToolInfo,
    VerifyOptions, SPECTRAL_SCOPE,
};
use susykit_core::spectral::SpectrumRun;

#[derive(Parser)]
#[command(
    name = "susykit",
    version,
    about = "Construct and verify 2x2 matrix 2-fold supersymmetric systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the system and write potentials, supercharge coefficients and constants.
    Construct(Common),
    /// Run the exact checks, operator identities, quasi-solvability and spectra.
    Verify(Common),
    /// Discretize both Hamiltonians and match their low-lying spectra.
    Spectrum(Common),
}

#[derive(Args)]
struct Common {
    /// JSON model config.
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Leave out the spectral battery (verify).
    #[arg(long)]
    skip_spectral: bool,
    /// Number of eigenvalues per side.
    #[arg(long)]
    levels: Option<usize>,
    /// Seed for inverse-iteration start vectors.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Honor the config's perturb block.
    #[arg(long)]
    allow_perturb: bool,
}

enum Failure {
    Usage(String),
    Verification,
}

type Outcome = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn configure_threads() -> Outcome {
    let Ok(value) = std::env::var("SUSYKIT_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| {
            usage(format!(
                "SUSYKIT_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(usage)
}

fn load(args: &Common) -> Result<(ModelConfig, Model), Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| usage(format!("{}: {e}", args.config.display())))?;
    let config = ModelConfig::from_json(&text)
        .map_err(|e| usage(format!("{}: {e}", args.config.display())))?;
    let model = config
        .build(args.allow_perturb)
        .map_err(|e| usage(format!("{}: {e}", args.config.display())))?;
    if let Some(levels) = args.levels {
        if levels == 0 {
            return Err(usage("--levels must be positive"));
        }
    }
    fs::create_dir_all(&args.out).map_err(|e| usage(format!("{}: {e}", args.out.display())))?;
    Ok((config, model))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).map_err(usage)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_csv(path: &Path, table: &Table) -> Outcome {
    let err = |e: csv::Error| usage(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(&table.columns).map_err(err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|x| format!("{x:e}")))
            .map_err(err)?;
    }
    w.flush()
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Whitespace-separated table with a `#` header, for gnuplot.
fn write_dat(path: &Path, table: &Table) -> Outcome {
    let mut text = format!("# {}\n", table.columns.join(" "));
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.12e}")).collect();
        text.push_str(&cells.join(" "));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_spectrum_csv(path: &Path, run: &SpectrumRun) -> Outcome {
    let err = |e: csv::Error| usage(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["index", "side", "value", "matched_index"])
        .map_err(err)?;
    let m = &run.matching;
    for (i, v) in m.eigs_plus.iter().enumerate() {
        let partner = m
            .matched_minus_of(i)
            .map_or("none".to_string(), |j| j.to_string());
        w.write_record([i.to_string(), "plus".into(), format!("{v:e}"), partner])
            .map_err(err)?;
    }
    for (j, v) in m.eigs_minus.iter().enumerate() {
        let partner = m
            .matched_plus_of(j)
            .map_or("none".to_string(), |i| i.to_string());
        w.write_record([j.to_string(), "minus".into(), format!("{v:e}"), partner])
            .map_err(err)?;
    }
    w.flush()
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn construct(args: &Common) -> Outcome {
    let (config, model) = load(args)?;
    let summary = json!({
        "tool": ToolInfo::default(),
        "config": config,
        "system": SystemSummary::of(&model),
        "notes": model.notes,
    });
    write_json(&args.out.join("summary.json"), &summary)?;
    write_csv(
        &args.out.join("potentials.csv"),
        &potential_table(&model, &model.samples),
    )?;
    write_csv(
        &args.out.join("supercharge.csv"),
        &supercharge_table(&model, &model.samples),
    )?;
    println!(
        "constructed {} system; wrote {}",
        model.branch.name(),
        args.out.display()
    );
    Ok(())
}

fn run_verify(args: &Common) -> Outcome {
    let (config, model) = load(args)?;
    let opts = VerifyOptions {
        skip_spectral: args.skip_spectral,
        levels: args.levels,
        seed: args.seed,
    };
    let (report, timings) = verify(&config, &model, opts).map_err(usage)?;
    write_json(&args.out.join("report.json"), &report)?;
    write_json(&args.out.join("timings.json"), &timings)?;
    if let Some(s) = &report.spectral {
        write_spectrum_csv(&args.out.join("spectrum.csv"), &s.run)?;
    }
    let mut stdout = std::io::stdout().lock();
    for v in &report.verdicts {
        let _ = writeln!(
            stdout,
            "{:<26} {:<4} {:.3e} (tol {:.1e})",
            v.name,
            if v.pass { "ok" } else { "FAIL" },
            v.value,
            v.tol
        );
    }
    for note in &report.notes {
        let _ = writeln!(stdout, "note: {note}");
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn run_spectrum(args: &Common) -> Outcome {
    let (config, model) = load(args)?;
    let levels = args.levels.unwrap_or(config.levels);
    let run = spectrum(&model, levels, args.seed).map_err(usage)?;
    write_spectrum_csv(&args.out.join("spectrum.csv"), &run)?;
    write_dat(
        &args.out.join("potentials.dat"),
        &potential_table(&model, &model.grid.points()),
    )?;
    let summary = json!({
        "tool": ToolInfo::default(),
        "config": config,
        "seed": args.seed,
        "scope": SPECTRAL_SCOPE,
        "spectrum": run,
    });
    write_json(&args.out.join("spectrum.json"), &summary)?;
    let m = &run.matching;
    let values = |ls: &[susykit_core::spectral::Level]| {
        ls.iter()
            .map(|l| format!("{:.6} (x{})", l.value, l.multiplicity))
            .collect::<Vec<_>>()
            .join(", ")
    };
    println!("matched pairs: {}", m.matched_pairs.len());
    println!("unmatched plus: [{}]", values(&m.unmatched_plus));
    println!("unmatched minus: [{}]", values(&m.unmatched_minus));
    for w in &run.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|_| match &cli.command {
        Command::Construct(a) => construct(a),
        Command::Verify(a) => run_verify(a),
        Command::Spectrum(a) => run_spectrum(a),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
