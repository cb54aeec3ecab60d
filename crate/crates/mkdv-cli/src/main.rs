use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mkdv_cli::config::OutputFormat;
use mkdv_cli::{emit_csv, emit_json, exit_code_for, parse_config, run};

/// Spectral mKdV laboratory: deterministic experiment runs with CSV/JSON reports.
///
/// Each subcommand is one experiment; keys from `--config FILE` are overridden
/// by `--seed`, `--format` and `--set KEY=VALUE` flags (later wins). Exit
/// codes: 0 pass, 1 acceptance failure, 2 usage/config error, 3 numeric error.
#[derive(Parser)]
#[command(name = "mkdvlab", version, about)]
struct Cli {
    #[command(subcommand)]
    experiment: ExperimentCmd,

    /// Flat key = value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for report files; without it, CSV goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format: csv | json | both.
    #[arg(long, global = true)]
    format: Option<String>,

    /// Extra KEY=VALUE overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// mKdV evolution with conservation diagnostics and a trajectory checkpoint.
    Evolve,
    /// Modulation-vs-Sobolev equivalence ratios on random band-limited fields.
    Norms,
    /// Dyadic Strichartz decay sweep (L^8_t L^4_x, slope target -1/8).
    Strichartz,
    /// Bilinear (lambda*mu)^{-1/2} decay sweep plus the spectral-oracle check.
    Bilinear,
    /// Resonance-function algebra residuals on random triples.
    Resonance,
    /// Norm-inflation exponent sweep ||u3||_{M^s_{2,q}} ~ N^{1/2 - 2s}.
    Inflate,
    /// Empirical Lipschitz continuity of the data-to-solution map.
    Continuity,
    /// Besov/modulation embedding-ratio stability sweep.
    Embed,
}

impl ExperimentCmd {
    fn name(&self) -> &'static str {
        match self {
            ExperimentCmd::Evolve => "evolve",
            ExperimentCmd::Norms => "norms",
            ExperimentCmd::Strichartz => "strichartz",
            ExperimentCmd::Bilinear => "bilinear",
            ExperimentCmd::Resonance => "resonance",
            ExperimentCmd::Inflate => "inflate",
            ExperimentCmd::Continuity => "continuity",
            ExperimentCmd::Embed => "embed",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    // Layer the effective config: file first, then flag overrides, subcommand last.
    let mut text = String::new();
    if let Some(path) = &cli.config {
        match fs::read_to_string(path) {
            Ok(t) => text.push_str(&t),
            Err(e) => {
                eprintln!("cannot read config {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        text.push('\n');
    }
    for kv in &cli.sets {
        if !kv.contains('=') {
            eprintln!("--set expects KEY=VALUE, got `{kv}`");
            return ExitCode::from(2);
        }
        text.push_str(kv);
        text.push('\n');
    }
    if let Some(seed) = cli.seed {
        text.push_str(&format!("seed = {seed}\n"));
    }
    if let Some(format) = &cli.format {
        text.push_str(&format!("format = {format}\n"));
    }
    if let Some(out) = &cli.out {
        text.push_str(&format!("out = {}\n", out.display()));
    }
    text.push_str(&format!("experiment = {}\n", cli.experiment.name()));

    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };

    let outcome = run(&cfg);
    let code = exit_code_for(&outcome);
    match outcome {
        Ok(report) => {
            for (k, v) in &report.summary {
                eprintln!("{k} = {v}");
            }
            eprintln!(
                "{}: {} ({} rows)",
                report.experiment,
                if report.pass { "PASS" } else { "FAIL" },
                report.rows.len()
            );
            let csv = emit_csv(&report);
            if let Some(dir) = &cfg.out {
                if let Err(e) = fs::create_dir_all(dir) {
                    eprintln!("cannot create {}: {e}", dir.display());
                    return ExitCode::from(2);
                }
                let mut res = Ok(());
                if matches!(cfg.format, OutputFormat::Csv | OutputFormat::Both) {
                    res = fs::write(dir.join(format!("{}.csv", report.experiment)), &csv);
                }
                if res.is_ok() && matches!(cfg.format, OutputFormat::Json | OutputFormat::Both) {
                    res = fs::write(
                        dir.join(format!("{}.json", report.experiment)),
                        emit_json(&report),
                    );
                }
                if let Err(e) = res {
                    eprintln!("cannot write report: {e}");
                    return ExitCode::from(2);
                }
            } else {
                print!("{csv}");
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(code as u8)
        }
    }
}
