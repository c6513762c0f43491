use std::path::PathBuf;
use std::process::ExitCode;

use parapam::config::RunConfig;
use parapam::harness::{
    cmd_converge, cmd_diagnose, cmd_noise, cmd_proptest, cmd_solve, exit_code, HarnessError,
};

const USAGE: &str = "\
parapam — paracontrolled gPAM toolkit on the 2-torus

USAGE:
  parapam <noise|solve|converge|diagnose|proptest> [SUITE] [--config FILE] [--set key=value]...

COMMANDS:
  noise               write enhanced-noise fields and renorm.csv for the (seed, eps) lattice
  solve               integrate the equation per lattice point; trajectory snapshots + manifest
  converge            eps-convergence sweep; writes converge.csv
  diagnose            paracontrolled decomposition per run; writes diagnostics.csv
  proptest SUITE      run a property battery: bony | corrector | commutator | paraswap |
                      intertwine | composition | schauder

CONFIG KEYS (key = value file via --config, overridden by --set):
  n, t_final, dt (number or 'auto'), eps (comma list, decimals or 2^-k),
  seeds (comma list), alpha, beta, model (const|sin-cos|rational),
  renormalize (on|off), scheme (imex|explicit-rk4), stride,
  noise (white|smooth|zero), outdir, workers

EXIT CODES:
  0 success, 1 failing proptest suite, 2 validation error, 3 blow-up in a single-run command
";

struct Args {
    command: String,
    suite: Option<String>,
    config_file: Option<PathBuf>,
    sets: Vec<String>,
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    let mut it = argv.iter();
    let command = it.next().cloned().ok_or("missing command")?;
    let mut suite = None;
    let mut config_file = None;
    let mut sets = Vec::new();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--config" => {
                let f = it.next().ok_or("--config needs a file argument")?;
                config_file = Some(PathBuf::from(f));
            }
            "--set" => {
                let kv = it.next().ok_or("--set needs a key=value argument")?;
                sets.push(kv.clone());
            }
            other if !other.starts_with('-') && suite.is_none() && command == "proptest" => {
                suite = Some(other.to_string());
            }
            other => return Err(format!("unexpected argument '{other}'")),
        }
    }
    Ok(Args {
        command,
        suite,
        config_file,
        sets,
    })
}

fn build_config(args: &Args) -> Result<RunConfig, HarnessError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config_file {
        cfg.load_file(path)?;
    }
    for kv in &args.sets {
        let at = format!("--set {kv}");
        let (key, value) = kv.split_once('=').ok_or_else(|| {
            parapam::config::ConfigError::Invalid(format!("{at}: expected key=value"))
        })?;
        cfg.apply(key.trim(), value, &at)?;
    }
    Ok(cfg)
}

fn run() -> Result<(), HarnessError> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    if argv.is_empty() || argv[0] == "--help" || argv[0] == "-h" {
        print!("{USAGE}");
        return Ok(());
    }
    let args = parse_args(&argv)
        .map_err(|e| parapam::config::ConfigError::Invalid(format!("{e}\n\n{USAGE}")))?;
    let cfg = build_config(&args)?;
    match args.command.as_str() {
        "noise" => cmd_noise(&cfg),
        "solve" => cmd_solve(&cfg),
        "converge" => cmd_converge(&cfg),
        "diagnose" => cmd_diagnose(&cfg),
        "proptest" => {
            let suite = args.suite.ok_or_else(|| {
                parapam::config::ConfigError::Invalid(
                    "proptest needs a suite name (bony, corrector, commutator, paraswap, intertwine, composition, schauder)"
                        .into(),
                )
            })?;
            let outcome = cmd_proptest(&suite, &cfg)?;
            println!(
                "suite {}: {} ({} cases, {})",
                outcome.suite,
                if outcome.passed { "PASS" } else { "FAIL" },
                outcome.cases.len(),
                outcome.summary
            );
            Ok(())
        }
        other => Err(parapam::config::ConfigError::Invalid(format!(
            "unknown command '{other}'\n\n{USAGE}"
        ))
        .into()),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
