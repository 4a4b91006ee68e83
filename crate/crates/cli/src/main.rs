use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use semifree_core::classify::{
    classify_isolated, small_data_bootstrap, uncertified_reason, weak_classification_check, WeakVerdict,
};
use semifree_core::io::{
    certificate_text, dh_csv, dh_profile, dh_svg, dh_text, read_scenario, scenario_to_json, trace_csv, trace_text,
    validation_text, weak_verdict_text, IoError,
};
use semifree_core::lattice::exceptional_classes;
use semifree_core::rigidity::citation_table;
use semifree_core::scenario::{isolated_value_lattice_check, validate_structure, ValueLatticeReport};
use semifree_core::walk::run_walk;
use semifree_core::{FixedPointData, IntersectionLattice};

const EXIT_PARSE: u8 = 1;
const EXIT_REFUSED: u8 = 2;
const EXIT_STRICT: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "semifree",
    version,
    about = "Wall-crossing walks for semi-free circle actions on 6-manifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural checks on a scenario file.
    Validate { file: PathBuf },
    /// Run the walk from the minimum to the maximum.
    Walk {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = TraceFormat::Text)]
        trace: TraceFormat,
        /// Fail with exit code 3 unless every interval is certified rigid.
        #[arg(long)]
        strict: bool,
    },
    /// Certify isolated data, or compare full data with `--against`.
    Classify {
        file: PathBuf,
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Tabulate or plot the piecewise DH volume.
    DhProfile {
        file: PathBuf,
        #[arg(long, default_value_t = 33)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = Emit::Csv)]
        emit: Emit,
    },
    /// Lattice utilities.
    Lattice {
        #[command(subcommand)]
        command: LatticeCommand,
    },
    /// Recover full fixed point data from small data.
    Bootstrap {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print the rigidity citation table.
    Kb,
}

#[derive(Subcommand)]
enum LatticeCommand {
    /// Exceptional classes of the k-point blow-up of CP2.
    Exc {
        #[arg(short)]
        k: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Text,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Csv,
    Svg,
    Text,
}

fn load(path: &Path) -> Result<FixedPointData, ExitCode> {
    read_scenario(path).map_err(|e| {
        eprintln!("error: {e}");
        match e {
            IoError::Parse { .. } | IoError::Schema(_) | IoError::File { .. } => ExitCode::from(EXIT_PARSE),
        }
    })
}

fn refused(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("refused: {message}");
    ExitCode::from(EXIT_REFUSED)
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Command::Validate { file } => {
            let data = load(&file)?;
            let report = validate_structure(&data);
            let values = data.is_isolated().then(|| isolated_value_lattice_check(&data));
            print!("{}", validation_text(&report, values.as_ref()));
            if !report.is_empty() || matches!(values, Some(ValueLatticeReport::Fail { .. })) {
                return Err(ExitCode::from(EXIT_REFUSED));
            }
        }
        Command::Walk { file, trace, strict } => {
            let data = load(&file)?;
            let walk = run_walk(&data).map_err(|e| {
                if e.is_invariant_breach() {
                    eprintln!("internal error: {e}");
                    ExitCode::from(EXIT_INTERNAL)
                } else {
                    refused(e)
                }
            })?;
            match trace {
                TraceFormat::Text => print!("{}", trace_text(&walk)),
                TraceFormat::Csv => print!("{}", trace_csv(&walk)),
            }
            if let Some(r) = walk.final_report.as_ref().filter(|r| !r.passed) {
                return Err(refused(format!("maximum check failed: {}", r.failures.join("; "))));
            }
            let cert = walk.certification();
            if strict && !cert.is_certified() {
                eprintln!("strict: walk is uncertified: {}", uncertified_reason(&walk));
                return Err(ExitCode::from(EXIT_STRICT));
            }
        }
        Command::Classify { file, against } => {
            let data = load(&file)?;
            if let Some(other) = against {
                let other = load(&other)?;
                let verdict = weak_classification_check(&data, &other);
                print!("{}", weak_verdict_text(&verdict));
                if !matches!(verdict, WeakVerdict::Isomorphic { .. }) {
                    return Err(ExitCode::from(EXIT_REFUSED));
                }
            } else {
                let outcome = classify_isolated(&data);
                print!("{}", certificate_text(&outcome));
                if let Some(r) = outcome.refusal() {
                    return Err(ExitCode::from(if r.internal { EXIT_INTERNAL } else { EXIT_REFUSED }));
                }
            }
        }
        Command::DhProfile { file, samples, emit } => {
            let data = load(&file)?;
            let walk = run_walk(&data).map_err(refused)?;
            let profile = dh_profile(&walk, samples);
            match emit {
                Emit::Csv => print!("{}", dh_csv(&profile)),
                Emit::Svg => print!("{}", dh_svg(&walk, &profile)),
                Emit::Text => print!("{}", dh_text(&walk, &profile)),
            }
        }
        Command::Lattice {
            command: LatticeCommand::Exc { k },
        } => {
            let mut set = exceptional_classes(k);
            let lattice = IntersectionLattice::blowup_plane(k);
            set.classes
                .sort_by_cached_key(|c| (c.coeffs()[0], lattice.class_name(c)));
            println!(
                "CP2#{k}: {} exceptional classes{}",
                set.classes.len(),
                if set.certified {
                    ""
                } else {
                    " (box search, not certified complete)"
                }
            );
            for c in &set.classes {
                println!("{}  {:?}", lattice.class_name(c), c.coeffs());
            }
        }
        Command::Bootstrap { file, output } => {
            let data = load(&file)?;
            let full = small_data_bootstrap(&data).map_err(refused)?;
            std::fs::write(&output, scenario_to_json(&full)).map_err(|e| {
                eprintln!("error: {}: {e}", output.display());
                ExitCode::from(EXIT_PARSE)
            })?;
            println!("wrote full fixed point data to {}", output.display());
        }
        Command::Kb => print!("{}", citation_table()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
