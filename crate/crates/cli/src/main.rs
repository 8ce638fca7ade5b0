use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use kinklap::geometry::Sector;
use kinklap::linalg::unit;
use kinklap::sampling::{write_binary, write_csv};
use kinklap::sector_moments::{closed_form_moments, monte_carlo_moments, sector_moments};
use kinklap_cli::check::{parse_expected, run_check};
use kinklap_cli::config::{ExperimentConfig, Mode, Spacing, TGrid};
use kinklap_cli::experiment::{run_concentration, run_table};
use kinklap_cli::plots::emit_plots;
use kinklap_cli::{bundled, exit, CliError};

#[derive(Parser)]
#[command(
    name = "kinklap",
    version,
    about = "Graph Laplacians at kinked boundary points"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw i.i.d. points from the configured domain and density.
    Sample {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's sample size.
        #[arg(long)]
        n: Option<usize>,
        /// Write the little-endian binary format instead of CSV.
        #[arg(long)]
        binary: bool,
    },
    /// Evaluate the configured operators at a single bandwidth.
    Evaluate {
        config: PathBuf,
        #[arg(long)]
        t: f64,
        /// Restrict to one named point.
        #[arg(long)]
        point: Option<String>,
        #[arg(long)]
        mode: Option<ModeArg>,
    },
    /// Sweep every point over the config's t grid and write a report.
    Sweep {
        config: PathBuf,
        /// Report path; defaults to the config's `output` or stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a gnuplot bundle into this directory.
        #[arg(long)]
        plots: Option<PathBuf>,
        #[arg(long)]
        mode: Option<ModeArg>,
        /// Compare against an expected-values file after the sweep.
        #[arg(long)]
        check: Option<PathBuf>,
    },
    /// Measure, first moment and second moment of an inward sector.
    SectorMoments {
        #[arg(long, value_enum)]
        sector: SectorArg,
        #[arg(long)]
        dim: usize,
        /// Number of orthant normals (e_1 … e_k).
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Force Monte Carlo even when a closed form exists.
        #[arg(long)]
        monte_carlo: bool,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Deviation experiment for the config's `[concentration]` section.
    Concentration {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare computed values against an expected-values file
    /// (the bundled reference values by default).
    Check {
        #[arg(long)]
        expected: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Discrete,
    Continuum,
    Predictor,
    All,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Discrete => Mode::Discrete,
            ModeArg::Continuum => Mode::Continuum,
            ModeArg::Predictor => Mode::Predictor,
            ModeArg::All => Mode::All,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SectorArg {
    Full,
    Half,
    Orthant,
}

fn configure_threads() {
    if let Some(n) = std::env::var("KINKLAP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // a pool that is already built keeps its size; results do not depend on it
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn write_or_print(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Loads a config file, falling back to a bundled config of the same name.
fn load_text(path: &Path) -> Result<String, CliError> {
    match std::fs::read_to_string(path) {
        Ok(t) => Ok(t),
        Err(e) => path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(bundled)
            .map(str::to_string)
            .ok_or_else(|| CliError::Io(format!("{}: {e}", path.display()))),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::parse(&load_text(path)?).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn check_lines(expected_path: Option<&Path>) -> Result<u8, CliError> {
    let (text, base) = match expected_path {
        Some(p) => (load_text(p)?, p.parent().map(Path::to_path_buf)),
        None => (bundled("expected.toml").expect("bundled").to_string(), None),
    };
    let expected = parse_expected(&text)?;
    let load = |name: &str| -> Result<String, CliError> {
        match &base {
            Some(dir) => load_text(&dir.join(name)),
            None => bundled(name)
                .map(str::to_string)
                .ok_or_else(|| CliError::Config(format!("no bundled config `{name}`"))),
        }
    };
    let lines = run_check(&expected, &load)?;
    let mut failed = 0;
    for l in &lines {
        println!("{}", l.render());
        failed += usize::from(!l.pass);
    }
    println!("{} of {} checks passed", lines.len() - failed, lines.len());
    Ok(if failed == 0 { exit::OK } else { exit::BREACH })
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Sample {
            config,
            out,
            n,
            binary,
        } => {
            let c = load_config(&config)?;
            let resolved = c.resolve()?;
            let set = c.sampler(&resolved)?.sample(n.unwrap_or(c.n));
            if binary {
                write_binary(&set, &out)?;
            } else {
                write_csv(&set, &out)?;
            }
            Ok(exit::OK)
        }
        Command::Evaluate {
            config,
            t,
            point,
            mode,
        } => {
            let mut c = load_config(&config)?;
            if let Some(name) = point {
                c.points.retain(|p| p.name == name);
                c.concentration = None;
                if c.points.is_empty() {
                    return Err(CliError::Config(format!("no point named `{name}`")));
                }
            }
            if let Some(m) = mode {
                c.mode = m.into();
            }
            c.t_grid = TGrid {
                count: 1,
                min: t,
                max: t,
                spacing: Spacing::Log,
            };
            let run = run_table(&c)?;
            print!("{}", run.csv);
            for f in &run.metadata.failures {
                eprintln!("error: {f}");
            }
            Ok(if run.has_failures() {
                exit::NUMERIC
            } else {
                exit::OK
            })
        }
        Command::Sweep {
            config,
            out,
            plots,
            mode,
            check,
        } => {
            let mut c = load_config(&config)?;
            if let Some(m) = mode {
                c.mode = m.into();
            }
            let run = run_table(&c)?;
            let out = out.or_else(|| c.output.as_ref().map(PathBuf::from));
            match &out {
                Some(p) => {
                    let meta = run.write(p)?;
                    eprintln!("wrote {} and {}", p.display(), meta.display());
                }
                None => print!("{}", run.csv),
            }
            if let Some(dir) = plots {
                let stem = config
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("report");
                for s in emit_plots(&run.csv, stem, &dir)? {
                    eprintln!("wrote {}", s.display());
                }
            }
            for f in &run.metadata.failures {
                eprintln!("error: {f}");
            }
            let mut code = if run.has_failures() {
                exit::NUMERIC
            } else {
                exit::OK
            };
            if let Some(expected) = check {
                let c = check_lines(Some(&expected))?;
                if c != exit::OK {
                    code = c;
                }
            }
            Ok(code)
        }
        Command::SectorMoments {
            sector,
            dim,
            k,
            monte_carlo,
            samples,
            seed,
        } => {
            if dim == 0 || k == 0 || k > dim {
                return Err(CliError::Config(format!(
                    "need 1 ≤ k ≤ dim, got k = {k}, dim = {dim}"
                )));
            }
            let s = match sector {
                SectorArg::Full => Sector::Full { dim },
                SectorArg::Half => Sector::HalfSpace {
                    nu: unit(dim, dim - 1),
                },
                SectorArg::Orthant => Sector::Orthant {
                    normals: (0..k).map(|i| unit(dim, i)).collect(),
                },
            };
            let m = if monte_carlo {
                monte_carlo_moments(&s, dim, samples, seed)?
            } else {
                match closed_form_moments(&s, dim) {
                    Ok(m) => m,
                    Err(_) => sector_moments(&s, dim, samples, seed)?,
                }
            };
            print!("{}", m.to_csv());
            Ok(exit::OK)
        }
        Command::Concentration { config, out } => {
            let c = load_config(&config)?;
            let table = run_concentration(&c)?;
            if table.schedule_warning {
                eprintln!("warning: the bandwidth schedule fails the convergence-in-probability condition");
            }
            write_or_print(&table.to_csv(), out.as_deref())?;
            Ok(exit::OK)
        }
        Command::Check { expected } => check_lines(expected.as_deref()),
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
