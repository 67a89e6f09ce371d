//! Command-line front end: reads a JSON manifest, runs one command on it and
//! prints a report.
//!
//! Exit codes: 0 pass or value, 1 failed check or operation, 2 usage error,
//! 3 unreadable or invalid manifest.

pub mod commands;
pub mod manifest;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::commands::{run_command, Command, Suite};
use crate::manifest::parse_manifest;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "sheafplectic",
    version,
    about = "Exact computations with sheaves of modules on finite spaces"
)]
struct Cli {
    /// Print the machine report (one JSON line) instead of the human one.
    #[arg(long, global = true)]
    json: bool,
    /// Include wall-clock time in the report.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check the topology and every object of the manifest.
    Validate { manifest: PathBuf },
    /// Stalk bases of the annihilator of a sub-module.
    Annihilator {
        manifest: PathBuf,
        /// A pairing name, `form`, or `canonical`.
        #[arg(long)]
        pairing: String,
        #[arg(long)]
        sub: String,
    },
    /// Isotropic, coisotropic, symplectic and Lagrangian flags of a sub-module.
    Classify {
        manifest: PathBuf,
        #[arg(long)]
        sub: String,
    },
    /// Darboux covectors of the form near a point.
    Darboux {
        manifest: PathBuf,
        #[arg(long)]
        at: String,
        /// A section of the manifest to use as the second covector of the first pair.
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        abs_normalize: bool,
    },
    /// Symplectic reduction by a coisotropic sub-module.
    Reduce {
        manifest: PathBuf,
        #[arg(long)]
        sub: String,
        /// A Lagrangian sub-module whose image in the reduction is reported.
        #[arg(long)]
        lagrangian: Option<String>,
    },
    /// Run an invariant suite on the manifest and on seeded random instances.
    Check {
        manifest: PathBuf,
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed_rng: u64,
    },
}

impl Cmd {
    fn split(self) -> (PathBuf, Command) {
        match self {
            Cmd::Validate { manifest } => (manifest, Command::Validate),
            Cmd::Annihilator {
                manifest,
                pairing,
                sub,
            } => (manifest, Command::Annihilator { pairing, sub }),
            Cmd::Classify { manifest, sub } => (manifest, Command::Classify { sub }),
            Cmd::Darboux {
                manifest,
                at,
                seed,
                abs_normalize,
            } => (
                manifest,
                Command::Darboux {
                    at,
                    seed,
                    abs_normalize,
                },
            ),
            Cmd::Reduce {
                manifest,
                sub,
                lagrangian,
            } => (manifest, Command::Reduce { sub, lagrangian }),
            Cmd::Check {
                manifest,
                suite,
                seed_rng,
            } => (manifest, Command::Check { suite, seed_rng }),
        }
    }
}

/// What a run prints and how it exits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                // --help and --version
                Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let (json, timing) = (cli.json, cli.timing);
    let (path, command) = cli.command.split();
    let input_error = |msg: String| Outcome {
        code: EXIT_INPUT,
        stdout: String::new(),
        stderr: format!("error: {msg}\n"),
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return input_error(format!("cannot read {}: {e}", path.display())),
    };
    let start = Instant::now();
    let manifest = match parse_manifest(&text) {
        Ok(m) => m,
        Err(e) => return input_error(e.to_string()),
    };
    let mut report = run_command(&manifest, &command);
    if timing {
        report.timing_ms = Some(start.elapsed().as_millis());
    }
    Outcome {
        code: report.exit_code(),
        stdout: if json {
            report.machine()
        } else {
            report.human()
        },
        stderr: String::new(),
    }
}
