// qdsim: run named quantum double experiments or protocol scripts and emit
// a JSON result document.
// Exit codes: 0 success, 2 invalid input, 3 simulation failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdsim::experiments::{self, ModeKind, OutputFormat, ProtocolScript, RunOptions};
use qdsim::lattice::Boundary;
use qdsim::protocols::CorrectionPolicy;
use qdsim::Error;

#[derive(Parser)]
#[command(name = "qdsim", version)]
#[command(about = "Exact simulation of quantum double anyon protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment
    Run {
        /// prepare-gs, toric-fig3, reference-phase, s3-interfere,
        /// magnetic-fusion or electric-fusion
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run a protocol script; its header overrides --group/--lattice/--boundary/--mode
    Script {
        path: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// List the named experiments
    List,
}

#[derive(Args)]
struct Common {
    /// Group: z2 or s3
    #[arg(long)]
    group: Option<String>,

    /// Lattice size in vertex rows and columns
    #[arg(long, num_args = 2, value_names = ["N", "M"])]
    lattice: Option<Vec<usize>>,

    /// open or rough-smooth
    #[arg(long)]
    boundary: Option<Boundary>,

    /// branch (deterministic first outcome) or sample (needs --seed)
    #[arg(long, default_value = "branch")]
    mode: ModeKind,

    #[arg(long)]
    seed: Option<u64>,

    /// Amplitudes below this magnitude are dropped
    #[arg(long, default_value_t = 1e-12)]
    prune_eps: f64,

    /// Worker threads for sweeps (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,

    /// Element names for s3-interfere, comma separated
    #[arg(long = "h", value_delimiter = ',')]
    h: Vec<String>,

    /// Couplings U for toric-fig3 and reference-phase, comma separated
    #[arg(long, value_delimiter = ',')]
    coupling: Vec<f64>,

    /// Ground-state preparation: paper-correction or postselect
    #[arg(long, default_value = "paper-correction")]
    policy: CorrectionPolicy,

    /// Irrep for electric-fusion (R1+, R1-, R2)
    #[arg(long)]
    irrep: Option<String>,

    /// Flux representative for magnetic-fusion
    #[arg(long)]
    class: Option<String>,

    /// Write the result here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,

    /// json or csv-summary
    #[arg(long, default_value = "json")]
    format: OutputFormat,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            group: self.group.clone(),
            lattice: self.lattice.as_ref().map(|v| (v[0], v[1])),
            boundary: self.boundary,
            mode: self.mode,
            seed: self.seed,
            prune_eps: self.prune_eps,
            jobs: self.jobs,
            h: self.h.clone(),
            policy: self.policy,
            couplings: self.coupling.clone(),
            irrep: self.irrep.clone(),
            class: self.class.clone(),
        }
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("qdsim: {e}");
    ExitCode::from(if e.is_usage() { 2 } else { 3 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (doc, common) = match &cli.command {
        Command::List => {
            for name in experiments::EXPERIMENTS {
                println!("{name}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Run { name, common } => (experiments::run_experiment(name, &common.options()), common),
        Command::Script { path, common } => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("qdsim: cannot read {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            };
            let doc = ProtocolScript::parse(&text).and_then(|s| experiments::run_script(&s, &common.options()));
            (doc, common)
        }
    };
    let doc = match doc {
        Ok(d) => d,
        Err(e) => return fail(&e),
    };
    let text = doc.emit(common.format);
    match &common.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("qdsim: cannot write {}: {e}", path.display());
                return ExitCode::from(3);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}
