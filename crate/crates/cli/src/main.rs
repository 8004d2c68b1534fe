//! Command-line front end: check a preorder matrix against a network,
//! search for all preordering structures, simulate the order-preserving
//! coupling, brute-force the coupling hypotheses on a finite window, or
//! print the conservation-law basis.

mod input;
mod report;

use std::path::{Path, PathBuf};
use std::process;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use srn_order_core::linalg::{conservation_basis, ConservationBasis};
use srn_order_core::network::{parse_network, KineticsPair, ParseError, ReactionNetwork};
use srn_order_core::order::{
    build_structure, canonicalize, check_structure, closure_simple, CheckOutcome, PreorderMatrix,
};
use srn_order_core::search::{search, SearchOptions};
use srn_order_core::sim::{
    oracle_check_conditions, simulate_coupled_batch, AffineRelation, Termination,
};

#[derive(Parser)]
#[command(
    name = "srn-order",
    version,
    about = "Preorder-preserving coupling analysis for mass-action reaction networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check whether one preorder matrix is preserved by some rate choice
    Check {
        /// Reaction network file
        net: PathBuf,
        /// Matrix file: one integer row per line, # starts a comment
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
        /// Check the matrix exactly as given instead of its canonical form
        #[arg(long)]
        no_canonicalize: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Enumerate every preordering structure of a network
    Search {
        net: PathBuf,
        /// Keep structures whose constraints are implied by a larger preorder
        #[arg(long)]
        include_dominated: bool,
        /// Worker threads (default: SRN_ORDER_WORKERS or all cores)
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run coupled trajectories and verify the relation along every event
    Simulate {
        net: PathBuf,
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
        /// Affine offset c, comma separated; defaults to all zeros
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        offset: Option<Vec<i64>>,
        /// Initial state of the first chain, comma separated
        #[arg(long, value_delimiter = ',')]
        x0: Vec<i64>,
        /// Initial state of the second chain, comma separated
        #[arg(long, value_delimiter = ',')]
        y0: Vec<i64>,
        #[arg(long)]
        t_max: f64,
        #[arg(long)]
        trajectories: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        max_events: usize,
    },
    /// Brute-force the coupling hypotheses over a truncated state window
    Oracle {
        net: PathBuf,
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        offset: Option<Vec<i64>>,
        /// Anchor state selecting the compatibility class, comma separated
        #[arg(long, value_delimiter = ',')]
        anchor: Vec<i64>,
        /// Upper bound on every species count in the window
        #[arg(long)]
        radius: i64,
    },
    /// Print the conservation-law basis, one row per line
    Conservation { net: PathBuf },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Net { path: String, source: ParseError },
    #[error("{path}: {message}")]
    Matrix { path: String, message: String },
    #[error("{0}")]
    Usage(String),
}

fn main() {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            process::exit(2);
        }
    }
}

fn load_network(path: &Path) -> Result<(ReactionNetwork, Option<KineticsPair>), CliError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: shown.clone(),
        source,
    })?;
    parse_network(&text).map_err(|source| CliError::Net {
        path: shown,
        source,
    })
}

fn require_kinetics(kin: Option<KineticsPair>, path: &Path) -> Result<KineticsPair, CliError> {
    kin.ok_or_else(|| {
        CliError::Usage(format!(
            "{} carries no kX=/kY= rate annotations, which this command needs",
            path.display()
        ))
    })
}

fn load_matrix(path: &Path, d: usize) -> Result<PreorderMatrix, CliError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: shown.clone(),
        source,
    })?;
    let rows = input::parse_matrix_text(&text).map_err(|message| CliError::Matrix {
        path: shown.clone(),
        message,
    })?;
    PreorderMatrix::new(rows, d).map_err(|e| CliError::Matrix {
        path: shown,
        message: e.to_string(),
    })
}

fn build_relation(m: PreorderMatrix, offset: Option<Vec<i64>>) -> Result<AffineRelation, CliError> {
    match offset {
        None => Ok(AffineRelation::preorder(m)),
        Some(c) => AffineRelation::with_offset(m, c).map_err(|e| CliError::Usage(e.to_string())),
    }
}

fn check_len(name: &str, got: usize, want: usize) -> Result<(), CliError> {
    if got != want {
        return Err(CliError::Usage(format!(
            "{name} has {got} entries but the network has {want} species"
        )));
    }
    Ok(())
}

fn resolve_workers(flag: Option<usize>) -> Result<usize, CliError> {
    let requested = match flag {
        Some(n) => Some(n),
        None => match std::env::var("SRN_ORDER_WORKERS") {
            Ok(raw) => Some(raw.parse().map_err(|_| {
                CliError::Usage(format!("SRN_ORDER_WORKERS is not a worker count: {raw:?}"))
            })?),
            Err(_) => None,
        },
    };
    match requested {
        Some(0) => Err(CliError::Usage("worker count must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn run(cmd: Cmd) -> Result<i32, CliError> {
    match cmd {
        Cmd::Check {
            net,
            matrix,
            no_canonicalize,
            format,
        } => run_check(&net, &matrix, no_canonicalize, format),
        Cmd::Search {
            net,
            include_dominated,
            workers,
            format,
        } => run_search(&net, include_dominated, workers, format),
        Cmd::Simulate {
            net,
            matrix,
            offset,
            x0,
            y0,
            t_max,
            trajectories,
            seed,
            max_events,
        } => run_simulate(
            &net,
            &matrix,
            offset,
            x0,
            y0,
            t_max,
            trajectories,
            seed,
            max_events,
        ),
        Cmd::Oracle {
            net,
            matrix,
            offset,
            anchor,
            radius,
        } => run_oracle(&net, &matrix, offset, anchor, radius),
        Cmd::Conservation { net } => run_conservation(&net),
    }
}

fn run_check(
    net_path: &Path,
    matrix_path: &Path,
    no_canonicalize: bool,
    format: Format,
) -> Result<i32, CliError> {
    let (net, _) = load_network(net_path)?;
    let cons = conservation_basis(&net);
    let input_m = load_matrix(matrix_path, net.species_count())?;
    let checked = if no_canonicalize {
        input_m.clone()
    } else {
        canonicalize(&input_m, &cons).map_err(|e| CliError::Usage(e.to_string()))?
    };
    let outcome = check_structure(&net, &checked, &cons);
    let (structure, invalid) = match outcome {
        CheckOutcome::Valid(constraints) => {
            let closure = closure_simple(&checked, &cons);
            (Some(build_structure(&checked, closure, constraints)), None)
        }
        CheckOutcome::Invalid { reaction, side } => {
            (None, Some((net.reactions[reaction].label.clone(), side)))
        }
    };
    let rendering = report::CheckRendering {
        net: &net,
        cons: &cons,
        input_matrix: input_m.rows(),
        canonicalized: !no_canonicalize,
        matrix: checked.rows(),
        structure: structure.as_ref(),
        invalid: invalid.clone(),
    };
    match format {
        Format::Text => print!("{}", report::render_check_text(&rendering)),
        Format::Json => print!("{}", report::render_check_json(&rendering)),
        Format::Dot => {
            let tags = srn_order_core::order::species_tags(
                &closure_simple(&checked, &cons),
                net.species_count(),
            );
            let comment = invalid
                .as_ref()
                .map(|(label, side)| format!("invalid: reaction {label} fails on side {side}"));
            print!(
                "{}",
                report::render_structure_dot(
                    &net,
                    "checked",
                    &tags,
                    structure
                        .as_ref()
                        .map(|s| s.reaction_constraints.as_slice()),
                    comment.as_deref(),
                )
            );
        }
    }
    Ok(if structure.is_some() { 0 } else { 1 })
}

fn run_search(
    net_path: &Path,
    include_dominated: bool,
    workers: Option<usize>,
    format: Format,
) -> Result<i32, CliError> {
    let (net, _) = load_network(net_path)?;
    let cons = conservation_basis(&net);
    let options = SearchOptions {
        include_dominated,
        include_equivalence_structures: true,
        worker_count: resolve_workers(workers)?,
    };
    let report = search(&net, &options);
    match format {
        Format::Text => print!("{}", report::render_search_text(&net, &report)),
        Format::Json => print!("{}", report::render_search_json(&net, &cons, &report)),
        Format::Dot => print!("{}", report::render_search_dot(&net, &report)),
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    net_path: &Path,
    matrix_path: &Path,
    offset: Option<Vec<i64>>,
    x0: Vec<i64>,
    y0: Vec<i64>,
    t_max: f64,
    trajectories: usize,
    seed: u64,
    max_events: usize,
) -> Result<i32, CliError> {
    let (net, kin) = load_network(net_path)?;
    let kin = require_kinetics(kin, net_path)?;
    let d = net.species_count();
    let m = load_matrix(matrix_path, d)?;
    let rel = build_relation(m, offset)?;
    check_len("--x0", x0.len(), d)?;
    check_len("--y0", y0.len(), d)?;
    if !t_max.is_finite() || t_max < 0.0 {
        return Err(CliError::Usage(format!("--t-max {t_max} is not a horizon")));
    }
    if !rel.contains(&x0, &y0) {
        return Err(CliError::Usage(
            "the initial pair (x0, y0) is not in the relation".into(),
        ));
    }
    println!("trajectories {trajectories}, seed {seed}, t-max {t_max}");
    match simulate_coupled_batch(
        &net,
        &kin,
        &rel,
        &x0,
        &y0,
        t_max,
        seed,
        max_events,
        trajectories,
    ) {
        Err(violation) => {
            println!("hypothesis violation: {violation}");
            Ok(1)
        }
        Ok(trajs) => {
            let events: usize = trajs.iter().map(|t| t.events.len()).sum();
            let count = |t: Termination| trajs.iter().filter(|tr| tr.terminated_by == t).count();
            let broken: usize = trajs
                .iter()
                .flat_map(|tr| tr.events.iter())
                .filter(|e| !rel.contains(&e.x, &e.y))
                .count();
            println!("events {events}");
            println!(
                "terminated: t-max {}, max-events {}, absorbed {}",
                count(Termination::TMaxReached),
                count(Termination::MaxEvents),
                count(Termination::Absorbed)
            );
            println!("relation violations {broken}");
            Ok(if broken > 0 { 1 } else { 0 })
        }
    }
}

fn run_oracle(
    net_path: &Path,
    matrix_path: &Path,
    offset: Option<Vec<i64>>,
    anchor: Vec<i64>,
    radius: i64,
) -> Result<i32, CliError> {
    let (net, kin) = load_network(net_path)?;
    let kin = require_kinetics(kin, net_path)?;
    let d = net.species_count();
    let m = load_matrix(matrix_path, d)?;
    let rel = build_relation(m, offset)?;
    check_len("--anchor", anchor.len(), d)?;
    if radius < 0 {
        return Err(CliError::Usage(format!("--radius {radius} is negative")));
    }
    if anchor.iter().any(|&v| v < 0) {
        return Err(CliError::Usage("--anchor has a negative count".into()));
    }
    let report = oracle_check_conditions(&net, &kin, &rel, &anchor, radius);
    println!("box states {}", report.box_states);
    println!("pairs checked {}", report.pairs_checked);
    println!("violations {}", report.violations.len());
    for v in report.violations.iter().take(50) {
        println!("{v}");
    }
    if report.violations.len() > 50 {
        println!("... and {} more", report.violations.len() - 50);
    }
    Ok(if report.violations.is_empty() { 0 } else { 1 })
}

fn run_conservation(net_path: &Path) -> Result<i32, CliError> {
    let (net, _) = load_network(net_path)?;
    let cons: ConservationBasis = conservation_basis(&net);
    for row in &cons.c {
        let parts: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        println!("{}", parts.join(" "));
    }
    Ok(0)
}
