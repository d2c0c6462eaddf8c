//! The `lyap` command line: scenario files in, run records, CSV tables and
//! SVG plots out.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ops;
pub mod output;
pub mod scenario;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::output::{Payload, RunRecord, Status, PAYLOAD_SCHEMA};
use crate::scenario::{Operation, Overrides, Scenario};

#[derive(Debug, Parser)]
#[command(name = "lyap", version, about = "Lyapunov exponents of SL(2) cocycles: estimators, certificates, spectra and positivity searches")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lyapunov exponent of a cocycle, optionally along an energy grid.
    Lyapunov(CommonArgs),
    /// Conefield certificate of uniform hyperbolicity.
    Certify(CommonArgs),
    /// Band structure of a periodic Schrödinger operator.
    Bands(CommonArgs),
    /// Integrated density of states and the Thouless exponent.
    Ids(CommonArgs),
    /// The regularized functional Φ in one of its forms.
    Phi(CommonArgs),
    /// Rotation-average identity for a real cocycle.
    AbCheck(CommonArgs),
    /// Search for a nearby cocycle with positive exponent.
    Search(CommonArgs),
    /// Scan (t, E) for positive exponents of E − v − t·w.
    QuantitaScan(CommonArgs),
    /// Run the acceptance suite and print the pass/fail table.
    Reproduce(CommonArgs),
}

impl Command {
    pub fn split(&self) -> (Operation, &CommonArgs) {
        match self {
            Command::Lyapunov(a) => (Operation::Lyapunov, a),
            Command::Certify(a) => (Operation::Certify, a),
            Command::Bands(a) => (Operation::Bands, a),
            Command::Ids(a) => (Operation::Ids, a),
            Command::Phi(a) => (Operation::Phi, a),
            Command::AbCheck(a) => (Operation::AbCheck, a),
            Command::Search(a) => (Operation::Search, a),
            Command::QuantitaScan(a) => (Operation::QuantitaScan, a),
            Command::Reproduce(a) => (Operation::Reproduce, a),
        }
    }
}

/// Each flag replaces the scenario field of the same name.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Base system as inline JSON.
    #[arg(long)]
    pub base: Option<String>,
    /// Potential as inline JSON.
    #[arg(long)]
    pub potential: Option<String>,
    /// Cocycle as inline JSON.
    #[arg(long)]
    pub cocycle: Option<String>,
    /// Operation parameters as inline JSON.
    #[arg(long)]
    pub params: Option<String>,
    /// Seed of every random stream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of sampled base points.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Orbit length of the Birkhoff estimator.
    #[arg(long)]
    pub n: Option<usize>,
    /// Quadrature tolerance (band resolution for `bands`).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Directory for record.json, payload.json, CSV and SVG files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            base: self.base.clone(),
            potential: self.potential.clone(),
            cocycle: self.cocycle.clone(),
            params: self.params.clone(),
            seed: self.seed,
            samples: self.samples,
            n: self.n,
            tol: self.tol,
            out: self.out.clone(),
            threads: self.threads,
        }
    }
}

/// Runs one scenario: prints the record (or the acceptance table), writes
/// the output directory and maps the status to an error.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let (op, args) = cli.command.split();
    let scenario = Scenario::resolve(args.scenario.as_deref(), op, &args.overrides())?;
    let compute = || -> Result<_, CliError> {
        let start = Instant::now();
        let outcome = ops::execute(&scenario)?;
        Ok((outcome, start.elapsed().as_secs_f64()))
    };
    let (outcome, seconds) = match scenario.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Schema(format!("threads: {e}")))?
            .install(compute)?,
        None => compute()?,
    };
    let payload = Payload { schema: PAYLOAD_SCHEMA, operation: op, status: outcome.status, result: outcome.result };
    let record = RunRecord::new(scenario.hash(), seconds, payload);
    if let Some(dir) = &scenario.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("record.json"), output::to_json(&record))?;
        std::fs::write(dir.join("payload.json"), output::to_json(&record.payload))?;
        for t in &outcome.tables {
            output::write_csv(dir, t)?;
        }
        for p in &outcome.plots {
            output::write_plot(dir, p)?;
        }
    }
    match &outcome.report {
        Some(lines) => lines.iter().for_each(|l| println!("{l}")),
        None => print!("{}", output::to_json(&record)),
    }
    match record.payload.status {
        Status::Ok => Ok(()),
        Status::BudgetExhausted => Err(CliError::BudgetExhausted("no positive exponent detected within the Φ budget".into())),
        Status::Failed if op == Operation::Reproduce => {
            let all = record.payload.result.as_array().map_or(&[][..], Vec::as_slice);
            let failed = all.iter().filter(|o| o["passed"] != true).count();
            Err(CliError::AcceptanceFailed { failed, total: all.len() })
        }
        Status::Failed => Err(CliError::Numerical("the operation reported failure".into())),
    }
}
