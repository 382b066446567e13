//! `povm`: run scenarios, verify chain files, execute single jobs, and compare
//! PoVM against the hashcash baseline.
//!
//! Exit codes are the only success channel. Standard output carries JSON or
//! one-line verdicts; diagnostics go to standard error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use povm_core::hashchain::{
    load_chain_json, validate_chain, verify_chain_file, ValidationReport, CHAIN_MAGIC,
};
use povm_core::jobvm::{coinflip_program, execute, ExecStatus, Job, Program, Sla};
use povm_core::simnet::{
    account_energy, EnergyCounters, EnergyReport, Mode, ScenarioConfig, SimError, SimReport,
    TauTerms, World,
};
use povm_core::NodeId;

#[derive(Parser, Debug)]
#[command(name = "povm", version, about = "Proof-of-VM blockchain simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write report.json, chain.bin, chain.json and metrics.csv.
    Run(RunArgs),
    /// Validate a chain.bin (or chain.json) file.
    Verify { chain: PathBuf },
    /// Execute one job locally.
    Job(JobArgs),
    /// Run the same workload in PoVM and hashcash-baseline mode and compare energy.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    horizon: Option<u64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.threads {
            cfg.threads = Some(t);
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Write a JSON-lines event trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug)]
struct JobArgs {
    /// Program text file; use --k-heads instead for the coin-flip job.
    #[arg(required_unless_present = "k_heads", conflicts_with = "k_heads")]
    program: Option<PathBuf>,
    #[arg(long)]
    k_heads: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated initial memory cells.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    input: Vec<i64>,
    #[arg(long)]
    max_instructions: Option<u64>,
    #[arg(long)]
    max_memory: Option<u64>,
    #[arg(long)]
    checkpoint_interval: Option<u64>,
    #[arg(long)]
    epoch_length: Option<u64>,
}

/// A failed command: message for standard error plus its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) => Failure::config(e.to_string()),
            _ => Failure::internal(e.to_string()),
        }
    }
}

fn load_config(path: &Path, overrides: &Overrides) -> Result<ScenarioConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let mut cfg = ScenarioConfig::from_json(&text)
        .map_err(|e| Failure::config(format!("invalid config {}: {e}", path.display())))?;
    overrides.apply(&mut cfg);
    cfg.validate().map_err(|e| Failure::config(e.to_string()))?;
    Ok(cfg)
}

/// Writes a line to standard output. A closed pipe is not an error.
fn emit(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print_json<T: Serialize>(v: &T) {
    emit(&serde_json::to_string_pretty(v).expect("output serializes"));
}

#[derive(Serialize)]
struct RunSummary<'a> {
    out: &'a Path,
    chain_height: u64,
    tip_digest: String,
    jobs: povm_core::simnet::JobCounts,
    agreed_height: u64,
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config, &args.overrides)?;
    let mut world = World::new(cfg)?;
    if let Some(path) = &args.trace {
        let f = std::fs::File::create(path)
            .map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?;
        world = world.with_trace(Box::new(std::io::BufWriter::new(f)));
    }
    let report = world.run()?;
    write_outputs(&args.out, &report)
        .map_err(|e| Failure::internal(format!("{}: {e}", args.out.display())))?;
    print_json(&RunSummary {
        out: &args.out,
        chain_height: report.chain_height,
        tip_digest: report.tip_digest.to_hex(),
        jobs: report.jobs,
        agreed_height: report.agreed_height,
    });
    Ok(())
}

fn write_outputs(dir: &Path, report: &SimReport) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(report)?,
    )?;
    report
        .chain
        .save(&dir.join("chain.bin"), Some(&dir.join("chain.json")))?;
    std::fs::write(dir.join("metrics.csv"), report.metrics_csv())
}

fn cmd_verify(path: &Path) -> Result<ExitCode, Failure> {
    let bytes =
        std::fs::read(path).map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?;
    let report: ValidationReport = if bytes.starts_with(CHAIN_MAGIC) || !bytes.starts_with(b"{") {
        verify_chain_file(&bytes)
            .map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?
    } else {
        let text = String::from_utf8(bytes).map_err(|e| Failure::internal(e.to_string()))?;
        let chain = load_chain_json(&text)
            .map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?;
        validate_chain(&chain)
    };
    match report.first_failure() {
        None => {
            emit(&format!("Valid ({} blocks)", report.blocks_checked));
            Ok(ExitCode::SUCCESS)
        }
        Some(f) => {
            emit(&format!("Invalid at height {}: {}", f.index, f.kind));
            for extra in &report.failures[1..] {
                log::info!("also invalid at height {}: {}", extra.index, extra.kind);
            }
            Ok(ExitCode::from(1))
        }
    }
}

#[derive(Serialize)]
struct JobSummary {
    status: ExecStatus,
    output: Option<i64>,
    instructions_executed: u64,
    peak_memory_cells: u64,
    checkpoints: usize,
    checkpoint_root: String,
}

fn cmd_job(args: &JobArgs) -> Result<ExitCode, Failure> {
    let program = match (&args.program, args.k_heads) {
        (_, Some(k)) => coinflip_program(k),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            Program::parse(&text)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
        }
        (None, None) => unreachable!("clap requires a program or --k-heads"),
    };
    let d = Sla::default();
    let max_instructions = args.max_instructions.unwrap_or(d.max_instructions);
    let sla = Sla::new(
        max_instructions,
        args.max_memory.unwrap_or(d.max_memory_cells),
        // an unset interval shrinks to fit a tight budget
        args.checkpoint_interval
            .unwrap_or(d.checkpoint_interval.min(max_instructions)),
        args.epoch_length.unwrap_or(d.epoch_length_ticks),
    )
    .map_err(|e| Failure::config(e.to_string()))?;
    let job = Job {
        id: 0,
        program,
        input: args.input.clone(),
        sla,
        customer: NodeId(0),
        seed: args.seed,
    };
    let trace = execute(&job);
    print_json(&JobSummary {
        status: trace.status,
        output: trace.output,
        instructions_executed: trace.instructions_executed,
        peak_memory_cells: trace.peak_memory_cells,
        checkpoints: trace.checkpoints.len(),
        checkpoint_root: trace.checkpoint_root().to_hex(),
    });
    Ok(if trace.status.is_completed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(Serialize)]
struct ModeSummary {
    chain_height: u64,
    jobs_accepted: u64,
    counters: EnergyCounters,
    energy: EnergyReport,
}

impl From<&SimReport> for ModeSummary {
    fn from(r: &SimReport) -> Self {
        ModeSummary {
            chain_height: r.chain_height,
            jobs_accepted: r.jobs.accepted,
            counters: r.counters,
            energy: r.energy,
        }
    }
}

#[derive(Serialize)]
struct Comparison {
    seed: u64,
    model: povm_core::simnet::EnergyModel,
    povm: ModeSummary,
    baseline: ModeSummary,
    /// Paired cost comparison: redundant execution measured in the PoVM run
    /// against one hash-op per baseline miner.
    tau: TauTerms,
    total_pj_povm: u128,
    total_pj_baseline: u128,
}

fn cmd_compare(args: &CompareArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config, &args.overrides)?;
    let povm = World::new(ScenarioConfig {
        mode: Mode::Povm,
        ..cfg.clone()
    })?
    .run()?;
    let baseline = World::new(ScenarioConfig {
        mode: Mode::HashcashBaseline,
        ..cfg.clone()
    })?
    .run()?;
    let tau = account_energy(&povm.counters, &cfg.energy).tau;
    print_json(&Comparison {
        seed: cfg.seed,
        model: cfg.energy,
        tau,
        total_pj_povm: povm.energy.pow_pj + povm.energy.povm_pj,
        total_pj_baseline: baseline.energy.pow_pj + baseline.energy.povm_pj,
        povm: (&povm).into(),
        baseline: (&baseline).into(),
    });
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("POVM_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|_| ExitCode::SUCCESS),
        Command::Verify { chain } => cmd_verify(chain),
        Command::Job(a) => cmd_job(a),
        Command::Compare(a) => cmd_compare(a).map(|_| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|f| {
        eprintln!("povm: {}", f.message);
        ExitCode::from(f.code)
    })
}
