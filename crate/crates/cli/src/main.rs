use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use immunobot_core::genome::serialize_genome;
use immunobot_core::harness::{self, BatterySetup, RunRecord};
use immunobot_core::ltl_evolve::{self, EvolutionConfig, GenerationLog};
use immunobot_core::platform::{wheel_speeds_to_command, PlatformProfile, SpeedCommand};
use immunobot_core::simworld::{step, task_complete, RobotState, TICK_SECONDS, TIME_LIMIT_SECONDS};
use immunobot_core::stl_ais::{run_genome, EpisodeOptions, TraceRow};
use immunobot_core::{AisParams, AisState, Genome, SelectionMode, World, ANTIGEN_COUNT};

#[derive(Parser, Debug)]
#[command(name = "immunobot", version, about = "Evolve, run and compare immune-network robot controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve a genome on the reference robot.
    Evolve(EvolveArgs),
    /// Run one episode of a genome.
    Run(RunArgs),
    /// Run an idiotypic-versus-greedy battery and report.
    Experiment(ExperimentArgs),
    /// Re-integrate a recorded trace into a trail.
    Replay(ReplayArgs),
    /// Print decoded genes, network matrices and speed conversions.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProfileName {
    Epuck,
    Pioneer,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Idiotypic,
    Greedy,
}

impl From<ModeArg> for SelectionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Idiotypic => SelectionMode::Idiotypic,
            ModeArg::Greedy => SelectionMode::Greedy,
        }
    }
}

#[derive(Args, Debug)]
struct ProfileArgs {
    /// Robot to simulate.
    #[arg(long, value_enum, default_value = "epuck")]
    profile: ProfileName,
    /// `key = value` overrides applied on top of the chosen profile.
    #[arg(long)]
    profile_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[arg(long)]
    world: PathBuf,
    /// Genome file to write.
    #[arg(long)]
    out: PathBuf,
    /// Per-generation CSV log.
    #[arg(long)]
    log: Option<PathBuf>,
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    populations: Option<usize>,
    #[arg(long)]
    population_size: Option<usize>,
    #[arg(long)]
    mutation_rate: Option<f64>,
    #[arg(long)]
    max_generations: Option<usize>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    world: PathBuf,
    #[arg(long)]
    genome: PathBuf,
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long, value_enum, default_value = "idiotypic")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Pose per tick as CSV.
    #[arg(long)]
    trail: Option<PathBuf>,
    /// Selection and command per tick as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// SVG drawing of the world and trail.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    world: PathBuf,
    #[arg(long)]
    genome: PathBuf,
    #[command(flatten)]
    profile: ProfileArgs,
    /// Runs per mode.
    #[arg(long, default_value_t = 30)]
    runs: usize,
    /// Share scenario seeds between modes.
    #[arg(long)]
    paired: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    results: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    world: PathBuf,
    /// Trace written by `run --trace`.
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    profile: ProfileArgs,
    /// Seed of the recorded run; fixes the start pose.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    trail: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    genome: Option<PathBuf>,
    #[command(flatten)]
    profile: ProfileArgs,
    /// Left wheel speed to convert, in epuck units per second.
    #[arg(long, allow_negative_numbers = true)]
    left: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    right: Option<f64>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Invalid(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Invalid(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Invalid(m) => m,
        }
    }
}

type CliResult = Result<(), CliError>;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CliResult {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn load_world(path: &Path) -> Result<World, CliError> {
    World::parse(&read(path)?).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn load_genome(path: &Path) -> Result<Genome, CliError> {
    read(path)?
        .parse()
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn load_profile(args: &ProfileArgs) -> Result<PlatformProfile, CliError> {
    let base = match args.profile {
        ProfileName::Epuck => PlatformProfile::epuck(),
        ProfileName::Pioneer => PlatformProfile::pioneer(),
    };
    match &args.profile_file {
        None => Ok(base),
        Some(path) => base
            .with_overrides(&read(path)?)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display()))),
    }
}

fn world_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| "world".into(), |s| s.to_string_lossy().into_owned())
}

fn cmd_evolve(a: &EvolveArgs) -> CliResult {
    let world = load_world(&a.world)?;
    let profile = load_profile(&a.profile)?;
    let defaults = EvolutionConfig::default();
    let cfg = EvolutionConfig {
        populations: a.populations.unwrap_or(defaults.populations),
        population_size: a.population_size.unwrap_or(defaults.population_size),
        mutation_rate: a.mutation_rate.unwrap_or(defaults.mutation_rate),
        max_generations: a.max_generations.unwrap_or(defaults.max_generations),
        seed: a.seed,
        ..defaults
    };
    println!("seed = {}", a.seed);
    println!("{}", GenerationLog::HEADER);
    let mut log = format!("# seed = {}\n{}\n", a.seed, GenerationLog::HEADER);
    let (genome, _) = ltl_evolve::evolve(&world, &profile, &cfg, |g| {
        println!("{g}");
        let _ = writeln!(log, "{g}");
    })
    .map_err(|e| CliError::Invalid(e.to_string()))?;
    let text = format!("# evolved with seed {}\n{}", a.seed, serialize_genome(&genome));
    write(&a.out, &text)?;
    if let Some(path) = &a.log {
        write(path, &log)?;
    }
    println!("wrote {} gene sets to {}", genome.len(), a.out.display());
    Ok(())
}

fn cmd_run(a: &RunArgs) -> CliResult {
    let world = load_world(&a.world)?;
    let genome = load_genome(&a.genome)?;
    let profile = load_profile(&a.profile)?;
    let reference = PlatformProfile::epuck();
    let options = EpisodeOptions {
        record_trail: a.trail.is_some() || a.svg.is_some(),
        record_trace: a.trace.is_some(),
        ..Default::default()
    };
    let mode = a.mode.into();
    let ep = run_genome(&world, &genome, AisParams::default(), mode, &profile, &reference, a.seed, options);
    if let Some(path) = &a.trail {
        write(path, &harness::trail_csv(&ep.trail))?;
    }
    if let Some(path) = &a.svg {
        write(path, &harness::trail_svg(&world, &ep.trail, profile.body_radius))?;
    }
    if let Some(path) = &a.trace {
        let mut text = format!("{}\n", TraceRow::HEADER);
        for row in &ep.trace {
            let _ = writeln!(text, "{row}");
        }
        write(path, &text)?;
    }
    let t = if ep.completed { ep.t } else { TIME_LIMIT_SECONDS };
    println!(
        "seed = {} mode = {} t = {:.1} c = {} status = {}",
        a.seed,
        mode.as_str(),
        t,
        ep.collisions,
        if ep.completed { "completed" } else { "failed" }
    );
    Ok(())
}

fn cmd_experiment(a: &ExperimentArgs) -> CliResult {
    if a.runs < 2 {
        return Err(CliError::Invalid("--runs must be at least 2".into()));
    }
    let world = load_world(&a.world)?;
    let genome = load_genome(&a.genome)?;
    let profile = load_profile(&a.profile)?;
    let reference = PlatformProfile::epuck();
    let id = world_id(&a.world);
    let setup = BatterySetup {
        world: &world,
        world_id: &id,
        genome: &genome,
        target: &profile,
        reference: &reference,
        params: AisParams::default(),
    };
    let mut records: Vec<RunRecord> = harness::run_battery(&setup, a.runs, a.paired, a.seed);
    harness::score_runs(&mut records);
    let report = harness::report(&records, &id, a.paired);
    let rendered = format!("# seed = {}\n{}", a.seed, report.render());
    if let Some(path) = &a.results {
        write(path, &harness::results_csv(&records))?;
    }
    if let Some(path) = &a.report {
        write(path, &rendered)?;
    }
    print!("{rendered}");
    Ok(())
}

fn parse_trace(text: &str) -> Result<Vec<SpeedCommand>, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TraceRow::HEADER => {}
        _ => return Err(CliError::Invalid(format!("trace must start with `{}`", TraceRow::HEADER))),
    }
    let mut cmds = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let num = |k: usize| -> Result<f64, CliError> {
            fields
                .get(k)
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| CliError::Invalid(format!("trace line {}: bad field {}", idx + 1, k + 1)))
        };
        if fields.len() != 8 {
            return Err(CliError::Invalid(format!("trace line {}: expected 8 fields", idx + 1)));
        }
        cmds.push(SpeedCommand { v: num(6)?, omega: num(7)? });
    }
    Ok(cmds)
}

fn cmd_replay(a: &ReplayArgs) -> CliResult {
    let world = load_world(&a.world)?;
    let profile = load_profile(&a.profile)?;
    let cmds = parse_trace(&read(&a.trace)?)?;
    let mut state = RobotState::at(world.scenario_start(a.seed, profile.body_radius));
    let mut trail = vec![state.pose];
    for cmd in cmds {
        state = step(&world, &state, cmd, &profile, TICK_SECONDS);
        trail.push(state.pose);
    }
    if let Some(path) = &a.trail {
        write(path, &harness::trail_csv(&trail))?;
    }
    if let Some(path) = &a.svg {
        write(path, &harness::trail_svg(&world, &trail, profile.body_radius))?;
    }
    let done = task_complete(&world, &state, &profile).unwrap_or(false);
    println!(
        "seed = {} ticks = {} x = {:.4} y = {:.4} theta = {:.4} c = {} status = {}",
        a.seed,
        state.ticks,
        state.pose.x,
        state.pose.y,
        state.pose.theta,
        state.collisions,
        if done { "completed" } else { "incomplete" }
    );
    Ok(())
}

fn cmd_inspect(a: &InspectArgs) -> CliResult {
    let profile = load_profile(&a.profile)?;
    if let Some(path) = &a.genome {
        let genome = load_genome(path)?;
        let params = AisParams::default();
        println!("# genes (antigen type S F A D R_f R_a score)");
        for (i, set) in genome.sets().iter().enumerate() {
            println!("set {i}: t = {} c = {}", set.task_time, set.collisions);
            for g in &set.genes {
                println!("  {g}");
            }
        }
        let evals: Vec<(f64, f64)> = genome
            .sets()
            .iter()
            .map(|s| (f64::from(s.task_time), f64::from(s.collisions)))
            .collect();
        let mu = ltl_evolve::population_fitness(&evals, params.rho).map_err(|e| CliError::Invalid(e.to_string()))?;
        let mu_text: Vec<String> = mu.iter().map(|m| format!("{m:.6}")).collect();
        println!("mu = [{}]", mu_text.join(", "));
        println!("sum mu = {:.12}", mu.iter().sum::<f64>());
        let ais = AisState::from_genome(&genome, params, SelectionMode::Idiotypic);
        println!("# paratope P (rows = sets, columns = antigens 1..{ANTIGEN_COUNT})");
        for row in ais.paratope() {
            let cells: Vec<String> = row.iter().map(|p| format!("{p:.4}")).collect();
            println!("  {}", cells.join(" "));
        }
        println!("# idiotope I");
        for i in 0..genome.len() {
            let cells: Vec<String> = (0..ANTIGEN_COUNT).map(|j| format!("{:.0}", ais.idiotope(i, j))).collect();
            println!("  {}", cells.join(" "));
        }
    }
    if a.left.is_some() || a.right.is_some() {
        let (l, r) = (a.left.unwrap_or(0.0), a.right.unwrap_or(0.0));
        let cmd = wheel_speeds_to_command(l, r, &profile, &PlatformProfile::epuck());
        println!("{} L = {l} R = {r}: v = {:.6} m/s omega = {:.6} rad/s", profile.name, cmd.v, cmd.omega);
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Evolve(a) => cmd_evolve(a),
        Command::Run(a) => cmd_run(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Inspect(a) => cmd_inspect(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = !matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if usage {
                ExitCode::from(CliError::Usage(String::new()).exit_code())
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
