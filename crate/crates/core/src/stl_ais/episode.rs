//! The per-tick control loop: sense, classify, reinforce, select, update
//! concentrations, execute.

use std::fmt;

use super::{execute_behaviour, AisState, SelectionMode, WheelSpeeds};
use crate::genome::{BehaviourGene, Genome};
use crate::perception::{blob_zone, classify_antigen, sense, Antigen};
use crate::platform::{wheel_speeds_to_command, PlatformProfile};
use crate::seed;
use crate::simworld::{step, task_complete, Pose, RobotState, World, TICK_SECONDS, TIME_LIMIT_TICKS};
use crate::stl_ais::AisParams;
use crate::ANTIGEN_COUNT;

/// Running mean of the rewards one behaviour has received.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardStats {
    pub evaluations: u32,
    pub mean_reward: f64,
}

impl RewardStats {
    pub fn record(&mut self, reward: f64) {
        self.evaluations += 1;
        self.mean_reward += (reward - self.mean_reward) / f64::from(self.evaluations);
    }

    /// Folds another set of statistics into this one.
    pub fn merge(&mut self, other: &RewardStats) {
        let total = self.evaluations + other.evaluations;
        if total > 0 {
            self.mean_reward = (self.mean_reward * f64::from(self.evaluations)
                + other.mean_reward * f64::from(other.evaluations))
                / f64::from(total);
        }
        self.evaluations = total;
    }
}

/// One line of the optional per-tick trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub tick: u64,
    pub antigen: Antigen,
    pub mode: SelectionMode,
    pub selected_set: usize,
    pub wheels: WheelSpeeds,
    pub v: f64,
    pub omega: f64,
}

impl TraceRow {
    pub const HEADER: &'static str = "tick,antigen,mode,selected_set,L,R,v,omega";
}

impl fmt::Display for TraceRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{},{}",
            self.tick,
            self.antigen.code(),
            self.mode.as_str(),
            self.selected_set,
            self.wheels.left,
            self.wheels.right,
            self.v,
            self.omega
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeOptions {
    pub record_trail: bool,
    pub record_trace: bool,
    pub max_ticks: u64,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        Self {
            record_trail: false,
            record_trace: false,
            max_ticks: TIME_LIMIT_TICKS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    /// Completion time, or the cutoff when the task was not completed.
    pub t: f64,
    pub collisions: u32,
    pub completed: bool,
    /// Pose at every tick, starting pose first.
    pub trail: Vec<Pose>,
    pub trace: Vec<TraceRow>,
    /// Per gene set and antigen, rewards collected by that behaviour.
    pub gene_stats: Vec<[RewardStats; ANTIGEN_COUNT]>,
    pub final_state: AisState,
}

/// Runs one episode with `sets[i]` answering antigens for network row `i`.
///
/// `reference` is the platform the genes were evolved on; wheel speeds are
/// converted into velocity commands for `target`.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    world: &World,
    sets: &[[BehaviourGene; ANTIGEN_COUNT]],
    mut ais: AisState,
    target: &PlatformProfile,
    reference: &PlatformProfile,
    start: Pose,
    seed: u64,
    options: EpisodeOptions,
) -> Episode {
    assert_eq!(sets.len(), ais.sets(), "one gene set per network row");
    let mut rng = seed::rng(seed::derive(seed, 1));
    let mut state = RobotState::at(start);
    let mut trail = Vec::new();
    let mut trace = Vec::new();
    let mut gene_stats = vec![[RewardStats::default(); ANTIGEN_COUNT]; sets.len()];
    if options.record_trail {
        trail.push(state.pose);
    }
    let done = |s: &RobotState| task_complete(world, s, target).unwrap_or(false);
    let mut completed = done(&state);

    while !completed && state.ticks < options.max_ticks {
        let frame = sense(world, &state, target);
        let antigen = classify_antigen(&frame, target);
        if let Some(executed) = ais.last() {
            let r = ais.reinforce(executed, antigen);
            gene_stats[executed.0][executed.1.index()].record(r);
        }
        let chosen = ais.select(antigen);
        ais.update_concentrations(chosen);
        let zone = frame.blob.map(|b| blob_zone(b.bearing));
        let wheels = execute_behaviour(&sets[chosen][antigen.index()], zone, &mut rng);
        let cmd = wheel_speeds_to_command(wheels.left, wheels.right, target, reference);
        if options.record_trace {
            trace.push(TraceRow {
                tick: state.ticks,
                antigen,
                mode: ais.mode(),
                selected_set: chosen,
                wheels,
                v: cmd.v,
                omega: cmd.omega,
            });
        }
        ais.set_last((chosen, antigen));
        state = step(world, &state, cmd, target, TICK_SECONDS);
        if options.record_trail {
            trail.push(state.pose);
        }
        completed = done(&state);
    }

    Episode {
        t: state.elapsed,
        collisions: state.collisions,
        completed,
        trail,
        trace,
        gene_stats,
        final_state: ais,
    }
}

/// Runs a genome through the network in `mode`, starting at the world's
/// scenario pose for `seed`.
#[allow(clippy::too_many_arguments)]
pub fn run_genome(
    world: &World,
    genome: &Genome,
    params: AisParams,
    mode: SelectionMode,
    target: &PlatformProfile,
    reference: &PlatformProfile,
    seed: u64,
    options: EpisodeOptions,
) -> Episode {
    let sets: Vec<_> = genome.sets().iter().map(|s| s.genes).collect();
    let ais = AisState::from_genome(genome, params, mode);
    let start = world.scenario_start(seed, target.body_radius);
    run_episode(world, &sets, ais, target, reference, start, seed, options)
}
