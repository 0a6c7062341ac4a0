//! Short-term learning: idiotypic network arbitration between evolved
//! behaviour sets.
//!
//! Each gene set is an antibody family. The paratope matrix `P` (sets × antigens)
//! holds reinforcement strengths seeded from the genome's scores and each set's
//! relative fitness. The idiotope matrix `I` marks, per antigen column, the set
//! with the weakest paratope entry and never changes. In idiotypic mode those
//! links let the provisional winner stimulate and suppress the other sets
//! before the final choice; greedy mode takes the argmax of `P` alone.

mod behaviour;
mod episode;

pub use behaviour::{execute_behaviour, WheelSpeeds};
pub use episode::{run_episode, run_genome, Episode, EpisodeOptions, RewardStats, TraceRow};

use crate::genome::Genome;
use crate::ltl_evolve::population_fitness;
use crate::perception::Antigen;
use crate::ANTIGEN_COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionMode {
    Idiotypic,
    Greedy,
}

impl SelectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMode::Idiotypic => "idiotypic",
            SelectionMode::Greedy => "greedy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "idiotypic" => Some(SelectionMode::Idiotypic),
            "greedy" => Some(SelectionMode::Greedy),
            _ => None,
        }
    }
}

/// Network constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AisParams {
    /// Collision weighting in the relative fitness of each set.
    pub rho: f64,
    /// Stimulation coefficient.
    pub k_stim: f64,
    /// Suppression coefficient.
    pub k_supp: f64,
    pub c_init: f64,
    pub c_min: f64,
    pub c_max: f64,
    /// Step size of the paratope update.
    pub learning_rate: f64,
    /// Concentration added to the selected set each tick.
    pub c_gain: f64,
    /// Per-tick multiplicative decay of every concentration.
    pub c_decay: f64,
}

impl Default for AisParams {
    fn default() -> Self {
        Self {
            rho: 8.0,
            k_stim: 0.25,
            k_supp: 0.25,
            c_init: 1.0,
            c_min: 0.1,
            c_max: 10.0,
            learning_rate: 0.05,
            c_gain: 0.05,
            c_decay: 0.99,
        }
    }
}

/// Paratope row of one gene set.
pub type Row = [f64; ANTIGEN_COUNT];

/// Per column, the set holding the minimum paratope entry (ties to the lowest index).
pub fn idiotope_owners(paratope: &[Row]) -> [usize; ANTIGEN_COUNT] {
    let mut owners = [0; ANTIGEN_COUNT];
    for (j, owner) in owners.iter_mut().enumerate() {
        for (i, row) in paratope.iter().enumerate() {
            if row[j] < paratope[*owner][j] {
                *owner = i;
            }
        }
    }
    owners
}

/// Index of the largest value; the lowest index wins ties.
fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Reward for the behaviour executed at `before` once the robot perceives `after`.
pub fn reward(before: Antigen, after: Antigen) -> f64 {
    match after {
        a if a.is_collision() => 0.0,
        a if a.is_obstacle() => 0.4,
        Antigen::TargetSeen => 1.0,
        _ if before.is_obstacle() || before.is_collision() => 0.8,
        _ => 0.5,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AisState {
    paratope: Vec<Row>,
    idiotope: [usize; ANTIGEN_COUNT],
    concentrations: Vec<f64>,
    last: Option<(usize, Antigen)>,
    mode: SelectionMode,
    params: AisParams,
}

impl AisState {
    /// Builds `P`, `I` and the concentrations from a genome.
    ///
    /// `P_ij = score_ij/100 · μ_i · n`, with `μ` the normalised inverse cost
    /// `t + ρc` of each set.
    pub fn from_genome(genome: &Genome, params: AisParams, mode: SelectionMode) -> Self {
        let evals: Vec<(f64, f64)> = genome
            .sets()
            .iter()
            .map(|s| (f64::from(s.task_time), f64::from(s.collisions)))
            .collect();
        let mu = population_fitness(&evals, params.rho).expect("a genome holds at least two sets");
        let n = genome.len() as f64;
        let paratope = genome
            .sets()
            .iter()
            .zip(&mu)
            .map(|(set, &m)| set.genes.map(|g| (f64::from(g.score) / 100.0 * m * n).clamp(0.0, 1.0)))
            .collect();
        Self::from_paratope(paratope, params, mode)
    }

    /// Builds from an explicit paratope; `I` is derived from it.
    pub fn from_paratope(paratope: Vec<Row>, params: AisParams, mode: SelectionMode) -> Self {
        assert!(!paratope.is_empty(), "paratope needs at least one row");
        let idiotope = idiotope_owners(&paratope);
        let concentrations = vec![params.c_init; paratope.len()];
        Self {
            paratope,
            idiotope,
            concentrations,
            last: None,
            mode,
            params,
        }
    }

    /// Builds from explicit `P`, idiotope owners and concentrations.
    pub fn from_parts(
        paratope: Vec<Row>,
        idiotope: [usize; ANTIGEN_COUNT],
        concentrations: Vec<f64>,
        params: AisParams,
        mode: SelectionMode,
    ) -> Self {
        assert_eq!(paratope.len(), concentrations.len());
        assert!(idiotope.iter().all(|&i| i < paratope.len()));
        Self {
            paratope,
            idiotope,
            concentrations,
            last: None,
            mode,
            params,
        }
    }

    pub fn sets(&self) -> usize {
        self.paratope.len()
    }

    pub fn paratope(&self) -> &[Row] {
        &self.paratope
    }

    /// `I_ij` as 1.0 or 0.0.
    pub fn idiotope(&self, set: usize, antigen_index: usize) -> f64 {
        if self.idiotope[antigen_index] == set {
            1.0
        } else {
            0.0
        }
    }

    pub fn idiotope_owners(&self) -> &[usize; ANTIGEN_COUNT] {
        &self.idiotope
    }

    pub fn concentrations(&self) -> &[f64] {
        &self.concentrations
    }

    pub fn mode(&self) -> SelectionMode {
        self.mode
    }

    pub fn params(&self) -> &AisParams {
        &self.params
    }

    pub fn last(&self) -> Option<(usize, Antigen)> {
        self.last
    }

    pub fn set_last(&mut self, executed: (usize, Antigen)) {
        self.last = Some(executed);
    }

    /// Chooses the gene set whose behaviour answers `antigen`.
    pub fn select(&self, antigen: Antigen) -> usize {
        let j = antigen.index();
        let column = self.paratope.iter().map(|row| row[j]);
        match self.mode {
            SelectionMode::Greedy => argmax(column),
            SelectionMode::Idiotypic => {
                let c = &self.concentrations;
                let winner = argmax(column.zip(c).map(|(p, c)| p * c));
                let p_w = &self.paratope[winner];
                argmax(self.paratope.iter().enumerate().map(|(i, row)| {
                    let (mut stim, mut supp) = (0.0, 0.0);
                    for (k, &owner) in self.idiotope.iter().enumerate() {
                        if owner == winner {
                            stim += row[k];
                        }
                        if owner == i {
                            supp += p_w[k];
                        }
                    }
                    c[i] * (row[j] + self.params.k_stim * stim - self.params.k_supp * supp)
                }))
            }
        }
    }

    /// Scores the behaviour executed as `executed` now that `outcome` is perceived
    /// and nudges its paratope entry. Returns the reward.
    pub fn reinforce(&mut self, executed: (usize, Antigen), outcome: Antigen) -> f64 {
        let (i, antigen) = executed;
        let r = reward(antigen, outcome);
        let entry = &mut self.paratope[i][antigen.index()];
        *entry = (*entry + self.params.learning_rate * (r - 0.5)).clamp(0.0, 1.0);
        r
    }

    pub fn update_concentrations(&mut self, selected: usize) {
        let p = self.params;
        self.concentrations[selected] += p.c_gain;
        for c in &mut self.concentrations {
            *c = (*c * p.c_decay).clamp(p.c_min, p.c_max);
        }
    }
}
