//! Long-term learning: a reinforcement-assisted genetic algorithm that evolves
//! one behaviour per antigen.
//!
//! `n` populations evolve in isolation; the best robot of each becomes one
//! gene set of the output genome. During evaluation every behaviour collects
//! rewards, and behaviours that keep scoring badly are swapped for fresh
//! random ones before breeding.

use std::fmt;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use thiserror::Error;

use crate::genome::{AttributeBounds, BehaviourGene, GeneSet, Genome};
use crate::platform::PlatformProfile;
use crate::seed::{self, SimRng};
use crate::simworld::{World, TIME_LIMIT_TICKS};
use crate::stl_ais::{run_episode, AisParams, AisState, EpisodeOptions, RewardStats, SelectionMode};
use crate::ANTIGEN_COUNT;

#[derive(Debug, Error, PartialEq)]
pub enum EvolveError {
    #[error("population is empty")]
    EmptyPopulation,
    #[error("task times must be positive and finite")]
    BadEvaluation,
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("world has no completion target")]
    NoTarget,
}

/// Relative fitness of each member: normalised inverse of `t + ρc`.
pub fn population_fitness(evals: &[(f64, f64)], rho: f64) -> Result<Vec<f64>, EvolveError> {
    if evals.is_empty() {
        return Err(EvolveError::EmptyPopulation);
    }
    let inv: Vec<f64> = evals
        .iter()
        .map(|&(t, c)| {
            if t > 0.0 && t.is_finite() {
                Ok(1.0 / (t + rho * c))
            } else {
                Err(EvolveError::BadEvaluation)
            }
        })
        .collect::<Result<_, _>>()?;
    let total: f64 = inv.iter().sum();
    Ok(inv.into_iter().map(|v| v / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub t: f64,
    pub c: u32,
    pub completed: bool,
}

impl Evaluation {
    pub fn cost(&self, rho: f64) -> f64 {
        self.t + rho * f64::from(self.c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genes: [BehaviourGene; ANTIGEN_COUNT],
    /// Relative fitness within its generation; zero until computed.
    pub fitness: f64,
    pub eval: Option<Evaluation>,
    pub gene_stats: [RewardStats; ANTIGEN_COUNT],
}

impl Individual {
    pub fn new(genes: [BehaviourGene; ANTIGEN_COUNT]) -> Self {
        Self {
            genes,
            fitness: 0.0,
            eval: None,
            gene_stats: [RewardStats::default(); ANTIGEN_COUNT],
        }
    }

    pub fn random(bounds: &AttributeBounds, rng: &mut SimRng) -> Self {
        Self::new(std::array::from_fn(|j| BehaviourGene::random(j as u8, bounds, rng)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub populations: usize,
    pub mutation_rate: f64,
    /// Collision weighting of the fitness.
    pub rho: f64,
    pub max_generations: usize,
    /// Stop once the best cost improves by no more than 1% over this many generations.
    pub plateau_window: usize,
    /// Minimum reward samples before a behaviour may be replaced.
    pub replace_min_evals: u32,
    /// Mean reward below which a behaviour is replaced.
    pub replace_threshold: f64,
    pub bounds: AttributeBounds,
    /// Evaluation cutoff in ticks.
    pub max_ticks: u64,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population_size: 10,
            populations: 5,
            mutation_rate: 0.05,
            rho: 1.0,
            max_generations: 20,
            plateau_window: 3,
            replace_min_evals: 20,
            replace_threshold: 0.2,
            bounds: AttributeBounds::default(),
            max_ticks: TIME_LIMIT_TICKS,
            seed: 1,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolveError> {
        if self.population_size < 2 {
            return Err(EvolveError::Config("population size must be at least 2"));
        }
        if self.populations < 2 {
            return Err(EvolveError::Config("at least 2 populations are needed"));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(EvolveError::Config("mutation rate must lie in [0, 1]"));
        }
        if self.max_generations == 0 || self.max_ticks == 0 {
            return Err(EvolveError::Config("generation and tick limits must be positive"));
        }
        Ok(())
    }
}

/// Runs the individual's own eight behaviours (no network) until the task is
/// complete or time runs out, recording `(t, c)` and accumulating rewards.
pub fn evaluate(ind: &Individual, world: &World, profile: &PlatformProfile, seed: u64, max_ticks: u64) -> Individual {
    let row = ind.genes.map(|g| f64::from(g.score) / 100.0);
    let ais = AisState::from_paratope(vec![row], AisParams::default(), SelectionMode::Greedy);
    let start = world.scenario_start(seed, profile.body_radius);
    let options = EpisodeOptions {
        max_ticks,
        ..EpisodeOptions::default()
    };
    let ep = run_episode(world, &[ind.genes], ais, profile, profile, start, seed, options);
    let mut out = ind.clone();
    out.eval = Some(Evaluation {
        t: ep.t,
        c: ep.collisions,
        completed: ep.completed,
    });
    for (acc, new) in out.gene_stats.iter_mut().zip(&ep.gene_stats[0]) {
        acc.merge(new);
    }
    out
}

/// Roulette-wheel choice of two distinct parents.
pub fn select_parents<R: Rng + ?Sized>(fitness: &[f64], rng: &mut R) -> (usize, usize) {
    assert!(fitness.len() >= 2, "need two candidates");
    let first = WeightedIndex::new(fitness).expect("fitness values are positive").sample(rng);
    let mut rest = fitness.to_vec();
    rest[first] = 0.0;
    let second = match WeightedIndex::new(&rest) {
        Ok(w) => w.sample(rng),
        // Every other weight is zero: fall back to the next index.
        Err(_) => (first + 1) % fitness.len(),
    };
    (first, second)
}

fn pick<T, R: Rng + ?Sized>(rng: &mut R, x: T, y: T) -> T {
    if rng.gen_bool(0.5) {
        x
    } else {
        y
    }
}

/// Uniform crossover per attribute followed by per-attribute mutation.
pub fn breed<R: Rng + ?Sized>(a: &Individual, b: &Individual, cfg: &EvolutionConfig, rng: &mut R) -> Individual {
    let genes = std::array::from_fn(|j| {
        let (ga, gb) = (&a.genes[j], &b.genes[j]);
        let fresh = BehaviourGene::random(j as u8, &cfg.bounds, rng);
        let mut child = BehaviourGene {
            antigen_index: j as u8,
            kind: pick(rng, ga.kind, gb.kind),
            speed: pick(rng, ga.speed, gb.speed),
            turn_frequency: pick(rng, ga.turn_frequency, gb.turn_frequency),
            turn_angle: pick(rng, ga.turn_angle, gb.turn_angle),
            direction: pick(rng, ga.direction, gb.direction),
            right_turn_frequency: pick(rng, ga.right_turn_frequency, gb.right_turn_frequency),
            right_turn_angle: pick(rng, ga.right_turn_angle, gb.right_turn_angle),
            score: 50,
        };
        let mut mutate = || rng.gen_bool(cfg.mutation_rate);
        if mutate() {
            child.kind = fresh.kind;
        }
        if mutate() {
            child.speed = fresh.speed;
        }
        if mutate() {
            child.turn_frequency = fresh.turn_frequency;
        }
        if mutate() {
            child.turn_angle = fresh.turn_angle;
        }
        if mutate() {
            child.direction = fresh.direction;
        }
        if mutate() {
            child.right_turn_frequency = fresh.right_turn_frequency;
        }
        if mutate() {
            child.right_turn_angle = fresh.right_turn_angle;
        }
        child
    });
    Individual::new(genes)
}

/// Replaces behaviours with enough evidence of poor reward by random ones.
pub fn rl_replace<R: Rng + ?Sized>(ind: &Individual, cfg: &EvolutionConfig, rng: &mut R) -> Individual {
    let mut out = ind.clone();
    for (j, (gene, stats)) in out.genes.iter_mut().zip(out.gene_stats.iter_mut()).enumerate() {
        if stats.evaluations >= cfg.replace_min_evals && stats.mean_reward < cfg.replace_threshold {
            *gene = BehaviourGene::random(j as u8, &cfg.bounds, rng);
            *stats = RewardStats::default();
        }
    }
    out
}

/// Summary of one generation of one population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationLog {
    pub population: usize,
    pub generation: usize,
    pub best_t: f64,
    pub best_c: u32,
    pub best_cost: f64,
    pub mean_cost: f64,
}

impl GenerationLog {
    pub const HEADER: &'static str = "population,generation,best_t,best_c,best_cost,mean_cost";
}

impl fmt::Display for GenerationLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{:.1},{},{:.3},{:.3}",
            self.population, self.generation, self.best_t, self.best_c, self.best_cost, self.mean_cost
        )
    }
}

/// Result of evolving one isolated population.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationOutcome {
    pub best: Individual,
    pub log: Vec<GenerationLog>,
}

fn best_index(pop: &[Individual], rho: f64) -> usize {
    let mut best = 0;
    for (i, ind) in pop.iter().enumerate() {
        let cost = |k: &Individual| k.eval.expect("evaluated").cost(rho);
        if cost(ind) < cost(&pop[best]) {
            best = i;
        }
    }
    best
}

/// Evolves population `index` with its own derived seeds.
pub fn evolve_population(
    world: &World,
    profile: &PlatformProfile,
    cfg: &EvolutionConfig,
    index: usize,
) -> Result<PopulationOutcome, EvolveError> {
    cfg.validate()?;
    if world.goal.is_none() && world.block.is_none() {
        return Err(EvolveError::NoTarget);
    }
    let pop_seed = seed::derive(cfg.seed, index as u64);
    let mut init_rng = seed::rng(seed::derive(pop_seed, u64::MAX));
    let eval_seed = |generation: usize, i: usize| seed::derive_path(pop_seed, &[generation as u64, i as u64]);

    let mut pop: Vec<Individual> = (0..cfg.population_size)
        .map(|i| {
            let ind = Individual::random(&cfg.bounds, &mut init_rng);
            evaluate(&ind, world, profile, eval_seed(0, i), cfg.max_ticks)
        })
        .collect();
    let mut log = Vec::new();

    for generation in 0.. {
        let evals: Vec<(f64, f64)> = pop
            .iter()
            .map(|ind| {
                let e = ind.eval.expect("evaluated");
                (e.t, f64::from(e.c))
            })
            .collect();
        let fitness = population_fitness(&evals, cfg.rho)?;
        for (ind, &mu) in pop.iter_mut().zip(&fitness) {
            ind.fitness = mu;
        }
        let best = best_index(&pop, cfg.rho);
        let be = pop[best].eval.expect("evaluated");
        let mean_cost = evals.iter().map(|&(t, c)| t + cfg.rho * c).sum::<f64>() / evals.len() as f64;
        log.push(GenerationLog {
            population: index,
            generation,
            best_t: be.t,
            best_c: be.c,
            best_cost: be.cost(cfg.rho),
            mean_cost,
        });

        let plateaued = log.len() > cfg.plateau_window && {
            let then = log[log.len() - 1 - cfg.plateau_window].best_cost;
            be.cost(cfg.rho) > then * 0.99
        };
        if generation + 1 >= cfg.max_generations || plateaued {
            return Ok(PopulationOutcome {
                best: pop.swap_remove(best),
                log,
            });
        }

        let mut rng = seed::rng(seed::derive_path(pop_seed, &[generation as u64, u64::MAX]));
        let pool: Vec<Individual> = pop.iter().map(|ind| rl_replace(ind, cfg, &mut rng)).collect();
        let mut next = Vec::with_capacity(cfg.population_size);
        next.push(pop[best].clone());
        while next.len() < cfg.population_size {
            let (a, b) = select_parents(&fitness, &mut rng);
            let child = breed(&pool[a], &pool[b], cfg, &mut rng);
            let i = next.len();
            next.push(evaluate(&child, world, profile, eval_seed(generation + 1, i), cfg.max_ticks));
        }
        pop = next;
    }
    unreachable!("the generation loop only exits by returning")
}

/// Score saved for a behaviour: its mean reward on a 0-100 scale, 50 if never used.
pub fn final_score(stats: &RewardStats) -> u8 {
    if stats.evaluations == 0 {
        50
    } else {
        (100.0 * stats.mean_reward).round().clamp(0.0, 100.0) as u8
    }
}

/// Evolves `cfg.populations` isolated populations into a genome.
pub fn evolve(
    world: &World,
    profile: &PlatformProfile,
    cfg: &EvolutionConfig,
    mut on_generation: impl FnMut(&GenerationLog),
) -> Result<(Genome, Vec<PopulationOutcome>), EvolveError> {
    cfg.validate()?;
    let mut outcomes = Vec::with_capacity(cfg.populations);
    for k in 0..cfg.populations {
        let outcome = evolve_population(world, profile, cfg, k)?;
        outcome.log.iter().for_each(&mut on_generation);
        outcomes.push(outcome);
    }
    let sets = outcomes
        .iter()
        .map(|o| {
            let e = o.best.eval.expect("evaluated");
            let mut genes = o.best.genes;
            for (g, s) in genes.iter_mut().zip(&o.best.gene_stats) {
                g.score = final_score(s);
            }
            GeneSet {
                genes,
                task_time: (e.t.round() as u32).max(1),
                collisions: e.c,
            }
        })
        .collect();
    let genome = Genome::new(sets).expect("populations >= 2 and antigen order fixed");
    Ok((genome, outcomes))
}

/// Whether every behaviour of `genes` obeys the bounds and type table.
pub fn genes_valid(genes: &[BehaviourGene], bounds: &AttributeBounds) -> bool {
    genes.iter().all(|g| g.check_bounds(bounds).is_ok() && g.kind_allowed())
}

impl From<[BehaviourGene; ANTIGEN_COUNT]> for Individual {
    fn from(genes: [BehaviourGene; ANTIGEN_COUNT]) -> Self {
        Individual::new(genes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn fitness_fixtures() {
        let mu = population_fitness(&[(100.0, 0.0), (300.0, 0.0)], 1.0).unwrap();
        assert_abs_diff_eq!(mu[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(mu[1], 0.25, epsilon = 1e-12);
        let mu = population_fitness(&[(100.0, 0.0), (100.0, 10.0)], 1.0).unwrap();
        assert_abs_diff_eq!(mu[0], 0.52381, epsilon = 1e-5);
        assert_abs_diff_eq!(mu[1], 0.47619, epsilon = 1e-5);
        let mu = population_fitness(&[(50.0, 2.0); 7], 1.0).unwrap();
        assert!(mu.iter().all(|&m| (m - 1.0 / 7.0).abs() < 1e-15));
        let mu = population_fitness(&[(100.0, 0.0), (100.0, 0.0)], 8.0).unwrap();
        assert_eq!(mu, vec![0.5, 0.5]);
        assert_eq!(population_fitness(&[], 1.0), Err(EvolveError::EmptyPopulation));
        assert_eq!(population_fitness(&[(0.0, 1.0)], 1.0), Err(EvolveError::BadEvaluation));
    }

    proptest! {
        #[test]
        fn fitness_normalised_and_scale_free(
            evals in prop::collection::vec((0.1..1000.0f64, 0.0..50.0f64), 1..12),
            rho in 0.0..10.0f64,
            k in 0.01..100.0f64,
        ) {
            let mu = population_fitness(&evals, rho).unwrap();
            prop_assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let scaled: Vec<_> = evals.iter().map(|&(t, c)| (k * t, k * c)).collect();
            let mu2 = population_fitness(&scaled, rho).unwrap();
            for (a, b) in mu.iter().zip(&mu2) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    fn ind(seed: u64) -> Individual {
        Individual::random(&AttributeBounds::default(), &mut seed::rng(seed))
    }

    #[test]
    fn crossover_identity() {
        let cfg = EvolutionConfig { mutation_rate: 0.0, ..Default::default() };
        let a = ind(1);
        let mut rng = seed::rng(5);
        for _ in 0..50 {
            assert_eq!(breed(&a, &a, &cfg, &mut rng).genes, a.genes);
        }
    }

    #[test]
    fn full_mutation_stays_in_bounds_and_forgets_parents() {
        let cfg = EvolutionConfig { mutation_rate: 1.0, ..Default::default() };
        let (a, b) = (ind(1), ind(2));
        let mut rng = seed::rng(6);
        let mut differs = 0;
        for _ in 0..1000 {
            let child = breed(&a, &b, &cfg, &mut rng);
            assert!(genes_valid(&child.genes, &cfg.bounds));
            assert!(child.gene_stats.iter().all(|s| s.evaluations == 0));
            differs += usize::from(child.genes[0].speed != a.genes[0].speed && child.genes[0].speed != b.genes[0].speed);
        }
        assert!(differs > 900);
    }

    #[test]
    fn roulette_frequencies() {
        let mut rng = seed::rng(8);
        let draws = 10_000;
        let mut first = 0;
        for _ in 0..draws {
            let (a, b) = select_parents(&[0.75, 0.25], &mut rng);
            assert_ne!(a, b);
            first += usize::from(a == 0);
        }
        let f = first as f64 / draws as f64;
        assert!((f - 0.75).abs() <= 0.02, "{f}");
    }

    #[test]
    fn replacement_rule() {
        let cfg = EvolutionConfig::default();
        let mut x = ind(3);
        x.gene_stats[0] = RewardStats { evaluations: 25, mean_reward: 0.1 };
        x.gene_stats[1] = RewardStats { evaluations: 5, mean_reward: 0.0 };
        x.gene_stats[2] = RewardStats { evaluations: 40, mean_reward: 0.9 };
        let y = rl_replace(&x, &cfg, &mut seed::rng(4));
        assert_ne!(y.genes[0], x.genes[0]);
        assert_eq!(y.gene_stats[0].evaluations, 0);
        assert_eq!(y.genes[1..], x.genes[1..]);
        assert!(genes_valid(&y.genes, &cfg.bounds));
    }

    #[test]
    fn scores_from_rewards() {
        assert_eq!(final_score(&RewardStats::default()), 50);
        assert_eq!(final_score(&RewardStats { evaluations: 3, mean_reward: 0.734 }), 73);
        assert_eq!(final_score(&RewardStats { evaluations: 3, mean_reward: 1.0 }), 100);
    }

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig::default().validate().is_ok());
        for bad in [
            EvolutionConfig { population_size: 1, ..Default::default() },
            EvolutionConfig { populations: 1, ..Default::default() },
            EvolutionConfig { mutation_rate: 1.5, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(EvolveError::Config(_))));
        }
    }
}
