use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dominance::{crowding_distance, fast_non_dominated_sort};
use super::operators::{polynomial_mutation, sbx_crossover};
use crate::error::{invalid, Result};
use crate::sim::seeded_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NsgaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub crossover_eta: f64,
    /// Per-gene mutation probability; `None` means `1 / genome length`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation_prob: Option<f64>,
    pub mutation_eta: f64,
    pub tournament_size: usize,
    pub seed: u64,
}

impl Default for NsgaConfig {
    fn default() -> Self {
        Self {
            population: 120,
            generations: 150,
            crossover_prob: 0.9,
            crossover_eta: 15.0,
            mutation_prob: None,
            mutation_eta: 20.0,
            tournament_size: 2,
            seed: 1,
        }
    }
}

impl NsgaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 || self.population % 2 != 0 {
            return Err(invalid("nsga.population", "must be even and >= 4"));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return Err(invalid("nsga.crossover_prob", "must lie in [0, 1]"));
        }
        if let Some(p) = self.mutation_prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid("nsga.mutation_prob", "must lie in [0, 1]"));
            }
        }
        if !(self.crossover_eta >= 0.0 && self.mutation_eta >= 0.0) {
            return Err(invalid("nsga.eta", "distribution indices must be >= 0"));
        }
        if self.tournament_size == 0 {
            return Err(invalid("nsga.tournament_size", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Vec<f64>,
    pub objectives: [f64; 2],
    pub rank: usize,
    pub crowding: f64,
}

#[derive(Debug, Clone)]
pub struct NsgaOutcome {
    pub population: Vec<Individual>,
    /// Rank-0 members of the final population.
    pub front: Vec<Individual>,
    /// Objectives of the first front after initialisation and after every generation.
    pub front_history: Vec<Vec<[f64; 2]>>,
}

/// Survivor selection for NSGA-II: whole fronts by rank, the last partial front by
/// descending crowding distance (ties broken by index). Returns the chosen indices
/// together with their rank and crowding distance.
pub fn environmental_selection(objectives: &[[f64; 2]], keep: usize) -> Vec<(usize, usize, f64)> {
    let mut chosen = Vec::with_capacity(keep);
    for (rank, front) in fast_non_dominated_sort(objectives).into_iter().enumerate() {
        if chosen.len() >= keep {
            break;
        }
        let crowd = crowding_distance(objectives, &front);
        let mut members: Vec<(usize, usize, f64)> = front.iter().zip(&crowd).map(|(&i, &c)| (i, rank, c)).collect();
        if chosen.len() + members.len() > keep {
            members.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
            members.truncate(keep - chosen.len());
        }
        chosen.extend(members);
    }
    chosen
}

fn better(a: &Individual, b: &Individual) -> bool {
    a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding)
}

fn tournament<'a, R: Rng + ?Sized>(pop: &'a [Individual], size: usize, rng: &mut R) -> &'a Individual {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..size {
        let challenger = &pop[rng.random_range(0..pop.len())];
        if better(challenger, best) {
            best = challenger;
        }
    }
    best
}

fn evaluate_all<E>(genomes: Vec<Vec<f64>>, evaluator: &E) -> Result<Vec<Individual>>
where
    E: Fn(&[f64]) -> Result<[f64; 2]> + Sync,
{
    genomes
        .into_par_iter()
        .map(|genome| {
            let objectives = evaluator(&genome)?;
            Ok(Individual {
                genome,
                objectives,
                rank: 0,
                crowding: 0.0,
            })
        })
        .collect()
}

fn select(mut combined: Vec<Individual>, keep: usize) -> Vec<Individual> {
    let objs: Vec<[f64; 2]> = combined.iter().map(|i| i.objectives).collect();
    let chosen = environmental_selection(&objs, keep);
    let mut slots: Vec<Option<Individual>> = combined.drain(..).map(Some).collect();
    chosen
        .into_iter()
        .map(|(i, rank, crowding)| {
            let mut ind = slots[i].take().expect("selected once");
            ind.rank = rank;
            ind.crowding = crowding;
            ind
        })
        .collect()
}

fn first_front(pop: &[Individual]) -> Vec<[f64; 2]> {
    pop.iter().filter(|i| i.rank == 0).map(|i| i.objectives).collect()
}

/// Elitist NSGA-II over genomes in `[0, 1]^genome_len`.
///
/// Evaluations run on the current rayon pool; everything that touches the random
/// generator is sequential, so results do not depend on the number of workers.
pub fn nsga2_run<E>(
    config: &NsgaConfig,
    genome_len: usize,
    evaluator: E,
    mut on_generation: impl FnMut(usize, &[Individual]),
) -> Result<NsgaOutcome>
where
    E: Fn(&[f64]) -> Result<[f64; 2]> + Sync,
{
    config.validate()?;
    let mut rng = seeded_rng(config.seed, 0);
    let mutation_prob = config.mutation_prob.unwrap_or(1.0 / genome_len.max(1) as f64);

    let initial: Vec<Vec<f64>> = (0..config.population)
        .map(|_| (0..genome_len).map(|_| rng.random::<f64>()).collect())
        .collect();
    let mut population = select(evaluate_all(initial, &evaluator)?, config.population);
    let mut front_history = vec![first_front(&population)];
    on_generation(0, &population);

    for generation in 1..=config.generations {
        let mut children = Vec::with_capacity(config.population);
        while children.len() < config.population {
            let a = tournament(&population, config.tournament_size, &mut rng);
            let b = tournament(&population, config.tournament_size, &mut rng);
            let (c1, c2) = sbx_crossover(
                &a.genome,
                &b.genome,
                config.crossover_eta,
                config.crossover_prob,
                &mut rng,
            );
            children.push(polynomial_mutation(&c1, config.mutation_eta, mutation_prob, &mut rng));
            children.push(polynomial_mutation(&c2, config.mutation_eta, mutation_prob, &mut rng));
        }
        let mut combined = population;
        combined.extend(evaluate_all(children, &evaluator)?);
        population = select(combined, config.population);
        front_history.push(first_front(&population));
        on_generation(generation, &population);
    }

    let front = population.iter().filter(|i| i.rank == 0).cloned().collect();
    Ok(NsgaOutcome {
        population,
        front,
        front_history,
    })
}
