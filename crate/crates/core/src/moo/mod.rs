//! Multi-objective machinery. Both objectives are maximised throughout.

mod dominance;
mod genome;
mod hypervolume;
mod nsga2;
mod operators;

pub use dominance::{
    crowding_distance, dominates, extract_pareto, fast_non_dominated_sort, ObjectivePoint, Provenance,
};
pub use genome::{decode_and_repair, evaluate_schedule, GenomeLayout};
pub use hypervolume::{hypervolume_2d, reference_point};
pub use nsga2::{environmental_selection, nsga2_run, Individual, NsgaConfig, NsgaOutcome};
pub use operators::{polynomial_mutation, sbx_crossover};
