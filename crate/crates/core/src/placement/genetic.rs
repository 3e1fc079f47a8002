//! Genetic search for a balanced-risk placement.
//!
//! A placement is encoded as its assignment vector (one gene per share).
//! Each generation breeds `offspring` children from uniformly chosen parent
//! pairs: with probability `crossover` a child takes every gene from either
//! parent at random, otherwise it copies the first parent; then one gene is
//! moved to a different server. The `population` best children form the
//! next generation. The best placement seen so far is kept throughout.

use std::cmp::Ordering;

use rand::Rng;

use super::{balance_by_risk, sorted_by_risk, spread, uniform_placement, Placement};
use crate::metrics::{attack_curve_dp, satisfies, PrecisionModel, PrivacyRequirement, TrustRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneticConfig {
    pub population: usize,
    pub offspring: usize,
    pub generations: usize,
    pub crossover: f64,
    /// Stop as soon as the best placement meets the requirement.
    pub early_exit: bool,
}

impl Default for GeneticConfig {
    fn default() -> Self {
        GeneticConfig { population: 10, offspring: 40, generations: 200, crossover: 0.5, early_exit: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneticRun {
    pub placement: Placement,
    pub objective: f64,
    /// Generations actually bred.
    pub generations: usize,
    pub satisfied: bool,
}

#[derive(Debug, Clone)]
struct Candidate {
    genes: Vec<usize>,
    spread: f64,
    max_load: f64,
}

impl Candidate {
    fn new(genes: Vec<usize>, risks: &[f64], model: &PrecisionModel) -> Self {
        let (spread, max_load) = spread(&genes, risks, model);
        Candidate { genes, spread, max_load }
    }

    fn fitness_cmp(&self, other: &Self) -> Ordering {
        self.spread
            .total_cmp(&other.spread)
            .then(self.max_load.total_cmp(&other.max_load))
            .then_with(|| self.genes.cmp(&other.genes))
    }
}

/// Genetic placement of `n` shares on `servers` with the default
/// configuration.
pub fn place_optimized<R: Rng + ?Sized>(
    n: usize,
    servers: &[TrustRecord],
    req: &PrivacyRequirement,
    model: &PrecisionModel,
    rng: &mut R,
) -> Placement {
    place_optimized_with(&GeneticConfig::default(), n, servers, req, model, rng).placement
}

pub fn place_optimized_with<R: Rng + ?Sized>(
    config: &GeneticConfig,
    n: usize,
    servers: &[TrustRecord],
    req: &PrivacyRequirement,
    model: &PrecisionModel,
    rng: &mut R,
) -> GeneticRun {
    assert!(!servers.is_empty(), "genetic placement needs at least one server");
    assert_eq!(model.n(), n, "precision model must cover every share");
    let servers = sorted_by_risk(servers);
    let m = servers.len();
    let risks: Vec<f64> = servers.iter().map(|s| s.risk).collect();

    let uniform = uniform_placement(n, &servers).assignment;
    let mut population: Vec<Candidate> = std::iter::once(uniform)
        .chain((1..config.population).map(|_| (0..n).map(|_| rng.random_range(0..m)).collect()))
        .map(|g| Candidate::new(g, &risks, model))
        .collect();
    population.sort_by(Candidate::fitness_cmp);

    let meets = |genes: &[usize]| {
        let placement = Placement { servers: servers.clone(), assignment: genes.to_vec() };
        attack_curve_dp(&placement, model).is_ok_and(|c| satisfies(&c, req))
    };

    let mut best = population[0].clone();
    let mut best_meets = config.early_exit && meets(&best.genes);
    let mut generations = 0;
    while generations < config.generations && !best_meets && m > 1 && n > 0 {
        let mut children = Vec::with_capacity(config.offspring);
        for _ in 0..config.offspring {
            let a = &population[rng.random_range(0..population.len())];
            let b = &population[rng.random_range(0..population.len())];
            let mut genes = if rng.random_bool(config.crossover) {
                a.genes
                    .iter()
                    .zip(&b.genes)
                    .map(|(&x, &y)| if rng.random_bool(0.5) { x } else { y })
                    .collect()
            } else {
                a.genes.clone()
            };
            mutate(&mut genes, m, rng);
            children.push(Candidate::new(genes, &risks, model));
        }
        children.sort_by(Candidate::fitness_cmp);
        children.truncate(config.population);
        population = children;
        generations += 1;

        if population[0].fitness_cmp(&best) == Ordering::Less {
            best = population[0].clone();
            best_meets = config.early_exit && meets(&best.genes);
        }
    }

    let balanced = balance_by_risk(&best.genes, m, model);
    let best = Candidate::new(balanced, &risks, model);
    let satisfied = meets(&best.genes);
    GeneticRun {
        objective: best.spread,
        placement: Placement { servers, assignment: best.genes },
        generations,
        satisfied,
    }
}

/// Moves one random share to a different server.
fn mutate<R: Rng + ?Sized>(genes: &mut [usize], m: usize, rng: &mut R) {
    if genes.is_empty() || m < 2 {
        return;
    }
    let j = rng.random_range(0..genes.len());
    let other = rng.random_range(0..m - 1);
    genes[j] = if other >= genes[j] { other + 1 } else { other };
}
