//! Selection of the minimum-cost candidate classifier.
//!
//! [`brute_force`] scores every candidate of the grid. Among candidates
//! with exactly equal cost the one enumerated first (the lexicographically
//! smallest grid-index vector) wins, which is what a serial loop with a
//! strict `<` would return. Work is split into contiguous rank ranges and
//! merged with a `(cost, rank)` minimum, so the answer does not depend on
//! the number of workers.
//!
//! [`differential_evolution`] is the DE/rand/1/bin heuristic over the
//! continuous parameter box; every trial vector is snapped to the grid
//! before it is scored, so it searches the same finite set as brute force.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compactness::{
    CompactnessMeasure, CostError, CostEvaluator, CostReport, Normalization, Scratch,
};
use crate::data::{aggregate, AggregatedView, DataError, TemporalDataset};
use crate::labeling::Labeling;
use crate::rules::{
    check_grid, CandidateClassifier, CompiledRules, RuleError, RuleTemplate, DEFAULT_GRID_CAP,
};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("invalid differential evolution parameters: {0}")]
    InvalidDeParams(String),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Worker threads; results are identical for every value ≥ 1.
    pub workers: usize,
    pub grid_cap: u64,
    pub normalization: Normalization,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            workers: 1,
            grid_cap: DEFAULT_GRID_CAP,
            normalization: Normalization::Auto,
        }
    }
}

/// Differential evolution settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeParams {
    pub population_size: usize,
    pub generations: usize,
    /// Differential weight `F`.
    pub differential_weight: f64,
    /// Crossover rate `CR`.
    pub crossover_rate: f64,
    pub seed: u64,
}

impl Default for DeParams {
    fn default() -> Self {
        Self {
            population_size: 20,
            generations: 50,
            differential_weight: 0.8,
            crossover_rate: 0.9,
            seed: 42,
        }
    }
}

impl DeParams {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let bad = |m: &str| Err(OptimizeError::InvalidDeParams(m.into()));
        if self.population_size < 4 {
            return bad("population_size must be at least 4");
        }
        if self.generations < 1 {
            return bad("generations must be at least 1");
        }
        if !(self.differential_weight > 0.0 && self.differential_weight <= 2.0) {
            return bad("differential_weight must lie in (0, 2]");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad("crossover_rate must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Winning candidate with its cost decomposition and labeling.
#[derive(Debug, Clone)]
pub struct BestResult<'t> {
    pub candidate: CandidateClassifier<'t>,
    pub cost: CostReport,
    pub labeling: Labeling,
    /// Number of cost evaluations performed.
    pub evaluated: u64,
    /// Number of distinct evaluated candidates sharing the minimal cost.
    pub ties: u64,
    pub measure: CompactnessMeasure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub step: f64,
    pub best: f64,
}

/// JSON shape of a [`BestResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResultDoc {
    pub bindings: IndexMap<String, f64>,
    pub cost_total: f64,
    pub ties: u64,
    pub evaluated: u64,
    pub measure: String,
    pub params: Vec<ParamSummary>,
    pub labels: IndexMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostReport>,
}

impl BestResult<'_> {
    pub fn to_doc(&self, include_cost: bool) -> BestResultDoc {
        let template = self.candidate.template();
        BestResultDoc {
            bindings: self.candidate.bindings(),
            cost_total: self.cost.total,
            ties: self.ties,
            evaluated: self.evaluated,
            measure: self.measure.name().to_string(),
            params: template
                .params
                .iter()
                .zip(self.candidate.values())
                .map(|(p, &best)| ParamSummary {
                    name: p.name.clone(),
                    lower: p.lower,
                    upper: p.upper,
                    step: p.step,
                    best,
                })
                .collect(),
            labels: self
                .labeling
                .iter()
                .map(|(o, c)| (o.to_string(), c.to_string()))
                .collect(),
            cost: include_cost.then(|| self.cost.clone()),
        }
    }
}

/// Aggregated view, compiled rules and cost evaluator for one run.
struct Problem<'v> {
    rules: CompiledRules<'v>,
    eval: CostEvaluator,
    n_classes: usize,
    n_objects: usize,
}

impl Problem<'_> {
    fn score(&self, values: &[f64], assignment: &mut [usize], scratch: &mut Scratch) -> f64 {
        self.rules.assign(values, assignment);
        let c = self.eval.total(assignment, self.n_classes, scratch);
        // NaN never wins
        if c.is_nan() {
            f64::INFINITY
        } else {
            c
        }
    }
}

fn prepare_view(
    template: &RuleTemplate,
    data: &TemporalDataset,
) -> Result<AggregatedView, OptimizeError> {
    Ok(aggregate(data, &template.aggregates)?)
}

fn prepare<'v>(
    template: &RuleTemplate,
    data: &TemporalDataset,
    view: &'v AggregatedView,
    measure: CompactnessMeasure,
    config: &OptimizerConfig,
) -> Result<Problem<'v>, OptimizeError> {
    let attrs: Vec<&str> = template
        .compactness_attributes
        .iter()
        .map(String::as_str)
        .collect();
    Ok(Problem {
        rules: template.compile(view)?,
        eval: CostEvaluator::new(data, &attrs, measure, config.normalization)?,
        n_classes: template.classes.len(),
        n_objects: data.n_objects(),
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, OptimizeError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| OptimizeError::Pool(e.to_string()))
}

fn finish<'t>(
    template: &'t RuleTemplate,
    problem: &Problem<'_>,
    view: &AggregatedView,
    candidate: CandidateClassifier<'t>,
    evaluated: u64,
    ties: u64,
) -> BestResult<'t> {
    let mut assignment = vec![0; problem.n_objects];
    problem.rules.assign(candidate.values(), &mut assignment);
    let cost = problem.eval.report(&assignment, &template.classes);
    let labeling = Labeling::new(
        view.object_ids().to_vec(),
        template.classes.clone(),
        assignment,
    )
    .expect("view object ids are unique");
    BestResult {
        candidate,
        cost,
        labeling,
        evaluated,
        ties,
        measure: problem.eval.measure(),
    }
}

/// Running minimum with its first rank and tie count.
#[derive(Debug, Clone, Copy)]
struct Best {
    cost: f64,
    rank: u64,
    ties: u64,
}

impl Best {
    const NONE: Best = Best {
        cost: f64::INFINITY,
        rank: u64::MAX,
        ties: 0,
    };

    fn offer(&mut self, cost: f64, rank: u64) {
        *self = self.merge(Best {
            cost,
            rank,
            ties: 1,
        });
    }

    fn merge(self, other: Best) -> Best {
        if other.ties == 0 {
            return self;
        }
        if self.ties == 0 {
            return other;
        }
        if self.cost < other.cost {
            self
        } else if other.cost < self.cost {
            other
        } else {
            Best {
                cost: self.cost,
                rank: self.rank.min(other.rank),
                ties: self.ties + other.ties,
            }
        }
    }
}

const CHUNK: u64 = 2048;

fn advance(idx: &mut [usize], dims: &[usize]) {
    for (slot, &d) in idx.iter_mut().zip(dims).rev() {
        *slot += 1;
        if *slot < d {
            return;
        }
        *slot = 0;
    }
}

/// Exhaustive search with the default configuration.
pub fn brute_force<'t>(
    template: &'t RuleTemplate,
    data: &TemporalDataset,
    measure: CompactnessMeasure,
) -> Result<BestResult<'t>, OptimizeError> {
    brute_force_with(template, data, measure, &OptimizerConfig::default())
}

pub fn brute_force_with<'t>(
    template: &'t RuleTemplate,
    data: &TemporalDataset,
    measure: CompactnessMeasure,
    config: &OptimizerConfig,
) -> Result<BestResult<'t>, OptimizeError> {
    let size = check_grid(template, config.grid_cap)?;
    let view = prepare_view(template, data)?;
    let problem = prepare(template, data, &view, measure, config)?;
    let dims = template.grid_dims();
    let n_chunks = size.div_ceil(CHUNK);

    let scan = |chunk: u64, assignment: &mut Vec<usize>, scratch: &mut Scratch| {
        let start = chunk * CHUNK;
        let end = (start + CHUNK).min(size);
        let mut idx = template.candidate_at(start).grid_indices().to_vec();
        let mut values = vec![0.0; idx.len()];
        let mut best = Best::NONE;
        for rank in start..end {
            for ((v, p), &k) in values.iter_mut().zip(&template.params).zip(&idx) {
                *v = p.grid_value(k);
            }
            best.offer(problem.score(&values, assignment, scratch), rank);
            advance(&mut idx, &dims);
        }
        best
    };

    let best = pool(config.workers)?.install(|| {
        (0..n_chunks)
            .into_par_iter()
            .map_init(
                || (vec![0usize; problem.n_objects], Scratch::default()),
                |(assignment, scratch), chunk| scan(chunk, assignment, scratch),
            )
            .reduce(|| Best::NONE, Best::merge)
    });

    let candidate = template.candidate_at(best.rank);
    Ok(finish(
        template, &problem, &view, candidate, size, best.ties,
    ))
}

/// Grid-snapped DE/rand/1/bin with the default worker configuration.
pub fn differential_evolution<'t>(
    template: &'t RuleTemplate,
    data: &TemporalDataset,
    measure: CompactnessMeasure,
    params: &DeParams,
) -> Result<BestResult<'t>, OptimizeError> {
    differential_evolution_with(template, data, measure, params, &OptimizerConfig::default())
}

/// Runs `population_size × generations` cost evaluations: the initial
/// population counts as the first generation. Trial vectors are drawn
/// serially from the seeded stream and scored in parallel, so the outcome
/// depends only on the seed.
pub fn differential_evolution_with<'t>(
    template: &'t RuleTemplate,
    data: &TemporalDataset,
    measure: CompactnessMeasure,
    params: &DeParams,
    config: &OptimizerConfig,
) -> Result<BestResult<'t>, OptimizeError> {
    params.validate()?;
    let view = prepare_view(template, data)?;
    let problem = prepare(template, data, &view, measure, config)?;
    let ranges = &template.params;
    let dim = ranges.len();
    let np = params.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let workers = pool(config.workers)?;

    let snap =
        |x: &[f64]| -> Vec<usize> { ranges.iter().zip(x).map(|(p, &v)| p.snap(v)).collect() };
    let evaluate = |batch: &[Vec<f64>]| -> Vec<(f64, u64)> {
        workers.install(|| {
            batch
                .par_iter()
                .map_init(
                    || (vec![0usize; problem.n_objects], Scratch::default()),
                    |(assignment, scratch), x| {
                        let cand = template
                            .candidate(snap(x))
                            .expect("snapped indices lie on the grid");
                        (
                            problem.score(cand.values(), assignment, scratch),
                            cand.rank(),
                        )
                    },
                )
                .collect()
        })
    };

    let mut best = Best::NONE;
    let mut tied: BTreeSet<u64> = BTreeSet::new();
    let mut record = |scored: &[(f64, u64)]| {
        for &(c, r) in scored {
            if c < best.cost {
                tied.clear();
            }
            if c <= best.cost {
                tied.insert(r);
            }
            best.offer(c, r);
        }
    };

    let mut population: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            ranges
                .iter()
                .map(|p| p.lower + rng.random::<f64>() * (p.upper - p.lower))
                .collect()
        })
        .collect();
    let mut fitness: Vec<f64> = {
        let scored = evaluate(&population);
        record(&scored);
        scored.iter().map(|s| s.0).collect()
    };
    let mut evaluated = np as u64;

    for _ in 1..params.generations {
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let mut pick = || loop {
                    let r = rng.random_range(0..np);
                    if r != i {
                        break r;
                    }
                };
                let r1 = pick();
                let r2 = loop {
                    let r = pick();
                    if r != r1 {
                        break r;
                    }
                };
                let r3 = loop {
                    let r = pick();
                    if r != r1 && r != r2 {
                        break r;
                    }
                };
                let forced = if dim > 0 { rng.random_range(0..dim) } else { 0 };
                (0..dim)
                    .map(|d| {
                        let cross = rng.random::<f64>() < params.crossover_rate || d == forced;
                        if cross {
                            let p = &ranges[d];
                            let v = population[r1][d]
                                + params.differential_weight
                                    * (population[r2][d] - population[r3][d]);
                            v.clamp(p.lower, p.upper)
                        } else {
                            population[i][d]
                        }
                    })
                    .collect()
            })
            .collect();
        let scored = evaluate(&trials);
        record(&scored);
        evaluated += np as u64;
        for (i, (trial, (c, _))) in trials.into_iter().zip(scored).enumerate() {
            if c <= fitness[i] {
                population[i] = trial;
                fitness[i] = c;
            }
        }
    }

    let candidate = template.candidate_at(best.rank);
    Ok(finish(
        template,
        &problem,
        &view,
        candidate,
        evaluated,
        tied.len() as u64,
    ))
}
