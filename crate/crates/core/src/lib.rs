//! Optimized rule-based classification of temporal panel data.
//!
//! Experts write rule templates whose thresholds are ranges. The optimizer
//! picks one value per range so that the resulting classes are as compact
//! as possible at every time point of the panel. The crate also contains a
//! public-goods-game simulator that plants ground-truth player types, and
//! an evaluation harness (agreement matrices, KNN probe, multiclass AUC)
//! for comparing labelings.
//!
//! Module map:
//!
//! * [`data`]: panel loading, aggregation, normalization
//! * [`rules`]: rule templates, candidate grid, classification
//! * [`compactness`]: compactness measures and the cost `f(C)`
//! * [`optimizer`]: exhaustive search and differential evolution
//! * [`evaluation`]: labeling comparison
//! * [`sim`]: public goods game simulator

pub mod compactness;
pub mod data;
pub mod evaluation;
pub mod labeling;
pub mod optimizer;
pub mod rules;
pub mod sim;
pub mod stats;

pub use compactness::{cost, CompactnessMeasure, CostReport, Normalization};
pub use data::{
    aggregate, load_temporal_csv, normalize_minmax, AggregateKind, AggregateSpec, AggregatedView,
    TemporalDataset,
};
pub use labeling::Labeling;
pub use optimizer::{brute_force, differential_evolution, BestResult, DeParams, OptimizerConfig};
pub use rules::{
    classify, enumerate_candidates, parse_rule_spec, CandidateClassifier, RuleTemplate,
};
