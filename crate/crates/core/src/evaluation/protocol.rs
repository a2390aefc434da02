//! Repeated stratified hold-out comparison of labelings.
//!
//! For every labeling and split, a KNN probe trained on 75% of the objects
//! predicts the rest and the prediction is scored with the Hand and Till
//! AUC. A labeling that is easier to recover from a feature set gets a
//! higher mean AUC on it. Each object contributes one pooled feature vector
//! holding all its time points.

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::agreement::render_grid;
use super::auc::hand_till_indexed;
use super::derived::DerivedAttributes;
use super::knn::{knn_indexed, row_index, FeatureTable};
use super::EvalError;
use crate::data::TemporalDataset;
use crate::labeling::Labeling;
use crate::stats::{mean, round_half_up};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// Belief and contribution per round.
    BeliefContribution,
    /// Contribution, belief and others per round plus the contribution table.
    Original,
    /// Derived values per round plus four per-object summaries.
    Derived,
    /// Only the four per-object summaries.
    DerivedSummary,
    /// `Original` followed by `Derived`.
    OriginalDerived,
}

impl FeatureSet {
    pub const ALL: [Self; 5] = [
        Self::BeliefContribution,
        Self::Original,
        Self::Derived,
        Self::DerivedSummary,
        Self::OriginalDerived,
    ];
    /// The four sets of the standard comparison table.
    pub const STANDARD: [Self; 4] = [
        Self::BeliefContribution,
        Self::Original,
        Self::Derived,
        Self::OriginalDerived,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::BeliefContribution => "belief_contribution",
            Self::Original => "original",
            Self::Derived => "derived",
            Self::DerivedSummary => "derived_summary",
            Self::OriginalDerived => "original_derived",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Self::BeliefContribution => "Belief & Contrib",
            Self::Original => "Original",
            Self::Derived => "Derived",
            Self::DerivedSummary => "Derived (summary)",
            Self::OriginalDerived => "Original & Derived",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    fn needs_tables(self) -> bool {
        self != Self::BeliefContribution
    }
}

fn per_round(
    data: &TemporalDataset,
    attrs: &[&str],
    names: &mut Vec<String>,
    rows: &mut [Vec<f64>],
) -> Result<(), EvalError> {
    let idx = attrs
        .iter()
        .map(|a| {
            data.attribute_index(a)
                .map_err(|_| EvalError::MissingColumn(a.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (t, time) in data.time_points().iter().enumerate() {
        for (a, &ai) in attrs.iter().zip(&idx) {
            names.push(format!("{a}_t{time}"));
            for (o, row) in rows.iter_mut().enumerate() {
                row.push(data.value(o, t, ai));
            }
        }
    }
    Ok(())
}

fn summaries(
    data: &TemporalDataset,
    derived: &DerivedAttributes,
    names: &mut Vec<String>,
    rows: &mut [Vec<f64>],
) -> Result<(), EvalError> {
    let gi = data
        .attribute_index("contribution")
        .map_err(|_| EvalError::MissingColumn("contribution".into()))?;
    let bi = data
        .attribute_index("belief")
        .map_err(|_| EvalError::MissingColumn("belief".into()))?;
    names.extend(
        [
            "initial_deviation_mean",
            "prediction_accuracy_sd",
            "contribution_mean",
            "belief_mean",
        ]
        .map(String::from),
    );
    for (o, row) in rows.iter_mut().enumerate() {
        row.push(derived.initial_deviation_mean[o]);
        row.push(derived.prediction_accuracy_sd[o]);
        row.push(mean(&data.series(o, gi)));
        row.push(mean(&data.series(o, bi)));
    }
    Ok(())
}

/// Assembles one feature set. Every set except `belief_contribution` needs
/// the contribution tables and the derived attributes of the same panel.
pub fn build_features(
    data: &TemporalDataset,
    tables: Option<&IndexMap<String, Vec<f64>>>,
    derived: Option<&DerivedAttributes>,
    set: FeatureSet,
) -> Result<FeatureTable, EvalError> {
    let ids = data.object_ids().to_vec();
    let mut names = Vec::new();
    let mut rows = vec![Vec::new(); ids.len()];
    if set == FeatureSet::BeliefContribution {
        per_round(data, &["belief", "contribution"], &mut names, &mut rows)?;
        return FeatureTable::new(set.name(), ids, names, rows);
    }
    let (Some(tables), Some(derived)) = (tables, derived) else {
        debug_assert!(set.needs_tables());
        return Err(EvalError::NeedsTables(set.name().into()));
    };
    if derived.object_ids != ids || derived.time_points != data.time_points() {
        return Err(EvalError::FeatureMismatch(
            "derived attributes belong to another panel".into(),
        ));
    }
    if matches!(set, FeatureSet::Original | FeatureSet::OriginalDerived) {
        per_round(
            data,
            &["contribution", "belief", "others"],
            &mut names,
            &mut rows,
        )?;
        let width = tables.values().map(Vec::len).max().unwrap_or(0);
        names.extend((0..width).map(|h| format!("h{h}")));
        for (id, row) in ids.iter().zip(rows.iter_mut()) {
            let table = tables
                .get(id)
                .ok_or_else(|| EvalError::MissingTable(id.clone()))?;
            if table.len() != width {
                return Err(EvalError::FeatureMismatch(format!(
                    "table of `{id}` has {} entries",
                    table.len()
                )));
            }
            row.extend_from_slice(table);
        }
    }
    if matches!(set, FeatureSet::Derived | FeatureSet::OriginalDerived) {
        for (t, time) in data.time_points().iter().enumerate() {
            names.extend(
                ["payoff", "initial_deviation", "prediction_accuracy"]
                    .map(|a| format!("{a}_t{time}")),
            );
            for (o, row) in rows.iter_mut().enumerate() {
                row.push(derived.payoff[o][t]);
                row.push(derived.initial_deviation[o][t]);
                row.push(derived.prediction_accuracy[o][t]);
            }
        }
    }
    if matches!(
        set,
        FeatureSet::Derived | FeatureSet::DerivedSummary | FeatureSet::OriginalDerived
    ) {
        summaries(data, derived, &mut names, &mut rows)?;
    }
    FeatureTable::new(set.name(), ids, names, rows)
}

fn default_test_fraction() -> f64 {
    0.25
}
fn default_repeats() -> usize {
    10
}
fn default_k() -> usize {
    5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            test_fraction: default_test_fraction(),
            repeats: default_repeats(),
            k: default_k(),
            seed: 0,
        }
    }
}

impl Protocol {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(EvalError::BadProtocol(
                "test fraction must lie in (0, 1)".into(),
            ));
        }
        if self.repeats == 0 {
            return Err(EvalError::BadProtocol("repeats must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(EvalError::BadProtocol("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Splits positions into (train, test), stratified by class. Every class
/// with at least two members keeps at least one member on each side;
/// singletons stay in training.
pub(crate) fn stratified_split(
    assignment: &[usize],
    n_classes: usize,
    test_fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members = vec![Vec::new(); n_classes];
    for (i, &c) in assignment.iter().enumerate() {
        members[c].push(i);
    }
    let mut is_test = vec![false; assignment.len()];
    for m in &mut members {
        let n = m.len();
        if n < 2 {
            continue;
        }
        m.shuffle(&mut rng);
        let n_test = (round_half_up(n as f64 * test_fraction) as usize).clamp(1, n - 1);
        for &i in &m[..n_test] {
            is_test[i] = true;
        }
    }
    (0..assignment.len()).partition(|&i| !is_test[i])
}

/// Mean AUC per (feature set, labeling), shaped like a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    pub feature_sets: Vec<String>,
    pub labelings: Vec<String>,
    /// `[feature set][labeling]`
    pub mean_auc: Vec<Vec<f64>>,
    /// `[feature set][labeling][split]`
    pub split_auc: Vec<Vec<Vec<f64>>>,
    pub protocol: Protocol,
}

impl AucReport {
    pub fn get(&self, feature_set: &str, labeling: &str) -> Option<f64> {
        let i = self.feature_sets.iter().position(|f| f == feature_set)?;
        let j = self.labelings.iter().position(|l| l == labeling)?;
        Some(self.mean_auc[i][j])
    }

    pub fn render_text(&self) -> String {
        let mut header = vec!["Attributes".to_string()];
        header.extend(self.labelings.iter().cloned());
        let mut rows = vec![header];
        for (i, name) in self.feature_sets.iter().enumerate() {
            let title =
                FeatureSet::parse(name).map_or_else(|| name.clone(), |s| s.title().to_string());
            let mut row = vec![title];
            row.extend(self.mean_auc[i].iter().map(|v| format!("{v:.3}")));
            rows.push(row);
        }
        render_grid(&rows)
    }
}

/// Runs the hold-out protocol for every feature table and labeling. Split
/// `r` of a labeling uses seed `protocol.seed + r`, so all feature sets see
/// the same splits and the result does not depend on scheduling.
pub fn compare_labelings(
    features: &[FeatureTable],
    labelings: &[(String, Labeling)],
    protocol: &Protocol,
) -> Result<AucReport, EvalError> {
    protocol.validate()?;
    let mut aligned = Vec::with_capacity(labelings.len());
    for (name, lab) in labelings {
        let mut rows_per_table = Vec::with_capacity(features.len());
        for table in features {
            let index = row_index(table);
            if index.len() != lab.len() {
                return Err(EvalError::ObjectSetMismatch(format!(
                    "labeling `{name}` has {} objects, features `{}` have {}",
                    lab.len(),
                    table.name,
                    index.len()
                )));
            }
            let rows = lab
                .object_ids()
                .iter()
                .map(|o| {
                    index.get(o.as_str()).copied().ok_or_else(|| {
                        EvalError::ObjectSetMismatch(format!(
                            "`{o}` of labeling `{name}` has no features"
                        ))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows_per_table.push(rows);
        }
        aligned.push(rows_per_table);
    }

    let jobs: Vec<(usize, usize)> = (0..labelings.len())
        .flat_map(|l| (0..protocol.repeats).map(move |r| (l, r)))
        .collect();
    let results: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(l, r)| {
            let lab = &labelings[l].1;
            let n_classes = lab.classes().len();
            let (train, test) = stratified_split(
                lab.assignment(),
                n_classes,
                protocol.test_fraction,
                protocol.seed.wrapping_add(r as u64),
            );
            let train_labels: Vec<usize> = train.iter().map(|&i| lab.assignment()[i]).collect();
            let test_labels: Vec<usize> = test.iter().map(|&i| lab.assignment()[i]).collect();
            features
                .iter()
                .enumerate()
                .map(|(f, table)| {
                    let rows = &aligned[l][f];
                    let tr = table.subset(&train.iter().map(|&i| rows[i]).collect::<Vec<_>>());
                    let te = table.subset(&test.iter().map(|&i| rows[i]).collect::<Vec<_>>());
                    let scores = knn_indexed(&tr, &train_labels, n_classes, &te, protocol.k)?;
                    hand_till_indexed(&scores, &test_labels, n_classes)
                })
                .collect::<Result<Vec<f64>, EvalError>>()
        })
        .collect::<Result<_, _>>()?;

    let mut split_auc =
        vec![vec![Vec::with_capacity(protocol.repeats); labelings.len()]; features.len()];
    for (&(l, _), per_feature) in jobs.iter().zip(&results) {
        for (f, &auc) in per_feature.iter().enumerate() {
            split_auc[f][l].push(auc);
        }
    }
    let mean_auc = split_auc
        .iter()
        .map(|per_lab| per_lab.iter().map(|s| mean(s)).collect())
        .collect();
    Ok(AucReport {
        feature_sets: features.iter().map(|f| f.name.clone()).collect(),
        labelings: labelings.iter().map(|l| l.0.clone()).collect(),
        mean_auc,
        split_auc,
        protocol: *protocol,
    })
}
