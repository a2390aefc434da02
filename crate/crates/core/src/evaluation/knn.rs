//! k-nearest-neighbour probe classifier.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::labeling::Labeling;

/// One feature vector per object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub name: String,
    pub object_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn new(
        name: impl Into<String>,
        object_ids: Vec<String>,
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, EvalError> {
        let name = name.into();
        if rows.len() != object_ids.len() {
            return Err(EvalError::FeatureMismatch(format!(
                "`{name}`: {} rows for {} objects",
                rows.len(),
                object_ids.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != feature_names.len()) {
            return Err(EvalError::FeatureMismatch(format!(
                "`{name}`: row of {} values for {} features",
                r.len(),
                feature_names.len()
            )));
        }
        Ok(Self {
            name,
            object_ids,
            feature_names,
            rows,
        })
    }

    /// Rows at the given positions, in that order.
    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            object_ids: rows.iter().map(|&i| self.object_ids[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// Class-membership scores per object; each row sums to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeScores {
    pub object_ids: Vec<String>,
    pub classes: Vec<String>,
    pub scores: Vec<Vec<f64>>,
}

/// Scores each test row by the class vote of its `k` nearest training rows.
/// Features are min-max scaled with training statistics; distance ties go to
/// the smaller object id.
pub(crate) fn knn_indexed(
    train: &FeatureTable,
    train_labels: &[usize],
    n_classes: usize,
    test: &FeatureTable,
    k: usize,
) -> Result<Vec<Vec<f64>>, EvalError> {
    if train.rows.is_empty() {
        return Err(EvalError::EmptyTrain);
    }
    if k == 0 || k > train.rows.len() {
        return Err(EvalError::BadK {
            k,
            train: train.rows.len(),
        });
    }
    let d = train.feature_names.len();
    if test.feature_names.len() != d {
        return Err(EvalError::FeatureMismatch(format!(
            "train has {d} features, test has {}",
            test.feature_names.len()
        )));
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for row in &train.rows {
        for (j, &v) in row.iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let scale = |row: &[f64]| -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                if hi[j] > lo[j] {
                    (v - lo[j]) / (hi[j] - lo[j])
                } else {
                    0.0
                }
            })
            .collect()
    };
    let train_scaled: Vec<Vec<f64>> = train.rows.iter().map(|r| scale(r)).collect();
    let mut by_id: Vec<usize> = (0..train.rows.len()).collect();
    by_id.sort_by(|&a, &b| train.object_ids[a].cmp(&train.object_ids[b]));

    let mut out = Vec::with_capacity(test.rows.len());
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(train.rows.len());
    for row in &test.rows {
        let x = scale(row);
        dist.clear();
        for (pos, &i) in by_id.iter().enumerate() {
            let d2: f64 = x
                .iter()
                .zip(&train_scaled[i])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dist.push((d2, pos));
        }
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = vec![0usize; n_classes];
        for &(_, pos) in &dist[..k] {
            votes[train_labels[by_id[pos]]] += 1;
        }
        out.push(votes.iter().map(|&v| v as f64 / k as f64).collect());
    }
    Ok(out)
}

/// Probe with training labels looked up by object id.
pub fn knn_probe(
    train: &FeatureTable,
    labels: &Labeling,
    test: &FeatureTable,
    k: usize,
) -> Result<ProbeScores, EvalError> {
    let index = labels.index_by_object();
    let train_labels = train
        .object_ids
        .iter()
        .map(|o| {
            index.get(o.as_str()).copied().ok_or_else(|| {
                EvalError::ObjectSetMismatch(format!("training object `{o}` has no label"))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let scores = knn_indexed(train, &train_labels, labels.classes().len(), test, k)?;
    Ok(ProbeScores {
        object_ids: test.object_ids.clone(),
        classes: labels.classes().to_vec(),
        scores,
    })
}

/// Id lookup for feature rows.
pub(crate) fn row_index(table: &FeatureTable) -> HashMap<&str, usize> {
    table
        .object_ids
        .iter()
        .enumerate()
        .map(|(i, o)| (o.as_str(), i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(ids: &[&str], rows: Vec<Vec<f64>>) -> FeatureTable {
        let d = rows.first().map_or(0, Vec::len);
        FeatureTable::new(
            "t",
            ids.iter().map(|s| s.to_string()).collect(),
            (0..d).map(|j| format!("f{j}")).collect(),
            rows,
        )
        .unwrap()
    }

    #[test]
    fn lone_training_point() {
        let train = table(&["a"], vec![vec![3.0]]);
        let labels =
            Labeling::from_pairs([("a", "X")], Some(vec!["W".into(), "X".into()])).unwrap();
        let test = table(&["t1", "t2"], vec![vec![-5.0], vec![40.0]]);
        let s = knn_probe(&train, &labels, &test, 1).unwrap();
        assert_eq!(s.scores, vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn exact_match_wins_with_k1() {
        let train = table(
            &["a", "b", "c"],
            vec![vec![0.0, 0.0], vec![5.0, 5.0], vec![10.0, 0.0]],
        );
        let labels = Labeling::from_pairs([("a", "P"), ("b", "Q"), ("c", "R")], None).unwrap();
        let test = table(&["t"], vec![vec![5.0, 5.0]]);
        let s = knn_probe(&train, &labels, &test, 1).unwrap();
        assert_eq!(s.scores[0], vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn hand_ranked_vote_with_tie() {
        // after scaling to [0,1]: a=0, b=0.3, c=0.7, d=1; test 0.5 is
        // 0.2 from b and c, 0.5 from a and d, so the third neighbour is the
        // tie between a and d, resolved to a
        let train = table(
            &["d", "c", "b", "a"],
            vec![vec![10.0], vec![7.0], vec![3.0], vec![0.0]],
        );
        let labels =
            Labeling::from_pairs([("a", "X"), ("b", "Y"), ("c", "X"), ("d", "Y")], None).unwrap();
        let test = table(&["t"], vec![vec![5.0]]);
        let s = knn_probe(&train, &labels, &test, 3).unwrap();
        assert_eq!(s.scores[0], vec![2.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn bad_inputs() {
        let train = table(&["a"], vec![vec![0.0]]);
        let labels = Labeling::from_pairs([("a", "X")], None).unwrap();
        let test = table(&["t"], vec![vec![0.0]]);
        assert!(matches!(
            knn_probe(&train, &labels, &test, 2),
            Err(EvalError::BadK { .. })
        ));
        assert!(matches!(
            knn_probe(&train, &labels, &test, 0),
            Err(EvalError::BadK { .. })
        ));
        let empty = FeatureTable::new("e", vec![], vec!["f0".into()], vec![]).unwrap();
        assert!(matches!(
            knn_probe(&empty, &labels, &test, 1),
            Err(EvalError::EmptyTrain)
        ));
    }
}
