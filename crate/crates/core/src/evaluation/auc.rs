//! Rank AUC and its multiclass average.

use std::collections::HashMap;

use super::knn::ProbeScores;
use super::EvalError;
use crate::labeling::Labeling;

/// Mann–Whitney AUC: the probability that a random positive outscores a
/// random negative, counting ties as one half. Computed from doubled
/// midranks in integers, so all-tied scores give exactly 0.5.
pub fn pairwise_auc(scores: &[f64], positive: &[bool]) -> Result<f64, EvalError> {
    assert_eq!(scores.len(), positive.len(), "one flag per score");
    let n_pos = positive.iter().filter(|&&p| p).count() as u128;
    let n_neg = scores.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::DegenerateClass(if n_pos == 0 {
            "no positive objects".into()
        } else {
            "no negative objects".into()
        }));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum2: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // doubled midrank of 1-based ranks start+1..=end
        let mid2 = (start + 1 + end) as u128;
        let pos_in_block = order[start..end].iter().filter(|&&i| positive[i]).count() as u128;
        rank_sum2 += mid2 * pos_in_block;
        start = end;
    }
    let u2 = rank_sum2 - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg) as f64)
}

/// Multiclass AUC over the classes present in `truth`: every unordered
/// pair `{i, j}` contributes the mean of `A(i|j)` and `A(j|i)`, computed on
/// the members of `i` and `j` only, and the pair values are averaged.
pub(crate) fn hand_till_indexed(
    scores: &[Vec<f64>],
    truth: &[usize],
    n_classes: usize,
) -> Result<f64, EvalError> {
    let mut members = vec![Vec::new(); n_classes];
    for (o, &c) in truth.iter().enumerate() {
        members[c].push(o);
    }
    let present: Vec<usize> = (0..n_classes).filter(|&c| !members[c].is_empty()).collect();
    let c = present.len();
    if c < 2 {
        return Err(EvalError::DegenerateClass(format!(
            "need at least 2 classes, truth has {c}"
        )));
    }
    let mut sum = 0.0;
    for (a, &i) in present.iter().enumerate() {
        for &j in &present[a + 1..] {
            let objs: Vec<usize> = members[i].iter().chain(&members[j]).copied().collect();
            let is_i: Vec<bool> = objs.iter().map(|&o| truth[o] == i).collect();
            let is_j: Vec<bool> = is_i.iter().map(|b| !b).collect();
            let s_i: Vec<f64> = objs.iter().map(|&o| scores[o][i]).collect();
            let s_j: Vec<f64> = objs.iter().map(|&o| scores[o][j]).collect();
            sum += (pairwise_auc(&s_i, &is_i)? + pairwise_auc(&s_j, &is_j)?) / 2.0;
        }
    }
    Ok(sum * 2.0 / (c * (c - 1)) as f64)
}

/// Hand and Till AUC of probe scores against true labels. Score columns are
/// matched to truth classes by name and rows to objects by id.
pub fn hand_till_auc(scores: &ProbeScores, truth: &Labeling) -> Result<f64, EvalError> {
    let row_of: HashMap<&str, usize> = scores
        .object_ids
        .iter()
        .enumerate()
        .map(|(i, o)| (o.as_str(), i))
        .collect();
    if row_of.len() != truth.len() {
        return Err(EvalError::ObjectSetMismatch(format!(
            "{} scored objects vs {} labeled",
            row_of.len(),
            truth.len()
        )));
    }
    let col_of: HashMap<&str, usize> = scores
        .classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let sizes = truth.class_sizes();
    let mut columns = Vec::with_capacity(truth.classes().len());
    for (k, class) in truth.classes().iter().enumerate() {
        match col_of.get(class.as_str()) {
            Some(&col) => columns.push(col),
            None if sizes[k] == 0 => columns.push(usize::MAX),
            None => {
                return Err(EvalError::DegenerateClass(format!(
                    "no scores for class `{class}`"
                )))
            }
        }
    }
    let mut rows = Vec::with_capacity(truth.len());
    for o in truth.object_ids() {
        let r = *row_of
            .get(o.as_str())
            .ok_or_else(|| EvalError::ObjectSetMismatch(format!("`{o}` has no scores")))?;
        rows.push(
            columns
                .iter()
                .map(|&col| {
                    if col == usize::MAX {
                        0.0
                    } else {
                        scores.scores[r][col]
                    }
                })
                .collect(),
        );
    }
    hand_till_indexed(&rows, truth.assignment(), truth.classes().len())
}
