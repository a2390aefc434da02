//! Agreement between two labelings of the same objects.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::labeling::Labeling;

/// Row-normalized cross tabulation. Row `i` gives, for the members of
/// labeling A's class `i`, the percentage landing in each class of B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    pub row_classes: Vec<String>,
    pub col_classes: Vec<String>,
    pub counts: Vec<Vec<usize>>,
    /// Unrounded percentages.
    pub cells: Vec<Vec<f64>>,
    /// Rows whose A class has no members; their cells are all zero.
    pub empty_rows: Vec<bool>,
}

fn check_same_objects(a: &Labeling, b: &Labeling) -> Result<Vec<usize>, EvalError> {
    let b_index = b.index_by_object();
    if a.len() != b.len() {
        return Err(EvalError::ObjectSetMismatch(format!(
            "{} objects vs {}",
            a.len(),
            b.len()
        )));
    }
    a.object_ids()
        .iter()
        .map(|o| {
            b_index.get(o.as_str()).copied().ok_or_else(|| {
                EvalError::ObjectSetMismatch(format!("`{o}` only in the first labeling"))
            })
        })
        .collect()
}

pub fn agreement_matrix(a: &Labeling, b: &Labeling) -> Result<AgreementMatrix, EvalError> {
    let b_of_a = check_same_objects(a, b)?;
    let (r, c) = (a.classes().len(), b.classes().len());
    let mut counts = vec![vec![0usize; c]; r];
    for (&ra, &cb) in a.assignment().iter().zip(&b_of_a) {
        counts[ra][cb] += 1;
    }
    let mut empty_rows = vec![false; r];
    let cells = counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let n: usize = row.iter().sum();
            empty_rows[i] = n == 0;
            row.iter()
                .map(|&k| {
                    if n == 0 {
                        0.0
                    } else {
                        100.0 * k as f64 / n as f64
                    }
                })
                .collect()
        })
        .collect();
    Ok(AgreementMatrix {
        row_classes: a.classes().to_vec(),
        col_classes: b.classes().to_vec(),
        counts,
        cells,
        empty_rows,
    })
}

impl AgreementMatrix {
    /// Aligned text table with one decimal per cell; empty rows are marked
    /// with `*`.
    pub fn render_text(&self, row_title: &str, col_title: &str) -> String {
        let mut header = vec![format!("{row_title} \\ {col_title}")];
        header.extend(self.col_classes.iter().cloned());
        let mut rows = vec![header];
        for (i, name) in self.row_classes.iter().enumerate() {
            let mut row = vec![if self.empty_rows[i] {
                format!("{name} *")
            } else {
                name.clone()
            }];
            row.extend(self.cells[i].iter().map(|v| format!("{v:.1}")));
            rows.push(row);
        }
        let mut out = render_grid(&rows);
        if self.empty_rows.iter().any(|&e| e) {
            out.push_str("* class has no members\n");
        }
        out
    }
}

/// Left-aligned first column, right-aligned others.
pub fn render_grid(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|j| {
            rows.iter()
                .filter_map(|r| r.get(j))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        for (j, cell) in row.iter().enumerate() {
            if j == 0 {
                let _ = write!(out, "{cell:<w$}", w = widths[0]);
            } else {
                let _ = write!(out, "  {cell:>w$}", w = widths[j]);
            }
        }
        out.push('\n');
    }
    out
}

/// Share of objects on which two labelings agree under the best one-to-one
/// pairing of their classes. Useful when the two class vocabularies differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedAgreement {
    /// In `[0, 1]`.
    pub agreement: f64,
    pub matched: usize,
    pub total: usize,
    /// `(class of A, class of B)` pairs of the best pairing.
    pub pairs: Vec<(String, String)>,
}

/// Exhaustive over class pairings, so meant for a handful of classes.
pub fn matched_agreement(a: &Labeling, b: &Labeling) -> Result<MatchedAgreement, EvalError> {
    let m = agreement_matrix(a, b)?;
    let (r, c) = (m.row_classes.len(), m.col_classes.len());
    let transpose = r > c;
    let (small, large) = if transpose { (c, r) } else { (r, c) };
    let count = |i: usize, j: usize| {
        if transpose {
            m.counts[j][i]
        } else {
            m.counts[i][j]
        }
    };

    #[allow(clippy::too_many_arguments)]
    fn search(
        i: usize,
        small: usize,
        large: usize,
        used: &mut Vec<bool>,
        current: &mut Vec<usize>,
        score: usize,
        best: &mut (usize, Vec<usize>),
        count: &dyn Fn(usize, usize) -> usize,
    ) {
        if i == small {
            if score > best.0 || best.1.is_empty() {
                *best = (score, current.clone());
            }
            return;
        }
        for j in 0..large {
            if !used[j] {
                used[j] = true;
                current.push(j);
                search(
                    i + 1,
                    small,
                    large,
                    used,
                    current,
                    score + count(i, j),
                    best,
                    count,
                );
                current.pop();
                used[j] = false;
            }
        }
    }

    let mut best = (0, Vec::new());
    search(
        0,
        small,
        large,
        &mut vec![false; large],
        &mut Vec::new(),
        0,
        &mut best,
        &count,
    );
    let pairs = best
        .1
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let (ra, cb) = if transpose { (j, i) } else { (i, j) };
            (m.row_classes[ra].clone(), m.col_classes[cb].clone())
        })
        .collect();
    Ok(MatchedAgreement {
        agreement: best.0 as f64 / a.len() as f64,
        matched: best.0,
        total: a.len(),
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lab(pairs: &[(&str, &str)], classes: &[&str]) -> Labeling {
        Labeling::from_pairs(
            pairs.iter().copied(),
            Some(classes.iter().map(|s| s.to_string()).collect()),
        )
        .unwrap()
    }

    #[test]
    fn self_agreement_is_diagonal() {
        let a = lab(
            &[("a", "W"), ("b", "X"), ("c", "Y"), ("d", "Z")],
            &["W", "X", "Y", "Z"],
        );
        let m = agreement_matrix(&a, &a).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.cells[i][j], if i == j { 100.0 } else { 0.0 });
            }
        }
        assert_eq!(matched_agreement(&a, &a).unwrap().agreement, 1.0);
    }

    #[test]
    fn empty_row_flagged() {
        let a = lab(&[("a", "W"), ("b", "W")], &["W", "X"]);
        let b = lab(&[("a", "P"), ("b", "Q")], &["P", "Q"]);
        let m = agreement_matrix(&a, &b).unwrap();
        assert_eq!(m.empty_rows, vec![false, true]);
        assert_eq!(m.cells[1], vec![0.0, 0.0]);
        assert_eq!(m.cells[0], vec![50.0, 50.0]);
        assert!(m.render_text("A", "B").contains("X *"));
    }

    #[test]
    fn eighteen_of_thirty_two_prints_as_56_2() {
        let ids: Vec<String> = (0..32).map(|i| format!("o{i:02}")).collect();
        let a = Labeling::from_pairs(ids.iter().map(|o| (o.clone(), "FR")), None).unwrap();
        let b = Labeling::from_pairs(
            ids.iter()
                .enumerate()
                .map(|(i, o)| (o.clone(), if i < 18 { "FR" } else { "WC" })),
            None,
        )
        .unwrap();
        let m = agreement_matrix(&a, &b).unwrap();
        assert_eq!(m.cells[0][0], 56.25);
        let text = m.render_text("orig", "new");
        assert!(text.contains("56.2"), "{text}");
        assert!(text.contains("43.8"), "{text}");
    }

    #[test]
    fn rows_sum_to_hundred() {
        let pairs: Vec<(String, String)> = (0..37)
            .map(|i| (format!("o{i:02}"), ["A", "B", "C"][i % 3].to_string()))
            .collect();
        let a = Labeling::from_pairs(pairs.clone(), None).unwrap();
        let b = Labeling::from_pairs(
            pairs
                .iter()
                .enumerate()
                .map(|(i, (o, _))| (o.clone(), ["P", "Q", "R", "S"][i * 7 % 4])),
            None,
        )
        .unwrap();
        let m = agreement_matrix(&a, &b).unwrap();
        for row in &m.cells {
            assert!((row.iter().sum::<f64>() - 100.0).abs() < 1e-9);
            let rounded: f64 = row.iter().map(|v| (v * 10.0).round() / 10.0).sum();
            assert!((rounded - 100.0).abs() <= 0.1 + 1e-9);
        }
    }

    #[test]
    fn mismatched_objects() {
        let a = lab(&[("a", "W")], &["W"]);
        let b = lab(&[("b", "W")], &["W"]);
        assert!(matches!(
            agreement_matrix(&a, &b),
            Err(EvalError::ObjectSetMismatch(_))
        ));
    }

    #[test]
    fn matched_agreement_finds_renaming() {
        let a = lab(
            &[("a", "x"), ("b", "x"), ("c", "y"), ("d", "z")],
            &["x", "y", "z"],
        );
        let b = lab(
            &[("a", "2"), ("b", "2"), ("c", "1"), ("d", "1")],
            &["1", "2"],
        );
        let m = matched_agreement(&a, &b).unwrap();
        assert_eq!(m.matched, 3);
        assert!(m.pairs.contains(&("x".into(), "2".into())));
    }
}
