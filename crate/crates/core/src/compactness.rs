//! Per-time-point class compactness and the weighted cost `f(C)` that
//! scores a labeling:
//!
//! ```text
//! f(C) = Σ_t Σ_n CM(c_n at t) × |c_n|
//! ```
//!
//! Every measure is oriented so that smaller means more compact.
//!
//! | measure            | value for one class at one time point                 |
//! |--------------------|-------------------------------------------------------|
//! | `StdDev`           | mean over attributes of the population SD             |
//! | `CentroidDistance` | mean Euclidean distance of members to their centroid  |
//! | `DunnInverse`      | `1 / (Dunn + 1e-9)` of the whole partition            |
//! | `DaviesBouldin`    | Davies–Bouldin index of the whole partition           |
//! | `SilhouetteNeg`    | `1 − mean silhouette` of the whole partition          |
//!
//! Partition indices use the usual definitions:
//!
//! * Dunn = min single-linkage distance between two clusters / max cluster
//!   diameter (largest intra-cluster pairwise distance).
//! * Davies–Bouldin = mean over clusters `i` of `max_{j≠i} (σ_i + σ_j) / d(m_i, m_j)`,
//!   `σ` being the mean member-to-centroid distance and `m` the centroid.
//! * Silhouette of a point = `(b − a) / max(a, b)` with `a` the mean distance
//!   to its own cluster and `b` the smallest mean distance to another
//!   cluster; members of singleton clusters score 0.
//!
//! A partition index is charged to each non-empty class at that time point.
//! Fewer than two non-empty classes make the index 0. Empty classes cost 0,
//! and singletons have zero spread under the intra-class measures.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, TemporalDataset};
use crate::labeling::Labeling;
use crate::stats;

/// Guard added to the Dunn index before inverting it.
pub const DUNN_EPSILON: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CostError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("labeling does not cover object `{0}`")]
    IncompleteLabeling(String),
    #[error("labeling contains object `{0}` absent from the dataset")]
    UnknownObject(String),
    #[error("no compactness attributes given")]
    NoAttributes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompactnessMeasure {
    StdDev,
    CentroidDistance,
    DunnInverse,
    DaviesBouldin,
    SilhouetteNeg,
}

impl CompactnessMeasure {
    pub const ALL: [Self; 5] = [
        Self::StdDev,
        Self::CentroidDistance,
        Self::DunnInverse,
        Self::DaviesBouldin,
        Self::SilhouetteNeg,
    ];

    /// Accepts the command-line names `stddev|centroid|dunn|db|silhouette`.
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "stddev" => Self::StdDev,
            "centroid" => Self::CentroidDistance,
            "dunn" => Self::DunnInverse,
            "db" => Self::DaviesBouldin,
            "silhouette" => Self::SilhouetteNeg,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::StdDev => "stddev",
            Self::CentroidDistance => "centroid",
            Self::DunnInverse => "dunn",
            Self::DaviesBouldin => "db",
            Self::SilhouetteNeg => "silhouette",
        }
    }

    /// Whether the measure scores the whole partition rather than one class.
    pub fn is_relational(self) -> bool {
        matches!(
            self,
            Self::DunnInverse | Self::DaviesBouldin | Self::SilhouetteNeg
        )
    }
}

/// When to min-max normalize compactness attributes before measuring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Normalization {
    /// Normalize only when more than one attribute is measured.
    #[default]
    Auto,
    Always,
    Never,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTerm {
    pub t: i64,
    pub class: String,
    pub cm: f64,
    pub size: usize,
    pub term: f64,
}

/// `f(C)` with its per-(time point, class) decomposition, ordered by time
/// point then class declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub total: f64,
    pub terms: Vec<CostTerm>,
}

// ---- geometry on flat row-major point buffers ----

#[inline]
fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn all_rows_equal(flat: &[f64], dim: usize) -> bool {
    let first = &flat[..dim];
    flat.chunks_exact(dim).all(|r| r == first)
}

fn centroid(flat: &[f64], dim: usize) -> Vec<f64> {
    let n = flat.len() / dim;
    let mut c = vec![0.0; dim];
    for row in flat.chunks_exact(dim) {
        for (ci, x) in c.iter_mut().zip(row) {
            *ci += x;
        }
    }
    c.iter_mut().for_each(|v| *v /= n as f64);
    c
}

fn intra_stddev(flat: &[f64], dim: usize, column: &mut Vec<f64>) -> f64 {
    let n = flat.len() / dim;
    if n < 2 {
        return 0.0;
    }
    if dim == 1 {
        return stats::population_sd(flat);
    }
    let mut acc = 0.0;
    for a in 0..dim {
        column.clear();
        column.extend(flat.iter().skip(a).step_by(dim));
        acc += stats::population_sd(column);
    }
    acc / dim as f64
}

fn mean_centroid_distance(flat: &[f64], dim: usize) -> f64 {
    let n = flat.len() / dim;
    if n < 2 || all_rows_equal(flat, dim) {
        return 0.0;
    }
    let c = centroid(flat, dim);
    flat.chunks_exact(dim).map(|r| dist(r, &c)).sum::<f64>() / n as f64
}

fn dunn_inverse(clusters: &[&[f64]], dim: usize) -> f64 {
    let mut max_diam = 0.0f64;
    for c in clusters {
        let rows: Vec<&[f64]> = c.chunks_exact(dim).collect();
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                max_diam = max_diam.max(dist(rows[i], rows[j]));
            }
        }
    }
    let mut min_gap = f64::INFINITY;
    for (i, a) in clusters.iter().enumerate() {
        for b in &clusters[i + 1..] {
            for ra in a.chunks_exact(dim) {
                for rb in b.chunks_exact(dim) {
                    min_gap = min_gap.min(dist(ra, rb));
                }
            }
        }
    }
    let dunn = if max_diam > 0.0 {
        min_gap / max_diam
    } else if min_gap > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    1.0 / (dunn + DUNN_EPSILON)
}

fn davies_bouldin(clusters: &[&[f64]], dim: usize) -> f64 {
    let centroids: Vec<Vec<f64>> = clusters.iter().map(|c| centroid(c, dim)).collect();
    let spread: Vec<f64> = clusters
        .iter()
        .map(|c| mean_centroid_distance(c, dim))
        .collect();
    let k = clusters.len();
    let mut acc = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j {
                continue;
            }
            let s = spread[i] + spread[j];
            let d = dist(&centroids[i], &centroids[j]);
            // coincident centroids: the spread alone decides
            let r = if s == 0.0 {
                0.0
            } else {
                s / d.max(DUNN_EPSILON)
            };
            worst = worst.max(r);
        }
        acc += worst;
    }
    acc / k as f64
}

fn silhouette_neg(clusters: &[&[f64]], dim: usize) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for (ci, c) in clusters.iter().enumerate() {
        let n_own = c.len() / dim;
        for p in c.chunks_exact(dim) {
            count += 1;
            if n_own < 2 {
                continue;
            }
            let a = c.chunks_exact(dim).map(|q| dist(p, q)).sum::<f64>() / (n_own - 1) as f64;
            let b = clusters
                .iter()
                .enumerate()
                .filter(|&(cj, _)| cj != ci)
                .map(|(_, o)| {
                    o.chunks_exact(dim).map(|q| dist(p, q)).sum::<f64>() / (o.len() / dim) as f64
                })
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                total += (b - a) / m;
            }
        }
    }
    1.0 - total / count as f64
}

fn partition_index(measure: CompactnessMeasure, clusters: &[&[f64]], dim: usize) -> f64 {
    if clusters.len() < 2 {
        return 0.0;
    }
    match measure {
        CompactnessMeasure::DunnInverse => dunn_inverse(clusters, dim),
        CompactnessMeasure::DaviesBouldin => davies_bouldin(clusters, dim),
        CompactnessMeasure::SilhouetteNeg => silhouette_neg(clusters, dim),
        _ => unreachable!("intra-class measure"),
    }
}

fn flatten(points: &[Vec<f64>]) -> (Vec<f64>, usize) {
    let dim = points.first().map_or(1, Vec::len).max(1);
    (points.iter().flatten().copied().collect(), dim)
}

/// Compactness of one class at one time point. `context` holds every
/// class's points at that time point and is consulted only by the
/// relational measures.
pub fn class_compactness(
    points: &[Vec<f64>],
    measure: CompactnessMeasure,
    context: &[Vec<Vec<f64>>],
) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let (flat, dim) = flatten(points);
    match measure {
        CompactnessMeasure::StdDev => intra_stddev(&flat, dim, &mut Vec::new()),
        CompactnessMeasure::CentroidDistance => mean_centroid_distance(&flat, dim),
        _ => {
            let flats: Vec<Vec<f64>> = context
                .iter()
                .filter(|c| !c.is_empty())
                .map(|c| flatten(c).0)
                .collect();
            let refs: Vec<&[f64]> = flats.iter().map(Vec::as_slice).collect();
            partition_index(measure, &refs, dim)
        }
    }
}

/// Reusable per-worker buffers for [`CostEvaluator`].
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    members: Vec<Vec<usize>>,
    gathered: Vec<Vec<f64>>,
    column: Vec<f64>,
}

/// Cost function bound to one dataset, attribute selection and measure.
/// Building it once lets many labelings be scored without re-reading the
/// panel.
#[derive(Debug, Clone)]
pub struct CostEvaluator {
    measure: CompactnessMeasure,
    dim: usize,
    n_objects: usize,
    time_points: Vec<i64>,
    object_ids: Vec<String>,
    // points[t]: row-major n_objects × dim
    points: Vec<Vec<f64>>,
}

impl CostEvaluator {
    pub fn new(
        data: &TemporalDataset,
        attrs: &[&str],
        measure: CompactnessMeasure,
        normalization: Normalization,
    ) -> Result<Self, CostError> {
        if attrs.is_empty() {
            return Err(CostError::NoAttributes);
        }
        let normalize = match normalization {
            Normalization::Auto => attrs.len() > 1,
            Normalization::Always => true,
            Normalization::Never => false,
        };
        let source = if normalize {
            crate::data::normalize_minmax(data, attrs)?
        } else {
            data.clone()
        };
        let idx = attrs
            .iter()
            .map(|a| source.attribute_index(a))
            .collect::<Result<Vec<_>, _>>()?;
        let points = (0..source.n_times())
            .map(|t| {
                let mut row = Vec::with_capacity(source.n_objects() * idx.len());
                for o in 0..source.n_objects() {
                    row.extend(idx.iter().map(|&a| source.value(o, t, a)));
                }
                row
            })
            .collect();
        Ok(Self {
            measure,
            dim: idx.len(),
            n_objects: source.n_objects(),
            time_points: source.time_points().to_vec(),
            object_ids: source.object_ids().to_vec(),
            points,
        })
    }

    pub fn measure(&self) -> CompactnessMeasure {
        self.measure
    }

    pub fn object_ids(&self) -> &[String] {
        &self.object_ids
    }

    /// Visits every `(time index, class index, cm, size)` in (t, n) order.
    fn for_each_term(
        &self,
        assignment: &[usize],
        n_classes: usize,
        scratch: &mut Scratch,
        mut visit: impl FnMut(usize, usize, f64, usize),
    ) {
        debug_assert_eq!(assignment.len(), self.n_objects);
        let dim = self.dim;
        scratch.members.resize_with(n_classes, Vec::new);
        scratch.gathered.resize_with(n_classes, Vec::new);
        scratch.members.iter_mut().for_each(Vec::clear);
        for (o, &c) in assignment.iter().enumerate() {
            scratch.members[c].push(o);
        }
        for (t, pts) in self.points.iter().enumerate() {
            for (n, members) in scratch.members[..n_classes].iter().enumerate() {
                let buf = &mut scratch.gathered[n];
                buf.clear();
                for &o in members {
                    buf.extend_from_slice(&pts[o * dim..(o + 1) * dim]);
                }
            }
            let relational = if self.measure.is_relational() {
                let refs: Vec<&[f64]> = scratch.gathered[..n_classes]
                    .iter()
                    .filter(|g| !g.is_empty())
                    .map(Vec::as_slice)
                    .collect();
                partition_index(self.measure, &refs, dim)
            } else {
                0.0
            };
            for n in 0..n_classes {
                let size = scratch.members[n].len();
                let cm = if size == 0 {
                    0.0
                } else {
                    match self.measure {
                        CompactnessMeasure::StdDev => {
                            intra_stddev(&scratch.gathered[n], dim, &mut scratch.column)
                        }
                        CompactnessMeasure::CentroidDistance => {
                            mean_centroid_distance(&scratch.gathered[n], dim)
                        }
                        _ => relational,
                    }
                };
                visit(t, n, cm, size);
            }
        }
    }

    /// `f(C)` for class indices aligned with the dataset's objects.
    pub fn total(&self, assignment: &[usize], n_classes: usize, scratch: &mut Scratch) -> f64 {
        let mut total = 0.0;
        self.for_each_term(assignment, n_classes, scratch, |_, _, cm, size| {
            total += cm * size as f64;
        });
        total
    }

    /// Full decomposition; `total` is bit-identical to [`Self::total`].
    pub fn report(&self, assignment: &[usize], classes: &[String]) -> CostReport {
        let mut terms = Vec::with_capacity(self.points.len() * classes.len());
        let mut total = 0.0;
        self.for_each_term(
            assignment,
            classes.len(),
            &mut Scratch::default(),
            |t, n, cm, size| {
                let term = cm * size as f64;
                total += term;
                terms.push(CostTerm {
                    t: self.time_points[t],
                    class: classes[n].clone(),
                    cm,
                    size,
                    term,
                });
            },
        );
        CostReport { total, terms }
    }

    /// Class indices of `labeling`, aligned with this evaluator's objects.
    pub fn align(&self, labeling: &Labeling) -> Result<Vec<usize>, CostError> {
        let by_id = labeling.index_by_object();
        let known: HashSet<&str> = self.object_ids.iter().map(String::as_str).collect();
        if let Some(extra) = labeling
            .object_ids()
            .iter()
            .find(|o| !known.contains(o.as_str()))
        {
            return Err(CostError::UnknownObject(extra.clone()));
        }
        self.object_ids
            .iter()
            .map(|o| {
                by_id
                    .get(o.as_str())
                    .copied()
                    .ok_or_else(|| CostError::IncompleteLabeling(o.clone()))
            })
            .collect()
    }
}

/// `f(C)` of a labeling, normalizing attributes when more than one is used.
pub fn cost(
    data: &TemporalDataset,
    labeling: &Labeling,
    measure: CompactnessMeasure,
    attrs: &[&str],
) -> Result<CostReport, CostError> {
    cost_with(data, labeling, measure, attrs, Normalization::Auto)
}

pub fn cost_with(
    data: &TemporalDataset,
    labeling: &Labeling,
    measure: CompactnessMeasure,
    attrs: &[&str],
    normalization: Normalization,
) -> Result<CostReport, CostError> {
    let eval = CostEvaluator::new(data, attrs, measure, normalization)?;
    let assignment = eval.align(labeling)?;
    Ok(eval.report(&assignment, labeling.classes()))
}
