//! Comparing two labelings of the same objects.
//!
//! * [`agreement`]: cross-tabulated agreement percentages
//! * [`auc`]: rank AUC and the Hand and Till multiclass average
//! * [`knn`]: nearest-neighbour probe classifier
//! * [`derived`]: attributes derived from a game panel
//! * [`protocol`]: repeated stratified hold-out comparison

pub mod agreement;
pub mod auc;
pub mod derived;
pub mod knn;
pub mod protocol;

use thiserror::Error;

use crate::data::DataError;

pub use agreement::{agreement_matrix, matched_agreement, AgreementMatrix, MatchedAgreement};
pub use auc::{hand_till_auc, pairwise_auc};
pub use derived::{derive_attributes, DerivedAttributes};
pub use knn::{knn_probe, FeatureTable, ProbeScores};
pub use protocol::{build_features, compare_labelings, AucReport, FeatureSet, Protocol};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("labelings cover different objects ({0})")]
    ObjectSetMismatch(String),
    #[error("degenerate class: {0}")]
    DegenerateClass(String),
    #[error("training set is empty")]
    EmptyTrain,
    #[error("k = {k} is invalid for {train} training objects")]
    BadK { k: usize, train: usize },
    #[error("object `{object}` at time {time}: table index {index} out of range")]
    TableIndexOutOfRange {
        object: String,
        time: i64,
        index: f64,
    },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("no contribution table for object `{0}`")]
    MissingTable(String),
    #[error("object `{object}` at time {time}: {column} = {value} outside [0, {endowment}]")]
    ValueOutOfRange {
        object: String,
        time: i64,
        column: &'static str,
        value: f64,
        endowment: f64,
    },
    #[error("feature set `{0}` needs contribution tables")]
    NeedsTables(String),
    #[error("feature tables disagree: {0}")]
    FeatureMismatch(String),
    #[error("invalid protocol: {0}")]
    BadProtocol(String),
    #[error(transparent)]
    Data(#[from] DataError),
}
