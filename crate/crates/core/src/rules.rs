//! Expert rule templates with threshold ranges, the candidate grid they
//! span, and first-match classification of an [`AggregatedView`].
//!
//! A template is an ordered list of rules. Each rule assigns one class when
//! all (or any) of its conditions hold; a condition compares an aggregate
//! column against a named parameter. Parameters are closed ranges
//! discretized with a fixed step. Binding every parameter to one grid value
//! gives a [`CandidateClassifier`].
//!
//! Rule order is semantic: objects take the class of the first rule that
//! fires, and the default class when none does.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use serde::Deserialize;
use thiserror::Error;

use crate::data::{AggregateKind, AggregateSpec, AggregatedView, DataError, EQ_TOLERANCE};
use crate::labeling::Labeling;

/// Default upper bound on the number of candidates a grid may span.
pub const DEFAULT_GRID_CAP: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    SyntaxError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("rule {rule}: condition references undeclared parameter `{param}`")]
    UnknownParam { rule: usize, param: String },
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("rule {0} has no conditions")]
    EmptyRule(usize),
    #[error("parameter `{0}` declared more than once")]
    DuplicateParam(String),
    #[error("class `{0}` declared more than once")]
    DuplicateClass(String),
    #[error("aggregate `{0}` declared more than once")]
    DuplicateAggregate(String),
    #[error("parameter `{name}`: {reason}")]
    InvalidRange { name: String, reason: String },
    #[error("aggregate `{name}`: unsupported kind `{kind}`")]
    InvalidAggregate { name: String, kind: String },
    #[error("unsupported comparison operator `{0}`")]
    InvalidOperator(String),
    #[error("template: {0}")]
    InvalidTemplate(String),
    #[error("grid of {size} candidates exceeds the cap of {cap}")]
    GridOverflow { size: u128, cap: u64 },
    #[error("parameter `{0}` is not bound")]
    UnboundParam(String),
    #[error("parameter `{name}`: value {value} is not on its grid")]
    OffGrid { name: String, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    All,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CompareOp {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "<" => Self::Lt,
            "<=" => Self::Le,
            ">" => Self::Gt,
            ">=" => Self::Ge,
            "=" | "==" => Self::Eq,
            _ => return None,
        })
    }

    /// `value op threshold`. Equality uses [`EQ_TOLERANCE`].
    #[inline]
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Self::Lt => value < threshold,
            Self::Le => value <= threshold,
            Self::Gt => value > threshold,
            Self::Ge => value >= threshold,
            Self::Eq => (value - threshold).abs() <= EQ_TOLERANCE,
        }
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lt => "<",
            Self::Le => "<=",
            Self::Gt => ">",
            Self::Ge => ">=",
            Self::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub attribute: String,
    pub op: CompareOp,
    pub param: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub class: String,
    pub combine: Combine,
    pub conditions: Vec<Condition>,
}

/// Closed threshold range `[lower, upper]` discretized by `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamRange {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub step: f64,
}

impl ParamRange {
    pub fn new(
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        step: f64,
    ) -> Result<Self, RuleError> {
        let name = name.into();
        let bad = |reason: &str| RuleError::InvalidRange {
            name: name.clone(),
            reason: reason.to_string(),
        };
        if !(lower.is_finite() && upper.is_finite() && step.is_finite()) {
            return Err(bad("bounds and step must be finite"));
        }
        if step <= 0.0 {
            return Err(bad("step must be positive"));
        }
        if lower > upper {
            return Err(bad("lower exceeds upper"));
        }
        if (upper - lower) / step >= u32::MAX as f64 {
            return Err(bad("grid is too fine"));
        }
        Ok(Self {
            name,
            lower,
            upper,
            step,
        })
    }

    /// Number of grid points; the top point is the largest
    /// `lower + k*step` not above `upper`.
    pub fn grid_len(&self) -> usize {
        ((self.upper - self.lower) / self.step + 1e-9).floor() as usize + 1
    }

    #[inline]
    pub fn grid_value(&self, k: usize) -> f64 {
        self.lower + k as f64 * self.step
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.grid_len()).map(|k| self.grid_value(k)).collect()
    }

    /// Nearest grid index to `x`; exact midpoints go to the lower point.
    pub fn snap(&self, x: f64) -> usize {
        let pos = (x - self.lower) / self.step;
        if pos.is_nan() || pos <= 0.0 {
            return 0;
        }
        let floor = pos.floor();
        let k = if pos - floor > 0.5 {
            floor + 1.0
        } else {
            floor
        };
        (k as usize).min(self.grid_len() - 1)
    }
}

/// Validated expert rule template.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleTemplate {
    pub classes: Vec<String>,
    pub default_class: String,
    pub compactness_attributes: Vec<String>,
    pub aggregates: Vec<AggregateSpec>,
    pub params: Vec<ParamRange>,
    pub rules: Vec<Rule>,
}

impl RuleTemplate {
    /// Checks the template invariants and returns it unchanged.
    pub fn validated(self) -> Result<Self, RuleError> {
        if self.classes.is_empty() {
            return Err(RuleError::InvalidTemplate("no classes declared".into()));
        }
        let mut seen = HashSet::new();
        for c in &self.classes {
            if !seen.insert(c.as_str()) {
                return Err(RuleError::DuplicateClass(c.clone()));
            }
        }
        if !seen.contains(self.default_class.as_str()) {
            return Err(RuleError::UnknownClass(self.default_class.clone()));
        }
        if self.compactness_attributes.is_empty() {
            return Err(RuleError::InvalidTemplate(
                "compactness_attributes must not be empty".into(),
            ));
        }
        let mut names = HashSet::new();
        for a in &self.aggregates {
            if !names.insert(a.name.as_str()) {
                return Err(RuleError::DuplicateAggregate(a.name.clone()));
            }
        }
        let mut params = HashSet::new();
        for p in &self.params {
            if !params.insert(p.name.as_str()) {
                return Err(RuleError::DuplicateParam(p.name.clone()));
            }
        }
        for (i, rule) in self.rules.iter().enumerate() {
            if !seen.contains(rule.class.as_str()) {
                return Err(RuleError::UnknownClass(rule.class.clone()));
            }
            if rule.conditions.is_empty() {
                return Err(RuleError::EmptyRule(i));
            }
            for c in &rule.conditions {
                if !params.contains(c.param.as_str()) {
                    return Err(RuleError::UnknownParam {
                        rule: i,
                        param: c.param.clone(),
                    });
                }
            }
        }
        Ok(self)
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    /// Grid size per parameter, in declaration order.
    pub fn grid_dims(&self) -> Vec<usize> {
        self.params.iter().map(ParamRange::grid_len).collect()
    }

    /// Number of candidates `D`, the product of all grid sizes.
    pub fn grid_size(&self) -> u128 {
        self.params
            .iter()
            .fold(1u128, |acc, p| acc.saturating_mul(p.grid_len() as u128))
    }

    /// Candidate from per-parameter grid indices.
    pub fn candidate(&self, indices: Vec<usize>) -> Result<CandidateClassifier<'_>, RuleError> {
        if indices.len() != self.params.len() {
            return Err(RuleError::InvalidTemplate(format!(
                "{} grid indices for {} parameters",
                indices.len(),
                self.params.len()
            )));
        }
        for (p, &k) in self.params.iter().zip(&indices) {
            if k >= p.grid_len() {
                return Err(RuleError::OffGrid {
                    name: p.name.clone(),
                    value: p.grid_value(k),
                });
            }
        }
        Ok(CandidateClassifier::from_indices(self, indices))
    }

    /// The candidate at position `rank` of the lexicographic enumeration.
    pub fn candidate_at(&self, rank: u64) -> CandidateClassifier<'_> {
        CandidateClassifier::from_indices(self, decode_rank(&self.grid_dims(), rank))
    }

    /// Candidate from explicit parameter values; each must sit on its grid.
    pub fn candidate_from_bindings<'a, I>(
        &self,
        bindings: I,
    ) -> Result<CandidateClassifier<'_>, RuleError>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let given: HashMap<&str, f64> = bindings.into_iter().collect();
        for name in given.keys() {
            if self.param_index(name).is_none() {
                return Err(RuleError::UnknownParam {
                    rule: 0,
                    param: name.to_string(),
                });
            }
        }
        let mut indices = Vec::with_capacity(self.params.len());
        for p in &self.params {
            let v = *given
                .get(p.name.as_str())
                .ok_or_else(|| RuleError::UnboundParam(p.name.clone()))?;
            let k = p.snap(v);
            if (p.grid_value(k) - v).abs() > EQ_TOLERANCE * v.abs().max(1.0) {
                return Err(RuleError::OffGrid {
                    name: p.name.clone(),
                    value: v,
                });
            }
            indices.push(k);
        }
        Ok(CandidateClassifier::from_indices(self, indices))
    }

    /// Resolves condition columns and parameters against a view once, so a
    /// candidate can be applied without name lookups.
    pub fn compile<'v>(&self, view: &'v AggregatedView) -> Result<CompiledRules<'v>, DataError> {
        let mut columns: Vec<&'v [f64]> = Vec::new();
        let mut column_of: HashMap<&str, usize> = HashMap::new();
        let mut rules = Vec::with_capacity(self.rules.len());
        for rule in &self.rules {
            let mut conds = Vec::with_capacity(rule.conditions.len());
            for c in &rule.conditions {
                let col = match column_of.get(c.attribute.as_str()) {
                    Some(&i) => i,
                    None => {
                        columns.push(view.column(&c.attribute)?);
                        column_of.insert(c.attribute.as_str(), columns.len() - 1);
                        columns.len() - 1
                    }
                };
                let param = self
                    .param_index(&c.param)
                    .expect("validated template references declared params");
                conds.push(CompiledCondition {
                    column: col,
                    op: c.op,
                    param,
                });
            }
            rules.push(CompiledRule {
                class: self.class_index(&rule.class).expect("validated class"),
                combine: rule.combine,
                conditions: conds,
            });
        }
        Ok(CompiledRules {
            columns,
            rules,
            default_class: self
                .class_index(&self.default_class)
                .expect("validated class"),
            n_objects: view.object_ids().len(),
        })
    }
}

fn decode_rank(dims: &[usize], mut rank: u64) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for (slot, &d) in idx.iter_mut().zip(dims).rev() {
        *slot = (rank % d as u64) as usize;
        rank /= d as u64;
    }
    idx
}

#[derive(Debug, Clone, Copy)]
struct CompiledCondition {
    column: usize,
    op: CompareOp,
    param: usize,
}

#[derive(Debug, Clone)]
struct CompiledRule {
    class: usize,
    combine: Combine,
    conditions: Vec<CompiledCondition>,
}

/// A template bound to the columns of one [`AggregatedView`].
#[derive(Debug, Clone)]
pub struct CompiledRules<'v> {
    columns: Vec<&'v [f64]>,
    rules: Vec<CompiledRule>,
    default_class: usize,
    n_objects: usize,
}

impl CompiledRules<'_> {
    /// Writes the class index of every object into `out` under the given
    /// parameter values (declaration order).
    pub fn assign(&self, values: &[f64], out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.n_objects);
        for (o, slot) in out.iter_mut().enumerate() {
            *slot = self.class_of(o, values);
        }
    }

    #[inline]
    fn class_of(&self, object: usize, values: &[f64]) -> usize {
        for rule in &self.rules {
            let test =
                |c: &CompiledCondition| c.op.holds(self.columns[c.column][object], values[c.param]);
            let fired = match rule.combine {
                Combine::All => rule.conditions.iter().all(test),
                Combine::Any => rule.conditions.iter().any(test),
            };
            if fired {
                return rule.class;
            }
        }
        self.default_class
    }
}

/// A template with every parameter bound to one value of its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateClassifier<'t> {
    template: &'t RuleTemplate,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl<'t> CandidateClassifier<'t> {
    fn from_indices(template: &'t RuleTemplate, indices: Vec<usize>) -> Self {
        let values = template
            .params
            .iter()
            .zip(&indices)
            .map(|(p, &k)| p.grid_value(k))
            .collect();
        Self {
            template,
            indices,
            values,
        }
    }

    pub fn template(&self) -> &'t RuleTemplate {
        self.template
    }

    /// Grid index per parameter; lexicographic order on these equals the
    /// enumeration order.
    pub fn grid_indices(&self) -> &[usize] {
        &self.indices
    }

    /// Bound values in parameter declaration order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, param: &str) -> Option<f64> {
        self.template.param_index(param).map(|i| self.values[i])
    }

    pub fn bindings(&self) -> IndexMap<String, f64> {
        self.template
            .params
            .iter()
            .zip(&self.values)
            .map(|(p, &v)| (p.name.clone(), v))
            .collect()
    }

    /// Position of this candidate in the lexicographic enumeration.
    pub fn rank(&self) -> u64 {
        self.template
            .grid_dims()
            .iter()
            .zip(&self.indices)
            .fold(0u64, |acc, (&d, &k)| acc * d as u64 + k as u64)
    }
}

/// Lexicographic iterator over the candidate grid.
pub struct Candidates<'t> {
    template: &'t RuleTemplate,
    dims: Vec<usize>,
    next: Option<Vec<usize>>,
    remaining: u64,
}

impl<'t> Iterator for Candidates<'t> {
    type Item = CandidateClassifier<'t>;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.next.take()?;
        self.remaining -= 1;
        let mut succ = current.clone();
        // odometer: last parameter varies fastest
        let mut carried = true;
        for (slot, &d) in succ.iter_mut().zip(&self.dims).rev() {
            *slot += 1;
            if *slot < d {
                carried = false;
                break;
            }
            *slot = 0;
        }
        if !carried {
            self.next = Some(succ);
        }
        Some(CandidateClassifier::from_indices(self.template, current))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

/// Enumerates the Cartesian product of the parameter grids with the
/// default cap of [`DEFAULT_GRID_CAP`].
pub fn enumerate_candidates(template: &RuleTemplate) -> Result<Candidates<'_>, RuleError> {
    enumerate_candidates_capped(template, DEFAULT_GRID_CAP)
}

pub fn enumerate_candidates_capped(
    template: &RuleTemplate,
    cap: u64,
) -> Result<Candidates<'_>, RuleError> {
    let size = check_grid(template, cap)?;
    let dims = template.grid_dims();
    Ok(Candidates {
        template,
        next: Some(vec![0; dims.len()]),
        dims,
        remaining: size,
    })
}

/// Returns the grid size `D`, or `GridOverflow` when it exceeds `cap`.
pub fn check_grid(template: &RuleTemplate, cap: u64) -> Result<u64, RuleError> {
    let size = template.grid_size();
    if size > cap as u128 {
        return Err(RuleError::GridOverflow { size, cap });
    }
    Ok(size as u64)
}

/// Applies a candidate to every object of the view.
pub fn classify(
    view: &AggregatedView,
    candidate: &CandidateClassifier<'_>,
) -> Result<Labeling, DataError> {
    let template = candidate.template();
    let compiled = template.compile(view)?;
    let mut assignment = vec![0; view.object_ids().len()];
    compiled.assign(candidate.values(), &mut assignment);
    Ok(Labeling::new(
        view.object_ids().to_vec(),
        template.classes.clone(),
        assignment,
    )
    .expect("object ids of a view are unique and non-empty"))
}

// ---- rule-spec document ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateDoc {
    classes: Vec<String>,
    default_class: String,
    compactness_attributes: Vec<String>,
    #[serde(default)]
    aggregates: Vec<AggregateDoc>,
    params: Vec<ParamDoc>,
    rules: Vec<RuleDoc>,
    // free-form notes shipped alongside templates
    #[serde(default, rename = "notes")]
    _notes: Option<serde_json::Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AggregateDoc {
    name: String,
    source: String,
    kind: String,
    value: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamDoc {
    name: String,
    lower: f64,
    upper: f64,
    step: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    class: String,
    combine: String,
    conditions: Vec<ConditionDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConditionDoc {
    attr: String,
    op: String,
    param: String,
}

/// Parses and validates a JSON rule-spec document.
pub fn parse_rule_spec(text: &str) -> Result<RuleTemplate, RuleError> {
    let doc: TemplateDoc = serde_json::from_str(text).map_err(|e| RuleError::SyntaxError {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let aggregates = doc
        .aggregates
        .into_iter()
        .map(|a| {
            AggregateKind::parse(&a.kind, a.value)
                .map(|kind| AggregateSpec::new(a.name.clone(), a.source, kind))
                .ok_or(RuleError::InvalidAggregate {
                    name: a.name,
                    kind: a.kind,
                })
        })
        .collect::<Result<Vec<_>, _>>()?;

    // duplicates first so they are not masked by range errors
    let mut seen = BTreeMap::new();
    for p in &doc.params {
        if seen.insert(p.name.as_str(), ()).is_some() {
            return Err(RuleError::DuplicateParam(p.name.clone()));
        }
    }
    let params = doc
        .params
        .into_iter()
        .map(|p| ParamRange::new(p.name, p.lower, p.upper, p.step))
        .collect::<Result<Vec<_>, _>>()?;

    let rules = doc
        .rules
        .into_iter()
        .map(|r| {
            let combine = match r.combine.as_str() {
                "all" => Combine::All,
                "any" => Combine::Any,
                other => {
                    return Err(RuleError::InvalidTemplate(format!(
                        "combine must be \"all\" or \"any\", found \"{other}\""
                    )))
                }
            };
            let conditions = r
                .conditions
                .into_iter()
                .map(|c| {
                    let op = CompareOp::parse(&c.op)
                        .ok_or_else(|| RuleError::InvalidOperator(c.op.clone()))?;
                    Ok(Condition {
                        attribute: c.attr,
                        op,
                        param: c.param,
                    })
                })
                .collect::<Result<Vec<_>, RuleError>>()?;
            Ok(Rule {
                class: r.class,
                combine,
                conditions,
            })
        })
        .collect::<Result<Vec<_>, RuleError>>()?;

    RuleTemplate {
        classes: doc.classes,
        default_class: doc.default_class,
        compactness_attributes: doc.compactness_attributes,
        aggregates,
        params,
        rules,
    }
    .validated()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const STUDENT: &str = r#"{
        "classes": ["Excellent", "Good", "Bad"],
        "default_class": "Good",
        "compactness_attributes": ["mark"],
        "aggregates": [{"name": "mark_mean", "source": "mark", "kind": "mean"}],
        "params": [
            {"name": "p_hi", "lower": 65, "upper": 100, "step": 1},
            {"name": "p_lo", "lower": 50, "upper": 58, "step": 1}
        ],
        "rules": [
            {"class": "Excellent", "combine": "all",
             "conditions": [{"attr": "mark_mean", "op": ">=", "param": "p_hi"}]},
            {"class": "Bad", "combine": "all",
             "conditions": [{"attr": "mark_mean", "op": "<=", "param": "p_lo"}]}
        ]
    }"#;

    fn student_view(marks: &[f64]) -> AggregatedView {
        let ids = (0..marks.len()).map(|i| format!("s{i}")).collect();
        let mut cols = IndexMap::new();
        cols.insert("mark_mean".to_string(), marks.to_vec());
        AggregatedView::from_columns(ids, cols).unwrap()
    }

    #[test]
    fn parses_student_template() {
        let t = parse_rule_spec(STUDENT).unwrap();
        assert_eq!(t.rules.len(), 2);
        assert_eq!(t.params.len(), 2);
        assert_eq!(t.rules[0].class, "Excellent");
        assert_eq!(t.rules[1].conditions[0].op, CompareOp::Le);
        assert_eq!(t.grid_size(), 324);
    }

    #[test]
    fn undeclared_param_is_rejected() {
        let text = STUDENT.replace(r#""param": "p_lo""#, r#""param": "p_mid""#);
        assert!(matches!(
            parse_rule_spec(&text),
            Err(RuleError::UnknownParam { rule: 1, .. })
        ));
    }

    #[test]
    fn validation_errors() {
        let text = STUDENT.replace(r#""class": "Bad""#, r#""class": "Awful""#);
        assert!(matches!(
            parse_rule_spec(&text),
            Err(RuleError::UnknownClass(_))
        ));

        let text = STUDENT.replace(
            r#"[{"attr": "mark_mean", "op": "<=", "param": "p_lo"}]"#,
            "[]",
        );
        assert!(matches!(
            parse_rule_spec(&text),
            Err(RuleError::EmptyRule(1))
        ));

        let text = STUDENT.replace(r#""name": "p_lo""#, r#""name": "p_hi""#);
        assert!(matches!(
            parse_rule_spec(&text),
            Err(RuleError::DuplicateParam(_))
        ));

        let text = STUDENT.replace(r#""step": 1}"#, r#""step": 0}"#);
        assert!(matches!(
            parse_rule_spec(&text),
            Err(RuleError::InvalidRange { .. })
        ));

        let text = STUDENT.replace(r#""op": ">=""#, r#""op": "=>""#);
        assert!(matches!(
            parse_rule_spec(&text),
            Err(RuleError::InvalidOperator(_))
        ));

        let text = STUDENT.replace(
            r#""compactness_attributes": ["mark"]"#,
            r#""compactness_attributes": []"#,
        );
        assert!(matches!(
            parse_rule_spec(&text),
            Err(RuleError::InvalidTemplate(_))
        ));
    }

    #[test]
    fn syntax_error_carries_line() {
        let err = parse_rule_spec("{\n  \"classes\": [\n  oops\n}").unwrap_err();
        match err {
            RuleError::SyntaxError { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_endpoints_and_truncation() {
        let p = ParamRange::new("p", 0.0, 1.0, 0.3).unwrap();
        assert_eq!(p.grid_len(), 4);
        assert!((p.grid()[3] - 0.9).abs() < 1e-12);
        let p = ParamRange::new("p", 0.0, 1.0, 0.25).unwrap();
        assert_eq!(p.grid(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let p = ParamRange::new("p", 3.0, 3.0, 1.0).unwrap();
        assert_eq!(p.grid(), vec![3.0]);
        // 0.1 steps accumulate error; the endpoint must still be included
        let p = ParamRange::new("p", 0.0, 0.3, 0.1).unwrap();
        assert_eq!(p.grid_len(), 4);
    }

    #[test]
    fn snapping_rounds_to_nearest_ties_low() {
        let p = ParamRange::new("p", 2.0, 6.0, 1.0).unwrap();
        assert_eq!(p.snap(2.4), 0);
        assert_eq!(p.snap(2.5), 0);
        assert_eq!(p.snap(2.51), 1);
        assert_eq!(p.snap(-10.0), 0);
        assert_eq!(p.snap(99.0), 4);
    }

    #[test]
    fn enumeration_counts() {
        let t = parse_rule_spec(STUDENT).unwrap();
        let all: Vec<_> = enumerate_candidates(&t).unwrap().collect();
        assert_eq!(all.len(), 324);
        assert_eq!(all[0].values(), &[65.0, 50.0]);
        assert_eq!(all[1].values(), &[65.0, 51.0]);
        assert_eq!(all[9].values(), &[66.0, 50.0]);
        assert_eq!(all[323].values(), &[100.0, 58.0]);
        for (i, c) in all.iter().enumerate() {
            assert_eq!(c.rank(), i as u64);
            assert_eq!(t.candidate_at(i as u64), *c);
        }

        let mut t2 = t.clone();
        t2.params[0] = ParamRange::new("p_hi", 1.0, 3.0, 1.0).unwrap();
        t2.params[1] = ParamRange::new("p_lo", 0.0, 1.0, 1.0).unwrap();
        assert_eq!(enumerate_candidates(&t2).unwrap().count(), 6);

        t2.params[0] = ParamRange::new("p_hi", 4.0, 4.0, 1.0).unwrap();
        t2.params.truncate(1);
        t2.rules.truncate(1);
        t2.rules[0].conditions[0].param = "p_hi".into();
        assert_eq!(enumerate_candidates(&t2).unwrap().count(), 1);
    }

    #[test]
    fn grid_cap_overflows() {
        let t = parse_rule_spec(STUDENT).unwrap();
        assert!(matches!(
            enumerate_candidates_capped(&t, 100),
            Err(RuleError::GridOverflow {
                size: 324,
                cap: 100
            })
        ));
        assert!(enumerate_candidates_capped(&t, 324).is_ok());
    }

    #[test]
    fn classify_student_examples() {
        let t = parse_rule_spec(STUDENT).unwrap();
        let cand = t
            .candidate_from_bindings([("p_hi", 76.0), ("p_lo", 52.0)])
            .unwrap();
        let labels = classify(&student_view(&[80.0, 52.0, 60.0]), &cand).unwrap();
        let got: Vec<_> = labels.iter().map(|(_, c)| c).collect();
        assert_eq!(got, vec!["Excellent", "Bad", "Good"]);
    }

    #[test]
    fn first_match_wins_on_overlap() {
        let t = parse_rule_spec(STUDENT).unwrap();
        // an inverted candidate: both rules would fire for 57, the first one wins
        let mut inv = t.clone();
        inv.params[0] = ParamRange::new("p_hi", 40.0, 40.0, 1.0).unwrap();
        let cand = inv.candidate(vec![0, 8]).unwrap();
        let labels = classify(&student_view(&[57.0]), &cand).unwrap();
        assert_eq!(labels.get("s0"), Some("Excellent"));
    }

    #[test]
    fn any_and_equality_conditions() {
        let text = r#"{
            "classes": ["A", "B"], "default_class": "B", "compactness_attributes": ["x"],
            "params": [{"name": "p", "lower": 0.1, "upper": 0.3, "step": 0.1},
                       {"name": "q", "lower": 5, "upper": 5, "step": 1}],
            "rules": [{"class": "A", "combine": "any", "conditions": [
                {"attr": "u", "op": "=", "param": "p"},
                {"attr": "v", "op": ">", "param": "q"}]}]
        }"#;
        let t = parse_rule_spec(text).unwrap();
        let mut cols = IndexMap::new();
        cols.insert("u".into(), vec![0.3, 0.2, 0.3]);
        cols.insert("v".into(), vec![0.0, 6.0, 5.0]);
        let view =
            AggregatedView::from_columns(vec!["a".into(), "b".into(), "c".into()], cols).unwrap();
        // grid value 0.1 + 2*0.1 is not bit-equal to 0.3
        let cand = t.candidate(vec![2, 0]).unwrap();
        let labels = classify(&view, &cand).unwrap();
        assert_eq!(labels.assignment(), &[0, 0, 0]);
        let cand = t.candidate(vec![0, 0]).unwrap();
        assert_eq!(classify(&view, &cand).unwrap().assignment(), &[1, 0, 1]);
    }

    #[test]
    fn classify_reports_unknown_attribute() {
        let t = parse_rule_spec(STUDENT).unwrap();
        let mut cols = IndexMap::new();
        cols.insert("other".into(), vec![1.0]);
        let view = AggregatedView::from_columns(vec!["a".into()], cols).unwrap();
        let cand = t.candidate_at(0);
        assert!(matches!(
            classify(&view, &cand),
            Err(DataError::UnknownAttribute(_))
        ));
    }

    #[test]
    fn bindings_must_be_on_grid() {
        let t = parse_rule_spec(STUDENT).unwrap();
        assert!(matches!(
            t.candidate_from_bindings([("p_hi", 76.5), ("p_lo", 52.0)]),
            Err(RuleError::OffGrid { .. })
        ));
        assert!(matches!(
            t.candidate_from_bindings([("p_hi", 76.0)]),
            Err(RuleError::UnboundParam(_))
        ));
        assert!(matches!(
            t.candidate_from_bindings([("p_hi", 76.0), ("p_lo", 52.0), ("zz", 1.0)]),
            Err(RuleError::UnknownParam { .. })
        ));
        let c = t
            .candidate_from_bindings([("p_hi", 76.0), ("p_lo", 52.0)])
            .unwrap();
        assert_eq!(c.grid_indices(), &[11, 2]);
        assert_eq!(c.bindings().get("p_lo"), Some(&52.0));
    }
}
