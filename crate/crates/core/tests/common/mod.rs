//! Random rule templates and panels, plus a brute-force reference
//! optimizer written without the library's enumeration or rule engine.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use trc_core::compactness::CompactnessMeasure;
use trc_core::data::TemporalDataset;
use trc_core::labeling::Labeling;
use trc_core::rules::{parse_rule_spec, RuleTemplate};

pub struct Instance {
    pub spec: serde_json::Value,
    pub template: RuleTemplate,
    pub data: TemporalDataset,
    pub measure: CompactnessMeasure,
}

const KINDS: [&str; 6] = ["mean", "min", "max", "median", "stddev", "count_leq"];
const OPS: [&str; 5] = ["<", "<=", ">", ">=", "=="];

/// Panel of small integers (plenty of exact ties) and a template whose grid
/// has between `min_grid` and `max_grid` candidates.
pub fn random_instance(seed: u64, min_grid: u64, max_grid: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_obj = rng.random_range(8..=60);
    let n_t = rng.random_range(2..=10);
    let n_attr = rng.random_range(1..=2);
    let attrs: Vec<String> = (0..n_attr).map(|a| ["x", "y"][a].to_string()).collect();
    let values: Vec<f64> = (0..n_obj * n_t * n_attr)
        .map(|_| rng.random_range(0..=10) as f64)
        .collect();
    let data = TemporalDataset::new(
        (0..n_obj).map(|i| format!("o{i:02}")).collect(),
        (1..=n_t as i64).collect(),
        attrs.clone(),
        values,
    )
    .unwrap();

    let n_agg = rng.random_range(1..=3);
    let aggregates: Vec<serde_json::Value> = (0..n_agg)
        .map(|i| {
            let kind = KINDS[rng.random_range(0..KINDS.len())];
            let source = &attrs[rng.random_range(0..n_attr)];
            if kind == "count_leq" {
                json!({"name": format!("g{i}"), "source": source, "kind": kind, "value": 5})
            } else {
                json!({"name": format!("g{i}"), "source": source, "kind": kind})
            }
        })
        .collect();

    let (params, grid) = loop {
        let n_params = rng.random_range(1..=4);
        let mut size = 1u64;
        let ps: Vec<serde_json::Value> = (0..n_params)
            .map(|i| {
                let step = [0.5, 1.0, 2.0][rng.random_range(0..3)];
                let lower = rng.random_range(0..=6) as f64;
                let n = rng.random_range(2..=12);
                size *= n as u64;
                json!({"name": format!("p{i}"), "lower": lower,
                       "upper": lower + step * (n - 1) as f64, "step": step})
            })
            .collect();
        if (min_grid..=max_grid).contains(&size) {
            break (ps, size);
        }
    };
    let _ = grid;

    let n_classes = rng.random_range(2..=4);
    let classes: Vec<String> = (0..n_classes).map(|c| format!("k{c}")).collect();
    let n_rules = rng.random_range(1..=n_classes + 1);
    let mut param_cycle = 0usize;
    let rules: Vec<serde_json::Value> = (0..n_rules.max(1))
        .map(|_| {
            let n_cond = rng.random_range(1..=2);
            let conditions: Vec<serde_json::Value> = (0..n_cond)
                .map(|_| {
                    let param = format!("p{}", param_cycle % params.len());
                    param_cycle += 1;
                    json!({"attr": format!("g{}", rng.random_range(0..n_agg)),
                           "op": OPS[rng.random_range(0..OPS.len())],
                           "param": param})
                })
                .collect();
            json!({"class": classes[rng.random_range(0..n_classes)],
                   "combine": if rng.random_bool(0.5) { "all" } else { "any" },
                   "conditions": conditions})
        })
        .collect();
    let n_cattr = rng.random_range(1..=n_attr);
    let spec = json!({
        "classes": classes,
        "default_class": classes[rng.random_range(0..n_classes)],
        "compactness_attributes": attrs[..n_cattr],
        "aggregates": aggregates,
        "params": params,
        "rules": rules,
    });
    let template = parse_rule_spec(&spec.to_string()).unwrap();
    let measure = CompactnessMeasure::ALL[rng.random_range(0..CompactnessMeasure::ALL.len())];
    Instance {
        spec,
        template,
        data,
        measure,
    }
}

fn reference_aggregate(kind: &str, value: Option<f64>, xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    match kind {
        "mean" => mean,
        "min" => sorted[0],
        "max" => sorted[sorted.len() - 1],
        "median" => {
            let m = sorted.len() / 2;
            if sorted.len() % 2 == 1 {
                sorted[m]
            } else {
                (sorted[m - 1] + sorted[m]) / 2.0
            }
        }
        "stddev" => (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt(),
        "count_leq" => xs.iter().filter(|&&x| x <= value.unwrap()).count() as f64,
        other => panic!("unexpected aggregate {other}"),
    }
}

fn holds(op: &str, x: f64, t: f64) -> bool {
    match op {
        "<" => x < t,
        "<=" => x <= t,
        ">" => x > t,
        ">=" => x >= t,
        "==" => (x - t).abs() <= 1e-9,
        other => panic!("unexpected operator {other}"),
    }
}

/// Aggregate values per object, keyed by aggregate name.
pub fn reference_aggregates(inst: &Instance) -> Vec<HashMap<String, f64>> {
    let data = &inst.data;
    (0..data.n_objects())
        .map(|o| {
            inst.spec["aggregates"]
                .as_array()
                .unwrap()
                .iter()
                .map(|a| {
                    let src = data.attribute_index(a["source"].as_str().unwrap()).unwrap();
                    let v = reference_aggregate(
                        a["kind"].as_str().unwrap(),
                        a["value"].as_f64(),
                        &data.series(o, src),
                    );
                    (a["name"].as_str().unwrap().to_string(), v)
                })
                .collect()
        })
        .collect()
}

/// Labels from the JSON spec, evaluated directly: ordered rules, first
/// match wins, otherwise the default class.
pub fn reference_labels(inst: &Instance, bindings: &[f64]) -> Labeling {
    reference_labels_with(inst, &reference_aggregates(inst), bindings)
}

fn reference_labels_with(
    inst: &Instance,
    aggs: &[HashMap<String, f64>],
    bindings: &[f64],
) -> Labeling {
    let spec = &inst.spec;
    let classes: Vec<String> = spec["classes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap().to_string())
        .collect();
    let param_pos = |name: &str| -> usize { name[1..].parse().unwrap() };
    let assignment = aggs
        .iter()
        .map(|agg| {
            let mut class = spec["default_class"].as_str().unwrap();
            for rule in spec["rules"].as_array().unwrap() {
                let mut results = rule["conditions"].as_array().unwrap().iter().map(|c| {
                    holds(
                        c["op"].as_str().unwrap(),
                        agg[c["attr"].as_str().unwrap()],
                        bindings[param_pos(c["param"].as_str().unwrap())],
                    )
                });
                let fired = if rule["combine"] == "all" {
                    results.all(|b| b)
                } else {
                    results.any(|b| b)
                };
                if fired {
                    class = rule["class"].as_str().unwrap();
                    break;
                }
            }
            classes.iter().position(|c| c == class).unwrap()
        })
        .collect();
    Labeling::new(inst.data.object_ids().to_vec(), classes, assignment).unwrap()
}

pub struct ReferenceBest {
    pub cost: f64,
    pub indices: Vec<usize>,
    pub labeling: Labeling,
}

/// Odometer over the grid (last parameter fastest), scoring each candidate
/// with the public cost function and keeping the first strict minimum.
pub fn reference_optimum(inst: &Instance) -> ReferenceBest {
    let params = inst.spec["params"].as_array().unwrap();
    let dims: Vec<usize> = params
        .iter()
        .map(|p| {
            let (l, u, s) = (
                p["lower"].as_f64().unwrap(),
                p["upper"].as_f64().unwrap(),
                p["step"].as_f64().unwrap(),
            );
            ((u - l) / s).round() as usize + 1
        })
        .collect();
    let attrs: Vec<&str> = inst.spec["compactness_attributes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a.as_str().unwrap())
        .collect();
    let aggs = reference_aggregates(inst);
    let mut idx = vec![0usize; dims.len()];
    let mut best: Option<ReferenceBest> = None;
    loop {
        let bindings: Vec<f64> = params
            .iter()
            .zip(&idx)
            .map(|(p, &k)| p["lower"].as_f64().unwrap() + k as f64 * p["step"].as_f64().unwrap())
            .collect();
        let labeling = reference_labels_with(inst, &aggs, &bindings);
        let cost = trc_core::cost(&inst.data, &labeling, inst.measure, &attrs)
            .unwrap()
            .total;
        if best.as_ref().is_none_or(|b| cost < b.cost) {
            best = Some(ReferenceBest {
                cost,
                indices: idx.clone(),
                labeling,
            });
        }
        let mut d = dims.len();
        loop {
            if d == 0 {
                return best.unwrap();
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < dims[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}
