//! Attributes derived from a public goods game panel.

use std::io::{self, Write};

use indexmap::IndexMap;

use super::EvalError;
use crate::data::TemporalDataset;
use crate::stats::{mean, population_sd, round_half_up};

/// Per (object, time) derived values plus per-object summaries. Matrices
/// are indexed `[object][time]` in the panel's order.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedAttributes {
    pub object_ids: Vec<String>,
    pub time_points: Vec<i64>,
    pub payoff: Vec<Vec<f64>>,
    pub predicted_contribution: Vec<Vec<f64>>,
    /// Actual minus table-predicted contribution.
    pub initial_deviation: Vec<Vec<f64>>,
    /// Belief minus the co-players' average.
    pub prediction_accuracy: Vec<Vec<f64>>,
    pub initial_deviation_mean: Vec<f64>,
    pub prediction_accuracy_sd: Vec<f64>,
}

/// Needs `contribution`, `belief` and `others` columns. When the panel also
/// has `unrounded_others`, payoffs use it and are exact.
pub fn derive_attributes(
    data: &TemporalDataset,
    tables: &IndexMap<String, Vec<f64>>,
    endowment: f64,
    mpcr: f64,
    group_size: usize,
) -> Result<DerivedAttributes, EvalError> {
    let col = |name: &str| {
        data.attribute_index(name)
            .map_err(|_| EvalError::MissingColumn(name.to_string()))
    };
    let (gi, bi, oi) = (col("contribution")?, col("belief")?, col("others")?);
    let exact = data.attribute_index("unrounded_others").ok();
    let (n, nt) = (data.n_objects(), data.n_times());
    let k = group_size.saturating_sub(1) as f64;

    let mut out = DerivedAttributes {
        object_ids: data.object_ids().to_vec(),
        time_points: data.time_points().to_vec(),
        payoff: vec![vec![0.0; nt]; n],
        predicted_contribution: vec![vec![0.0; nt]; n],
        initial_deviation: vec![vec![0.0; nt]; n],
        prediction_accuracy: vec![vec![0.0; nt]; n],
        initial_deviation_mean: vec![0.0; n],
        prediction_accuracy_sd: vec![0.0; n],
    };
    for (o, id) in data.object_ids().iter().enumerate() {
        let table = tables
            .get(id)
            .ok_or_else(|| EvalError::MissingTable(id.clone()))?;
        for t in 0..nt {
            let time = data.time_points()[t];
            let g = data.value(o, t, gi);
            let b = data.value(o, t, bi);
            let others = data.value(o, t, oi);
            for (column, value) in [("belief", b), ("others", others)] {
                if !(0.0..=endowment).contains(&value) {
                    return Err(EvalError::ValueOutOfRange {
                        object: id.clone(),
                        time,
                        column,
                        value,
                        endowment,
                    });
                }
            }
            let co_mean = exact.map_or(others, |e| data.value(o, t, e));
            out.payoff[o][t] = endowment - g + mpcr * (g + k * co_mean);
            let h = round_half_up(b);
            let predicted = *table.get(h as usize).filter(|_| h >= 0.0).ok_or_else(|| {
                EvalError::TableIndexOutOfRange {
                    object: id.clone(),
                    time,
                    index: h,
                }
            })?;
            out.predicted_contribution[o][t] = predicted;
            out.initial_deviation[o][t] = g - predicted;
            out.prediction_accuracy[o][t] = b - others;
        }
        out.initial_deviation_mean[o] = mean(&out.initial_deviation[o]);
        out.prediction_accuracy_sd[o] = population_sd(&out.prediction_accuracy[o]);
    }
    Ok(out)
}

impl DerivedAttributes {
    /// `object_id,time,payoff,initial_deviation,prediction_accuracy`
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "object_id,time,payoff,initial_deviation,prediction_accuracy"
        )?;
        for (o, id) in self.object_ids.iter().enumerate() {
            for (t, time) in self.time_points.iter().enumerate() {
                writeln!(
                    w,
                    "{id},{time},{},{},{}",
                    self.payoff[o][t], self.initial_deviation[o][t], self.prediction_accuracy[o][t]
                )?;
            }
        }
        Ok(())
    }

    /// `object_id,initial_deviation_mean,prediction_accuracy_sd`
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "object_id,initial_deviation_mean,prediction_accuracy_sd")?;
        for (o, id) in self.object_ids.iter().enumerate() {
            writeln!(
                w,
                "{id},{},{}",
                self.initial_deviation_mean[o], self.prediction_accuracy_sd[o]
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel(rows: &[[f64; 3]]) -> TemporalDataset {
        TemporalDataset::from_fn(
            vec!["p1".into()],
            (1..=rows.len() as i64).collect(),
            vec!["contribution".into(), "belief".into(), "others".into()],
            |_, t, a| rows[t][a],
        )
        .unwrap()
    }

    fn identity_table() -> IndexMap<String, Vec<f64>> {
        IndexMap::from([("p1".to_string(), (0..=20).map(f64::from).collect())])
    }

    #[test]
    fn payoff_examples() {
        let d = panel(&[[20.0, 20.0, 20.0], [0.0, 20.0, 20.0], [0.0, 0.0, 0.0]]);
        let a = derive_attributes(&d, &identity_table(), 20.0, 0.4, 4).unwrap();
        assert!((a.payoff[0][0] - 32.0).abs() < 1e-12);
        assert!((a.payoff[0][1] - 44.0).abs() < 1e-12);
        assert_eq!(a.payoff[0][2], 20.0);
    }

    #[test]
    fn deviation_and_accuracy() {
        let d = panel(&[[5.0, 12.5, 10.0], [8.0, 7.0, 9.0]]);
        let a = derive_attributes(&d, &identity_table(), 20.0, 0.4, 4).unwrap();
        // belief 12.5 rounds half up to 13
        assert_eq!(a.predicted_contribution[0], vec![13.0, 7.0]);
        assert_eq!(a.initial_deviation[0], vec![-8.0, 1.0]);
        assert_eq!(a.prediction_accuracy[0], vec![2.5, -2.0]);
        assert_eq!(a.initial_deviation_mean[0], -3.5);
        assert_eq!(a.prediction_accuracy_sd[0], 2.25);
        let mut buf = Vec::new();
        a.write_summary_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "object_id,initial_deviation_mean,prediction_accuracy_sd\np1,-3.5,2.25\n"
        );
    }

    #[test]
    fn errors() {
        let d = panel(&[[5.0, 12.0, 10.0]]);
        let short = IndexMap::from([("p1".to_string(), vec![0.0; 5])]);
        assert!(matches!(
            derive_attributes(&d, &short, 20.0, 0.4, 4),
            Err(EvalError::TableIndexOutOfRange { .. })
        ));
        assert!(matches!(
            derive_attributes(&d, &IndexMap::new(), 20.0, 0.4, 4),
            Err(EvalError::MissingTable(_))
        ));
        let no_belief = d.select_attributes(&["contribution", "others"]).unwrap();
        assert!(matches!(
            derive_attributes(&no_belief, &identity_table(), 20.0, 0.4, 4),
            Err(EvalError::MissingColumn(c)) if c == "belief"
        ));
        let bad = panel(&[[5.0, 25.0, 10.0]]);
        assert!(matches!(
            derive_attributes(&bad, &identity_table(), 20.0, 0.4, 4),
            Err(EvalError::ValueOutOfRange { .. })
        ));
    }
}
