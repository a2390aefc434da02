use std::path::PathBuf;

use clap::Args;
use serde_json::Value;
use trc_core::data::aggregate;
use trc_core::rules::classify;

use super::{load_panel, load_rules, read_text, write_with};
use crate::error::CliError;
use crate::manifest::{manifest_path_for, Recorder};

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub rules: PathBuf,
    /// Optimizer result JSON, or a flat `{"param": value}` object.
    #[arg(long)]
    pub bindings: PathBuf,
    /// Labels CSV `object_id,class`.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_bindings(text: &str) -> Result<Vec<(String, f64)>, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let map = match value.get("bindings") {
        Some(b) => b,
        None => &value,
    };
    let Value::Object(map) = map else {
        return Err("expected a JSON object of parameter values".into());
    };
    map.iter()
        .map(|(k, v)| {
            v.as_f64()
                .map(|x| (k.clone(), x))
                .ok_or_else(|| format!("parameter `{k}` is not a number"))
        })
        .collect()
}

pub fn run(args: &ClassifyArgs) -> Result<(), CliError> {
    let mut rec = Recorder::start("classify");
    let data = load_panel(&args.data, &mut rec)?;
    let template = load_rules(&args.rules, &mut rec)?;
    let text = read_text(&args.bindings, &mut rec)?;
    let bindings = parse_bindings(&text).map_err(|e| CliError::read(&args.bindings, e))?;
    let candidate =
        template.candidate_from_bindings(bindings.iter().map(|(k, v)| (k.as_str(), *v)))?;
    let view = aggregate(&data, &template.aggregates)?;
    let labels = classify(&view, &candidate)?;
    write_with(&args.out, &mut rec, |w| labels.write_csv(w))?;
    for (class, n) in labels.classes().iter().zip(labels.class_sizes()) {
        println!("{class}: {n}");
    }
    rec.finish(&manifest_path_for(&args.out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bindings_from_result_or_flat_object() {
        let doc = r#"{"bindings": {"a": 1, "b": 2.5}, "ties": 1}"#;
        assert_eq!(
            parse_bindings(doc).unwrap(),
            vec![("a".into(), 1.0), ("b".into(), 2.5)]
        );
        assert_eq!(
            parse_bindings(r#"{"a": 3}"#).unwrap(),
            vec![("a".into(), 3.0)]
        );
        assert!(parse_bindings(r#"{"a": "x"}"#).is_err());
        assert!(parse_bindings("[1]").is_err());
    }
}
