use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use trc_core::evaluation::{
    agreement_matrix, build_features, compare_labelings, derive_attributes, matched_agreement,
    AgreementMatrix, AucReport, FeatureSet, MatchedAgreement, Protocol,
};
use trc_core::sim::read_tables_csv;

use super::{load_labels, load_panel, stem, write_json, write_with};
use crate::error::CliError;
use crate::manifest::{manifest_path_for, Recorder};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub labels_a: PathBuf,
    #[arg(long)]
    pub labels_b: PathBuf,
    /// Comma-separated feature sets: belief_contribution, original, derived,
    /// derived_summary, original_derived. Defaults to the four standard
    /// sets when tables are given, else belief_contribution.
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    /// Contribution tables CSV `object_id,h0,...`; needed by every feature
    /// set except belief_contribution.
    #[arg(long)]
    pub tables: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0.25)]
    pub test_frac: f64,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20.0)]
    pub endowment: f64,
    #[arg(long, default_value_t = 0.4)]
    pub mpcr: f64,
    #[arg(long, default_value_t = 4)]
    pub group_size: usize,
    /// Report JSON; a text rendering is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

/// Evaluation report file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub labels_a: String,
    pub labels_b: String,
    pub agreement: AgreementMatrix,
    pub matched: MatchedAgreement,
    pub auc: AucReport,
}

impl EvaluationReport {
    pub fn render_text(&self) -> String {
        let mut out = format!(
            "Agreement (%) of {} classes with {} classes\n\n",
            self.labels_a, self.labels_b
        );
        out.push_str(&self.agreement.render_text(&self.labels_a, &self.labels_b));
        out.push_str(&format!(
            "\nMatched agreement: {}/{} ({:.1}%)\n",
            self.matched.matched,
            self.matched.total,
            100.0 * self.matched.agreement
        ));
        let p = &self.auc.protocol;
        out.push_str(&format!(
            "\nMean AUC of a {}-NN probe over {} stratified splits (test fraction {}, seed {})\n\n",
            p.k, p.repeats, p.test_fraction, p.seed
        ));
        out.push_str(&self.auc.render_text());
        out
    }
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    out.with_file_name(format!("{}{suffix}", stem(out)))
}

pub fn run(args: &EvaluateArgs) -> Result<(), CliError> {
    let mut rec = Recorder::start("evaluate");
    rec.seed(args.seed);
    let data = load_panel(&args.data, &mut rec)?;
    let a = load_labels(&args.labels_a, &mut rec)?;
    let b = load_labels(&args.labels_b, &mut rec)?;
    let (mut name_a, name_b) = (stem(&args.labels_a), stem(&args.labels_b));
    if name_a == name_b {
        name_a.push_str(" (a)");
    }

    let tables = match &args.tables {
        Some(path) => {
            let file = File::open(path).map_err(|e| CliError::read(path, e))?;
            let t = read_tables_csv(BufReader::new(file)).map_err(|e| CliError::read(path, e))?;
            rec.input(path);
            Some(t)
        }
        None => None,
    };
    let sets: Vec<FeatureSet> = if args.features.is_empty() {
        if tables.is_some() {
            FeatureSet::STANDARD.to_vec()
        } else {
            vec![FeatureSet::BeliefContribution]
        }
    } else {
        args.features
            .iter()
            .map(|s| {
                FeatureSet::parse(s.trim())
                    .ok_or_else(|| CliError::input(format!("unknown feature set `{s}`")))
            })
            .collect::<Result<_, _>>()?
    };

    let agreement = agreement_matrix(&a, &b)?;
    let matched = matched_agreement(&a, &b)?;
    let derived = match &tables {
        Some(t) => Some(derive_attributes(
            &data,
            t,
            args.endowment,
            args.mpcr,
            args.group_size,
        )?),
        None => None,
    };
    let features = sets
        .iter()
        .map(|&s| build_features(&data, tables.as_ref(), derived.as_ref(), s))
        .collect::<Result<Vec<_>, _>>()?;
    let protocol = Protocol {
        test_fraction: args.test_frac,
        repeats: args.repeats,
        k: args.k,
        seed: args.seed,
    };
    let auc = compare_labelings(
        &features,
        &[(name_a.clone(), a), (name_b.clone(), b)],
        &protocol,
    )?;
    let report = EvaluationReport {
        labels_a: name_a,
        labels_b: name_b,
        agreement,
        matched,
        auc,
    };

    write_json(&args.out, &mut rec, &report)?;
    let text = report.render_text();
    write_with(&sibling(&args.out, ".txt"), &mut rec, |w| {
        w.write_all(text.as_bytes())
    })?;
    if let Some(d) = &derived {
        write_with(&sibling(&args.out, ".derived.csv"), &mut rec, |w| {
            d.write_csv(w)
        })?;
        write_with(&sibling(&args.out, ".derived_summary.csv"), &mut rec, |w| {
            d.write_summary_csv(w)
        })?;
    }
    print!("{text}");
    rec.finish(&manifest_path_for(&args.out))
}
