use std::path::PathBuf;

use clap::{Args, ValueEnum};
use trc_core::compactness::CompactnessMeasure;
use trc_core::optimizer::{
    brute_force_with, differential_evolution_with, BestResultDoc, DeParams, OptimizerConfig,
};
use trc_core::rules::DEFAULT_GRID_CAP;

use super::{load_panel, load_rules, num, write_json};
use crate::error::CliError;
use crate::manifest::{manifest_path_for, Recorder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Brute,
    De,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Panel CSV `object_id,time,<attributes...>`.
    #[arg(long)]
    pub data: PathBuf,
    /// Rule template (JSON).
    #[arg(long)]
    pub rules: PathBuf,
    /// stddev, centroid, dunn, db or silhouette.
    #[arg(long, default_value = "stddev")]
    pub measure: String,
    #[arg(long, value_enum, default_value_t = Mode::Brute)]
    pub mode: Mode,
    #[arg(long, default_value_t = 20)]
    pub de_pop: usize,
    #[arg(long, default_value_t = 50)]
    pub de_gens: usize,
    #[arg(long, default_value_t = 0.8)]
    pub de_f: f64,
    #[arg(long, default_value_t = 0.9)]
    pub de_cr: f64,
    /// Seed for differential evolution.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Largest grid that brute force will enumerate.
    #[arg(long, default_value_t = DEFAULT_GRID_CAP)]
    pub grid_cap: u64,
    /// Result JSON.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &OptimizeArgs) -> Result<(), CliError> {
    let mut rec = Recorder::start("optimize");
    let measure = CompactnessMeasure::parse(&args.measure)
        .ok_or_else(|| CliError::input(format!("unknown measure `{}`", args.measure)))?;
    if args.workers == 0 {
        return Err(CliError::input("--workers must be at least 1"));
    }
    let data = load_panel(&args.data, &mut rec)?;
    let template = load_rules(&args.rules, &mut rec)?;
    let config = OptimizerConfig {
        workers: args.workers,
        grid_cap: args.grid_cap,
        ..OptimizerConfig::default()
    };
    let best = match args.mode {
        Mode::Brute => brute_force_with(&template, &data, measure, &config)?,
        Mode::De => {
            rec.seed(args.seed);
            let de = DeParams {
                population_size: args.de_pop,
                generations: args.de_gens,
                differential_weight: args.de_f,
                crossover_rate: args.de_cr,
                seed: args.seed,
            };
            differential_evolution_with(&template, &data, measure, &de, &config)?
        }
    };
    let doc = best.to_doc(true);
    write_json(&args.out, &mut rec, &doc)?;
    print!("{}", summary_table(&doc));
    rec.finish(&manifest_path_for(&args.out))
}

/// Lower / upper / best per parameter, one column per parameter.
pub fn summary_table(doc: &BestResultDoc) -> String {
    let mut rows = vec![
        vec![String::new()],
        vec!["Lower".into()],
        vec!["Upper".into()],
        vec!["Best".into()],
    ];
    for p in &doc.params {
        rows[0].push(p.name.clone());
        rows[1].push(num(p.lower));
        rows[2].push(num(p.upper));
        rows[3].push(num(p.best));
    }
    let mut out = trc_core::evaluation::agreement::render_grid(&rows);
    out.push_str(&format!(
        "measure {}  cost {:.6}  evaluated {}  ties {}\n",
        doc.measure, doc.cost_total, doc.evaluated, doc.ties
    ));
    out
}
