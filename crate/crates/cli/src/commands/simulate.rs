use std::path::PathBuf;

use clap::Args;
use trc_core::sim::{simulate, SimConfig};

use super::{read_text, write_with};
use crate::error::CliError;
use crate::manifest::Recorder;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulator configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let mut rec = Recorder::start("simulate");
    let text = read_text(&args.config, &mut rec)?;
    let config: SimConfig =
        serde_json::from_str(&text).map_err(|e| CliError::read(&args.config, e))?;
    let seed = args.seed.unwrap_or(config.seed);
    rec.seed(seed);
    let out = simulate(&config.params, &config.roster(), seed)?;

    write_with(&args.out.join("panel.csv"), &mut rec, |w| {
        out.write_panel_csv(w, true)
    })?;
    write_with(&args.out.join("truth.csv"), &mut rec, |w| {
        out.truth.write_csv(w)
    })?;
    write_with(&args.out.join("tables.csv"), &mut rec, |w| {
        out.write_tables_csv(w)
    })?;
    println!(
        "simulated {} players x {} rounds into {}",
        out.panel.n_objects(),
        out.panel.n_times(),
        args.out.display()
    );
    rec.finish(&args.out.join("manifest.json"))
}
