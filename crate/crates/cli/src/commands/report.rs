use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use trc_core::data::TemporalDataset;
use trc_core::labeling::Labeling;
use trc_core::optimizer::BestResultDoc;
use trc_core::stats::{max, mean, median, min, quantile};

use super::evaluate::EvaluationReport;
use super::optimize::summary_table;
use super::{load_labels, load_panel, stem, write_with};
use crate::error::CliError;
use crate::manifest::{manifest_path_for, Recorder};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directory holding `panel.csv` plus any label CSVs, optimizer
    /// results and evaluation reports.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Text report; plot-data CSVs are written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Panel attribute summarized per class and round.
    #[arg(long, default_value = "contribution")]
    pub attribute: String,
}

fn is_label_csv(path: &Path) -> bool {
    fs::read_to_string(path)
        .ok()
        .and_then(|t| t.lines().next().map(|h| h.trim() == "object_id,class"))
        .unwrap_or(false)
}

/// Per class and time point: count, mean and five-number summary.
fn class_series(
    data: &TemporalDataset,
    attr: usize,
    labels: &Labeling,
) -> Vec<(String, i64, Vec<f64>)> {
    let index = labels.index_by_object();
    let mut out = Vec::new();
    for (c, class) in labels.classes().iter().enumerate() {
        let members: Vec<usize> = data
            .object_ids()
            .iter()
            .enumerate()
            .filter(|(_, o)| index.get(o.as_str()) == Some(&c))
            .map(|(i, _)| i)
            .collect();
        for (t, &time) in data.time_points().iter().enumerate() {
            let values: Vec<f64> = members.iter().map(|&o| data.value(o, t, attr)).collect();
            out.push((class.clone(), time, values));
        }
    }
    out
}

fn plot_csv(rows: &[(String, i64, Vec<f64>)], w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "class,time,n,mean,min,q1,median,q3,max")?;
    for (class, time, v) in rows {
        if v.is_empty() {
            writeln!(w, "{class},{time},0,,,,,,")?;
        } else {
            writeln!(
                w,
                "{class},{time},{},{},{},{},{},{},{}",
                v.len(),
                mean(v),
                min(v),
                quantile(v, 0.25),
                median(v),
                quantile(v, 0.75),
                max(v)
            )?;
        }
    }
    Ok(())
}

fn means_table(data: &TemporalDataset, rows: &[(String, i64, Vec<f64>)]) -> String {
    let mut grid = vec![vec!["class".to_string(), "n".to_string()]];
    grid[0].extend(data.time_points().iter().map(|t| format!("t{t}")));
    for chunk in rows.chunks(data.n_times()) {
        let mut row = vec![chunk[0].0.clone(), chunk[0].2.len().to_string()];
        row.extend(chunk.iter().map(|(_, _, v)| {
            if v.is_empty() {
                "-".to_string()
            } else {
                format!("{:.2}", mean(v))
            }
        }));
        grid.push(row);
    }
    trc_core::evaluation::agreement::render_grid(&grid)
}

pub fn run(args: &ReportArgs) -> Result<(), CliError> {
    let mut rec = Recorder::start("report");
    let dir = &args.input;
    let data = load_panel(&dir.join("panel.csv"), &mut rec)?;
    let attr = data
        .attribute_index(&args.attribute)
        .map_err(|e| CliError::input(e.to_string()))?;

    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::read(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    entries.sort();
    let ext = |p: &Path, e: &str| p.extension().is_some_and(|x| x == e);
    let is_manifest = |p: &Path| p.to_string_lossy().ends_with("manifest.json");

    let mut text = format!(
        "Panel: {} objects, {} time points, attributes {}\n",
        data.n_objects(),
        data.n_times(),
        data.attribute_names().join(", ")
    );

    for path in entries.iter().filter(|p| ext(p, "json") && !is_manifest(p)) {
        let body = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        if let Ok(doc) = serde_json::from_str::<BestResultDoc>(&body) {
            rec.input(path);
            text.push_str(&format!(
                "\n== Optimized thresholds ({}) ==\n\n",
                stem(path)
            ));
            text.push_str(&summary_table(&doc));
        } else if let Ok(report) = serde_json::from_str::<EvaluationReport>(&body) {
            rec.input(path);
            text.push_str(&format!("\n== Evaluation ({}) ==\n\n", stem(path)));
            text.push_str(&report.render_text());
        }
    }

    let out_dir = args.out.parent().unwrap_or(Path::new("")).to_path_buf();
    let out_stem = stem(&args.out);
    for path in entries.iter().filter(|p| ext(p, "csv") && is_label_csv(p)) {
        let labels = load_labels(path, &mut rec)?;
        let rows = class_series(&data, attr, &labels);
        text.push_str(&format!(
            "\n== Mean {} per round by class ({}) ==\n\n",
            args.attribute,
            stem(path)
        ));
        text.push_str(&means_table(&data, &rows));
        let plot = out_dir.join(format!("{out_stem}.{}.{}.csv", stem(path), args.attribute));
        write_with(&plot, &mut rec, |w| plot_csv(&rows, w))?;
    }

    write_with(&args.out, &mut rec, |w| w.write_all(text.as_bytes()))?;
    print!("{text}");
    rec.finish(&manifest_path_for(&args.out))
}
