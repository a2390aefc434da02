pub mod classify;
pub mod evaluate;
pub mod optimize;
pub mod report;
pub mod simulate;

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use trc_core::data::TemporalDataset;
use trc_core::labeling::Labeling;
use trc_core::rules::{parse_rule_spec, RuleTemplate};

use crate::error::CliError;
use crate::manifest::Recorder;

pub fn read_text(path: &Path, rec: &mut Recorder) -> Result<String, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    rec.input(path);
    Ok(text)
}

pub fn load_panel(path: &Path, rec: &mut Recorder) -> Result<TemporalDataset, CliError> {
    let data = trc_core::load_temporal_csv(path).map_err(|e| CliError::read(path, e))?;
    rec.input(path);
    Ok(data)
}

pub fn load_rules(path: &Path, rec: &mut Recorder) -> Result<RuleTemplate, CliError> {
    let text = read_text(path, rec)?;
    parse_rule_spec(&text).map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

pub fn load_labels(path: &Path, rec: &mut Recorder) -> Result<Labeling, CliError> {
    let labels = Labeling::load_csv(path).map_err(|e| CliError::read(path, e))?;
    rec.input(path);
    Ok(labels)
}

/// Writes a file produced by `fill`, creating parent directories.
pub fn write_with(
    path: &Path,
    rec: &mut Recorder,
    fill: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
    }
    let mut buf = Vec::new();
    fill(&mut buf).map_err(|e| CliError::write(path, e))?;
    fs::write(path, buf).map_err(|e| CliError::write(path, e))?;
    rec.output(path);
    Ok(())
}

pub fn write_json<T: serde::Serialize>(
    path: &Path,
    rec: &mut Recorder,
    value: &T,
) -> Result<(), CliError> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
    write_with(path, rec, |w| writeln!(w, "{text}"))
}

/// Short decimal form: `3` rather than `3.0`.
pub fn num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// File name without extension, for table headings.
pub fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}
