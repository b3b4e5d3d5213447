//! Config parsing and deterministic report emission for the `taperspec`
//! command line tool.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use taperspec::montecarlo::{ExperimentConfig, ExperimentKind, ExperimentReport};

pub const CONVERGENCE_CSV: &str = "convergence.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const MANIFEST_JSON: &str = "manifest.json";

pub const CSV_COLUMNS: [&str; 13] = [
    "T",
    "k",
    "phi_id",
    "sample_mean",
    "oracle_mean",
    "limit_mean",
    "T_scaled_cov",
    "limit_cov",
    "skew",
    "exkurt",
    "c3",
    "c4",
    "pass",
];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] taperspec::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no reports to write")]
    NoReports,
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parse and validate a JSON experiment config. Unknown keys are rejected.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_config_str(&text).map_err(|e| match e {
        CliError::Core(inner) => CliError::Config {
            path: path.to_path_buf(),
            message: inner.to_string(),
        },
        other => other,
    })
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_str(text)
        .map_err(|e| CliError::Core(taperspec::Error::Config(e.to_string())))?;
    config.validate()?;
    Ok(config)
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_complex(z: Complex64) -> String {
    format_float(z.re)
}

/// Aggregated pass flag for one check name within one report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionFlag {
    pub report: usize,
    pub experiment: ExperimentKind,
    pub check: String,
    pub evaluated: usize,
    pub failed: usize,
    pub passed: bool,
}

pub fn criterion_flags(reports: &[ExperimentReport]) -> Vec<CriterionFlag> {
    let mut out: Vec<CriterionFlag> = Vec::new();
    for (index, report) in reports.iter().enumerate() {
        for check in &report.checks {
            let slot = match out
                .iter_mut()
                .position(|f| f.report == index && f.check == check.name)
            {
                Some(p) => &mut out[p],
                None => {
                    out.push(CriterionFlag {
                        report: index,
                        experiment: report.experiment,
                        check: check.name.clone(),
                        evaluated: 0,
                        failed: 0,
                        passed: true,
                    });
                    out.last_mut().expect("just pushed")
                }
            };
            slot.evaluated += 1;
            if !check.passed {
                slot.failed += 1;
                slot.passed = false;
            }
        }
    }
    out
}

/// Render the convergence table: one row per `(report, T, component)`.
pub fn convergence_csv(reports: &[ExperimentReport]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for report in reports {
        for row in &report.components {
            w.write_record([
                row.half_window.to_string(),
                row.k.to_string(),
                row.phi_id.clone(),
                format_complex(row.sample_mean),
                row.oracle_mean.map(format_complex).unwrap_or_default(),
                format_complex(row.limit_mean),
                format_float(row.t_scaled_var),
                format_float(row.limit_var),
                format_float(row.skewness),
                format_float(row.excess_kurtosis),
                format_float(row.standardized_cumulant_3),
                format_float(row.standardized_cumulant_4),
                row.pass.to_string(),
            ])?;
        }
    }
    w.into_inner()
        .map_err(|e| CliError::Usage(format!("csv buffer: {e}")))
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    passed: bool,
    criteria: Vec<CriterionFlag>,
    reports: &'a [ExperimentReport],
}

pub fn summary_json(reports: &[ExperimentReport]) -> Result<Vec<u8>> {
    let summary = Summary {
        passed: reports.iter().all(ExperimentReport::passed),
        criteria: criterion_flags(reports),
        reports,
    };
    let mut bytes = serde_json::to_vec_pretty(&summary)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub configs: Vec<ExperimentConfig>,
    pub base_seeds: Vec<u64>,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<PathBuf>,
    pub criteria: Vec<CriterionFlag>,
    pub passed: bool,
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Write the convergence CSV, summary JSON and manifest into `out_dir`.
pub fn report(reports: &[ExperimentReport], out_dir: &Path) -> Result<RunManifest> {
    let now = timestamp();
    report_with_times(reports, out_dir, &now, &now)
}

pub fn report_with_times(
    reports: &[ExperimentReport],
    out_dir: &Path,
    started_at: &str,
    finished_at: &str,
) -> Result<RunManifest> {
    if reports.is_empty() {
        return Err(CliError::NoReports);
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let csv_path = out_dir.join(CONVERGENCE_CSV);
    let summary_path = out_dir.join(SUMMARY_JSON);
    let manifest_path = out_dir.join(MANIFEST_JSON);
    fs::write(&csv_path, convergence_csv(reports)?).map_err(io_err(&csv_path))?;
    fs::write(&summary_path, summary_json(reports)?).map_err(io_err(&summary_path))?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        configs: reports.iter().map(|r| r.config.clone()).collect(),
        base_seeds: reports.iter().map(|r| r.config.base_seed).collect(),
        started_at: started_at.to_string(),
        finished_at: finished_at.to_string(),
        outputs: vec![csv_path, summary_path, manifest_path.clone()],
        criteria: criterion_flags(reports),
        passed: reports.iter().all(ExperimentReport::passed),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    fs::write(&manifest_path, bytes).map_err(io_err(&manifest_path))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": {"model": "white"},
        "phis": ["one"],
        "ks": [1],
        "T_sweep": [8]
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.replicates, 1000);
        assert_eq!(c.grid_n, None);
        assert_eq!(c.grid_for(8).unwrap().len(), 2 * (2 * 8 + 1));
        assert_eq!(c.taper, "rectangular");
        assert_eq!(c.experiment, ExperimentKind::Convergence);
    }

    #[test]
    fn config_errors_name_the_field() {
        let few = MINIMAL.replace("\"T_sweep\"", "\"R\": 50, \"T_sweep\"");
        assert!(parse_config_str(&few).unwrap_err().to_string().contains("R ≥ 100"));
        let typo = MINIMAL.replace("\"phis\"", "\"taperr\": \"cosine\", \"phis\"");
        assert!(parse_config_str(&typo).unwrap_err().to_string().contains("taperr"));
        let missing = MINIMAL.replace("\"ks\": [1],", "");
        assert!(parse_config_str(&missing).unwrap_err().to_string().contains("ks"));
        let range = MINIMAL.replace("\"T_sweep\": [8]", "\"T_sweep\": [16, 8]");
        assert!(parse_config_str(&range).unwrap_err().to_string().contains("T_sweep"));
    }

    #[test]
    fn config_round_trip() {
        let mut c = parse_config_str(MINIMAL).unwrap();
        c.grid_n = Some(40);
        c.base_seed = 99;
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(parse_config_str(&text).unwrap(), c);
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(-0.1), "-1.0000000000000001e-1");
    }

    #[test]
    fn empty_report_list_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(report(&[], dir.path()), Err(CliError::NoReports)));
    }
}
