//! CSV artifacts and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use aft_core::{AccelCurve, Axis};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::scenario::Scenario;

pub const ESTIMATES_FILE: &str = "estimates.csv";
pub const ORACLE_FILE: &str = "oracle.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// `git describe` of the build, captured by the build script.
pub const GIT_DESCRIBE: &str = env!("AFTSIM_GIT_DESCRIBE");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub series: String,
    pub estimator: String,
    pub axis: Axis,
    pub t: f64,
    pub treated_cdf: f64,
    pub estimate: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub identified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub series: String,
    pub axis: Axis,
    pub t: f64,
    pub treated_cdf: f64,
    pub theta: Option<f64>,
}

/// One scalar result. `reference` holds the registered comparison value
/// (true parameter or published figure) when there is one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub series: String,
    pub metric: String,
    pub value: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub reference: Option<f64>,
    pub replicates: usize,
}

impl SummaryRow {
    pub fn new(series: &str, metric: &str, value: Option<f64>) -> Self {
        SummaryRow {
            series: series.to_owned(),
            metric: metric.to_owned(),
            value,
            lo: None,
            hi: None,
            reference: None,
            replicates: 1,
        }
    }

    pub fn with_reference(mut self, r: f64) -> Self {
        self.reference = Some(r);
        self
    }

    pub fn with_interval(mut self, lo: f64, hi: f64) -> Self {
        self.lo = Some(lo);
        self.hi = Some(hi);
        self
    }

    pub fn with_replicates(mut self, n: usize) -> Self {
        self.replicates = n;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub estimates: Vec<EstimateRow>,
    pub oracle: Vec<OracleRow>,
    pub summary: Vec<SummaryRow>,
}

impl Artifacts {
    pub fn push_estimate(&mut self, series: &str, estimator: &str, curve: &AccelCurve) {
        self.estimates.extend(curve.points.iter().map(|p| EstimateRow {
            series: series.to_owned(),
            estimator: estimator.to_owned(),
            axis: curve.axis,
            t: p.t,
            treated_cdf: p.treated_cdf,
            estimate: p.value,
            lo: p.band.map(|b| b.0),
            hi: p.band.map(|b| b.1),
            identified: p.value.is_some(),
        }));
    }

    pub fn push_oracle(&mut self, series: &str, curve: &AccelCurve) {
        self.oracle.extend(curve.points.iter().map(|p| OracleRow {
            series: series.to_owned(),
            axis: curve.axis,
            t: p.t,
            treated_cdf: p.treated_cdf,
            theta: p.value,
        }));
    }

    pub fn estimates_of<'a>(&'a self, series: &'a str, estimator: &'a str) -> impl Iterator<Item = &'a EstimateRow> + 'a {
        self.estimates.iter().filter(move |r| r.series == series && r.estimator == estimator)
    }

    pub fn oracle_of<'a>(&'a self, series: &'a str) -> impl Iterator<Item = &'a OracleRow> + 'a {
        self.oracle.iter().filter(move |r| r.series == series)
    }

    pub fn summary_value(&self, series: &str, metric: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.series == series && r.metric == metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub exhibit: String,
    pub version: String,
    pub git_describe: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config: Scenario,
    pub files: Vec<FileDigest>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the scenario's canonical JSON encoding.
pub fn config_hash(s: &Scenario) -> String {
    sha256_hex(serde_json::to_string(s).expect("scenario serializes").as_bytes())
}

fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Artifact(e.to_string()))
}

pub fn scenario_dir(out: &Path, s: &Scenario) -> PathBuf {
    out.join(&s.name)
}

/// Writes the three CSV files and the manifest into `<out>/<name>/`.
pub fn write_artifacts(out: &Path, s: &Scenario, a: &Artifacts) -> CliResult<PathBuf> {
    let dir = scenario_dir(out, s);
    fs::create_dir_all(&dir)?;
    let files = [
        (ESTIMATES_FILE, to_csv(&a.estimates, &["series", "estimator", "axis", "t", "treated_cdf", "estimate", "lo", "hi", "identified"])?),
        (ORACLE_FILE, to_csv(&a.oracle, &["series", "axis", "t", "treated_cdf", "theta"])?),
        (SUMMARY_FILE, to_csv(&a.summary, &["series", "metric", "value", "lo", "hi", "reference", "replicates"])?),
    ];
    let mut digests = vec![];
    for (name, bytes) in &files {
        fs::write(dir.join(name), bytes)?;
        digests.push(FileDigest { file: (*name).to_owned(), sha256: sha256_hex(bytes) });
    }
    let manifest = Manifest {
        name: s.name.clone(),
        exhibit: s.exhibit.tag().to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        git_describe: GIT_DESCRIBE.to_owned(),
        seed: s.seed,
        config_sha256: config_hash(s),
        config: s.clone(),
        files: digests,
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    fs::write(dir.join(MANIFEST_FILE), json)?;
    Ok(dir)
}

fn read_csv<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows: Result<Vec<T>, _> = r.deserialize().collect();
    Ok(rows?)
}

fn require(path: PathBuf) -> CliResult<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::MissingArtifact(path.display().to_string()))
    }
}

/// Loads a scenario directory written by [`write_artifacts`].
pub fn read_artifacts(dir: &Path) -> CliResult<(Manifest, Artifacts)> {
    let manifest_path = require(dir.join(MANIFEST_FILE))?;
    let manifest: Manifest = serde_json::from_slice(&fs::read(&manifest_path)?)
        .map_err(|e| CliError::Artifact(format!("{}: {e}", manifest_path.display())))?;
    let a = Artifacts {
        estimates: read_csv(&require(dir.join(ESTIMATES_FILE))?)?,
        oracle: read_csv(&require(dir.join(ORACLE_FILE))?)?,
        summary: read_csv(&require(dir.join(SUMMARY_FILE))?)?,
    };
    Ok((manifest, a))
}
