//! Versioned file formats for instances and solve reports.
//!
//! Both formats are JSON. Floats are written in shortest round-trip decimal
//! form and parsed with correct rounding, so a write/read cycle reproduces
//! every value bit for bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dual::{DualCertificate, ResidualBundle};
use crate::error::{AlpnError, Result};
use crate::gen::GeneratedInstance;
use crate::model::{ConeStructure, SocpInstance, SolveReport};

pub const INSTANCE_VERSION: &str = "alpn-socp/1";
pub const REPORT_VERSION: &str = "alpn-report/1";
pub const CSV_LOG_HEADER: &str = "k,gamma,zeta,b_dist,cuts_total,qp_inner_iters";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub seed: u64,
    pub x_tilde: Vec<f64>,
    pub s_tilde: Vec<f64>,
}

/// On-disk instance, `A` stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFileV1 {
    pub format_version: String,
    pub m: usize,
    pub dims: Vec<usize>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl InstanceFileV1 {
    pub fn from_instance(instance: &SocpInstance, provenance: Option<Provenance>) -> Self {
        let a = instance.a();
        Self {
            format_version: INSTANCE_VERSION.to_string(),
            m: instance.m(),
            dims: instance.cone().dims().to_vec(),
            a: (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect(),
            b: instance.b().iter().copied().collect(),
            c: instance.c().iter().copied().collect(),
            provenance,
        }
    }

    pub fn from_generated(g: &GeneratedInstance) -> Self {
        Self::from_instance(
            &g.instance,
            Some(Provenance {
                seed: g.seed,
                x_tilde: g.x_tilde.iter().copied().collect(),
                s_tilde: g.s_tilde.iter().copied().collect(),
            }),
        )
    }

    pub fn to_instance(&self) -> Result<SocpInstance> {
        let shape = |field: &str, msg: String| AlpnError::Shape { field: field.into(), msg };
        let cone = ConeStructure::new(self.dims.clone()).map_err(|e| shape("dims", e.to_string()))?;
        let n = cone.n();
        if self.a.len() != self.m {
            return Err(shape("A", format!("{} rows but m = {}", self.a.len(), self.m)));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != n {
                return Err(shape("A", format!("row {i} has {} entries but dims sum to {n}", row.len())));
            }
        }
        if self.b.len() != self.m {
            return Err(shape("b", format!("length {} but m = {}", self.b.len(), self.m)));
        }
        if self.c.len() != n {
            return Err(shape("c", format!("length {} but dims sum to {n}", self.c.len())));
        }
        if let Some(p) = &self.provenance {
            if p.x_tilde.len() != n || p.s_tilde.len() != n {
                return Err(shape("provenance", format!("interior points must have length {n}")));
            }
        }
        let flat: Vec<f64> = self.a.iter().flatten().copied().collect();
        SocpInstance::new(
            DMatrix::from_row_slice(self.m, n, &flat),
            DVector::from_column_slice(&self.b),
            DVector::from_column_slice(&self.c),
            cone,
        )
        .map_err(|e| shape("A/b/c", e.to_string()))
    }
}

fn parse_error(path: &Path, err: impl std::fmt::Display) -> AlpnError {
    AlpnError::Parse { path: path.display().to_string(), msg: err.to_string() }
}

fn check_version(path: &Path, text: &str, expected: &str) -> Result<()> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse_error(path, e))?;
    match value.get("format_version").and_then(|v| v.as_str()) {
        Some(v) if v == expected => Ok(()),
        Some(v) => Err(AlpnError::Version { found: v.to_string(), expected: expected.to_string() }),
        None => Err(parse_error(path, "missing string field `format_version`")),
    }
}

pub fn read_instance_file(path: impl AsRef<Path>) -> Result<InstanceFileV1> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    check_version(path, &text, INSTANCE_VERSION)?;
    let file: InstanceFileV1 = serde_json::from_str(&text).map_err(|e| parse_error(path, e))?;
    file.to_instance()?;
    Ok(file)
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<SocpInstance> {
    read_instance_file(path)?.to_instance()
}

pub fn write_instance_file(file: &InstanceFileV1, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(file).map_err(|e| parse_error(path.as_ref(), e))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_instance(instance: &SocpInstance, path: impl AsRef<Path>) -> Result<()> {
    write_instance_file(&InstanceFileV1::from_instance(instance, None), path)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualsV1 {
    pub primal_eq: f64,
    pub primal_cone: f64,
    pub dual_cone: f64,
    pub complementarity: f64,
    pub duality_gap: f64,
}

impl From<ResidualBundle> for ResidualsV1 {
    fn from(r: ResidualBundle) -> Self {
        Self {
            primal_eq: r.primal_eq,
            primal_cone: r.primal_cone,
            dual_cone: r.dual_cone,
            complementarity: r.complementarity,
            duality_gap: r.duality_gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateV1 {
    pub y: Vec<f64>,
    pub eta: Vec<f64>,
    pub residuals: ResidualsV1,
}

impl From<&DualCertificate> for CertificateV1 {
    fn from(c: &DualCertificate) -> Self {
        Self { y: c.y.iter().copied().collect(), eta: c.eta.iter().copied().collect(), residuals: c.residuals.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRowV1 {
    pub k: usize,
    pub gamma: f64,
    pub zeta: f64,
    pub b_dist: f64,
    pub cuts_total: usize,
    pub qp_inner_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperplanesV1 {
    pub initial: usize,
    #[serde(rename = "final")]
    pub final_: usize,
    pub final_per_block: Vec<usize>,
}

/// On-disk solve report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFileV1 {
    pub format_version: String,
    pub status: String,
    pub objective: f64,
    pub x: Vec<f64>,
    pub certificate: Option<CertificateV1>,
    pub residuals: ResidualsV1,
    pub iterations: usize,
    pub gamma0: f64,
    pub gamma_escalations: usize,
    pub hyperplanes: HyperplanesV1,
    pub wall_time_seconds: f64,
    pub log: Vec<LogRowV1>,
}

impl From<&SolveReport> for ReportFileV1 {
    fn from(r: &SolveReport) -> Self {
        Self {
            format_version: REPORT_VERSION.to_string(),
            status: r.status.as_str().to_string(),
            objective: r.objective,
            x: r.x.iter().copied().collect(),
            certificate: r.certificate.as_ref().map(CertificateV1::from),
            residuals: r.residuals.into(),
            iterations: r.iterations,
            gamma0: r.gamma0,
            gamma_escalations: r.gamma_escalations,
            hyperplanes: HyperplanesV1 {
                initial: r.initial_hyperplanes,
                final_: r.final_hyperplanes,
                final_per_block: r.final_cut_counts.clone(),
            },
            wall_time_seconds: r.wall_time_seconds,
            log: r
                .log
                .iter()
                .map(|row| LogRowV1 {
                    k: row.k,
                    gamma: row.gamma,
                    zeta: row.zeta,
                    b_dist: row.b_dist,
                    cuts_total: row.cuts_total,
                    qp_inner_iters: row.qp_inner_iters,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Structured,
    CsvLog,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "structured" | "json" => Ok(ReportFormat::Structured),
            "csv-log" | "csv" => Ok(ReportFormat::CsvLog),
            other => Err(format!("unknown report format `{other}` (expected structured or csv-log)")),
        }
    }
}

pub fn report_to_json(report: &SolveReport) -> String {
    let mut text = serde_json::to_string_pretty(&ReportFileV1::from(report)).expect("report fields are finite");
    text.push('\n');
    text
}

pub fn report_to_csv_log(report: &SolveReport) -> String {
    let mut out = String::from(CSV_LOG_HEADER);
    out.push('\n');
    for row in &report.log {
        out.push_str(&format!(
            "{},{:?},{:?},{:?},{},{}\n",
            row.k, row.gamma, row.zeta, row.b_dist, row.cuts_total, row.qp_inner_iters
        ));
    }
    out
}

pub fn write_report(report: &SolveReport, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let text = match format {
        ReportFormat::Structured => report_to_json(report),
        ReportFormat::CsvLog => report_to_csv_log(report),
    };
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<ReportFileV1> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    check_version(path, &text, REPORT_VERSION)?;
    let report: ReportFileV1 = serde_json::from_str(&text).map_err(|e| parse_error(path, e))?;
    if report.log.len() != report.iterations {
        return Err(AlpnError::Shape {
            field: "log".into(),
            msg: format!("{} rows but iterations = {}", report.log.len(), report.iterations),
        });
    }
    Ok(report)
}
