use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use afgl_core::models::ModelKind;
use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use crate::commands::{EvaluationReport, REPORT_FILE};
use crate::outputs::Outputs;

/// Reference `(phi_mean / pi, mse, mu)` per model, shown for context.
pub fn reference(kind: ModelKind) -> (f64, f64, f64) {
    match kind {
        ModelKind::CwganGp => (3.46, 0.047, 0.320),
        ModelKind::CvaeWganGp => (3.50, 0.028, 0.243),
        ModelKind::Cvae => (3.95, 0.027, 0.226),
        ModelKind::Cgan => (4.91, 0.047, 0.152),
    }
}

#[derive(Debug, Serialize)]
pub struct Row {
    pub name: String,
    pub model: Option<ModelKind>,
    pub phi_mean_over_pi: f64,
    pub cl_mse: Option<f64>,
    pub mu: f64,
    pub converged: f64,
    pub reference: Option<(f64, f64, f64)>,
}

fn collect(dir: &Path) -> Result<Vec<(PathBuf, EvaluationReport)>> {
    let entries = std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    let mut subdirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    let mut reports = Vec::new();
    let mut missing = Vec::new();
    for sub in subdirs {
        let path = sub.join(REPORT_FILE);
        if !path.is_file() {
            missing.push(sub.display().to_string());
            continue;
        }
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let report: EvaluationReport =
            serde_json::from_str(&text).with_context(|| format!("malformed report {}", path.display()))?;
        reports.push((sub, report));
    }
    if reports.len() < 2 {
        let mut msg = format!(
            "need at least 2 evaluated models under {}, found {}",
            dir.display(),
            reports.len()
        );
        if !missing.is_empty() {
            let _ = write!(msg, "; no {REPORT_FILE} in: {}", missing.join(", "));
        }
        bail!(msg);
    }
    Ok(reports)
}

pub fn render(rows: &[Row]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<14} {:>12} {:>10} {:>8} {:>10}   {:>10} {:>8} {:>8}",
        "model", "phi_mean ↓", "MSE ↓", "mu ↑", "converged", "ref phi", "ref MSE", "ref mu"
    );
    for r in rows {
        let mse = r.cl_mse.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        let reference = r.reference.map_or(format!("{:>10} {:>8} {:>8}", "-", "-", "-"), |(p, m, u)| {
            format!("{:>10} {:>8.3} {:>8.3}", format!("{p:.2}π"), m, u)
        });
        let _ = writeln!(
            s,
            "{:<14} {:>12} {:>10} {:>8.4} {:>9.1}%   {}",
            r.name,
            format!("{:.3}π", r.phi_mean_over_pi),
            mse,
            r.mu,
            100.0 * r.converged,
            reference
        );
    }
    s
}

pub fn table1(dir: &Path, out_dir: &Path) -> Result<()> {
    let reports = collect(dir)?;
    let rows: Vec<Row> = reports
        .iter()
        .map(|(sub, r)| Row {
            name: r.model.map_or_else(
                || sub.file_name().map_or("?".into(), |n| n.to_string_lossy().into_owned()),
                |k| k.display_name().to_string(),
            ),
            model: r.model,
            phi_mean_over_pi: r.metrics.phi_mean_over_pi,
            cl_mse: r.metrics.cl_mse,
            mu: r.metrics.mu,
            converged: r.metrics.rates.converged,
            reference: r.model.map(reference),
        })
        .collect();
    let text = render(&rows);
    print!("{text}");
    let mut out = Outputs::new(out_dir)?;
    let txt_path = out.file("table1.txt");
    std::fs::write(&txt_path, &text).with_context(|| format!("writing {}", txt_path.display()))?;
    out.write_json("table1.json", &rows)?;
    let sources: Vec<String> = reports.iter().map(|(p, _)| p.display().to_string()).collect();
    out.commit("table1", &json!({ "dir": dir }), json!({ "reports": sources }))
}
