use std::path::Path;

use afgl_core::aero::SolveOutcome;
use afgl_core::geometry::{build_dataset, read_shapes_csv, write_shapes_csv, Dataset};
use afgl_core::latent::{
    emit_airfoil_grid_svg, emit_scatter_svg, extract_latents, label_structure_score, tsne,
};
use afgl_core::metrics::MetricsReport;
use afgl_core::models::ModelKind;
use afgl_core::parallel;
use afgl_core::trainer::{
    evaluate_generation, generate_with_latents, train_with, Checkpoint, GenerationRequest,
};
use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::outputs::Outputs;

pub const REPORT_FILE: &str = "report.json";

/// What `evaluate` writes and `table1` reads.
#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model: Option<ModelKind>,
    pub shapes: String,
    pub metrics: MetricsReport,
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    ensure!(path.is_file(), "{what} {} does not exist", path.display());
    Ok(())
}

pub fn gen_dataset(cfg: ExperimentConfig) -> Result<()> {
    let out_dir = cfg.out_dir()?;
    let solver = cfg.solver()?;
    let mut data = build_dataset(&cfg.grid(), &solver, cfg.dataset_seed, cfg.execution)?;
    if let Some(n) = cfg.subsample {
        ensure!(n >= 1, "subsample must be at least 1");
        data = data.subsample(n, cfg.dataset_seed);
    }
    let mut out = Outputs::new(&out_dir)?;
    data.write_csv(&out.file("dataset.csv"))?;
    println!(
        "{} airfoils written to {}",
        data.len(),
        out_dir.join("dataset.csv").display()
    );
    out.commit("gen-dataset", &cfg, json!({ "dataset": data.provenance, "rows": data.len() }))
}

pub fn train(cfg: ExperimentConfig, dataset: &Path, resume: Option<&Path>) -> Result<()> {
    require_file(dataset, "dataset")?;
    let out_dir = cfg.out_dir()?;
    let data = Dataset::read_csv(dataset)?;
    let start = match resume {
        Some(path) => {
            require_file(path, "checkpoint")?;
            let mut ck = Checkpoint::load(path)?;
            ensure!(
                ck.kind() == cfg.model,
                "checkpoint holds a {} model but the config asks for {}",
                ck.kind(),
                cfg.model
            );
            ck.config.epochs = cfg.epochs;
            ck
        }
        None => Checkpoint::init(&cfg.train_config())?,
    };
    let start_epoch = start.epoch;
    let mut out = Outputs::new(&out_dir)?;
    let mut intermediate = Vec::new();
    let result = train_with(&data, start, |ck| {
        let path = out.file(&format!("checkpoint-e{}.afg", ck.epoch));
        intermediate.push(path.clone());
        ck.save(&path)
    })?;
    result.checkpoint.save(&out.file("checkpoint.afg"))?;
    result.log.write_csv(&out.file("loss.csv"))?;
    println!(
        "trained {} from epoch {start_epoch} to {} ({} loss rows)",
        cfg.model,
        result.checkpoint.epoch,
        result.log.rows.len()
    );
    let seed = result.checkpoint.config.seed;
    let resolved = result.checkpoint.config.clone();
    out.commit(
        "train",
        &cfg,
        json!({
            "dataset": dataset,
            "dataset_rows": data.len(),
            "resumed_from": resume,
            "start_epoch": start_epoch,
            "final_epoch": result.checkpoint.epoch,
            "seed": seed,
            "train_config": resolved,
        }),
    )
}

fn read_latents(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (i == 0 && line.trim_start().starts_with('z')) {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("{} line {}", path.display(), i + 1))?;
        rows.push(row);
    }
    ensure!(!rows.is_empty(), "{} holds no latent vectors", path.display());
    Ok(rows)
}

pub fn generate(cfg: ExperimentConfig, checkpoint: &Path, latents: Option<&Path>) -> Result<()> {
    require_file(checkpoint, "checkpoint")?;
    let out_dir = cfg.out_dir()?;
    let ck = Checkpoint::load(checkpoint)?;
    let mut request = GenerationRequest::new(cfg.labels.clone(), cfg.count, cfg.gen_seed);
    if let Some(path) = latents {
        request.latents = Some(read_latents(path)?);
    }
    let solver = cfg.solver()?;
    let generated = generate_with_latents(&ck, &request)?;
    let outcomes = parallel::map(&generated.shapes, cfg.execution, |s| solver.solve(s))
        .into_iter()
        .collect::<afgl_core::Result<Vec<SolveOutcome>>>()?;

    let mut out = Outputs::new(&out_dir)?;
    write_shapes_csv(&out.file("shapes.csv"), &generated.shapes)?;
    emit_airfoil_grid_svg(&generated.shapes, &outcomes, &out.file("shapes.svg"))?;
    let converged = outcomes.iter().filter(|o| o.is_converged()).count();
    println!(
        "{} shapes from a {} checkpoint ({converged} converged)",
        generated.shapes.len(),
        ck.kind()
    );
    out.commit(
        "generate",
        &cfg,
        json!({
            "checkpoint": checkpoint,
            "model": ck.kind(),
            "checkpoint_epoch": ck.epoch,
            "request": request,
        }),
    )
}

/// Model kind recorded by `generate` next to a shape file.
fn sibling_model(shapes: &Path) -> Option<ModelKind> {
    let prov = shapes.parent()?.join("generate.provenance.json");
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(prov).ok()?).ok()?;
    serde_json::from_value(value.get("details")?.get("model")?.clone()).ok()
}

pub fn evaluate(cfg: ExperimentConfig, shapes_path: &Path, model: Option<ModelKind>) -> Result<()> {
    require_file(shapes_path, "shape file")?;
    let out_dir = cfg.out_dir()?;
    let shapes = read_shapes_csv(shapes_path)?;
    if shapes.is_empty() {
        bail!("{} holds no shapes", shapes_path.display());
    }
    let requested: Vec<f64> = shapes.iter().map(|s| s.label().unwrap_or(f64::NAN)).collect();
    let solver = cfg.solver()?;
    let metrics = evaluate_generation(&shapes, &solver, &requested, cfg.execution)?;
    let model = model.or_else(|| sibling_model(shapes_path));

    let mut out = Outputs::new(&out_dir)?;
    emit_airfoil_grid_svg(&shapes, &metrics.outcomes, &out.file("evaluation.svg"))?;
    let report = EvaluationReport {
        model,
        shapes: shapes_path.display().to_string(),
        metrics,
    };
    out.write_json(REPORT_FILE, &report)?;
    let m = &report.metrics;
    println!(
        "phi_mean = {:.3} pi, mse = {}, mu = {:.4}, converged {}/{}",
        m.phi_mean_over_pi,
        m.cl_mse.map_or("n/a".into(), |v| format!("{v:.5}")),
        m.mu,
        m.n_converged,
        m.n_total
    );
    out.commit("evaluate", &cfg, json!({ "shapes": shapes_path, "model": model }))
}

pub fn latent(cfg: ExperimentConfig, checkpoint: &Path, dataset: &Path) -> Result<()> {
    require_file(checkpoint, "checkpoint")?;
    require_file(dataset, "dataset")?;
    let out_dir = cfg.out_dir()?;
    let ck = Checkpoint::load(checkpoint)?;
    let data = Dataset::read_csv(dataset)?;
    let cloud = extract_latents(&ck, &data, cfg.tsne_seed)?;
    let score = label_structure_score(&cloud)?;
    let tsne_cfg = cfg.tsne();
    let projection = tsne(&cloud.points, &tsne_cfg, cfg.execution)?;

    let mut out = Outputs::new(&out_dir)?;
    cloud.write_csv(&out.file("latents.csv"))?;
    let mut csv = String::from("x,y,cl\n");
    for (i, l) in cloud.labels.iter().enumerate() {
        let p = projection.points.row(i);
        csv.push_str(&format!(
            "{},{},{}\n",
            afgl_core::geometry::format_g17(p[0]),
            afgl_core::geometry::format_g17(p[1]),
            afgl_core::geometry::format_g17(*l)
        ));
    }
    let proj_path = out.file("projection.csv");
    std::fs::write(&proj_path, csv).with_context(|| format!("writing {}", proj_path.display()))?;
    emit_scatter_svg(&projection.points, &cloud.labels, &out.file("latent.svg"))?;
    let summary = json!({
        "model": ck.kind(),
        "source": cloud.source,
        "points": cloud.len(),
        "latent_dim": cloud.dim(),
        "structure_score": score,
        "tsne_kl": projection.kl,
    });
    out.write_json("structure.json", &summary)?;
    println!("{} latents ({:?}), structure score {score:.3}", cloud.len(), cloud.source);
    out.commit(
        "latent",
        &cfg,
        json!({ "checkpoint": checkpoint, "dataset": dataset, "tsne": tsne_cfg }),
    )
}
