//! Subcommand implementations.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use sbm_spectral::bounds::{spectral_concentration_study, BoundReport, Constants};
use sbm_spectral::cluster::{kmeans_approx, spherical_kmedian, ClusteringResult};
use sbm_spectral::error::{Error, Result};
use sbm_spectral::exec;
use sbm_spectral::experiment::{
    median, replicate_seed, run_dcbm_replicate, run_sbm_replicate, PipelineConfig,
};
use sbm_spectral::metrics::error_report;
use sbm_spectral::model::ModelSpec;
use sbm_spectral::rng::derive_seed;
use sbm_spectral::sampler::{sample_adjacency, AdjacencyMatrix, SeedSpec};
use sbm_spectral::spectral::leading_eigenvectors;

use crate::config::{Cell, ExperimentConfig};

/// Exit policy: 0 full success, 1 configuration or hard error, 2 partial
/// replicate failure (error rows recorded, run completed).
pub enum Outcome {
    Success,
    PartialFailure,
}

/// Metadata written next to each generated edge list.
#[derive(Debug, Serialize, Deserialize)]
pub struct GraphSidecar {
    pub seed: SeedSpec,
    pub model_hash: String,
    pub model: ModelSpec,
    pub config_hash: String,
    pub cell: usize,
    pub replicate: usize,
}

/// Output of the `cluster` subcommand.
#[derive(Debug, Serialize, Deserialize)]
pub struct ClusterOutput {
    pub algorithm: String,
    pub k: usize,
    pub result: ClusteringResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_hash: Option<String>,
    pub eigen_residual: f64,
    pub tie_at_k: bool,
    pub wall_ms: f64,
}

pub fn cmd_generate(config_path: &Path, out_dir: &Path) -> Result<Outcome> {
    let cfg = ExperimentConfig::load(config_path)?;
    let hash = cfg.hash();
    fs::create_dir_all(out_dir)?;
    for cell in cfg.cells()? {
        let spec = cell.build_model(cfg.master_seed)?;
        let model_hash = spec.hash();
        for rep in 0..cfg.replicates {
            let seed = replicate_seed(cfg.master_seed, cell.index as u64, rep as u64);
            let a = sample_adjacency(&spec, seed);
            let stem = format!("cell{:03}_rep{:03}", cell.index, rep);
            let edge_path = out_dir.join(format!("{stem}.edges"));
            let mut w = BufWriter::new(fs::File::create(&edge_path)?);
            a.write_edge_list(&mut w)?;
            w.flush()?;
            let sidecar = GraphSidecar {
                seed,
                model_hash: model_hash.clone(),
                model: spec.clone(),
                config_hash: hash.clone(),
                cell: cell.index,
                replicate: rep,
            };
            fs::write(
                out_dir.join(format!("{stem}.json")),
                serde_json::to_string_pretty(&sidecar)? + "\n",
            )?;
        }
    }
    Ok(Outcome::Success)
}

pub struct ClusterArgs {
    pub graph: PathBuf,
    pub k: usize,
    pub algorithm: String,
    pub pipeline: PipelineConfig,
    pub out: Option<PathBuf>,
}

pub fn cmd_cluster(args: &ClusterArgs) -> Result<Outcome> {
    let start = Instant::now();
    let file = fs::File::open(&args.graph)?;
    let a = AdjacencyMatrix::read_edge_list(BufReader::new(file))?;
    let sidecar = read_sidecar_for(&args.graph)?;
    let emb = leading_eigenvectors(&a, args.k, &args.pipeline.eigen)?;
    let result = match args.algorithm.as_str() {
        "kmeans-spectral" => kmeans_approx(emb.u(), args.k, &args.pipeline.cluster)?,
        "spherical-kmedian" => spherical_kmedian(emb.u(), args.k, &args.pipeline.cluster)?.0,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown algorithm {other:?}; expected kmeans-spectral or spherical-kmedian"
            )))
        }
    };
    let output = ClusterOutput {
        algorithm: args.algorithm.clone(),
        k: args.k,
        result,
        model_hash: sidecar.as_ref().map(|s| s.model_hash.clone()),
        eigen_residual: emb.residual(),
        tie_at_k: emb.tie_at_k(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let json = serde_json::to_string_pretty(&output)? + "\n";
    match &args.out {
        Some(path) => fs::write(path, json)?,
        None => print!("{json}"),
    }
    Ok(Outcome::Success)
}

fn read_sidecar_for(graph: &Path) -> Result<Option<GraphSidecar>> {
    let sidecar_path = graph.with_extension("json");
    if !sidecar_path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(sidecar_path)?;
    Ok(Some(serde_json::from_str(&text)?))
}

pub fn cmd_evaluate(result_path: &Path, truth_path: &Path, out: Option<&Path>) -> Result<Outcome> {
    let output: ClusterOutput = serde_json::from_str(&fs::read_to_string(result_path)?)?;
    let sidecar: GraphSidecar = serde_json::from_str(&fs::read_to_string(truth_path)?)?;
    if let Some(hash) = &output.model_hash {
        if *hash != sidecar.model_hash {
            return Err(Error::InvalidParameter(
                "model hash mismatch between clustering result and truth sidecar; \
                 refusing to mix outputs from different configurations"
                    .into(),
            ));
        }
    }
    let truth = sidecar.model.membership();
    let report = error_report(output.result.labels(), truth)?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    if let Some(path) = out {
        fs::write(path, json)?;
    } else {
        print!("{json}");
    }
    // one CSV row on stdout for scripting
    println!(
        "n,k,l,l_tilde,mismatched\n{},{},{},{},{}",
        truth.n(),
        truth.k(),
        report.l,
        report.l_tilde,
        report.misclustered_nodes.len()
    );
    Ok(Outcome::Success)
}

pub fn cmd_bounds(config_path: &Path, out: Option<&Path>) -> Result<Outcome> {
    let cfg = ExperimentConfig::load(config_path)?;
    let conc = cfg.concentration.clone().unwrap_or_default();
    let study = spectral_concentration_study(
        &conc.grid,
        conc.replicates,
        derive_seed(cfg.master_seed, &[0xb0]),
    )?;
    let mut value = serde_json::to_value(&study)?;
    value
        .as_object_mut()
        .expect("study serializes to an object")
        .insert("config_hash".into(), serde_json::Value::String(cfg.hash()));
    let json = serde_json::to_string_pretty(&value)? + "\n";
    match out {
        Some(path) => fs::write(path, json)?,
        None => print!("{json}"),
    }
    Ok(Outcome::Success)
}

const RESULTS_HEADER: &str = "cell,replicate,preset,n,k,alpha,lambda,clique_size,seed,edges,\
l,l_tilde,sum_sk_over_nk,norm_a_minus_p,ratio_sqrt_d,procrustes,\
dk_lhs,dk_rhs,dk_holds,cond_lhs,cond_rhs,cond_holds,bound_lhs,bound_rhs,bound_holds,\
mcsherry_ref,i_zero,tie_at_k,error,\
sample_ms,eigen_ms,cluster_ms,total_ms,config_hash";

const BOUNDS_HEADER: &str = "cell,replicate,name,lhs,rhs,holds,near_boundary,config_hash";

enum ReplicateRow {
    Sbm(Box<sbm_spectral::experiment::SbmReplicate>),
    Dcbm(Box<sbm_spectral::experiment::DcbmReplicate>),
    Failed(String),
}

pub fn cmd_experiment(config_path: &Path, out_dir: &Path) -> Result<Outcome> {
    let cfg = ExperimentConfig::load(config_path)?;
    let hash = cfg.hash();
    fs::create_dir_all(out_dir)?;

    let constants = match &cfg.constants {
        Some(c) => Constants::with_overrides(c.c_empirical, c.c_sbm, c.c_dcbm),
        None => {
            // small built-in concentration run, seeded from the master seed
            let study = spectral_concentration_study(
                &[(300, 5.0), (600, 5.0)],
                20,
                derive_seed(cfg.master_seed, &[0xb0]),
            )?;
            study.constants()
        }
    };

    let mut results = String::from(RESULTS_HEADER);
    results.push('\n');
    let mut bound_rows = String::from(BOUNDS_HEADER);
    bound_rows.push('\n');
    let mut partial_failure = false;
    let mut cell_summaries = Vec::new();

    for cell in cfg.cells()? {
        let spec = cell.build_model(cfg.master_seed)?;
        let pop = spec.population_eigen()?;
        if pop.is_rank_deficient() {
            return Err(Error::RankDeficient {
                rank: pop.rank(),
                k: spec.k(),
            });
        }
        let stats = if spec.is_degree_corrected() {
            Some(spec.heterogeneity_stats()?)
        } else {
            None
        };
        let pipeline = PipelineConfig {
            eigen: cfg.eigen.to_eigen_config(),
            cluster: cfg.solver.to_approx_config(),
            epsilon: cfg.solver.epsilon_target,
            constants,
            norm_rtol: 1e-6,
        };
        let rows: Vec<ReplicateRow> = exec::map_indexed(cfg.replicates, |rep| {
            let seed = replicate_seed(cfg.master_seed, cell.index as u64, rep as u64);
            match &stats {
                Some(stats) => match run_dcbm_replicate(&spec, &pop, stats, seed, &pipeline) {
                    Ok(r) => ReplicateRow::Dcbm(Box::new(r)),
                    Err(e) => ReplicateRow::Failed(e.to_string()),
                },
                None => match run_sbm_replicate(&spec, &pop, seed, &pipeline) {
                    Ok(r) => ReplicateRow::Sbm(Box::new(r)),
                    Err(e) => ReplicateRow::Failed(e.to_string()),
                },
            }
        });

        let mut cell_l = Vec::new();
        let mut dk_hold_count = 0usize;
        let mut ok_count = 0usize;
        for (rep, row) in rows.iter().enumerate() {
            let seed = replicate_seed(cfg.master_seed, cell.index as u64, rep as u64);
            match row {
                ReplicateRow::Sbm(r) => {
                    ok_count += 1;
                    cell_l.push(r.errors.l);
                    dk_hold_count += usize::from(r.davis_kahan.holds);
                    results.push_str(&sbm_row(&cell, rep, seed, r, &hash));
                    let mut reports: Vec<&BoundReport> = vec![&r.condition, &r.exception_bound];
                    reports.push(&r.hamming.inequality);
                    if let Some((lt, l)) = &r.corollary {
                        reports.push(lt);
                        reports.push(l);
                    }
                    push_bound_rows(&mut bound_rows, &cfg, &cell, rep, &reports, &hash);
                    push_dk_row(&mut bound_rows, &cfg, &cell, rep, r.davis_kahan, &hash);
                }
                ReplicateRow::Dcbm(r) => {
                    ok_count += 1;
                    cell_l.push(r.errors.l);
                    dk_hold_count += usize::from(r.davis_kahan.holds);
                    results.push_str(&dcbm_row(&cell, rep, seed, r, &hash));
                    let reports: Vec<&BoundReport> =
                        vec![&r.condition, &r.l_bound, &r.zero_rows, &r.proof_sets];
                    push_bound_rows(&mut bound_rows, &cfg, &cell, rep, &reports, &hash);
                    push_dk_row(&mut bound_rows, &cfg, &cell, rep, r.davis_kahan, &hash);
                }
                ReplicateRow::Failed(msg) => {
                    partial_failure = true;
                    results.push_str(&error_row(&cell, rep, seed, msg, &hash));
                }
            }
        }
        cell_summaries.push(serde_json::json!({
            "cell": cell.index,
            "preset": cell.preset,
            "n": cell.n,
            "k": cell.k,
            "alpha": cell.alpha_n,
            "lambda": cell.lambda,
            "clique_size": cell.clique_size,
            "replicates_ok": ok_count,
            "replicates_failed": cfg.replicates - ok_count,
            "median_l": if cell_l.is_empty() { serde_json::Value::Null } else { median(&cell_l).into() },
            "mean_l": if cell_l.is_empty() { serde_json::Value::Null } else { (cell_l.iter().sum::<f64>() / cell_l.len() as f64).into() },
            "davis_kahan_holds": dk_hold_count,
        }));
    }

    fs::write(out_dir.join("results.csv"), &results)?;
    fs::write(out_dir.join("bounds.csv"), &bound_rows)?;
    let summary = serde_json::json!({
        "config_hash": hash,
        "C_empirical": constants.c_empirical,
        "c_sbm": constants.c_sbm,
        "c_dcbm": constants.c_dcbm,
        "cells": cell_summaries,
    });
    fs::write(
        out_dir.join("study.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(if partial_failure {
        Outcome::PartialFailure
    } else {
        Outcome::Success
    })
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn row_prefix(cell: &Cell, rep: usize, seed: SeedSpec) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        cell.index,
        rep,
        cell.preset,
        cell.n,
        cell.k,
        cell.alpha_n,
        opt(cell.lambda),
        opt(cell.clique_size),
        seed.master_seed,
    )
}

fn sbm_row(
    cell: &Cell,
    rep: usize,
    seed: SeedSpec,
    r: &sbm_spectral::experiment::SbmReplicate,
    hash: &str,
) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},,{},{},{},{},{}\n",
        row_prefix(cell, rep, seed),
        r.num_edges,
        r.errors.l,
        r.errors.l_tilde,
        r.sum_sk_over_nk,
        r.norm_a_minus_p,
        r.ratio_sqrt_d,
        r.procrustes_distance,
        r.davis_kahan.lhs,
        r.davis_kahan.rhs,
        r.davis_kahan.holds,
        r.condition.lhs,
        r.condition.rhs,
        r.condition.holds,
        r.exception_bound.lhs,
        r.exception_bound.rhs,
        r.exception_bound.holds,
        opt(r.mcsherry_reference),
        0, // i_zero: no zero-row handling in the k-means pipeline
        r.tie_at_k,
        r.timings.sample_ms,
        r.timings.eigen_ms,
        r.timings.cluster_ms,
        r.timings.total_ms,
        hash
    )
}

fn dcbm_row(
    cell: &Cell,
    rep: usize,
    seed: SeedSpec,
    r: &sbm_spectral::experiment::DcbmReplicate,
    hash: &str,
) -> String {
    format!(
        "{},{},{},{},,{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},,{},{},{},{},{}\n",
        row_prefix(cell, rep, seed),
        r.num_edges,
        r.errors.l,
        r.errors.l_tilde,
        r.norm_a_minus_p,
        r.ratio_sqrt_d,
        r.procrustes_distance,
        r.davis_kahan.lhs,
        r.davis_kahan.rhs,
        r.davis_kahan.holds,
        r.condition.lhs,
        r.condition.rhs,
        r.condition.holds,
        r.l_bound.lhs,
        r.l_bound.rhs,
        r.l_bound.holds,
        opt(r.mcsherry_reference),
        r.i_zero_count,
        r.tie_at_k,
        r.timings.sample_ms,
        r.timings.eigen_ms,
        r.timings.cluster_ms,
        r.timings.total_ms,
        hash
    )
}

fn error_row(cell: &Cell, rep: usize, seed: SeedSpec, msg: &str, hash: &str) -> String {
    let sanitized = msg.replace([',', '\n'], ";");
    format!(
        "{},,,,,,,,,,,,,,,,,,,{sanitized},,,,,{hash}\n",
        row_prefix(cell, rep, seed),
    )
}

fn push_bound_rows(
    out: &mut String,
    cfg: &ExperimentConfig,
    cell: &Cell,
    rep: usize,
    reports: &[&BoundReport],
    hash: &str,
) {
    for r in reports {
        if !cfg.studies.is_empty() && !cfg.studies.iter().any(|s| s == &r.name) {
            continue;
        }
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            cell.index, rep, r.name, r.lhs, r.rhs, r.holds, r.near_boundary, hash
        ));
    }
}

fn push_dk_row(
    out: &mut String,
    cfg: &ExperimentConfig,
    cell: &Cell,
    rep: usize,
    dk: sbm_spectral::experiment::Check,
    hash: &str,
) {
    let name = "davis-kahan";
    if !cfg.studies.is_empty() && !cfg.studies.iter().any(|s| s == name) {
        return;
    }
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{}\n",
        cell.index, rep, name, dk.lhs, dk.rhs, dk.holds, false, hash
    ));
}
