use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use robustkc::metrics;
use robustkc::modelselect;
use robustkc::pipeline::{self, ClusterCount, PipelineConfig};
use robustkc::spectral::KMeansConfig;
use robustkc::synth::{self, Preset, SyntheticDataset};
use robustkc::types::{DenoiseMethod, Label};

use crate::io;
use crate::{EXIT_INPUT, EXIT_PIPELINE};

#[derive(Args)]
pub struct BenchArgs {
    /// Suite: table3 | fig6 | fig9 | weaksep.
    #[arg(long)]
    pub suite: String,
    /// Seeds per cell.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value = "bench-out")]
    pub out_dir: PathBuf,
    /// fig6 scale: `desk` (reduced sizes) or `paper` (full axes).
    #[arg(long, default_value = "desk")]
    pub scale: String,
    /// Comma-separated algorithm filter (robust-sc, robust-sdp, kmeans++,
    /// vanilla-sc).
    #[arg(long)]
    pub algorithms: Option<String>,
    /// Denoiser whose solution feeds the fig9 eigengap (lp | sdp).
    #[arg(long, default_value = "sdp")]
    pub method: String,
    /// SDP iteration budget for bench runs.
    #[arg(long, default_value_t = 200)]
    pub sdp_iters: usize,
}

/// One observation per row.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub schema_version: u32,
    pub suite: String,
    pub dataset: String,
    pub algorithm: String,
    pub seed: u64,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub n: usize,
    pub r_true: usize,
    pub r_used: usize,
    pub inlier_acc: f64,
    pub outlier_acc: f64,
    pub overall_acc: f64,
    pub time_ms: f64,
}

#[derive(Serialize, Deserialize)]
pub struct SummaryCell {
    pub dataset: String,
    pub algorithm: String,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub seeds: usize,
    pub mean_inlier: f64,
    pub std_inlier: f64,
    pub mean_outlier: f64,
    pub std_outlier: f64,
    pub mean_overall: f64,
    pub std_overall: f64,
    pub mean_time_ms: f64,
}

#[derive(Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub suite: String,
    pub generated_by: String,
    pub cells: Vec<SummaryCell>,
}

pub fn run(args: BenchArgs) -> i32 {
    match run_inner(args) {
        Ok(()) => 0,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

fn run_inner(args: BenchArgs) -> Result<(), (i32, String)> {
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| (EXIT_INPUT, format!("cannot create out dir: {e}")))?;
    let rows = match args.suite.as_str() {
        "table3" => suite_table3(&args)?,
        "fig6" => suite_fig6(&args)?,
        "fig9" => suite_fig9(&args)?,
        "weaksep" => suite_weaksep(&args)?,
        other => return Err((EXIT_INPUT, format!("unknown suite `{other}`"))),
    };
    write_outputs(&args.out_dir, &args.suite, &rows)?;
    Ok(())
}

fn algorithms(args: &BenchArgs, default: &[&'static str]) -> Vec<String> {
    match &args.algorithms {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => default.iter().map(|s| s.to_string()).collect(),
    }
}

fn score(pred: &[Label], truth: &[Label]) -> (f64, f64, f64) {
    match metrics::evaluate(pred, truth) {
        Ok(rep) => (rep.inlier_accuracy, rep.outlier_accuracy, rep.overall_accuracy),
        Err(_) => (0.0, 0.0, 0.0),
    }
}

/// Run one named algorithm on a dataset; returns (labels, r_used).
fn run_algorithm(
    algo: &str,
    ds: &SyntheticDataset<f64>,
    r: usize,
    seed: u64,
    sdp_iters: usize,
) -> Result<(Vec<Label>, usize), String> {
    match algo {
        "robust-sc" | "robust-sdp" => {
            let method =
                if algo == "robust-sc" { DenoiseMethod::Lp } else { DenoiseMethod::Sdp };
            let mut cfg = PipelineConfig::new(ClusterCount::Fixed(r), method).with_seed(seed);
            cfg.admm.max_iters = sdp_iters;
            let out = pipeline::run(&ds.data, &cfg).map_err(|e| e.to_string())?;
            Ok((out.result.labels, out.result.r))
        }
        "kmeans++" => {
            let cfg = KMeansConfig { seed, ..Default::default() };
            Ok((pipeline::kmeans_baseline(&ds.data, r, &cfg).map_err(|e| e.to_string())?, r))
        }
        "vanilla-sc" => {
            let cfg = KMeansConfig { seed, ..Default::default() };
            Ok((pipeline::vanilla_sc_baseline(&ds.data, r, &cfg).map_err(|e| e.to_string())?, r))
        }
        other => Err(format!("unknown algorithm `{other}`")),
    }
}

fn suite_table3(args: &BenchArgs) -> Result<Vec<ResultRow>, (i32, String)> {
    let presets =
        [Preset::Table1Balanced, Preset::Table1Unbalanced, Preset::Table1Ellipsoidal];
    let algos = algorithms(args, &["robust-sc", "robust-sdp", "kmeans++", "vanilla-sc"]);
    let mut cells = Vec::new();
    for preset in presets {
        for algo in &algos {
            for seed in 0..args.seeds {
                cells.push((preset, algo.clone(), seed));
            }
        }
    }
    let rows: Vec<ResultRow> = cells
        .par_iter()
        .map(|(preset, algo, seed)| {
            let ds = synth::gen_preset::<f64>(*preset, *seed);
            let start = Instant::now();
            let (labels, r_used) =
                run_algorithm(algo, &ds, preset.r(), *seed, args.sdp_iters)
                    .unwrap_or_else(|e| panic!("{algo} failed: {e}"));
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let (inl, out, ovl) = score(&labels, &ds.true_labels);
            ResultRow {
                schema_version: 1,
                suite: "table3".into(),
                dataset: preset.name().into(),
                algorithm: algo.clone(),
                seed: *seed,
                sweep_param: "none".into(),
                sweep_value: 0.0,
                n: ds.data.n(),
                r_true: preset.r(),
                r_used,
                inlier_acc: inl,
                outlier_acc: out,
                overall_acc: ovl,
                time_ms: elapsed,
            }
        })
        .collect();
    Ok(rows)
}

fn suite_fig6(args: &BenchArgs) -> Result<Vec<ResultRow>, (i32, String)> {
    let paper = match args.scale.as_str() {
        "paper" => true,
        "desk" => false,
        other => return Err((EXIT_INPUT, format!("unknown scale `{other}`"))),
    };
    let per_cluster = if paper { 400 } else { 100 };
    let (r_axis, m_axis, s_axis): (Vec<usize>, Vec<usize>, Vec<f64>) = if paper {
        (
            vec![5, 10, 15, 20, 25],
            vec![0, 400, 800, 1200, 1600],
            vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
        )
    } else {
        // quarter-size clusters with the outlier counts scaled to match the
        // paper's m/n ratios
        (vec![5, 15, 25], vec![0, 100, 400], vec![2.0, 3.0, 5.0, 8.0])
    };
    let default_r = 15usize;
    let default_m = if paper { 400 } else { 100 };
    let default_s = 5.0f64;
    let algos = algorithms(args, &["robust-sc", "kmeans++", "vanilla-sc"]);

    #[derive(Clone)]
    struct Cell {
        sweep: &'static str,
        value: f64,
        r: usize,
        m: usize,
        s: f64,
    }
    let mut cells = Vec::new();
    for &r in &r_axis {
        cells.push(Cell { sweep: "r", value: r as f64, r, m: default_m, s: default_s });
    }
    for &m in &m_axis {
        cells.push(Cell { sweep: "m", value: m as f64, r: default_r, m, s: default_s });
    }
    for &s in &s_axis {
        cells.push(Cell { sweep: "s", value: s, r: default_r, m: default_m, s });
    }

    let mut jobs = Vec::new();
    for cell in &cells {
        for algo in &algos {
            for seed in 0..args.seeds {
                jobs.push((cell.clone(), algo.clone(), seed));
            }
        }
    }
    let rows: Vec<ResultRow> = jobs
        .par_iter()
        .map(|(cell, algo, seed)| {
            let ds =
                synth::gen_simplex::<f64>(cell.r, cell.s, per_cluster, cell.m, 10.0, None, *seed)
                    .expect("valid simplex parameters");
            let start = Instant::now();
            let (labels, r_used) = run_algorithm(algo, &ds, cell.r, *seed, args.sdp_iters)
                .unwrap_or_else(|e| panic!("{algo} failed: {e}"));
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let (inl, out, ovl) = score(&labels, &ds.true_labels);
            ResultRow {
                schema_version: 1,
                suite: "fig6".into(),
                dataset: format!("simplex-r{}-m{}-s{}", cell.r, cell.m, cell.s),
                algorithm: algo.clone(),
                seed: *seed,
                sweep_param: cell.sweep.into(),
                sweep_value: cell.value,
                n: ds.data.n(),
                r_true: cell.r,
                r_used,
                inlier_acc: inl,
                outlier_acc: out,
                overall_acc: ovl,
                time_ms: elapsed,
            }
        })
        .collect();
    Ok(rows)
}

fn suite_fig9(args: &BenchArgs) -> Result<Vec<ResultRow>, (i32, String)> {
    let method = match args.method.as_str() {
        "lp" => DenoiseMethod::Lp,
        "sdp" => DenoiseMethod::Sdp,
        other => return Err((EXIT_INPUT, format!("unknown method `{other}`"))),
    };
    let presets =
        [Preset::Table1Balanced, Preset::Table1Unbalanced, Preset::Table1Ellipsoidal];
    let mut rows = Vec::new();
    let mut spectra: Vec<(String, u64, Vec<f64>)> = Vec::new();
    for preset in presets {
        for seed in 0..args.seeds {
            let ds = synth::gen_preset::<f64>(preset, seed);
            let start = Instant::now();
            let mut cfg =
                PipelineConfig::new(ClusterCount::Fixed(preset.r()), method).with_seed(seed);
            cfg.admm.max_iters = args.sdp_iters;
            let out = pipeline::run(&ds.data, &cfg).map_err(|e| (EXIT_PIPELINE, e.to_string()))?;
            // eigengap on the solution this run produced: rebuild the
            // denoised matrix at the selected parameters
            let k = robustkc::kernel::gaussian_kernel(&ds.data, out.theta)
                .map_err(|e| (EXIT_PIPELINE, e.to_string()))?;
            let x = match method {
                DenoiseMethod::Lp => robustkc::denoise::lp_denoise(&k, out.gamma)
                    .map_err(|e| (EXIT_PIPELINE, e.to_string()))?,
                DenoiseMethod::Sdp => {
                    robustkc::denoise::sdp_denoise(&k, out.gamma, &cfg.admm)
                        .map_err(|e| (EXIT_PIPELINE, e.to_string()))?
                        .0
                }
            };
            let rep = modelselect::estimate_r(&x, 0.8, 10)
                .map_err(|e| (EXIT_PIPELINE, e.to_string()))?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            spectra.push((preset.name().into(), seed, rep.laplacian_eigenvalues.clone()));
            let (inl, outa, ovl) = score(&out.result.labels, &ds.true_labels);
            rows.push(ResultRow {
                schema_version: 1,
                suite: "fig9".into(),
                dataset: preset.name().into(),
                algorithm: format!("eigengap-{}", args.method),
                seed,
                sweep_param: "r_hat".into(),
                sweep_value: rep.r_hat as f64,
                n: ds.data.n(),
                r_true: preset.r(),
                r_used: rep.r_hat,
                inlier_acc: inl,
                outlier_acc: outa,
                overall_acc: ovl,
                time_ms: elapsed,
            });
        }
    }
    // tidy spectra file: dataset,seed,index,eigenvalue
    let mut buf = String::from("dataset,seed,index,eigenvalue\n");
    for (name, seed, evs) in &spectra {
        for (i, ev) in evs.iter().enumerate() {
            buf.push_str(&format!("{name},{seed},{i},{}\n", io::format_float(*ev)));
        }
    }
    io::write_atomic(&args.out_dir.join("fig9_spectra.csv"), buf.as_bytes())
        .map_err(|e| (EXIT_INPUT, format!("cannot write spectra: {e}")))?;
    Ok(rows)
}

fn suite_weaksep(args: &BenchArgs) -> Result<Vec<ResultRow>, (i32, String)> {
    let deltas = [5.0f64, 4.0, 3.0, 2.0, 1.0];
    let mut jobs = Vec::new();
    for &d12 in &deltas {
        for seed in 0..args.seeds {
            jobs.push((d12, seed));
        }
    }
    let rows: Vec<ResultRow> = jobs
        .par_iter()
        .map(|&(d12, seed)| {
            let ds = synth::gen_weak_separation::<f64>(5.0, d12, 6, 100, seed)
                .expect("valid weak-separation parameters");
            let start = Instant::now();
            let cfg =
                PipelineConfig::new(ClusterCount::Auto { max_r: 10 }, DenoiseMethod::Lp)
                    .with_seed(seed);
            let out = pipeline::run(&ds.data, &cfg).expect("pipeline run");
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            // merged ground truth: clusters 1 and 2 become one
            let merged: Vec<Label> = ds
                .true_labels
                .iter()
                .map(|l| match l {
                    Label::Cluster(2) => Label::Cluster(1),
                    other => *other,
                })
                .collect();
            let against = if d12 <= 2.0 { &merged } else { &ds.true_labels };
            let (inl, outa, ovl) = score(&out.result.labels, against);
            ResultRow {
                schema_version: 1,
                suite: "weaksep".into(),
                dataset: format!("weaksep-d12-{d12}"),
                algorithm: "robust-sc-auto".into(),
                seed,
                sweep_param: "delta12".into(),
                sweep_value: d12,
                n: ds.data.n(),
                r_true: 6,
                r_used: out.result.r,
                inlier_acc: inl,
                outlier_acc: outa,
                overall_acc: ovl,
                time_ms: elapsed,
            }
        })
        .collect();
    Ok(rows)
}

fn write_outputs(dir: &Path, suite: &str, rows: &[ResultRow]) -> Result<(), (i32, String)> {
    let mut csv = String::from(
        "schema_version,suite,dataset,algorithm,seed,sweep_param,sweep_value,n,r_true,r_used,inlier_acc,outlier_acc,overall_acc,time_ms\n",
    );
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.schema_version,
            r.suite,
            r.dataset,
            r.algorithm,
            r.seed,
            r.sweep_param,
            io::format_float(r.sweep_value),
            r.n,
            r.r_true,
            r.r_used,
            io::format_float(r.inlier_acc),
            io::format_float(r.outlier_acc),
            io::format_float(r.overall_acc),
            io::format_float(r.time_ms),
        ));
    }
    io::write_atomic(&dir.join("results.csv"), csv.as_bytes())
        .map_err(|e| (EXIT_INPUT, format!("cannot write results: {e}")))?;

    // group rows into summary cells
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(String, String, String, String), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((
                r.dataset.clone(),
                r.algorithm.clone(),
                r.sweep_param.clone(),
                format!("{:.6}", r.sweep_value),
            ))
            .or_default()
            .push(r);
    }
    let stats = |xs: &[f64]| -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let cells: Vec<SummaryCell> = groups
        .into_iter()
        .map(|((dataset, algorithm, sweep_param, _), group)| {
            let inl: Vec<f64> = group.iter().map(|r| r.inlier_acc).collect();
            let out: Vec<f64> = group.iter().map(|r| r.outlier_acc).collect();
            let ovl: Vec<f64> = group.iter().map(|r| r.overall_acc).collect();
            let t: Vec<f64> = group.iter().map(|r| r.time_ms).collect();
            let (mi, si) = stats(&inl);
            let (mo, so) = stats(&out);
            let (mv, sv) = stats(&ovl);
            SummaryCell {
                dataset,
                algorithm,
                sweep_param,
                sweep_value: group[0].sweep_value,
                seeds: group.len(),
                mean_inlier: mi,
                std_inlier: si,
                mean_outlier: mo,
                std_outlier: so,
                mean_overall: mv,
                std_overall: sv,
                mean_time_ms: t.iter().sum::<f64>() / t.len() as f64,
            }
        })
        .collect();
    let summary = Summary {
        schema_version: 1,
        suite: suite.into(),
        generated_by: format!("robustkc {}", env!("CARGO_PKG_VERSION")),
        cells,
    };
    let json = serde_json::to_string_pretty(&summary).expect("serializable summary");
    io::write_atomic(&dir.join("summary.json"), json.as_bytes())
        .map_err(|e| (EXIT_INPUT, format!("cannot write summary: {e}")))?;
    Ok(())
}
