use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use robustkc::metrics;
use robustkc::pipeline::{self, ClusterCount, PipelineConfig};
use robustkc::types::{DenoiseMethod, Label};

use crate::io;
use crate::{EXIT_INPUT, EXIT_PIPELINE};

#[derive(Args)]
pub struct ClusterArgs {
    /// Input CSV (numeric columns, optional single header row).
    #[arg(long)]
    pub input: PathBuf,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Cluster count, or `auto`.
    #[arg(long, default_value = "auto")]
    pub r: String,
    /// Upper bound for auto cluster-count estimation.
    #[arg(long)]
    pub max_r: Option<usize>,
    /// Denoising method: lp or sdp.
    #[arg(long)]
    pub method: Option<String>,
    /// Ground-truth labels CSV (integers; 0 = outlier) to score against.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Kernel scale override (skips data-driven selection).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Rounding offset override.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Enable PCA projection to r-1 dimensions for high-dimensional data.
    #[arg(long)]
    pub dimred: bool,
    /// Use strict sample splitting for the projection (held-out rows are
    /// reported unlabeled).
    #[arg(long)]
    pub strict_split: bool,
    /// Re-run the spectral step on estimated inliers.
    #[arg(long)]
    pub refine: bool,
    /// k-means restarts.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// JSON config file; explicit flags override file values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// The flag-file view of the pipeline configuration.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub r: Option<usize>,
    pub auto: Option<bool>,
    pub max_r: Option<usize>,
    pub method: Option<String>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    pub dimred: Option<bool>,
    pub strict_split: Option<bool>,
    pub refine: Option<bool>,
    pub restarts: Option<usize>,
}

#[derive(Serialize)]
struct RowRecord {
    index: usize,
    label: i64,
    is_outlier: bool,
    degree: f64,
}

#[derive(Serialize)]
struct EvalRecord {
    inlier_accuracy: f64,
    outlier_accuracy: f64,
    overall_accuracy: f64,
}

#[derive(Serialize)]
struct ConfigSnapshot {
    r: String,
    max_r: Option<usize>,
    method: String,
    seed: u64,
    alpha: f64,
    beta: f64,
    theta_override: Option<f64>,
    gamma_override: Option<f64>,
    dimred: bool,
    strict_split: bool,
    refine: bool,
    restarts: usize,
}

#[derive(Serialize)]
struct RunRecord {
    tool: String,
    version: String,
    schema_version: u32,
    config: ConfigSnapshot,
    dataset_sha256: String,
    n: usize,
    d: usize,
    theta: f64,
    gamma: f64,
    tau: Option<f64>,
    r_used: usize,
    kmeans_cost: f64,
    stage_ms: Vec<(String, f64)>,
    rows: Vec<RowRecord>,
    eval: Option<EvalRecord>,
}

pub fn run(args: ClusterArgs) -> i32 {
    match run_inner(args) {
        Ok(()) => 0,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

fn run_inner(args: ClusterArgs) -> Result<(), (i32, String)> {
    let file_cfg: ConfigFile = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| (EXIT_INPUT, format!("cannot read config: {e}")))?;
            serde_json::from_str(&text).map_err(|e| (EXIT_INPUT, format!("bad config: {e}")))?
        }
        None => ConfigFile::default(),
    };

    let raw = std::fs::read(&args.input)
        .map_err(|e| (EXIT_INPUT, format!("cannot read {}: {e}", args.input.display())))?;
    let fingerprint = hex_digest(&raw);
    let text = String::from_utf8_lossy(&raw);
    let rows = io::parse_csv(&text).map_err(|e| (EXIT_INPUT, e.to_string()))?;
    let data = io::data_matrix_from_rows(rows).map_err(|e| (EXIT_INPUT, e.to_string()))?;

    // flags override the config file, which overrides defaults
    let method_name = args
        .method
        .clone()
        .or(file_cfg.method.clone())
        .unwrap_or_else(|| "lp".to_string());
    let method = match method_name.as_str() {
        "lp" => DenoiseMethod::Lp,
        "sdp" => DenoiseMethod::Sdp,
        other => return Err((EXIT_INPUT, format!("unknown method `{other}`"))),
    };
    let max_r = args.max_r.or(file_cfg.max_r).unwrap_or(10);
    let count = match args.r.as_str() {
        "auto" => match (file_cfg.auto, file_cfg.r) {
            (Some(false) | None, Some(r)) if args.r == "auto" && file_cfg.auto != Some(true) => {
                // config file pinned a fixed r and flags kept the default
                ClusterCount::Fixed(r)
            }
            _ => ClusterCount::Auto { max_r },
        },
        s => ClusterCount::Fixed(
            s.parse::<usize>()
                .map_err(|_| (EXIT_INPUT, format!("r must be a count or `auto`, got `{s}`")))?,
        ),
    };

    let mut cfg: PipelineConfig<f64> = PipelineConfig::new(count, method);
    cfg.seed = args.seed.or(file_cfg.seed).unwrap_or(0);
    if let Some(a) = args.alpha.or(file_cfg.alpha) {
        cfg.params.alpha = a;
    }
    if let Some(b) = args.beta.or(file_cfg.beta) {
        cfg.params.beta = b;
    }
    cfg.params.theta_override = args.theta.or(file_cfg.theta);
    cfg.params.gamma_override = args.gamma.or(file_cfg.gamma);
    cfg.dimred.enabled = args.dimred || file_cfg.dimred.unwrap_or(false);
    cfg.dimred.strict = args.strict_split || file_cfg.strict_split.unwrap_or(false);
    cfg.refine = args.refine || file_cfg.refine.unwrap_or(false);
    if let Some(rs) = args.restarts.or(file_cfg.restarts) {
        cfg.kmeans.restarts = rs;
    }

    let out = pipeline::run(&data, &cfg).map_err(|e| (EXIT_PIPELINE, e.to_string()))?;

    let eval = match &args.truth {
        Some(path) => {
            let truth = io::read_labels_csv(path).map_err(|e| (EXIT_INPUT, e.to_string()))?;
            if truth.len() != data.n() {
                return Err((
                    EXIT_INPUT,
                    format!("truth has {} labels for {} rows", truth.len(), data.n()),
                ));
            }
            let rep = metrics::evaluate(&out.result.labels, &truth)
                .map_err(|e| (EXIT_INPUT, e.to_string()))?;
            Some(EvalRecord {
                inlier_accuracy: rep.inlier_accuracy,
                outlier_accuracy: rep.outlier_accuracy,
                overall_accuracy: rep.overall_accuracy,
            })
        }
        None => None,
    };

    let record = RunRecord {
        tool: "robustkc".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        schema_version: 1,
        config: ConfigSnapshot {
            r: args.r.clone(),
            max_r: Some(max_r),
            method: method_name,
            seed: cfg.seed,
            alpha: cfg.params.alpha,
            beta: cfg.params.beta,
            theta_override: cfg.params.theta_override,
            gamma_override: cfg.params.gamma_override,
            dimred: cfg.dimred.enabled,
            strict_split: cfg.dimred.strict,
            refine: cfg.refine,
            restarts: cfg.kmeans.restarts,
        },
        dataset_sha256: fingerprint,
        n: data.n(),
        d: data.dim(),
        theta: out.theta,
        gamma: out.gamma,
        tau: out.result.degree_threshold,
        r_used: out.result.r,
        kmeans_cost: out.result.kmeans_cost,
        stage_ms: out.stage_ms.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        rows: out
            .result
            .labels
            .iter()
            .enumerate()
            .map(|(i, &l)| RowRecord {
                index: i,
                label: io::label_to_int(l),
                is_outlier: l == Label::Outlier,
                degree: out.degrees[i],
            })
            .collect(),
        eval,
    };
    let json = serde_json::to_string_pretty(&record).expect("serializable record");
    match &args.output {
        Some(path) => io::write_atomic(path, json.as_bytes())
            .map_err(|e| (EXIT_INPUT, format!("cannot write output: {e}")))?,
        None => println!("{json}"),
    }
    Ok(())
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
