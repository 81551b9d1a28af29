use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;

use robustkc::mat::Mat;
use robustkc::synth::{self, Preset};
use robustkc::types::{MixtureSpec, OutlierModel};

use crate::io;
use crate::{EXIT_INPUT, EXIT_PIPELINE};

#[derive(Args)]
pub struct SynthArgs {
    /// Named preset: table1-balanced | table1-unbalanced | table1-ellipsoidal
    /// | fig1 | simplex | weaksep.
    #[arg(long, conflicts_with = "spec")]
    pub preset: Option<String>,
    /// Mixture description as JSON (counts, means, covariances, outliers).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV for the points.
    #[arg(long, default_value = "data.csv")]
    pub out_data: PathBuf,
    /// Output CSV for ground-truth labels (0 = outlier).
    #[arg(long, default_value = "truth.csv")]
    pub out_truth: PathBuf,
    /// Keep rows grouped by cluster instead of shuffling.
    #[arg(long)]
    pub no_shuffle: bool,
}

/// JSON mixture description.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    counts: Vec<usize>,
    means: Vec<Vec<f64>>,
    covariances: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    m: usize,
    #[serde(default)]
    outliers: Option<OutlierModel<f64>>,
}

pub fn run(args: SynthArgs) -> i32 {
    match run_inner(args) {
        Ok(()) => 0,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

fn run_inner(args: SynthArgs) -> Result<(), (i32, String)> {
    let spec: MixtureSpec<f64> = match (&args.preset, &args.spec) {
        (Some(name), None) => {
            let preset = Preset::parse(name).map_err(|e| (EXIT_INPUT, e.to_string()))?;
            synth::preset_spec(preset)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| (EXIT_INPUT, format!("cannot read spec: {e}")))?;
            let file: SpecFile =
                serde_json::from_str(&text).map_err(|e| (EXIT_INPUT, format!("bad spec: {e}")))?;
            let covs: Result<Vec<Mat<f64>>, String> = file
                .covariances
                .iter()
                .map(|rows| {
                    let d = rows.len();
                    let mut flat = Vec::with_capacity(d * d);
                    for row in rows {
                        if row.len() != d {
                            return Err("covariance rows must form a square matrix".into());
                        }
                        flat.extend(row);
                    }
                    Mat::from_vec(d, d, flat).map_err(|e| e.to_string())
                })
                .collect();
            let covs = covs.map_err(|e| (EXIT_INPUT, e))?;
            let model = match (file.m, file.outliers) {
                (0, _) => OutlierModel::None,
                (_, Some(m)) => m,
                (_, None) => OutlierModel::UniformBox { margin: 1.5 },
            };
            MixtureSpec::from_counts(file.counts, file.means, covs, model, file.m)
                .map_err(|e| (EXIT_INPUT, e.to_string()))?
        }
        _ => return Err((EXIT_INPUT, "exactly one of --preset / --spec is required".into())),
    };

    let ds = synth::gen_gmm_with(&spec, args.seed, !args.no_shuffle)
        .map_err(|e| (EXIT_PIPELINE, e.to_string()))?;
    let rows: Vec<Vec<f64>> =
        (0..ds.data.n()).map(|i| ds.data.row(i).to_vec()).collect();
    io::write_csv(&args.out_data, None, &rows)
        .map_err(|e| (EXIT_INPUT, format!("cannot write data: {e}")))?;
    io::write_labels_csv(&args.out_truth, &ds.true_labels)
        .map_err(|e| (EXIT_INPUT, format!("cannot write truth: {e}")))?;
    eprintln!(
        "wrote {} rows ({} inliers, {} outliers) to {} / {}",
        ds.data.n(),
        ds.spec.n(),
        ds.spec.m(),
        args.out_data.display(),
        args.out_truth.display()
    );
    Ok(())
}
