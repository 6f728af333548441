//! `generate` and `cluster` subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use osc::data_gen::{add_noise_psnr, generate_semisynthetic, generate_synthetic, SyntheticSpec};
use osc::io::{read_data_matrix, write_matrix};
use osc::metrics::sce;
use osc::pipeline::{segment, KSelection, Method, PipelineOptions};
use osc::spectral::detect_boundaries_peaks;
use osc::{DataMatrix, LabelVector, OscError};
use serde_json::{json, Value};

use crate::config::{resolve_config, Psnr};
use crate::{CliError, CliResult};

#[derive(Args, Debug, Clone)]
pub struct GenerateArgs {
    /// Output data matrix (.csv or .json).
    #[arg(long)]
    pub out: PathBuf,
    /// Output labels (JSON integer array); defaults to <out stem>.labels.json.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub subspaces: usize,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    /// Ambient dimension D (ignored with --library).
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(long, default_value_t = 4)]
    pub subspace_dim: usize,
    #[arg(long, default_value_t = 0.001)]
    pub cov_diag: f64,
    #[arg(long, default_value_t = 0.0005)]
    pub cov_offdiag: f64,
    /// Add Gaussian noise at this PSNR in dB ("inf" for none).
    #[arg(long)]
    pub psnr: Option<String>,
    /// Spectral library (columns are pure spectra) for semi-synthetic data.
    #[arg(long)]
    pub library: Option<PathBuf>,
}

/// Stream tag separating the noise seed from the data seed.
const NOISE_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn default_labels_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    out.with_file_name(format!("{stem}.labels.json"))
}

pub fn write_labels(path: &Path, labels: &LabelVector) -> CliResult<()> {
    fs::write(path, serde_json::to_string(labels)?)?;
    Ok(())
}

pub fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes the dataset and labels; returns the resolved spec.
pub fn cmd_generate(args: &GenerateArgs) -> CliResult<SyntheticSpec> {
    let spec = SyntheticSpec {
        num_subspaces: args.subspaces,
        points_per_subspace: args.points,
        ambient_dim: args.dim,
        subspace_dim: args.subspace_dim,
        cov_diag: args.cov_diag,
        cov_offdiag: args.cov_offdiag,
        seed: args.seed,
    };
    let (clean, labels) = match &args.library {
        Some(path) => {
            let library = read_data_matrix(path)?;
            let spec = SyntheticSpec {
                ambient_dim: library.dim(),
                ..spec.clone()
            };
            generate_semisynthetic(&library, &spec)?
        }
        None => generate_synthetic(&spec)?,
    };
    let resolved = SyntheticSpec {
        ambient_dim: clean.dim(),
        ..spec
    };
    let x = match args.psnr.as_deref().map(str::parse::<Psnr>).transpose()? {
        Some(p) if !p.is_clean() => add_noise_psnr(&clean, p.0, args.seed ^ NOISE_SEED_OFFSET)?,
        _ => clean,
    };
    write_matrix(&args.out, x.values())?;
    let labels_path = args
        .labels
        .clone()
        .unwrap_or_else(|| default_labels_path(&args.out));
    write_labels(&labels_path, &labels)?;
    Ok(resolved)
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Eigengap,
    SvdGap,
    LaplacianGap,
    SvThreshold,
}

#[derive(Args, Debug, Clone)]
pub struct ClusterArgs {
    /// Data matrix, D rows by N columns (.csv or .json).
    pub data: PathBuf,
    /// osc-relaxed, osc-exact, ssc, spatsc or lrr-sim.
    #[arg(long, default_value = "osc-relaxed")]
    pub method: String,
    /// JSON object of solver fields overriding the method defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Initial penalty μ⁰.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub mu_max: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub eps1: Option<f64>,
    #[arg(long)]
    pub eps2: Option<f64>,
    /// Constrain diag(Z) = 0.
    #[arg(long)]
    pub diag_zero: bool,
    /// Number of clusters; when omitted it is estimated.
    #[arg(long, conflicts_with = "estimate_k")]
    pub k: Option<usize>,
    #[arg(long, value_enum, default_value = "eigengap")]
    pub estimate_k: Estimator,
    /// Relative threshold for --estimate-k sv-threshold (times σ_max).
    #[arg(long, default_value_t = 1e-6)]
    pub sv_tau: f64,
    /// Solve on the raw columns instead of unit-norm columns.
    #[arg(long)]
    pub no_normalize: bool,
    /// Seed for the k-means restarts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output labels (JSON integer array).
    #[arg(long, default_value = "labels.json")]
    pub labels: PathBuf,
    /// Diagnostics JSON; printed to stdout when omitted.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
    /// Ground-truth labels; adds the clustering error to the diagnostics.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also write the coefficient matrix Z.
    #[arg(long)]
    pub coefficients: Option<PathBuf>,
    /// Include per-iteration histories in the diagnostics.
    #[arg(long)]
    pub full_history: bool,
}

impl ClusterArgs {
    pub fn k_selection(&self) -> KSelection {
        match (self.k, self.estimate_k) {
            (Some(k), _) => KSelection::Fixed { k },
            (None, Estimator::Eigengap) => KSelection::Eigengap,
            (None, Estimator::SvdGap) => KSelection::SvdGap,
            (None, Estimator::LaplacianGap) => KSelection::LaplacianGap,
            (None, Estimator::SvThreshold) => KSelection::SvThreshold {
                relative_tau: self.sv_tau,
            },
        }
    }

    fn overrides(&self) -> CliResult<Value> {
        let mut map = match &self.config {
            Some(path) => match serde_json::from_str::<Value>(&fs::read_to_string(path)?)? {
                Value::Object(m) => m,
                _ => return Err(CliError::Usage("--config must hold a JSON object".into())),
            },
            None => serde_json::Map::new(),
        };
        let flags = [
            ("lambda1", self.lambda1.map(Value::from)),
            ("lambda2", self.lambda2.map(Value::from)),
            ("mu0", self.mu.map(Value::from)),
            ("mu_max", self.mu_max.map(Value::from)),
            ("max_iter", self.max_iter.map(Value::from)),
            ("eps1", self.eps1.map(Value::from)),
            ("eps2", self.eps2.map(Value::from)),
            ("diag_zero", self.diag_zero.then_some(Value::Bool(true))),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                map.insert(key.to_string(), v);
            }
        }
        Ok(Value::Object(map))
    }
}

/// Runs the pipeline and writes labels; returns the diagnostics document.
pub fn cmd_cluster(args: &ClusterArgs) -> CliResult<Value> {
    let method: Method = args.method.parse()?;
    let config = resolve_config(method, Some(&args.overrides()?))?;
    let x: DataMatrix = read_data_matrix(&args.data)?;
    let truth = args.truth.as_deref().map(read_labels).transpose()?;
    let options = PipelineOptions {
        method,
        config: config.clone(),
        k: args.k_selection(),
        normalize: !args.no_normalize,
        seed: args.seed,
        ..Default::default()
    };
    let seg = segment(&x, &options).map_err(|e| match e {
        OscError::Divergence { .. } => CliError::Solver {
            message: e.to_string(),
            dump: json!({
                "error": e.to_string(),
                "method": method,
                "data": args.data,
                "config": config,
            }),
        },
        other => other.into(),
    })?;

    write_labels(&args.labels, &seg.labels)?;
    if let Some(path) = &args.coefficients {
        write_matrix(path, seg.coefficients.values())?;
    }

    let boundaries = if seg.coefficients.size() >= 3 {
        detect_boundaries_peaks(&seg.coefficients)?
    } else {
        Vec::new()
    };
    let mut doc = json!({
        "method": method,
        "samples": x.samples(),
        "k": seg.k,
        "k_selection": options.k,
        "normalized": options.normalize,
        "seed": args.seed,
        "boundaries": boundaries,
        "solve_ms": seg.solve_ms,
        "total_ms": seg.total_ms,
        "config": config,
    });
    if let Some(d) = &seg.diagnostics {
        doc["iterations"] = json!(d.iterations);
        doc["converged"] = json!(d.converged);
        doc["final_feasibility"] = json!(d.final_feasibility());
        doc["final_change"] = json!(d.final_change());
        doc["objective_value"] = json!(d.objective_value);
        doc["eta_z"] = json!(d.eta_z);
        doc["eta_j"] = json!(d.eta_j);
        doc["lipschitz"] = json!(d.lipschitz);
        if args.full_history {
            doc["feasibility_history"] = json!(d.feasibility_history);
            doc["change_history"] = json!(d.change_history);
            doc["mu_history"] = json!(d.mu_history);
        }
    }
    if let Some(t) = truth {
        doc["sce"] = json!(sce(seg.labels.labels(), &t)?);
    }
    if let Some(path) = &args.diagnostics {
        fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    }
    Ok(doc)
}
