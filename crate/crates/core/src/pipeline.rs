//! Full segmentation: solve for Z, build the affinity, choose k, run NCut.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{sim_closed_form, spatsc_solve, ssc_solve};
use crate::error::{param_err, OscError, Result};
use crate::exact::solve_exact;
use crate::relaxed::solve_relaxed;
use crate::spectral::{
    build_affinity, estimate_k_eigengap, estimate_k_laplacian_gap, estimate_k_sv_threshold,
    estimate_k_svd_gap, ncut_cluster, NcutOptions,
};
use crate::types::{CoefficientMatrix, DataMatrix, LabelVector, SolveDiagnostics, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    OscRelaxed,
    OscExact,
    Ssc,
    Spatsc,
    LrrSim,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::OscRelaxed,
        Method::OscExact,
        Method::Ssc,
        Method::Spatsc,
        Method::LrrSim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::OscRelaxed => "osc-relaxed",
            Method::OscExact => "osc-exact",
            Method::Ssc => "ssc",
            Method::Spatsc => "spatsc",
            Method::LrrSim => "lrr-sim",
        }
    }

    /// Default parameters per method. SSC reads its λ from `lambda1`;
    /// LRR-SIM has no parameters.
    pub fn default_config(self) -> SolverConfig {
        let base = SolverConfig::default();
        match self {
            Method::OscRelaxed | Method::OscExact => base,
            Method::Spatsc => SolverConfig {
                lambda1: 0.1,
                lambda2: 0.01,
                diag_zero: true,
                // μ stays at μ⁰ until the change test passes, so this
                // penalty needs several thousand iterations on clean data
                max_iter: 10_000,
                ..base
            },
            Method::Ssc => SolverConfig {
                lambda1: 0.2,
                lambda2: 0.0,
                diag_zero: true,
                ..base
            },
            Method::LrrSim => base,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = OscError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| OscError::InvalidParameter(format!("unknown method '{s}'")))
    }
}

/// How the number of clusters is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum KSelection {
    Fixed { k: usize },
    #[default]
    Eigengap,
    SvdGap,
    LaplacianGap,
    /// Count singular values of W above `relative_tau`·σ_max.
    SvThreshold { relative_tau: f64 },
}


#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    pub method: Method,
    pub config: SolverConfig,
    pub k: KSelection,
    /// Scale every column of X to unit norm before solving.
    pub normalize: bool,
    pub seed: u64,
    pub ncut: NcutOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self::for_method(Method::OscRelaxed)
    }
}

impl PipelineOptions {
    pub fn for_method(method: Method) -> Self {
        Self {
            method,
            config: method.default_config(),
            k: KSelection::default(),
            normalize: true,
            seed: 0,
            ncut: NcutOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Segmentation {
    pub labels: LabelVector,
    pub k: usize,
    pub coefficients: CoefficientMatrix,
    /// Present for the iterative solvers.
    pub diagnostics: Option<SolveDiagnostics>,
    /// Solve time in milliseconds (excludes affinity and clustering).
    pub solve_ms: f64,
    /// Solve plus segmentation time in milliseconds.
    pub total_ms: f64,
}

/// Computes the coefficient matrix for `method`.
pub fn solve_coefficients(
    x: &DataMatrix,
    method: Method,
    config: &SolverConfig,
) -> Result<(CoefficientMatrix, Option<SolveDiagnostics>)> {
    Ok(match method {
        Method::OscRelaxed => {
            let (z, d) = solve_relaxed(x, config)?;
            (z, Some(d))
        }
        Method::OscExact => {
            let (z, d) = solve_exact(x, config)?;
            (z, Some(d))
        }
        Method::Spatsc => {
            let (z, d) = spatsc_solve(x, config.lambda1, config.lambda2, config)?;
            (z, Some(d))
        }
        Method::Ssc => (ssc_solve(x, config.lambda1)?, None),
        Method::LrrSim => (sim_closed_form(x)?, None),
    })
}

/// Runs solve → affinity → k selection → NCut.
pub fn segment(x: &DataMatrix, options: &PipelineOptions) -> Result<Segmentation> {
    let start = Instant::now();
    let normalized;
    let input = if options.normalize {
        normalized = x.normalized_columns();
        &normalized
    } else {
        x
    };
    let (coefficients, diagnostics) = solve_coefficients(input, options.method, &options.config)?;
    let solve_ms = start.elapsed().as_secs_f64() * 1e3;

    let w = build_affinity(&coefficients);
    let k = match options.k {
        KSelection::Fixed { k } => k,
        KSelection::Eigengap => estimate_k_eigengap(&w)?,
        KSelection::SvdGap => estimate_k_svd_gap(&w)?,
        KSelection::LaplacianGap => estimate_k_laplacian_gap(&w)?,
        KSelection::SvThreshold { relative_tau } => {
            if !(relative_tau > 0.0) {
                return param_err("relative threshold must be positive");
            }
            let smax = w.values().singular_values().max();
            if smax == 0.0 {
                1
            } else {
                estimate_k_sv_threshold(&w, relative_tau * smax)?.max(1)
            }
        }
    };
    let labels = ncut_cluster(&w, k, options.seed, &options.ncut)?;
    Ok(Segmentation {
        labels,
        k,
        coefficients,
        diagnostics,
        solve_ms,
        total_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
