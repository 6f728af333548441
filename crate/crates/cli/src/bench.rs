//! Benchmark harness: method × PSNR × repeat sweeps with SCE summaries, and a
//! running-time sweep over sample counts.
//!
//! Every cell derives its seeds from the master seed and its coordinates, so
//! a run is reproducible from the config alone and cells can execute in any
//! order.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use osc::data_gen::{add_noise_psnr, generate_semisynthetic, generate_synthetic, SyntheticSpec};
use osc::io::read_data_matrix;
use osc::metrics::sce;
use osc::pipeline::{segment, solve_coefficients, KSelection, Method, PipelineOptions};
use osc::{DataMatrix, LabelVector, SolverConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{resolve_config, Psnr};
use crate::{CliError, CliResult};

pub const RAW_FILE: &str = "raw.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const RESOLVED_FILE: &str = "resolved_config.json";

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_grid() -> Vec<Psnr> {
    [f64::INFINITY, 40.0, 30.0, 20.0, 15.0, 10.0]
        .into_iter()
        .map(Psnr)
        .collect()
}

fn default_sizes() -> Vec<usize> {
    vec![50, 100, 150, 200]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingConfig {
    #[serde(default = "timing_methods")]
    pub methods: Vec<Method>,
    /// Total sample counts N; each must be a multiple of the subspace count.
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "timing_repeats")]
    pub repeats: usize,
    #[serde(default = "clean")]
    pub psnr: Psnr,
}

fn timing_methods() -> Vec<Method> {
    vec![Method::OscRelaxed, Method::OscExact]
}

fn timing_repeats() -> usize {
    10
}

fn clean() -> Psnr {
    Psnr::CLEAN
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    pub psnr_grid: Vec<Psnr>,
    pub repeats: usize,
    pub master_seed: u64,
    /// Data generator settings; its `seed` is replaced per repeat.
    pub data: SyntheticSpec,
    /// Spectral library for semi-synthetic data instead of random bases.
    pub library: Option<PathBuf>,
    /// Defaults to the true number of subspaces.
    pub k: Option<KSelection>,
    pub normalize: bool,
    /// Per-method JSON objects overriding that method's solver defaults.
    pub solver: BTreeMap<Method, Value>,
    pub timing: Option<TimingConfig>,
    /// Worker threads; all available cores when absent.
    pub threads: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            methods: default_methods(),
            psnr_grid: default_grid(),
            repeats: 20,
            master_seed: 0,
            data: SyntheticSpec::default(),
            library: None,
            k: None,
            normalize: true,
            solver: BTreeMap::new(),
            timing: None,
            threads: None,
        }
    }
}

/// One (method, psnr, repeat) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub method: Method,
    pub psnr: String,
    pub repeat: usize,
    pub data_seed: u64,
    pub noise_seed: u64,
    pub sce: Option<f64>,
    pub k: Option<usize>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub solve_ms: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub psnr: String,
    pub runs: usize,
    pub failures: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub median: Option<f64>,
    pub mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: Method,
    pub n: usize,
    pub repeats: usize,
    pub failures: usize,
    pub mean_ms: Option<f64>,
    pub min_ms: Option<f64>,
    pub max_ms: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub ms_per_iteration: Option<f64>,
}

pub struct BenchOutput {
    pub raw: Vec<RawRow>,
    pub summary: Vec<SummaryRow>,
    pub timing: Vec<TimingRow>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for a cell coordinate path under the master seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

const TAG_DATA: u64 = 1;
const TAG_NOISE: u64 = 2;
const TAG_TIMING: u64 = 3;

impl BenchConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let cfg: BenchConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.methods.is_empty() || self.psnr_grid.is_empty() || self.repeats == 0 {
            return Err(CliError::Usage(
                "bench needs at least one method, one PSNR level and one repeat".into(),
            ));
        }
        self.data.validate()?;
        for &m in &self.methods {
            self.solver_config(m)?;
        }
        if let Some(t) = &self.timing {
            for &n in &t.sizes {
                if n == 0 || n % self.data.num_subspaces != 0 {
                    return Err(CliError::Usage(format!(
                        "timing size {n} is not a positive multiple of {} subspaces",
                        self.data.num_subspaces
                    )));
                }
            }
            if t.repeats == 0 {
                return Err(CliError::Usage("timing repeats must be positive".into()));
            }
            for &m in &t.methods {
                self.solver_config(m)?;
            }
        }
        Ok(())
    }

    pub fn solver_config(&self, method: Method) -> CliResult<SolverConfig> {
        resolve_config(method, self.solver.get(&method))
    }

    fn options(&self, method: Method, seed: u64) -> CliResult<PipelineOptions> {
        Ok(PipelineOptions {
            method,
            config: self.solver_config(method)?,
            k: self.k.unwrap_or(KSelection::Fixed {
                k: self.data.num_subspaces,
            }),
            normalize: self.normalize,
            seed,
            ..Default::default()
        })
    }
}

fn make_data(
    spec: &SyntheticSpec,
    library: Option<&DataMatrix>,
) -> osc::Result<(DataMatrix, LabelVector)> {
    match library {
        Some(lib) => generate_semisynthetic(lib, spec),
        None => generate_synthetic(spec),
    }
}

fn run_cell(
    cfg: &BenchConfig,
    library: Option<&DataMatrix>,
    method: Method,
    psnr_index: usize,
    repeat: usize,
) -> RawRow {
    let psnr = cfg.psnr_grid[psnr_index];
    let data_seed = derive_seed(cfg.master_seed, &[TAG_DATA, repeat as u64]);
    let noise_seed = derive_seed(
        cfg.master_seed,
        &[TAG_NOISE, repeat as u64, psnr_index as u64],
    );
    let mut row = RawRow {
        method,
        psnr: psnr.to_string(),
        repeat,
        data_seed,
        noise_seed,
        sce: None,
        k: None,
        iterations: None,
        converged: None,
        solve_ms: None,
        error: None,
    };
    let result = (|| -> CliResult<()> {
        let spec = SyntheticSpec {
            seed: data_seed,
            ..cfg.data.clone()
        };
        let (clean, truth) = make_data(&spec, library)?;
        let x = if psnr.is_clean() {
            clean
        } else {
            add_noise_psnr(&clean, psnr.0, noise_seed)?
        };
        let seg = segment(&x, &cfg.options(method, data_seed)?)?;
        row.sce = Some(sce(seg.labels.labels(), truth.labels())?);
        row.k = Some(seg.k);
        row.solve_ms = Some(seg.solve_ms);
        if let Some(d) = &seg.diagnostics {
            row.iterations = Some(d.iterations);
            row.converged = Some(d.converged);
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Min/max/median/mean SCE per (method, psnr), in first-appearance order of
/// `raw`. Failed cells are counted but excluded from the statistics.
pub fn summarize(raw: &[RawRow]) -> Vec<SummaryRow> {
    let mut groups: Vec<((Method, String), Vec<&RawRow>)> = Vec::new();
    for row in raw {
        let key = (row.method, row.psnr.clone());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, rows)) => rows.push(row),
            None => groups.push((key, vec![row])),
        }
    }
    groups
        .into_iter()
        .map(|((method, psnr), rows)| {
            let values: Vec<f64> = rows.iter().filter_map(|r| r.sce).collect();
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let some = !values.is_empty();
            SummaryRow {
                method,
                psnr,
                runs: rows.len(),
                failures: rows.len() - values.len(),
                min: some.then(|| sorted[0]),
                max: some.then(|| sorted[sorted.len() - 1]),
                median: some.then(|| median(&sorted)),
                mean: some.then(|| values.iter().sum::<f64>() / values.len() as f64),
            }
        })
        .collect()
}

fn run_timing(
    cfg: &BenchConfig,
    timing: &TimingConfig,
    library: Option<&DataMatrix>,
) -> Vec<TimingRow> {
    let mut rows = Vec::new();
    for &method in &timing.methods {
        for &n in &timing.sizes {
            let mut times = Vec::new();
            let mut iterations = Vec::new();
            let mut failures = 0;
            for rep in 0..timing.repeats {
                let seed = derive_seed(cfg.master_seed, &[TAG_TIMING, n as u64, rep as u64]);
                let spec = SyntheticSpec {
                    points_per_subspace: n / cfg.data.num_subspaces,
                    seed,
                    ..cfg.data.clone()
                };
                let run = (|| -> CliResult<(f64, Option<usize>)> {
                    let (clean, _) = make_data(&spec, library)?;
                    let x = if timing.psnr.is_clean() {
                        clean
                    } else {
                        add_noise_psnr(&clean, timing.psnr.0, seed)?
                    };
                    let x = if cfg.normalize { x.normalized_columns() } else { x };
                    let config = cfg.solver_config(method)?;
                    let start = Instant::now();
                    let (_, diag) = solve_coefficients(&x, method, &config)?;
                    let ms = start.elapsed().as_secs_f64() * 1e3;
                    Ok((ms, diag.map(|d| d.iterations)))
                })();
                match run {
                    Ok((ms, it)) => {
                        times.push(ms);
                        iterations.extend(it);
                    }
                    Err(_) => failures += 1,
                }
            }
            let ok = !times.is_empty();
            let mean_ms = ok.then(|| times.iter().sum::<f64>() / times.len() as f64);
            let mean_iterations = (!iterations.is_empty())
                .then(|| iterations.iter().sum::<usize>() as f64 / iterations.len() as f64);
            rows.push(TimingRow {
                method,
                n,
                repeats: timing.repeats,
                failures,
                mean_ms,
                min_ms: ok.then(|| times.iter().cloned().fold(f64::INFINITY, f64::min)),
                max_ms: ok.then(|| times.iter().cloned().fold(0.0, f64::max)),
                mean_iterations,
                ms_per_iteration: mean_ms.zip(mean_iterations).map(|(t, i)| t / i),
            });
        }
    }
    rows
}

/// Runs every cell and the optional timing sweep. Cells run on the rayon
/// pool; the timing sweep runs serially so measurements do not compete.
pub fn run_bench(cfg: &BenchConfig) -> CliResult<BenchOutput> {
    cfg.validate()?;
    let library = cfg.library.as_deref().map(read_data_matrix).transpose()?;
    let cells: Vec<(Method, usize, usize)> = cfg
        .methods
        .iter()
        .flat_map(|&m| {
            (0..cfg.psnr_grid.len())
                .flat_map(move |p| (0..cfg.repeats).map(move |r| (m, p, r)))
        })
        .collect();
    let work = || {
        cells
            .par_iter()
            .map(|&(m, p, r)| run_cell(cfg, library.as_ref(), m, p, r))
            .collect::<Vec<_>>()
    };
    let raw = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(work),
        None => work(),
    };
    let summary = summarize(&raw);
    let timing = cfg
        .timing
        .as_ref()
        .map(|t| run_timing(cfg, t, library.as_ref()))
        .unwrap_or_default();
    Ok(BenchOutput {
        raw,
        summary,
        timing,
    })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_raw_csv(path: &Path) -> CliResult<Vec<RawRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(CliError::from))
        .collect()
}

pub fn read_summary_csv(path: &Path) -> CliResult<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(CliError::from))
        .collect()
}

/// Writes raw, summary, timing (when configured) and the resolved config.
pub fn write_outputs(dir: &Path, cfg: &BenchConfig, out: &BenchOutput) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    write_csv(&dir.join(RAW_FILE), &out.raw)?;
    write_csv(&dir.join(SUMMARY_FILE), &out.summary)?;
    if cfg.timing.is_some() {
        write_csv(&dir.join(TIMING_FILE), &out.timing)?;
    }
    fs::write(dir.join(RESOLVED_FILE), serde_json::to_string_pretty(cfg)?)?;
    Ok(())
}
