//! Repeated sample-and-reconstruct experiments over a list of jump
//! probabilities.
//!
//! Every cell `(α, rep)` draws a scheme reaching the target coverage from a
//! seed derived from the master seed and the path
//! `experiment/alpha=<α>/rep=<rep>`, reconstructs the reference image from
//! the sampled k-space, and scores it by PSNR. Cells are independent, so
//! results do not depend on how they are scheduled.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::chains::{ChainSampler, Connectivity, Generator};
use crate::density::{compute_density, Density};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::phantom::shepp_logan_8bit;
use crate::pgm;
use crate::recon::{psnr, reconstruct, DrParams};
use crate::rng::derive_seed;
use crate::schemes::{generate_until, parse_key_values};
use crate::transforms::{Family, Image, MeasurementSystem, WaveletSpec};

/// Flat experiment configuration. Every field has a `key = value` form.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// `phantom` (8-bit quantized) or a path to a P5 PGM.
    pub image: String,
    /// Grid size of the phantom; must match a PGM when set.
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    /// `None` picks Daubechies-4 at the default depth.
    pub wavelet: Option<WaveletSpec>,
    pub coverage: f64,
    pub alphas: Vec<f64>,
    pub repetitions: usize,
    pub seed: u64,
    /// `iid`, `markov` or `second-order`.
    pub generator: String,
    pub persistence: f64,
    pub connectivity: Connectivity,
    pub solver: DrParams,
    pub output: PathBuf,
    /// Write scheme, mask and reconstruction files per cell.
    pub cell_files: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            image: "phantom".into(),
            rows: None,
            cols: None,
            wavelet: None,
            coverage: 0.2,
            alphas: vec![1.0, 0.1, 0.001],
            repetitions: 10,
            seed: 0,
            generator: "markov".into(),
            persistence: 0.5,
            connectivity: Connectivity::Four,
            solver: DrParams::default(),
            output: PathBuf::from("experiment-out"),
            cell_files: true,
        }
    }
}

/// Recognized configuration keys.
pub const CONFIG_KEYS: [&str; 18] = [
    "image",
    "rows",
    "cols",
    "wavelet",
    "coverage",
    "alphas",
    "repetitions",
    "seed",
    "generator",
    "persistence",
    "connectivity",
    "max_iters",
    "threshold",
    "lambda",
    "tol",
    "output",
    "cell_files",
    "format",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad value `{value}` for `{key}`")))
}

fn auto<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value.trim() {
        "auto" | "" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "image" => self.image = value.trim().to_string(),
            "rows" => self.rows = auto(key, value)?,
            "cols" => self.cols = auto(key, value)?,
            "wavelet" => self.wavelet = auto(key, value)?,
            "coverage" => self.coverage = parse(key, value)?,
            "alphas" => {
                self.alphas = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s))
                    .collect::<Result<_>>()?
            }
            "repetitions" => self.repetitions = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "generator" => self.generator = value.trim().to_string(),
            "persistence" => self.persistence = parse(key, value)?,
            "connectivity" => self.connectivity = value.trim().parse()?,
            "max_iters" => self.solver.max_iters = parse(key, value)?,
            "threshold" => self.solver.gamma = auto(key, value)?,
            "lambda" => self.solver.lambda = parse(key, value)?,
            "tol" => self.solver.tol = parse(key, value)?,
            "output" => self.output = PathBuf::from(value.trim()),
            "cell_files" => self.cell_files = parse(key, value)?,
            "format" => {
                if value.trim() != "kwalk-experiment-1" {
                    return Err(Error::Parse(format!("unknown config format `{value}`")));
                }
            }
            other => return Err(Error::Parse(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Defaults overridden by the entries of a `key = value` text.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply(&parse_key_values(text)?)?;
        Ok(cfg)
    }

    pub fn apply(&mut self, entries: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in entries {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coverage > 0.0 && self.coverage <= 1.0) {
            return Err(Error::Validation(format!("coverage {} outside (0, 1]", self.coverage)));
        }
        if self.repetitions == 0 {
            return Err(Error::Validation("repetitions must be at least 1".into()));
        }
        if self.alphas.is_empty() {
            return Err(Error::Validation("alpha list is empty".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Validation(format!("alpha {a} outside [0, 1]")));
        }
        if !matches!(self.generator.as_str(), "iid" | "markov" | "second-order") {
            return Err(Error::Validation(format!("unknown generator `{}`", self.generator)));
        }
        if !(0.0..=1.0).contains(&self.persistence) {
            return Err(Error::Validation(format!("persistence {} outside [0, 1]", self.persistence)));
        }
        self.solver.validate()
    }

    /// Every key with its current value, in a form [`Self::from_text`]
    /// reads back.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("format", "kwalk-experiment-1".into());
        kv("image", self.image.clone());
        kv("rows", opt(self.rows.map(|v| v.to_string())));
        kv("cols", opt(self.cols.map(|v| v.to_string())));
        kv("wavelet", opt(self.wavelet.map(|w| w.to_string())));
        kv("coverage", self.coverage.to_string());
        kv("alphas", self.alphas.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        kv("repetitions", self.repetitions.to_string());
        kv("seed", self.seed.to_string());
        kv("generator", self.generator.clone());
        kv("persistence", self.persistence.to_string());
        kv("connectivity", self.connectivity.to_string());
        kv("max_iters", self.solver.max_iters.to_string());
        kv("threshold", opt(self.solver.gamma.map(|g| g.to_string())));
        kv("lambda", self.solver.lambda.to_string());
        kv("tol", self.solver.tol.to_string());
        kv("output", self.output.display().to_string());
        kv("cell_files", self.cell_files.to_string());
        out
    }

    /// Loads the reference image named by the configuration.
    pub fn load_image(&self) -> Result<Image> {
        if self.image == "phantom" {
            return shepp_logan_8bit(self.rows.unwrap_or(256), self.cols.unwrap_or(256));
        }
        let img = pgm::read(Path::new(&self.image))?;
        if self.rows.is_some_and(|r| r != img.rows()) || self.cols.is_some_and(|c| c != img.cols()) {
            return Err(Error::Validation(format!(
                "image is {}x{} but the configuration asks for {}x{}",
                img.rows(),
                img.cols(),
                self.rows.map_or("auto".into(), |v| v.to_string()),
                self.cols.map_or("auto".into(), |v| v.to_string())
            )));
        }
        Ok(img)
    }

    pub fn wavelet_for(&self, rows: usize, cols: usize) -> WaveletSpec {
        self.wavelet.unwrap_or(WaveletSpec {
            family: Family::Daubechies4,
            levels: WaveletSpec::default_levels(rows, cols),
        })
    }

    pub fn generator_for(&self, alpha: f64) -> Generator {
        match self.generator.as_str() {
            "iid" => Generator::Iid,
            "second-order" => Generator::SecondOrder {
                alpha,
                persistence: self.persistence,
                connectivity: self.connectivity,
            },
            _ => Generator::Markov {
                alpha,
                connectivity: self.connectivity,
            },
        }
    }
}

/// Outcome of one `(α, rep)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub alpha: f64,
    pub rep: usize,
    pub seed: u64,
    /// PSNR in dB, or the failure message.
    pub psnr: std::result::Result<f64, String>,
    pub m: usize,
    pub m_prime: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Mean and spread of the successful cells of one α.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSummary {
    pub alpha: f64,
    pub mean: f64,
    /// Sample standard deviation; 0 with a single cell.
    pub std: f64,
    pub count: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutcome {
    pub cells: Vec<CellResult>,
    pub summary: Vec<AlphaSummary>,
}

impl ExperimentOutcome {
    /// `alpha,rep,psnr`, one row per cell in configuration order.
    pub fn results_csv(&self) -> String {
        let mut out = String::from("alpha,rep,psnr\n");
        for c in &self.cells {
            let p = c.psnr.as_ref().map_or_else(|_| "nan".to_string(), |p| p.to_string());
            let _ = writeln!(out, "{},{},{p}", c.alpha, c.rep);
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("alpha,mean_psnr,std_psnr,count,failures\n");
        for s in &self.summary {
            let _ = writeln!(out, "{},{},{},{},{}", s.alpha, s.mean, s.std, s.count, s.failures);
        }
        out
    }

    pub fn mean_for(&self, alpha: f64) -> Option<f64> {
        self.summary.iter().find(|s| s.alpha == alpha).map(|s| s.mean)
    }
}

/// Seed of cell `(alpha, rep)`.
pub fn cell_seed(master: u64, alpha: f64, rep: usize) -> u64 {
    derive_seed(master, &format!("experiment/alpha={alpha}/rep={rep}"))
}

fn cell_dir(root: &Path, alpha: f64, rep: usize) -> PathBuf {
    root.join("cells").join(format!("alpha={alpha}")).join(format!("rep={rep}"))
}

struct Shared<'a> {
    config: &'a ExperimentConfig,
    image: &'a Image,
    system: &'a MeasurementSystem,
}

fn run_cell(shared: &Shared<'_>, chain: &ChainSampler, alpha: f64, rep: usize) -> CellResult {
    let seed = cell_seed(shared.config.seed, alpha, rep);
    let mut cell = CellResult {
        alpha,
        rep,
        seed,
        psnr: Err(String::new()),
        m: 0,
        m_prime: 0,
        iterations: 0,
        converged: false,
    };
    let outcome = (|| -> Result<f64> {
        let scheme = generate_until(chain, shared.config.coverage, seed)?;
        cell.m = scheme.m();
        cell.m_prime = scheme.m_prime();
        let system = shared.system.with_mask(scheme.mask().to_vec())?;
        let (res, recon) = reconstruct(&system, shared.image, shared.config.solver)?;
        cell.iterations = res.iterations;
        cell.converged = res.converged;
        let score = psnr(shared.image, &recon)?;
        if shared.config.cell_files {
            let dir = cell_dir(&shared.config.output, alpha, rep);
            fs::create_dir_all(&dir)?;
            scheme.save(&dir.join("scheme"))?;
            pgm::write_mask(&dir.join("mask.pgm"), scheme.rows(), scheme.cols(), scheme.mask())?;
            pgm::write(&dir.join("recon.pgm"), &recon, 255)?;
        }
        Ok(score)
    })();
    cell.psnr = outcome.map_err(|e| e.to_string());
    if shared.config.cell_files {
        let dir = cell_dir(&shared.config.output, alpha, rep);
        let report = format!(
            "alpha = {alpha}\nrep = {rep}\nseed = {seed}\nm = {}\nm_prime = {}\niterations = {}\nconverged = {}\npsnr = {}\n",
            cell.m,
            cell.m_prime,
            cell.iterations,
            cell.converged,
            match &cell.psnr {
                Ok(p) => p.to_string(),
                Err(e) => format!("nan\nerror = {e}"),
            }
        );
        let _ = fs::create_dir_all(&dir).and_then(|_| fs::write(dir.join("report.txt"), report));
    }
    cell
}

fn summarize(alpha: f64, cells: &[CellResult]) -> AlphaSummary {
    let ok: Vec<f64> = cells
        .iter()
        .filter(|c| c.alpha == alpha)
        .filter_map(|c| c.psnr.as_ref().ok().copied())
        .collect();
    let total = cells.iter().filter(|c| c.alpha == alpha).count();
    let count = ok.len();
    let mean = if count == 0 { f64::NAN } else { ok.iter().sum::<f64>() / count as f64 };
    let std = if count < 2 {
        0.0
    } else {
        (ok.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
    };
    AlphaSummary {
        alpha,
        mean,
        std,
        count,
        failures: total - count,
    }
}

/// Runs every cell and writes `config.txt`, `results.csv`, `summary.csv`
/// and, when enabled, per-cell files under `cells/`.
pub fn run_experiment(config: &ExperimentConfig, exec: Execution) -> Result<ExperimentOutcome> {
    config.validate()?;
    let image = config.load_image()?;
    let (rows, cols) = (image.rows(), image.cols());
    let system = MeasurementSystem::full(rows, cols, config.wavelet_for(rows, cols))?;
    let density = compute_density(&system)?;
    run_with_density(config, &image, &system, &density, exec)
}

/// As [`run_experiment`] with the image, system and density supplied.
pub fn run_with_density(
    config: &ExperimentConfig,
    image: &Image,
    system: &MeasurementSystem,
    density: &Density,
    exec: Execution,
) -> Result<ExperimentOutcome> {
    config.validate()?;
    let chains = config
        .alphas
        .iter()
        .map(|&a| config.generator_for(a).prepare(density))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..config.alphas.len())
        .flat_map(|i| (0..config.repetitions).map(move |r| (i, r)))
        .collect();
    fs::create_dir_all(&config.output)?;
    let shared = Shared { config, image, system };
    let cells = exec.map_slice(&jobs, |&(i, r)| run_cell(&shared, &chains[i], config.alphas[i], r));
    let mut seen = Vec::new();
    let summary = config
        .alphas
        .iter()
        .filter(|a| {
            let fresh = !seen.contains(*a);
            seen.push(**a);
            fresh
        })
        .map(|&a| summarize(a, &cells))
        .collect();
    let outcome = ExperimentOutcome { cells, summary };
    fs::write(config.output.join("config.txt"), config.to_text())?;
    fs::write(config.output.join("results.csv"), outcome.results_csv())?;
    fs::write(config.output.join("summary.csv"), outcome.summary_csv())?;
    Ok(outcome)
}
