//! `kwalk` command-line driver.
//!
//! Exit codes: 0 success, 2 validation or parse errors, 3 capacity guards,
//! 4 numerical failures, 1 I/O.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kwalk::certify::{self, BoundInputs, BoundReport, GammaParams};
use kwalk::chains::{spectral_gap, Connectivity, Generator};
use kwalk::density::{compute_density, compute_density_materialized, Density};
use kwalk::experiment::{run_experiment, ExperimentConfig, CONFIG_KEYS};
use kwalk::phantom::shepp_logan_8bit;
use kwalk::recon::{psnr, reconstruct, DrParams};
use kwalk::schemes::{generate_until, scheme_from_trajectory, SamplingScheme};
use kwalk::transforms::{Family, Image, MeasurementSystem, WaveletSpec};
use kwalk::{pgm, Error, Execution, Result};

#[derive(Parser, Debug)]
#[command(name = "kwalk", version, about = "Continuous variable-density k-space sampling")]
struct Cli {
    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the sampling density of a grid and write its cache.
    Density(DensityArgs),
    /// Draw a sampling scheme.
    Sample(SampleArgs),
    /// Reconstruct an image from its samples on a scheme.
    Recon(ReconArgs),
    /// Certify a scheme: Gram deviation, bounds and optionally gamma.
    Certify(CertifyArgs),
    /// Evaluate the closed-form tail bounds and measurement counts.
    Bounds(BoundsArgs),
    /// Run a repeated sampling and reconstruction sweep.
    Experiment(ExperimentArgs),
    /// PSNR of an image against a reference.
    Psnr(PsnrArgs),
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    /// `family:levels`, e.g. `db4:4`; `auto` picks db4 at the default depth.
    #[arg(long, default_value = "auto")]
    wavelet: String,
}

impl GridArgs {
    fn spec(&self, rows: usize, cols: usize) -> Result<WaveletSpec> {
        if self.wavelet == "auto" {
            return Ok(WaveletSpec {
                family: Family::Daubechies4,
                levels: WaveletSpec::default_levels(rows, cols),
            });
        }
        self.wavelet.parse()
    }

    fn dims(&self) -> Result<(usize, usize)> {
        match (self.rows, self.cols) {
            (Some(r), Some(c)) => Ok((r, c)),
            _ => Err(Error::Validation("--rows and --cols are required".into())),
        }
    }
}

#[derive(Args, Debug)]
struct DensityArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Cache file to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write `row,col,pi` text.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Materialize every row instead of using the separable fast path.
    #[arg(long)]
    materialized: bool,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Density cache written by `density`.
    #[arg(long)]
    density: PathBuf,
    /// `iid`, `markov` or `second-order`.
    #[arg(long, default_value = "markov")]
    generator: String,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    persistence: f64,
    #[arg(long, default_value = "4")]
    connectivity: String,
    /// Stop once this fraction of sites has been visited.
    #[arg(long, conflicts_with = "steps")]
    coverage: Option<f64>,
    /// Fixed number of steps.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output stem: writes `<stem>.csv`, `<stem>.meta` and `<stem>.mask.pgm`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// ℓ1 prox threshold; `auto` scales with the data.
    #[arg(long, default_value = "auto")]
    threshold: String,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

impl SolverArgs {
    fn params(&self) -> Result<DrParams> {
        let gamma = match self.threshold.as_str() {
            "auto" => None,
            v => Some(v.parse().map_err(|_| Error::Parse(format!("bad threshold `{v}`")))?),
        };
        let p = DrParams {
            max_iters: self.max_iters,
            gamma,
            lambda: self.lambda,
            tol: self.tol,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args, Debug)]
struct ReconArgs {
    /// Reference PGM, or `phantom` for the bundled phantom.
    #[arg(long)]
    image: String,
    /// Scheme stem written by `sample`.
    #[arg(long)]
    scheme: PathBuf,
    #[arg(long, default_value = "auto")]
    wavelet: String,
    #[command(flatten)]
    solver: SolverArgs,
    /// Reconstructed PGM.
    #[arg(long)]
    out: PathBuf,
    /// `key = value` report; defaults to `<out>.txt`.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long)]
    scheme: PathBuf,
    #[arg(long, default_value = "auto")]
    wavelet: String,
    /// Sparsity for the measurement counts.
    #[arg(long, default_value_t = 1)]
    s: u32,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// Deviation level; defaults to `1/(2s)`.
    #[arg(long)]
    t: Option<f64>,
    /// Also bound gamma of the realified sampled operator (n ≤ 64).
    #[arg(long)]
    gamma: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long)]
    n: f64,
    #[arg(long = "L")]
    l: f64,
    #[arg(long, default_value_t = 1)]
    s: u32,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// Deviation level; defaults to `1/(2s)`.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    m: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Flat `key = value` configuration; flags of the same name override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    image: Option<String>,
    #[arg(long)]
    rows: Option<String>,
    #[arg(long)]
    cols: Option<String>,
    #[arg(long)]
    wavelet: Option<String>,
    #[arg(long)]
    coverage: Option<String>,
    #[arg(long)]
    alphas: Option<String>,
    #[arg(long)]
    repetitions: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    persistence: Option<String>,
    #[arg(long)]
    connectivity: Option<String>,
    #[arg(long = "max_iters", alias = "max-iters")]
    max_iters: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long = "cell_files", alias = "cell-files")]
    cell_files: Option<String>,
}

impl ExperimentArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let all = [
            ("image", &self.image),
            ("rows", &self.rows),
            ("cols", &self.cols),
            ("wavelet", &self.wavelet),
            ("coverage", &self.coverage),
            ("alphas", &self.alphas),
            ("repetitions", &self.repetitions),
            ("seed", &self.seed),
            ("generator", &self.generator),
            ("persistence", &self.persistence),
            ("connectivity", &self.connectivity),
            ("max_iters", &self.max_iters),
            ("threshold", &self.threshold),
            ("lambda", &self.lambda),
            ("tol", &self.tol),
            ("output", &self.output),
            ("cell_files", &self.cell_files),
        ];
        debug_assert!(all.iter().all(|(k, _)| CONFIG_KEYS.contains(k)));
        all.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect()
    }
}

#[derive(Args, Debug)]
struct PsnrArgs {
    #[arg(long)]
    reference: String,
    #[arg(long)]
    image: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match run(cli.command, exec) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kwalk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command, exec: Execution) -> Result<()> {
    match command {
        Command::Density(a) => cmd_density(a, exec),
        Command::Sample(a) => cmd_sample(a),
        Command::Recon(a) => cmd_recon(a),
        Command::Certify(a) => cmd_certify(a, exec),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Experiment(a) => cmd_experiment(a, exec),
        Command::Psnr(a) => cmd_psnr(a),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn fmt_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}

/// Reference image; the phantom is quantized to 8 bits like any PGM input.
fn load_reference(name: &str, rows: usize, cols: usize) -> Result<Image> {
    if name == "phantom" {
        return shepp_logan_8bit(rows, cols);
    }
    let img = pgm::read(Path::new(name))?;
    if img.rows() != rows || img.cols() != cols {
        return Err(Error::Dimension(format!(
            "image is {}x{} but the scheme is {rows}x{cols}",
            img.rows(),
            img.cols()
        )));
    }
    Ok(img)
}

fn cmd_density(a: DensityArgs, exec: Execution) -> Result<()> {
    let (rows, cols) = a.grid.dims()?;
    let system = MeasurementSystem::full(rows, cols, a.grid.spec(rows, cols)?)?;
    let density = if a.materialized {
        compute_density_materialized(&system, exec)?
    } else {
        compute_density(&system)?
    };
    density.write_cache(&a.out)?;
    if let Some(csv) = &a.csv {
        let mut text = String::from("row,col,pi\n");
        for (i, p) in density.pi().iter().enumerate() {
            text.push_str(&format!("{},{},{p:e}\n", i / cols, i % cols));
        }
        fs::write(csv, text)?;
    }
    println!("n = {}\nL = {}", density.n(), density.l());
    Ok(())
}

fn generator_of(name: &str, alpha: f64, persistence: f64, connectivity: Connectivity) -> Result<Generator> {
    match name {
        "iid" => Ok(Generator::Iid),
        "markov" => Ok(Generator::Markov { alpha, connectivity }),
        "second-order" => Ok(Generator::SecondOrder {
            alpha,
            persistence,
            connectivity,
        }),
        other => Err(Error::Validation(format!("unknown generator `{other}`"))),
    }
}

fn cmd_sample(a: SampleArgs) -> Result<()> {
    let density = Density::read_cache(&a.density)?;
    let generator = generator_of(&a.generator, a.alpha, a.persistence, a.connectivity.parse()?)?;
    let chain = generator.prepare(&density)?;
    let scheme = match (a.coverage, a.steps) {
        (_, Some(m)) => scheme_from_trajectory(chain.simulate(m, a.seed)?, density.rows(), density.cols())?,
        (c, None) => generate_until(&chain, c.unwrap_or(0.2), a.seed)?,
    };
    scheme.save(&a.out)?;
    pgm::write_mask(&with_suffix(&a.out, ".mask.pgm"), scheme.rows(), scheme.cols(), scheme.mask())?;
    println!(
        "m = {}\nm_prime = {}\ncoverage = {}\nmean_run_length = {}",
        scheme.m(),
        scheme.m_prime(),
        scheme.coverage(),
        scheme.mean_run_length()
    );
    Ok(())
}

fn cmd_recon(a: ReconArgs) -> Result<()> {
    let scheme = SamplingScheme::load(&a.scheme)?;
    let (rows, cols) = (scheme.rows(), scheme.cols());
    let reference = load_reference(&a.image, rows, cols)?;
    let grid = GridArgs {
        rows: Some(rows),
        cols: Some(cols),
        wavelet: a.wavelet.clone(),
    };
    let system = MeasurementSystem::new(rows, cols, grid.spec(rows, cols)?, scheme.mask().to_vec())?;
    let (result, recon) = reconstruct(&system, &reference, a.solver.params()?)?;
    pgm::write(&a.out, &recon, 255)?;
    // score what was written
    let written = pgm::read(&a.out)?;
    let db = psnr(&reference, &written)?;
    let report = format!(
        "psnr = {}\nm_prime = {}\niterations = {}\nconverged = {}\nresidual = {:e}\nobjective = {}\n",
        fmt_db(db),
        scheme.m_prime(),
        result.iterations,
        result.converged,
        result.residual,
        result.objective
    );
    fs::write(a.report.unwrap_or_else(|| with_suffix(&a.out, ".txt")), &report)?;
    print!("{report}");
    Ok(())
}

fn cmd_certify(a: CertifyArgs, exec: Execution) -> Result<()> {
    let scheme = SamplingScheme::load(&a.scheme)?;
    let (rows, cols) = (scheme.rows(), scheme.cols());
    let grid = GridArgs {
        rows: Some(rows),
        cols: Some(cols),
        wavelet: a.wavelet.clone(),
    };
    let full = MeasurementSystem::full(rows, cols, grid.spec(rows, cols)?)?;
    let density = compute_density(&full)?;
    let rows_dense = certify::DenseRows::new(&full, exec)?;
    let traj = scheme.trajectory();
    let generator = scheme.generator();

    let mut text = String::new();
    let mut cert = certify::CertReport {
        generator: generator.to_string(),
        m: traj.len(),
        deviation: certify::deviation(&rows_dense, &density, &traj.sites)?,
        gamma: None,
    };
    if a.gamma {
        let sampled = full.with_mask(scheme.mask().to_vec())?;
        cert.gamma = Some(certify::gamma(&certify::realified(&sampled)?, &GammaParams::default(), exec)?);
    }
    text.push_str(&cert.to_text());

    let gap = match generator {
        Generator::Iid => None,
        g => {
            let chain = g.prepare(&density)?;
            match chain.kernel() {
                Some(k) => {
                    let measured = spectral_gap(k)?;
                    let alpha = g.alpha();
                    text.push_str(&format!("spectral_gap = {measured}\n"));
                    text.push_str(&format!("weyl_floor = {alpha}\n"));
                    text.push_str(&format!("weyl_holds = {}\n", measured >= alpha - 1e-10));
                    // A gap above 1 only makes the chain bound looser than
                    // its stated range allows; clamp into it.
                    Some(measured.min(1.0))
                }
                None => {
                    text.push_str("spectral_gap = na\n");
                    None
                }
            }
        }
    };
    let t = a.t.unwrap_or(1.0 / (2.0 * a.s as f64));
    let bounds = BoundReport::compute(BoundInputs {
        n: full.n() as f64,
        l: density.l(),
        s: a.s,
        eta: a.eta,
        t,
        gap,
        m: traj.len() as f64,
    })?;
    text.push_str(&bounds.to_text());
    fs::write(&a.out, &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_bounds(a: BoundsArgs) -> Result<()> {
    let report = BoundReport::compute(BoundInputs {
        n: a.n,
        l: a.l,
        s: a.s,
        eta: a.eta,
        t: a.t.unwrap_or(1.0 / (2.0 * a.s as f64)),
        gap: a.gap,
        m: a.m,
    })?;
    let text = report.to_text();
    if let Some(out) = &a.out {
        fs::write(out, &text)?;
    }
    print!("{text}");
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs, exec: Execution) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => ExperimentConfig::from_text(&fs::read_to_string(p)?)?,
        None => ExperimentConfig::default(),
    };
    for (k, v) in a.overrides() {
        config.set(k, v)?;
    }
    let outcome = run_experiment(&config, exec)?;
    print!("{}", outcome.summary_csv());
    let failures: usize = outcome.summary.iter().map(|s| s.failures).sum();
    if failures > 0 {
        eprintln!("kwalk: {failures} cell(s) failed; see cells/*/report.txt");
    }
    Ok(())
}

fn cmd_psnr(a: PsnrArgs) -> Result<()> {
    let image = pgm::read(&a.image)?;
    let reference = load_reference(&a.reference, image.rows(), image.cols())?;
    println!("{}", fmt_db(psnr(&reference, &image)?));
    Ok(())
}
