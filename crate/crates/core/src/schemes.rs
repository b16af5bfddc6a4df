//! Sampling schemes: trajectories plus their deduplicated k-space masks.
//!
//! On disk a scheme is a trajectory CSV (`step,row,col,jump`, raw k-space
//! indices with DC at `(0, 0)`) and a `key = value` metadata sidecar.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::chains::{ChainSampler, Connectivity, Generator, Trajectory};
use crate::error::{Error, Result};

/// Step cap for [`generate_until`].
pub const MAX_STEPS: usize = 1_000_000_000;

/// A trajectory on a grid and the distinct sites it visits.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingScheme {
    rows: usize,
    cols: usize,
    trajectory: Trajectory,
    mask: Vec<usize>,
}

impl SamplingScheme {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n(&self) -> usize {
        self.rows * self.cols
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    /// Distinct sites in first-visit order.
    pub fn mask(&self) -> &[usize] {
        &self.mask
    }

    /// Chain length `m`.
    pub fn m(&self) -> usize {
        self.trajectory.len()
    }

    /// Distinct measurements `m'`.
    pub fn m_prime(&self) -> usize {
        self.mask.len()
    }

    /// Acceleration factor `r = n / m'`.
    pub fn acceleration(&self) -> f64 {
        self.n() as f64 / self.m_prime() as f64
    }

    /// Fraction `m' / n` of k-space kept.
    pub fn coverage(&self) -> f64 {
        self.m_prime() as f64 / self.n() as f64
    }

    pub fn jump_count(&self) -> usize {
        self.trajectory.jump_count()
    }

    /// `m / (jumps + 1)`.
    pub fn mean_run_length(&self) -> f64 {
        self.m() as f64 / (self.jump_count() + 1) as f64
    }

    pub fn generator(&self) -> Generator {
        self.trajectory.generator
    }

    pub fn seed(&self) -> u64 {
        self.trajectory.seed
    }

    /// Writes `<stem>.csv` and `<stem>.meta`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        let mut csv = String::with_capacity(16 * self.m() + 32);
        csv.push_str("step,row,col,jump\n");
        for (step, (&s, &j)) in self.trajectory.sites.iter().zip(&self.trajectory.jumps).enumerate() {
            let _ = writeln!(csv, "{step},{},{},{}", s / self.cols, s % self.cols, j as u8);
        }
        fs::write(with_ext(stem, "csv"), csv)?;
        fs::write(with_ext(stem, "meta"), self.metadata())?;
        Ok(())
    }

    fn metadata(&self) -> String {
        let g = self.generator();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("format", "kwalk-scheme-1".into());
        kv("generator", g.name().into());
        kv("alpha", g.alpha().to_string());
        kv("persistence", g.persistence().to_string());
        kv("connectivity", g.connectivity().map_or("none".into(), |c| c.to_string()));
        kv("seed", self.seed().to_string());
        kv("n", self.n().to_string());
        kv("rows", self.rows.to_string());
        kv("cols", self.cols.to_string());
        kv("m", self.m().to_string());
        kv("m_prime", self.m_prime().to_string());
        kv("r", self.acceleration().to_string());
        kv("coverage", self.coverage().to_string());
        kv("jumps", self.jump_count().to_string());
        kv("mean_run_length", self.mean_run_length().to_string());
        s
    }

    /// Reads a scheme written by [`SamplingScheme::save`].
    pub fn load(stem: &Path) -> Result<Self> {
        let meta = parse_key_values(&fs::read_to_string(with_ext(stem, "meta"))?)?;
        let get = |k: &str| meta.get(k).ok_or_else(|| Error::Parse(format!("scheme metadata lacks `{k}`")));
        let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| Error::Parse(format!("bad `{k}`"))) };
        let int = |k: &str| -> Result<u64> { get(k)?.parse().map_err(|_| Error::Parse(format!("bad `{k}`"))) };
        let rows = int("rows")? as usize;
        let cols = int("cols")? as usize;
        let alpha = num("alpha")?;
        let connectivity = || -> Result<Connectivity> { get("connectivity")?.parse() };
        let generator = match get("generator")?.as_str() {
            "iid" => Generator::Iid,
            "markov" => Generator::Markov {
                alpha,
                connectivity: connectivity()?,
            },
            "second-order" => Generator::SecondOrder {
                alpha,
                persistence: num("persistence")?,
                connectivity: connectivity()?,
            },
            "explicit" => Generator::Explicit { alpha },
            other => return Err(Error::Parse(format!("unknown generator `{other}`"))),
        };
        let csv = fs::read_to_string(with_ext(stem, "csv"))?;
        let mut lines = csv.lines();
        if lines.next().map(str::trim) != Some("step,row,col,jump") {
            return Err(Error::Parse("trajectory CSV header must be `step,row,col,jump`".into()));
        }
        let mut sites = Vec::new();
        let mut jumps = Vec::new();
        for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad CSV line {}", i + 2)));
            if f.len() != 4 || parse(f[0])? != i {
                return Err(Error::Parse(format!("bad CSV line {}", i + 2)));
            }
            let (r, c) = (parse(f[1])?, parse(f[2])?);
            if r >= rows || c >= cols {
                return Err(Error::Validation(format!("site ({r}, {c}) outside {rows}x{cols}")));
            }
            sites.push(r * cols + c);
            jumps.push(match f[3] {
                "0" => false,
                "1" => true,
                _ => return Err(Error::Parse(format!("bad jump flag on line {}", i + 2))),
            });
        }
        let traj = Trajectory {
            sites,
            jumps,
            seed: int("seed")?,
            generator,
        };
        scheme_from_trajectory(traj, rows, cols)
    }
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {} is not key = value", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Deduplicates a trajectory into a scheme.
pub fn scheme_from_trajectory(trajectory: Trajectory, rows: usize, cols: usize) -> Result<SamplingScheme> {
    if trajectory.is_empty() {
        return Err(Error::Validation("empty trajectory".into()));
    }
    if trajectory.jumps.len() != trajectory.sites.len() {
        return Err(Error::Validation("jump flags do not match sites".into()));
    }
    let n = rows * cols;
    let mut seen = vec![false; n];
    let mut mask = Vec::new();
    for &s in &trajectory.sites {
        if s >= n {
            return Err(Error::Validation(format!("site {s} outside a grid of {n}")));
        }
        if !std::mem::replace(&mut seen[s], true) {
            mask.push(s);
        }
    }
    Ok(SamplingScheme {
        rows,
        cols,
        trajectory,
        mask,
    })
}

/// Runs a walker until the distinct-site coverage first reaches
/// `target_coverage` (at least `ceil(target * n)` sites).
pub fn generate_until(chain: &ChainSampler, target_coverage: f64, seed: u64) -> Result<SamplingScheme> {
    if !(target_coverage > 0.0 && target_coverage <= 1.0) {
        return Err(Error::Validation(format!("coverage {target_coverage} outside (0, 1]")));
    }
    let (rows, cols) = chain.grid();
    let n = rows * cols;
    let need = ((target_coverage * n as f64) - 1e-9).ceil().max(1.0) as usize;
    if chain.support_size() < need {
        return Err(Error::Numerical(format!(
            "coverage target needs {need} sites but only {} have positive probability",
            chain.support_size()
        )));
    }
    let mut walker = chain.walker(seed);
    let mut seen = vec![false; n];
    let mut distinct = 0;
    let mut sites = Vec::new();
    let mut jumps = Vec::new();
    while distinct < need {
        if sites.len() >= MAX_STEPS {
            return Err(Error::Numerical(format!("coverage not reached after {MAX_STEPS} steps")));
        }
        let (s, j) = walker.step();
        if !std::mem::replace(&mut seen[s], true) {
            distinct += 1;
        }
        sites.push(s);
        jumps.push(j);
    }
    let traj = Trajectory {
        sites,
        jumps,
        seed,
        generator: chain.generator(),
    };
    scheme_from_trajectory(traj, rows, cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{compute_density, Density};
    use crate::transforms::{MeasurementSystem, WaveletSpec};

    fn traj(sites: Vec<usize>) -> Trajectory {
        let jumps = vec![true; sites.len()];
        Trajectory {
            sites,
            jumps,
            seed: 0,
            generator: Generator::Iid,
        }
    }

    #[test]
    fn full_and_degenerate_trajectories() {
        let s = scheme_from_trajectory(traj((0..16).rev().collect()), 4, 4).unwrap();
        assert_eq!(s.acceleration(), 1.0);
        assert_eq!(s.coverage(), 1.0);
        let s = scheme_from_trajectory(traj(vec![5; 40]), 4, 4).unwrap();
        assert_eq!(s.m_prime(), 1);
        assert_eq!(s.m(), 40);
        assert!(scheme_from_trajectory(traj(vec![16]), 4, 4).is_err());
        assert!(scheme_from_trajectory(traj(vec![]), 4, 4).is_err());
    }

    #[test]
    fn twenty_percent_coverage() {
        let sys = MeasurementSystem::full(64, 64, WaveletSpec::haar(4)).unwrap();
        let d = compute_density(&sys).unwrap();
        for g in [Generator::Iid, Generator::markov(0.1), Generator::second_order(0.01, 0.5)] {
            let s = generate_until(&g.prepare(&d).unwrap(), 0.2, 8).unwrap();
            assert!((0.199..=0.201).contains(&s.coverage()), "{g}");
        }
    }

    #[test]
    fn full_coverage_terminates() {
        let d = Density::uniform(4, 4).unwrap();
        let s = generate_until(&Generator::Iid.prepare(&d).unwrap(), 1.0, 1).unwrap();
        assert_eq!(s.m_prime(), 16);
        assert!(s.m() >= 16);
    }

    #[test]
    fn unreachable_target() {
        let mut pi = vec![1.0; 16];
        pi[3] = 0.0;
        let d = Density::from_pi_on_grid(4, 4, pi).unwrap();
        let chain = Generator::Iid.prepare(&d).unwrap();
        assert!(matches!(generate_until(&chain, 1.0, 1), Err(Error::Numerical(_))));
        assert!(generate_until(&chain, 0.0, 1).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let sys = MeasurementSystem::full(16, 16, WaveletSpec::haar(2)).unwrap();
        let d = compute_density(&sys).unwrap();
        for g in [Generator::Iid, Generator::markov(0.013), Generator::second_order(0.1, 0.7)] {
            let s = generate_until(&g.prepare(&d).unwrap(), 0.3, 44).unwrap();
            let stem = dir.path().join(g.name());
            s.save(&stem).unwrap();
            assert_eq!(SamplingScheme::load(&stem).unwrap(), s);
            let again = generate_until(&g.prepare(&d).unwrap(), 0.3, 44).unwrap();
            let stem2 = dir.path().join(format!("{}-again", g.name()));
            again.save(&stem2).unwrap();
            assert_eq!(fs::read(with_ext(&stem, "csv")).unwrap(), fs::read(with_ext(&stem2, "csv")).unwrap());
            assert_eq!(fs::read(with_ext(&stem, "meta")).unwrap(), fs::read(with_ext(&stem2, "meta")).unwrap());
        }
    }

    #[test]
    fn key_value_parsing() {
        let kv = parse_key_values("a = 1\n# c\n\nb=x # trailing\n").unwrap();
        assert_eq!(kv["a"], "1");
        assert_eq!(kv["b"], "x");
        assert!(parse_key_values("nonsense").is_err());
    }
}
