use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kwalk::density::Density;
use kwalk::schemes::{parse_key_values, SamplingScheme};

fn kwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kwalk")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = kwalk(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn kv(text: &str) -> std::collections::BTreeMap<String, String> {
    parse_key_values(text).unwrap()
}

#[test]
fn identity_density_is_uniform_and_rerun_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.dens");
    let b = dir.path().join("b.dens");
    for f in [&a, &b] {
        ok(&["density", "--rows", "8", "--cols", "8", "--wavelet", "identity:0", "--out", p(f)]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let d = Density::read_cache(&a).unwrap();
    assert!(d.pi().iter().all(|&v| (v - 1.0 / 64.0).abs() < 1e-15));
}

#[test]
fn haar_line_density_matches_materialized_rows() {
    let dir = tempfile::tempdir().unwrap();
    let fast = dir.path().join("fast.dens");
    let slow = dir.path().join("slow.dens");
    ok(&["density", "--rows", "1", "--cols", "8", "--wavelet", "haar:2", "--out", p(&fast)]);
    ok(&["density", "--rows", "1", "--cols", "8", "--wavelet", "haar:2", "--materialized", "--out", p(&slow)]);
    let (f, s) = (Density::read_cache(&fast).unwrap(), Density::read_cache(&slow).unwrap());
    for (x, y) in f.pi().iter().zip(s.pi()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn sample_flags_jumps_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let dens = dir.path().join("d.dens");
    ok(&["density", "--rows", "16", "--cols", "16", "--wavelet", "haar:2", "--out", p(&dens)]);
    let s1 = dir.path().join("s1");
    let s2 = dir.path().join("s2");
    for s in [&s1, &s2] {
        ok(&["sample", "--density", p(&dens), "--alpha", "1", "--coverage", "0.3", "--seed", "5", "--out", p(s)]);
    }
    let csv = fs::read_to_string(s1.with_extension("csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(s2.with_extension("csv")).unwrap());
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",1")));
    assert!(dir.path().join("s1.mask.pgm").exists());
}

#[test]
fn mean_run_length_tracks_inverse_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let dens = dir.path().join("d.dens");
    ok(&["density", "--rows", "64", "--cols", "64", "--out", p(&dens)]);
    let mut total = 0.0;
    for seed in 0..10 {
        let stem = dir.path().join(format!("s{seed}"));
        let seed = seed.to_string();
        ok(&["sample", "--density", p(&dens), "--alpha", "0.01", "--coverage", "0.2", "--seed", &seed, "--out", p(&stem)]);
        let meta = kv(&fs::read_to_string(stem.with_extension("meta")).unwrap());
        total += meta["mean_run_length"].parse::<f64>().unwrap();
    }
    let mean = total / 10.0;
    assert!((50.0..=200.0).contains(&mean), "{mean}");
}

#[test]
fn full_mask_recon_is_exact_and_psnr_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let dens = dir.path().join("d.dens");
    ok(&["density", "--rows", "16", "--cols", "16", "--out", p(&dens)]);
    let stem = dir.path().join("full");
    ok(&["sample", "--density", p(&dens), "--alpha", "1", "--coverage", "1", "--out", p(&stem)]);
    let out = dir.path().join("r.pgm");
    let report = kv(&ok(&["recon", "--image", "phantom", "--scheme", p(&stem), "--out", p(&out)]));
    assert_eq!(report["psnr"], "inf");
    assert_eq!(ok(&["psnr", "--reference", "phantom", "--image", p(&out)]).trim(), "inf");
}

#[test]
fn iid_recon_of_phantom_beats_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let dens = dir.path().join("d.dens");
    ok(&["density", "--rows", "128", "--cols", "128", "--out", p(&dens)]);
    let stem = dir.path().join("iid");
    ok(&["sample", "--density", p(&dens), "--generator", "iid", "--coverage", "0.2", "--seed", "3", "--out", p(&stem)]);
    let out = dir.path().join("r.pgm");
    let report = kv(&ok(&["recon", "--image", "phantom", "--scheme", p(&stem), "--out", p(&out)]));
    let db: f64 = report["psnr"].parse().unwrap();
    assert!(db > 25.0, "{db}");
}

#[test]
fn certify_reports_gap_weyl_and_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let dens = dir.path().join("d.dens");
    ok(&["density", "--rows", "8", "--cols", "8", "--wavelet", "haar:1", "--out", p(&dens)]);
    let stem = dir.path().join("mk");
    ok(&["sample", "--density", p(&dens), "--alpha", "0.2", "--steps", "400", "--seed", "2", "--out", p(&stem)]);
    let rep = dir.path().join("cert.txt");
    let text = ok(&["certify", "--scheme", p(&stem), "--wavelet", "haar:1", "--gamma", "--s", "2", "--out", p(&rep)]);
    let r = kv(&text);
    assert_eq!(fs::read_to_string(&rep).unwrap(), text);
    assert_eq!(r["weyl_holds"], "true");
    let gap: f64 = r["spectral_gap"].parse().unwrap();
    assert!(gap >= 0.2 - 1e-10);
    assert!(r["gamma"].parse::<f64>().unwrap() >= 0.0);
    assert!(r["deviation"].parse::<f64>().unwrap() > 0.0);
    // the count uses the measured gap, clamped to 1
    let l: f64 = r["L"].parse().unwrap();
    let want = kwalk::certify::min_measurements_markov(l, 2, 64.0, 0.1, gap.min(1.0)).unwrap();
    assert_eq!(r["m_min_markov"], want.to_string());
}

#[test]
fn bounds_prints_reference_values() {
    let r = kv(&ok(&["bounds", "--n", "64", "--L", "1", "--s", "2", "--eta", "0.1", "--gap", "0.1", "--m", "10000"]));
    assert_eq!(r["m_min_iid"], "213");
    assert_eq!(r["m_min_markov"], "5431");
}

#[test]
fn exit_codes() {
    // validation
    assert_eq!(kwalk(&["bounds", "--n", "64", "--L", "1", "--eta", "2"]).status.code(), Some(2));
    assert_eq!(kwalk(&["bounds", "--n", "64", "--L", "1", "--t", "1.5", "--gap", "0.3"]).status.code(), Some(0));
    assert_eq!(kwalk(&["density", "--rows", "3", "--cols", "8", "--out", "/dev/null"]).status.code(), Some(2));
    assert_eq!(kwalk(&["nonsense"]).status.code(), Some(2));
    // capacity
    let dir = tempfile::tempdir().unwrap();
    let dens = dir.path().join("d.dens");
    ok(&["density", "--rows", "128", "--cols", "64", "--out", p(&dens)]);
    let stem = dir.path().join("s");
    ok(&["sample", "--density", p(&dens), "--steps", "10", "--out", p(&stem)]);
    let rep = dir.path().join("c.txt");
    assert_eq!(kwalk(&["certify", "--scheme", p(&stem), "--out", p(&rep)]).status.code(), Some(3));
}

#[test]
fn experiment_is_byte_identical_across_runs_and_schedules() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "rows = 16\ncols = 16\nalphas = 1,0.1\nrepetitions = 2\nseed = 9\n").unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["experiment", "--config", p(&cfg), "--output", p(&a)]);
    ok(&["--sequential", "experiment", "--config", p(&cfg), "--output", p(&b)]);
    let mut files = Vec::new();
    collect(&a, &mut files);
    assert!(files.len() > 10);
    for f in files {
        let rel = f.strip_prefix(&a).unwrap();
        let (x, y) = (fs::read(&f).unwrap(), fs::read(b.join(rel)).unwrap());
        if rel == Path::new("config.txt") {
            // differs only in the output line
            let strip = |v: &[u8]| String::from_utf8_lossy(v).lines().filter(|l| !l.starts_with("output")).collect::<Vec<_>>().join("\n");
            assert_eq!(strip(&x), strip(&y));
        } else {
            assert_eq!(x, y, "{}", rel.display());
        }
    }
    let table = fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 4);
}

#[test]
fn single_repetition_matches_sample_then_recon() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e");
    ok(&[
        "experiment", "--rows", "16", "--cols", "16", "--alphas", "0.5", "--repetitions", "1", "--seed", "4",
        "--output", p(&out),
    ]);
    let cell = out.join("cells/alpha=0.5/rep=0");
    let scheme = SamplingScheme::load(&cell.join("scheme")).unwrap();
    assert_eq!(scheme.seed(), kwalk::experiment::cell_seed(4, 0.5, 0));

    let dens = dir.path().join("d.dens");
    ok(&["density", "--rows", "16", "--cols", "16", "--out", p(&dens)]);
    let stem = dir.path().join("s");
    let seed = scheme.seed().to_string();
    ok(&["sample", "--density", p(&dens), "--alpha", "0.5", "--coverage", "0.2", "--seed", &seed, "--out", p(&stem)]);
    assert_eq!(
        fs::read(stem.with_extension("csv")).unwrap(),
        fs::read(cell.join("scheme.csv")).unwrap()
    );
    let rec = dir.path().join("r.pgm");
    ok(&["recon", "--image", "phantom", "--scheme", p(&stem), "--out", p(&rec)]);
    assert_eq!(fs::read(rec).unwrap(), fs::read(cell.join("recon.pgm")).unwrap());
}

fn collect(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
    for e in fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        if path.is_dir() {
            collect(&path, out);
        } else {
            out.push(path);
        }
    }
}
