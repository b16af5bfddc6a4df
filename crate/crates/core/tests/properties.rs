use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use kwalk::certify::{project_l1_ball, s_max};
use kwalk::chains::{build_metropolis, mix_kernel, Connectivity, Generator, GridGraph};
use kwalk::density::{compute_density, Density};
use kwalk::pgm;
use kwalk::rng::Stream;
use kwalk::transforms::{dwt2, idwt2, Family, Image, MeasurementSystem, WaveletSpec};

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Identity), Just(Family::Haar), Just(Family::Daubechies4)]
}

fn spec_for(family: Family, rows: usize, cols: usize, depth: usize) -> WaveletSpec {
    let max = kwalk::transforms::wavelet::max_levels(rows, cols);
    let levels = if family == Family::Identity { 0 } else { 1 + depth % max.max(1) };
    WaveletSpec { family, levels: levels.min(max) }
}

fn cvec(rng: &mut Stream, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.normal(), rng.normal())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operator_adjoint_identity(r in 1u32..=4, c in 2u32..=5, f in family(), depth in 0usize..4, seed in any::<u64>()) {
        let (rows, cols) = (1usize << r, 1usize << c);
        let n = rows * cols;
        let mut rng = Stream::new(seed);
        let mut mask: Vec<usize> = (0..1 + rng.below(n)).map(|_| rng.below(n)).collect();
        mask.sort_unstable();
        mask.dedup();
        let sys = MeasurementSystem::new(rows, cols, spec_for(f, rows, cols, depth), mask).unwrap();
        let w = cvec(&mut rng, n);
        let y = cvec(&mut rng, sys.m());
        let lhs: Complex64 = sys.forward(&w).unwrap().iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
        let rhs: Complex64 = w.iter().zip(&sys.adjoint(&y).unwrap()).map(|(a, b)| a.conj() * b).sum();
        prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + lhs.norm()));
    }

    #[test]
    fn wavelet_round_trip(r in 0u32..=5, c in 1u32..=6, f in family(), depth in 0usize..6, seed in any::<u64>()) {
        let (rows, cols) = (1usize << r, 1usize << c);
        let spec = spec_for(f, rows, cols, depth);
        let mut rng = Stream::new(seed);
        let x: Vec<f64> = (0..rows * cols).map(|_| rng.normal()).collect();
        let w = dwt2(&x, rows, cols, &spec).unwrap();
        let e1: f64 = x.iter().map(|v| v * v).sum();
        let e2: f64 = w.iter().map(|v| v * v).sum();
        prop_assert!((e1 - e2).abs() < 1e-10 * e1.max(1.0));
        let back = idwt2(&w, rows, cols, &spec).unwrap();
        prop_assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn density_is_a_distribution(r in 0u32..=4, c in 1u32..=5, f in family(), depth in 0usize..4) {
        let (rows, cols) = (1usize << r, 1usize << c);
        let sys = MeasurementSystem::full(rows, cols, spec_for(f, rows, cols, depth)).unwrap();
        let d = compute_density(&sys).unwrap();
        prop_assert!(d.pi().iter().all(|&p| p > 0.0));
        prop_assert!((d.pi().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // L lies between 1 (flat rows) and n (one coefficient per row)
        prop_assert!(d.l() >= 1.0 - 1e-12 && d.l() <= (rows * cols) as f64 + 1e-9);
    }

    #[test]
    fn metropolis_kernel_is_reversible(rows in 1usize..6, cols in 2usize..7, eight in any::<bool>(),
                                       alpha in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut rng = Stream::new(seed);
        let pi: Vec<f64> = (0..rows * cols).map(|_| 0.05 + rng.uniform()).collect();
        let d = Density::from_pi_on_grid(rows, cols, pi).unwrap();
        let conn = if eight { Connectivity::Eight } else { Connectivity::Four };
        let g = Arc::new(GridGraph::new(rows, cols, conn).unwrap());
        let k = mix_kernel(&build_metropolis(g, &d).unwrap(), alpha).unwrap();
        prop_assert!(k.row_sum_error() < 1e-12);
        prop_assert!(k.detailed_balance_error() < 1e-12);
        prop_assert!(k.stationary_residual() < 1e-12);
    }

    #[test]
    fn walks_stay_continuous(alpha in 0.0f64..0.5, persistence in 0.0f64..=1.0, second in any::<bool>(),
                             seed in any::<u64>()) {
        let sys = MeasurementSystem::full(8, 8, WaveletSpec::haar(1)).unwrap();
        let d = compute_density(&sys).unwrap();
        let g = if second { Generator::second_order(alpha, persistence) } else { Generator::markov(alpha) };
        let traj = g.prepare(&d).unwrap().simulate(500, seed).unwrap();
        let graph = GridGraph::new(8, 8, Connectivity::Four).unwrap();
        prop_assert_eq!(traj.continuity_violations(&graph), 0);
        prop_assert!(traj.jumps[0]);
    }

    #[test]
    fn l1_ball_projection_is_nearest(seed in any::<u64>(), n in 1usize..12, radius in 0.01f64..5.0) {
        let mut rng = Stream::new(seed);
        let u: Vec<f64> = (0..n).map(|_| 3.0 * rng.normal()).collect();
        let p = project_l1_ball(&u, radius);
        prop_assert!(p.iter().map(|v| v.abs()).sum::<f64>() <= radius * (1.0 + 1e-12));
        let dist = |v: &[f64]| v.iter().zip(&u).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        for _ in 0..20 {
            let q: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let q = project_l1_ball(&q, radius * rng.uniform());
            prop_assert!(dist(&p) <= dist(&q) + 1e-12);
        }
    }

    #[test]
    fn s_max_is_consistent(gamma in 1e-4f64..2.0) {
        let s = s_max(gamma).unwrap();
        prop_assert!(s == 0 || gamma < 1.0 / (2.0 * s as f64));
        prop_assert!(gamma >= 1.0 / (2.0 * (s + 1) as f64));
    }

    #[test]
    fn pgm_round_trip(rows in 1usize..9, cols in 1usize..9, wide in any::<bool>(), seed in any::<u64>()) {
        let maxval: u16 = if wide { 4095 } else { 255 };
        let mut rng = Stream::new(seed);
        let px: Vec<f64> = (0..rows * cols).map(|_| rng.below(maxval as usize + 1) as f64 / maxval as f64).collect();
        let img = Image::unit(rows, cols, px).unwrap();
        let back = pgm::decode(&pgm::encode(&img, maxval)).unwrap();
        prop_assert_eq!(back.rows(), rows);
        prop_assert!(back.pixels().iter().zip(img.pixels()).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}
