use proptest::prelude::*;

use modeconv::anomaly::{classify, fit_l1, fit_mahalanobis, l1_norm, roc_auc};
use modeconv::dataset::DatasetSplit;
use modeconv::graph::{Edge, SensorGraph};
use modeconv::ingest::{emit_binary, ingest_binary_stream, Series};
use modeconv::linalg::{symmetric_eigen, CMatrix, RMatrix};
use modeconv::modeconv::cheb::ScaledLaplacian;
use modeconv::modeconv::{complex_svd, normalized_laplacian};
use modeconv::signal::{correlate, default_frequency_grid, psd, Centering};
use modeconv::structure::{assemble_matrices, chain_stiffness, solve_eigenmodes};
use modeconv::window::{window_and_pad, Recording};
use num_complex::Complex64;

fn signals(n: usize, l: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, l), n)
}

fn graph(n: usize) -> impl Strategy<Value = SensorGraph> {
    prop::collection::vec(prop::option::of(0.05..3.0f64), n * (n - 1) / 2).prop_map(move |w| {
        let mut edges = Vec::new();
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                if let Some(weight) = w[k] {
                    edges.push(Edge { i, j, weight });
                }
                k += 1;
            }
        }
        SensorGraph::new(n, edges, vec![1.0; n], vec![]).unwrap()
    })
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counting half.
fn mann_whitney(scores: &[f64], truth: &[bool]) -> f64 {
    let (mut sum, mut pairs) = (0.0, 0.0);
    for (i, &ti) in truth.iter().enumerate() {
        for (j, &tj) in truth.iter().enumerate() {
            if ti && !tj {
                pairs += 1.0;
                sum += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    sum / pairs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn windows_cover_the_recording(t in 0usize..60, l in 1usize..12, stride in 1usize..12) {
        let rec = Recording::new(
            10.0,
            (0..t as i64).collect(),
            2,
            vec!["a".into()],
            (0..2 * t).map(|v| v as f64 + 1.0).collect(),
        )
        .unwrap();
        let w = window_and_pad(&rec, l, stride).unwrap();
        prop_assert_eq!(w.len(), t.div_ceil(stride));
        for (k, win) in w.iter().enumerate() {
            let start = k * stride;
            prop_assert_eq!(win.length, l);
            prop_assert!(win.pad_count < l);
            prop_assert_eq!(win.pad_count, (start + l).saturating_sub(t));
            for node in 0..2 {
                let ch = win.channel(node, 0);
                for (i, v) in ch.iter().enumerate() {
                    let expected = if start + i < t { (node * t + start + i) as f64 + 1.0 } else { 0.0 };
                    prop_assert_eq!(*v, expected);
                }
            }
        }
    }

    #[test]
    fn correlation_invariants(sig in (1usize..5, 2usize..20).prop_flat_map(|(n, l)| signals(n, l))) {
        let l = sig[0].len();
        let refs: Vec<&[f64]> = sig.iter().map(|s| s.as_slice()).collect();
        let lags: Vec<usize> = (0..l).collect();
        let cs = correlate(&refs, l, &lags, &Centering::WindowMean).unwrap();
        let c0 = &cs.c[0];
        prop_assert!((c0 - c0.transpose()).amax() < 1e-12);
        for i in 0..sig.len() {
            prop_assert!(c0[(i, i)] >= 0.0);
            if cs.auto[i] > 1e-9 {
                prop_assert!((cs.r[0][(i, i)] - 1.0).abs() < 1e-12);
            }
        }
        for r in &cs.r {
            prop_assert!(r.amax() <= 1.0 + 1e-12);
        }
        let est = psd(&cs.r, &lags, 50.0, &default_frequency_grid(l, 50.0)).unwrap();
        for s in &est.s {
            prop_assert!((s - s.adjoint()).iter().all(|z| z.norm() < 1e-9));
            for i in 0..sig.len() {
                prop_assert!(s[(i, i)].re >= -1e-9);
            }
        }
    }

    #[test]
    fn edge_weights_ignore_positive_scaling(sig in signals(3, 12), scale in prop::collection::vec(0.01..100.0f64, 3)) {
        let refs: Vec<&[f64]> = sig.iter().map(|s| s.as_slice()).collect();
        let scaled: Vec<Vec<f64>> = sig.iter().zip(&scale).map(|(s, a)| s.iter().map(|v| v * a).collect()).collect();
        let srefs: Vec<&[f64]> = scaled.iter().map(|s| s.as_slice()).collect();
        let a = correlate(&refs, 12, &[0], &Centering::WindowMean).unwrap();
        let b = correlate(&srefs, 12, &[0], &Centering::WindowMean).unwrap();
        prop_assert!((&a.r[0] - &b.r[0]).amax() < 1e-9);
    }

    #[test]
    fn svd_contract(r in 1usize..9, c in 1usize..9, seed in prop::collection::vec(-1.0..1.0f64, 128)) {
        let a = CMatrix::from_fn(r, c, |i, j| Complex64::new(seed[(i * 8 + j) % 128], seed[(i * 8 + j + 64) % 128]));
        prop_assume!(a.norm() > 1e-6);
        let svd = complex_svd(&a).unwrap();
        prop_assert!((svd.reconstruct() - &a).norm() / a.norm() < 1e-10);
        prop_assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(svd.singular_values.iter().all(|s| *s >= 0.0));
        let k = r.min(c);
        let gram = svd.u.adjoint() * &svd.u;
        prop_assert!((gram - CMatrix::identity(k, k)).iter().all(|z| z.norm() < 1e-8));
    }

    #[test]
    fn laplacian_spectra_are_bounded(g in (2usize..8).prop_flat_map(graph)) {
        let lap = normalized_laplacian(&g, true).unwrap();
        let eig = symmetric_eigen(&lap.laplacian).unwrap();
        prop_assert!(eig.eigenvalues.iter().all(|&l| (-1e-10..=2.0 + 1e-10).contains(&l)));
        let scaled = ScaledLaplacian::new(&lap.laplacian).unwrap();
        let d = scaled.dense();
        prop_assert!((&d - d.transpose()).amax() < 1e-12);
        let eig = symmetric_eigen(&d).unwrap();
        prop_assert!(eig.eigenvalues.iter().all(|&l| (-1.0 - 1e-8..=1.0 + 1e-8).contains(&l)));
    }

    #[test]
    fn frequencies_scale_with_root_stiffness(n in 1usize..9, s in 0.05..20.0f64) {
        let base = assemble_matrices(&vec![1.5; n], 1000.0, 0.02, None).unwrap();
        let a = solve_eigenmodes(&base.mass, &base.stiffness).unwrap();
        let b = solve_eigenmodes(&base.mass, &(&base.stiffness * s)).unwrap();
        for (x, y) in a.omega.iter().zip(&b.omega) {
            prop_assert!((y / x - s.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn mode_shapes_are_max_normalized_and_m_orthogonal(springs in prop::collection::vec(0.5..5.0f64, 3..9),
                                                        masses in prop::collection::vec(0.5..4.0f64, 8)) {
        let n = springs.len() - 1;
        let m = RMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&masses[..n]));
        let modes = solve_eigenmodes(&m, &chain_stiffness(&springs)).unwrap();
        prop_assert!(modes.omega.windows(2).all(|w| w[0] < w[1]));
        for col in modes.shapes.column_iter() {
            prop_assert_eq!(col.amax(), 1.0);
        }
        let g = modes.shapes.transpose() * &m * &modes.shapes;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    prop_assert!(g[(i, j)].abs() < 1e-8 * (g[(i, i)] * g[(j, j)]).sqrt());
                }
            }
        }
    }

    #[test]
    fn auc_is_mann_whitney(pairs in prop::collection::vec((0u8..20, any::<bool>()), 2..60)) {
        let scores: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 4.0).collect();
        let truth: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        prop_assume!(truth.iter().any(|t| *t) && truth.iter().any(|t| !*t));
        let auc = roc_auc(&scores, &truth).unwrap();
        prop_assert!((auc - mann_whitney(&scores, &truth)).abs() < 1e-12);
        let warped: Vec<f64> = scores.iter().map(|s| s.powi(3) + (0.5 * s).exp()).collect();
        prop_assert_eq!(roc_auc(&warped, &truth).unwrap(), auc);
    }

    #[test]
    fn threshold_calibration(errors in prop::collection::vec(0.0..5.0f64, 1..300), q in 0.5..0.99f64, coarse in any::<bool>()) {
        let errors: Vec<f64> = if coarse { errors.iter().map(|e| e.round()).collect() } else { errors };
        let model = fit_l1(&errors, q).unwrap();
        let flagged = classify(&errors, &model).iter().filter(|f| **f).count();
        prop_assert!(flagged as f64 / errors.len() as f64 <= 1.0 - q + 1.0 / errors.len() as f64 + 1e-12);
    }

    #[test]
    fn mahalanobis_calibration(res in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 3), 2..200), q in 0.5..0.99f64) {
        let model = fit_mahalanobis(&res, q).unwrap();
        let flagged = classify(&model.scores(&res).unwrap(), &model).iter().filter(|f| **f).count();
        prop_assert!(flagged as f64 / res.len() as f64 <= 1.0 - q + 1.0 / res.len() as f64 + 1e-12);
    }

    #[test]
    fn mahalanobis_affine_invariance(
        res in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 3), 12..60),
        a in prop::collection::vec(-0.4..0.4f64, 9),
        b in prop::collection::vec(-5.0..5.0f64, 3),
    ) {
        // I + small perturbation keeps the map invertible.
        let t = RMatrix::from_fn(3, 3, |i, j| a[i * 3 + j] + if i == j { 1.0 } else { 0.0 });
        let map = |r: &Vec<f64>| -> Vec<f64> {
            (0..3).map(|i| (0..3).map(|j| t[(i, j)] * r[j]).sum::<f64>() + b[i]).collect()
        };
        let moved: Vec<Vec<f64>> = res.iter().map(map).collect();
        let fa = fit_mahalanobis(&res, 0.95).unwrap();
        let fb = fit_mahalanobis(&moved, 0.95).unwrap();
        prop_assume!(fa.ridge == 0.0 && fb.ridge == 0.0);
        let (sa, sb) = (fa.scores(&res).unwrap(), fb.scores(&moved).unwrap());
        for (x, y) in sa.iter().zip(&sb) {
            prop_assert!((x - y).abs() <= 1e-8 * x.abs().max(1.0));
        }
    }

    #[test]
    fn split_is_disjoint_and_complete(labels in prop::collection::vec(any::<bool>(), 1..80)) {
        prop_assume!(labels.iter().any(|l| !*l));
        let s = DatasetSplit::assign(&labels, [0.7, 0.15, 0.15]).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        prop_assert!(s.train.iter().chain(&s.validation).all(|&i| !labels[i]));
        prop_assert_eq!(s.roles().len(), labels.len());
    }

    #[test]
    fn binary_round_trip(values in prop::collection::vec(-1e6..1e6f32, 0..100)) {
        let series = Series {
            timestamps: (0..values.len() as i64).collect(),
            values: values.iter().map(|&v| f64::from(v)).collect(),
        };
        let bytes = emit_binary(&series).unwrap();
        prop_assert_eq!(bytes.len(), 8 * values.len());
        prop_assert_eq!(ingest_binary_stream(&bytes).unwrap(), series);
    }

    #[test]
    fn l1_norm_is_sum_of_magnitudes(r in prop::collection::vec(-10.0..10.0f64, 0..30)) {
        let naive: f64 = r.iter().fold(0.0, |acc, v| acc + if *v < 0.0 { -v } else { *v });
        prop_assert!((l1_norm(&r) - naive).abs() < 1e-12);
    }
}
