use proptest::prelude::*;

use rtk_core::classical::{torus_recurrence_time, TorusSpec};
use rtk_core::crossings::{scan_crossings, ScanConfig};
use rtk_core::eig::{symmetric_eigendecomposition, DenseMatrix};
use rtk_core::quasifree::{quasifree_stats, ModeSet};
use rtk_core::recurrence::{density_generic, recurrence_time_generic};
use rtk_core::spectrum::{
    degeneracy_collapse, eval_fidelity, eval_fidelity_reference, spectral_stats, validate_spectrum, DiscreteSpectrum,
    SpectrumDocument,
};
use rtk_core::signal::TimeGrid;

fn spectrum_strategy(max_d: usize) -> impl Strategy<Value = DiscreteSpectrum> {
    (1..=max_d)
        .prop_flat_map(|d| (prop::collection::vec(-5.0f64..5.0, d), prop::collection::vec(0.01f64..1.0, d)))
        .prop_map(|(e, w)| {
            let total: f64 = w.iter().sum();
            let w: Vec<f64> = w.iter().map(|x| x / total).collect();
            validate_spectrum(&e, &w).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stats_ignore_level_order(s in spectrum_strategy(12), rot in 0usize..12) {
        let n = s.dimension();
        let k = rot % n;
        let mut e = s.energies().to_vec();
        let mut w = s.weights().to_vec();
        e.rotate_left(k);
        w.rotate_left(k);
        let a = spectral_stats(&s);
        let b = spectral_stats(&validate_spectrum(&e, &w).unwrap());
        prop_assert!((a.mean_fidelity - b.mean_fidelity).abs() < 1e-15);
        prop_assert!((a.delta_e - b.delta_e).abs() < 1e-12);
    }

    #[test]
    fn energy_shift_and_scale(s in spectrum_strategy(10), shift in -100.0f64..100.0, scale in 0.1f64..10.0) {
        let a = spectral_stats(&s);
        let e: Vec<f64> = s.energies().iter().map(|x| scale * x + shift).collect();
        let b = spectral_stats(&validate_spectrum(&e, s.weights()).unwrap());
        prop_assert!((a.mean_fidelity - b.mean_fidelity).abs() < 1e-15);
        prop_assert!((b.delta_e - scale * a.delta_e).abs() < 1e-9 * (1.0 + scale * a.delta_e));
        for t in [0.3, 2.0, 17.0] {
            let f = s.fidelity(t * scale);
            let g = validate_spectrum(&e, s.weights()).unwrap().fidelity(t);
            prop_assert!((f - g).abs() < 1e-9);
        }
    }

    #[test]
    fn fidelity_is_even_and_bounded(s in spectrum_strategy(10), t in 0.0f64..1e3) {
        let f = s.fidelity(t);
        prop_assert!((f - s.fidelity(-t)).abs() < 1e-13);
        prop_assert!(f >= 0.0 && f <= s.initial_fidelity() + 1e-13);
    }

    #[test]
    fn fast_evaluator_tracks_reference(s in spectrum_strategy(16), step in 0.01f64..1.0, start in 0.0f64..1e3) {
        let grid = TimeGrid::new(start, step, 3000).unwrap();
        let fast = eval_fidelity(&s, &grid, 1024);
        let slow = eval_fidelity_reference(&s, &grid);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn collapse_keeps_weight_and_raises_mean_fidelity(s in spectrum_strategy(12), tol in 0.0f64..0.3) {
        let c = degeneracy_collapse(&s, tol);
        prop_assert!((c.total_weight() - s.total_weight()).abs() < 1e-14);
        prop_assert!(spectral_stats(&c).mean_fidelity >= spectral_stats(&s).mean_fidelity - 1e-15);
        prop_assert!(c.energies().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn recurrence_time_is_reciprocal_density(s in spectrum_strategy(12), frac in 0.01f64..1.0) {
        let st = spectral_stats(&s);
        prop_assume!(st.delta_e > 1e-6);
        let u = frac * s.initial_fidelity();
        let d = density_generic(u, &st).unwrap();
        let t = recurrence_time_generic(u, &st).unwrap();
        if let Some(t) = t.finite() {
            prop_assert!((t * d - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_document_round_trip(s in spectrum_strategy(8)) {
        let js = SpectrumDocument::from(&s).to_json().unwrap();
        let back = SpectrumDocument::from_json(&js).unwrap();
        prop_assert_eq!(back.to_json().unwrap(), js);
        let t = back.into_spectrum().unwrap();
        prop_assert_eq!(t.energies(), s.energies());
        prop_assert_eq!(t.weights(), s.weights());
    }

    #[test]
    fn log_fidelity_nonpositive_and_modes_extensive(
        modes in prop::collection::vec((0.0f64..0.99, 0.1f64..5.0), 1..12),
        t in 0.0f64..1e3,
    ) {
        let (a, e): (Vec<f64>, Vec<f64>) = modes.into_iter().unzip();
        let m = ModeSet::new(a, e, 8).unwrap();
        prop_assert!(m.log_fidelity(t).value() <= 0.0);
        let f = m.fidelity(t);
        prop_assert!(f > 0.0 && f <= 1.0);
        let one = quasifree_stats(&m).unwrap();
        let two = quasifree_stats(&m.duplicated()).unwrap();
        prop_assert!((two.mean_log_f - 2.0 * one.mean_log_f).abs() <= 1e-14 * one.mean_log_f.abs());
        prop_assert!((two.sigma_z.powi(2) - 2.0 * one.sigma_z.powi(2)).abs() <= 1e-13 * one.sigma_z.powi(2) + 1e-300);
        prop_assert!((two.sigma_zprime.powi(2) - 2.0 * one.sigma_zprime.powi(2)).abs() <= 1e-13 * one.sigma_zprime.powi(2) + 1e-300);
    }

    #[test]
    fn torus_formula_is_permutation_symmetric(
        pairs in prop::collection::vec((0.1f64..5.0, 0.05f64..6.0), 1..5),
        rot in 0usize..5,
    ) {
        let (om, win): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let a = torus_recurrence_time(&TorusSpec::new(om.clone(), win.clone()).unwrap());
        let k = rot % om.len();
        let (mut om2, mut win2) = (om, win);
        om2.rotate_left(k);
        win2.rotate_left(k);
        let b = torus_recurrence_time(&TorusSpec::new(om2, win2).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn eigendecomposition_contract(n in 1usize..24, entries in prop::collection::vec(-10.0f64..10.0, 24 * 24)) {
        let a = DenseMatrix::from_fn(n, |i, j| {
            let (p, q) = if i >= j { (i, j) } else { (j, i) };
            entries[p * 24 + q]
        });
        let e = symmetric_eigendecomposition(&a).unwrap();
        let norm = a.norm_inf().max(1e-300);
        for i in 0..n {
            let v = e.vector(i);
            let av = a.mul_vec(v);
            let res = av.iter().zip(v).map(|(x, y)| (x - e.values[i] * y).powi(2)).sum::<f64>().sqrt();
            prop_assert!(res <= 1e-10 * norm);
            let nv: f64 = v.iter().map(|x| x * x).sum();
            prop_assert!((nv - 1.0).abs() < 1e-10);
        }
        let trace: f64 = e.values.iter().sum();
        prop_assert!((trace - a.trace()).abs() <= 1e-10 * n as f64 * norm);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scan_is_partition_independent(s in spectrum_strategy(10), frac in 0.05f64..0.9, chunk in 2usize..5000) {
        prop_assume!(s.spectral_width() > 0.1);
        let u = frac * s.initial_fidelity();
        let cfg = ScanConfig::new(300.0 / s.spectral_width()).with_burn_in(0.5);
        let a = scan_crossings(&s.evaluator(), u, &cfg).unwrap();
        let b = scan_crossings(&s.evaluator(), u, &cfg.clone().with_chunk_samples(chunk).with_workers(3)).unwrap();
        prop_assert_eq!(&a, &b);
    }

    #[test]
    fn refinement_never_loses_roots(s in spectrum_strategy(8), frac in 0.02f64..0.95) {
        prop_assume!(s.spectral_width() > 0.1);
        let u = frac * s.initial_fidelity();
        let cfg = ScanConfig::new(200.0 / s.spectral_width());
        let coarse = scan_crossings(&s.evaluator(), u, &cfg.clone().with_oversample(8)).unwrap();
        let fine = scan_crossings(&s.evaluator(), u, &cfg.with_oversample(16)).unwrap();
        prop_assert!(fine.count >= coarse.count);
        if fine.count != coarse.count {
            prop_assert!(coarse.suspected_tangencies > 0);
        }
    }
}
