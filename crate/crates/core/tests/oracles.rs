//! Cross-checks against independently coded oracles.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rtk_core::classical::{torus_flow_simulate, torus_recurrence_time, TorusSpec};
use rtk_core::crossings::{estimate_density, ks_distance, sample_signal, scan_crossings, ScanConfig};
use rtk_core::eig::{symmetric_eigendecomposition, DenseMatrix};
use rtk_core::models::{
    build_tam, critical_sweep, linear_grid, parity_expectation, quench_spectrum, quench_spectrum_with,
    sweep_minimum, tfim_modes, EdMethod, QuenchSpec, SweepConfig, SweepModel, SweepRow,
};
use rtk_core::quasifree::{eval_log_fidelity, quasifree_stats, LogFidelity};
use rtk_core::recurrence::{density_generic, fidelity_cdf};
use rtk_core::signal::{Signal, TimeGrid};
use rtk_core::spectrum::spectral_stats;
use rtk_core::synthetic::{random_spectrum, Profile};

/// Cyclic Jacobi rotations; slow but unrelated to the production solver.
fn jacobi_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    let n = a.dim();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let norm = a.frobenius();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        if off.sqrt() <= 1e-15 * norm {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in m.iter_mut() {
                    let (mkp, mkq) = (row[p], row[q]);
                    row[p] = c * mkp - s * mkq;
                    row[q] = s * mkp + c * mkq;
                }
                #[allow(clippy::needless_range_loop)]
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    vals.sort_by(f64::total_cmp);
    vals
}

fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let v = rng.random::<f64>() * 2.0 - 1.0;
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

#[test]
fn eigensolver_contract_on_random_matrix() {
    let a = random_symmetric(50, 11);
    let e = symmetric_eigendecomposition(&a).unwrap();
    let norm = a.norm_inf();
    assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    for i in 0..50 {
        let v = e.vector(i);
        let av = a.mul_vec(v);
        let res: f64 = av.iter().zip(v).map(|(x, y)| (x - e.values[i] * y).powi(2)).sum::<f64>().sqrt();
        assert!(res <= 1e-10 * norm, "residual {res}");
        for j in 0..=i {
            let dot: f64 = v.iter().zip(e.vector(j)).map(|(x, y)| x * y).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-10);
        }
    }
    let trace: f64 = e.values.iter().sum();
    assert!((trace - a.trace()).abs() < 1e-10 * 50.0 * norm);
    let fro = e.values.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((fro / a.frobenius() - 1.0).abs() < 1e-10);
    let oracle = jacobi_eigenvalues(&a);
    for k in (0..5).chain(45..50) {
        assert!((oracle[k] - e.values[k]).abs() < 1e-8, "{k}: {} vs {}", oracle[k], e.values[k]);
    }
}

#[test]
fn eigensolver_handles_clustered_spectrum() {
    // rank-one update of the identity: one isolated value, the rest degenerate
    let n = 40;
    let v: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let a = DenseMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 } + v[i] * v[j]);
    let e = symmetric_eigendecomposition(&a).unwrap();
    for x in &e.values[..n - 1] {
        assert!((x - 1.0).abs() < 1e-13);
    }
    assert!((e.values[n - 1] - 1.0 - vv).abs() < 1e-13);
}

/// Hamiltonian assembled term by term from explicit spin arrays.
fn tam_oracle_matrix(l: usize, kappa: f64, h: f64) -> DenseMatrix {
    let dim = 1 << l;
    let mut m = DenseMatrix::zeros(dim);
    for col in 0..dim {
        let spins: Vec<i32> = (0..l).map(|i| if (col >> i) & 1 == 0 { 1 } else { -1 }).collect();
        let diag: f64 = spins.iter().map(|&s| -h * s as f64).sum();
        m.add(col, col, diag);
        for i in 0..l {
            for (r, coef) in [(1usize, -1.0), (2usize, kappa)] {
                let mut flipped = spins.clone();
                flipped[i] = -flipped[i];
                let j = (i + r) % l;
                flipped[j] = -flipped[j];
                let row: usize = flipped.iter().enumerate().map(|(k, &s)| if s == -1 { 1 << k } else { 0 }).sum();
                m.add(row, col, coef);
            }
        }
    }
    m
}

#[test]
fn tam_matches_independent_construction() {
    let (l, kappa, h) = (8, 0.4, 0.3);
    let ours = build_tam(l, kappa, h).unwrap();
    let oracle = tam_oracle_matrix(l, kappa, h);
    for i in 0..256 {
        for j in 0..256 {
            assert!((ours.get(i, j) - oracle.get(i, j)).abs() < 1e-14);
        }
    }
    let a = symmetric_eigendecomposition(&ours).unwrap().values;
    let b = jacobi_eigenvalues(&oracle);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn ising_ed_matches_free_fermion_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for l in [4usize, 6, 8] {
        let ed = quench_spectrum(&QuenchSpec::field(l, 0.0, 0.5, 0.7), 1e-10).unwrap();
        let modes = tfim_modes(l, 0.5, 0.7).unwrap();
        for _ in 0..100 {
            let t = rng.random::<f64>() * 200.0;
            assert!((ed.fidelity(t) - modes.fidelity(t)).abs() < 1e-8, "L={l} t={t}");
        }
    }
}

#[test]
fn sector_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (l, k, h1, h2) in [(6, 0.4, 0.3, 0.33), (8, 0.4, 0.2, 0.23), (8, 0.0, 0.5, 0.7), (10, 0.4, 0.35, 0.38)] {
        let spec = QuenchSpec::field(l, k, h1, h2);
        let dense = quench_spectrum_with(&spec, 1e-10, EdMethod::Dense).unwrap();
        let sector = quench_spectrum_with(&spec, 1e-10, EdMethod::Sector).unwrap();
        let (a, b) = (spectral_stats(&dense), spectral_stats(&sector));
        assert!((a.mean_fidelity - b.mean_fidelity).abs() < 1e-10, "L={l}");
        assert!((a.delta_e - b.delta_e).abs() < 1e-9, "L={l}");
        for _ in 0..20 {
            let t = rng.random::<f64>() * 500.0;
            assert!((dense.fidelity(t) - sector.fidelity(t)).abs() < 1e-9);
        }
    }
}

#[test]
fn tam_ground_state_parity_and_completeness() {
    let e = symmetric_eigendecomposition(&build_tam(8, 0.4, 0.5).unwrap()).unwrap();
    assert!((parity_expectation(e.vector(0)) - 1.0).abs() < 1e-8);
    let s = quench_spectrum(&QuenchSpec::field(8, 0.4, 0.5, 0.6), 1e-10).unwrap();
    assert!((s.total_weight() - 1.0).abs() < 1e-10);
}

#[test]
fn small_quench_mean_fidelity_is_extensive() {
    // paramagnetic side, far from criticality; each mode pair contributes
    // c⁴ + s⁴ = 1 - α/2 to the mean fidelity
    let (h, dh) = (2.0, 0.01);
    let per_site = |l: usize| {
        let m = tfim_modes(l, h, h + dh).unwrap();
        (1.0 - m.alpha.iter().map(|a| 1.0 - 0.5 * a).product::<f64>()) / (dh * dh * l as f64)
    };
    let limit = per_site(400);
    assert!(limit > 1e-3 && limit < 1e2);
    let mut c = Vec::new();
    for l in [6usize, 8, 10] {
        let s = quench_spectrum_with(&QuenchSpec::field(l, 0.0, h, h + dh), 1e-12, EdMethod::Sector).unwrap();
        let cl = (1.0 - spectral_stats(&s).mean_fidelity) / (dh * dh * l as f64);
        assert!((cl / per_site(l) - 1.0).abs() < 1e-6, "L={l}: {cl} vs {}", per_site(l));
        c.push(cl);
    }
    assert!(c.windows(2).all(|w| (w[1] - limit).abs() < (w[0] - limit).abs()), "{c:?} -> {limit}");
    assert!((c[2] / limit - 1.0).abs() < 0.03, "{c:?} -> {limit}");
}

#[test]
fn mean_log_fidelity_is_the_time_average() {
    let modes = tfim_modes(32, 0.95, 0.98).unwrap();
    let st = quasifree_stats(&modes).unwrap();
    let horizon = 1e4 / modes.max_epsilon();
    let grid = TimeGrid::covering(0.0, horizon, 0.01 / modes.max_epsilon()).unwrap();
    let z = eval_log_fidelity(&modes, &grid);
    let avg = z
        .iter()
        .map(|v| match v {
            LogFidelity::Finite(x) => *x,
            LogFidelity::LogZero => f64::NEG_INFINITY,
        })
        .sum::<f64>()
        / z.len() as f64;
    assert!((avg / st.mean_log_f - 1.0).abs() < 0.01, "{avg} vs {}", st.mean_log_f);
}

#[test]
fn refined_roots_solve_the_equation() {
    let s = random_spectrum(8, 3, Profile::Exponential, 1.0).unwrap();
    let st = spectral_stats(&s);
    for u in [0.5 * st.mean_fidelity, st.mean_fidelity, 0.6] {
        let r = scan_crossings(&s.evaluator(), u, &ScanConfig::new(2e3 / st.delta_e)).unwrap();
        assert!(r.count > 0);
        for &t in &r.root_times {
            assert!((s.fidelity(t) - u).abs() <= 1e-8);
        }
    }
}

#[test]
fn count_is_stable_under_refinement() {
    let s = random_spectrum(32, 7, Profile::Flat, 1.0).unwrap();
    let st = spectral_stats(&s);
    let cfg = ScanConfig::new(2e3 / st.delta_e);
    for mult in [0.1, 1.0, 3.0] {
        let u = mult * st.mean_fidelity;
        let coarse = scan_crossings(&s.evaluator(), u, &cfg.clone().with_oversample(16)).unwrap();
        let fine = scan_crossings(&s.evaluator(), u, &cfg.clone().with_oversample(64)).unwrap();
        assert_eq!(coarse.count, fine.count, "u = {mult} F");
        for (a, b) in coarse.root_times.iter().zip(&fine.root_times) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn generic_density_and_block_error() {
    let s = random_spectrum(32, 13, Profile::Flat, 1.0).unwrap();
    let st = spectral_stats(&s);
    let cfg = ScanConfig::new(1e4 / st.delta_e);
    let r = scan_crossings(&s.evaluator(), st.mean_fidelity, &cfg).unwrap();
    let (d, se) = estimate_density(&r, &cfg).unwrap();
    let want = density_generic(st.mean_fidelity, &st).unwrap();
    assert!((d / want - 1.0).abs() < 0.10, "{d} vs {want}");
    assert!(se.unwrap() < 0.05 * d);
}

#[test]
fn sampled_fidelity_is_exponentially_distributed() {
    let s = random_spectrum(32, 21, Profile::Flat, 1.0).unwrap();
    let st = spectral_stats(&s);
    let samples = sample_signal(&s.evaluator(), &ScanConfig::new(2e4 / st.delta_e)).unwrap();
    let ks = ks_distance(&samples, |u| fidelity_cdf(u, st.mean_fidelity));
    assert!(ks < 0.05, "{ks}");
}

#[test]
fn roots_alternate_between_sides() {
    let s = random_spectrum(8, 17, Profile::Flat, 1.0).unwrap();
    let st = spectral_stats(&s);
    let ev = s.evaluator();
    for u in [0.05, 0.3] {
        let r = scan_crossings(&ev, u, &ScanConfig::new(1e3 / st.delta_e)).unwrap();
        assert!(r.count > 10);
        // F(0) = 1 > u, so the first stretch lies above the level
        assert!(ev.value(0.5 * r.root_times[0]) > u);
        let mut above = true;
        for w in r.root_times.windows(2) {
            above = !above;
            assert_eq!(ev.value(0.5 * (w[0] + w[1])) > u, above, "u={u} between {} and {}", w[0], w[1]);
        }
    }
}

#[test]
fn roots_pair_up_close_to_one() {
    let s = random_spectrum(4, 5, Profile::Flat, 1.0).unwrap();
    let st = spectral_stats(&s);
    let ev = s.evaluator();
    let cfg = ScanConfig::new(2e4 / st.delta_e);
    let mut previous_gap = f64::INFINITY;
    for u in [0.9, 0.95, 0.99] {
        let r = scan_crossings(&ev, u, &cfg).unwrap();
        // drop the descent from the t = 0 peak, then every excursion has two ends
        let rest = &r.root_times[1..];
        let end_above = ev.value(cfg.horizon) > u;
        let usable = if end_above { &rest[..rest.len() - 1] } else { rest };
        assert_eq!(usable.len() % 2, 0, "u={u}");
        assert!(!usable.is_empty(), "u={u}");
        let gap = usable.chunks(2).map(|p| p[1] - p[0]).sum::<f64>() / (usable.len() / 2) as f64;
        assert!(gap < previous_gap, "u={u}: mean pair gap {gap} did not shrink");
        previous_gap = gap;
    }
}

#[test]
fn torus_simulation_converges() {
    for (om, win) in [
        (vec![1.0, 2f64.sqrt()], vec![0.5, 0.5]),
        (vec![1.0, 2f64.sqrt(), 3f64.sqrt()], vec![1.5, 2.0, 1.8]),
    ] {
        let spec = TorusSpec::new(om, win).unwrap();
        let tr = torus_recurrence_time(&spec);
        let a = torus_flow_simulate(&spec, 2e3 * tr, spec.max_step()).unwrap();
        let b = torus_flow_simulate(&spec, 4e3 * tr, spec.max_step()).unwrap();
        assert!((b.empirical_tr / a.empirical_tr - 1.0).abs() < 0.02);
        assert!((b.empirical_tr / tr - 1.0).abs() < 0.05, "{} vs {tr}", b.empirical_tr);
    }
    let one = TorusSpec::new(vec![1.0], vec![std::f64::consts::PI]).unwrap();
    let sim = torus_flow_simulate(&one, 1000.0 * TAU, one.max_step()).unwrap();
    assert!((sim.empirical_tr / std::f64::consts::PI - 1.0).abs() < 0.01);
}

fn monotone_wings(rows: &[SweepRow]) -> bool {
    let i = sweep_minimum(rows).unwrap();
    let t: Vec<f64> = rows.iter().map(|r| r.recurrence.ln()).collect();
    t[..=i].windows(2).all(|w| w[0] >= w[1]) && t[i..].windows(2).all(|w| w[0] <= w[1])
}

#[test]
fn sweeps_dip_near_the_critical_points() {
    let tam = critical_sweep(
        &SweepConfig::new(SweepModel::Tam, 10, 0.4, 0.03, 0.98),
        &linear_grid(0.125, 0.6, 20).unwrap(),
    )
    .unwrap();
    let i = sweep_minimum(&tam).unwrap();
    assert!((tam[i].h1 - 0.218).abs() <= 0.05, "{}", tam[i].h1);
    assert!(monotone_wings(&tam));

    let tfim = critical_sweep(
        &SweepConfig::new(SweepModel::Tfim, 12, 0.0, 0.03, 0.98),
        &linear_grid(0.8, 1.2, 41).unwrap(),
    )
    .unwrap();
    let j = sweep_minimum(&tfim).unwrap();
    // finite-size pseudo-critical point of the 12-site chain
    assert!((tfim[j].h1 - 0.95).abs() < 1e-9, "{}", tfim[j].h1);
    assert!(monotone_wings(&tfim));
}
