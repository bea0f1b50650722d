//! Library results checked against independently coded reference computations.

#![allow(clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sparsense_core::gather::{init_network, random_updates, Topology, Updates};
use sparsense_core::linalg::least_squares;
use sparsense_core::predict::{ar1_coefficient, predict_ar1, predict_linreg, predict_ma};
use sparsense_core::recovery::{ista_weighted_l1, l0_oracle, omp, residual_norm};
use sparsense_core::sensing::{build_sensing_matrix, measure, Dictionary, Ensemble};
use sparsense_core::spectrum::{evolve_history, sample_occupancy, WidebandModel};
use sparsense_core::{DenseMatrix, MeasurementVector, RecoveryConfig, SparseSignal, WeightVector};

fn rank(rows: usize, cols: usize, entries: &[f64]) -> usize {
    let mut a: Vec<Vec<f64>> = entries.chunks(cols).map(<[f64]>::to_vec).collect();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let p = (r..rows).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c].abs() < 1e-10 {
            continue;
        }
        a.swap(r, p);
        for i in r + 1..rows {
            let f = a[i][c] / a[r][c];
            for j in c..cols {
                a[i][j] -= f * a[r][j];
            }
        }
        r += 1;
    }
    r
}

fn naive_product(a: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.rows()];
    for i in 0..a.rows() {
        for (j, xj) in x.iter().enumerate() {
            y[i] += a.entries()[i * a.cols() + j] * xj;
        }
    }
    y
}

/// Normal equations solved by Gauss-Jordan, independent of the library solver.
fn ls_reference(a: &DenseMatrix, support: &[usize], y: &[f64]) -> Vec<f64> {
    let k = support.len();
    let mut g = vec![vec![0.0; k + 1]; k];
    for (p, &cp) in support.iter().enumerate() {
        for (q, &cq) in support.iter().enumerate() {
            g[p][q] = (0..a.rows()).map(|i| a.get(i, cp) * a.get(i, cq)).sum();
        }
        g[p][k] = (0..a.rows()).map(|i| a.get(i, cp) * y[i]).sum();
    }
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| g[i][c].abs().total_cmp(&g[j][c].abs())).unwrap();
        g.swap(c, p);
        let d = g[c][c];
        for v in &mut g[c] {
            *v /= d;
        }
        for i in 0..k {
            if i != c {
                let f = g[i][c];
                for j in 0..=k {
                    g[i][j] -= f * g[c][j];
                }
            }
        }
    }
    g.iter().map(|row| row[k]).collect()
}

fn sparse_instance(n: usize, m: usize, k: usize, seed: u64) -> (DenseMatrix, SparseSignal, MeasurementVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    let mut support: Vec<usize> = Vec::new();
    while support.len() < k {
        let i = rng.random_range(0..n);
        if !support.contains(&i) {
            support.push(i);
        }
    }
    let mut x = vec![0.0; n];
    for &i in &support {
        x[i] = rng.random_range(1.0..2.0);
    }
    let phi = build_sensing_matrix(m, n, Ensemble::Gaussian, seed).unwrap();
    let x = SparseSignal::from_nonzeros(x);
    let y = measure(&phi, Dictionary::Identity, &x, 0.0, 0).unwrap();
    (phi, x, y)
}

#[test]
fn square_gaussian_matrix_has_full_rank() {
    let phi = build_sensing_matrix(4, 4, Ensemble::Gaussian, 1).unwrap();
    assert_eq!(rank(4, 4, phi.entries()), 4);
}

#[test]
fn gather_coefficients_have_full_rank() {
    let net = init_network(32, 8, Topology::Clique, 4).unwrap();
    assert_eq!(rank(32, 32, net.coefficient_matrix().entries()), 32);
}

#[test]
fn measurement_matches_triple_loop_product() {
    let (phi, x, y) = sparse_instance(10, 6, 3, 17);
    for (a, b) in y.values().iter().zip(naive_product(&phi, x.values())) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn omp_matches_exhaustive_support() {
    let (phi, x, y) = sparse_instance(12, 8, 2, 5);
    let greedy = omp(&phi, &y, 2, 1e-12).unwrap();
    let exact = l0_oracle(&phi, &y, 2).unwrap();
    assert_eq!(greedy.nonzero_support(), exact.nonzero_support());
    assert_eq!(exact.nonzero_support(), x.nonzero_support());
}

#[test]
fn least_squares_matches_normal_equations() {
    let (phi, _, y) = sparse_instance(16, 10, 3, 8);
    let support = [1, 4, 7, 12];
    let lib = least_squares(&phi, &support, y.values()).unwrap();
    for (a, b) in lib.iter().zip(ls_reference(&phi, &support, y.values())) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn heavy_off_support_weights_give_the_support_fit() {
    let (phi, x, y) = sparse_instance(16, 8, 2, 21);
    let support = x.nonzero_support();
    let w: Vec<f64> = (0..16).map(|i| if support.contains(&i) { 1e-3 } else { 1e3 }).collect();
    let cfg = RecoveryConfig { lambda: 1e-4, max_iterations: 200_000, residual_tolerance: 1e-24, ..RecoveryConfig::default() };
    let est = ista_weighted_l1(&phi, &y, &WeightVector::new(w).unwrap(), &cfg).unwrap();
    let fit = ls_reference(&phi, &support, y.values());
    for (&i, f) in support.iter().zip(fit) {
        assert!((est.values()[i] - f).abs() < 1e-4, "{} vs {f}", est.values()[i]);
    }
}

#[test]
fn l0_oracle_beats_every_small_support() {
    let (phi, _, y0) = sparse_instance(6, 4, 2, 33);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let y = MeasurementVector::new(y0.values().iter().map(|v| v + 0.05 * rng.sample::<f64, _>(StandardNormal)).collect());
    let best = residual_norm(&phi, &y, &l0_oracle(&phi, &y, 2).unwrap()).unwrap();
    let mut supports: Vec<Vec<usize>> = vec![vec![]];
    for i in 0..6 {
        supports.push(vec![i]);
        for j in i + 1..6 {
            supports.push(vec![i, j]);
        }
    }
    for s in supports {
        let coef = if s.is_empty() { vec![] } else { ls_reference(&phi, &s, y.values()) };
        let mut v = vec![0.0; 6];
        for (&i, c) in s.iter().zip(coef) {
            v[i] = c;
        }
        let r = residual_norm(&phi, &y, &SparseSignal::dense(v)).unwrap();
        assert!(best <= r + 1e-12, "{s:?}: {r} < {best}");
    }
}

#[test]
fn occupancy_frequency_matches_probability() {
    // 99% binomial half-width for 10 bands x 1e4 snapshots at p = 0.3 is ~0.0037.
    let model = WidebandModel::contiguous(&[(10, 0.3, 0.0)], (1.0, 2.0)).unwrap();
    let total: usize = (0..10_000u64).map(|s| sample_occupancy(&model, s).occupied()).sum();
    let rate = total as f64 / 1e5;
    assert!((rate - 0.3).abs() <= 0.015, "{rate}");
}

fn lag1_correlation(s: &[f64]) -> f64 {
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let var: f64 = s.iter().map(|v| (v - mean).powi(2)).sum();
    let cov: f64 = s.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    cov / var
}

#[test]
fn memoryless_chain_is_uncorrelated() {
    let model = WidebandModel::contiguous(&[(1, 0.4, 0.0)], (1.0, 2.0)).unwrap();
    let h = evolve_history(&model, 100_000, 12).unwrap();
    assert!(lag1_correlation(&h.block_series_f64(0)).abs() <= 0.02);
}

#[test]
fn persistent_chain_keeps_stationary_rate() {
    let model = WidebandModel::contiguous(&[(1, 0.4, 0.8)], (1.0, 2.0)).unwrap();
    let h = evolve_history(&model, 100_000, 13).unwrap();
    let s = h.block_series_f64(0);
    let rate = s.iter().sum::<f64>() / s.len() as f64;
    assert!((rate - 0.4).abs() <= 0.02, "{rate}");
    assert!((lag1_correlation(&s) - 0.8).abs() <= 0.02);
}

#[test]
fn linreg_matches_closed_form_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s: Vec<f64> = (0..20).map(|t| 2.0 + 0.3 * t as f64 + rng.sample::<f64, _>(StandardNormal)).collect();
    let (n, sx, sy) = (20.0, (0..20).sum::<usize>() as f64, s.iter().sum::<f64>());
    let sxx: f64 = (0..20).map(|t| (t * t) as f64).sum();
    let sxy: f64 = s.iter().enumerate().map(|(t, v)| t as f64 * v).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let want = intercept + slope * 20.0;
    assert!((predict_linreg(&s, 20).unwrap() - want).abs() < 1e-8);
}

#[test]
fn ar1_estimate_is_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut s = vec![0.0; 10_000];
    for t in 1..s.len() {
        s[t] = 0.8 * s[t - 1] + rng.sample::<f64, _>(StandardNormal);
    }
    let (_, phi) = ar1_coefficient(&s).unwrap();
    assert!((phi - 0.8).abs() <= 0.05, "{phi}");
}

#[test]
fn ar1_beats_last_value_on_persistent_occupancy() {
    let model = WidebandModel::contiguous(&[(16, 0.3, 0.8)], (1.0, 2.0)).unwrap();
    let s = evolve_history(&model, 1200, 6).unwrap().block_series_f64(0);
    let (mut ar, mut last) = (0.0, 0.0);
    for t in 200..1200 {
        ar += (predict_ar1(&s[..t]).unwrap().clamp(0.0, 16.0) - s[t]).powi(2);
        last += (predict_ma(&s[..t], 1).unwrap() - s[t]).powi(2);
    }
    assert!(ar <= last, "{ar} > {last}");
}

#[test]
fn exchange_accumulators_match_direct_product() {
    let mut net = init_network(16, 8, Topology::Clique, 2).unwrap();
    let updates: Updates = random_updates(16, 3, (1.0, 2.0), 5).unwrap();
    net.run_exchange(&updates).unwrap();
    let mut u = vec![0.0; 16];
    for (&i, &v) in &updates {
        u[i] = v;
    }
    let want = naive_product(&net.coefficient_matrix(), &u);
    for (node, w) in net.nodes().iter().zip(want) {
        assert!((node.accumulator - w).abs() <= 1e-12);
    }
}
