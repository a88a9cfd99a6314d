//! Monte Carlo and reference checks of the gradient oracles and the vector
//! and matrix LMOs against independent computations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use qfw_core::lmo_matrix::{
    accumulation_bound, additive_error_chain, exact_top_pair, noisy_unit_matvec, power_method_classical,
    qpm_emulate, qpm_profile, PowerOptions, StartVector,
};
use qfw_core::lmo_vector::{
    duerr_hoyer_max_find, exact_lmo_l1, exact_lmo_simplex, group_dual_norm, max_find_budget,
    max_find_repetitions, qlmo_group, qlmo_l1, qlmo_simplex, sparse_atom_lmo, SparseAtom,
};
use qfw_core::oracles::{bounded_error_inject, fd_gradient, jordan_gradient_emulate, Guarantee};
use qfw_core::{ErrorModel, Matrix, NoiseMode, QueryLedger, SmoothObjective, Vector};

fn gaussian_vec(d: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(d, |_, _| StandardNormal.sample(rng))
}

fn gaussian_mat(r: usize, c: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

/// `f(x) = x^T Q x / 2 + b^T x` with `Q = G G^T / d`, so `L = lambda_max(Q)`.
fn psd_quadratic(d: usize, seed: u64) -> (SmoothObjective<Vector>, Matrix, Vector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_mat(d, d, &mut rng);
    let q = &g * g.transpose() / d as f64;
    let b = gaussian_vec(d, &mut rng) * 0.1;
    let l = q.symmetric_eigenvalues().max();
    let (qv, bv) = (q.clone(), b.clone());
    let (qg, bg) = (q.clone(), b.clone());
    let f = SmoothObjective::new(move |x: &Vector| 0.5 * x.dot(&(&qv * x)) + bv.dot(x), l, 2.0)
        .unwrap()
        .with_gradient(move |x: &Vector| &qg * x + &bg);
    (f, q, b)
}

#[test]
fn fd_gradient_bound_on_psd_quadratic() {
    let (f, _, _) = psd_quadratic(100, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let x = gaussian_vec(100, &mut rng) / 10.0;
        let sigma = 10f64.powf(rng.random_range(-4.0..-0.5));
        let mut l = QueryLedger::new();
        let est = fd_gradient(&f, &x, sigma, &mut l).unwrap();
        let Guarantee::L2 { bound } = est.guarantee else { panic!("fd gives an l2 bound") };
        let err = (&est.g - f.gradient(&x).unwrap()).norm();
        assert!(err <= bound * (1.0 + 1e-9) + 1e-12, "err {err} > bound {bound}");
        assert_eq!(l.totals().function_queries, 101);
    }
}

#[test]
fn jordan_failure_frequency() {
    let (f, _, _) = psd_quadratic(8, 5);
    let x = Vector::from_element(8, 0.05);
    let truth = f.gradient(&x).unwrap();
    let n = 10_000;
    let mut out = 0;
    for s in 0..n {
        let mut l = QueryLedger::new();
        let m = ErrorModel::new(NoiseMode::Uniform, s);
        let est = jordan_gradient_emulate(&f, &x, 1e-9, 0.1, &m, &mut l).unwrap();
        let Guarantee::LInf { bound, .. } = est.guarantee else { panic!() };
        if (&est.g - &truth).amax() > bound * (1.0 + 1e-12) {
            out += 1;
        }
        assert_eq!(l.totals().quantum_queries, 1);
    }
    let freq = out as f64 / n as f64;
    let ceiling = 0.1 + 3.0 * (0.1f64 * 0.9 / n as f64).sqrt();
    assert!(freq <= ceiling, "out-of-bound frequency {freq} > {ceiling}");
}

#[test]
fn uniform_injection_stays_within_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = gaussian_vec(10, &mut rng);
    let eps = 0.03;
    let mut worst = 0.0f64;
    for s in 0..10_000 {
        let out = bounded_error_inject(&g, eps, &ErrorModel::new(NoiseMode::Uniform, s));
        worst = worst.max((out - &g).amax());
    }
    // 10^5 coordinate draws in total
    assert!(worst <= eps + 1e-15);
    assert!(worst > 0.9 * eps);
}

#[test]
fn max_find_single_marked_item() {
    let d = 64;
    let n = 10_000u64;
    let (mut single, mut boosted) = (0, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for s in 0..n {
        let pos = rng.random_range(0..d);
        let mut v = vec![0.0; d];
        v[pos] = 1.0;
        let one = duerr_hoyer_max_find(&v, 0.5, &ErrorModel::new(NoiseMode::Uniform, s)).unwrap();
        assert_eq!(one.repetitions, 1);
        single += (one.index == pos) as u32;
        let many = duerr_hoyer_max_find(&v, 0.01, &ErrorModel::new(NoiseMode::Uniform, s)).unwrap();
        boosted += (many.index == pos) as u32;
    }
    assert!(single as f64 / n as f64 >= 0.5);
    assert!(boosted as f64 / n as f64 >= 0.99);
}

#[test]
fn max_find_worst_case_noise_keeps_two_eps_slack() {
    let truth = Vector::from_vec(vec![1.0, 0.92]);
    let eps = 0.05;
    let noisy = bounded_error_inject(&truth, eps, &ErrorModel::new(NoiseMode::WorstCase, 0));
    for s in 0..1000 {
        let r = duerr_hoyer_max_find(noisy.as_slice(), 0.01, &ErrorModel::new(NoiseMode::Uniform, s)).unwrap();
        assert!(truth[r.index] >= 1.0 - 2.0 * eps - 1e-12);
    }
}

#[test]
fn qlmo_slack_against_exact_gradient() {
    let d = 30;
    let (f, _, _) = psd_quadratic(d, 21);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for s in 0..500 {
        let x = gaussian_vec(d, &mut rng) / (3.0 * d as f64);
        let grad = f.gradient(&x).unwrap();
        let sigma = 1e-3;
        let m = ErrorModel::new(NoiseMode::Uniform, s);
        let mut l = QueryLedger::new();
        let r = qlmo_l1(&f, &x, sigma, 1.0, 0.01, &m, &mut l).unwrap();
        let best = -grad.amax();
        assert!(r.s.dot(&grad) <= best + r.additive_slack_bound + 1e-12);
        assert!((r.additive_slack_bound - (d as f64).sqrt() * f.smoothness * sigma).abs() < 1e-15);
        let r = qlmo_simplex(&f, &x, sigma, 0.01, &m, &mut l).unwrap();
        assert!(r.s.dot(&grad) <= grad.min() + r.additive_slack_bound + 1e-12);
    }
}

#[test]
fn qlmo_zero_noise_matches_exact() {
    let d = 16;
    let mut g = Vector::from_element(d, 0.1);
    g[5] = -2.0;
    g[9] = 0.5;
    let gc = g.clone();
    let f = SmoothObjective::new(move |x: &Vector| gc.dot(x), 0.0, 2.0).unwrap();
    let mut l = QueryLedger::new();
    let x = Vector::zeros(d);
    let q = qlmo_l1(&f, &x, 0.1, 1.0, 0.01, &ErrorModel::zero(), &mut l).unwrap();
    assert_eq!(q.s, exact_lmo_l1(&g, 1.0).unwrap().s);
    let q = qlmo_simplex(&f, &x, 0.1, 0.01, &ErrorModel::zero(), &mut l).unwrap();
    assert_eq!(q.s, exact_lmo_simplex(&g).unwrap().s);
}

#[test]
fn qlmo_query_ceiling() {
    for d in [64usize, 256, 1024] {
        let (f, _, _) = psd_quadratic(d.min(64), 1);
        let f = if d == 64 {
            f
        } else {
            SmoothObjective::new(|x: &Vector| 0.5 * x.norm_squared(), 1.0, 2.0).unwrap()
        };
        let mut l = QueryLedger::new();
        let r = qlmo_l1(&f, &Vector::zeros(d), 1e-3, 1.0, 0.01, &ErrorModel::new(NoiseMode::Uniform, 1), &mut l)
            .unwrap();
        let df = d as f64;
        let ceiling = 2 * (22.5 * df.sqrt() + 1.4 * df.log2()).ceil() as u64 * (100f64).log2().ceil() as u64;
        assert!(r.charged_queries <= ceiling);
        assert_eq!(l.totals().quantum_queries, r.charged_queries);
    }
}

#[test]
fn per_round_queries_fit_sqrt_d_log() {
    // c * sqrt(d) * log2(T / p) with the same c at every d, to 25%.
    let (t, p) = (200.0, 0.05);
    let mut cs = Vec::new();
    for d in [64usize, 256, 1024, 4096] {
        let f = SmoothObjective::new(|x: &Vector| 0.5 * x.norm_squared(), 1.0, 2.0).unwrap();
        let mut l = QueryLedger::new();
        qlmo_l1(&f, &Vector::zeros(d), 1e-3, 1.0, p / t, &ErrorModel::new(NoiseMode::Uniform, 7), &mut l)
            .unwrap();
        let q = l.totals().quantum_queries as f64;
        cs.push(q / ((d as f64).sqrt() * (t / p).log2()));
    }
    let (lo, hi) = cs.iter().fold((f64::MAX, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    assert!((hi - lo) / lo <= 0.25, "constants {cs:?}");
}

#[test]
fn group_dual_norm_against_sampled_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let d = 6;
    for _ in 0..20 {
        let g = gaussian_vec(d, &mut rng);
        let groups = vec![vec![0, 1, 2], vec![2, 3], vec![3, 4, 5], vec![0, 5]];
        let p = vec![2.0; 4];
        let (value, _) = group_dual_norm(&g, &groups, &p).unwrap();
        let mut best = f64::MIN;
        for grp in &groups {
            for _ in 0..5000 {
                let w = gaussian_vec(grp.len(), &mut rng);
                let w = &w / w.norm();
                let dot: f64 = grp.iter().zip(w.iter()).map(|(&i, wi)| g[i] * wi).sum();
                best = best.max(dot);
            }
        }
        assert!(best <= value + 1e-12);
        assert!(best >= 0.98 * value, "sampled {best} vs {value}");
    }
}

#[test]
fn qlmo_group_two_group_atom_and_ceiling() {
    let d = 6;
    let c = Vector::from_vec(vec![0.1, -0.2, 0.1, 3.0, -4.0, 0.0]);
    let cc = c.clone();
    let f = SmoothObjective::new(move |x: &Vector| cc.dot(x), 0.0, 2.0).unwrap();
    let groups = vec![vec![0, 1, 2], vec![3, 4, 5]];
    let p = vec![2.0, 2.0];
    let mut l = QueryLedger::new();
    let r = qlmo_group(&f, &Vector::zeros(d), 0.1, 0.01, &groups, &p, 1.0, &ErrorModel::zero(), &mut l).unwrap();
    let want = Vector::from_vec(vec![0.0, 0.0, 0.0, -0.6, 0.8, 0.0]);
    assert!((r.s - want).amax() < 1e-12);
    let ceiling = 2 * 3 * max_find_budget(2) * max_find_repetitions(0.01) as u64;
    assert!(r.charged_queries <= ceiling);
}

#[test]
fn sparse_atoms_reduce_to_l1_and_match_brute_force() {
    let d = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let pm: Vec<SparseAtom> = (0..d).flat_map(|i| [vec![(i, 1.0)], vec![(i, -1.0)]]).collect();
    let g = gaussian_vec(d, &mut rng);
    let mut l = QueryLedger::new();
    let r = sparse_atom_lmo(&pm, 1, &g, 1e-3, &ErrorModel::new(NoiseMode::Uniform, 0), &mut l).unwrap();
    assert_eq!(r.s, exact_lmo_l1(&g, 1.0).unwrap().s);

    let atoms: Vec<SparseAtom> = (0..16)
        .map(|_| {
            let mut idx: Vec<usize> = (0..d).collect();
            for i in 0..3 {
                let j = rng.random_range(i..d);
                idx.swap(i, j);
            }
            idx[..3].iter().map(|&i| (i, StandardNormal.sample(&mut rng))).collect()
        })
        .collect();
    let n = 1000;
    let mut hits = 0;
    for s in 0..n {
        let g = gaussian_vec(d, &mut rng);
        let dots: Vec<f64> = atoms.iter().map(|a| a.iter().map(|&(i, v)| v * g[i]).sum()).collect();
        let best = dots.iter().cloned().fold(f64::INFINITY, f64::min);
        let r = sparse_atom_lmo(&atoms, 3, &g, 0.01, &ErrorModel::new(NoiseMode::Uniform, s), &mut l).unwrap();
        hits += ((r.inner_value - best).abs() < 1e-12) as u32;
    }
    let freq = hits as f64 / n as f64;
    assert!(freq >= 0.99 - 3.0 * (0.01f64 * 0.99 / n as f64).sqrt(), "{freq}");
}

#[test]
fn sparse_atom_queries_scale_as_sqrt_n() {
    let charged = |n: usize| {
        let atoms: Vec<SparseAtom> = (0..n).map(|j| vec![(j % 8, 1.0), ((j + 1) % 8, 0.5), ((j + 2) % 8, -0.5)]).collect();
        let g = Vector::from_fn(8, |i, _| i as f64 - 3.5);
        let mut l = QueryLedger::new();
        sparse_atom_lmo(&atoms, 3, &g, 0.01, &ErrorModel::new(NoiseMode::Uniform, 1), &mut l).unwrap().charged_queries
    };
    let (a, b) = (charged(64) as f64, charged(1024) as f64);
    let slope = (b / a).ln() / 16f64.ln();
    assert!((0.45..=0.55).contains(&slope), "slope {slope}");
}

/// Independent top pair: power iteration on `M^T M` until the Rayleigh
/// quotient stops moving.
fn reference_sigma1(m: &Matrix) -> f64 {
    let mtm = m.transpose() * m;
    let mut v = Vector::from_element(m.ncols(), 1.0).normalize();
    let mut last = 0.0;
    for _ in 0..100_000 {
        v = (&mtm * &v).normalize();
        let s = (m * &v).norm();
        if (s - last).abs() < 1e-14 * s {
            return s;
        }
        last = s;
    }
    last
}

#[test]
fn exact_top_pair_against_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let m = gaussian_mat(20, 20, &mut rng);
    let t = exact_top_pair(&m).unwrap();
    assert!((t.u.dot(&(&m * &t.v)) - t.sigma_hat).abs() < 1e-10);
    assert!((t.sigma_hat - reference_sigma1(&m)).abs() < 1e-8 * t.sigma_hat);
}

#[test]
fn classical_power_method_precision() {
    let eps = 0.05;
    let mut ok = 0;
    for s in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let g = gaussian_mat(50, 50, &mut rng) / 50f64.sqrt();
        let m = &g * g.transpose() / 4.0 + Matrix::identity(50, 50) * 0.1;
        let exact = exact_top_pair(&m).unwrap().sigma_hat;
        let opts = PowerOptions::default();
        let t = power_method_classical(&m, eps, &opts, &ErrorModel::new(NoiseMode::Uniform, s)).unwrap();
        ok += ((t.u.dot(&(&m * &t.v)) - exact).abs() <= eps) as u32;
    }
    assert!(ok >= 190, "{ok} of 200");
}

#[test]
fn noisy_matvec_deviation_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for s in 0..1000u64 {
        let m = gaussian_mat(6, 6, &mut rng);
        let z = gaussian_vec(6, &mut rng).normalize();
        let eps = 10f64.powf(rng.random_range(-6.0..-1.0));
        let (y, _) = noisy_unit_matvec(&m, &z, eps, &ErrorModel::new(NoiseMode::Uniform, s)).unwrap();
        let exact = (&m * &z).normalize();
        assert!((y - exact).norm() <= eps * (1.0 + 1e-9) + 1e-15);
    }
}

#[test]
fn chain_error_accumulation_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for s in 0..100u64 {
        let m = gaussian_mat(5, 5, &mut rng);
        let op = exact_top_pair(&m).unwrap().sigma_hat;
        let m = m * (1.3 / op);
        let z0 = gaussian_vec(5, &mut rng).normalize();
        let (clean, noisy) = additive_error_chain(&m, &z0, 12, 1e-4, &ErrorModel::new(NoiseMode::WorstCase, s));
        assert!((noisy - clean).norm() <= accumulation_bound(1.3, 12, 1e-4) * (1.0 + 1e-9));
    }
}

fn planted(d: usize, sigmas: &[f64], seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = gaussian_mat(d, d, &mut rng).qr().q();
    let v = gaussian_mat(d, d, &mut rng).qr().q();
    let mut s = Matrix::zeros(d, d);
    for (i, &x) in sigmas.iter().enumerate() {
        s[(i, i)] = x;
    }
    u * s * v.transpose()
}

#[test]
fn qpm_precision_under_proved_schedule() {
    let (d, eps, c0) = (50usize, 0.1, 8.0);
    let mut ok = 0;
    for s in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let m = gaussian_mat(d, d, &mut rng) / (2.0 * (d as f64).sqrt());
        let s1 = exact_top_pair(&m).unwrap().sigma_hat;
        let k = ((2.0 * c0 * s1 * (d as f64).ln() / eps).ceil() as usize).max(1);
        let model = ErrorModel::new(NoiseMode::Uniform, s);
        let gmin = qpm_profile(&m, k, StartVector::Ones, &model).unwrap();
        let delta = (eps * gmin / (16.0 * s1)).min(0.5);
        let out = qpm_emulate(&m, k, delta, delta, StartVector::Ones, &model).unwrap();
        let t = out.triple;
        let rq = t.u.dot(&(&m * &t.v)) / (t.u.norm() * t.v.norm());
        ok += ((rq - s1).abs() <= eps) as u32;
    }
    assert!(ok as f64 >= 0.95 * 40.0, "{ok} of 40");
}

#[test]
fn qpm_cost_scales_as_sqrt_rank() {
    let cost = |r: usize| {
        let m = planted(20, &vec![0.9; r], 5);
        let out = qpm_emulate(&m, 30, 1e-3, 1e-3, StartVector::Ones, &ErrorModel::zero()).unwrap();
        // gamma_min enters separately; hold it fixed.
        out.triple.charged_cost * out.gamma_min
    };
    let ratio = cost(8) / cost(2);
    assert!((ratio - 2.0).abs() < 1e-6, "ratio {ratio}");
}
