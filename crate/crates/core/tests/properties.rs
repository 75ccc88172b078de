use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use wavelag::simulate::{add_scaled_noise, convolve_series, sample_sd, scenario, TestFunction};
use wavelag::toeplitz::loglog_slope;
use wavelag::wavelet2d::{dwt2, idwt2, Family, Image, WaveletSpec};
use wavelag::*;

fn random_kernel(m: usize, seed: u64) -> LagCoeffs<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c: Vec<f64> = (0..m).map(|_| rng.random_range(-0.3..0.3)).collect();
    c[0] = rng.random_range(0.8..1.5);
    LagCoeffs::new(c).unwrap()
}

fn dense(op: &LowerToeplitz<f64>) -> DMatrix<f64> {
    let m = op.dim();
    DMatrix::from_fn(m, m, |i, j| op.entry(i, j))
}

#[test]
fn discrete_orthonormality_on_long_horizon() {
    let grid = TimeGrid::new(4096, 80.0).unwrap();
    let gram = tabulate_basis::<f64>(10, &grid).unwrap().gram();
    for i in 0..10 {
        for j in 0..10 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((gram[i * 10 + j] - want).abs() < 1e-6, "({i},{j})");
        }
    }
}

#[test]
fn laguerre_convolution_identity() {
    let phi = |l: usize, t: f64| eval_laguerre(l, t).unwrap();
    let steps = 4000;
    for t in [0.25, 1.0, 2.5, 6.0, 15.0, 30.0] {
        let h = t / steps as f64;
        for k in 0..10 {
            for j in 0..10 - k {
                let node = |s: usize| phi(k, s as f64 * h) * phi(j, t - s as f64 * h);
                let inner: f64 = (1..steps).map(node).sum();
                let conv = h * (0.5 * (node(0) + node(steps)) + inner);
                let want = phi(k + j, t) - phi(k + j + 1, t);
                assert!(
                    (conv - want).abs() < 1e-4,
                    "k={k} j={j} t={t}: {conv} vs {want}"
                );
            }
        }
    }
}

#[test]
fn sampled_convolution_matches_identity() {
    let grid = TimeGrid::new(4096, 40.0).unwrap();
    let t = grid.points::<f64>();
    let phi = |l: usize| -> Vec<f64> { t.iter().map(|x| eval_laguerre(l, *x).unwrap()).collect() };
    for (k, j) in [(0, 0), (1, 0), (0, 2), (2, 1)] {
        let q = convolve_series(&phi(k), 1.0, &phi(j), 1.0, grid.step()).unwrap();
        let (a, b) = (phi(k + j), phi(k + j + 1));
        for (i, v) in q.iter().enumerate() {
            assert!((v - (a[i] - b[i])).abs() < 1e-4, "k={k} j={j} t={}", t[i]);
        }
    }
}

#[test]
fn triangular_solve_matches_dense_oracle() {
    for (m, seed) in [(1, 1), (5, 2), (17, 3), (64, 4)] {
        let op = build_g(&random_kernel(m, seed), m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let rhs: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = solve_lower(&op, &rhs).unwrap();
        let oracle = dense(&op)
            .lu()
            .solve(&nalgebra::DVector::from_vec(rhs.clone()))
            .unwrap();
        let err = x
            .iter()
            .zip(oracle.iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-10 * oracle.norm(), "m={m}: {err}");
    }
}

#[test]
fn spectral_norm_matches_svd_oracle() {
    for (m, seed) in [(1, 5), (2, 6), (9, 7), (32, 8), (64, 9)] {
        let g = random_kernel(m, seed);
        let table = inverse_norms(&g, m).unwrap();
        for k in [1, m / 2, m].into_iter().filter(|k| *k >= 1) {
            let inv = dense(&build_g(&g, k).unwrap()).try_inverse().unwrap();
            let sigma = inv.clone().svd(false, false).singular_values.max();
            let rel = (table.spectral(k) - sigma).abs() / sigma;
            assert!(rel < 1e-6, "m={k}: {} vs {sigma}", table.spectral(k));
            let frob = inv.norm();
            assert!((table.frobenius(k) - frob).abs() < 1e-10 * frob);
        }
    }
}

#[test]
fn inverse_norms_are_monotone_and_ordered() {
    let table = inverse_norms(&random_kernel(48, 11), 48).unwrap();
    for m in 1..=48 {
        assert!(table.spectral(m) <= table.frobenius(m) * (1.0 + 1e-12));
        if m > 1 {
            assert!(table.spectral(m) >= table.spectral(m - 1) * (1.0 - 1e-9));
            assert!(table.frobenius(m) >= table.frobenius(m - 1));
        }
    }
}

#[test]
fn frobenius_growth_for_phi0_kernel() {
    let table = inverse_norms(&LagCoeffs::<f64>::unit(256).unwrap(), 256).unwrap();
    let pts: Vec<(f64, f64)> = (8..=256)
        .map(|m| (m as f64, table.frobenius(m).powi(2)))
        .collect();
    let slope = loglog_slope(&pts);
    assert!((slope - 2.0).abs() <= 0.3, "{slope}");
}

#[test]
fn coefficient_variance_grows_linearly_for_phi0_kernel() {
    let m = 64;
    let op = build_g(&LagCoeffs::<f64>::unit(m).unwrap(), m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let draws = 4000;
    let mut var = vec![0.0; m];
    for _ in 0..draws {
        let rhs: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        for (v, x) in var.iter_mut().zip(op.solve(&rhs).unwrap()) {
            *v += x * x / draws as f64;
        }
    }
    let pts: Vec<(f64, f64)> = (0..m).map(|l| ((l + 1) as f64, var[l])).collect();
    let slope = loglog_slope(&pts);
    assert!((slope - 1.0).abs() <= 0.3, "{slope}");
}

#[test]
fn wavelet_transform_preserves_inner_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = WaveletSpec::<f64>::full_depth(Family::Db8, 32, 16).unwrap();
    let a = Image::from_fn(32, 16, |_, _| rng.random_range(-1.0..1.0));
    let b = Image::from_fn(32, 16, |_, _| rng.random_range(-1.0..1.0));
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let pix = dot(a.as_slice(), b.as_slice());
    let coef = dot(
        dwt2(&a, &spec).unwrap().as_slice(),
        dwt2(&b, &spec).unwrap().as_slice(),
    );
    assert!((pix - coef).abs() <= 1e-8 * dot(a.as_slice(), a.as_slice()));
}

#[test]
fn sigma_estimate_is_scale_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let spec = WaveletSpec::<f64>::new(Family::Db4, 1, 1);
    let img = Image::from_fn(16, 16, |_, _| rng.random_range(-1.0..1.0));
    for method in [SigmaMethod::Mad, SigmaMethod::Std] {
        let s = estimate_sigma(&img, &spec, method).unwrap();
        let scaled = Image::from_fn(16, 16, |i, j| -2.5 * img.get(i, j));
        let s2 = estimate_sigma(&scaled, &spec, method).unwrap();
        assert!((s2 - 2.5 * s).abs() < 1e-12 * s2);
    }
}

#[test]
fn eps_hat_tracks_injected_noise() {
    let grid = TimeGrid::new(32, 5.0).unwrap();
    let q = scenario(TestFunction::F2, &grid, 32, 32).unwrap().q;
    let spec = WaveletSpec::<f64>::full_depth(Family::Db4, 32, 32).unwrap();
    let sigma = sample_sd(q.as_slice()) / 3.0;
    let target = 5.0 * sigma / 32f64.sqrt();
    let (mut single, mut double) = (0.0, 0.0);
    for seed in 0..100 {
        let y1 = add_scaled_noise(&q, sigma, seed, 0);
        let y2 = add_scaled_noise(&q, 2.0 * sigma, seed + 1000, 0);
        single += estimate_eps(&y1, &spec, SigmaMethod::Mad).unwrap().1 / 100.0;
        double += estimate_eps(&y2, &spec, SigmaMethod::Mad).unwrap().1 / 100.0;
    }
    assert!((single / target - 1.0).abs() < 0.15, "{single} vs {target}");
    assert!(
        (double / single / 2.0 - 1.0).abs() < 0.10,
        "{double} vs {single}"
    );
}

#[test]
fn exact_recovery_on_long_grid() {
    let grid = TimeGrid::new(1024, 40.0).unwrap();
    let f = simulate::eval_test_function(TestFunction::F2, &grid, 32, 32);
    let q = simulate::exact_convolution(TestFunction::F2, &grid, 32, 32);
    let cfg = EstimatorConfig {
        order: Order::Fixed(8),
        threshold: false,
        ..Default::default()
    };
    let est = deconvolve(&q, &Kernel::Series(simulate::exp_kernel(&grid)), &cfg).unwrap();
    let delta = simulate::relative_error(&est.fhat, &f).unwrap();
    assert!(delta < 1e-3, "{delta}");
}

#[test]
fn exact_recovery_with_higher_laguerre_content() {
    // f(t, x) = (phi_1(t) - 0.5 phi_3(t)) b(x); with g = phi_0 the data are
    // q = b(x) sum_l c_l (phi_l - phi_{l+1}).
    let grid = TimeGrid::new(1024, 40.0).unwrap();
    let c = [0.0, 1.0, 0.0, -0.5];
    let prof = |t: f64, shift: usize| -> f64 {
        c.iter()
            .enumerate()
            .map(|(l, cl)| cl * eval_laguerre(l + shift, t).unwrap())
            .sum()
    };
    let b = |i: usize, j: usize| ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.4;
    let f = Cube::from_fn(grid, 16, 16, |k, i, j| prof(grid.point(k), 0) * b(i, j));
    let q = Cube::from_fn(grid, 16, 16, |k, i, j| {
        (prof(grid.point(k), 0) - prof(grid.point(k), 1)) * b(i, j)
    });
    let cfg = EstimatorConfig {
        order: Order::Fixed(8),
        threshold: false,
        eps: NoiseLevel::Fixed(0.0),
        ..Default::default()
    };
    let kernel = Kernel::Coeffs(LagCoeffs::unit(8).unwrap());
    let est = deconvolve(&q, &kernel, &cfg).unwrap();
    assert!(simulate::relative_error(&est.fhat, &f).unwrap() < 1e-3);
}

use wavelag::simulate;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
        let grid = TimeGrid::new(64, 8.0).unwrap();
        let p = Projector::new(tabulate_basis::<f64>(6, &grid).unwrap(), Projection::Ridge(0.01)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let (px, py, pm) = (p.apply(&x).unwrap(), p.apply(&y).unwrap(), p.apply(&mix).unwrap());
        for l in 0..6 {
            prop_assert!((pm[l] - a * px[l] - b * py[l]).abs() < 1e-10);
        }
    }

    #[test]
    fn solve_inverts_apply(m in 1usize..40, seed in 0u64..1000) {
        let op = build_g(&random_kernel(m, seed), m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let back = op.solve(&op.apply(&x).unwrap()).unwrap();
        let scale = x.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for (u, v) in back.iter().zip(&x) {
            prop_assert!((u - v).abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn wavelet_perfect_reconstruction(p1 in 0u32..6, p2 in 0u32..6, fam in 0usize..4, seed in 0u64..1000) {
        let (n1, n2) = (1usize << p1, 1usize << p2);
        let family = [Family::Haar, Family::Db4, Family::Db6, Family::Db8][fam];
        let spec = WaveletSpec::<f64>::full_depth(family, n1, n2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = Image::from_fn(n1, n2, |_, _| rng.random_range(-10.0..10.0));
        let w = dwt2(&img, &spec).unwrap();
        let back = idwt2(&w, &spec).unwrap();
        for (a, b) in back.as_slice().iter().zip(img.as_slice()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        prop_assert!((w.energy() - img.energy()).abs() <= 1e-8 * img.energy());
    }

    #[test]
    fn cube_file_roundtrip(n in 1usize..6, n1 in 1usize..5, n2 in 1usize..5, seed in 0u64..1000) {
        let grid = TimeGrid::new(n, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * n1 * n2)
            .map(|_| {
                let e: i32 = rng.random_range(-300..300);
                rng.random_range(-1.0..1.0) * 10f64.powi(e)
            })
            .collect();
        let cube = Cube::new(grid, n1, n2, data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        wavelag::io::write_cube(&path, &cube).unwrap();
        let back = wavelag::io::read_cube(&path).unwrap();
        prop_assert_eq!(back.shape(), cube.shape());
        for (a, b) in back.as_slice().iter().zip(cube.as_slice()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
