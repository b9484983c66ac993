mod common;

use common::{jacobi_svd, oracle_pinv, pairwise_sqdist, planted, random_orthogonal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use redg_core::data::{corrupt_block, halton_points, SynthConfig};
use redg_core::numerics::{pseudo_inverse, thin_svd, truncated_svd};
use redg_core::*;

fn uniform(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| g.random_range(-1.0..1.0))
}

fn centered_gram(p: &PointSet, m: usize) -> Matrix {
    let mut c = p.coords().clone();
    let mu = c.columns(0, m).column_mean();
    for mut col in c.column_iter_mut() {
        col -= &mu;
    }
    c.transpose() * c
}

#[test]
fn truncated_svd_matches_jacobi_oracle() {
    for (rows, cols, seed) in [(8, 6, 1), (6, 8, 2), (7, 7, 3)] {
        let m = uniform(rows, cols, seed);
        let (u, s, v) = jacobi_svd(&m);
        let got = truncated_svd(&m, 3).unwrap();
        for k in 0..3 {
            assert!((got.sigma[k] - s[k]).abs() <= 1e-9 * s[0], "sigma {k}");
            let sign = got.u.column(k).dot(&u.column(k)).signum();
            assert!((got.u.column(k) * sign - u.column(k)).amax() <= 1e-9);
            assert!((got.v.column(k) * sign - v.column(k)).amax() <= 1e-9);
        }
    }
}

#[test]
fn thin_svd_residual_is_tail_energy() {
    let m = uniform(9, 5, 4);
    let full = thin_svd(&m).unwrap();
    for k in 1..=5 {
        let t = truncated_svd(&m, k).unwrap();
        let tail: f64 = full.sigma.iter().skip(k).map(|s| s * s).sum::<f64>().sqrt();
        let res = (&m - t.reconstruct()).norm();
        assert!((res - tail).abs() <= 1e-9 * m.norm().max(1.0));
        let ortho = t.u.transpose() * &t.u - Matrix::identity(k, k);
        assert!(ortho.amax() <= 1e-10);
    }
}

#[test]
fn pseudo_inverse_matches_oracle_on_rank_deficient() {
    let a = uniform(5, 3, 7) * uniform(3, 5, 8);
    let want = oracle_pinv(&a, 1e-10);
    let got = pseudo_inverse(&a, 1e-10).unwrap();
    assert!((&got - &want).amax() <= 1e-8 * want.amax().max(1.0));
    assert!((&a * &got * &a - &a).norm() <= 1e-8 * a.norm());
}

#[test]
fn sqdist_matches_pairwise_norms() {
    let p = PointSet::new(uniform(3, 10, 9) * 10.0).unwrap();
    let want = pairwise_sqdist(&p.to_points());
    let got = points_to_sqdist(&p);
    assert!((&got - &want).amax() <= 1e-10 * want.amax().max(1.0));
    assert!(got.diagonal().iter().all(|&x| x == 0.0));
    assert_eq!(got, got.transpose());
}

#[test]
fn sqdist_rank_is_at_most_r_plus_two() {
    for r in 1..=4 {
        let p = PointSet::new(uniform(r, 40, r as u64)).unwrap();
        let s = thin_svd(&points_to_sqdist(&p)).unwrap().sigma;
        assert!(s[r + 2] / s[0] <= 1e-9, "r={r}: {}", s[r + 2] / s[0]);
    }
}

/// Grid search over the rotation angle for both orientations; the optimal
/// translation for a fixed rotation is the centroid difference.
fn grid_rmse(est: &PointSet, truth: &PointSet) -> f64 {
    let t = truth.count() as f64;
    let cost = |theta: f64, flip: bool| {
        let (s, c) = theta.sin_cos();
        let mut r = Matrix::from_row_slice(2, 2, &[c, -s, s, c]);
        if flip {
            r *= Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        }
        let moved = &r * est.coords();
        let shift = truth.centroid() - moved.column_mean();
        let mut acc = 0.0;
        for j in 0..truth.count() {
            acc += (moved.column(j) + &shift - truth.coords().column(j)).norm_squared();
        }
        (acc / t).sqrt()
    };
    let mut best = f64::INFINITY;
    for flip in [false, true] {
        let steps = 3600;
        let (mut lo_theta, mut best_here) = (0.0, f64::INFINITY);
        for k in 0..steps {
            let th = k as f64 * std::f64::consts::TAU / steps as f64;
            let c = cost(th, flip);
            if c < best_here {
                best_here = c;
                lo_theta = th;
            }
        }
        let step = std::f64::consts::TAU / steps as f64;
        for k in -1000..=1000 {
            best_here = best_here.min(cost(lo_theta + k as f64 * step / 500.0, flip));
        }
        best = best.min(best_here);
    }
    best
}

#[test]
fn procrustes_matches_grid_search_with_one_displaced_point() {
    let truth = PointSet::new(uniform(2, 100, 11) * 50.0).unwrap();
    let mut coords = truth.coords().clone();
    coords[(0, 17)] += 3.0;
    coords[(1, 17)] += 4.0;
    let mut g = ChaCha8Rng::seed_from_u64(5);
    let q = random_orthogonal(2, &mut g);
    let mut moved = &q * coords;
    for mut col in moved.column_iter_mut() {
        col[0] += 12.0;
        col[1] -= 7.0;
    }
    let est = PointSet::new(moved).unwrap();
    let got = procrustes_align(&est, &truth).unwrap().rmse;
    let want = grid_rmse(&est, &truth);
    assert!(got > 0.3, "displacement should be visible, got {got}");
    assert!((got - want).abs() <= 1e-3, "{got} vs {want}");
}

#[test]
fn nystrom_is_exact_for_spanning_anchors() {
    for (r, seed) in [(2, 1), (3, 2)] {
        let p = halton_points(&SynthConfig::new(80, 12, r, 0.0, seed)).unwrap();
        let blocks = sqdist_blocks(&p, 12).unwrap();
        let a = compute_a(blocks.e());
        let b = compute_b(blocks.e(), blocks.f()).unwrap();
        let c = nystrom_c(&a, &b, 1e-10).unwrap();
        let truth = centered_gram(&p, 12);
        let c_true = truth.view((12, 12), (68, 68)).into_owned();
        assert!((&c - &c_true).norm() <= 1e-7 * (1.0 + c_true.norm()));
        let x_hat = assemble_gram(&a, &b, &c).unwrap();
        assert!((&x_hat - &truth).norm() <= 1e-8 * truth.norm());
    }
}

#[test]
fn collinear_anchors_are_inexact() {
    // anchors on the x axis, targets off it
    let pts: Vec<Vec<f64>> =
        (0..5).map(|i| vec![i as f64, 0.0]).chain((0..6).map(|j| vec![j as f64 * 0.5, 1.0 + j as f64])).collect();
    let p = PointSet::from_points(&pts).unwrap();
    let blocks = sqdist_blocks(&p, 5).unwrap();
    let out =
        robust_edg(&blocks, 2, &RpcaConfig::new(4), &EdgOptions { skip_rpca: true, ..Default::default() }).unwrap();
    assert_eq!(out.diagnostics.anchor_rank, 1);
    assert!(out.diagnostics.warning.is_some());
    let truth = centered_gram(&p, 5);
    let c_true = truth.view((5, 5), (6, 6)).into_owned();
    assert!((out.gram.c() - c_true).norm() > 1.0);
}

#[test]
fn clean_pipeline_round_trips_anchor_block() {
    let p = halton_points(&SynthConfig::new(120, 15, 3, 0.0, 0)).unwrap();
    let blocks = sqdist_blocks(&p, 15).unwrap();
    let out = robust_edg(&blocks, 3, &RpcaConfig::distance_block(5), &EdgOptions::default()).unwrap();
    let est = extract_coordinates(&out.x_hat(), 3).unwrap();
    let d = points_to_sqdist(&est);
    let e_back = d.view((0, 0), (15, 15)).into_owned();
    assert!((&e_back - blocks.e()).norm() <= 1e-8 * blocks.e().norm());
    assert!(procrustes_align(&est, &p).unwrap().rmse <= 1e-6);
}

#[test]
fn structured_coordinates_match_dense_extraction() {
    let p = halton_points(&SynthConfig::new(150, 20, 3, 0.2, 0)).unwrap();
    let clean = sqdist_blocks(&p, 20).unwrap();
    let (f, _) = corrupt_block(clean.f(), 0.2, 3).unwrap();
    let blocks = clean.with_f(f).unwrap();
    let out = robust_edg(&blocks, 3, &RpcaConfig::distance_block(5), &EdgOptions::default()).unwrap();
    let dense = extract_coordinates(&out.x_hat(), 3).unwrap();
    let fast = out.gram.coordinates(3).unwrap();
    let g_dense = dense.coords().transpose() * dense.coords();
    let g_fast = fast.coords().transpose() * fast.coords();
    assert!((&g_dense - &g_fast).norm() <= 1e-8 * g_dense.norm());
}

#[test]
fn planted_rpca_recovers_low_rank_and_support() {
    let cfg = RpcaConfig::new(2).with_gamma(0.98).with_beta_init_scale(1.2).with_max_iters(4000).with_conv_tol(1e-12);
    let (l, s) = planted(20, 20, 2, 0.05, 0);
    let res = rpca_solve(&(&l + &s), &cfg).unwrap();
    assert!((&res.low_rank - &l).norm() / l.norm() <= 1e-6);
    for (a, b) in res.sparse.iter().zip(s.iter()) {
        assert_eq!(*a != 0.0, *b != 0.0, "support differs");
    }
    let sv = thin_svd(&res.low_rank).unwrap().sigma;
    assert!(sv[2] / sv[0] <= 1e-8);
    assert!((&l + &s - &res.low_rank - &res.sparse).norm() <= res.final_residual * (&l + &s).norm() * (1.0 + 1e-9));
}

#[test]
fn pipeline_is_invariant_to_tail_order() {
    let p = halton_points(&SynthConfig::new(200, 30, 2, 0.1, 0)).unwrap();
    let clean = sqdist_blocks(&p, 30).unwrap();
    let (f, _) = corrupt_block(clean.f(), 0.1, 9).unwrap();
    let cfg = RpcaConfig::distance_block(4);
    let base = robust_edg(&clean.with_f(f.clone()).unwrap(), 2, &cfg, &EdgOptions::default()).unwrap();
    let rmse = procrustes_align(&base.gram.coordinates(2).unwrap(), &p).unwrap().rmse;

    // reverse the targets, keep anchors first
    let n = 170;
    let perm: Vec<usize> = (0..30).chain((30..200).rev()).collect();
    let p2 = p.permuted(&perm).unwrap();
    let f2 = Matrix::from_fn(30, n, |i, j| f[(i, n - 1 - j)]);
    let blocks2 = SqDistBlocks::new(clean.e().clone(), f2).unwrap();
    let out2 = robust_edg(&blocks2, 2, &cfg, &EdgOptions::default()).unwrap();
    let rmse2 = procrustes_align(&out2.gram.coordinates(2).unwrap(), &p2).unwrap().rmse;
    assert!((rmse - rmse2).abs() <= 1e-9 * (1.0 + rmse), "{rmse} vs {rmse2}");
}
