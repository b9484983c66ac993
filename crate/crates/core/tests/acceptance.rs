//! End-to-end acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; the process exits nonzero when
//! any criterion fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use redg_core::data::{halton_points, parse_pdb_file, AnchorPolicy, RecordFilter, SynthConfig};
use redg_core::experiment::*;
use redg_core::numerics::thin_svd;
use redg_core::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn tuned() -> TrialSettings {
    TrialSettings { rpca: RpcaConfig::distance_block(1), ..TrialSettings::default() }
}

fn cell(anchors: usize, alpha: f64, dim: usize, settings: &TrialSettings) -> Result<SweepSummary> {
    let c = SynthCell { total: 500, anchors, dim, alpha };
    Ok(run_synth_cell(c, 50, 0, settings, false)?.summary)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn clean_exactness() -> Result<Verdict> {
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    for dim in [2, 3] {
        for total in [50, 500] {
            for anchors in [dim + 2, 10, 30] {
                let c = SynthCell { total, anchors, dim, alpha: 0.0 };
                let run = run_synth_cell(c, 5, 0, &tuned(), false)?;
                for r in &run.records {
                    worst = worst.max(if r.rmse.is_nan() { f64::INFINITY } else { r.rmse });
                    if total == 500 {
                        slowest = slowest.max(r.wall_time);
                    }
                }
            }
        }
    }
    Ok(verdict(
        worst <= 1e-6 && slowest < 5.0,
        format!("max rmse {worst:.2e} (<= 1e-6), slowest T=500 trial {slowest:.3}s (< 5s)"),
    ))
}

fn zero_cells() -> Result<Verdict> {
    let a = cell(30, 0.10, 2, &tuned())?;
    let b = cell(50, 0.20, 3, &tuned())?;
    let pass = a.mean_rmse <= 0.05 && b.mean_rmse <= 0.05 && a.failed == 0 && b.failed == 0;
    Ok(verdict(pass, format!("(30,0.1,2) {:.4}, (50,0.2,3) {:.4} (<= 0.05)", a.mean_rmse, b.mean_rmse)))
}

fn nonzero_cells() -> Result<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (m, alpha, r, reference) in [(10, 0.10, 2, 4.63), (10, 0.30, 3, 34.40), (20, 0.20, 3, 6.43)] {
        let s = cell(m, alpha, r, &tuned())?;
        let (lo, hi) = (0.7 * reference, 1.3 * reference);
        let ok = s.failed == 0 && s.mean_rmse >= lo && s.mean_rmse <= hi;
        pass &= ok;
        parts.push(format!(
            "({m},{alpha},{r}) {:.3} in [{lo:.3}, {hi:.3}] {}",
            s.mean_rmse,
            if ok { "ok" } else { "out" }
        ));
    }
    Ok(verdict(pass, parts.join("; ")))
}

enum Bound {
    AtMost(f64),
    Within(f64, f64),
}

fn protein_table(file: &str, cells: &[(usize, f64, Bound)], budget_s: f64) -> Result<Verdict> {
    let path = fixture(file);
    if !path.exists() {
        return Ok(verdict(false, format!("fixture {file} missing")));
    }
    let start = Instant::now();
    let s = parse_pdb_file(&path, RecordFilter::default())?;
    let mut pass = true;
    let mut parts = vec![format!("{} atoms", s.atoms.count())];
    for (m, alpha, bound) in cells {
        let run = run_protein(&s, *m, *alpha, 50, 0, AnchorPolicy::EvenlySpaced, &tuned())?;
        let mean = run.summary.mean_rmse;
        let ok = run.summary.failed == 0
            && match bound {
                Bound::AtMost(hi) => mean <= *hi,
                Bound::Within(lo, hi) => mean >= *lo && mean <= *hi,
            };
        pass &= ok;
        parts.push(format!("(m={m},{alpha}) {mean:.3} {}", if ok { "ok" } else { "out" }));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < budget_s;
    parts.push(format!("{secs:.1}s (< {budget_s}s)"));
    Ok(verdict(pass, parts.join("; ")))
}

fn planted_suite() -> Result<Verdict> {
    let cfg =
        |r| RpcaConfig::new(r).with_gamma(0.98).with_beta_init_scale(1.2).with_max_iters(4000).with_conv_tol(1e-12);
    let mut pass = true;
    let mut parts = Vec::new();
    for (m, n, r, p) in [(20, 20, 2, 0.05), (30, 200, 4, 0.20), (60, 2790, 5, 0.30)] {
        let mut good = 0;
        for seed in 0..100 {
            let (l, s) = common::planted(m, n, r, p, seed);
            let res = rpca_solve(&(&l + &s), &cfg(r))?;
            if (&res.low_rank - &l).norm() / l.norm() <= 1e-6 {
                good += 1;
            }
        }
        pass &= good >= 95;
        parts.push(format!("{m}x{n} r{r} {:.0}%: {good}/100", p * 100.0));
    }
    Ok(verdict(pass, parts.join("; ")))
}

fn invariant_suite() -> Result<Verdict> {
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
    };

    let p = halton_points(&SynthConfig::new(120, 12, 3, 0.0, 0))?;
    let d = points_to_sqdist(&p);
    let s = thin_svd(&d)?.sigma;
    check("rank", s[5] <= 1e-9 * s[0]);

    let blocks = sqdist_blocks(&p, 12)?;
    let a = compute_a(blocks.e());
    let ones = Vector::from_element(12, 1.0);
    check("centering", (&a * &ones).amax() <= 1e-9 * a.norm());

    let b = compute_b(blocks.e(), blocks.f())?;
    let c = nystrom_c(&a, &b, 1e-10)?;
    let mut q = p.coords().clone();
    let mu = q.columns(0, 12).column_mean();
    for mut col in q.column_iter_mut() {
        col -= &mu;
    }
    let truth = q.transpose() * q;
    let c_true = truth.view((12, 12), (108, 108)).into_owned();
    check("nystrom", (&c - &c_true).norm() <= 1e-7 * (1.0 + c_true.norm()));

    let pts: Vec<Vec<f64>> =
        (0..5).map(|i| vec![i as f64, 0.0]).chain((0..6).map(|j| vec![j as f64 * 0.5, 1.0 + j as f64])).collect();
    let line = PointSet::from_points(&pts)?;
    let opts = EdgOptions { skip_rpca: true, ..Default::default() };
    let out = robust_edg(&sqdist_blocks(&line, 5)?, 2, &RpcaConfig::new(4), &opts)?;
    check("collinear", out.diagnostics.anchor_rank == 1 && out.diagnostics.warning.is_some());
    let rmse = procrustes_align(&out.gram.coordinates(2)?, &line)?.rmse;
    check("collinear-inexact", rmse > 1e-3);

    let mut g = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
    let rot = common::random_orthogonal(3, &mut g);
    let est = halton_points(&SynthConfig::new(40, 8, 3, 0.0, 1))?;
    let head = PointSet::new(p.coords().columns(0, 40).into_owned())?;
    let base = aligned_rmse(&est, &head)?;
    let mut moved = &rot * est.coords();
    for mut col in moved.column_iter_mut() {
        col.add_scalar_mut(17.0);
    }
    let again = aligned_rmse(&PointSet::new(moved)?, &head)?;
    check("procrustes", (base - again).abs() <= 1e-9 * (1.0 + base));

    let grid = SynthGrid { total: 80, anchors: vec![10, 20], alphas: vec![0.1, 0.2], dims: vec![2] };
    let strip = |r: &[TrialRecord]| r.iter().map(|t| (t.seed, t.rmse.to_bits(), t.rpca_iters)).collect::<Vec<_>>();
    let one = run_synth_sweep(&grid, 4, 11, &tuned())?;
    let two = run_synth_sweep(&grid, 4, 11, &tuned())?;
    check("determinism", strip(&one.records) == strip(&two.records));
    let par = run_synth_sweep(&grid, 4, 11, &TrialSettings { parallel: true, ..tuned() })?;
    check("parallel", strip(&one.records) == strip(&par.records));

    Ok(if failed.is_empty() {
        verdict(true, "rank, centering, nystrom, collinear, procrustes, determinism, parallel")
    } else {
        verdict(false, format!("failed: {}", failed.join(", ")))
    })
}

fn ablation() -> Result<Verdict> {
    let with = cell(30, 0.20, 2, &tuned())?;
    let skip = TrialSettings { edg: EdgOptions { skip_rpca: true, ..Default::default() }, ..tuned() };
    let without = cell(30, 0.20, 2, &skip)?;
    let ok = without.mean_rmse >= 10.0 * with.mean_rmse && with.failed == 0 && without.failed == 0;
    Ok(verdict(ok, format!("no-rpca {:.3} vs rpca {:.3} (ratio >= 10)", without.mean_rmse, with.mean_rmse)))
}

type Check = fn() -> Result<Verdict>;

fn main() -> ExitCode {
    // `cargo test -- --list` and filters from libtest are not meaningful here
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: Vec<(&str, Check)> = vec![
        ("clean exactness", clean_exactness),
        ("zero-error cells", zero_cells),
        ("nonzero cells within 30%", nonzero_cells),
        ("protein 1PTQ", || {
            protein_table(
                "1ptq.pdb",
                &[(30, 0.20, Bound::AtMost(0.6)), (60, 0.30, Bound::AtMost(0.1)), (10, 0.30, Bound::Within(2.5, 7.5))],
                300.0,
            )
        }),
        ("protein 1W2E", || {
            protein_table("1w2e.pdb", &[(30, 0.20, Bound::AtMost(1.6)), (60, 0.30, Bound::AtMost(0.5))], 1200.0)
        }),
        ("planted robust PCA", planted_suite),
        ("invariants", invariant_suite),
        ("ablation", ablation),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run().unwrap_or_else(|e| verdict(false, format!("error: {e}")));
        if !v.pass {
            failures += 1;
        }
        println!(
            "criterion {} {:<26} {} {} [{:.1}s]",
            k + 1,
            name,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
