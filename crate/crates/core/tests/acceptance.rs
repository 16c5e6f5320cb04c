//! Acceptance suite: runs each criterion, prints one PASS/FAIL line per
//! criterion and exits nonzero if any failed.

mod common;

use std::time::{Duration, Instant};

use common::{elementary_symmetric_by_subsets, least_squares, pbar_goe_path, phi, simpson, t_closed_form};
use maxbound::asympt::{exponent_convex, sigma2_isotropic};
use maxbound::bounds::{complementary_decay_rate, default_rule, pbar_density, r_correction, t_series, tail_bound};
use maxbound::geometry::{polytope_g_coeffs, rectangle_faces, Halfspace};
use maxbound::mc::{substream, McEstimate};
use maxbound::model::IsotropicModel;
use maxbound::randmat::{expected_absdet_shifted_goe, goe_eigen_density, mc_absdet, sample_goe};
use maxbound::simulate::{validate_bound, FieldGrid, Verdict};
use maxbound::special::norm_cdf;

type Outcome = Result<String, String>;

struct Criterion {
    title: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn se_half() -> IsotropicModel {
    IsotropicModel::squared_exponential(0.5).unwrap()
}

fn rational_one() -> IsotropicModel {
    IsotropicModel::rational(1.0, 1.0).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn t_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for j in 1..=3 {
        for i in -800..=800 {
            let v = i as f64 * 0.01;
            let a = t_series(j, v).map_err(|e| e.to_string())?;
            worst = worst.max((a - t_closed_form(j, v)).abs());
        }
    }
    check(worst < 1e-12, format!("max |T_j - closed form| = {worst:.2e}"))
}

fn fyodorov_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for nu in [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0] {
        let closed = 2.0 * phi(nu) + nu * (2.0 * norm_cdf(nu) - 1.0);
        let v = expected_absdet_shifted_goe(1, nu).map_err(|e| e.to_string())?;
        worst = worst.max((v - closed).abs());
    }
    if worst >= 1e-10 {
        return Err(format!("n = 1 error {worst:.2e}"));
    }
    let mut worst_z: f64 = 0.0;
    for n in [2usize, 3] {
        for nu in [-1.0, 0.0, 1.5] {
            let est = mc_absdet(n, nu, 1_000_000, 2).map_err(|e| e.to_string())?;
            let exact = expected_absdet_shifted_goe(n, nu).map_err(|e| e.to_string())?;
            worst_z = worst_z.max((est.mean - exact).abs() / est.stderr);
        }
    }
    check(
        worst_z <= 3.0,
        format!("n = 1 error {worst:.2e}; n = 2, 3 worst |z| = {worst_z:.2} at 1e6 replicates"),
    )
}

#[allow(clippy::needless_range_loop)]
fn goe_density() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in -100..=100 {
        let nu = i as f64 * 0.08;
        worst = worst.max((goe_eigen_density(1, nu).map_err(|e| e.to_string())? - phi(nu)).abs());
    }
    if worst >= 1e-12 {
        return Err(format!("|q_1 - phi| = {worst:.2e}"));
    }
    let mut worst_mass: f64 = 0.0;
    for n in 1..=6usize {
        let mass = simpson(|v| goe_eigen_density(n, v).unwrap(), -25.0, 25.0, 20_000);
        worst_mass = worst_mass.max((mass - n as f64).abs());
    }
    if worst_mass >= 1e-6 {
        return Err(format!("|int q_n - n| = {worst_mass:.2e}"));
    }
    // eigenvalue histogram of 1e5 matrices of size 3, 16 bins of width 0.5
    let reps = 100_000;
    let (lo, width, bins) = (-4.0, 0.5, 16usize);
    let mut counts = vec![vec![0.0; reps]; bins];
    for r in 0..reps {
        let g = sample_goe(3, &mut substream(7, r as u64));
        for ev in g.symmetric_eigenvalues().iter() {
            let b = ((ev - lo) / width).floor();
            if b >= 0.0 && (b as usize) < bins {
                counts[b as usize][r] += 1.0;
            }
        }
    }
    let mut worst_z: f64 = 0.0;
    for (b, c) in counts.iter().enumerate() {
        let est = McEstimate::from_samples(c, 7);
        let a = lo + b as f64 * width;
        let expected = simpson(|v| goe_eigen_density(3, v).unwrap(), a, a + width, 200);
        worst_z = worst_z.max((est.mean - expected).abs() / est.stderr);
    }
    check(
        worst_z <= 3.0,
        format!("|q_1 - phi| = {worst:.1e}, |int q_n - n| = {worst_mass:.1e}, histogram worst |z| = {worst_z:.2}"),
    )
}

fn dual_path() -> Outcome {
    let mut worst: f64 = 0.0;
    for m in [se_half(), rational_one()] {
        for sides in [vec![1.0, 1.0], vec![1.0, 1.0, 1.0]] {
            let g = rectangle_faces(&sides).map_err(|e| e.to_string())?;
            for x in [0.0, 1.0, 2.0, 3.0, 4.0] {
                let lib = pbar_density(&m, &g, x).map_err(|e| e.to_string())?.pbar;
                worst = worst.max((lib / pbar_goe_path(&m, &g.g, x) - 1.0).abs());
            }
        }
    }
    check(worst < 1e-6, format!("max relative difference {worst:.2e}"))
}

fn ordering_and_positivity() -> Outcome {
    let g5 = rectangle_faces(&[1.0; 5]).map_err(|e| e.to_string())?;
    let mut min_r = f64::INFINITY;
    let mut min_gap = f64::INFINITY;
    for m in [se_half(), rational_one(), IsotropicModel::rational(0.5, 3.0).unwrap()] {
        for i in 0..=60 {
            let x = -5.0 + i as f64 * 0.25;
            for j in 1..=5 {
                min_r = min_r.min(r_correction(&m, j, x, default_rule()).map_err(|e| e.to_string())?);
            }
            let b = pbar_density(&m, &g5, x).map_err(|e| e.to_string())?;
            min_gap = min_gap.min(b.pbar - b.pe);
        }
    }
    check(min_r >= -1e-12 && min_gap >= 0.0, format!("min R_j = {min_r:.2e}, min pbar - pE = {min_gap:.2e}"))
}

fn geometry() -> Outcome {
    let sides = [1.5, 2.0, 0.25, 3.0, 0.5];
    for d in 1..=5 {
        let f = rectangle_faces(&sides[..d]).map_err(|e| e.to_string())?;
        for j in 0..=d {
            if f.g[j] != elementary_symmetric_by_subsets(&sides[..d], j) {
                return Err(format!("rectangle d = {d}, g_{j} = {}", f.g[j]));
            }
        }
    }
    let square = vec![
        Halfspace::new(vec![1.0, 0.0], 1.0),
        Halfspace::new(vec![-1.0, 0.0], 0.0),
        Halfspace::new(vec![0.0, 1.0], 1.0),
        Halfspace::new(vec![0.0, -1.0], 0.0),
    ];
    let g = polytope_g_coeffs(&square, 1_000_000, 5).map_err(|e| e.to_string())?;
    let ok = g
        .g
        .iter()
        .zip(&g.g_stderr)
        .zip([1.0, 2.0, 1.0])
        .all(|((v, se), e)| (v - e).abs() <= 3.0 * se + 1e-12);
    check(
        ok,
        format!("rectangles exact for d <= 5; square g = ({:.5}, {:.5}, {:.5})", g.g[0], g.g[1], g.g[2]),
    )
}

/// Fits `log R_j(x) = a + p log x − (rate/2) x²` on `x ∈ [8, 14]`.
fn fit_decay(m: &IsotropicModel, j: usize) -> Result<(f64, f64), String> {
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    for i in 0..=60 {
        let x = 8.0 + i as f64 * 0.1;
        let r = r_correction(m, j, x, default_rule()).map_err(|e| e.to_string())?;
        rows.push(vec![1.0, x.ln(), -0.5 * x * x]);
        ys.push(r.ln());
    }
    let beta = least_squares(&rows, &ys);
    Ok((beta[2], beta[1]))
}

fn rate_consistency() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (name, m, check_order) in [("squared exponential", se_half(), true), ("rational", rational_one(), false)] {
        let rate = complementary_decay_rate(&m);
        let conv = exponent_convex(&m).map_err(|e| e.to_string())?.rate - 1.0;
        ok &= (rate - conv).abs() < 1e-12;
        for d0 in [3usize, 4] {
            let (fit_rate, order) = fit_decay(&m, d0)?;
            ok &= (fit_rate / rate - 1.0).abs() < 0.05;
            if check_order {
                ok &= (order - (2 * d0 - 4) as f64).abs() <= 0.5;
            }
            details.push(format!("{name} d0 = {d0}: rate {fit_rate:.4}/{rate:.4}, order {order:.2}"));
        }
    }
    check(ok, details.join("; "))
}

fn example_value() -> Outcome {
    let s = sigma2_isotropic(&se_half(), 2f64.sqrt()).map_err(|e| e.to_string())?;
    check((s.value - 2.0).abs() < 1e-6, format!("sigma^2 = {:.12}", s.value))
}

fn monte_carlo_validation() -> Outcome {
    let m = se_half();
    let geom = rectangle_faces(&[1.0, 1.0]).map_err(|e| e.to_string())?;
    let grid = FieldGrid::new(&[1.0, 1.0], &[50, 50]).map_err(|e| e.to_string())?;
    let us = [1.0, 2.0, 2.5, 3.0];
    let r = validate_bound(&m, &geom, &grid, &us, 10_000, 2026).map_err(|e| e.to_string())?;
    let respected = r.verdicts.iter().all(|v| *v == Verdict::BoundRespected);
    let mid = r
        .refinement
        .iter()
        .find(|l| l.resolution == [25, 25])
        .ok_or("no 25x25 refinement level")?;
    let mut worst: f64 = 0.0;
    for (a, b) in mid.empirical.iter().zip(&r.empirical) {
        worst = worst.max((a.mean - b.mean).abs() / a.stderr.max(b.stderr));
    }
    let rows: Vec<String> = us
        .iter()
        .enumerate()
        .map(|(i, u)| format!("u={u}: {:.4}±{:.4} <= {:.4}", r.empirical[i].mean, r.empirical[i].stderr, r.pbar_tail[i]))
        .collect();
    check(
        respected && worst < 2.0,
        format!("{}; 25x25 vs 50x50 worst shift {worst:.2} stderr", rows.join(", ")),
    )
}

fn tail_consistency() -> Outcome {
    let h = 1e-3;
    let g = rectangle_faces(&[1.0, 1.0]).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for m in [se_half(), rational_one()] {
        for i in 0..=16 {
            let u = i as f64 * 0.25;
            let up = tail_bound(&m, &g, u + h, default_rule()).map_err(|e| e.to_string())?.pbar_tail;
            let dn = tail_bound(&m, &g, u - h, default_rule()).map_err(|e| e.to_string())?.pbar_tail;
            let p = pbar_density(&m, &g, u).map_err(|e| e.to_string())?.pbar;
            worst = worst.max(((up - dn) / (2.0 * h) + p).abs());
        }
    }
    check(worst < 1e-6, format!("max |d/du tail + pbar| = {worst:.2e}"))
}

fn main() {
    let criteria = [
        Criterion { title: "T_j series equals closed forms", budget: Duration::from_secs(1), run: t_identity },
        Criterion { title: "absolute determinant of shifted GOE", budget: Duration::from_secs(120), run: fyodorov_identity },
        Criterion { title: "GOE eigenvalue density", budget: Duration::from_secs(120), run: goe_density },
        Criterion { title: "density bound by two evaluation paths", budget: Duration::from_secs(60), run: dual_path },
        Criterion { title: "R_j >= 0 and pbar >= pE", budget: Duration::MAX, run: ordering_and_positivity },
        Criterion { title: "geometric coefficients", budget: Duration::MAX, run: geometry },
        Criterion { title: "complementary decay rate", budget: Duration::MAX, run: rate_consistency },
        Criterion { title: "variance exponent for squared exponential", budget: Duration::MAX, run: example_value },
        Criterion { title: "Monte Carlo validation of the tail bound", budget: Duration::from_secs(600), run: monte_carlo_validation },
        Criterion { title: "tail derivative equals density", budget: Duration::MAX, run: tail_consistency },
    ];
    let mut failures = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (verdict, detail) = match outcome {
            Ok(d) if elapsed <= c.budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over time budget {:?}", c.budget)),
            Err(d) => ("FAIL", d),
        };
        if verdict == "FAIL" {
            failures += 1;
        }
        println!("criterion {:>2} {verdict}: {} [{:.1}s] {detail}", i + 1, c.title, elapsed.as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
