use maxbound::geometry::rectangle_faces;
use maxbound::model::IsotropicModel;
use maxbound::simulate::{
    covariance_cholesky, refinement_resolutions, sample_maxima, validate_bound, FieldGrid, ValidationReport, Verdict,
    MAX_GRID_POINTS,
};
use maxbound::special::norm_cdf;
use maxbound::Error;

fn se() -> IsotropicModel {
    IsotropicModel::squared_exponential(0.5).unwrap()
}

#[test]
fn grid_layout() {
    let g = FieldGrid::new(&[1.0, 2.0], &[3, 5]).unwrap();
    assert_eq!(g.len(), 15);
    for corner in [[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [1.0, 2.0]] {
        assert!(g.points.iter().any(|p| p[..] == corner[..]));
    }
    assert!(matches!(FieldGrid::new(&[1.0, 1.0], &[101, 100]), Err(Error::SizeCap { .. })));
    assert!(FieldGrid::new(&[1.0, 1.0], &[100, 100]).unwrap().len() == MAX_GRID_POINTS);
    assert!(FieldGrid::new(&[1.0], &[0]).is_err());
    assert!(FieldGrid::new(&[-1.0], &[3]).is_err());
}

#[test]
fn nested_grid_keeps_coarse_points_first() {
    let coarse = FieldGrid::new(&[1.0, 1.0], &[3, 3]).unwrap();
    let fine = FieldGrid::nested(&coarse, 2).unwrap();
    assert_eq!(fine.len(), 25);
    assert_eq!(fine.coarse_count, 9);
    assert_eq!(&fine.points[..9], &coarse.points[..]);
}

#[test]
fn cholesky_small_cases() {
    let one = FieldGrid::new(&[1.0], &[1]).unwrap();
    let f = covariance_cholesky(&se(), &one).unwrap();
    assert_eq!(f.dim(), 1);
    assert!((f.get(0, 0) - (1.0 + f.jitter).sqrt()).abs() < 1e-15);

    let two = FieldGrid::new(&[0.7], &[2]).unwrap();
    let f = covariance_cholesky(&se(), &two).unwrap();
    let r = (-0.5 * 0.49f64).exp();
    assert!((f.reconstruct(0, 1) - r).abs() < 1e-12);
    assert!((f.reconstruct(1, 1) - 1.0).abs() <= 2.0 * f.jitter);
}

#[test]
fn cholesky_reconstruction_on_20x20() {
    let g = FieldGrid::new(&[1.0, 1.0], &[20, 20]).unwrap();
    let m = se();
    let f = covariance_cholesky(&m, &g).unwrap();
    let mut worst: f64 = 0.0;
    for i in (0..g.len()).step_by(7) {
        for j in (0..=i).step_by(3) {
            let d2: f64 = g.points[i].iter().zip(&g.points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            let target = m.rho(d2) + if i == j { f.jitter } else { 0.0 };
            worst = worst.max((f.reconstruct(i, j) - target).abs());
        }
    }
    assert!(worst <= 10.0 * f.jitter.max(1e-15), "worst {worst}, jitter {}", f.jitter);
    assert!(f.jitter <= 1e-6);
}

#[test]
fn one_point_maxima_are_standard_normal() {
    let g = FieldGrid::new(&[1.0], &[1]).unwrap();
    let mut m = sample_maxima(&se(), &g, 10_000, 17).unwrap();
    m.sort_by(f64::total_cmp);
    let n = m.len() as f64;
    let ks = m
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = norm_cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value 1.628/√n
    assert!(ks < 1.628 / n.sqrt(), "KS statistic {ks}");
}

#[test]
fn sampling_is_deterministic() {
    let g = FieldGrid::new(&[1.0, 1.0], &[6, 6]).unwrap();
    let a = sample_maxima(&se(), &g, 500, 3).unwrap();
    let b = sample_maxima(&se(), &g, 500, 3).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, sample_maxima(&se(), &g, 500, 4).unwrap());
    // replicate r does not depend on the total count
    let c = sample_maxima(&se(), &g, 100, 3).unwrap();
    assert_eq!(&a[..100], &c[..]);
}

#[test]
fn nested_refinement_weakly_increases_maxima() {
    let coarse = FieldGrid::new(&[1.0, 1.0], &[5, 5]).unwrap();
    let fine = FieldGrid::nested(&coarse, 3).unwrap();
    let f = covariance_cholesky(&se(), &fine).unwrap();
    let lead = f.leading(fine.coarse_count);
    let on_fine = f.sample_maxima(400, 9);
    let on_coarse = lead.sample_maxima(400, 9);
    for (a, b) in on_fine.iter().zip(&on_coarse) {
        assert!(a >= b);
    }
}

#[test]
fn refinement_sequence() {
    assert_eq!(refinement_resolutions(&[50, 50]), vec![vec![13, 13], vec![25, 25], vec![50, 50]]);
    assert_eq!(refinement_resolutions(&[2]), vec![vec![2]]);
    assert_eq!(refinement_resolutions(&[1, 8]), vec![vec![1, 2], vec![1, 4], vec![1, 8]]);
}

#[test]
fn validation_report_small() {
    let m = se();
    let geom = rectangle_faces(&[1.0, 1.0]).unwrap();
    let grid = FieldGrid::new(&[1.0, 1.0], &[12, 12]).unwrap();
    let us = [-5.0, 1.0, 2.0, 3.0];
    let r = validate_bound(&m, &geom, &grid, &us, 2000, 1).unwrap();
    assert_eq!(r.empirical[0].mean, 1.0);
    assert!(r.pbar_tail[0] >= 1.0);
    for i in 0..us.len() {
        assert_eq!(r.verdicts[i], ValidationReport::verdict(&r.empirical[i], r.pbar_tail[i]));
        assert_eq!(r.verdicts[i], Verdict::BoundRespected);
        assert!(r.pbar_tail[i] >= r.pe_tail[i]);
    }
    for w in r.empirical.windows(2) {
        assert!(w[1].mean <= w[0].mean);
    }
    assert_eq!(r.refinement.len(), 3);
    assert_eq!(r.refinement.last().unwrap().empirical, r.empirical);

    let csv = r.to_csv();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("u,emp_mean,emp_stderr,pbar_tail,pE_tail,verdict,emp_mean_3x3"));
    assert_eq!(lines.count(), 4);
    assert_eq!(csv, validate_bound(&m, &geom, &grid, &us, 2000, 1).unwrap().to_csv());
}

#[test]
fn validation_rejects_mismatched_geometry() {
    let m = se();
    let grid = FieldGrid::new(&[1.0, 1.0], &[4, 4]).unwrap();
    let wrong = rectangle_faces(&[1.0, 2.0]).unwrap();
    assert!(validate_bound(&m, &wrong, &grid, &[1.0], 100, 0).is_err());
    let right = rectangle_faces(&[1.0, 1.0]).unwrap();
    assert!(validate_bound(&m, &right, &grid, &[], 100, 0).is_err());
    assert!(validate_bound(&m, &right, &grid, &[1.0], 1, 0).is_err());
}
