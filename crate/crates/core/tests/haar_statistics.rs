//! Distributional checks of the Haar samplers at the 1% level.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use eigencrofton::models::{circle_eigenbasis, sphere2_eigenbasis, torus_eigenbasis, EigenspacePolicy};
use eigencrofton::sampling::{haar_rotation, sample_subspace, trial_rng, SubspaceFrame};

#[test]
fn first_column_has_zero_mean() {
    let n = 100_000;
    let mut sum = [0.0; 3];
    for t in 0..n {
        let r = haar_rotation(3, &mut trial_rng(11, t));
        for (i, s) in sum.iter_mut().enumerate() {
            *s += r[(i, 0)];
        }
    }
    // each coordinate has variance 1/3
    let tol = 3.0 * (1.0f64 / 3.0).sqrt() / (n as f64).sqrt();
    for s in sum {
        assert!((s / n as f64).abs() < tol, "{}", s / n as f64);
    }
}

#[test]
fn random_lines_in_the_plane_have_uniform_angle() {
    let b = circle_eigenbasis(1).unwrap();
    let n = 20_000;
    let mut angles: Vec<f64> = (0..n)
        .map(|t| {
            let f = sample_subspace(&b, 1, &mut trial_rng(12, t)).unwrap();
            let c = f.column(0);
            c[1].atan2(c[0]).rem_euclid(PI) / PI
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    let d = angles
        .iter()
        .enumerate()
        .map(|(i, x)| ((i + 1) as f64 / n as f64 - x).max(x - i as f64 / n as f64))
        .fold(0.0, f64::max);
    assert!(d * (n as f64).sqrt() < 1.628, "KS statistic {}", d * (n as f64).sqrt());
}

/// cos of the largest principal angle between span(C) and span(e₁, e₂).
fn min_cosine(c: &DMatrix<f64>) -> f64 {
    let top = c.rows(0, 2).into_owned();
    let sv = top.svd(false, false).singular_values;
    sv.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[test]
fn subspace_sampler_matches_rotated_standard_frame() {
    // two independent constructions of a uniform 2-plane in R⁴
    let b = torus_eigenbasis([2.0 * PI, PI], [1, 1], EigenspacePolicy::SingleOrbit).unwrap();
    let standard = SubspaceFrame::standard(&b, 2).unwrap();
    let n = 10_000;
    let bins = 10;
    let mut a = vec![0usize; bins];
    let mut c = vec![0usize; bins];
    for t in 0..n {
        let x = min_cosine(sample_subspace(&b, 2, &mut trial_rng(13, t)).unwrap().coeffs());
        let r = haar_rotation(4, &mut trial_rng(14, t));
        let y = min_cosine(standard.rotated(&r).coeffs());
        a[((x * bins as f64) as usize).min(bins - 1)] += 1;
        c[((y * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let chi2: f64 = a
        .iter()
        .zip(&c)
        .filter(|(x, y)| **x + **y > 0)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d / (x + y) as f64
        })
        .sum();
    assert!(chi2 < 21.67, "chi-square {chi2}");
}

#[test]
fn random_sphere_harmonic_has_uniform_direction() {
    // for l = 1 the coefficient vector is the normal of the nodal great circle
    let b = sphere2_eigenbasis(1).unwrap();
    let n = 20_000;
    let mut zs: Vec<f64> = (0..n)
        .map(|t| sample_subspace(&b, 1, &mut trial_rng(15, t)).unwrap().column(0)[0].abs())
        .collect();
    // |first coordinate| of a uniform unit vector in R³ is uniform on [0, 1]
    zs.sort_by(f64::total_cmp);
    let d = zs
        .iter()
        .enumerate()
        .map(|(i, x)| ((i + 1) as f64 / n as f64 - x).max(x - i as f64 / n as f64))
        .fold(0.0, f64::max);
    assert!(d * (n as f64).sqrt() < 1.628);
}
