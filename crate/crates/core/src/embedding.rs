//! The evaluation map Φ = (f₁, …, f_N), its unit-sphere rescaling
//! φ = √(vol M / N)·Φ, the pullback metric φ*(g₀) and the predictions that
//! follow from its eigenvalues β₁..βₙ.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{sphere_area, weyl_constant, EigenBasis, Point};

/// Points used for the default constancy check.
pub const DEFAULT_CONSTANCY_POINTS: usize = 64;
/// Relative tolerance (against λ) for β constancy.
pub const DEFAULT_CONSTANCY_TOL: f64 = 1e-6;
/// Seed of the default constancy sample; fixed so predictions are reproducible.
const CONSTANCY_SEED: u64 = 0x5eed_b37a;

/// Symmetric n×n form on the tangent space (n ≤ 2), in an orthonormal frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TangentForm {
    pub n: usize,
    pub entries: [[f64; 2]; 2],
}

impl TangentForm {
    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.entries[i][i]).sum()
    }

    pub fn det(&self) -> f64 {
        let e = &self.entries;
        match self.n {
            1 => e[0][0],
            _ => e[0][0] * e[1][1] - e[0][1] * e[1][0],
        }
    }

    /// Eigenvalues in ascending order (closed form).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let e = &self.entries;
        if self.n == 1 {
            return vec![e[0][0]];
        }
        let half_tr = 0.5 * (e[0][0] + e[1][1]);
        let half_diff = 0.5 * (e[0][0] - e[1][1]);
        let r = half_diff.hypot(e[0][1]);
        vec![half_tr - r, half_tr + r]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PullbackSpectrum {
    /// Ascending eigenvalues of φ*(g₀) against g.
    pub betas: Vec<f64>,
    pub trace: f64,
    pub det: f64,
    /// Largest |β_i(x) − β_i(x₀)| over the sample.
    pub max_deviation: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub average_zeros: f64,
    pub weyl_bound: f64,
    pub nodal_volume: Option<f64>,
}

fn phi_scale(basis: &EigenBasis) -> f64 {
    (basis.model().volume() / basis.dim() as f64).sqrt()
}

/// φ(x) = √(vol M / N)·(f₁(x), …, f_N(x)), a unit vector for invariant bases.
pub fn phi(basis: &EigenBasis, x: &Point) -> Vec<f64> {
    let s = phi_scale(basis);
    basis.values(x).into_iter().map(|v| v * s).collect()
}

fn gram_of_gradients(basis: &EigenBasis, x: &Point, scale: f64) -> TangentForm {
    let n = basis.n();
    let grads = basis.gradients(x);
    let mut entries = [[0.0; 2]; 2];
    for g in &grads {
        for i in 0..n {
            for j in 0..n {
                entries[i][j] += g[i] * g[j];
            }
        }
    }
    let s2 = scale * scale;
    for row in entries.iter_mut() {
        for v in row.iter_mut() {
            *v *= s2;
        }
    }
    TangentForm { n, entries }
}

/// G = JᵀJ with J the N×n Jacobian of φ in an orthonormal frame at `x`.
pub fn pullback_metric(basis: &EigenBasis, x: &Point) -> TangentForm {
    gram_of_gradients(basis, x, phi_scale(basis))
}

/// Pullback of the Euclidean metric by the unscaled map Φ.
pub fn pullback_metric_unscaled(basis: &EigenBasis, x: &Point) -> TangentForm {
    gram_of_gradients(basis, x, 1.0)
}

/// β-spectrum at the given points; fails if it varies by more than
/// `rel_tol·λ` between points.
pub fn beta_spectrum(basis: &EigenBasis, points: &[Point], rel_tol: f64) -> Result<PullbackSpectrum> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidArgument("beta_spectrum needs at least one point".into()));
    };
    let g0 = pullback_metric(basis, first);
    let b0 = g0.eigenvalues();
    let mut max_dev: f64 = 0.0;
    for p in &points[1..] {
        let b = pullback_metric(basis, p).eigenvalues();
        for (u, v) in b.iter().zip(&b0) {
            max_dev = max_dev.max((u - v).abs());
        }
    }
    let tolerance = rel_tol * basis.lambda().max(f64::MIN_POSITIVE);
    if max_dev > tolerance {
        return Err(Error::ConstancyViolation {
            deviation: max_dev,
            tolerance,
        });
    }
    Ok(PullbackSpectrum {
        trace: b0.iter().sum(),
        det: b0.iter().product(),
        betas: b0,
        max_deviation: max_dev,
        points: points.len(),
    })
}

/// β-spectrum checked on the default sample of uniformly random points.
pub fn beta_spectrum_default(basis: &EigenBasis) -> Result<PullbackSpectrum> {
    let mut rng = ChaCha8Rng::seed_from_u64(CONSTANCY_SEED);
    let pts: Vec<Point> = (0..DEFAULT_CONSTANCY_POINTS)
        .map(|_| basis.model().random_point(&mut rng))
        .collect();
    beta_spectrum(basis, &pts, DEFAULT_CONSTANCY_TOL)
}

/// (2/σₙ)·√(β₁⋯βₙ)·vol M.
pub fn predicted_average_zeros(basis: &EigenBasis) -> Result<f64> {
    let spec = beta_spectrum_default(basis)?;
    predicted_from_spectrum(basis, &spec, basis.model().volume())
}

/// (2/σₙ)·√(β₁⋯βₙ)·vol D for a domain of the given volume.
pub fn predicted_from_spectrum(basis: &EigenBasis, spec: &PullbackSpectrum, volume: f64) -> Result<f64> {
    let sigma = sphere_area(basis.n())?;
    Ok(2.0 / sigma * spec.det.max(0.0).sqrt() * volume)
}

/// c(n)·λ^{n/2}·vol M.
pub fn weyl_bound(basis: &EigenBasis) -> f64 {
    weyl_bound_for_volume(basis, basis.model().volume())
}

pub fn weyl_bound_for_volume(basis: &EigenBasis, volume: f64) -> f64 {
    let n = basis.n();
    weyl_constant(n).expect("n >= 1") * basis.lambda().powf(n as f64 / 2.0) * volume
}

/// (σ_{n−k}/σₙ)·(λ/n)^{k/2}·vol M for isotropy irreducible models.
pub fn predicted_nodal_volume(basis: &EigenBasis, k: usize) -> Result<f64> {
    let n = basis.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "nodal volume needs 1 <= k < n (k={k}, n={n})"
        )));
    }
    if !basis.model().is_isotropy_irreducible() {
        return Err(Error::NotIsotropyIrreducible);
    }
    let ratio = sphere_area(n - k)? / sphere_area(n)?;
    Ok(ratio * (basis.lambda() / n as f64).powf(k as f64 / 2.0) * basis.model().volume())
}

pub fn predict(basis: &EigenBasis) -> Result<Prediction> {
    let nodal_volume = if basis.n() > 1 && basis.model().is_isotropy_irreducible() {
        Some(predicted_nodal_volume(basis, 1)?)
    } else {
        None
    };
    Ok(Prediction {
        average_zeros: predicted_average_zeros(basis)?,
        weyl_bound: weyl_bound(basis),
        nodal_volume,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{circle_eigenbasis, restricted_subbasis, sphere2_eigenbasis, torus_eigenbasis, EigenspacePolicy};
    use std::f64::consts::PI;

    fn torus_a(a: f64) -> EigenBasis {
        torus_eigenbasis([2.0 * PI, 2.0 * PI / a], [1, 1], EigenspacePolicy::SingleOrbit).unwrap()
    }

    #[test]
    fn phi_on_torus_at_quarter_period() {
        let b = torus_a(2.0);
        let v = phi(&b, &Point::Torus([PI / 2.0, 0.0]));
        assert!((v[0] - 1.0).abs() < 1e-14);
        assert!(v[1..].iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn phi_at_north_pole() {
        let b = sphere2_eigenbasis(1).unwrap();
        let v = phi(&b, &Point::Sphere([0.0, 0.0, 1.0]));
        assert!((v[0] - 1.0).abs() < 1e-14);
        assert!(v[1].abs() < 1e-15 && v[2].abs() < 1e-15);
    }

    #[test]
    fn torus_pullback_is_diagonal() {
        let b = torus_a(2.0);
        for p in [[0.1, 0.2], [2.0, 2.5], [5.0, 0.0]] {
            let g = pullback_metric(&b, &Point::Torus(p));
            assert!((g.entries[0][0] - 1.0).abs() < 1e-12);
            assert!((g.entries[1][1] - 4.0).abs() < 1e-12);
            assert!(g.entries[0][1].abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_pullback_is_conformal() {
        let b = sphere2_eigenbasis(2).unwrap();
        let g = pullback_metric(&b, &Point::Sphere([0.6, 0.0, 0.8]));
        assert!((g.entries[0][0] - 3.0).abs() < 1e-12);
        assert!((g.entries[1][1] - 3.0).abs() < 1e-12);
        assert!(g.entries[0][1].abs() < 1e-12);
    }

    #[test]
    fn circle_pullback_is_l_squared() {
        let b = circle_eigenbasis(3).unwrap();
        let g = pullback_metric(&b, &Point::Circle(1.1));
        assert_eq!(g.n, 1);
        assert!((g.entries[0][0] - 9.0).abs() < 1e-12);
    }

    #[test]
    fn spectra() {
        let s = beta_spectrum_default(&torus_a(2.0)).unwrap();
        assert!((s.betas[0] - 1.0).abs() < 1e-9 && (s.betas[1] - 4.0).abs() < 1e-9);
        assert!((s.trace - 5.0).abs() < 1e-9);
        let s = beta_spectrum_default(&torus_a(1.0)).unwrap();
        assert!((s.betas[0] - 1.0).abs() < 1e-9 && (s.betas[1] - 1.0).abs() < 1e-9);
        let s = beta_spectrum_default(&sphere2_eigenbasis(3).unwrap()).unwrap();
        assert!((s.betas[0] - 6.0).abs() < 1e-9 && (s.betas[1] - 6.0).abs() < 1e-9);
        assert!((s.trace - 12.0).abs() < 1e-9);
    }

    #[test]
    fn non_invariant_restriction_is_detected() {
        let r = restricted_subbasis(&torus_a(2.0), &[0, 1]).unwrap();
        assert!(matches!(
            beta_spectrum_default(&r),
            Err(Error::ConstancyViolation { .. })
        ));
        assert!(beta_spectrum(&r, &[], 1e-6).is_err());
    }

    #[test]
    fn predictions() {
        for a in [0.5, 1.0, 2.0, 3.0] {
            let p = predicted_average_zeros(&torus_a(a)).unwrap();
            assert!((p - 2.0 * PI).abs() < 1e-8, "a={a}: {p}");
        }
        assert!((predicted_average_zeros(&sphere2_eigenbasis(2).unwrap()).unwrap() - 6.0).abs() < 1e-9);
        for l in 1..6 {
            let p = predicted_average_zeros(&circle_eigenbasis(l).unwrap()).unwrap();
            assert!((p - 2.0 * l as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn weyl_bounds() {
        assert!((weyl_bound(&torus_a(2.0)) - 2.5 * PI).abs() < 1e-12);
        assert!((weyl_bound(&torus_a(1.0)) - 2.0 * PI).abs() < 1e-12);
        assert!((weyl_bound(&sphere2_eigenbasis(1).unwrap()) - 2.0).abs() < 1e-12);
        assert!((weyl_bound(&circle_eigenbasis(5).unwrap()) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn nodal_volumes() {
        let v = |l| predicted_nodal_volume(&sphere2_eigenbasis(l).unwrap(), 1).unwrap();
        assert!((v(1) - 2.0 * PI).abs() < 1e-12);
        assert!((v(2) - 2.0 * PI * 3f64.sqrt()).abs() < 1e-12);
        assert!((v(2) - 10.8828).abs() < 1e-4);
        assert!((v(3) - 2.0 * PI * 6f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            predicted_nodal_volume(&torus_a(2.0), 1),
            Err(Error::NotIsotropyIrreducible)
        ));
        assert!(predicted_nodal_volume(&sphere2_eigenbasis(1).unwrap(), 2).is_err());
    }

    #[test]
    fn degenerate_basis_predicts_zero() {
        let b = torus_eigenbasis([2.0 * PI, PI], [1, 0], EigenspacePolicy::SingleOrbit).unwrap();
        let s = beta_spectrum_default(&b).unwrap();
        assert!(s.betas[0].abs() < 1e-12);
        assert_eq!(predicted_average_zeros(&b).unwrap(), 0.0);
    }
}
