//! Numerical identity checks for an eigenbasis and its evaluation map.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::embedding::{beta_spectrum_default, pullback_metric, pullback_metric_unscaled, predicted_from_spectrum, weyl_bound};
use crate::error::{Error, Result};
use crate::models::quadrature::product_rule;
use crate::models::{EigenBasis, ModelKind, Point};

pub const UNSOLD_POINTS: usize = 10_000;
pub const UNSOLD_TOL: f64 = 1e-8;
pub const GRAM_TOL: f64 = 1e-6;
pub const TRACE_TOL: f64 = 1e-6;
pub const GRADIENT_TOL: f64 = 1e-6;
pub const GRADIENT_STEP: f64 = 1e-5;
/// Minimum error reduction when the finite-difference step is halved.
pub const EIGEN_RATIO_MIN: f64 = 3.5;
/// Points used for the finite-difference checks.
const FD_POINTS: usize = 64;
const IDENTITY_SEED: u64 = 0x1de7_1717;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub basis: String,
    pub lambda: f64,
    #[serde(rename = "N")]
    pub n_dim: usize,
    pub unsold_max_residual: f64,
    pub gram_max_residual: f64,
    /// max |Δf + λf| at step h and h/2.
    pub eigen_residual_h: f64,
    pub eigen_residual_half: f64,
    pub eigen_ratio: f64,
    pub gradient_max_residual: f64,
    /// max |tr φ*(g₀) − λ|.
    pub trace_residual: f64,
    /// max |tr Φ*(g₀) − λN/vol| relative to λN/vol.
    pub unscaled_trace_residual: f64,
    pub betas: Vec<f64>,
    pub beta_deviation: Option<f64>,
    pub failures: Vec<String>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Structured summary printed by `embed check`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbedCheck {
    pub basis: String,
    pub lambda: f64,
    #[serde(rename = "N")]
    pub n_dim: usize,
    pub betas: Vec<f64>,
    pub trace_residual: f64,
    pub unsold_max_residual: f64,
    pub predicted_average: f64,
    pub weyl_bound: f64,
    /// weyl_bound − predicted_average; zero exactly when all β agree.
    pub equality_gap: f64,
}

fn sample_points(basis: &EigenBasis, count: usize, salt: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(IDENTITY_SEED ^ salt);
    (0..count).map(|_| basis.model().random_point(&mut rng)).collect()
}

/// max over points of |Σ f_i(x)² − N/vol M|.
pub fn unsold_residual(basis: &EigenBasis, points: &[Point]) -> f64 {
    let target = basis.dim() as f64 / basis.model().volume();
    let mut v = vec![0.0; basis.dim()];
    points
        .iter()
        .map(|p| {
            basis.eval(p, &mut v, None);
            (v.iter().map(|x| x * x).sum::<f64>() - target).abs()
        })
        .fold(0.0, f64::max)
}

/// Nodes per dimension for which the product rule integrates f_i f_j exactly.
fn quadrature_nodes(basis: &EigenBasis) -> usize {
    let model = basis.model();
    match model.kind() {
        ModelKind::Sphere2 => (basis.lambda().sqrt().ceil() as usize) * 2 + 4,
        ModelKind::Circle => 2 * basis.lambda().sqrt().round() as usize + 4,
        ModelKind::FlatTorus2 => {
            let [p1, p2] = model.periods().unwrap();
            let kmax = basis.lambda().sqrt() * p1.max(p2) / (2.0 * std::f64::consts::PI);
            2 * kmax.ceil() as usize + 4
        }
    }
}

/// Gram matrix ∫ f_i f_j by exact product quadrature.
pub fn gram_matrix(basis: &EigenBasis) -> Vec<Vec<f64>> {
    let n = basis.dim();
    let mut g = vec![vec![0.0; n]; n];
    let mut v = vec![0.0; n];
    for (p, w) in product_rule(basis.model(), quadrature_nodes(basis)) {
        basis.eval(&p, &mut v, None);
        for i in 0..n {
            for j in 0..n {
                g[i][j] += w * v[i] * v[j];
            }
        }
    }
    g
}

pub fn gram_residual(basis: &EigenBasis) -> f64 {
    let g = gram_matrix(basis);
    let mut worst: f64 = 0.0;
    for (i, row) in g.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((x - target).abs());
        }
    }
    worst
}

/// Finite-difference Laplacian of every basis function at `p` with step `h`.
fn fd_laplacian(basis: &EigenBasis, p: &Point, h: f64) -> Vec<f64> {
    let n = basis.dim();
    let model = basis.model();
    let center = basis.values(p);
    let mut lap = vec![0.0; n];
    let mut buf = vec![0.0; n];
    match *p {
        Point::Sphere(q) => {
            // degree-0 extension F(x) = f(x/|x|) has Δ_{R³}F = Δ_{S²}f on the sphere
            for axis in 0..3 {
                for sgn in [1.0, -1.0] {
                    let mut r = q;
                    r[axis] += sgn * h;
                    basis.values_radial(&r, &mut buf);
                    for (l, b) in lap.iter_mut().zip(&buf) {
                        *l += b;
                    }
                }
            }
        }
        _ => {
            for axis in 0..model.dim() {
                for sgn in [1.0, -1.0] {
                    let mut t = [0.0; 2];
                    t[axis] = sgn * h;
                    basis.eval(&model.exp(p, &t), &mut buf, None);
                    for (l, b) in lap.iter_mut().zip(&buf) {
                        *l += b;
                    }
                }
            }
        }
    }
    let stencil = match p {
        Point::Sphere(_) => 3.0,
        _ => model.dim() as f64,
    };
    for (l, c) in lap.iter_mut().zip(&center) {
        *l = (*l - 2.0 * stencil * c) / (h * h);
    }
    lap
}

fn eigen_residual_at_step(basis: &EigenBasis, points: &[Point], h: f64) -> f64 {
    let lambda = basis.lambda();
    points
        .iter()
        .map(|p| {
            let f = basis.values(p);
            fd_laplacian(basis, p, h)
                .iter()
                .zip(&f)
                .map(|(l, v)| (l + lambda * v).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// max over points and basis functions of |∂_v f_i (finite difference) − ⟨grad f_i, v⟩|.
pub fn gradient_residual(basis: &EigenBasis, points: &[Point]) -> f64 {
    let model = basis.model();
    let h = GRADIENT_STEP;
    let mut worst: f64 = 0.0;
    for p in points {
        let grads = basis.gradients(p);
        for axis in 0..model.dim() {
            let mut t = [0.0; 2];
            t[axis] = h;
            let plus = basis.values(&model.exp(p, &t));
            t[axis] = -h;
            let minus = basis.values(&model.exp(p, &t));
            for i in 0..basis.dim() {
                let fd = (plus[i] - minus[i]) / (2.0 * h);
                worst = worst.max((fd - grads[i][axis]).abs());
            }
        }
    }
    worst
}

fn trace_residuals(basis: &EigenBasis, points: &[Point]) -> (f64, f64) {
    let lambda = basis.lambda();
    let unscaled_target = lambda * basis.dim() as f64 / basis.model().volume();
    let mut scaled: f64 = 0.0;
    let mut unscaled: f64 = 0.0;
    for p in points {
        scaled = scaled.max((pullback_metric(basis, p).trace() - lambda).abs());
        let t = pullback_metric_unscaled(basis, p).trace();
        unscaled = unscaled.max((t - unscaled_target).abs() / unscaled_target.max(1.0));
    }
    (scaled, unscaled)
}

/// Runs every identity check and records residuals; checks that fail are
/// listed in `failures` rather than returned as errors.
pub fn verify_identities(basis: &EigenBasis) -> IdentityReport {
    let unsold_pts = sample_points(basis, UNSOLD_POINTS, 1);
    let fd_pts = sample_points(basis, FD_POINTS, 2);
    let mut failures = Vec::new();

    let unsold = unsold_residual(basis, &unsold_pts);
    if !(unsold < UNSOLD_TOL) {
        failures.push(format!("unsold residual {unsold:.3e} >= {UNSOLD_TOL:e}"));
    }
    let gram = gram_residual(basis);
    if !(gram < GRAM_TOL) {
        failures.push(format!("gram residual {gram:.3e} >= {GRAM_TOL:e}"));
    }

    let h = basis.wavelength() / 16.0;
    let e1 = eigen_residual_at_step(basis, &fd_pts, h);
    let e2 = eigen_residual_at_step(basis, &fd_pts, h / 2.0);
    let ratio = e1 / e2;
    if !(ratio >= EIGEN_RATIO_MIN) {
        failures.push(format!("eigen residual ratio {ratio:.3} < {EIGEN_RATIO_MIN}"));
    }

    let grad = gradient_residual(basis, &fd_pts);
    if !(grad < GRADIENT_TOL) {
        failures.push(format!("gradient residual {grad:.3e} >= {GRADIENT_TOL:e}"));
    }

    let (trace, unscaled) = trace_residuals(basis, &fd_pts);
    if !(trace < TRACE_TOL) {
        failures.push(format!("trace residual {trace:.3e} >= {TRACE_TOL:e}"));
    }
    if !(unscaled < TRACE_TOL) {
        failures.push(format!("unscaled trace residual {unscaled:.3e} >= {TRACE_TOL:e}"));
    }

    let (betas, beta_deviation) = match beta_spectrum_default(basis) {
        Ok(s) => (s.betas, Some(s.max_deviation)),
        Err(e) => {
            failures.push(format!("beta spectrum: {e}"));
            (pullback_metric(basis, &fd_pts[0]).eigenvalues(), None)
        }
    };

    IdentityReport {
        basis: basis.label(),
        lambda: basis.lambda(),
        n_dim: basis.dim(),
        unsold_max_residual: unsold,
        gram_max_residual: gram,
        eigen_residual_h: e1,
        eigen_residual_half: e2,
        eigen_ratio: ratio,
        gradient_max_residual: grad,
        trace_residual: trace,
        unscaled_trace_residual: unscaled,
        betas,
        beta_deviation,
        failures,
    }
}

/// Embedding diagnostics; fails if β is not constant over M.
pub fn embed_check(basis: &EigenBasis) -> Result<EmbedCheck> {
    let spec = beta_spectrum_default(basis)?;
    let pts = sample_points(basis, UNSOLD_POINTS, 3);
    let (trace, _) = trace_residuals(basis, &pts[..FD_POINTS]);
    let predicted = predicted_from_spectrum(basis, &spec, basis.model().volume())?;
    let bound = weyl_bound(basis);
    if !predicted.is_finite() {
        return Err(Error::InvalidArgument("prediction is not finite".into()));
    }
    Ok(EmbedCheck {
        basis: basis.label(),
        lambda: basis.lambda(),
        n_dim: basis.dim(),
        betas: spec.betas,
        trace_residual: trace,
        unsold_max_residual: unsold_residual(basis, &pts),
        predicted_average: predicted,
        weyl_bound: bound,
        equality_gap: bound - predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{circle_eigenbasis, sphere2_eigenbasis, torus_eigenbasis, EigenspacePolicy};
    use std::f64::consts::PI;

    #[test]
    fn torus_a2_passes() {
        let b = torus_eigenbasis([2.0 * PI, PI], [1, 1], EigenspacePolicy::SingleOrbit).unwrap();
        let r = verify_identities(&b);
        assert!(r.passed(), "{:?}", r.failures);
        assert!(r.unsold_max_residual < 1e-8);
        assert!(r.trace_residual < 1e-6);
        assert!((r.betas[0] - 1.0).abs() < 1e-6 && (r.betas[1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn sphere_l3_betas() {
        let b = sphere2_eigenbasis(3).unwrap();
        let r = verify_identities(&b);
        assert!(r.passed(), "{:?}", r.failures);
        assert!(r.betas.iter().all(|x| (x - 6.0).abs() < 1e-6), "{:?}", r.betas);
    }

    #[test]
    fn circle_passes() {
        let r = verify_identities(&circle_eigenbasis(5).unwrap());
        assert!(r.passed(), "{:?}", r.failures);
        assert!((r.betas[0] - 25.0).abs() < 1e-9);
    }

    #[test]
    fn rescaled_basis_fails() {
        let b = sphere2_eigenbasis(2).unwrap().rescaled(1.01);
        let r = verify_identities(&b);
        assert!(!r.passed());
        assert!(r.unsold_max_residual > 1e-4);
        assert!(r.gram_max_residual > 1e-3);
    }

    #[test]
    fn embed_check_gap() {
        let b = torus_eigenbasis([2.0 * PI, PI], [1, 1], EigenspacePolicy::SingleOrbit).unwrap();
        let e = embed_check(&b).unwrap();
        assert!((e.predicted_average - 2.0 * PI).abs() < 1e-9);
        assert!((e.weyl_bound - 2.5 * PI).abs() < 1e-9);
        assert!((e.equality_gap - 0.5 * PI).abs() < 1e-9);
        let s = embed_check(&sphere2_eigenbasis(2).unwrap()).unwrap();
        assert!(s.equality_gap.abs() < 1e-9);
    }
}
