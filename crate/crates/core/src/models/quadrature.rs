//! Quadrature rules exact for band-limited integrands on the model spaces.

use std::f64::consts::PI;

use super::{ManifoldModel, ModelKind, Point};

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 1..n {
                let p2 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p0) / (k + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Product rule on `model` with `nodes` points per dimension.
///
/// Circle and torus use the trapezoid rule (exact for trigonometric
/// polynomials of degree below `nodes`); S² uses Gauss–Legendre in cos θ
/// times a uniform rule in longitude.
pub fn product_rule(model: &ManifoldModel, nodes: usize) -> Vec<(Point, f64)> {
    let n = nodes.max(1);
    match model.kind() {
        ModelKind::Circle => {
            let w = 2.0 * PI / n as f64;
            (0..n)
                .map(|i| (Point::Circle(i as f64 * w), w))
                .collect()
        }
        ModelKind::FlatTorus2 => {
            let [p1, p2] = model.periods().unwrap();
            let w = p1 * p2 / (n * n) as f64;
            let mut out = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    out.push((
                        Point::Torus([i as f64 * p1 / n as f64, j as f64 * p2 / n as f64]),
                        w,
                    ));
                }
            }
            out
        }
        ModelKind::Sphere2 => {
            let (z, wz) = gauss_legendre(n);
            let wphi = 2.0 * PI / n as f64;
            let mut out = Vec::with_capacity(n * n);
            for (zi, wi) in z.iter().zip(&wz) {
                let s = (1.0 - zi * zi).max(0.0).sqrt();
                for j in 0..n {
                    let (sp, cp) = (j as f64 * wphi).sin_cos();
                    out.push((Point::Sphere([s * cp, s * sp, *zi]), wi * wphi));
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn rules_sum_to_volume() {
        for m in [
            ManifoldModel::circle(),
            ManifoldModel::sphere2(),
            ManifoldModel::flat_torus(1.5, 4.0).unwrap(),
        ] {
            let s: f64 = product_rule(&m, 9).iter().map(|(_, w)| w).sum();
            assert!((s - m.volume()).abs() < 1e-12);
        }
    }
}
