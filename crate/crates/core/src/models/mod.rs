//! Model manifolds (circle, round 2-sphere, flat rectangular 2-torus) and
//! their analytic Laplace eigenbases.
//!
//! Points on S² are unit 3-vectors. Tangent vectors are always expressed in
//! an orthonormal frame at the base point, so a tangent vector is a pair of
//! reals regardless of the model (the circle only uses the first slot).

mod basis;
pub mod harmonics;
pub mod quadrature;

pub use basis::{
    circle_eigenbasis, restricted_subbasis, sphere2_eigenbasis, torus_eigenbasis, BasisSpec,
    EigenBasis, EigenspacePolicy,
};

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tangent vector in the orthonormal frame at a point.
pub type Tangent = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Circle,
    Sphere2,
    #[serde(alias = "torus")]
    FlatTorus2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Point {
    /// Angle in [0, 2π).
    Circle(f64),
    /// Unit vector in R³.
    Sphere([f64; 3]),
    /// Coordinates in [0, p₁) × [0, p₂).
    Torus([f64; 2]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldModel {
    kind: ModelKind,
    periods: [f64; 2],
    isotropy_irreducible: bool,
}

impl ManifoldModel {
    pub fn circle() -> Self {
        Self {
            kind: ModelKind::Circle,
            periods: [2.0 * PI, 0.0],
            isotropy_irreducible: true,
        }
    }

    pub fn sphere2() -> Self {
        Self {
            kind: ModelKind::Sphere2,
            periods: [0.0, 0.0],
            isotropy_irreducible: true,
        }
    }

    /// Flat torus R²/Γ with Γ generated by p₁e₁ and p₂e₂.
    pub fn flat_torus(p1: f64, p2: f64) -> Result<Self> {
        if !(p1.is_finite() && p2.is_finite() && p1 > 0.0 && p2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "torus periods must be positive, got ({p1}, {p2})"
            )));
        }
        Ok(Self {
            kind: ModelKind::FlatTorus2,
            periods: [p1, p2],
            isotropy_irreducible: false,
        })
    }

    /// Torus with lattice generated by 2πe₁ and (2π/a)e₂.
    pub fn flat_torus_a(a: f64) -> Result<Self> {
        if !(a.is_finite() && a != 0.0) {
            return Err(Error::InvalidArgument(format!("torus parameter a must be nonzero, got {a}")));
        }
        Self::flat_torus(2.0 * PI, 2.0 * PI / a.abs())
    }

    /// Overrides the trusted isotropy-irreducibility flag.
    pub fn with_isotropy_irreducible(mut self, flag: bool) -> Self {
        self.isotropy_irreducible = flag;
        self
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            ModelKind::Circle => 1,
            ModelKind::Sphere2 | ModelKind::FlatTorus2 => 2,
        }
    }

    pub fn periods(&self) -> Option<[f64; 2]> {
        (self.kind == ModelKind::FlatTorus2).then_some(self.periods)
    }

    pub fn is_isotropy_irreducible(&self) -> bool {
        self.isotropy_irreducible
    }

    pub fn volume(&self) -> f64 {
        match self.kind {
            ModelKind::Circle => 2.0 * PI,
            ModelKind::Sphere2 => 4.0 * PI,
            ModelKind::FlatTorus2 => self.periods[0] * self.periods[1],
        }
    }

    /// Uniform (normalized Riemannian measure) random point.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self.kind {
            ModelKind::Circle => Point::Circle(rng.random::<f64>() * 2.0 * PI),
            ModelKind::Sphere2 => loop {
                let v: [f64; 3] = [
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                ];
                let r = norm3(&v);
                if r > 1e-12 {
                    break Point::Sphere(scale3(&v, 1.0 / r));
                }
            },
            ModelKind::FlatTorus2 => Point::Torus([
                rng.random::<f64>() * self.periods[0],
                rng.random::<f64>() * self.periods[1],
            ]),
        }
    }

    /// Wraps coordinates into the fundamental domain (or renormalizes on S²).
    pub fn canonical(&self, p: Point) -> Point {
        match p {
            Point::Circle(t) => Point::Circle(wrap(t, 2.0 * PI)),
            Point::Sphere(v) => Point::Sphere(scale3(&v, 1.0 / norm3(&v))),
            Point::Torus([x, y]) => Point::Torus([wrap(x, self.periods[0]), wrap(y, self.periods[1])]),
        }
    }

    /// Exponential map at `p` applied to a tangent vector given in the frame at `p`.
    pub fn exp(&self, p: &Point, v: &Tangent) -> Point {
        match *p {
            Point::Circle(t) => Point::Circle(wrap(t + v[0], 2.0 * PI)),
            Point::Torus([x, y]) => Point::Torus([
                wrap(x + v[0], self.periods[0]),
                wrap(y + v[1], self.periods[1]),
            ]),
            Point::Sphere(q) => {
                let (e1, e2) = sphere_frame(&q);
                let w = [
                    v[0] * e1[0] + v[1] * e2[0],
                    v[0] * e1[1] + v[1] * e2[1],
                    v[0] * e1[2] + v[1] * e2[2],
                ];
                let len = norm3(&w);
                if len < 1e-300 {
                    return *p;
                }
                let (s, c) = len.sin_cos();
                let out = [
                    c * q[0] + s * w[0] / len,
                    c * q[1] + s * w[1] / len,
                    c * q[2] + s * w[2] / len,
                ];
                Point::Sphere(scale3(&out, 1.0 / norm3(&out)))
            }
        }
    }

    /// Geodesic distance; on the torus and circle computed modulo the lattice.
    pub fn distance(&self, p: &Point, q: &Point) -> f64 {
        match (p, q) {
            (Point::Circle(a), Point::Circle(b)) => periodic_gap(a - b, 2.0 * PI),
            (Point::Torus(a), Point::Torus(b)) => {
                let dx = periodic_gap(a[0] - b[0], self.periods[0]);
                let dy = periodic_gap(a[1] - b[1], self.periods[1]);
                dx.hypot(dy)
            }
            (Point::Sphere(a), Point::Sphere(b)) => {
                let c = cross3(a, b);
                norm3(&c).atan2(dot3(a, b))
            }
            _ => f64::INFINITY,
        }
    }

    /// Regular grid of points with spacing at most `spacing` in every direction.
    pub fn seed_grid(&self, spacing: f64) -> Vec<Point> {
        assert!(spacing > 0.0, "seed spacing must be positive");
        match self.kind {
            ModelKind::Circle => {
                let n = (2.0 * PI / spacing).ceil().max(1.0) as usize;
                (0..n)
                    .map(|i| Point::Circle((i as f64 + 0.5) * 2.0 * PI / n as f64))
                    .collect()
            }
            ModelKind::FlatTorus2 => {
                let nx = (self.periods[0] / spacing).ceil().max(1.0) as usize;
                let ny = (self.periods[1] / spacing).ceil().max(1.0) as usize;
                let mut pts = Vec::with_capacity(nx * ny);
                for i in 0..nx {
                    for j in 0..ny {
                        pts.push(Point::Torus([
                            (i as f64 + 0.5) * self.periods[0] / nx as f64,
                            (j as f64 + 0.5) * self.periods[1] / ny as f64,
                        ]));
                    }
                }
                pts
            }
            ModelKind::Sphere2 => {
                let rings = (PI / spacing).ceil().max(1.0) as usize;
                let mut pts = Vec::new();
                for j in 0..rings {
                    let theta = (j as f64 + 0.5) * PI / rings as f64;
                    let (st, ct) = theta.sin_cos();
                    let count = (2.0 * PI * st / spacing).ceil().max(1.0) as usize;
                    let offset = if j % 2 == 0 { 0.0 } else { 0.5 };
                    for i in 0..count {
                        let ph = (i as f64 + offset) * 2.0 * PI / count as f64;
                        let (sp, cp) = ph.sin_cos();
                        pts.push(Point::Sphere([st * cp, st * sp, ct]));
                    }
                }
                pts
            }
        }
    }

    pub(crate) fn check_point(&self, p: &Point) -> bool {
        matches!(
            (self.kind, p),
            (ModelKind::Circle, Point::Circle(_))
                | (ModelKind::Sphere2, Point::Sphere(_))
                | (ModelKind::FlatTorus2, Point::Torus(_))
        )
    }
}

pub fn model_volume(model: &ManifoldModel) -> f64 {
    model.volume()
}

/// Volume σₙ of the unit n-sphere, 2π^((n+1)/2) / Γ((n+1)/2).
pub fn sphere_area(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("sphere_area needs n >= 1".into()));
    }
    // σₙ = 2π σₙ₋₂ / (n - 1), seeded with σ₀ = 2 and σ₁ = 2π.
    let mut even = 2.0;
    let mut odd = 2.0 * PI;
    let mut k = 1;
    while k < n {
        k += 1;
        if k % 2 == 0 {
            even *= 2.0 * PI / (k as f64 - 1.0);
        } else {
            odd *= 2.0 * PI / (k as f64 - 1.0);
        }
    }
    Ok(if n.is_multiple_of(2) { even } else { odd })
}

/// The constant 2 / (σₙ n^{n/2}) in the Weyl-type bound.
pub fn weyl_constant(n: usize) -> Result<f64> {
    let s = sphere_area(n)?;
    Ok(2.0 / (s * (n as f64).powf(n as f64 / 2.0)))
}

/// Orthonormal tangent frame (e₁, e₂) at a unit vector, with e₁ × e₂ = p.
pub fn sphere_frame(p: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let ax = p.iter().map(|c| c.abs()).collect::<Vec<_>>();
    let i = if ax[0] <= ax[1] && ax[0] <= ax[2] {
        0
    } else if ax[1] <= ax[2] {
        1
    } else {
        2
    };
    let mut a = [0.0; 3];
    a[i] = 1.0;
    let d = dot3(&a, p);
    let t = [a[0] - d * p[0], a[1] - d * p[1], a[2] - d * p[2]];
    let e1 = scale3(&t, 1.0 / norm3(&t));
    let e2 = cross3(p, &e1);
    (e1, e2)
}

pub(crate) fn wrap(t: f64, period: f64) -> f64 {
    let r = t.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

fn periodic_gap(d: f64, period: f64) -> f64 {
    let r = d.rem_euclid(period);
    r.min(period - r)
}

pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

pub(crate) fn scale3(a: &[f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}
