//! Length of the nodal curve {u = 0} of a single S² eigenfunction.
//!
//! The sphere is meshed by subdividing an icosahedron. On each triangle u is
//! interpolated linearly along the edges; the two sign-change points are
//! projected to the sphere and joined by a great-circle arc. The mesh is
//! refined until two successive levels agree to a relative tolerance.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{cross3, dot3, norm3, scale3, EigenBasis, ModelKind, Point};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NodalOptions {
    /// First icosphere subdivision level.
    pub mesh_start: usize,
    /// Finest level tried before giving up.
    pub refine_limit: usize,
    /// Relative change between successive levels accepted as converged.
    pub rel_tol: f64,
}

impl Default for NodalOptions {
    fn default() -> Self {
        Self {
            mesh_start: 3,
            refine_limit: 7,
            rel_tol: 0.005,
        }
    }
}

impl NodalOptions {
    pub fn validate(&self) -> Result<()> {
        if self.mesh_start >= self.refine_limit || self.refine_limit > 9 || !(self.rel_tol > 0.0) {
            return Err(Error::Config(format!("invalid nodal options {self:?}")));
        }
        Ok(())
    }
}

/// Geodesic icosphere: unit vertices and outward-oriented triangles.
#[derive(Clone, Debug)]
pub struct Icosphere {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[u32; 3]>,
}

impl Icosphere {
    pub fn new(level: usize) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let raw = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ];
        let mut vertices: Vec<[f64; 3]> = raw.iter().map(|v| scale3(v, 1.0 / norm3(v))).collect();
        let mut faces: Vec<[u32; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..level {
            let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
            let mut next = Vec::with_capacity(faces.len() * 4);
            let mut midpoint = |a: u32, b: u32, vs: &mut Vec<[f64; 3]>| -> u32 {
                let key = (a.min(b), a.max(b));
                *mid.entry(key).or_insert_with(|| {
                    let (p, q) = (vs[a as usize], vs[b as usize]);
                    let m = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
                    vs.push(scale3(&m, 1.0 / norm3(&m)));
                    (vs.len() - 1) as u32
                })
            };
            for [a, b, c] in faces {
                let ab = midpoint(a, b, &mut vertices);
                let bc = midpoint(b, c, &mut vertices);
                let ca = midpoint(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        Self { vertices, faces }
    }
}

/// Total length of the piecewise-geodesic zero curve of `values` on `mesh`.
pub fn marching_length(mesh: &Icosphere, values: &[f64]) -> f64 {
    let mut total = 0.0;
    for f in &mesh.faces {
        let idx = [f[0] as usize, f[1] as usize, f[2] as usize];
        let u = [values[idx[0]], values[idx[1]], values[idx[2]]];
        let pos = u.map(|v| v >= 0.0);
        if pos[0] == pos[1] && pos[1] == pos[2] {
            continue;
        }
        let mut pts = [[0.0; 3]; 2];
        let mut k = 0;
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            if pos[a] != pos[b] {
                let t = u[a] / (u[a] - u[b]);
                let (p, q) = (mesh.vertices[idx[a]], mesh.vertices[idx[b]]);
                let m = [
                    p[0] + t * (q[0] - p[0]),
                    p[1] + t * (q[1] - p[1]),
                    p[2] + t * (q[2] - p[2]),
                ];
                pts[k] = scale3(&m, 1.0 / norm3(&m));
                k += 1;
            }
        }
        debug_assert_eq!(k, 2);
        total += norm3(&cross3(&pts[0], &pts[1])).atan2(dot3(&pts[0], &pts[1]));
    }
    total
}

struct Level {
    mesh: Icosphere,
    /// Basis values, vertex-major: values[v * N + i].
    values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodalLength {
    pub length: f64,
    /// Level at which convergence was declared.
    pub level: usize,
    pub rel_change: f64,
}

/// Precomputes basis values on each icosphere level so that many
/// coefficient vectors can be measured cheaply. Levels are built lazily and
/// are shared read-only between threads.
pub struct NodalMesher<'a> {
    basis: &'a EigenBasis,
    opts: NodalOptions,
    levels: Vec<OnceLock<Level>>,
}

impl<'a> NodalMesher<'a> {
    pub fn new(basis: &'a EigenBasis, opts: NodalOptions) -> Result<Self> {
        if basis.model().kind() != ModelKind::Sphere2 {
            return Err(Error::InvalidArgument("nodal length is implemented on S² only".into()));
        }
        opts.validate()?;
        let levels = (0..=opts.refine_limit).map(|_| OnceLock::new()).collect();
        Ok(Self { basis, opts, levels })
    }

    fn level(&self, l: usize) -> &Level {
        self.levels[l].get_or_init(|| {
            let mesh = Icosphere::new(l);
            let n = self.basis.dim();
            let mut values = vec![0.0; mesh.vertices.len() * n];
            for (v, chunk) in mesh.vertices.iter().zip(values.chunks_mut(n)) {
                self.basis.eval(&Point::Sphere(*v), chunk, None);
            }
            Level { mesh, values }
        })
    }

    fn length_at(&self, l: usize, coeffs: &[f64], scratch: &mut Vec<f64>) -> f64 {
        let level = self.level(l);
        let n = self.basis.dim();
        scratch.clear();
        scratch.extend(
            level
                .values
                .chunks(n)
                .map(|vals| vals.iter().zip(coeffs).map(|(a, b)| a * b).sum::<f64>()),
        );
        marching_length(&level.mesh, scratch)
    }

    /// Nodal length of u = Σ cᵢ fᵢ.
    pub fn length(&self, coeffs: &[f64]) -> Result<NodalLength> {
        if coeffs.len() != self.basis.dim() {
            return Err(Error::InvalidArgument("coefficient vector does not match basis".into()));
        }
        if coeffs.iter().all(|c| *c == 0.0) {
            return Err(Error::InvalidArgument("u must be nonzero".into()));
        }
        let mut scratch = Vec::new();
        let mut prev = self.length_at(self.opts.mesh_start, coeffs, &mut scratch);
        let mut change = f64::INFINITY;
        for l in (self.opts.mesh_start + 1)..=self.opts.refine_limit {
            let cur = self.length_at(l, coeffs, &mut scratch);
            change = if cur == 0.0 && prev == 0.0 {
                0.0
            } else {
                (cur - prev).abs() / cur.abs().max(prev.abs())
            };
            if change < self.opts.rel_tol {
                return Ok(NodalLength {
                    length: cur,
                    level: l,
                    rel_change: change,
                });
            }
            prev = cur;
        }
        Err(Error::NonConvergent {
            level: self.opts.refine_limit,
            last_change: change,
        })
    }
}

/// Nodal length of a single eigenfunction u = Σ cᵢ fᵢ on S².
pub fn nodal_length_s2(coeffs: &[f64], basis: &EigenBasis, opts: &NodalOptions) -> Result<NodalLength> {
    NodalMesher::new(basis, opts.clone())?.length(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::sphere2_eigenbasis;
    use std::f64::consts::PI;

    #[test]
    fn icosphere_counts() {
        for l in 0..4 {
            let m = Icosphere::new(l);
            assert_eq!(m.faces.len(), 20 * 4usize.pow(l as u32));
            assert_eq!(m.vertices.len(), 10 * 4usize.pow(l as u32) + 2);
            assert!(m.vertices.iter().all(|v| (norm3(v) - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn great_circles_have_length_two_pi() {
        let b = sphere2_eigenbasis(1).unwrap();
        for c in [[1.0, 0.0, 0.0], [0.3, -0.5, 0.81], [0.0, 0.0, 1.0]] {
            let r = nodal_length_s2(&c, &b, &NodalOptions::default()).unwrap();
            assert!((r.length - 2.0 * PI).abs() < 0.01 * 2.0 * PI, "{}", r.length);
        }
    }

    #[test]
    fn zonal_degree_two() {
        // Y₂₀ ∝ 3z² − 1: two circles at z = ±1/√3 of radius √(2/3).
        let b = sphere2_eigenbasis(2).unwrap();
        let r = nodal_length_s2(&[1.0, 0.0, 0.0, 0.0, 0.0], &b, &NodalOptions::default()).unwrap();
        let exact = 4.0 * PI * (2.0f64 / 3.0).sqrt();
        assert!((exact - 10.26033).abs() < 1e-4);
        assert!((r.length - exact).abs() < 0.01 * exact, "{} vs {exact}", r.length);
    }

    #[test]
    fn rejects_bad_input() {
        let b = sphere2_eigenbasis(2).unwrap();
        assert!(nodal_length_s2(&[0.0; 5], &b, &NodalOptions::default()).is_err());
        assert!(nodal_length_s2(&[1.0; 3], &b, &NodalOptions::default()).is_err());
        let bad = NodalOptions { mesh_start: 5, refine_limit: 4, rel_tol: 0.005 };
        assert!(nodal_length_s2(&[1.0; 5], &b, &bad).is_err());
    }
}
