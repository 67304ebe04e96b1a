//! Crofton's formula on S^{N−1}: the Haar average of the number of points in
//! M ∩ r·L, for L a great subsphere of codimension m = dim M, equals
//! (2/σ_m)·vol M.
//!
//! Meshes are unions of geodesic cells (arcs for m = 1, triangles for
//! m = 2). Because L is cut out by homogeneous linear equations, a geodesic
//! cell meets it exactly when the cone over the flat cell does, so
//! intersections reduce to sign tests on the projected vertices.
//!
//! Text format, one record per line, indices zero-based:
//!
//! ```text
//! N m
//! v x1 … xN
//! c i1 … i_{m+1}
//! ```

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use crate::averaging::run_trials;
use crate::error::{Error, Result};
use crate::models::{sphere_area, EigenBasis, ModelKind, Point};
use crate::report::{config_hash, ExperimentReport, ReportInput, TrialRecord, TrialStatus};
use crate::sampling::{haar_rotation, trial_rng};

/// Vertices further than this from the unit sphere are rejected on input.
const UNIT_TOL_INPUT: f64 = 1e-6;
/// Relative size below which a section is considered to touch a vertex or edge.
const AMBIGUITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SphericalMesh {
    ambient: usize,
    dim: usize,
    vertices: Vec<Vec<f64>>,
    cells: Vec<Vec<usize>>,
    total_volume: f64,
}

impl SphericalMesh {
    /// Validates and normalizes a mesh; vertices must be within 1e−6 of unit length.
    pub fn new(ambient: usize, dim: usize, vertices: Vec<Vec<f64>>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidArgument(format!("mesh dimension {dim} not supported")));
        }
        if ambient < dim + 2 {
            return Err(Error::InvalidArgument(format!(
                "a {dim}-dimensional mesh needs ambient dimension at least {}",
                dim + 2
            )));
        }
        let mut normed = Vec::with_capacity(vertices.len());
        for (i, v) in vertices.into_iter().enumerate() {
            if v.len() != ambient {
                return Err(Error::InvalidArgument(format!("vertex {i} has {} coordinates", v.len())));
            }
            let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !((r - 1.0).abs() <= UNIT_TOL_INPUT) {
                return Err(Error::InvalidArgument(format!("vertex {i} has norm {r}")));
            }
            normed.push(v.into_iter().map(|x| x / r).collect::<Vec<f64>>());
        }
        for (i, c) in cells.iter().enumerate() {
            if c.len() != dim + 1 || c.iter().any(|&j| j >= normed.len()) {
                return Err(Error::InvalidArgument(format!("cell {i} is malformed: {c:?}")));
            }
        }
        let total_volume: f64 = cells.iter().map(|c| cell_volume(&normed, c)).sum();
        if !(total_volume > 0.0) {
            return Err(Error::InvalidArgument("mesh has zero volume".into()));
        }
        Ok(Self {
            ambient,
            dim,
            vertices: normed,
            cells,
            total_volume,
        })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    /// Sum of geodesic arc lengths or spherical triangle areas.
    pub fn total_volume(&self) -> f64 {
        self.total_volume
    }

    /// Crofton prediction (2/σ_m)·vol.
    pub fn crofton_theory(&self) -> f64 {
        2.0 / sphere_area(self.dim).expect("dim >= 1") * self.total_volume
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, message: &str| Error::MeshFormat {
            line,
            message: message.to_string(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(hl, "header must be `N m`")))
            .collect::<Result<_>>()?;
        let [ambient, dim] = head[..] else {
            return Err(err(hl, "header must be `N m`"));
        };
        let mut vertices = Vec::new();
        let mut cells = Vec::new();
        for (ln, line) in lines {
            let mut toks = line.split_whitespace();
            match toks.next() {
                Some("v") => {
                    let v: Vec<f64> = toks
                        .map(|t| t.parse().map_err(|_| err(ln, "bad coordinate")))
                        .collect::<Result<_>>()?;
                    if v.len() != ambient {
                        return Err(err(ln, "vertex has wrong number of coordinates"));
                    }
                    vertices.push(v);
                }
                Some("c") => {
                    let c: Vec<usize> = toks
                        .map(|t| t.parse().map_err(|_| err(ln, "bad index")))
                        .collect::<Result<_>>()?;
                    if c.len() != dim + 1 {
                        return Err(err(ln, "cell has wrong number of indices"));
                    }
                    cells.push(c);
                }
                _ => return Err(err(ln, "expected `v` or `c` record")),
            }
        }
        Self::new(ambient, dim, vertices, cells).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::MeshFormat { line: 0, message: m },
            other => other,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.ambient, self.dim);
        for v in &self.vertices {
            s.push('v');
            for x in v {
                let _ = write!(s, " {x:?}");
            }
            s.push('\n');
        }
        for c in &self.cells {
            s.push('c');
            for i in c {
                let _ = write!(s, " {i}");
            }
            s.push('\n');
        }
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cell_volume(vs: &[Vec<f64>], cell: &[usize]) -> f64 {
    match cell.len() {
        2 => arc_length(&vs[cell[0]], &vs[cell[1]]),
        3 => spherical_triangle_area(&vs[cell[0]], &vs[cell[1]], &vs[cell[2]]),
        _ => unreachable!(),
    }
}

/// Geodesic distance between unit vectors in any dimension.
pub fn arc_length(a: &[f64], b: &[f64]) -> f64 {
    let c = dot(a, b);
    let s2: f64 = a.iter().zip(b).map(|(x, y)| (x - c * y).powi(2)).sum();
    s2.sqrt().atan2(c)
}

/// Area of the geodesic triangle spanned by three unit vectors in R^N,
/// tan(E/2) = √det Gram / (1 + a·b + b·c + c·a).
pub fn spherical_triangle_area(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let (ab, bc, ca) = (dot(a, b), dot(b, c), dot(c, a));
    let gram = 1.0 + 2.0 * ab * bc * ca - ab * ab - bc * bc - ca * ca;
    2.0 * gram.max(0.0).sqrt().atan2(1.0 + ab + bc + ca)
}

/// Number of points of mesh ∩ r·L, with L the great subsphere where the
/// first m coordinates vanish and r = `rotation`.
pub fn section_intersection_count(mesh: &SphericalMesh, rotation: &DMatrix<f64>) -> Result<usize> {
    let n = mesh.ambient;
    if rotation.nrows() != n || rotation.ncols() != n {
        return Err(Error::InvalidArgument("rotation size does not match the mesh".into()));
    }
    let m = mesh.dim;
    // x ∈ r·L  ⇔  (rᵀx)_i = 0 for i < m, i.e. ⟨column_i(r), x⟩ = 0
    let proj: Vec<[f64; 2]> = mesh
        .vertices
        .iter()
        .map(|v| {
            let mut w = [0.0; 2];
            for (i, wi) in w.iter_mut().enumerate().take(m) {
                *wi = rotation.column(i).iter().zip(v).map(|(a, b)| a * b).sum();
            }
            w
        })
        .collect();
    let mut count = 0;
    match m {
        1 => {
            for c in &mesh.cells {
                let (a, b) = (proj[c[0]][0], proj[c[1]][0]);
                if a.abs() < AMBIGUITY_TOL || b.abs() < AMBIGUITY_TOL {
                    return Err(Error::Ambiguous);
                }
                if (a > 0.0) != (b > 0.0) {
                    count += 1;
                }
            }
        }
        _ => {
            for c in &mesh.cells {
                let w = [proj[c[0]], proj[c[1]], proj[c[2]]];
                // origin inside the projected triangle ⇔ all edge orientations agree
                let d = [cross(w[1], w[2]), cross(w[2], w[0]), cross(w[0], w[1])];
                let scale = w.iter().map(|p| p[0] * p[0] + p[1] * p[1]).fold(0.0, f64::max);
                let pos = d.iter().filter(|&&x| x > 0.0).count();
                let neg = d.iter().filter(|&&x| x < 0.0).count();
                let tiny = d.iter().any(|x| x.abs() <= AMBIGUITY_TOL * scale);
                if tiny && (pos == 0 || neg == 0) {
                    return Err(Error::Ambiguous);
                }
                if pos == 3 || neg == 3 {
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Intersection count for one Haar rotation, redrawing on ambiguity.
fn random_section_count<R: Rng + ?Sized>(mesh: &SphericalMesh, rng: &mut R) -> Result<usize> {
    for _ in 0..16 {
        let r = haar_rotation(mesh.ambient, rng);
        match section_intersection_count(mesh, &r) {
            Err(Error::Ambiguous) => log::debug!("ambiguous section; redrawing rotation"),
            other => return other,
        }
    }
    Err(Error::Ambiguous)
}

/// Monte Carlo mean of #(mesh ∩ r·L) over Haar rotations r.
pub fn crofton_average(mesh: &SphericalMesh, trials: usize, seed: u64, threads: usize) -> Result<ExperimentReport> {
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let start = Instant::now();
    let records = run_trials(trials, threads, |t| {
        let mut rng = trial_rng(seed, t as u64);
        let c = random_section_count(mesh, &mut rng)?;
        Ok(TrialRecord {
            trial: t,
            status: TrialStatus::Certified,
            value: c as f64,
            oracle: None,
            grid_warning: false,
        })
    })?;
    let theory = mesh.crofton_theory();
    let hash = config_hash(&("crofton", mesh.to_text(), trials, seed));
    Ok(ExperimentReport::build(ReportInput {
        kind: "crofton",
        basis: format!("mesh(N={}, m={}, cells={})", mesh.ambient, mesh.dim, mesh.cells.len()),
        theory,
        bound: theory,
        slack: 0.0,
        lambda: None,
        n_dim: mesh.ambient,
        betas: Vec::new(),
        seed,
        config_hash: hash,
        per_trial: records,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }))
}

/// Closed polyline along the circle at colatitude `alpha` in S² ⊂ R³.
pub fn small_circle_mesh(alpha: f64, segments: usize) -> Result<SphericalMesh> {
    if segments < 3 {
        return Err(Error::InvalidArgument("need at least 3 segments".into()));
    }
    let (sa, ca) = alpha.sin_cos();
    let vertices = (0..segments)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / segments as f64;
            vec![sa * t.cos(), sa * t.sin(), ca]
        })
        .collect();
    let cells = (0..segments).map(|i| vec![i, (i + 1) % segments]).collect();
    SphericalMesh::new(3, 1, vertices, cells)
}

pub fn great_circle_mesh(segments: usize) -> Result<SphericalMesh> {
    small_circle_mesh(PI / 2.0, segments)
}

/// Open spherical spiral θ = θ₀ + (π − 2θ₀)t, φ = 2π·turns·t, t ∈ [0, 1].
pub fn spiral_mesh(turns: f64, segments: usize) -> Result<SphericalMesh> {
    if segments < 1 {
        return Err(Error::InvalidArgument("need at least one segment".into()));
    }
    let theta0 = 0.2;
    let vertices = (0..=segments)
        .map(|i| {
            let t = i as f64 / segments as f64;
            let th = theta0 + (PI - 2.0 * theta0) * t;
            let ph = 2.0 * PI * turns * t;
            vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
        })
        .collect();
    let cells = (0..segments).map(|i| vec![i, i + 1]).collect();
    SphericalMesh::new(3, 1, vertices, cells)
}

/// Icosphere S² embedded as a great 2-sphere of S^{ambient−1}.
pub fn equatorial_sphere_mesh(ambient: usize, level: usize) -> Result<SphericalMesh> {
    if ambient < 4 {
        return Err(Error::InvalidArgument("need ambient dimension >= 4".into()));
    }
    let ico = crate::nodal::Icosphere::new(level);
    let vertices = ico
        .vertices
        .iter()
        .map(|v| {
            let mut w = vec![0.0; ambient];
            w[..3].copy_from_slice(v);
            w
        })
        .collect();
    let cells = ico.faces.iter().map(|f| f.iter().map(|&i| i as usize).collect()).collect();
    SphericalMesh::new(ambient, 2, vertices, cells)
}

/// Triangulated image of φ: T² → S³ over a `resolution`×`resolution`
/// parameter grid (periodic), for a four-function torus product basis.
///
/// The mesh parametrizes φ(M) with multiplicity, so its area approximates
/// ∫_M φ*Ω₂ = √(β₁β₂)·vol M.
pub fn embed_image_mesh(basis: &EigenBasis, resolution: usize) -> Result<SphericalMesh> {
    if basis.model().kind() != ModelKind::FlatTorus2 || !basis.is_torus_product() {
        return Err(Error::InvalidArgument(
            "image meshes are built for the four-function torus product basis".into(),
        ));
    }
    let k = basis.torus_frequency().expect("torus");
    let g = gcd(k[0], k[1]);
    if g > 1 {
        return Err(Error::CoveringDegree { frequency: k, divisor: g });
    }
    if resolution < 3 {
        return Err(Error::InvalidArgument("resolution must be at least 3".into()));
    }
    let [p1, p2] = basis.model().periods().unwrap();
    let idx = |i: usize, j: usize| (i % resolution) * resolution + (j % resolution);
    let mut vertices = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        for j in 0..resolution {
            let p = Point::Torus([p1 * i as f64 / resolution as f64, p2 * j as f64 / resolution as f64]);
            vertices.push(crate::embedding::phi(basis, &p));
        }
    }
    let mut cells = Vec::with_capacity(2 * resolution * resolution);
    for i in 0..resolution {
        for j in 0..resolution {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.push(vec![a, b, c]);
            cells.push(vec![a, c, d]);
        }
    }
    SphericalMesh::new(4, 2, vertices, cells)
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{torus_eigenbasis, EigenspacePolicy};

    #[test]
    fn great_circle_always_two() {
        let mesh = great_circle_mesh(64).unwrap();
        assert!((mesh.total_volume() - 2.0 * PI).abs() < 1e-12);
        let mut rng = trial_rng(1, 0);
        for _ in 0..200 {
            assert_eq!(random_section_count(&mesh, &mut rng).unwrap(), 2);
        }
    }

    #[test]
    fn small_circle_length() {
        let mesh = small_circle_mesh(PI / 6.0, 720).unwrap();
        // inscribed polygon of a circle of radius 1/2, geodesic edges
        assert!((mesh.total_volume() - PI).abs() < 1e-4);
        assert!((mesh.crofton_theory() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn equatorial_sphere_area_is_exact() {
        let mesh = equatorial_sphere_mesh(4, 2).unwrap();
        assert!((mesh.total_volume() - 4.0 * PI).abs() < 1e-10);
        let mut rng = trial_rng(2, 0);
        for _ in 0..50 {
            assert_eq!(random_section_count(&mesh, &mut rng).unwrap(), 2);
        }
    }

    #[test]
    fn triangle_area_formula() {
        // octant triangle has area π/2
        let a = [1.0, 0.0, 0.0, 0.0];
        let b = [0.0, 1.0, 0.0, 0.0];
        let c = [0.0, 0.0, 1.0, 0.0];
        assert!((spherical_triangle_area(&a, &b, &c) - PI / 2.0).abs() < 1e-14);
        assert!((arc_length(&a, &b) - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn text_round_trip() {
        let mesh = small_circle_mesh(0.7, 10).unwrap();
        let back = SphericalMesh::parse(&mesh.to_text()).unwrap();
        assert_eq!(back, mesh);
    }

    #[test]
    fn parse_errors() {
        assert!(SphericalMesh::parse("").is_err());
        assert!(SphericalMesh::parse("3 1\nv 1 0\n").is_err());
        assert!(SphericalMesh::parse("3 1\nv 1 0 0\nv 0 1 0\nc 0 2\n").is_err());
        assert!(SphericalMesh::parse("3 1\nv 2 0 0\nv 0 1 0\nc 0 1\n").is_err());
        assert!(SphericalMesh::parse("3 1\nq 1 0 0\n").is_err());
        let ok = SphericalMesh::parse("# arc\n3 1\nv 1 0 0\nv 0 1 0\nc 0 1\n").unwrap();
        assert!((ok.total_volume() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn covering_degree_rejected() {
        let b = torus_eigenbasis([2.0 * PI, PI], [2, 2], EigenspacePolicy::SingleOrbit).unwrap();
        assert!(matches!(embed_image_mesh(&b, 16), Err(Error::CoveringDegree { divisor: 2, .. })));
        let b = torus_eigenbasis([2.0 * PI, PI], [1, 0], EigenspacePolicy::SingleOrbit).unwrap();
        assert!(embed_image_mesh(&b, 16).is_err());
    }

    #[test]
    fn torus_image_area_converges() {
        let b = torus_eigenbasis([2.0 * PI, PI], [1, 1], EigenspacePolicy::SingleOrbit).unwrap();
        let coarse = embed_image_mesh(&b, 48).unwrap().total_volume();
        let fine = embed_image_mesh(&b, 96).unwrap().total_volume();
        let exact = 4.0 * PI * PI;
        assert!((fine - exact).abs() < 0.01 * exact);
        assert!((fine - coarse).abs() < 0.005 * fine);
        assert!((fine - exact).abs() < (coarse - exact).abs());
    }
}
