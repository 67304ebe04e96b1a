//! Common zeros of k = n systems on the model manifolds.
//!
//! Zeros are found by Newton iteration from a seed grid whose spacing is a
//! fixed fraction of the wavelength 2π/√λ. Each step solves in the tangent
//! chart of the current iterate and moves along the exponential map, so no
//! coordinate singularity is ever visited. A zero is transversal when the
//! system Jacobian determinant is bounded away from zero relative to the
//! natural scale (Nλ/(n·vol M))^{n/2}.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{EigenBasis, ManifoldModel, Point, Tangent};
use crate::sampling::{SubspaceFrame, SystemEvaluator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZeroOptions {
    /// Seeds per wavelength 2π/√λ in each dimension.
    pub grid_per_wavelength: f64,
    /// Newton stops once the step is shorter than this.
    pub newton_tol: f64,
    pub max_iterations: usize,
    /// Close-pair radius as a fraction of the seed spacing; distinct zeros
    /// closer than twice this raise the grid warning.
    pub dedup_factor: f64,
    /// Relative lower bound on |det J| at a certified zero.
    pub transversality_tol: f64,
    /// Relative upper bound on |u| at an accepted zero.
    pub residual_tol: f64,
}

impl Default for ZeroOptions {
    fn default() -> Self {
        Self {
            grid_per_wavelength: 8.0,
            newton_tol: 1e-12,
            max_iterations: 30,
            dedup_factor: 0.25,
            transversality_tol: 1e-8,
            residual_tol: 1e-10,
        }
    }
}

impl ZeroOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.grid_per_wavelength > 0.0
            && self.newton_tol > 0.0
            && self.max_iterations > 0
            && self.dedup_factor > 0.0
            && self.transversality_tol >= 0.0
            && self.residual_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid zero-finding options {self:?}")))
        }
    }

    pub fn spacing(&self, basis: &EigenBasis) -> f64 {
        basis.wavelength() / self.grid_per_wavelength
    }

    pub fn dedup_radius(&self, basis: &EigenBasis) -> f64 {
        self.dedup_factor * self.spacing(basis)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroSet {
    pub points: Vec<Point>,
    pub count: usize,
    pub certified: bool,
    /// Smallest pairwise distance between reported zeros (∞ if fewer than two).
    pub min_separation: f64,
    /// Smallest |det J| over the zeros, relative to the natural scale.
    pub min_jacobian_det: f64,
    /// Two distinct zeros closer than twice the dedup radius.
    pub grid_too_coarse: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ZeroClassification {
    Finite(ZeroSet),
    /// The zero set contains a curve; `witness` lies on it.
    Infinite { witness: Point },
}

struct Scales {
    value: f64,
    det: f64,
}

fn scales(basis: &EigenBasis) -> Scales {
    let n = basis.n() as f64;
    let rho = basis.dim() as f64 / basis.model().volume();
    Scales {
        value: rho.sqrt(),
        det: (rho * basis.lambda() / n).powf(n / 2.0),
    }
}

fn det(jac: &[Tangent], n: usize) -> f64 {
    match n {
        1 => jac[0][0],
        _ => jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0],
    }
}

/// Damped Newton step solving J δ = −u; reduces to the plain Newton step for
/// well-conditioned J and to a minimum-norm step when J is singular.
fn newton_step(jac: &[Tangent], u: &[f64], n: usize) -> Tangent {
    if n == 1 {
        let j = jac[0][0];
        let mu = 1e-14 * j * j + 1e-300;
        return [-j * u[0] / (j * j + mu), 0.0];
    }
    // normal equations (JᵀJ + μI) δ = −Jᵀu
    let a = jac[0][0] * jac[0][0] + jac[1][0] * jac[1][0];
    let b = jac[0][0] * jac[0][1] + jac[1][0] * jac[1][1];
    let d = jac[0][1] * jac[0][1] + jac[1][1] * jac[1][1];
    let mu = 1e-14 * (a + d) + 1e-300;
    let (a, d) = (a + mu, d + mu);
    let r0 = -(jac[0][0] * u[0] + jac[1][0] * u[1]);
    let r1 = -(jac[0][1] * u[0] + jac[1][1] * u[1]);
    let det = a * d - b * b;
    [(d * r0 - b * r1) / det, (a * r1 - b * r0) / det]
}

struct Solver<'a> {
    model: &'a ManifoldModel,
    eval: SystemEvaluator<'a>,
    n: usize,
    opts: &'a ZeroOptions,
    scales: Scales,
    max_step: f64,
    u: Vec<f64>,
    jac: Vec<Tangent>,
}

impl<'a> Solver<'a> {
    fn new(basis: &'a EigenBasis, frame: &'a SubspaceFrame, opts: &'a ZeroOptions) -> Result<Self> {
        let n = basis.n();
        if frame.k() != n {
            return Err(Error::InvalidArgument(format!(
                "zero counting needs k = n = {n}, got k = {}",
                frame.k()
            )));
        }
        if frame.coeffs().nrows() != basis.dim() {
            return Err(Error::InvalidArgument("frame does not match the basis".into()));
        }
        opts.validate()?;
        Ok(Self {
            model: basis.model(),
            eval: SystemEvaluator::new(basis, frame),
            n,
            opts,
            scales: scales(basis),
            max_step: 0.25 * basis.wavelength(),
            u: vec![0.0; n],
            jac: vec![[0.0; 2]; n],
        })
    }

    /// Runs Newton from `seed`; returns the zero and its relative |det J|.
    fn newton(&mut self, seed: &Point) -> Option<(Point, f64)> {
        let mut p = *seed;
        for _ in 0..self.opts.max_iterations {
            self.eval.eval(&p, &mut self.u, Some(&mut self.jac));
            let mut step = newton_step(&self.jac, &self.u, self.n);
            let len = step[0].hypot(step[1]);
            if !len.is_finite() {
                return None;
            }
            if len > self.max_step {
                let s = self.max_step / len;
                step = [step[0] * s, step[1] * s];
            }
            p = self.model.exp(&p, &step);
            if len < self.opts.newton_tol {
                break;
            }
        }
        self.eval.eval(&p, &mut self.u, Some(&mut self.jac));
        let res = self.u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if res > self.opts.residual_tol * self.scales.value {
            return None;
        }
        let d = det(&self.jac, self.n).abs() / self.scales.det;
        Some((self.model.canonical(p), d))
    }

    /// Null direction of the Jacobian at `p` (n = 2 only).
    fn kernel_direction(&mut self, p: &Point) -> Tangent {
        self.eval.eval(p, &mut self.u, Some(&mut self.jac));
        let r = if self.jac[0][0].hypot(self.jac[0][1]) >= self.jac[1][0].hypot(self.jac[1][1]) {
            self.jac[0]
        } else {
            self.jac[1]
        };
        let len = r[0].hypot(r[1]);
        if len < 1e-300 {
            [1.0, 0.0]
        } else {
            [-r[1] / len, r[0] / len]
        }
    }
}

struct Candidate {
    point: Point,
    det: f64,
}

/// Two converged points closer than this fraction of the wavelength are the same zero.
const SAME_ZERO: f64 = 1e-6;
/// Zeros with relative |det J| below this get a local search for a close partner.
const REFINE_DET: f64 = 0.25;

fn insert_distinct(found: &mut Vec<Candidate>, model: &ManifoldModel, tol: f64, p: Point, det: f64) -> bool {
    if found.iter().all(|c| model.distance(&c.point, &p) >= tol) {
        found.push(Candidate { point: p, det });
        true
    } else {
        false
    }
}

/// Newton from every grid seed, then from rings of seeds around each
/// poorly conditioned zero. Near a fold two zeros sit at a distance roughly
/// proportional to |det J|, well inside one grid cell, so the rings start at
/// that scale and double out to the grid spacing.
fn run_seeds(solver: &mut Solver<'_>, basis: &EigenBasis, opts: &ZeroOptions) -> Vec<Candidate> {
    let model = basis.model();
    let wavelength = basis.wavelength();
    let tol = SAME_ZERO * wavelength;
    let spacing = opts.spacing(basis);
    let mut found: Vec<Candidate> = Vec::new();
    for seed in model.seed_grid(spacing) {
        if let Some((p, d)) = solver.newton(&seed) {
            insert_distinct(&mut found, model, tol, p, d);
        }
    }
    let directions = if basis.n() == 1 { 2 } else { 8 };
    let mut i = 0;
    while i < found.len() {
        let (center, det) = (found[i].point, found[i].det);
        i += 1;
        if !(det < REFINE_DET && det > opts.transversality_tol) {
            continue;
        }
        let mut t = (0.25 * det * wavelength).max(1e-4 * wavelength);
        while t <= spacing {
            for j in 0..directions {
                let a = 2.0 * std::f64::consts::PI * j as f64 / directions as f64;
                let seed = model.exp(&center, &[t * a.cos(), t * a.sin()]);
                if let Some((p, d)) = solver.newton(&seed) {
                    insert_distinct(&mut found, model, tol, p, d);
                }
            }
            t *= 2.0;
        }
    }
    found
}

fn summarize(found: Vec<Candidate>, model: &ManifoldModel, opts: &ZeroOptions, radius: f64) -> ZeroSet {
    let mut min_sep = f64::INFINITY;
    for i in 0..found.len() {
        for j in (i + 1)..found.len() {
            min_sep = min_sep.min(model.distance(&found[i].point, &found[j].point));
        }
    }
    let min_det = found.iter().map(|c| c.det).fold(f64::INFINITY, f64::min);
    let certified = found.iter().all(|c| c.det > opts.transversality_tol);
    ZeroSet {
        count: found.len(),
        points: found.into_iter().map(|c| c.point).collect(),
        certified,
        min_separation: min_sep,
        min_jacobian_det: min_det,
        grid_too_coarse: min_sep < 2.0 * radius,
    }
}

/// Transversal common zeros of a k = n system.
pub fn count_zeros_newton(frame: &SubspaceFrame, basis: &EigenBasis, opts: &ZeroOptions) -> Result<ZeroSet> {
    let mut solver = Solver::new(basis, frame, opts)?;
    let found = run_seeds(&mut solver, basis, opts);
    let zs = summarize(found, basis.model(), opts, opts.dedup_radius(basis));
    if zs.grid_too_coarse {
        log::debug!(
            "zeros closer than twice the dedup radius ({:e}) for {}",
            zs.min_separation,
            frame.basis_id()
        );
    }
    Ok(zs)
}

/// Like [`count_zeros_newton`] but recognizes positive-dimensional zero sets.
///
/// A non-transversal zero is probed by stepping one seed spacing along the
/// kernel of the Jacobian and re-solving: landing on a different zero at
/// roughly that distance means the zeros form a curve.
pub fn count_zeros_degenerate_check(
    frame: &SubspaceFrame,
    basis: &EigenBasis,
    opts: &ZeroOptions,
) -> Result<ZeroClassification> {
    let mut solver = Solver::new(basis, frame, opts)?;
    let found = run_seeds(&mut solver, basis, opts);
    let model = basis.model();
    let h = opts.spacing(basis);
    if basis.n() >= 2 {
        for c in found.iter().filter(|c| c.det <= opts.transversality_tol) {
            let v = solver.kernel_direction(&c.point);
            for sign in [1.0, -1.0] {
                let probe = model.exp(&c.point, &[sign * h * v[0], sign * h * v[1]]);
                if let Some((q, _)) = solver.newton(&probe) {
                    let d = model.distance(&q, &c.point);
                    if d > 0.5 * h && d < 2.0 * h {
                        return Ok(ZeroClassification::Infinite { witness: c.point });
                    }
                }
            }
        }
    }
    Ok(ZeroClassification::Finite(summarize(found, model, opts, opts.dedup_radius(basis))))
}

/// Zero count of a rank-4 torus product system by elimination.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleCount {
    pub count: usize,
    pub points: Vec<Point>,
    /// Every root of the resultant is simple.
    pub transversal: bool,
}

/// Grid intervals per period of the resultant scan.
const ORACLE_GRID: usize = 10_000;

/// Exact zero count for a k = 2 frame on the four-function torus product basis.
///
/// Writing u_j = P_j(Y) sin X + Q_j(Y) cos X with X = ξ₁x, Y = ξ₂y, common
/// zeros need R(Y) = P₁Q₂ − P₂Q₁ = 0. Each simple root of R fixes
/// (sin X, cos X) up to sign, giving two X per 2π, hence 2k₁ values of x.
pub fn torus_reduction_oracle(frame: &SubspaceFrame, basis: &EigenBasis) -> Result<OracleCount> {
    let Some((amp, xi)) = basis.torus_product_params() else {
        return Err(Error::InvalidArgument(
            "reduction oracle needs the unrestricted four-function torus basis".into(),
        ));
    };
    if frame.k() != 2 || frame.coeffs().nrows() != 4 {
        return Err(Error::InvalidArgument("reduction oracle needs a 4x2 frame".into()));
    }
    let [p1, p2] = basis.model().periods().expect("torus");
    let c = frame.coeffs();
    let pq = |y: f64| {
        let (s, co) = (xi[1] * y).sin_cos();
        let p = [amp * (c[(0, 0)] * co + c[(1, 0)] * s), amp * (c[(0, 1)] * co + c[(1, 1)] * s)];
        let q = [amp * (c[(2, 0)] * co + c[(3, 0)] * s), amp * (c[(2, 1)] * co + c[(3, 1)] * s)];
        (p, q)
    };
    let resultant = |y: f64| {
        let (p, q) = pq(y);
        p[0] * q[1] - p[1] * q[0]
    };

    let periods_y = (xi[1] * p2 / (2.0 * std::f64::consts::PI)).round().max(1.0) as usize;
    let steps = ORACLE_GRID * periods_y;
    let dy = p2 / steps as f64;
    // periodic scan on cell midpoints, so roots at lattice points are not missed
    let node = |i: usize| (i as f64 + 0.5) * dy;
    let samples: Vec<f64> = (0..steps).map(|i| resultant(node(i))).collect();
    let r_max = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r_max < 1e-12 * amp * amp {
        return Err(Error::DegenerateFrame);
    }

    let mut roots = Vec::new();
    for i in 0..steps {
        let (a, b) = (samples[i], samples[(i + 1) % steps]);
        if (a >= 0.0) != (b >= 0.0) {
            let (mut lo, mut hi) = (node(i), node(i) + dy);
            let mut flo = a;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = resultant(mid);
                if (fm >= 0.0) == (flo >= 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 * p2 {
                    break;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }

    let k1 = (xi[0] * p1 / (2.0 * std::f64::consts::PI)).round().max(1.0) as usize;
    let mut points = Vec::with_capacity(roots.len() * 2 * k1);
    let mut transversal = true;
    let h = 1e-6 * p2;
    for &y in &roots {
        let slope = (resultant(y + h) - resultant(y - h)) / (2.0 * h);
        if slope.abs() < 1e-8 * r_max * xi[1] {
            transversal = false;
        }
        let (p, q) = pq(y);
        // (sin X, cos X) ∝ (Q, −P) for the better-conditioned equation
        let (pp, qq) = if p[0].hypot(q[0]) >= p[1].hypot(q[1]) { (p[0], q[0]) } else { (p[1], q[1]) };
        let x0 = qq.atan2(-pp);
        for s in 0..(2 * k1) {
            let big_x = x0 + std::f64::consts::PI * s as f64;
            points.push(basis.model().canonical(Point::Torus([big_x / xi[0], y])));
        }
    }
    Ok(OracleCount {
        count: points.len(),
        points,
        transversal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{circle_eigenbasis, restricted_subbasis, sphere2_eigenbasis, torus_eigenbasis, EigenspacePolicy};
    use crate::sampling::{sample_subspace, system_eval, trial_rng};
    use std::f64::consts::PI;

    fn torus_a(a: f64) -> EigenBasis {
        torus_eigenbasis([2.0 * PI, 2.0 * PI / a], [1, 1], EigenspacePolicy::SingleOrbit).unwrap()
    }

    /// Brute-force zero count on the circle by sign changes on a fine grid.
    fn sign_scan_circle(b: &EigenBasis, f: &SubspaceFrame) -> usize {
        let n = 200_000;
        let vals: Vec<f64> = (0..n)
            .map(|i| system_eval(f, b, &Point::Circle(2.0 * PI * i as f64 / n as f64))[0])
            .collect();
        (0..n).filter(|&i| (vals[i] >= 0.0) != (vals[(i + 1) % n] >= 0.0)).count()
    }

    #[test]
    fn circle_counts_match_sign_scan() {
        let b = circle_eigenbasis(3).unwrap();
        let mut rng = trial_rng(21, 0);
        for _ in 0..20 {
            let f = sample_subspace(&b, 1, &mut rng).unwrap();
            let zs = count_zeros_newton(&f, &b, &ZeroOptions::default()).unwrap();
            assert_eq!(sign_scan_circle(&b, &f), 6);
            assert_eq!(zs.count, 6);
            assert!(zs.certified);
        }
    }

    #[test]
    fn sphere_degree_one_has_two_antipodal_zeros() {
        let b = sphere2_eigenbasis(1).unwrap();
        let m = b.model().clone();
        let mut rng = trial_rng(22, 0);
        for _ in 0..50 {
            let f = sample_subspace(&b, 2, &mut rng).unwrap();
            let zs = count_zeros_newton(&f, &b, &ZeroOptions::default()).unwrap();
            assert_eq!(zs.count, 2);
            assert!((m.distance(&zs.points[0], &zs.points[1]) - PI).abs() < 1e-9);
        }
    }

    #[test]
    fn zeros_are_zeros() {
        let b = sphere2_eigenbasis(3).unwrap();
        let mut rng = trial_rng(23, 0);
        let f = sample_subspace(&b, 2, &mut rng).unwrap();
        let zs = count_zeros_newton(&f, &b, &ZeroOptions::default()).unwrap();
        assert!(zs.count > 0 && zs.count.is_multiple_of(2));
        for p in &zs.points {
            assert!(system_eval(&f, &b, p).iter().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn rejects_wrong_k() {
        let b = sphere2_eigenbasis(2).unwrap();
        let f = SubspaceFrame::standard(&b, 1).unwrap();
        assert!(count_zeros_newton(&f, &b, &ZeroOptions::default()).is_err());
    }

    #[test]
    fn oracle_closed_form_example() {
        // u₁ = f₁, u₂ = f₄: R ∝ cos ay · sin ay, four roots, eight zeros.
        let b = torus_a(2.0);
        let f = SubspaceFrame::from_columns(&b, &[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]]).unwrap();
        let o = torus_reduction_oracle(&f, &b).unwrap();
        assert_eq!(o.count, 8);
        for p in &o.points {
            assert!(system_eval(&f, &b, p).iter().all(|v| v.abs() < 1e-12));
        }
        let zs = count_zeros_newton(&f, &b, &ZeroOptions::default()).unwrap();
        assert_eq!(zs.count, 8);
    }

    #[test]
    fn oracle_rejects_shared_factor() {
        let b = torus_a(2.0);
        let f = SubspaceFrame::from_columns(&b, &[vec![1.0, 0.2, 0.0, 0.0], vec![0.1, 1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(torus_reduction_oracle(&f, &b), Err(Error::DegenerateFrame)));
    }

    #[test]
    fn newton_agrees_with_oracle() {
        let b = torus_a(2.0);
        let opts = ZeroOptions::default();
        let mut rng = trial_rng(24, 0);
        for _ in 0..200 {
            let f = sample_subspace(&b, 2, &mut rng).unwrap();
            let zs = count_zeros_newton(&f, &b, &opts).unwrap();
            let o = torus_reduction_oracle(&f, &b).unwrap();
            if zs.certified && o.transversal {
                assert_eq!(zs.count, o.count);
            }
        }
    }

    #[test]
    fn degenerate_classification() {
        let opts = ZeroOptions::default();
        // sin x = cos x = 0 has no solution
        let b = torus_eigenbasis([2.0 * PI, PI], [1, 0], EigenspacePolicy::SingleOrbit).unwrap();
        let f = SubspaceFrame::standard(&b, 2).unwrap();
        match count_zeros_degenerate_check(&f, &b, &opts).unwrap() {
            ZeroClassification::Finite(zs) => assert_eq!(zs.count, 0),
            other => panic!("{other:?}"),
        }
        // {f₁, f₂} share sin x: the circles x = 0, π are common zeros
        let r = restricted_subbasis(&torus_a(2.0), &[0, 1]).unwrap();
        let mut rng = trial_rng(25, 0);
        let f = sample_subspace(&r, 2, &mut rng).unwrap();
        match count_zeros_degenerate_check(&f, &r, &opts).unwrap() {
            ZeroClassification::Infinite { witness: Point::Torus([x, _]) } => {
                assert!(x.sin().abs() < 1e-8)
            }
            other => panic!("{other:?}"),
        }
        // generic full-basis frame is finite and agrees with Newton
        let b = torus_a(2.0);
        let f = sample_subspace(&b, 2, &mut rng).unwrap();
        let ZeroClassification::Finite(zs) = count_zeros_degenerate_check(&f, &b, &opts).unwrap() else {
            panic!("expected finite")
        };
        assert_eq!(zs.count, count_zeros_newton(&f, &b, &opts).unwrap().count);
    }
}
