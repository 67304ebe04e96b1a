//! Haar-random rotations and uniformly random subspaces of H, plus
//! evaluation of the sampled systems u_j = Σᵢ C_ij f_i.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::models::{EigenBasis, Point, Tangent};

/// Independent generator for one trial of a run.
///
/// The master seed fixes the key and the trial index selects the ChaCha
/// stream, so streams do not depend on scheduling or thread count.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut m = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

/// QR of a Gaussian matrix with diag(R) forced positive. Returns None when
/// the matrix is numerically rank deficient.
fn orthonormal_columns<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Option<DMatrix<f64>> {
    let g = gaussian_matrix(rows, cols, rng);
    let scale = g.norm().max(1.0);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        let d = r[(j, j)];
        if d.abs() < 1e-12 * scale {
            return None;
        }
        if d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Some(q)
}

/// Haar-distributed element of SO(N).
pub fn haar_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    assert!(n >= 1, "rotation dimension must be positive");
    let mut q = loop {
        if let Some(q) = orthonormal_columns(n, n, rng) {
            break q;
        }
        log::debug!("rank-deficient Gaussian draw for rotation of size {n}; resampling");
    };
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Orthonormal N×k coefficient frame representing U ∈ Gr_k(H).
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceFrame {
    coeffs: DMatrix<f64>,
    basis_id: String,
}

impl SubspaceFrame {
    /// Builds a frame from explicit coefficient columns, orthonormalizing them.
    pub fn from_columns(basis: &EigenBasis, columns: &[Vec<f64>]) -> Result<Self> {
        let n = basis.dim();
        let k = columns.len();
        if k == 0 || k > n || columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "frame needs 1..={n} columns of length {n}"
            )));
        }
        let m = DMatrix::from_fn(n, k, |i, j| columns[j][i]);
        let qr = m.qr();
        let r = qr.r();
        let mut q = qr.q();
        for j in 0..k {
            if r[(j, j)].abs() < 1e-12 {
                return Err(Error::InvalidArgument("frame columns are linearly dependent".into()));
            }
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        Ok(Self {
            coeffs: q,
            basis_id: basis.label(),
        })
    }

    /// Standard frame e₁..e_k (u_j = f_j).
    pub fn standard(basis: &EigenBasis, k: usize) -> Result<Self> {
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|j| (0..basis.dim()).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::from_columns(basis, &cols)
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn basis_id(&self) -> &str {
        &self.basis_id
    }

    pub fn k(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.coeffs.column(j).iter().copied().collect()
    }

    /// Applies an N×N orthogonal matrix to the frame (R·C).
    pub fn rotated(&self, rotation: &DMatrix<f64>) -> Self {
        Self {
            coeffs: rotation * &self.coeffs,
            basis_id: self.basis_id.clone(),
        }
    }
}

/// Uniform random k-dimensional subspace of H.
pub fn sample_subspace<R: Rng + ?Sized>(basis: &EigenBasis, k: usize, rng: &mut R) -> Result<SubspaceFrame> {
    let n = basis.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "subspace dimension {k} outside 1..={n}"
        )));
    }
    let coeffs = loop {
        if let Some(q) = orthonormal_columns(n, k, rng) {
            break q;
        }
        log::debug!("rank-deficient Gaussian frame ({n}x{k}); resampling");
    };
    Ok(SubspaceFrame {
        coeffs,
        basis_id: basis.label(),
    })
}

/// Reusable evaluator of u(x) and its k×n Jacobian for one frame.
pub struct SystemEvaluator<'a> {
    basis: &'a EigenBasis,
    coeffs: &'a DMatrix<f64>,
    values: Vec<f64>,
    grads: Vec<Tangent>,
}

impl<'a> SystemEvaluator<'a> {
    pub fn new(basis: &'a EigenBasis, frame: &'a SubspaceFrame) -> Self {
        assert_eq!(frame.coeffs.nrows(), basis.dim(), "frame does not match basis dimension");
        Self {
            basis,
            coeffs: &frame.coeffs,
            values: vec![0.0; basis.dim()],
            grads: vec![[0.0; 2]; basis.dim()],
        }
    }

    pub fn k(&self) -> usize {
        self.coeffs.ncols()
    }

    /// Fills `u` (length k) and, when given, `jac` (k rows of tangent vectors).
    pub fn eval(&mut self, p: &Point, u: &mut [f64], jac: Option<&mut [Tangent]>) {
        let k = self.k();
        match jac {
            None => {
                self.basis.eval(p, &mut self.values, None);
                for (j, uj) in u.iter_mut().enumerate().take(k) {
                    *uj = self.coeffs.column(j).dot(&nalgebra::DVectorView::from_slice(&self.values, self.values.len()));
                }
            }
            Some(jac) => {
                self.basis.eval(p, &mut self.values, Some(&mut self.grads));
                for j in 0..k {
                    let col = self.coeffs.column(j);
                    let mut s = 0.0;
                    let mut g = [0.0; 2];
                    for (i, c) in col.iter().enumerate() {
                        s += c * self.values[i];
                        g[0] += c * self.grads[i][0];
                        g[1] += c * self.grads[i][1];
                    }
                    u[j] = s;
                    jac[j] = g;
                }
            }
        }
    }
}

/// u_j(x) = Σᵢ C_ij f_i(x).
pub fn system_eval(frame: &SubspaceFrame, basis: &EigenBasis, x: &Point) -> Vec<f64> {
    let mut ev = SystemEvaluator::new(basis, frame);
    let mut u = vec![0.0; frame.k()];
    ev.eval(x, &mut u, None);
    u
}

/// Rows are the tangent gradients of u_j in the orthonormal frame at x.
pub fn system_jacobian(frame: &SubspaceFrame, basis: &EigenBasis, x: &Point) -> Vec<Tangent> {
    let mut ev = SystemEvaluator::new(basis, frame);
    let mut u = vec![0.0; frame.k()];
    let mut j = vec![[0.0; 2]; frame.k()];
    ev.eval(x, &mut u, Some(&mut j));
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{sphere2_eigenbasis, torus_eigenbasis, EigenspacePolicy};
    use std::f64::consts::PI;

    #[test]
    fn rotation_one_by_one() {
        let mut rng = trial_rng(1, 0);
        for _ in 0..10 {
            let q = haar_rotation(1, &mut rng);
            assert_eq!(q[(0, 0)], 1.0);
        }
    }

    #[test]
    fn rotations_are_special_orthogonal() {
        let mut rng = trial_rng(2, 0);
        for n in 2..7 {
            for _ in 0..20 {
                let q = haar_rotation(n, &mut rng);
                let e = &q.transpose() * &q - DMatrix::identity(n, n);
                assert!(e.amax() < 1e-12);
                assert!((q.determinant() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frames_are_orthonormal() {
        let b = sphere2_eigenbasis(3).unwrap();
        let mut rng = trial_rng(3, 0);
        for k in 1..=7 {
            let f = sample_subspace(&b, k, &mut rng).unwrap();
            let e = f.coeffs().transpose() * f.coeffs() - DMatrix::identity(k, k);
            assert!(e.amax() < 1e-12);
        }
        assert!(sample_subspace(&b, 0, &mut rng).is_err());
        assert!(sample_subspace(&b, 8, &mut rng).is_err());
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let b = sphere2_eigenbasis(2).unwrap();
        let a1 = sample_subspace(&b, 2, &mut trial_rng(9, 4)).unwrap();
        let a2 = sample_subspace(&b, 2, &mut trial_rng(9, 4)).unwrap();
        let c = sample_subspace(&b, 2, &mut trial_rng(9, 5)).unwrap();
        assert_eq!(a1, a2);
        assert_ne!(a1, c);
    }

    #[test]
    fn standard_frame_reproduces_basis() {
        let b = sphere2_eigenbasis(2).unwrap();
        let f = SubspaceFrame::standard(&b, 2).unwrap();
        let p = Point::Sphere([0.6, 0.0, 0.8]);
        let u = system_eval(&f, &b, &p);
        let v = b.values(&p);
        assert_eq!(u, v[..2].to_vec());
    }

    #[test]
    fn shared_factor_vanishes() {
        let b = torus_eigenbasis([2.0 * PI, PI], [1, 1], EigenspacePolicy::SingleOrbit).unwrap();
        let f = SubspaceFrame::from_columns(&b, &[vec![0.3, 0.7, 0.0, 0.0], vec![-0.2, 0.5, 0.0, 0.0]]).unwrap();
        let u = system_eval(&f, &b, &Point::Torus([PI, 1.234]));
        assert!(u.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let b = sphere2_eigenbasis(3).unwrap();
        let m = b.model().clone();
        let mut rng = trial_rng(4, 0);
        for _ in 0..20 {
            let f = sample_subspace(&b, 2, &mut rng).unwrap();
            let p = m.random_point(&mut rng);
            let j = system_jacobian(&f, &b, &p);
            let h = 1e-5;
            for dir in 0..2 {
                let mut v = [0.0; 2];
                v[dir] = h;
                let plus = system_eval(&f, &b, &m.exp(&p, &v));
                v[dir] = -h;
                let minus = system_eval(&f, &b, &m.exp(&p, &v));
                for r in 0..2 {
                    let fd = (plus[r] - minus[r]) / (2.0 * h);
                    assert!((fd - j[r][dir]).abs() < 1e-6, "{fd} vs {}", j[r][dir]);
                }
            }
        }
    }
}
