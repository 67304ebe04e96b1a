use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{harmonics, sphere_frame, ManifoldModel, ModelKind, Point, Tangent};
use crate::error::{Error, Result};

/// How torus eigenvalue collisions between frequency orbits are handled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenspacePolicy {
    /// Use only the orbit {(±k₁, ±k₂)} of the requested frequency.
    #[default]
    SingleOrbit,
    /// Use every orbit with the same eigenvalue.
    Merged,
    /// Reject frequencies whose eigenvalue is shared with another orbit.
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Trig {
    Sin,
    Cos,
    One,
}

impl Trig {
    fn eval(self, t: f64) -> (f64, f64) {
        match self {
            Trig::Sin => (t.sin(), t.cos()),
            Trig::Cos => (t.cos(), -t.sin()),
            Trig::One => (1.0, 0.0),
        }
    }
}

/// amp · t₁(ξ₁x) · t₂(ξ₂y)
#[derive(Clone, Debug, PartialEq)]
struct TorusMode {
    amp: f64,
    xi: [f64; 2],
    trig: [Trig; 2],
}

#[derive(Clone, Debug, PartialEq)]
enum Family {
    Circle { l: usize },
    Sphere2 { l: usize },
    Torus { frequency: [i64; 2], modes: Vec<TorusMode> },
}

impl Family {
    fn len(&self) -> usize {
        match self {
            Family::Circle { .. } => 2,
            Family::Sphere2 { l } => harmonics::count(*l),
            Family::Torus { modes, .. } => modes.len(),
        }
    }
}

/// Serializable description from which a basis can be rebuilt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub model: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub periods: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency: Option<[i64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<usize>>,
    pub policy: EigenspacePolicy,
}

/// Orthonormal basis f₁..f_N of an invariant subspace H ⊂ H(λ).
///
/// Immutable once built; evaluation takes `&self` only.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenBasis {
    model: ManifoldModel,
    lambda: f64,
    family: Family,
    selected: Option<Vec<usize>>,
    policy: EigenspacePolicy,
    scale: f64,
}

pub fn circle_eigenbasis(l: usize) -> Result<EigenBasis> {
    if l == 0 {
        return Err(Error::InvalidArgument("circle eigenbasis needs l >= 1".into()));
    }
    Ok(EigenBasis::new(
        ManifoldModel::circle(),
        (l * l) as f64,
        Family::Circle { l },
    ))
}

pub fn sphere2_eigenbasis(l: usize) -> Result<EigenBasis> {
    if l == 0 {
        return Err(Error::InvalidArgument("sphere eigenbasis needs l >= 1".into()));
    }
    Ok(EigenBasis::new(
        ManifoldModel::sphere2(),
        (l * (l + 1)) as f64,
        Family::Sphere2 { l },
    ))
}

/// Eigenbasis on R²/(p₁Z × p₂Z) for the frequency orbit of (k₁, k₂).
///
/// Both components nonzero gives the four products
/// sinX cosY, sinX sinY, cosX cosY, cosX sinY with X = ξ₁x, Y = ξ₂y;
/// one zero component gives {sin, cos} of the other coordinate.
pub fn torus_eigenbasis(
    periods: [f64; 2],
    frequency: [i64; 2],
    policy: EigenspacePolicy,
) -> Result<EigenBasis> {
    let model = ManifoldModel::flat_torus(periods[0], periods[1])?;
    if frequency == [0, 0] {
        return Err(Error::InvalidArgument("torus frequency must not be (0, 0)".into()));
    }
    let k = [frequency[0].abs(), frequency[1].abs()];
    let xi_of = |k: [i64; 2]| [2.0 * PI * k[0] as f64 / periods[0], 2.0 * PI * k[1] as f64 / periods[1]];
    let xi = xi_of(k);
    let lambda = xi[0] * xi[0] + xi[1] * xi[1];

    let others = colliding_orbits(periods, k, lambda);
    let mut orbits = vec![k];
    match policy {
        EigenspacePolicy::SingleOrbit => {}
        EigenspacePolicy::Merged => orbits.extend(others.iter().copied()),
        EigenspacePolicy::Strict => {
            if let Some(o) = others.first() {
                return Err(Error::EigenvalueCollision {
                    lambda,
                    frequency: k,
                    other: *o,
                });
            }
        }
    }

    let vol = model.volume();
    let mut modes = Vec::new();
    for orbit in orbits {
        let xi = xi_of(orbit);
        match (orbit[0] != 0, orbit[1] != 0) {
            (true, true) => {
                let amp = 2.0 / vol.sqrt();
                for trig in [
                    [Trig::Sin, Trig::Cos],
                    [Trig::Sin, Trig::Sin],
                    [Trig::Cos, Trig::Cos],
                    [Trig::Cos, Trig::Sin],
                ] {
                    modes.push(TorusMode { amp, xi, trig });
                }
            }
            (true, false) => {
                let amp = (2.0 / vol).sqrt();
                modes.push(TorusMode { amp, xi, trig: [Trig::Sin, Trig::One] });
                modes.push(TorusMode { amp, xi, trig: [Trig::Cos, Trig::One] });
            }
            (false, true) => {
                let amp = (2.0 / vol).sqrt();
                modes.push(TorusMode { amp, xi, trig: [Trig::One, Trig::Sin] });
                modes.push(TorusMode { amp, xi, trig: [Trig::One, Trig::Cos] });
            }
            (false, false) => unreachable!(),
        }
    }

    let mut basis = EigenBasis::new(model, lambda, Family::Torus { frequency: k, modes });
    basis.policy = policy;
    Ok(basis)
}

/// Other nonnegative frequency orbits with the same eigenvalue.
fn colliding_orbits(periods: [f64; 2], k: [i64; 2], lambda: f64) -> Vec<[i64; 2]> {
    let max1 = (lambda.sqrt() * periods[0] / (2.0 * PI)).floor() as i64 + 1;
    let max2 = (lambda.sqrt() * periods[1] / (2.0 * PI)).floor() as i64 + 1;
    let mut out = Vec::new();
    for m1 in 0..=max1 {
        for m2 in 0..=max2 {
            if [m1, m2] == k || [m1, m2] == [0, 0] {
                continue;
            }
            let a = 2.0 * PI * m1 as f64 / periods[0];
            let b = 2.0 * PI * m2 as f64 / periods[1];
            if ((a * a + b * b) - lambda).abs() <= 1e-12 * lambda {
                out.push([m1, m2]);
            }
        }
    }
    out
}

/// Sub-basis spanned by the given (zero-based) indices.
///
/// Invariance of the span is the caller's responsibility.
pub fn restricted_subbasis(basis: &EigenBasis, indices: &[usize]) -> Result<EigenBasis> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("restriction needs at least one index".into()));
    }
    let n = basis.dim();
    let mut seen = vec![false; n];
    for &i in indices {
        if i >= n || seen[i] {
            return Err(Error::InvalidArgument(format!(
                "restriction index {i} out of range or repeated (basis has {n} functions)"
            )));
        }
        seen[i] = true;
    }
    let parent: Vec<usize> = match &basis.selected {
        Some(sel) => indices.iter().map(|&i| sel[i]).collect(),
        None => indices.to_vec(),
    };
    let mut out = basis.clone();
    let identity = parent.len() == basis.family.len() && parent.iter().enumerate().all(|(a, &b)| a == b);
    out.selected = (!identity).then_some(parent);
    Ok(out)
}

impl EigenBasis {
    fn new(model: ManifoldModel, lambda: f64, family: Family) -> Self {
        Self {
            model,
            lambda,
            family,
            selected: None,
            policy: EigenspacePolicy::SingleOrbit,
            scale: 1.0,
        }
    }

    /// Rebuilds a basis from its spec.
    pub fn from_spec(spec: &BasisSpec) -> Result<Self> {
        let need_l = || {
            spec.l
                .ok_or_else(|| Error::Config("basis.l is required for this model".into()))
        };
        let base = match spec.model {
            ModelKind::Circle => circle_eigenbasis(need_l()?)?,
            ModelKind::Sphere2 => sphere2_eigenbasis(need_l()?)?,
            ModelKind::FlatTorus2 => {
                let periods = spec
                    .periods
                    .ok_or_else(|| Error::Config("torus needs model.periods or model.a".into()))?;
                let freq = spec
                    .frequency
                    .ok_or_else(|| Error::Config("torus needs basis.frequency".into()))?;
                torus_eigenbasis(periods, freq, spec.policy)?
            }
        };
        match &spec.indices {
            Some(idx) => restricted_subbasis(&base, idx),
            None => Ok(base),
        }
    }

    pub fn spec(&self) -> BasisSpec {
        let (l, frequency) = match &self.family {
            Family::Circle { l } | Family::Sphere2 { l } => (Some(*l), None),
            Family::Torus { frequency, .. } => (None, Some(*frequency)),
        };
        BasisSpec {
            model: self.model.kind(),
            periods: self.model.periods(),
            l,
            frequency,
            indices: self.selected.clone(),
            policy: self.policy,
        }
    }

    /// Copy whose values are multiplied by `factor`; a negative control for
    /// identity checks, never a valid eigenbasis unless `factor == 1`.
    pub fn rescaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale *= factor;
        out
    }

    /// Replaces the model flags (for example an asserted isotropy flag).
    pub fn with_model(mut self, model: ManifoldModel) -> Result<Self> {
        if model.kind() != self.model.kind() || model.periods() != self.model.periods() {
            return Err(Error::InvalidArgument("model does not match the basis geometry".into()));
        }
        self.model = model;
        Ok(self)
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// N = dim H.
    pub fn dim(&self) -> usize {
        self.selected.as_ref().map_or(self.family.len(), Vec::len)
    }

    pub fn n(&self) -> usize {
        self.model.dim()
    }

    /// Wavelength 2π/√λ.
    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.lambda.sqrt()
    }

    pub fn is_restricted(&self) -> bool {
        self.selected.is_some()
    }

    /// Torus frequency when this is a torus basis.
    pub fn torus_frequency(&self) -> Option<[i64; 2]> {
        match &self.family {
            Family::Torus { frequency, .. } => Some(*frequency),
            _ => None,
        }
    }

    /// True for the unrestricted four-function product basis of one torus orbit.
    pub fn is_torus_product(&self) -> bool {
        matches!(&self.family, Family::Torus { modes, .. } if modes.len() == 4 && modes[0].trig[1] != Trig::One && modes[0].trig[0] != Trig::One)
            && self.selected.is_none()
    }

    /// Torus mode parameters (amplitude, ξ) for the product basis.
    pub(crate) fn torus_product_params(&self) -> Option<(f64, [f64; 2])> {
        match &self.family {
            Family::Torus { modes, .. } if self.is_torus_product() => {
                Some((modes[0].amp * self.scale, modes[0].xi))
            }
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    /// Values f_i(p).
    pub fn values(&self, p: &Point) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        self.eval(p, &mut v, None);
        v
    }

    /// Gradients of f_i at p in the orthonormal frame at p.
    pub fn gradients(&self, p: &Point) -> Vec<Tangent> {
        let mut v = vec![0.0; self.dim()];
        let mut g = vec![[0.0; 2]; self.dim()];
        self.eval(p, &mut v, Some(&mut g));
        g
    }

    /// Evaluates every basis function (and optionally its gradient) at `p`.
    pub fn eval(&self, p: &Point, values: &mut [f64], grads: Option<&mut [Tangent]>) {
        assert!(self.model.check_point(p), "point does not belong to the basis model");
        match &self.selected {
            None => self.eval_full(p, values, grads),
            Some(sel) => {
                let full = self.family.len();
                let mut fv = vec![0.0; full];
                match grads {
                    None => {
                        self.eval_full(p, &mut fv, None);
                        for (o, &i) in values.iter_mut().zip(sel) {
                            *o = fv[i];
                        }
                    }
                    Some(g) => {
                        let mut fg = vec![[0.0; 2]; full];
                        self.eval_full(p, &mut fv, Some(&mut fg));
                        for (k, &i) in sel.iter().enumerate() {
                            values[k] = fv[i];
                            g[k] = fg[i];
                        }
                    }
                }
            }
        }
    }

    fn eval_full(&self, p: &Point, values: &mut [f64], mut grads: Option<&mut [Tangent]>) {
        let s = self.scale;
        match (&self.family, p) {
            (Family::Circle { l }, Point::Circle(t)) => {
                let c = s / PI.sqrt();
                let lf = *l as f64;
                let (sn, cs) = (lf * t).sin_cos();
                values[0] = c * cs;
                values[1] = c * sn;
                if let Some(g) = grads.as_deref_mut() {
                    g[0] = [-c * lf * sn, 0.0];
                    g[1] = [c * lf * cs, 0.0];
                }
            }
            (Family::Sphere2 { l }, Point::Sphere(q)) => {
                let n = harmonics::count(*l);
                match grads.as_deref_mut() {
                    None => harmonics::eval(*l, q, values, None),
                    Some(g) => {
                        let mut amb = vec![[0.0; 3]; n];
                        harmonics::eval(*l, q, values, Some(&mut amb));
                        let (e1, e2) = sphere_frame(q);
                        for (gi, a) in g.iter_mut().zip(&amb) {
                            *gi = [
                                s * (a[0] * e1[0] + a[1] * e1[1] + a[2] * e1[2]),
                                s * (a[0] * e2[0] + a[1] * e2[1] + a[2] * e2[2]),
                            ];
                        }
                    }
                }
                if s != 1.0 {
                    values.iter_mut().for_each(|v| *v *= s);
                }
            }
            (Family::Torus { modes, .. }, Point::Torus([x, y])) => {
                for (i, m) in modes.iter().enumerate() {
                    let (a, da) = m.trig[0].eval(m.xi[0] * x);
                    let (b, db) = m.trig[1].eval(m.xi[1] * y);
                    let amp = m.amp * s;
                    values[i] = amp * a * b;
                    if let Some(g) = grads.as_deref_mut() {
                        g[i] = [amp * da * m.xi[0] * b, amp * a * db * m.xi[1]];
                    }
                }
            }
            _ => unreachable!("point kind checked against model"),
        }
    }

    /// Values at a point given in ambient coordinates (S² only), used by
    /// finite-difference checks off the sphere: evaluates at p/|p|.
    pub(crate) fn values_radial(&self, p: &[f64; 3], out: &mut [f64]) {
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        self.eval(&Point::Sphere([p[0] / r, p[1] / r, p[2] / r]), out, None);
    }
}

impl fmt::Display for EigenBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Circle { l } => write!(f, "circle(l={l})")?,
            Family::Sphere2 { l } => write!(f, "sphere2(l={l})")?,
            Family::Torus { frequency, .. } => {
                let [p1, p2] = self.model.periods().unwrap();
                write!(f, "torus(periods=[{p1}, {p2}], frequency={frequency:?}")?;
                if self.policy == EigenspacePolicy::Merged {
                    write!(f, ", merged")?;
                }
                write!(f, ")")?;
            }
        }
        if let Some(sel) = &self.selected {
            write!(f, "[{sel:?}]")?;
        }
        Ok(())
    }
}
