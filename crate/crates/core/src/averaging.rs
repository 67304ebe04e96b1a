//! Monte Carlo averages over the Grassmannian of subspaces U ⊂ H.
//!
//! Every trial draws its frame from its own generator stream, trials run in
//! parallel, and results are merged by trial index, so a report depends only
//! on the seed and the configuration.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{beta_spectrum_default, predicted_from_spectrum, predicted_nodal_volume, weyl_bound_for_volume};
use crate::error::{Error, Result};
use crate::models::{dot3, EigenBasis, ManifoldModel, ModelKind, Point};
use crate::nodal::{NodalMesher, NodalOptions};
use crate::report::{config_hash, ExperimentReport, ReportInput, TrialRecord, TrialStatus};
use crate::sampling::{sample_subspace, trial_rng};
use crate::zeros::{count_zeros_degenerate_check, count_zeros_newton, torus_reduction_oracle, ZeroClassification, ZeroOptions};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "EIGENCROFTON_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the environment default.
    #[serde(skip)]
    pub threads: usize,
    pub zeros: ZeroOptions,
    pub nodal: NodalOptions,
    /// Largest tolerated fraction of uncertified trials.
    pub max_uncertified_fraction: f64,
    /// Cross-check every torus trial with the reduction oracle.
    pub oracle: bool,
}

impl RunOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            threads: 0,
            zeros: ZeroOptions::default(),
            nodal: NodalOptions::default(),
            max_uncertified_fraction: 0.01,
            oracle: false,
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn with_oracle(mut self, oracle: bool) -> Self {
        self.oracle = oracle;
        self
    }
}

/// Resolves the worker count: explicit value, then the environment, then
/// the number of available cores.
pub fn resolve_threads(threads: usize) -> usize {
    if threads > 0 {
        return threads;
    }
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `f` for every trial index on a dedicated pool; output is in trial order.
pub fn run_trials<T, F>(trials: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_threads(threads))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| (0..trials).into_par_iter().map(&f).collect())
}

/// Domain D ⊂ M for local averages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    Whole,
    /// Open spherical cap {x : angle(x, axis) < radius}.
    Cap { axis: [f64; 3], radius: f64 },
    /// Half-open rectangle [x₀, x₁) × [y₀, y₁) in torus coordinates.
    Rect { x: [f64; 2], y: [f64; 2] },
}

impl Region {
    /// Checks compatibility with the model and returns vol D.
    pub fn volume(&self, model: &ManifoldModel) -> Result<f64> {
        let vol = match (self, model.kind()) {
            (Region::Whole, _) => model.volume(),
            (Region::Cap { axis, radius }, ModelKind::Sphere2) => {
                let n = dot3(axis, axis).sqrt();
                if !(n > 0.0) || !(*radius > 0.0 && *radius <= PI) {
                    return Err(Error::InvalidArgument(format!("invalid cap {self:?}")));
                }
                2.0 * PI * (1.0 - radius.cos())
            }
            (Region::Rect { x, y }, ModelKind::FlatTorus2) => {
                let [p1, p2] = model.periods().unwrap();
                if !(0.0 <= x[0] && x[0] < x[1] && x[1] <= p1 && 0.0 <= y[0] && y[0] < y[1] && y[1] <= p2) {
                    return Err(Error::InvalidArgument(format!(
                        "rectangle {self:?} must lie inside [0, {p1}] x [0, {p2}]"
                    )));
                }
                (x[1] - x[0]) * (y[1] - y[0])
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "region {self:?} does not apply to {:?}",
                    model.kind()
                )))
            }
        };
        if !(vol > 0.0 && vol <= model.volume() * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!("region volume {vol} out of range")));
        }
        Ok(vol)
    }

    pub fn contains(&self, p: &Point) -> bool {
        match (self, p) {
            (Region::Whole, _) => true,
            (Region::Cap { axis, radius }, Point::Sphere(q)) => {
                let n = dot3(axis, axis).sqrt();
                let c = (dot3(axis, q) / n).clamp(-1.0, 1.0);
                c.acos() < *radius
            }
            (Region::Rect { x, y }, Point::Torus([a, b])) => x[0] <= *a && *a < x[1] && y[0] <= *b && *b < y[1],
            _ => false,
        }
    }
}

#[derive(Serialize)]
struct Provenance<'a> {
    kind: &'a str,
    basis: crate::models::BasisSpec,
    isotropy_irreducible: bool,
    region: Option<&'a Region>,
    k: Option<usize>,
    opts: &'a RunOptions,
}

fn provenance_hash(kind: &str, basis: &EigenBasis, region: Option<&Region>, k: Option<usize>, opts: &RunOptions) -> String {
    config_hash(&Provenance {
        kind,
        basis: basis.spec(),
        isotropy_irreducible: basis.model().is_isotropy_irreducible(),
        region,
        k,
        opts,
    })
}

fn check_uncertified(records: &[TrialRecord], opts: &RunOptions) -> Result<()> {
    let unc = records.iter().filter(|r| r.status == TrialStatus::Uncertified).count();
    if unc as f64 > opts.max_uncertified_fraction * records.len() as f64 {
        return Err(Error::TooManyUncertified {
            uncertified: unc,
            trials: records.len(),
            limit: 100.0 * opts.max_uncertified_fraction,
        });
    }
    Ok(())
}

fn zero_trials(basis: &EigenBasis, region: &Region, opts: &RunOptions) -> Result<Vec<TrialRecord>> {
    let n = basis.n();
    let use_oracle = opts.oracle && basis.is_torus_product();
    run_trials(opts.trials, opts.threads, |t| {
        let mut rng = trial_rng(opts.seed, t as u64);
        let frame = sample_subspace(basis, n, &mut rng)?;
        let zs = count_zeros_newton(&frame, basis, &opts.zeros)?;
        let inside = zs.points.iter().filter(|p| region.contains(p)).count();
        let oracle = if use_oracle {
            Some(match torus_reduction_oracle(&frame, basis) {
                Ok(o) if o.transversal => o.points.iter().filter(|p| region.contains(p)).count() as f64,
                _ => f64::NAN,
            })
        } else {
            None
        };
        Ok(TrialRecord {
            trial: t,
            status: if zs.certified { TrialStatus::Certified } else { TrialStatus::Uncertified },
            value: inside as f64,
            oracle,
            grid_warning: zs.grid_too_coarse,
        })
    })
}

/// Mean number of common zeros of n random elements of H.
pub fn run_zero_average(basis: &EigenBasis, opts: &RunOptions) -> Result<ExperimentReport> {
    run_region_average(basis, &Region::Whole, opts, "zeros")
}

/// Mean number of common zeros lying in the domain D.
pub fn run_local_average(basis: &EigenBasis, region: &Region, opts: &RunOptions) -> Result<ExperimentReport> {
    run_region_average(basis, region, opts, "local")
}

fn run_region_average(basis: &EigenBasis, region: &Region, opts: &RunOptions, kind: &'static str) -> Result<ExperimentReport> {
    let start = Instant::now();
    validate_trials(opts)?;
    let vol = region.volume(basis.model())?;
    let spec = beta_spectrum_default(basis)?;
    let theory = predicted_from_spectrum(basis, &spec, vol)?;
    let bound = weyl_bound_for_volume(basis, vol);
    let records = zero_trials(basis, region, opts)?;
    check_uncertified(&records, opts)?;
    Ok(ExperimentReport::build(ReportInput {
        kind,
        basis: basis.label(),
        theory,
        bound,
        slack: 0.0,
        lambda: Some(basis.lambda()),
        n_dim: basis.dim(),
        betas: spec.betas,
        seed: opts.seed,
        config_hash: provenance_hash(kind, basis, Some(region), None, opts),
        per_trial: records,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }))
}

/// Mean (n−k)-volume of the common zero set of k random elements (k = 1 on S²).
///
/// The comparison band is widened by the mesh convergence tolerance times
/// the theoretical value, since each length carries that discretization error.
pub fn run_nodal_average(basis: &EigenBasis, k: usize, opts: &RunOptions) -> Result<ExperimentReport> {
    let start = Instant::now();
    validate_trials(opts)?;
    if k != 1 || basis.model().kind() != ModelKind::Sphere2 {
        return Err(Error::InvalidArgument("nodal averages are implemented for k = 1 on S²".into()));
    }
    let theory = predicted_nodal_volume(basis, k)?;
    let spec = beta_spectrum_default(basis)?;
    let mesher = NodalMesher::new(basis, opts.nodal.clone())?;
    let records = run_trials(opts.trials, opts.threads, |t| {
        let mut rng = trial_rng(opts.seed, t as u64);
        let frame = sample_subspace(basis, k, &mut rng)?;
        Ok(match mesher.length(&frame.column(0)) {
            Ok(len) => TrialRecord {
                trial: t,
                status: TrialStatus::Certified,
                value: len.length,
                oracle: None,
                grid_warning: false,
            },
            Err(Error::NonConvergent { .. }) => TrialRecord {
                trial: t,
                status: TrialStatus::Uncertified,
                value: f64::NAN,
                oracle: None,
                grid_warning: true,
            },
            Err(e) => return Err(e),
        })
    })?;
    check_uncertified(&records, opts)?;
    Ok(ExperimentReport::build(ReportInput {
        kind: "nodal",
        basis: basis.label(),
        theory,
        bound: theory,
        slack: opts.nodal.rel_tol * theory,
        lambda: Some(basis.lambda()),
        n_dim: basis.dim(),
        betas: spec.betas,
        seed: opts.seed,
        config_hash: provenance_hash("nodal", basis, None, Some(k), opts),
        per_trial: records,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }))
}

/// Zero average for a basis whose zero sets are expected to be empty or
/// positive-dimensional. Positive-dimensional trials are counted separately;
/// any isolated zero fails the run.
pub fn run_degenerate_average(basis: &EigenBasis, opts: &RunOptions) -> Result<ExperimentReport> {
    let start = Instant::now();
    validate_trials(opts)?;
    let n = basis.n();
    let records = run_trials(opts.trials, opts.threads, |t| {
        let mut rng = trial_rng(opts.seed, t as u64);
        let frame = sample_subspace(basis, n, &mut rng)?;
        match count_zeros_degenerate_check(&frame, basis, &opts.zeros)? {
            ZeroClassification::Infinite { .. } => Ok(TrialRecord {
                trial: t,
                status: TrialStatus::Infinite,
                value: f64::INFINITY,
                oracle: None,
                grid_warning: false,
            }),
            ZeroClassification::Finite(zs) if zs.count == 0 => Ok(TrialRecord {
                trial: t,
                status: TrialStatus::Certified,
                value: 0.0,
                oracle: None,
                grid_warning: false,
            }),
            ZeroClassification::Finite(zs) => Err(Error::DegenerateNonzero { trial: t, count: zs.count }),
        }
    })?;
    let betas = beta_spectrum_default(basis).map(|s| s.betas).unwrap_or_default();
    Ok(ExperimentReport::build(ReportInput {
        kind: "degenerate",
        basis: basis.label(),
        theory: 0.0,
        bound: weyl_bound_for_volume(basis, basis.model().volume()),
        slack: 0.0,
        lambda: Some(basis.lambda()),
        n_dim: basis.dim(),
        betas,
        seed: opts.seed,
        config_hash: provenance_hash("degenerate", basis, None, None, opts),
        per_trial: records,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }))
}

/// Fails the run when a generic basis produced positive-dimensional zero sets.
pub fn reject_infinite(report: &ExperimentReport) -> Result<()> {
    match report.per_trial.iter().find(|t| t.status == TrialStatus::Infinite) {
        Some(t) => Err(Error::UnexpectedInfinite { trial: t.trial }),
        None => Ok(()),
    }
}

fn validate_trials(opts: &RunOptions) -> Result<()> {
    if opts.trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    opts.zeros.validate()
}
