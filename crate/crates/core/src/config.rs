//! Experiment configuration files (TOML) and their execution.
//!
//! ```toml
//! kind = "zeros"
//! seed = 7
//! trials = 2000
//!
//! [model]
//! kind = "torus"
//! a = 2.0
//!
//! [basis]
//! frequency = [1, 1]
//! ```
//!
//! Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::averaging::{run_degenerate_average, run_local_average, run_nodal_average, run_zero_average, reject_infinite, resolve_threads, Region, RunOptions};
use crate::crofton::{crofton_average, embed_image_mesh, equatorial_sphere_mesh, great_circle_mesh, small_circle_mesh, spiral_mesh, SphericalMesh};
use crate::error::{Error, Result};
use crate::identities::{embed_check, verify_identities, EmbedCheck, IdentityReport};
use crate::models::{BasisSpec, EigenBasis, EigenspacePolicy, ManifoldModel, ModelKind};
use crate::nodal::NodalOptions;
use crate::report::ExperimentReport;
use crate::zeros::ZeroOptions;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Zeros,
    Local,
    Nodal,
    Degenerate,
    Crofton,
    Verify,
    Embed,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: Option<ModelKind>,
    pub periods: Option<[f64; 2]>,
    /// Torus with periods (2π, 2π/a).
    pub a: Option<f64>,
    /// Overrides the trusted isotropy flag of the model.
    pub isotropy_irreducible: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub l: Option<usize>,
    pub frequency: Option<[i64; 2]>,
    /// Zero-based restriction to a sub-basis.
    pub indices: Option<Vec<usize>>,
    pub policy: Option<EigenspacePolicy>,
}

/// Built-in test meshes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshGenerator {
    GreatCircle { segments: usize },
    SmallCircle { alpha: f64, segments: usize },
    Spiral { turns: f64, segments: usize },
    EquatorialSphere { ambient: usize, level: usize },
    /// Image of the configured torus basis in S³.
    TorusImage { resolution: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub file: Option<PathBuf>,
    pub generator: Option<MeshGenerator>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kind: ExperimentKind,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub threads: Option<usize>,
    /// Codimension for nodal experiments.
    pub k: Option<usize>,
    #[serde(default)]
    pub oracle: bool,
    pub max_uncertified_fraction: Option<f64>,
    #[serde(default)]
    pub zeros: ZeroOptions,
    #[serde(default)]
    pub nodal: NodalOptions,
    pub region: Option<Region>,
    pub mesh: Option<MeshConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Result of running one configured experiment.
#[derive(Clone, Debug)]
pub enum Outcome {
    Report(Box<ExperimentReport>),
    Identities(IdentityReport),
    Embed(EmbedCheck),
}

impl Outcome {
    pub fn to_json(&self) -> String {
        match self {
            Outcome::Report(r) => r.to_json(),
            Outcome::Identities(r) => serde_json::to_string_pretty(r).expect("serializes"),
            Outcome::Embed(r) => serde_json::to_string_pretty(r).expect("serializes"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn model(&self) -> Result<ManifoldModel> {
        let m = &self.model;
        let kind = m.kind.ok_or_else(|| Error::Config("model.kind is required".into()))?;
        let model = match kind {
            ModelKind::Circle | ModelKind::Sphere2 => {
                if m.periods.is_some() || m.a.is_some() {
                    return Err(Error::Config("model.periods and model.a only apply to the torus".into()));
                }
                if kind == ModelKind::Circle {
                    ManifoldModel::circle()
                } else {
                    ManifoldModel::sphere2()
                }
            }
            ModelKind::FlatTorus2 => match (m.periods, m.a) {
                (Some(p), None) => ManifoldModel::flat_torus(p[0], p[1])?,
                (None, Some(a)) => ManifoldModel::flat_torus_a(a)?,
                (None, None) => ManifoldModel::flat_torus_a(1.0)?,
                (Some(_), Some(_)) => {
                    return Err(Error::Config("give either model.periods or model.a, not both".into()))
                }
            },
        };
        Ok(match m.isotropy_irreducible {
            Some(flag) => model.with_isotropy_irreducible(flag),
            None => model,
        })
    }

    pub fn basis(&self) -> Result<EigenBasis> {
        let model = self.model()?;
        let b = &self.basis;
        match model.kind() {
            ModelKind::FlatTorus2 if b.l.is_some() => {
                return Err(Error::Config("basis.l does not apply to the torus; use basis.frequency".into()))
            }
            ModelKind::Circle | ModelKind::Sphere2 if b.frequency.is_some() || b.policy.is_some() => {
                return Err(Error::Config("basis.frequency and basis.policy only apply to the torus".into()))
            }
            _ => {}
        }
        let spec = BasisSpec {
            model: model.kind(),
            periods: model.periods(),
            l: b.l,
            frequency: b.frequency,
            indices: b.indices.clone(),
            policy: b.policy.unwrap_or_default(),
        };
        EigenBasis::from_spec(&spec)?.with_model(model)
    }

    pub fn run_options(&self) -> Result<RunOptions> {
        let trials = self.trials.ok_or_else(|| Error::Config("trials is required".into()))?;
        let seed = self.seed.ok_or_else(|| Error::Config("seed is required".into()))?;
        let mut opts = RunOptions::new(trials, seed)
            .with_threads(self.threads.unwrap_or(0))
            .with_oracle(self.oracle);
        opts.zeros = self.zeros.clone();
        opts.nodal = self.nodal.clone();
        if let Some(f) = self.max_uncertified_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config("max_uncertified_fraction must lie in [0, 1]".into()));
            }
            opts.max_uncertified_fraction = f;
        }
        opts.zeros.validate()?;
        if self.kind == ExperimentKind::Nodal {
            opts.nodal.validate()?;
        }
        Ok(opts)
    }

    pub fn mesh(&self) -> Result<SphericalMesh> {
        let cfg = self
            .mesh
            .as_ref()
            .ok_or_else(|| Error::Config("crofton experiments need a [mesh] table".into()))?;
        match (&cfg.file, &cfg.generator) {
            (Some(path), None) => SphericalMesh::read(path),
            (None, Some(g)) => match g {
                MeshGenerator::GreatCircle { segments } => great_circle_mesh(*segments),
                MeshGenerator::SmallCircle { alpha, segments } => small_circle_mesh(*alpha, *segments),
                MeshGenerator::Spiral { turns, segments } => spiral_mesh(*turns, *segments),
                MeshGenerator::EquatorialSphere { ambient, level } => equatorial_sphere_mesh(*ambient, *level),
                MeshGenerator::TorusImage { resolution } => embed_image_mesh(&self.basis()?, *resolution),
            },
            _ => Err(Error::Config("mesh needs exactly one of mesh.file and mesh.generator".into())),
        }
    }

    /// Recovers the config embedded in a report written by [`Self::run`].
    pub fn from_report_json(text: &str) -> Result<Self> {
        let mut v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = v
            .get_mut("config")
            .map(serde_json::Value::take)
            .ok_or_else(|| Error::Config("report has no embedded config".into()))?;
        serde_json::from_value(cfg).map_err(|e| Error::Config(e.to_string()))
    }

    /// Runs the configured experiment. Nothing is written to disk.
    pub fn run(&self) -> Result<Outcome> {
        let mut outcome = self.run_inner()?;
        if let Outcome::Report(r) = &mut outcome {
            let mut embedded = self.clone();
            embedded.threads = None;
            embedded.output = OutputConfig::default();
            r.config = Some(serde_json::to_value(&embedded).map_err(|e| Error::Config(e.to_string()))?);
        }
        Ok(outcome)
    }

    fn run_inner(&self) -> Result<Outcome> {
        match self.kind {
            ExperimentKind::Verify => Ok(Outcome::Identities(verify_identities(&self.basis()?))),
            ExperimentKind::Embed => Ok(Outcome::Embed(embed_check(&self.basis()?)?)),
            ExperimentKind::Crofton => {
                let opts = self.run_options()?;
                let mesh = self.mesh()?;
                let r = crofton_average(&mesh, opts.trials, opts.seed, resolve_threads(opts.threads))?;
                Ok(Outcome::Report(Box::new(r)))
            }
            kind => {
                let basis = self.basis()?;
                let opts = self.run_options()?;
                let region = self.region.clone().unwrap_or(Region::Whole);
                if kind != ExperimentKind::Local && region != Region::Whole {
                    return Err(Error::Config("region only applies to local experiments".into()));
                }
                let report = match kind {
                    ExperimentKind::Zeros => run_zero_average(&basis, &opts)?,
                    ExperimentKind::Local => run_local_average(&basis, &region, &opts)?,
                    ExperimentKind::Nodal => run_nodal_average(&basis, self.k.unwrap_or(1), &opts)?,
                    ExperimentKind::Degenerate => run_degenerate_average(&basis, &opts)?,
                    _ => unreachable!(),
                };
                if kind != ExperimentKind::Degenerate {
                    reject_infinite(&report)?;
                }
                Ok(Outcome::Report(Box::new(report)))
            }
        }
    }

    /// Writes the configured JSON and CSV outputs for an outcome.
    pub fn write_outputs(&self, outcome: &Outcome) -> Result<()> {
        if let Some(path) = &self.output.json {
            std::fs::write(path, outcome.to_json() + "\n")?;
        }
        if let Some(path) = &self.output.csv {
            match outcome {
                Outcome::Report(r) => r.write_csv(std::fs::File::create(path)?)?,
                _ => return Err(Error::Config("per-trial CSV is only produced by averaging experiments".into())),
            }
        }
        Ok(())
    }
}

/// Parses a region given on the command line: `whole`, `hemisphere`,
/// `cap:ax,ay,az,radius` or `rect:x0,x1,y0,y1`.
pub fn parse_region(text: &str) -> Result<Region> {
    let bad = || Error::Config(format!("cannot parse region `{text}`"));
    let (name, rest) = text.split_once(':').unwrap_or((text, ""));
    let nums: Vec<f64> = if rest.is_empty() {
        Vec::new()
    } else {
        rest.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    match (name.trim(), nums.as_slice()) {
        ("whole", []) => Ok(Region::Whole),
        ("hemisphere", []) => Ok(Region::Cap {
            axis: [0.0, 0.0, 1.0],
            radius: std::f64::consts::FRAC_PI_2,
        }),
        ("cap", [x, y, z, r]) => Ok(Region::Cap {
            axis: [*x, *y, *z],
            radius: *r,
        }),
        ("rect", [x0, x1, y0, y1]) => Ok(Region::Rect {
            x: [*x0, *x1],
            y: [*y0, *y1],
        }),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn parses_torus_config() {
        let c = ExperimentConfig::from_toml_str(
            r#"
            kind = "zeros"
            seed = 3
            trials = 10
            [model]
            kind = "torus"
            a = 2.0
            [basis]
            frequency = [1, 1]
            [zeros]
            grid_per_wavelength = 10.0
            "#,
        )
        .unwrap();
        let b = c.basis().unwrap();
        assert!((b.lambda() - 5.0).abs() < 1e-12);
        assert_eq!(b.model().periods().unwrap(), [2.0 * PI, PI]);
        assert_eq!(c.run_options().unwrap().zeros.grid_per_wavelength, 10.0);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(ExperimentConfig::from_toml_str("sed = 3").is_err());
        assert!(ExperimentConfig::from_toml_str("[model]\nkind = \"circle\"\nradius = 2").is_err());
        assert!(ExperimentConfig::from_toml_str("[zeros]\ngrid = 3").is_err());
        assert!(ExperimentConfig::from_toml_str("kind = \"bogus\"").is_err());
    }

    #[test]
    fn rejects_inconsistent_model() {
        let c = ExperimentConfig::from_toml_str("[model]\nkind = \"sphere2\"\na = 2.0\n[basis]\nl = 1").unwrap();
        assert!(c.basis().is_err());
        let c = ExperimentConfig::from_toml_str("[model]\nkind = \"torus\"\n[basis]\nl = 1").unwrap();
        assert!(c.basis().is_err());
        let c = ExperimentConfig::from_toml_str("[basis]\nl = 1").unwrap();
        assert!(c.basis().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::from_toml_str(
            "kind = \"local\"\nseed = 1\ntrials = 5\n[model]\nkind = \"sphere2\"\n[basis]\nl = 2\n[region]\nkind = \"cap\"\naxis = [0.0, 0.0, 1.0]\nradius = 1.0\n",
        )
        .unwrap();
        let back = ExperimentConfig::from_toml_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn region_syntax() {
        assert_eq!(parse_region("whole").unwrap(), Region::Whole);
        assert!(matches!(parse_region("hemisphere").unwrap(), Region::Cap { .. }));
        assert_eq!(
            parse_region("rect:0,3,0,1.5").unwrap(),
            Region::Rect { x: [0.0, 3.0], y: [0.0, 1.5] }
        );
        assert!(parse_region("rect:0,1").is_err());
        assert!(parse_region("blob").is_err());
    }

    #[test]
    fn circle_run() {
        let c = ExperimentConfig::from_toml_str("seed = 1\ntrials = 20\n[model]\nkind = \"circle\"\n[basis]\nl = 5").unwrap();
        let Outcome::Report(r) = c.run().unwrap() else { panic!() };
        assert_eq!(r.estimate, 10.0);
        assert_eq!(r.stderr, 0.0);
    }
}
