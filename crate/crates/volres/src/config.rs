//! Run configuration: versioned JSON schema with strict key checking.

use crate::error::{Error, Result};
use crate::geometry::{load_voxels, make_ball, make_box, DiscreteDomain};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainConfig {
    Ball {
        radius: f64,
        resolution: usize,
    },
    Box {
        extents: [f64; 3],
        resolution: usize,
    },
    Voxel {
        path: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Contrast of the sweep scenario.
    #[serde(default = "default_sweep_epsilon")]
    pub epsilon: f64,
    /// Grid spans [lo_factor, hi_factor] / lambda_1.
    #[serde(default = "default_lo_factor")]
    pub lo_factor: f64,
    #[serde(default = "default_hi_factor")]
    pub hi_factor: f64,
    #[serde(default = "default_sweep_points")]
    pub points: usize,
    #[serde(default = "default_source")]
    pub source: [f64; 3],
    #[serde(default = "default_observation")]
    pub observation: [f64; 3],
}

fn default_sweep_epsilon() -> f64 {
    0.05
}
fn default_lo_factor() -> f64 {
    0.5
}
fn default_hi_factor() -> f64 {
    1.5
}
fn default_sweep_points() -> usize {
    200
}
fn default_source() -> [f64; 3] {
    [3.0, 0.0, 0.0]
}
fn default_observation() -> [f64; 3] {
    [0.0, 2.5, 0.0]
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            epsilon: default_sweep_epsilon(),
            lo_factor: default_lo_factor(),
            hi_factor: default_hi_factor(),
            points: default_sweep_points(),
            source: default_source(),
            observation: default_observation(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourConfig {
    #[serde(default = "default_n_quad")]
    pub n_quad: usize,
    #[serde(default = "default_max_rank")]
    pub max_rank: usize,
    /// Circle radius as a fraction of the seed wavenumber.
    #[serde(default = "default_radius_factor")]
    pub radius_factor: f64,
}

fn default_n_quad() -> usize {
    32
}
fn default_max_rank() -> usize {
    6
}
fn default_radius_factor() -> f64 {
    0.08
}

impl Default for ContourConfig {
    fn default() -> Self {
        ContourConfig {
            n_quad: default_n_quad(),
            max_rank: default_max_rank(),
            radius_factor: default_radius_factor(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_l_max")]
    pub l_max: u32,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
}

fn default_l_max() -> u32 {
    6
}
fn default_n_max() -> u32 {
    4
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            l_max: default_l_max(),
            n_max: default_n_max(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub domain: DomainConfig,
    /// Contrast values for the resonance pipeline.
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    /// Resolutions of the spectrum convergence study (ball/box domains).
    #[serde(default)]
    pub resolutions: Vec<usize>,
    /// Localization trust radius; defaults to 1.2 / lambda_1 of the mesh.
    #[serde(default)]
    pub r: Option<f64>,
    /// Cluster index driving the expansion fit.
    #[serde(default)]
    pub cluster: usize,
    #[serde(default = "default_cluster_tol")]
    pub cluster_tol: f64,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub contour: ContourConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    /// Quasi-random sample count of the inverse-norm bound check.
    #[serde(default = "default_bound_samples")]
    pub bound_samples: usize,
    /// Seed offsetting the quasi-random sampling.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    /// Worker threads; 0 keeps the default pool.
    #[serde(default)]
    pub threads: usize,
    /// Cached resonance CSV consumed by the localize command.
    #[serde(default)]
    pub resonances_csv: Option<String>,
}

fn default_epsilons() -> Vec<f64> {
    vec![0.01, 0.02, 0.04]
}
fn default_cluster_tol() -> f64 {
    crate::spectrum::DEFAULT_CLUSTER_TOL
}
fn default_bound_samples() -> usize {
    200
}
fn default_out_dir() -> String {
    "out".into()
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_json_str(&text)
    }

    /// Checks every module precondition before any assembly starts.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        match &self.domain {
            DomainConfig::Ball { radius, resolution } => {
                if !(*radius > 0.0) {
                    return Err(Error::Config("ball radius must be positive".into()));
                }
                if *resolution < 4 {
                    return Err(Error::Config("ball resolution must be >= 4".into()));
                }
            }
            DomainConfig::Box {
                extents,
                resolution,
            } => {
                if extents.iter().any(|e| !(*e > 0.0)) {
                    return Err(Error::Config("box extents must be positive".into()));
                }
                if *resolution == 0 {
                    return Err(Error::Config("box resolution must be positive".into()));
                }
            }
            DomainConfig::Voxel { path } => {
                if path.is_empty() {
                    return Err(Error::Config("voxel path is empty".into()));
                }
            }
        }
        for &e in &self.epsilons {
            if !(0.0..1.0).contains(&e) {
                return Err(Error::Config(format!("epsilon {e} outside [0, 1)")));
            }
        }
        for &r in &self.resolutions {
            if r < 4 {
                return Err(Error::Config(format!("resolution {r} below 4")));
            }
        }
        if let Some(r) = self.r {
            if !(r > 0.0) {
                return Err(Error::Config("r must be positive".into()));
            }
        }
        if !(self.cluster_tol > 0.0 && self.cluster_tol < 0.1) {
            return Err(Error::Config(format!(
                "cluster_tol {} outside (0, 0.1)",
                self.cluster_tol
            )));
        }
        if !(self.sweep.epsilon > 0.0 && self.sweep.epsilon <= 1.0) {
            return Err(Error::Config("sweep epsilon outside (0, 1]".into()));
        }
        if self.sweep.points == 0 {
            return Err(Error::Config("sweep needs at least one point".into()));
        }
        if !(self.sweep.lo_factor > 0.0) || self.sweep.hi_factor < self.sweep.lo_factor {
            return Err(Error::Config(
                "sweep factors must satisfy 0 < lo <= hi".into(),
            ));
        }
        if self.contour.n_quad < 32 {
            return Err(Error::Config("contour n_quad must be >= 32".into()));
        }
        if self.contour.max_rank == 0 || !(self.contour.radius_factor > 0.0) {
            return Err(Error::Config("invalid contour settings".into()));
        }
        if self.oracle.l_max > 20 || self.oracle.n_max > 20 {
            return Err(Error::Config("oracle indices capped at 20".into()));
        }
        if self.bound_samples == 0 {
            return Err(Error::Config("bound_samples must be positive".into()));
        }
        Ok(())
    }

    pub fn build_domain(&self) -> Result<DiscreteDomain> {
        match &self.domain {
            DomainConfig::Ball { radius, resolution } => make_ball(*radius, *resolution),
            DomainConfig::Box {
                extents,
                resolution,
            } => make_box(*extents, *resolution),
            DomainConfig::Voxel { path } => load_voxels(path),
        }
    }

    /// Rebuilds the domain at another resolution (convergence studies).
    pub fn build_domain_at(&self, resolution: usize) -> Result<DiscreteDomain> {
        match &self.domain {
            DomainConfig::Ball { radius, .. } => make_ball(*radius, resolution),
            DomainConfig::Box { extents, .. } => make_box(*extents, resolution),
            DomainConfig::Voxel { path } => load_voxels(path),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema": 1,
        "domain": {"kind": "ball", "radius": 1.0, "resolution": 8}
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = RunConfig::from_json_str(MINIMAL).unwrap();
        assert_eq!(cfg.epsilons, vec![0.01, 0.02, 0.04]);
        assert_eq!(cfg.bound_samples, 200);
        assert_eq!(cfg.contour.n_quad, 32);
        assert!(cfg.build_domain().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{
            "schema": 1,
            "domain": {"kind": "ball", "radius": 1.0, "resolution": 8},
            "bogus": 3
        }"#;
        assert!(RunConfig::from_json_str(bad).is_err());
        let bad_nested = r#"{
            "schema": 1,
            "domain": {"kind": "ball", "radius": 1.0, "resolution": 8, "extra": 1}
        }"#;
        assert!(RunConfig::from_json_str(bad_nested).is_err());
    }

    #[test]
    fn schema_and_precondition_violations() {
        let wrong_schema = MINIMAL.replace("\"schema\": 1", "\"schema\": 2");
        assert!(RunConfig::from_json_str(&wrong_schema).is_err());
        let bad_res = MINIMAL.replace("\"resolution\": 8", "\"resolution\": 3");
        assert!(RunConfig::from_json_str(&bad_res).is_err());
        let bad_eps = r#"{
            "schema": 1,
            "domain": {"kind": "ball", "radius": 1.0, "resolution": 8},
            "epsilons": [1.5]
        }"#;
        assert!(RunConfig::from_json_str(bad_eps).is_err());
        assert!(RunConfig::from_json_str("{not json").is_err());
    }
}
