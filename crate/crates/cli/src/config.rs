//! The run configuration file.
//!
//! Every section is optional and falls back to the reference experiment;
//! unknown keys are rejected. Relative input paths are resolved against the
//! directory holding the configuration file; the output directory is taken
//! relative to the working directory.

use std::fs;
use std::path::{Path, PathBuf};

use gsc_core::deployment::{Solver, Weights, DEFAULT_PENALTY_HOPS};
use gsc_core::geometry::{bundled_sites, IslPattern};
use gsc_core::io::{parse_deployment_plan, parse_sites};
use gsc_core::scenario::ExperimentConfig;
use gsc_core::{ConstellationSpec, DiscretizationConfig, VisibilityRules};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub constellation: ConstellationSection,
    pub visibility: VisibilitySection,
    pub discretization: DiscretizationSection,
    pub kb_catalog: CatalogSection,
    pub compression: CompressionSection,
    pub workload: WorkloadSection,
    pub deployment: DeploymentSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstellationSection {
    pub planes: u32,
    pub sats_per_plane: u32,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub phasing: u32,
    pub ai_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisibilitySection {
    pub elevation_mask_deg: f64,
    pub sampling_step_s: f64,
    pub isl_rate_mbps: [f64; 2],
    pub isl_delay_ms: [f64; 2],
    pub sgl_rate_mbps: [f64; 2],
    pub sgl_delay_ms: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizationSection {
    /// Minimum service duration λ in seconds.
    pub min_duration_s: f64,
    pub window_count: usize,
    /// Overrides `window_count * min_duration_s`.
    pub horizon_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogSection {
    pub labels: Vec<String>,
    /// Model slots per AI satellite.
    pub ai_slots: u32,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressionSection {
    /// Ratios drawn uniformly per application.
    pub ratios: Vec<f64>,
    pub encode_latency_ms: f64,
    pub decode_latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSection {
    pub app_count: usize,
    pub rate_mbps: [f64; 2],
    /// Probabilities of cases 1 to 4.
    pub case_probabilities: [f64; 4],
    /// Site table (`name,latitude_deg,longitude_deg`); the bundled ten
    /// sites when absent.
    pub sites: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeploymentSection {
    pub solver: String,
    pub delay_bound_ms: f64,
    pub penalty_hops: f64,
    pub bandwidth_weight: f64,
    pub delay_weight: f64,
    /// Extra model assignments applied before simulating or routing.
    pub plan: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            constellation: ConstellationSection::default(),
            visibility: VisibilitySection::default(),
            discretization: DiscretizationSection::default(),
            kb_catalog: CatalogSection::default(),
            compression: CompressionSection::default(),
            workload: WorkloadSection::default(),
            deployment: DeploymentSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl Default for ConstellationSection {
    fn default() -> Self {
        let c = ExperimentConfig::reference().constellation;
        Self {
            planes: c.planes,
            sats_per_plane: c.sats_per_plane,
            altitude_km: c.altitude_km,
            inclination_deg: c.inclination_deg,
            phasing: c.phasing,
            ai_fraction: c.ai_fraction,
        }
    }
}

impl Default for VisibilitySection {
    fn default() -> Self {
        let v = VisibilityRules::default();
        Self {
            elevation_mask_deg: v.elevation_mask_deg,
            sampling_step_s: v.sampling_step_s,
            isl_rate_mbps: v.isl_rate_mbps.into(),
            isl_delay_ms: v.isl_delay_ms.into(),
            sgl_rate_mbps: v.sgl_rate_mbps.into(),
            sgl_delay_ms: v.sgl_delay_ms.into(),
        }
    }
}

impl Default for DiscretizationSection {
    fn default() -> Self {
        let r = ExperimentConfig::reference();
        Self {
            min_duration_s: r.discretization.min_duration_s,
            window_count: r.window_count,
            horizon_s: r.horizon_s,
        }
    }
}

impl Default for CatalogSection {
    fn default() -> Self {
        let r = ExperimentConfig::reference();
        Self {
            labels: (0..r.kb_count).map(|k| format!("kb{k}")).collect(),
            ai_slots: r.ai_slots,
        }
    }
}

impl Default for CompressionSection {
    fn default() -> Self {
        let r = ExperimentConfig::reference();
        Self {
            ratios: r.ratio_choices,
            encode_latency_ms: r.encode_latency_ms,
            decode_latency_ms: r.decode_latency_ms,
        }
    }
}

impl Default for WorkloadSection {
    fn default() -> Self {
        let r = ExperimentConfig::reference();
        Self {
            app_count: r.app_count,
            rate_mbps: r.rate_range_mbps.into(),
            case_probabilities: r.case_probabilities,
            sites: None,
        }
    }
}

impl Default for DeploymentSection {
    fn default() -> Self {
        let w = Weights::default();
        Self {
            solver: Solver::Greedy.to_string(),
            delay_bound_ms: 1000.0,
            penalty_hops: DEFAULT_PENALTY_HOPS,
            bandwidth_weight: w.bandwidth,
            delay_weight: w.delay,
            plan: None,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Reads and validates a configuration file, resolving relative paths.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.check()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.workload.sites.as_mut() {
            fix(p);
        }
        if let Some(p) = self.deployment.plan.as_mut() {
            fix(p);
        }
    }

    /// Validates values and checks that referenced input files exist.
    pub fn check(&self) -> Result<(), CliError> {
        for p in [&self.workload.sites, &self.deployment.plan]
            .into_iter()
            .flatten()
        {
            if !p.is_file() {
                return Err(CliError::Usage(format!(
                    "referenced file {} not found",
                    p.display()
                )));
            }
        }
        self.solver()?;
        let d = &self.deployment;
        if !(d.delay_bound_ms > 0.0) || !(d.penalty_hops >= 0.0) {
            return Err(CliError::Usage(
                "deployment delay bound must be positive and penalty non-negative".into(),
            ));
        }
        if !(d.bandwidth_weight >= 0.0 && d.delay_weight >= 0.0) {
            return Err(CliError::Usage("deployment weights must be non-negative".into()));
        }
        self.experiment()?.validate().map_err(CliError::usage)?;
        Ok(())
    }

    pub fn solver(&self) -> Result<Solver, CliError> {
        self.deployment.solver.parse().map_err(CliError::usage)
    }

    pub fn weights(&self) -> Weights {
        Weights {
            bandwidth: self.deployment.bandwidth_weight,
            delay: self.deployment.delay_weight,
        }
    }

    pub fn sites(&self) -> Result<Vec<gsc_core::GroundSite>, CliError> {
        match &self.workload.sites {
            None => Ok(bundled_sites()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
                parse_sites(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn extra_plan(&self) -> Result<Option<gsc_core::deployment::DeploymentPlan>, CliError> {
        let Some(p) = &self.deployment.plan else {
            return Ok(None);
        };
        let text = fs::read_to_string(p)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
        parse_deployment_plan(&text)
            .map(Some)
            .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let c = &self.constellation;
        let v = &self.visibility;
        let d = &self.discretization;
        Ok(ExperimentConfig {
            seed: self.seed,
            constellation: ConstellationSpec {
                planes: c.planes,
                sats_per_plane: c.sats_per_plane,
                altitude_km: c.altitude_km,
                inclination_deg: c.inclination_deg,
                phasing: c.phasing,
                ai_fraction: c.ai_fraction,
            },
            visibility: VisibilityRules {
                elevation_mask_deg: v.elevation_mask_deg,
                sampling_step_s: v.sampling_step_s,
                isl_rate_mbps: v.isl_rate_mbps.into(),
                isl_delay_ms: v.isl_delay_ms.into(),
                sgl_rate_mbps: v.sgl_rate_mbps.into(),
                sgl_delay_ms: v.sgl_delay_ms.into(),
                isl_pattern: IslPattern::PlusGrid,
            },
            discretization: DiscretizationConfig {
                min_duration_s: d.min_duration_s,
            },
            kb_count: self.kb_catalog.labels.len(),
            ai_slots: self.kb_catalog.ai_slots,
            ratio_choices: self.compression.ratios.clone(),
            encode_latency_ms: self.compression.encode_latency_ms,
            decode_latency_ms: self.compression.decode_latency_ms,
            app_count: self.workload.app_count,
            rate_range_mbps: self.workload.rate_mbps.into(),
            case_probabilities: self.workload.case_probabilities,
            window_count: d.window_count,
            horizon_s: d.horizon_s,
            sites: self.sites()?,
        })
    }
}
