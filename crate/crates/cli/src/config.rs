//! Run configuration: a JSON document with `mesh`, `app` or `kernel`,
//! `device`, `design` and `run` sections. Unknown keys are rejected.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use stencilflow::apps::{self, RtmParams};
use stencilflow::explore::Constraints;
use stencilflow::{DesignPoint, MeshGeometry, PipelineSpec, ResourceProfile, StencilKernel, Tap};

/// Environment variable naming a device profile file that replaces the
/// config's `device` section.
pub const DEVICE_ENV: &str = "STENCILFLOW_DEVICE";

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub mesh: MeshConfig,
    #[serde(default)]
    pub app: Option<AppConfig>,
    #[serde(default)]
    pub kernel: Option<KernelConfig>,
    #[serde(default)]
    pub device: DeviceConfig,
    #[serde(default)]
    pub design: Option<DesignPoint>,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub dims: Vec<usize>,
    #[serde(default)]
    pub element_bytes: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
pub enum AppName {
    #[serde(rename = "poisson_2d")]
    Poisson2d,
    #[serde(rename = "jacobi_3d")]
    Jacobi3d,
    #[serde(rename = "rtm_forward")]
    RtmForward,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    pub name: AppName,
    /// Jacobi coefficients for `+x, -x, -y, centre, +y, +z, -z`.
    #[serde(default)]
    pub coefficients: Option<[f32; 7]>,
    /// RTM star: centre, then per axis the taps at `-1, +1, .., -4, +4`.
    #[serde(default)]
    pub star: Option<Vec<f32>>,
    #[serde(default)]
    pub rho_weight: Option<f32>,
    #[serde(default)]
    pub mu_weight: Option<f32>,
    #[serde(default)]
    pub dt: Option<f32>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TapConfig {
    pub offset: Vec<i32>,
    pub coeff: f32,
}

/// A single-stage kernel with constant coefficients.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub name: String,
    pub taps: Vec<TapConfig>,
    #[serde(default)]
    pub dsp_cost: Option<u32>,
    #[serde(default)]
    pub arity: Option<usize>,
}

/// A named base profile with optional per-field overrides.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    /// `u280` (DDR4, default) or `u280-hbm`.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub dsp_total: Option<u32>,
    #[serde(default)]
    pub onchip_mem_bytes: Option<u64>,
    #[serde(default)]
    pub channel_bw: Option<f64>,
    #[serde(default)]
    pub num_ports: Option<u32>,
    #[serde(default)]
    pub freq_hz: Option<f64>,
    #[serde(default)]
    pub dsp_util_cap: Option<f64>,
    #[serde(default)]
    pub mem_util_cap: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "one")]
    pub iterations: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub explore: Option<Constraints>,
}

fn one() -> u64 {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            iterations: 1,
            seed: None,
            explore: None,
        }
    }
}

impl DeviceConfig {
    pub fn resolve(&self) -> Result<ResourceProfile> {
        let mut p = match self.preset.as_deref() {
            None | Some("u280") => ResourceProfile::u280(),
            Some("u280-hbm") => ResourceProfile::u280_hbm(self.num_ports.unwrap_or(2)),
            Some(other) => bail!("unknown device preset {other:?} (expected u280 or u280-hbm)"),
        };
        if let Some(v) = self.dsp_total {
            p.dsp_total = v;
        }
        if let Some(v) = self.onchip_mem_bytes {
            p.onchip_mem_bytes = v;
        }
        if let Some(v) = self.channel_bw {
            p.channel_bw = v;
        }
        if let Some(v) = self.num_ports {
            p.num_ports = v;
        }
        if let Some(v) = self.freq_hz {
            p.freq_hz = v;
        }
        if let Some(v) = self.dsp_util_cap {
            p.dsp_util_cap = v;
        }
        if let Some(v) = self.mem_util_cap {
            p.mem_util_cap = v;
        }
        p.validate()?;
        Ok(p)
    }
}

/// Everything a command needs, resolved and validated.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub pipeline: PipelineSpec,
    pub geometry: MeshGeometry,
    pub profile: ResourceProfile,
    pub design: Option<DesignPoint>,
    pub run: RunConfig,
    pub warnings: Vec<String>,
}

impl Resolved {
    pub fn design(&self) -> Result<DesignPoint> {
        self.design
            .ok_or_else(|| anyhow!("config has no design section and the kernel has no default design"))
    }
}

pub fn load(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn device_from_env() -> Result<Option<DeviceConfig>> {
    let Some(path) = std::env::var_os(DEVICE_ENV) else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(&path).with_context(|| {
        format!(
            "reading device profile {} from {DEVICE_ENV}",
            Path::new(&path).display()
        )
    })?;
    Ok(Some(serde_json::from_str(&text).with_context(|| {
        format!("parsing device profile {}", Path::new(&path).display())
    })?))
}

fn build_app(app: &AppConfig) -> Result<(PipelineSpec, Option<DesignPoint>)> {
    let preset = |name: &str| apps::preset(name).map(|p| p.design());
    let reject = |field: bool, what: &str| -> Result<()> {
        if field {
            bail!("{what} does not apply to {:?}", app.name);
        }
        Ok(())
    };
    match app.name {
        AppName::Poisson2d => {
            reject(app.coefficients.is_some(), "coefficients")?;
            reject(app.star.is_some() || app.dt.is_some(), "RTM parameters")?;
            Ok((apps::poisson_2d(), preset("poisson-5pt-2d")))
        }
        AppName::Jacobi3d => {
            reject(app.star.is_some() || app.dt.is_some(), "RTM parameters")?;
            let k = app.coefficients.unwrap_or([1.0 / 7.0; 7]);
            Ok((apps::jacobi_3d(k)?, preset("jacobi-7pt-3d")))
        }
        AppName::RtmForward => {
            reject(app.coefficients.is_some(), "coefficients")?;
            let mut params = RtmParams::default();
            if let Some(star) = &app.star {
                params.star = star
                    .as_slice()
                    .try_into()
                    .map_err(|_| anyhow!("star needs 25 coefficients, got {}", star.len()))?;
            }
            if let Some(v) = app.rho_weight {
                params.rho_weight = v;
            }
            if let Some(v) = app.mu_weight {
                params.mu_weight = v;
            }
            if let Some(v) = app.dt {
                params.dt = v;
            }
            Ok((apps::rtm_forward(&params)?, preset("rtm-forward")))
        }
    }
}

fn build_kernel(k: &KernelConfig, ndim: usize) -> Result<PipelineSpec> {
    let taps = k
        .taps
        .iter()
        .map(|t| {
            if t.offset.len() != ndim {
                bail!("tap offset {:?} does not match the {ndim}D mesh", t.offset);
            }
            let mut off = [0; 3];
            off[..ndim].copy_from_slice(&t.offset);
            Ok(Tap::new(off, t.coeff))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut kernel = StencilKernel::new(k.name.clone(), ndim, taps, 1)?;
    if let Some(a) = k.arity {
        kernel = kernel.with_arity(a)?;
    }
    let cost = k.dsp_cost.unwrap_or_else(|| kernel.estimate_dsp());
    Ok(PipelineSpec::single(kernel.with_dsp_cost(cost)?))
}

pub fn resolve(config: &Config) -> Result<Resolved> {
    let mut geometry = MeshGeometry::from_dims(&config.mesh.dims)?;
    if let Some(k) = config.mesh.element_bytes {
        geometry = geometry.with_element_bytes(k)?;
    }
    let (pipeline, default_design) = match (&config.app, &config.kernel) {
        (Some(app), None) => build_app(app)?,
        (None, Some(k)) => (build_kernel(k, geometry.ndim())?, None),
        (Some(_), Some(_)) => bail!("config has both app and kernel sections; pick one"),
        (None, None) => bail!("config needs an app or a kernel section"),
    };
    let geometry = geometry.with_arity(pipeline.arity())?;
    pipeline.check_geometry(&geometry)?;
    let device = device_from_env()?.unwrap_or_else(|| config.device.clone());
    let profile = device.resolve()?;
    let mut warnings = Vec::new();
    if matches!(
        config.app,
        Some(AppConfig {
            name: AppName::RtmForward,
            ..
        })
    ) {
        warnings.extend(apps::rtm_plane_warning(&geometry));
    }
    Ok(Resolved {
        pipeline,
        geometry,
        profile,
        design: config.design.or(default_design),
        run: config.run.clone(),
        warnings,
    })
}
