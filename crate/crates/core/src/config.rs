//! Batch pipeline configuration.
//!
//! The on-disk form is TOML. Every field has a default, so an empty document
//! is a valid config that runs the full model with its standard constants:
//!
//! ```toml
//! config_version = 1
//! mode = "physaug"          # physaug | npm1 | npm2 | fog | lowlight
//! global_seed = 0
//! workers = 1
//! samples_per_image = 1
//! # input_dir = "clean"
//! # output_dir = "augmented"
//!
//! [physaug]
//! incident_light = 1.0
//! kernel_size = 3
//! kernel_sigma2 = 4.0
//! num_particle_types = 1
//! freq_range = [-512.0, 512.0]
//! phase_offset = -0.7853981633974483
//! atmospheric_l_inf = 0.1
//! depth_range = [0.0, 10.0]
//! coordinate_scale = 1.0
//! global_illumination = true
//! local_occlusion = true
//!
//! [npm]
//! lambda = 0.5
//! residual = 0.0
//!
//! [fog]
//! transmission = 0.5
//! atmospheric_light = 0.8
//!
//! [lowlight]
//! illumination = 0.4
//!
//! [synthesize]
//! atmospheric_light = 0.8
//! fog_transmission = [0.9, 0.7, 0.5, 0.3, 0.1]
//! lowlight_illumination = [0.8, 0.6, 0.4, 0.3, 0.2]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::perturbation::{
    npm1, npm2, physaug, synthesize_fog, synthesize_illumination, FogParams, NpmConfig,
    PhysAugConfig, RetinexParams, ScalarField,
};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Physaug,
    Npm1,
    Npm2,
    Fog,
    Lowlight,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Physaug => "physaug",
            Mode::Npm1 => "npm1",
            Mode::Npm2 => "npm2",
            Mode::Fog => "fog",
            Mode::Lowlight => "lowlight",
        }
    }

    /// Whether the mode draws from the seeded generator.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Mode::Physaug | Mode::Npm1 | Mode::Npm2)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "physaug" => Ok(Mode::Physaug),
            "npm1" => Ok(Mode::Npm1),
            "npm2" => Ok(Mode::Npm2),
            "fog" => Ok(Mode::Fog),
            "lowlight" => Ok(Mode::Lowlight),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FogConfig {
    pub transmission: f64,
    pub atmospheric_light: f64,
}

impl Default for FogConfig {
    fn default() -> Self {
        Self {
            transmission: 0.5,
            atmospheric_light: 0.8,
        }
    }
}

impl FogConfig {
    pub fn params(&self) -> FogParams {
        FogParams {
            transmission: ScalarField::Uniform(self.transmission),
            atmospheric_light: self.atmospheric_light,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowlightConfig {
    pub illumination: f64,
}

impl Default for LowlightConfig {
    fn default() -> Self {
        Self { illumination: 0.4 }
    }
}

impl LowlightConfig {
    pub fn params(&self) -> RetinexParams {
        RetinexParams {
            illumination: ScalarField::Uniform(self.illumination),
        }
    }
}

/// Severity ladders for corpus synthesis; index 0 is severity 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesizeConfig {
    pub atmospheric_light: f64,
    pub fog_transmission: Vec<f64>,
    pub lowlight_illumination: Vec<f64>,
}

impl Default for SynthesizeConfig {
    fn default() -> Self {
        Self {
            atmospheric_light: 0.8,
            fog_transmission: vec![0.9, 0.7, 0.5, 0.3, 0.1],
            lowlight_illumination: vec![0.8, 0.6, 0.4, 0.3, 0.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub config_version: u32,
    pub mode: Mode,
    pub global_seed: u64,
    pub workers: usize,
    pub samples_per_image: usize,
    pub input_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub physaug: PhysAugConfig,
    pub npm: NpmConfig,
    pub fog: FogConfig,
    pub lowlight: LowlightConfig,
    pub synthesize: SynthesizeConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            config_version: CONFIG_VERSION,
            mode: Mode::Physaug,
            global_seed: 0,
            workers: 1,
            samples_per_image: 1,
            input_dir: None,
            output_dir: None,
            physaug: PhysAugConfig::default(),
            npm: NpmConfig::default(),
            fog: FogConfig::default(),
            lowlight: LowlightConfig::default(),
            synthesize: SynthesizeConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.config_version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config_version {} (expected {CONFIG_VERSION})",
                self.config_version
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be positive".into()));
        }
        if self.samples_per_image == 0 {
            return Err(Error::Config("samples_per_image must be positive".into()));
        }
        if let (Some(i), Some(o)) = (&self.input_dir, &self.output_dir) {
            if same_dir(i, o) {
                return Err(Error::Config(
                    "output_dir must differ from input_dir".into(),
                ));
            }
        }
        let sub = |e: Error| Error::Config(e.to_string());
        self.physaug.validate().map_err(sub)?;
        self.npm.validate().map_err(sub)?;
        check_unit("fog.transmission", self.fog.transmission)?;
        check_unit("fog.atmospheric_light", self.fog.atmospheric_light)?;
        check_nonneg("lowlight.illumination", self.lowlight.illumination)?;
        check_unit("synthesize.atmospheric_light", self.synthesize.atmospheric_light)?;
        for &t in &self.synthesize.fog_transmission {
            check_unit("synthesize.fog_transmission", t)?;
        }
        for &l in &self.synthesize.lowlight_illumination {
            check_nonneg("synthesize.lowlight_illumination", l)?;
        }
        Ok(())
    }

    /// Applies the configured mode. Deterministic modes ignore `seed`.
    pub fn apply(&self, img: &ImageTensor, seed: u64) -> Result<ImageTensor> {
        match self.mode {
            Mode::Physaug => physaug(img, &self.physaug, seed),
            Mode::Npm1 => npm1(img, &self.physaug, seed),
            Mode::Npm2 => npm2(img, &self.physaug, &self.npm, seed),
            Mode::Fog => synthesize_fog(img, &self.fog.params()),
            Mode::Lowlight => synthesize_illumination(img, &self.lowlight.params()),
        }
    }
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} outside [0, 1]")))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} must be nonnegative")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = PipelineConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.physaug.kernel_size, 3);
        assert_eq!(cfg.physaug.kernel_sigma2, 4.0);
        assert_eq!(cfg.physaug.freq_range, [-512.0, 512.0]);
        assert_eq!(cfg.physaug.phase_offset, -std::f64::consts::FRAC_PI_4);
        assert_eq!(cfg.physaug.atmospheric_l_inf, 0.1);
        assert_eq!(cfg.physaug.depth_range, [0.0, 10.0]);
        assert_eq!(cfg.physaug.incident_light, 1.0);
    }

    #[test]
    fn roundtrips_through_toml() {
        let mut cfg = PipelineConfig::default();
        cfg.mode = Mode::Npm2;
        cfg.npm.lambda = 0.25;
        cfg.physaug.num_particle_types = 3;
        let back = PipelineConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_sections() {
        let cfg = PipelineConfig::from_toml_str(
            "mode = \"fog\"\n[physaug]\nkernel_size = 5\n[fog]\ntransmission = 0.2\n",
        )
        .unwrap();
        assert_eq!(cfg.mode, Mode::Fog);
        assert_eq!(cfg.physaug.kernel_size, 5);
        assert_eq!(cfg.physaug.kernel_sigma2, 4.0);
        assert_eq!(cfg.fog.transmission, 0.2);
        assert_eq!(cfg.fog.atmospheric_light, 0.8);
    }

    #[test]
    fn rejects_invalid() {
        let cases = [
            "config_version = 2",
            "mode = \"blur\"",
            "workers = 0",
            "samples_per_image = 0",
            "[physaug]\nkernel_size = 2",
            "[physaug]\nnum_particle_types = -1",
            "[npm]\nlambda = 1.5",
            "[fog]\ntransmission = 1.1",
            "[lowlight]\nillumination = -0.5",
            "unknown_key = 1",
            "input_dir = \"x\"\noutput_dir = \"x\"",
        ];
        for text in cases {
            assert!(
                matches!(PipelineConfig::from_toml_str(text), Err(Error::Config(_))),
                "{text:?}"
            );
        }
    }

    #[test]
    fn mode_names_roundtrip() {
        for m in [Mode::Physaug, Mode::Npm1, Mode::Npm2, Mode::Fog, Mode::Lowlight] {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
    }

    #[test]
    fn identity_physaug_section() {
        let cfg = PipelineConfig::from_toml_str(
            "[physaug]\nglobal_illumination = false\nlocal_occlusion = false\ndepth_range = [0.0, 0.0]\n",
        )
        .unwrap();
        let img = ImageTensor::new(2, 2, (0..12).map(|v| v as f64 / 11.0).collect()).unwrap();
        assert!(cfg.apply(&img, 17).unwrap().max_abs_diff(&img) < 1e-12);
    }
}
