//! The full perturbation model, its two ablations, and the forward fog and
//! low-light synthesizers used to build reference corrupted corpora.
//!
//! All three stochastic operators share one draw, sampled from a per-item
//! generator in a fixed order: kernel, then occlusion spec, then depth.
//! With the same seed they therefore see identical `h_g`, `h_o` and `Lambda`,
//! and differ only in how those terms are combined:
//!
//! ```text
//! physaug: Q * (h_g + h_o) + Lambda
//! npm1:    Q * (h_g + h_o)
//! npm2:    lambda * Q * (h_g + h_o) + (1 - lambda) * J + L
//! ```

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{clamp_unit, ImageTensor, Plane};
use crate::occlusion::{compose_occlusion, sample_occlusion_spec, OcclusionSampling, OcclusionSpec};
use crate::seed::rng_from_seed;
use crate::spectral::{global_illumination, sample_kernel, FilterKernel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysAugConfig {
    /// Incident light coefficient `Q`.
    pub incident_light: f64,
    pub kernel_size: usize,
    /// Variance of the kernel weight distribution.
    pub kernel_sigma2: f64,
    /// Highest particle index `n`; `n + 1` particle types are drawn.
    pub num_particle_types: usize,
    /// Support of the frequency and orientation draws.
    pub freq_range: [f64; 2],
    pub phase_offset: f64,
    /// Atmospheric light at infinity.
    pub atmospheric_l_inf: f64,
    pub depth_range: [f64; 2],
    pub coordinate_scale: f64,
    /// When off, the illumination term is the image itself (delta kernel).
    pub global_illumination: bool,
    /// When off, the occlusion term is zero.
    pub local_occlusion: bool,
}

impl Default for PhysAugConfig {
    fn default() -> Self {
        Self {
            incident_light: 1.0,
            kernel_size: 3,
            kernel_sigma2: 4.0,
            num_particle_types: 1,
            freq_range: [-512.0, 512.0],
            phase_offset: -PI / 4.0,
            atmospheric_l_inf: 0.1,
            depth_range: [0.0, 10.0],
            coordinate_scale: 1.0,
            global_illumination: true,
            local_occlusion: true,
        }
    }
}

impl PhysAugConfig {
    /// Every term degenerates: the output reproduces the input.
    pub fn identity() -> Self {
        Self {
            global_illumination: false,
            local_occlusion: false,
            depth_range: [0.0, 0.0],
            incident_light: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.incident_light,
            self.kernel_sigma2,
            self.freq_range[0],
            self.freq_range[1],
            self.phase_offset,
            self.atmospheric_l_inf,
            self.depth_range[0],
            self.depth_range[1],
            self.coordinate_scale,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("physaug parameters must be finite"));
        }
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return Err(Error::invalid(format!(
                "kernel_size must be odd, got {}",
                self.kernel_size
            )));
        }
        if self.kernel_sigma2 <= 0.0 {
            return Err(Error::invalid("kernel_sigma2 must be positive"));
        }
        if self.freq_range[0] >= self.freq_range[1] {
            return Err(Error::invalid("freq_range must satisfy lo < hi"));
        }
        if self.depth_range[0] < 0.0 || self.depth_range[0] > self.depth_range[1] {
            return Err(Error::invalid("depth_range must satisfy 0 <= lo <= hi"));
        }
        if self.atmospheric_l_inf < 0.0 {
            return Err(Error::invalid("atmospheric_l_inf must be nonnegative"));
        }
        Ok(())
    }

    pub fn occlusion_sampling(&self) -> OcclusionSampling {
        OcclusionSampling {
            freq_range: (self.freq_range[0], self.freq_range[1]),
            phase_offset: self.phase_offset,
            coordinate_scale: self.coordinate_scale,
        }
    }
}

/// The additive atmospheric term `Lambda = L_inf * (1 - exp(-d))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtmosphericTerm {
    pub depth: f64,
    pub lambda: f64,
}

impl AtmosphericTerm {
    pub fn from_depth(l_inf: f64, depth: f64) -> Self {
        Self {
            depth,
            lambda: l_inf * (1.0 - (-depth).exp()),
        }
    }
}

/// Draws `d ~ U(depth_range)` and evaluates `Lambda`. Always consumes one
/// uniform draw, even for a degenerate range.
pub fn atmospheric_lambda<R: Rng + ?Sized>(rng: &mut R, cfg: &PhysAugConfig) -> AtmosphericTerm {
    let [lo, hi] = cfg.depth_range;
    let u: f64 = rng.random();
    AtmosphericTerm::from_depth(cfg.atmospheric_l_inf, lo + (hi - lo) * u)
}

/// Everything sampled for one augmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationDraw {
    pub kernel: FilterKernel,
    pub occlusion: OcclusionSpec,
    pub atmosphere: AtmosphericTerm,
}

impl PerturbationDraw {
    pub fn sample<R: Rng + ?Sized>(
        rng: &mut R,
        cfg: &PhysAugConfig,
        height: usize,
        width: usize,
    ) -> Result<Self> {
        cfg.validate()?;
        let kernel = sample_kernel(rng, cfg.kernel_size, cfg.kernel_sigma2)?;
        let occlusion = sample_occlusion_spec(
            rng,
            height,
            width,
            cfg.num_particle_types,
            &cfg.occlusion_sampling(),
        )?;
        let atmosphere = atmospheric_lambda(rng, cfg);
        Ok(Self {
            kernel,
            occlusion,
            atmosphere,
        })
    }

    pub fn from_seed(seed: u64, cfg: &PhysAugConfig, height: usize, width: usize) -> Result<Self> {
        Self::sample(&mut rng_from_seed(seed), cfg, height, width)
    }

    /// `Q * (h_g + h_o)`, honouring the component switches in `cfg`.
    pub fn reflected_path(&self, img: &ImageTensor, cfg: &PhysAugConfig) -> Result<ImageTensor> {
        if self.occlusion.height != img.height() || self.occlusion.width != img.width() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{} image", self.occlusion.height, self.occlusion.width),
                found: format!("{}x{}", img.height(), img.width()),
            });
        }
        let illum = if cfg.global_illumination {
            global_illumination(img, &self.kernel)?
        } else {
            img.clone()
        };
        let q = cfg.incident_light;
        if !cfg.local_occlusion {
            return illum.map(|v| q * v);
        }
        let occ = compose_occlusion(&self.occlusion)?;
        let data = illum
            .data()
            .iter()
            .zip(occ.data())
            .map(|(g, o)| q * (g + o))
            .collect();
        ImageTensor::new(img.height(), img.width(), data)
    }

    pub fn physaug_unclamped(&self, img: &ImageTensor, cfg: &PhysAugConfig) -> Result<ImageTensor> {
        let lambda = self.atmosphere.lambda;
        self.reflected_path(img, cfg)?.map(|v| v + lambda)
    }

    pub fn npm1_unclamped(&self, img: &ImageTensor, cfg: &PhysAugConfig) -> Result<ImageTensor> {
        self.reflected_path(img, cfg)
    }

    pub fn npm2_unclamped(
        &self,
        img: &ImageTensor,
        cfg: &PhysAugConfig,
        npm: &NpmConfig,
    ) -> Result<ImageTensor> {
        npm.validate()?;
        let base = self.reflected_path(img, cfg)?;
        let (lam, res) = (npm.lambda, npm.residual);
        let data = base
            .data()
            .iter()
            .zip(img.data())
            .map(|(p, j)| lam * p + (1.0 - lam) * j + res)
            .collect();
        ImageTensor::new(img.height(), img.width(), data)
    }
}

/// Mixing parameters of the MixUp-style ablation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NpmConfig {
    pub lambda: f64,
    pub residual: f64,
}

impl Default for NpmConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            residual: 0.0,
        }
    }
}

impl NpmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!(
                "mixing factor must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if !self.residual.is_finite() {
            return Err(Error::invalid("residual term must be finite"));
        }
        Ok(())
    }
}

fn draw_for(img: &ImageTensor, cfg: &PhysAugConfig, seed: u64) -> Result<PerturbationDraw> {
    PerturbationDraw::from_seed(seed, cfg, img.height(), img.width())
}

pub fn physaug_unclamped(img: &ImageTensor, cfg: &PhysAugConfig, seed: u64) -> Result<ImageTensor> {
    draw_for(img, cfg, seed)?.physaug_unclamped(img, cfg)
}

/// Full model: `Q * (h_g + h_o) + Lambda`, clamped to `[0, 1]`.
pub fn physaug(img: &ImageTensor, cfg: &PhysAugConfig, seed: u64) -> Result<ImageTensor> {
    clamp_unit(&physaug_unclamped(img, cfg, seed)?)
}

pub fn npm1_unclamped(img: &ImageTensor, cfg: &PhysAugConfig, seed: u64) -> Result<ImageTensor> {
    draw_for(img, cfg, seed)?.npm1_unclamped(img, cfg)
}

/// Ablation without the atmospheric term.
pub fn npm1(img: &ImageTensor, cfg: &PhysAugConfig, seed: u64) -> Result<ImageTensor> {
    clamp_unit(&npm1_unclamped(img, cfg, seed)?)
}

pub fn npm2_unclamped(
    img: &ImageTensor,
    cfg: &PhysAugConfig,
    npm: &NpmConfig,
    seed: u64,
) -> Result<ImageTensor> {
    npm.validate()?;
    draw_for(img, cfg, seed)?.npm2_unclamped(img, cfg, npm)
}

/// Ablation mixing the perturbed and clean image.
pub fn npm2(img: &ImageTensor, cfg: &PhysAugConfig, npm: &NpmConfig, seed: u64) -> Result<ImageTensor> {
    clamp_unit(&npm2_unclamped(img, cfg, npm, seed)?)
}

/// A per-pixel field given either as one value or as a full map.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarField {
    Uniform(f64),
    Map(Plane),
}

impl ScalarField {
    fn check(&self, img: &ImageTensor, what: &str, ok: impl Fn(f64) -> bool) -> Result<()> {
        let values: &[f64] = match self {
            ScalarField::Uniform(v) => std::slice::from_ref(v),
            ScalarField::Map(p) => {
                if p.height() != img.height() || p.width() != img.width() {
                    return Err(Error::ShapeMismatch {
                        expected: format!("{}x{} {what}", img.height(), img.width()),
                        found: format!("{}x{}", p.height(), p.width()),
                    });
                }
                p.data()
            }
        };
        match values.iter().position(|&v| !(v.is_finite() && ok(v))) {
            Some(i) => Err(Error::invalid(format!(
                "{what} value {} at index {i} out of range",
                values[i]
            ))),
            None => Ok(()),
        }
    }

    #[inline]
    fn at(&self, pixel: usize) -> f64 {
        match self {
            ScalarField::Uniform(v) => *v,
            ScalarField::Map(p) => p.data()[pixel],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FogParams {
    /// Transmission in `[0, 1]`.
    pub transmission: ScalarField,
    pub atmospheric_light: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetinexParams {
    /// Incident light map, nonnegative.
    pub illumination: ScalarField,
}

/// Atmospheric scattering: `I = t * J + A * (1 - t)`, clamped.
pub fn synthesize_fog(img: &ImageTensor, p: &FogParams) -> Result<ImageTensor> {
    p.transmission.check(img, "transmission", |t| (0.0..=1.0).contains(&t))?;
    let a = p.atmospheric_light;
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::invalid(format!("atmospheric light {a} outside [0, 1]")));
    }
    let data = img
        .data()
        .chunks_exact(3)
        .enumerate()
        .flat_map(|(i, px)| {
            let t = p.transmission.at(i);
            px.iter().map(move |j| t * j + a * (1.0 - t))
        })
        .collect();
    clamp_unit(&ImageTensor::new(img.height(), img.width(), data)?)
}

/// Retinex product `I = L * R` with the image as reflectance, clamped.
pub fn synthesize_illumination(img: &ImageTensor, p: &RetinexParams) -> Result<ImageTensor> {
    p.illumination.check(img, "illumination", |l| l >= 0.0)?;
    let data = img
        .data()
        .chunks_exact(3)
        .enumerate()
        .flat_map(|(i, px)| {
            let l = p.illumination.at(i);
            px.iter().map(move |r| l * r)
        })
        .collect();
    clamp_unit(&ImageTensor::new(img.height(), img.width(), data)?)
}
