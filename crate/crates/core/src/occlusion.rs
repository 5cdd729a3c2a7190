//! Particle-induced local occlusion fields.
//!
//! Each particle type contributes one random modulation matrix shared by the
//! three channels, multiplied by an independent unit-norm planar wave per
//! channel. The field does not depend on image content.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::image::{ImageTensor, Plane, CHANNELS};

/// Raw wave norms below this are treated as degenerate.
const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    R,
    G,
    B,
}

impl Channel {
    pub const ALL: [Channel; CHANNELS] = [Channel::R, Channel::G, Channel::B];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarWaveSpec {
    pub frequency: f64,
    /// Propagation angle in radians.
    pub orientation: f64,
    pub phase_offset: f64,
    pub channel: Channel,
}

/// A planar wave sampled on the pixel grid, normalized to unit L2 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField(Plane);

impl WaveField {
    pub fn plane(&self) -> &Plane {
        &self.0
    }

    pub fn into_plane(self) -> Plane {
        self.0
    }
}

/// Evaluates `cos(2*pi*f*(x*cos(w) + y*sin(w) + phi))` at integer pixel
/// coordinates and rescales to unit norm.
pub fn planar_wave(spec: &PlanarWaveSpec, height: usize, width: usize) -> Result<WaveField> {
    planar_wave_scaled(spec, height, width, 1.0)
}

/// Like [`planar_wave`] with pixel coordinates multiplied by `coordinate_scale`.
pub fn planar_wave_scaled(
    spec: &PlanarWaveSpec,
    height: usize,
    width: usize,
    coordinate_scale: f64,
) -> Result<WaveField> {
    if height == 0 || width == 0 {
        return Err(Error::invalid(format!(
            "wave dimensions must be positive, got {height}x{width}"
        )));
    }
    let vals = [spec.frequency, spec.orientation, spec.phase_offset, coordinate_scale];
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("planar wave parameters must be finite"));
    }

    // cos(a_x + b_y) = cos(a_x)cos(b_y) - sin(a_x)sin(b_y): trig per row and
    // per column instead of per pixel.
    let k = 2.0 * PI * spec.frequency;
    let (sin_w, cos_w) = spec.orientation.sin_cos();
    let cols: Vec<(f64, f64)> = (0..width)
        .map(|x| (k * x as f64 * coordinate_scale * cos_w).sin_cos())
        .collect();
    let rows: Vec<(f64, f64)> = (0..height)
        .map(|y| (k * (y as f64 * coordinate_scale * sin_w + spec.phase_offset)).sin_cos())
        .collect();

    let mut data = Vec::with_capacity(height * width);
    for &(sb, cb) in &rows {
        for &(sa, ca) in &cols {
            data.push(ca * cb - sa * sb);
        }
    }
    let mut plane = Plane::new(height, width, data)?;
    let norm = plane.l2_norm();
    if norm < DEGENERATE_NORM {
        let c = 1.0 / ((height * width) as f64).sqrt();
        plane.data_mut().iter_mut().for_each(|v| *v = c);
    } else {
        plane.data_mut().iter_mut().for_each(|v| *v /= norm);
    }
    Ok(WaveField(plane))
}

/// Sampling ranges for [`sample_occlusion_spec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionSampling {
    /// Support of both the frequency and the orientation draws.
    pub freq_range: (f64, f64),
    pub phase_offset: f64,
    pub coordinate_scale: f64,
}

impl Default for OcclusionSampling {
    fn default() -> Self {
        Self {
            freq_range: (-512.0, 512.0),
            phase_offset: -PI / 4.0,
            coordinate_scale: 1.0,
        }
    }
}

/// One particle type: a modulation matrix and a wave per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleType {
    pub modulation: Plane,
    pub waves: [PlanarWaveSpec; CHANNELS],
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionSpec {
    pub height: usize,
    pub width: usize,
    pub coordinate_scale: f64,
    /// Particle types `0..=n`.
    pub particles: Vec<ParticleType>,
}

impl OcclusionSpec {
    /// Highest particle index `n`; the spec holds `n + 1` types.
    pub fn num_particle_types(&self) -> usize {
        self.particles.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles.is_empty() {
            return Err(Error::invalid("occlusion spec needs at least one particle type"));
        }
        for (i, p) in self.particles.iter().enumerate() {
            let m = &p.modulation;
            if m.height() != self.height || m.width() != self.width {
                return Err(Error::ShapeMismatch {
                    expected: format!("{}x{} modulation", self.height, self.width),
                    found: format!("{}x{} for particle type {i}", m.height(), m.width()),
                });
            }
        }
        Ok(())
    }
}

/// Draws `n + 1` particle types. Per type, in order: `(f, w)` for R, G, B,
/// then the modulation matrix row-major with i.i.d. standard normal entries.
pub fn sample_occlusion_spec<R: Rng + ?Sized>(
    rng: &mut R,
    height: usize,
    width: usize,
    n: usize,
    sampling: &OcclusionSampling,
) -> Result<OcclusionSpec> {
    if height == 0 || width == 0 {
        return Err(Error::invalid(format!(
            "occlusion dimensions must be positive, got {height}x{width}"
        )));
    }
    let (lo, hi) = sampling.freq_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(format!("invalid frequency range ({lo}, {hi})")));
    }
    let uniform = Uniform::new(lo, hi).map_err(|e| Error::invalid(e.to_string()))?;

    let mut particles = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        let waves = Channel::ALL.map(|channel| {
            let frequency = uniform.sample(rng);
            let orientation = uniform.sample(rng);
            PlanarWaveSpec {
                frequency,
                orientation,
                phase_offset: sampling.phase_offset,
                channel,
            }
        });
        let m: Vec<f64> = (0..height * width)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        particles.push(ParticleType {
            modulation: Plane::new(height, width, m)?,
            waves,
        });
    }
    Ok(OcclusionSpec {
        height,
        width,
        coordinate_scale: sampling.coordinate_scale,
        particles,
    })
}

/// Sums `M_i * S_i^P` over particle types, per channel. Not clamped.
pub fn compose_occlusion(spec: &OcclusionSpec) -> Result<ImageTensor> {
    spec.validate()?;
    let (h, w) = (spec.height, spec.width);
    let mut out = vec![0.0; h * w * CHANNELS];
    for p in &spec.particles {
        let m = p.modulation.data();
        for wave in &p.waves {
            let field = planar_wave_scaled(wave, h, w, spec.coordinate_scale)?;
            let c = wave.channel.index();
            for (i, s) in field.plane().data().iter().enumerate() {
                out[i * CHANNELS + c] += m[i] * s;
            }
        }
    }
    ImageTensor::new(h, w, out)
}
