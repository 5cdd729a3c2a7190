//! 2D discrete Fourier transforms and the global illumination operator.
//!
//! The illumination field is the circular convolution of each image channel
//! with a random kernel, evaluated as a pointwise product of spectra.
//! Transforms are unnormalized forward / `1/(H*W)` inverse, and accept any
//! dimensions (rustfft picks mixed-radix or Bluestein plans as needed).

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::image::{ImageTensor, Plane};

/// An odd-sized square convolution kernel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterKernel {
    size: usize,
    weights: Vec<f64>,
}

impl FilterKernel {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        check_kernel_size(size)?;
        if weights.len() != size * size {
            return Err(Error::ShapeMismatch {
                expected: format!("{} kernel weights", size * size),
                found: format!("{}", weights.len()),
            });
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite {
                index: i,
                value: weights[i],
            });
        }
        Ok(Self { size, weights })
    }

    /// Unit weight at the centre, zero elsewhere.
    pub fn delta(size: usize) -> Result<Self> {
        check_kernel_size(size)?;
        let mut weights = vec![0.0; size * size];
        weights[(size / 2) * size + size / 2] = 1.0;
        Ok(Self { size, weights })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    /// Weight at offset `(dy, dx)` from the centre.
    pub fn at(&self, dy: isize, dx: isize) -> f64 {
        let r = self.radius() as isize;
        self.weights[((dy + r) as usize) * self.size + (dx + r) as usize]
    }
}

fn check_kernel_size(size: usize) -> Result<()> {
    if size == 0 || size % 2 == 0 {
        return Err(Error::invalid(format!(
            "kernel size must be odd and >= 1, got {size}"
        )));
    }
    Ok(())
}

/// Draws each weight i.i.d. from `N(0, sigma2)`; `sigma2` is a variance.
pub fn sample_kernel<R: Rng + ?Sized>(rng: &mut R, size: usize, sigma2: f64) -> Result<FilterKernel> {
    check_kernel_size(size)?;
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid(format!(
            "kernel variance must be positive, got {sigma2}"
        )));
    }
    let normal = Normal::new(0.0, sigma2.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
    let weights = (0..size * size).map(|_| normal.sample(rng)).collect();
    Ok(FilterKernel { size, weights })
}

/// Complex coefficients of one 2D transform, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    height: usize,
    width: usize,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, ky: usize, kx: usize) -> Complex64 {
        self.coeffs[ky * self.width + kx]
    }
}

/// Row and column plans for one image size, reusable across channels.
pub struct Fft2Plan {
    height: usize,
    width: usize,
    rows: Arc<dyn Fft<f64>>,
    cols: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl Fft2Plan {
    pub fn new(height: usize, width: usize, direction: FftDirection) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "transform dimensions must be positive, got {height}x{width}"
            )));
        }
        let mut planner = FftPlanner::new();
        let rows = planner.plan_fft(width, direction);
        let cols = planner.plan_fft(height, direction);
        let scratch_len = rows
            .get_inplace_scratch_len()
            .max(cols.get_inplace_scratch_len());
        Ok(Self {
            height,
            width,
            rows,
            cols,
            scratch_len,
        })
    }

    /// Transforms `buf` (row-major, `height * width`) in place, unnormalized.
    pub fn process(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.height * self.width);
        let mut scratch = vec![Complex64::default(); self.scratch_len];
        for row in buf.chunks_exact_mut(self.width) {
            self.rows.process_with_scratch(row, &mut scratch);
        }
        if self.height == 1 {
            return;
        }
        let mut col = vec![Complex64::default(); self.height];
        for x in 0..self.width {
            for (y, c) in col.iter_mut().enumerate() {
                *c = buf[y * self.width + x];
            }
            self.cols.process_with_scratch(&mut col, &mut scratch);
            for (y, c) in col.iter().enumerate() {
                buf[y * self.width + x] = *c;
            }
        }
    }
}

/// Unnormalized forward 2D DFT of a real field.
pub fn fft2(field: &Plane) -> Spectrum {
    let plan = Fft2Plan::new(field.height(), field.width(), FftDirection::Forward)
        .expect("plane dimensions are positive");
    let mut coeffs: Vec<Complex64> = field.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan.process(&mut coeffs);
    Spectrum {
        height: field.height(),
        width: field.width(),
        coeffs,
    }
}

/// Inverse 2D DFT including the `1/(H*W)` factor.
pub fn ifft2(spectrum: &Spectrum) -> Vec<Complex64> {
    let plan = Fft2Plan::new(spectrum.height, spectrum.width, FftDirection::Inverse)
        .expect("spectrum dimensions are positive");
    let mut buf = spectrum.coeffs.clone();
    plan.process(&mut buf);
    let scale = 1.0 / (spectrum.height * spectrum.width) as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Real part of [`ifft2`].
pub fn ifft2_real(spectrum: &Spectrum) -> Plane {
    let data = ifft2(spectrum).into_iter().map(|c| c.re).collect();
    Plane::new(spectrum.height, spectrum.width, data).expect("spectrum dimensions are positive")
}

/// Embeds the kernel into an `height x width` field with its centre at
/// `(0, 0)` and negative offsets wrapped to the far edges.
pub fn pad_kernel(kernel: &FilterKernel, height: usize, width: usize) -> Result<Plane> {
    if kernel.size() > height.min(width) {
        return Err(Error::invalid(format!(
            "kernel size {} exceeds image size {height}x{width}",
            kernel.size()
        )));
    }
    let r = kernel.radius() as isize;
    let mut padded = Plane::zeros(height, width)?;
    let (h, w) = (height as isize, width as isize);
    for dy in -r..=r {
        for dx in -r..=r {
            let y = dy.rem_euclid(h) as usize;
            let x = dx.rem_euclid(w) as usize;
            padded.data_mut()[y * width + x] = kernel.at(dy, dx);
        }
    }
    Ok(padded)
}

/// Per-channel circular convolution of `img` with `kernel`, computed in the
/// frequency domain. The result is not clamped.
///
/// Channels are packed two at a time into the real and imaginary parts of
/// one complex transform; the kernel is real, so the two convolutions do not
/// mix.
pub fn global_illumination(img: &ImageTensor, kernel: &FilterKernel) -> Result<ImageTensor> {
    let (h, w) = (img.height(), img.width());
    let padded = pad_kernel(kernel, h, w)?;
    let kernel_spec = fft2(&padded);
    let forward = Fft2Plan::new(h, w, FftDirection::Forward)?;
    let inverse = Fft2Plan::new(h, w, FftDirection::Inverse)?;
    let scale = 1.0 / (h * w) as f64;

    let [r, g, b] = img.planes();
    let convolve_pair = |re: &Plane, im: Option<&Plane>| -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = match im {
            Some(im) => re
                .data()
                .iter()
                .zip(im.data())
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect(),
            None => re.data().iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        };
        forward.process(&mut buf);
        buf.iter_mut()
            .zip(kernel_spec.coeffs())
            .for_each(|(c, k)| *c *= k);
        inverse.process(&mut buf);
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    };
    let rg = convolve_pair(&r, Some(&g));
    let bb = convolve_pair(&b, None);

    let mut data = Vec::with_capacity(h * w * 3);
    for i in 0..h * w {
        data.push(rg[i].re);
        data.push(rg[i].im);
        data.push(bb[i].re);
    }
    ImageTensor::new(h, w, data)
}
