//! Image buffers and value-range handling.
//!
//! Pixels are stored as `f64` in row-major, channel-interleaved order
//! (`[r, g, b, r, g, b, ...]`). Nominal range is `[0, 1]`; intermediate
//! fields produced by the perturbation operators may leave that range and
//! are brought back with [`clamp_unit`].

use image::RgbImage;

use crate::error::{Error, Result};

/// Number of colour channels carried by every [`ImageTensor`].
pub const CHANNELS: usize = 3;

/// A single real-valued 2D field, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "plane dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values ({height}x{width})", height * width),
                found: format!("{} values", data.len()),
            });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::filled(height, width, 0.0)
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self::new(height, width, data)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Euclidean (L2) norm over all entries.
    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn same_shape(&self, other: &Plane) -> bool {
        self.height == other.height && self.width == other.width
    }
}

/// An H×W×3 RGB image with real-valued channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    /// Builds an image from interleaved RGB values. Values must be finite;
    /// the nominal `[0, 1]` range is not enforced here.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        let expected = height * width * CHANNELS;
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                expected: format!("{expected} values ({height}x{width}x{CHANNELS})"),
                found: format!("{} values", data.len()),
            });
        }
        check_finite(&data)?;
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width * CHANNELS])
    }

    /// Interleaves three same-shaped planes into an image.
    pub fn from_planes(planes: [Plane; CHANNELS]) -> Result<Self> {
        let (h, w) = (planes[0].height(), planes[0].width());
        if planes.iter().any(|p| p.height() != h || p.width() != w) {
            return Err(Error::invalid("channel planes differ in shape"));
        }
        let mut data = Vec::with_capacity(h * w * CHANNELS);
        for i in 0..h * w {
            for p in &planes {
                data.push(p.data()[i]);
            }
        }
        Self::new(h, w, data)
    }

    /// Converts an 8-bit RGB buffer with `v / 255`.
    pub fn from_rgb8(img: &RgbImage) -> Self {
        let (w, h) = img.dimensions();
        let data = img.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect();
        Self {
            height: h as usize,
            width: w as usize,
            data,
        }
    }

    pub fn from_u8(height: usize, width: usize, raw: &[u8]) -> Result<Self> {
        Self::new(height, width, raw.iter().map(|&v| f64::from(v) / 255.0).collect())
    }

    /// Encodes to 8 bits with `round(v * 255)`. Requires values in `[0, 1]`.
    pub fn to_u8(&self) -> Result<Vec<u8>> {
        check_unit_range(&self.data)?;
        Ok(self.data.iter().map(|&v| encode_u8(v)).collect())
    }

    pub fn to_rgb8(&self) -> Result<RgbImage> {
        let raw = self.to_u8()?;
        let (w, h) = (to_u32(self.width)?, to_u32(self.height)?);
        Ok(RgbImage::from_raw(w, h, raw).expect("buffer length matches dimensions"))
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * CHANNELS + c]
    }

    pub fn channel(&self, c: usize) -> Plane {
        assert!(c < CHANNELS, "channel index {c} out of range");
        let data = self.data.iter().skip(c).step_by(CHANNELS).copied().collect();
        Plane {
            height: self.height,
            width: self.width,
            data,
        }
    }

    pub fn planes(&self) -> [Plane; CHANNELS] {
        [self.channel(0), self.channel(1), self.channel(2)]
    }

    /// Applies `f` to every value. The result must stay finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.height, self.width, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn same_shape(&self, other: &ImageTensor) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Largest absolute per-value difference between two same-shaped images.
    pub fn max_abs_diff(&self, other: &ImageTensor) -> f64 {
        assert!(self.same_shape(other), "shape mismatch in max_abs_diff");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn to_u32(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::invalid(format!("dimension {v} exceeds u32")))
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: data[index],
        }),
        None => Ok(()),
    }
}

fn check_unit_range(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(i) => Err(Error::ContractViolation(format!(
            "value {} at index {i} outside [0, 1]",
            data[i]
        ))),
        None => Ok(()),
    }
}

#[inline]
fn encode_u8(v: f64) -> u8 {
    // f64::round is half-away-from-zero
    (v * 255.0).round() as u8
}

/// Maps every value into `[0, 1]`.
pub fn clamp_unit(img: &ImageTensor) -> Result<ImageTensor> {
    check_finite(&img.data)?;
    Ok(ImageTensor {
        height: img.height,
        width: img.width,
        data: img.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
    })
}

/// Simulates an 8-bit save/load cycle: `v -> round(v * 255) / 255`.
pub fn quantize_roundtrip(img: &ImageTensor) -> Result<ImageTensor> {
    check_unit_range(&img.data)?;
    Ok(ImageTensor {
        height: img.height,
        width: img.width,
        data: img
            .data
            .iter()
            .map(|&v| f64::from(encode_u8(v)) / 255.0)
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn img(values: &[f64]) -> ImageTensor {
        ImageTensor::new(1, values.len() / 3, values.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ImageTensor::new(0, 4, vec![]).is_err());
        assert!(matches!(
            ImageTensor::new(2, 2, vec![0.0; 11]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn clamp_in_range_is_identity() {
        let a = img(&[0.0, 0.25, 1.0, 0.5, 0.75, 0.1]);
        assert_eq!(clamp_unit(&a).unwrap(), a);
    }

    #[test]
    fn clamp_out_of_range() {
        let a = img(&[1.7, -0.2, 0.5]);
        assert_eq!(clamp_unit(&a).unwrap().data(), &[1.0, 0.0, 0.5]);
    }

    #[test]
    fn clamp_constant() {
        let a = ImageTensor::filled(3, 5, 0.5).unwrap();
        assert_eq!(clamp_unit(&a).unwrap(), a);
    }

    #[test]
    fn clamp_reports_non_finite_index() {
        let mut a = img(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        a.data[4] = f64::NAN;
        match clamp_unit(&a) {
            Err(Error::NonFinite { index, .. }) => assert_eq!(index, 4),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn new_rejects_non_finite() {
        assert!(matches!(
            ImageTensor::new(1, 1, vec![0.0, f64::INFINITY, 0.0]),
            Err(Error::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn quantize_endpoints_and_half() {
        let q = quantize_roundtrip(&img(&[0.0, 1.0, 0.5])).unwrap();
        assert_eq!(q.data()[0], 0.0);
        assert_eq!(q.data()[1], 1.0);
        assert_eq!(q.data()[2], 128.0 / 255.0);
        assert!((q.data()[2] - 0.50196).abs() < 1e-5);
    }

    #[test]
    fn quantize_rejects_out_of_range() {
        assert!(matches!(
            quantize_roundtrip(&img(&[0.0, 1.01, 0.5])),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn quantize_idempotent_on_random_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..999).map(|_| rng.random::<f64>()).collect();
        let a = ImageTensor::new(1, 333, values).unwrap();
        let once = quantize_roundtrip(&a).unwrap();
        let twice = quantize_roundtrip(&once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn planes_roundtrip() {
        let a = ImageTensor::new(2, 2, (0..12).map(|v| v as f64 / 12.0).collect()).unwrap();
        let b = ImageTensor::from_planes(a.planes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.channel(1).data(), &[1.0 / 12.0, 4.0 / 12.0, 7.0 / 12.0, 10.0 / 12.0]);
    }

    #[test]
    fn rgb8_roundtrip() {
        let raw: Vec<u8> = (0..=255u8).cycle().take(4 * 5 * 3).collect();
        let rgb = RgbImage::from_raw(5, 4, raw.clone()).unwrap();
        let t = ImageTensor::from_rgb8(&rgb);
        assert_eq!((t.height(), t.width()), (4, 5));
        assert_eq!(t.to_rgb8().unwrap().into_raw(), raw);
    }

    proptest! {
        #[test]
        fn quantize_is_idempotent(values in proptest::collection::vec(0.0f64..=1.0, 3..60)) {
            let n = values.len() / 3 * 3;
            let a = ImageTensor::new(1, n / 3, values[..n].to_vec()).unwrap();
            let once = quantize_roundtrip(&a).unwrap();
            prop_assert_eq!(quantize_roundtrip(&once).unwrap(), once);
        }

        #[test]
        fn clamp_lands_in_unit_range(values in proptest::collection::vec(-5.0f64..5.0, 3..60)) {
            let n = values.len() / 3 * 3;
            let a = ImageTensor::new(1, n / 3, values[..n].to_vec()).unwrap();
            let c = clamp_unit(&a).unwrap();
            prop_assert!(c.same_shape(&a));
            prop_assert!(c.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
