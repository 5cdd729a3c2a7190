//! C ABI for the `physaug` augmentation engine.
//!
//! All functions return a [`PhysaugStatus`]; on failure a human-readable
//! message is available from [`physaug_last_error_message`] on the same
//! thread. Handles are opaque and must be released with their `_free`
//! function. Images are interleaved RGB, row-major, `height * width * 3`
//! elements. Output buffers are caller-owned and must not overlap the input.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use physaug::image::CHANNELS;
use physaug::{derive_sample_seed, Error, ImageTensor, PipelineConfig, SeedSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhysaugStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    ShapeMismatch = 4,
    /// A panic was caught at the boundary; the handle may be inconsistent.
    Internal = 5,
}

/// Parsed pipeline configuration.
pub struct PhysaugConfig {
    inner: PipelineConfig,
}

/// Stream of augmentations of one item; call `k` uses sample index `k`.
pub struct PhysaugSampler {
    config: PipelineConfig,
    spec: SeedSpec,
    next_sample: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(PhysaugStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) | Error::NonFinite { .. } | Error::ContractViolation(_) => {
                PhysaugStatus::InvalidArgument
            }
            Error::ShapeMismatch { .. } => PhysaugStatus::ShapeMismatch,
            Error::Config(_) | Error::Parse { .. } => PhysaugStatus::InvalidConfig,
            _ => PhysaugStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PhysaugStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            PhysaugStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal error: {msg}"));
            PhysaugStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PhysaugStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(PhysaugStatus::InvalidArgument, msg.into())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn element_count(height: usize, width: usize, channels: usize) -> Result<usize, Failure> {
    if channels != CHANNELS {
        return Err(Failure(
            PhysaugStatus::ShapeMismatch,
            format!("expected {CHANNELS} channels, got {channels}"),
        ));
    }
    if height == 0 || width == 0 {
        return Err(invalid(format!("empty image {height}x{width}")));
    }
    height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(CHANNELS))
        .ok_or_else(|| invalid("image dimensions overflow"))
}

/// Borrows the input and output buffers after checking for null and overlap.
unsafe fn buffers<'a, T>(
    input: *const T,
    output: *mut T,
    len: usize,
) -> Result<(&'a [T], &'a mut [T]), Failure> {
    if input.is_null() {
        return Err(null("input"));
    }
    if output.is_null() {
        return Err(null("output"));
    }
    let bytes = len * std::mem::size_of::<T>();
    let (a, b) = (input as usize, output as usize);
    if a < b + bytes && b < a + bytes {
        return Err(invalid("output buffer overlaps input"));
    }
    Ok((
        std::slice::from_raw_parts(input, len),
        std::slice::from_raw_parts_mut(output, len),
    ))
}

trait Pixel: Copy {
    fn decode(h: usize, w: usize, data: &[Self]) -> Result<ImageTensor, Error>;
    fn encode(img: &ImageTensor, out: &mut [Self]) -> Result<(), Error>;
}

impl Pixel for f32 {
    fn decode(h: usize, w: usize, data: &[f32]) -> Result<ImageTensor, Error> {
        ImageTensor::new(h, w, data.iter().map(|&v| f64::from(v)).collect())
    }

    fn encode(img: &ImageTensor, out: &mut [f32]) -> Result<(), Error> {
        for (o, &v) in out.iter_mut().zip(img.data()) {
            *o = v as f32;
        }
        Ok(())
    }
}

impl Pixel for u8 {
    fn decode(h: usize, w: usize, data: &[u8]) -> Result<ImageTensor, Error> {
        ImageTensor::from_u8(h, w, data)
    }

    fn encode(img: &ImageTensor, out: &mut [u8]) -> Result<(), Error> {
        out.copy_from_slice(&img.to_u8()?);
        Ok(())
    }
}

unsafe fn transform<T: Pixel>(
    cfg: &PipelineConfig,
    data: *const T,
    height: usize,
    width: usize,
    channels: usize,
    seed: u64,
    out: *mut T,
) -> Result<(), Failure> {
    let len = element_count(height, width, channels)?;
    let (input, output) = buffers(data, out, len)?;
    let img = T::decode(height, width, input)?;
    let result = cfg.apply(&img, seed)?;
    T::encode(&result, output)?;
    Ok(())
}

/// Library version, identical to the `physaug` crate version. Static storage.
#[no_mangle]
pub extern "C" fn physaug_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message for the last failed call on this thread, or `""`. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn physaug_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Configuration with every field at its default.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn physaug_config_default(out: *mut *mut PhysaugConfig) -> PhysaugStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = Box::new(PhysaugConfig { inner: PipelineConfig::default() });
        *out = Box::into_raw(cfg);
        Ok(())
    })
}

/// Parses a TOML config (same schema as the CLI `--config` file).
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn physaug_config_from_toml(
    toml: *const c_char,
    out: *mut *mut PhysaugConfig,
) -> PhysaugStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = str_arg(toml, "toml")?;
        let inner = PipelineConfig::from_toml_str(text).map_err(|e| Failure(PhysaugStatus::InvalidConfig, e.to_string()))?;
        *out = Box::into_raw(Box::new(PhysaugConfig { inner }));
        Ok(())
    })
}

/// Serializes a config to TOML. Release the string with [`physaug_string_free`].
///
/// # Safety
/// `cfg` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn physaug_config_to_toml(
    cfg: *const PhysaugConfig,
    out: *mut *mut c_char,
) -> PhysaugStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = ref_arg(cfg, "cfg")?;
        let text = CString::new(cfg.inner.to_toml_string())
            .map_err(|_| invalid("config contains NUL"))?;
        *out = text.into_raw();
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn physaug_config_free(cfg: *mut PhysaugConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn physaug_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Seed of the `sample`-th augmentation of the item keyed by `item_key`,
/// as used by the batch CLI for a file at that relative path.
///
/// # Safety
/// `item_key` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn physaug_derive_seed(
    global_seed: u64,
    item_key: *const c_char,
    sample: u64,
    out: *mut u64,
) -> PhysaugStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let key = str_arg(item_key, "item_key")?;
        *out = derive_sample_seed(&SeedSpec::new(global_seed, key), sample)?;
        Ok(())
    })
}

/// Applies the configured mode to a float image with values in `[0, 1]`.
///
/// # Safety
/// `data` and `out` must each hold `height * width * channels` floats and
/// must not overlap.
#[no_mangle]
pub unsafe extern "C" fn physaug_transform_f32(
    cfg: *const PhysaugConfig,
    data: *const f32,
    height: usize,
    width: usize,
    channels: usize,
    seed: u64,
    out: *mut f32,
) -> PhysaugStatus {
    guard(|| transform(&ref_arg(cfg, "cfg")?.inner, data, height, width, channels, seed, out))
}

/// Applies the configured mode to an 8-bit image (`v / 255` in, `round(v * 255)` out).
///
/// # Safety
/// `data` and `out` must each hold `height * width * channels` bytes and
/// must not overlap.
#[no_mangle]
pub unsafe extern "C" fn physaug_transform_u8(
    cfg: *const PhysaugConfig,
    data: *const u8,
    height: usize,
    width: usize,
    channels: usize,
    seed: u64,
    out: *mut u8,
) -> PhysaugStatus {
    guard(|| transform(&ref_arg(cfg, "cfg")?.inner, data, height, width, channels, seed, out))
}

/// Creates a sampler; the config is copied, so `cfg` may be freed afterwards.
///
/// # Safety
/// `cfg` must be a live handle, `item_key` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn physaug_sampler_new(
    cfg: *const PhysaugConfig,
    global_seed: u64,
    item_key: *const c_char,
    out: *mut *mut PhysaugSampler,
) -> PhysaugStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let config = ref_arg(cfg, "cfg")?.inner.clone();
        let key = str_arg(item_key, "item_key")?;
        if key.is_empty() {
            return Err(invalid("item_key must be non-empty"));
        }
        *out = Box::into_raw(Box::new(PhysaugSampler {
            config,
            spec: SeedSpec::new(global_seed, key),
            next_sample: 0,
        }));
        Ok(())
    })
}

unsafe fn sampler_next<T: Pixel>(
    sampler: *mut PhysaugSampler,
    data: *const T,
    height: usize,
    width: usize,
    channels: usize,
    out: *mut T,
) -> Result<(), Failure> {
    let s = sampler.as_mut().ok_or_else(|| null("sampler"))?;
    let seed = derive_sample_seed(&s.spec, s.next_sample)?;
    transform(&s.config, data, height, width, channels, seed, out)?;
    s.next_sample += 1;
    Ok(())
}

/// Writes the next augmentation of `data`. The counter only advances on success.
///
/// # Safety
/// As [`physaug_transform_f32`]; `sampler` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn physaug_sampler_next_f32(
    sampler: *mut PhysaugSampler,
    data: *const f32,
    height: usize,
    width: usize,
    channels: usize,
    out: *mut f32,
) -> PhysaugStatus {
    guard(|| sampler_next(sampler, data, height, width, channels, out))
}

/// # Safety
/// As [`physaug_transform_u8`]; `sampler` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn physaug_sampler_next_u8(
    sampler: *mut PhysaugSampler,
    data: *const u8,
    height: usize,
    width: usize,
    channels: usize,
    out: *mut u8,
) -> PhysaugStatus {
    guard(|| sampler_next(sampler, data, height, width, channels, out))
}

/// # Safety
/// `sampler` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn physaug_sampler_free(sampler: *mut PhysaugSampler) {
    if !sampler.is_null() {
        drop(Box::from_raw(sampler));
    }
}
