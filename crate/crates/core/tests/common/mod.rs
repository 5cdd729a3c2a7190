#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use physaug::ImageTensor;

/// Smooth gradient plus noise, deterministic per `seed`.
pub fn synthetic_rgb(seed: u64, width: u32, height: u32) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase: f64 = rng.random::<f64>() * 6.0;
    RgbImage::from_fn(width, height, |x, y| {
        let u = x as f64 / width as f64;
        let v = y as f64 / height as f64;
        let base = [
            0.5 + 0.4 * (6.0 * u + phase).sin(),
            0.3 + 0.6 * v,
            0.5 + 0.3 * (4.0 * (u + v) - phase).cos(),
        ];
        image::Rgb(base.map(|b| {
            let n: f64 = rng.random::<f64>() * 0.1 - 0.05;
            ((b + n).clamp(0.0, 1.0) * 255.0).round() as u8
        }))
    })
}

pub fn random_tensor(seed: u64, h: usize, w: usize) -> ImageTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ImageTensor::new(h, w, (0..h * w * 3).map(|_| rng.random::<f64>()).collect()).unwrap()
}

/// Writes `count` PNGs named `img_XXX.png` into `dir`.
pub fn write_corpus(dir: &Path, count: usize, width: u32, height: u32) -> Vec<PathBuf> {
    fs::create_dir_all(dir).unwrap();
    (0..count)
        .map(|i| {
            let p = dir.join(format!("img_{i:03}.png"));
            synthetic_rgb(i as u64, width, height).save(&p).unwrap();
            p
        })
        .collect()
}

/// Relative path -> SHA-256 hex of every file under `root`.
pub fn hash_tree(root: &Path) -> BTreeMap<String, String> {
    walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            let digest = Sha256::digest(fs::read(e.path()).unwrap());
            let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            (rel, hex)
        })
        .collect()
}
