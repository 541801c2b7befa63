#![allow(dead_code)]

use std::path::PathBuf;

use mdwc_core::par::Exec;
use mdwc_core::transform::forward_dwt97_real;
use mdwc_core::weights::{Weights, CONTEXT_LEN};
use mdwc_core::{ImagePlane, WaveletPyramid};
use rand::Rng;

/// Natural test images looked up in `tests/data`; not all of them ship.
pub const IMAGES: [&str; 4] = ["lena", "goldhill", "barbara", "boat"];

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

pub fn load(name: &str) -> Option<ImagePlane> {
    let path = data_dir().join(format!("{name}.pgm"));
    path.exists()
        .then(|| ImagePlane::read_pgm(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
}

pub fn available() -> Vec<(&'static str, ImagePlane)> {
    IMAGES.iter().filter_map(|&n| load(n).map(|img| (n, img))).collect()
}

pub fn pyramid_of(img: &ImagePlane, levels: u8) -> WaveletPyramid {
    forward_dwt97_real(&img.to_real(), img.width(), img.height(), levels, Exec::Sequential).unwrap()
}

/// Sparse, heavy-tailed coefficients with some clustering, like a real
/// detail band, and a strong LL.
pub fn random_pyramid(rng: &mut impl Rng, width: usize, height: usize, levels: u8) -> WaveletPyramid {
    let mut p = WaveletPyramid::zeros(width, height, levels).unwrap();
    let bands = p.subbands();
    for sb in &bands {
        let ll = sb.orientation == mdwc_core::Orientation::LL;
        let density: f64 = if ll { 1.0 } else { rng.gen_range(0.02..0.4) };
        let scale: f64 = if ll { 800.0 } else { rng.gen_range(4.0..200.0) };
        let mut grid = vec![0.0; sb.len()];
        for v in grid.iter_mut() {
            if rng.gen_bool(density) {
                let mag = scale * rng.gen::<f64>().powi(3);
                *v = if ll { mag + 50.0 } else if rng.gen() { mag } else { -mag };
            } else {
                *v = rng.gen_range(-1.5..1.5);
            }
        }
        // smear to make neighbours correlated
        if !ll && rng.gen_bool(0.5) {
            let g = grid.clone();
            for i in 0..sb.rows {
                for j in 0..sb.cols {
                    if j + 1 < sb.cols {
                        grid[i * sb.cols + j] += 0.5 * g[i * sb.cols + j + 1];
                    }
                }
            }
        }
        for i in 0..sb.rows {
            for j in 0..sb.cols {
                let k = p.index(sb, i, j);
                p.coeffs_mut()[k] = grid[i * sb.cols + j];
            }
        }
    }
    p
}

/// A random image pushed through the transform.
pub fn random_image_pyramid(rng: &mut impl Rng, width: usize, height: usize, levels: u8) -> WaveletPyramid {
    let base: f64 = rng.gen_range(30.0..220.0);
    let x: Vec<f64> = (0..width * height)
        .map(|k| {
            let (i, j) = ((k / width) as f64, (k % width) as f64);
            (base + 40.0 * (i * 0.3).sin() * (j * 0.2).cos() + rng.gen_range(-20.0..20.0)).clamp(0.0, 255.0)
        })
        .collect();
    forward_dwt97_real(&x, width, height, levels, Exec::Sequential).unwrap()
}

pub fn random_weights(rng: &mut impl Rng) -> Weights {
    let mut q = [[0i16; CONTEXT_LEN]; 3];
    for w in q.iter_mut().flatten() {
        *w = rng.gen_range(-8000..8000);
    }
    Weights::from_quantized(q)
}
