//! CDF 9/7 lifting wavelet transform and the subband pyramid it produces.
//!
//! Coefficients live in the usual Mallat layout: after each level the
//! lowpass quadrant occupies the top-left corner and the three detail bands
//! sit to its right (HL), below it (LH) and diagonally (HH). Odd lengths give
//! the extra sample to the lowpass half.
//!
//! Each 1-D pass is scaled so the lowpass DC gain and highpass Nyquist gain
//! are both √2, so a constant image `c` maps to an LL band of `c·2^levels`.

use crate::image::ImagePlane;
use crate::par::{self, Exec};
use crate::{Error, Result};

const ALPHA: f64 = -1.586_134_342_059_924;
const BETA: f64 = -0.052_980_118_572_961;
const GAMMA: f64 = 0.882_911_075_530_934;
const DELTA: f64 = 0.443_506_852_043_971;
/// Lowpass gain of the four unscaled lifting steps on a constant signal.
const K: f64 = 1.230_174_104_914_001;
const LOW_SCALE: f64 = std::f64::consts::SQRT_2 / K;
const HIGH_SCALE: f64 = K / std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    LL,
    HL,
    LH,
    HH,
}

impl Orientation {
    pub const DETAIL: [Orientation; 3] = [Orientation::HL, Orientation::LH, Orientation::HH];

    /// Index among the detail orientations (HL=0, LH=1, HH=2).
    pub fn detail_index(self) -> Option<usize> {
        match self {
            Orientation::LL => None,
            Orientation::HL => Some(0),
            Orientation::LH => Some(1),
            Orientation::HH => Some(2),
        }
    }
}

/// A rectangular subband inside the pyramid. `level` 1 is the finest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Subband {
    pub level: u8,
    pub orientation: Orientation,
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Subband {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.rows && (j as usize) < self.cols
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    width: usize,
    height: usize,
    levels: u8,
    coeffs: Vec<f64>,
}

impl WaveletPyramid {
    pub fn zeros(width: usize, height: usize, levels: u8) -> Result<Self> {
        Self::from_coeffs(width, height, levels, vec![0.0; width * height])
    }

    /// Wrap a Mallat-layout coefficient array.
    pub fn from_coeffs(width: usize, height: usize, levels: u8, coeffs: Vec<f64>) -> Result<Self> {
        check_dims(width, height, levels)?;
        if coeffs.len() != width * height {
            return Err(Error::invalid(format!(
                "pyramid holds {} coefficients, expected {}",
                coeffs.len(),
                width * height
            )));
        }
        Ok(WaveletPyramid {
            width,
            height,
            levels,
            coeffs,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> u8 {
        self.levels
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Width and height of the lowpass region after `level` decompositions.
    pub fn low_dims(&self, level: u8) -> (usize, usize) {
        low_dims(self.width, self.height, level)
    }

    pub fn subband(&self, level: u8, orientation: Orientation) -> Option<Subband> {
        if level == 0 || level > self.levels {
            return None;
        }
        if orientation == Orientation::LL && level != self.levels {
            return None;
        }
        let (pw, ph) = self.low_dims(level - 1);
        let (w, h) = self.low_dims(level);
        let (row0, col0, rows, cols) = match orientation {
            Orientation::LL => (0, 0, h, w),
            Orientation::HL => (0, w, h, pw - w),
            Orientation::LH => (h, 0, ph - h, w),
            Orientation::HH => (h, w, ph - h, pw - w),
        };
        Some(Subband {
            level,
            orientation,
            row0,
            col0,
            rows,
            cols,
        })
    }

    /// LL first, then HL, LH, HH from the coarsest level to the finest.
    pub fn subbands(&self) -> Vec<Subband> {
        let mut out = Vec::with_capacity(1 + 3 * self.levels as usize);
        out.extend(self.subband(self.levels, Orientation::LL));
        for level in (1..=self.levels).rev() {
            for o in Orientation::DETAIL {
                out.extend(self.subband(level, o));
            }
        }
        out
    }

    pub fn index(&self, sb: &Subband, i: usize, j: usize) -> usize {
        (sb.row0 + i) * self.width + sb.col0 + j
    }

    pub fn get(&self, sb: &Subband, i: usize, j: usize) -> f64 {
        self.coeffs[self.index(sb, i, j)]
    }

    /// Inverse of [`WaveletPyramid::index`].
    pub fn locate(&self, flat: usize) -> (Subband, usize, usize) {
        let (r, c) = (flat / self.width, flat % self.width);
        for sb in self.subbands() {
            if r >= sb.row0 && r < sb.row0 + sb.rows && c >= sb.col0 && c < sb.col0 + sb.cols {
                return (sb, r - sb.row0, c - sb.col0);
            }
        }
        unreachable!("subbands tile the pyramid")
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

pub(crate) fn low_dims(width: usize, height: usize, level: u8) -> (usize, usize) {
    let (mut w, mut h) = (width, height);
    for _ in 0..level {
        w = w.div_ceil(2);
        h = h.div_ceil(2);
    }
    (w, h)
}

fn check_dims(width: usize, height: usize, levels: u8) -> Result<()> {
    if levels == 0 {
        return Err(Error::invalid("at least one decomposition level is required"));
    }
    let need = 1usize.checked_shl(levels as u32).unwrap_or(usize::MAX);
    if width < need || height < need {
        return Err(Error::invalid(format!(
            "{width}x{height} is too small for {levels} levels (needs {need} per side)"
        )));
    }
    Ok(())
}

pub fn forward_dwt97(image: &ImagePlane, levels: u8) -> Result<WaveletPyramid> {
    forward_dwt97_real(&image.to_real(), image.width(), image.height(), levels, Exec::default())
}

pub fn forward_dwt97_real(
    samples: &[f64],
    width: usize,
    height: usize,
    levels: u8,
    exec: Exec,
) -> Result<WaveletPyramid> {
    check_dims(width, height, levels)?;
    if samples.len() != width * height {
        return Err(Error::invalid("sample count does not match dimensions"));
    }
    let mut coeffs = samples.to_vec();
    for level in 0..levels {
        let (w, h) = low_dims(width, height, level);
        rows_pass(exec, &mut coeffs, width, w, h, analyze);
        columns_pass(exec, &mut coeffs, width, w, h, analyze);
    }
    WaveletPyramid::from_coeffs(width, height, levels, coeffs)
}

/// Reconstruct real-valued samples; round and clamp with [`ImagePlane::from_real`].
pub fn inverse_dwt97(pyramid: &WaveletPyramid) -> Result<Vec<f64>> {
    inverse_dwt97_with(pyramid, Exec::default())
}

pub fn inverse_dwt97_with(pyramid: &WaveletPyramid, exec: Exec) -> Result<Vec<f64>> {
    let (width, height, levels) = (pyramid.width, pyramid.height, pyramid.levels);
    check_dims(width, height, levels)?;
    if pyramid.coeffs.len() != width * height {
        return Err(Error::invalid("pyramid coefficient count is inconsistent"));
    }
    let mut coeffs = pyramid.coeffs.clone();
    for level in (0..levels).rev() {
        let (w, h) = low_dims(width, height, level);
        columns_pass(exec, &mut coeffs, width, w, h, synthesize);
        rows_pass(exec, &mut coeffs, width, w, h, synthesize);
    }
    Ok(coeffs)
}

pub fn inverse_to_image(pyramid: &WaveletPyramid) -> Result<ImagePlane> {
    let real = inverse_dwt97(pyramid)?;
    ImagePlane::from_real(pyramid.width, pyramid.height, &real)
}

fn rows_pass(exec: Exec, data: &mut [f64], stride: usize, w: usize, h: usize, f: fn(&mut [f64])) {
    par::for_each_chunk_mut(exec, &mut data[..h * stride], stride, |_, row| f(&mut row[..w]));
}

fn columns_pass(exec: Exec, data: &mut [f64], stride: usize, w: usize, h: usize, f: fn(&mut [f64])) {
    let mut t = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            t[c * h + r] = data[r * stride + c];
        }
    }
    par::for_each_chunk_mut(exec, &mut t, h, |_, col| f(col));
    for r in 0..h {
        for c in 0..w {
            data[r * stride + c] = t[c * h + r];
        }
    }
}

/// Whole-sample symmetric neighbour: x[-1] = x[1], x[n] = x[n-2].
#[inline]
fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    j as usize
}

fn lift_step(x: &mut [f64], parity: usize, coef: f64) {
    let n = x.len();
    let mut i = parity;
    while i < n {
        let l = x[mirror(i as isize - 1, n)];
        let r = x[mirror(i as isize + 1, n)];
        x[i] += coef * (l + r);
        i += 2;
    }
}

/// One analysis level in place: lowpass to the front half, highpass to the back.
fn analyze(x: &mut [f64]) {
    let n = x.len();
    if n < 2 {
        return;
    }
    lift_step(x, 1, ALPHA);
    lift_step(x, 0, BETA);
    lift_step(x, 1, GAMMA);
    lift_step(x, 0, DELTA);
    let half = n.div_ceil(2);
    let mut tmp = vec![0.0; n];
    for (i, v) in x.iter().enumerate() {
        if i % 2 == 0 {
            tmp[i / 2] = v * LOW_SCALE;
        } else {
            tmp[half + i / 2] = v * HIGH_SCALE;
        }
    }
    x.copy_from_slice(&tmp);
}

fn synthesize(x: &mut [f64]) {
    let n = x.len();
    if n < 2 {
        return;
    }
    let half = n.div_ceil(2);
    let mut tmp = vec![0.0; n];
    for (i, t) in tmp.iter_mut().enumerate() {
        *t = if i % 2 == 0 {
            x[i / 2] / LOW_SCALE
        } else {
            x[half + i / 2] / HIGH_SCALE
        };
    }
    lift_step(&mut tmp, 0, -DELTA);
    lift_step(&mut tmp, 1, -GAMMA);
    lift_step(&mut tmp, 0, -BETA);
    lift_step(&mut tmp, 1, -ALPHA);
    x.copy_from_slice(&tmp);
}
