//! Image-level helpers: compress, decompress, and rate sweeps.
//!
//! Rates are in bits per pixel and cover the whole stream, header included;
//! the payload budget is what is left after the 96-byte header.

use crate::analysis::{coded_group_histograms, histogram_csv, m_histogram, MHistogram};
use crate::bitio::Mode;
use crate::codec::{self, Budget, Instrument};
use crate::container::{CodedStream, HEADER_BITS};
use crate::image::ImagePlane;
use crate::metrics::psnr;
use crate::par::{self, Exec};
use crate::transform::{forward_dwt97_real, inverse_dwt97_with, WaveletPyramid};
use crate::weights::Weights;
use crate::{Error, Result};

pub const DEFAULT_LEVELS: u8 = 5;

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub levels: u8,
    pub mode: Mode,
    pub exec: Exec,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            levels: DEFAULT_LEVELS,
            mode: Mode::Raw,
            exec: Exec::default(),
        }
    }
}

/// Payload budget for a total rate of `rate` bits per pixel.
pub fn rate_to_budget(rate: f64, pixels: usize) -> Result<Budget> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::invalid(format!("rate {rate} must be a finite nonnegative number")));
    }
    let total = (rate * pixels as f64).floor() as u64;
    Ok(Budget::bits(total.saturating_sub(HEADER_BITS)))
}

fn budget_for(rate: Option<f64>, pixels: usize) -> Result<Budget> {
    rate.map_or(Ok(Budget::UNLIMITED), |r| rate_to_budget(r, pixels))
}

/// Transform and train weights: everything the encoder needs before coding.
pub struct Analysed {
    pub pyramid: WaveletPyramid,
    pub weights: Weights,
}

pub fn analyse(image: &ImagePlane, opts: &Options) -> Result<Analysed> {
    let pyramid = forward_dwt97_real(&image.to_real(), image.width(), image.height(), opts.levels, opts.exec)?;
    let weights = Weights::train(&pyramid, opts.exec);
    Ok(Analysed { pyramid, weights })
}

/// Encode `image` at `rate` bpp (`None` codes every bitplane).
pub fn compress(image: &ImagePlane, rate: Option<f64>, opts: &Options) -> Result<CodedStream> {
    let a = analyse(image, opts)?;
    let budget = budget_for(rate, image.width() * image.height())?;
    Ok(codec::encode(&a.pyramid, &a.weights, budget, opts.mode))
}

/// Decode a stream, optionally stopping at `rate` bpp.
pub fn decompress(stream: &CodedStream, rate: Option<f64>, exec: Exec) -> Result<ImagePlane> {
    let h = &stream.header;
    let pyramid = codec::decode(stream, budget_for(rate, h.width * h.height)?)?;
    to_image(&pyramid, exec)
}

pub fn to_image(pyramid: &WaveletPyramid, exec: Exec) -> Result<ImagePlane> {
    ImagePlane::from_real(pyramid.width(), pyramid.height(), &inverse_dwt97_with(pyramid, exec)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdPoint {
    pub rate_bpp: f64,
    pub psnr_db: f64,
    /// Size of the stream an encode at this rate produces.
    pub bytes: usize,
}

/// PSNR at each rate. The transform and training run once; each rate is
/// then coded independently, spread over threads when `exec` allows.
pub fn rd_sweep(image: &ImagePlane, rates: &[f64], opts: &Options) -> Result<Vec<RdPoint>> {
    let a = analyse(image, opts)?;
    let pixels = image.width() * image.height();
    let budgets = rates
        .iter()
        .map(|&r| rate_to_budget(r, pixels))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(f64, Budget)> = rates.iter().copied().zip(budgets).collect();
    par::map(opts.exec, &jobs, |&(rate, budget)| {
        let out = codec::encode_instrumented(&a.pyramid, &a.weights, budget, opts.mode, Instrument::default());
        // the encoder's own reconstruction is exactly what a decoder would get
        let recon = to_image(out.state.recon(), Exec::Sequential)?;
        Ok(RdPoint {
            rate_bpp: rate,
            psnr_db: psnr(image, &recon)?,
            bytes: out.stream.to_bytes()?.len(),
        })
    })
    .into_iter()
    .collect()
}

pub fn rd_csv(points: &[RdPoint]) -> String {
    let mut s = String::from("rate_bpp,psnr_db,bytes\n");
    for p in points {
        s.push_str(&format!("{},{:.4},{}\n", p.rate_bpp, p.psnr_db, p.bytes));
    }
    s
}

/// Per-bitplane M-histograms, highest plane first.
pub struct PlaneHistograms {
    /// Significant members of the dilation groups the coder forms.
    pub groups: Vec<MHistogram>,
    /// Significant 8-neighbours of every significant detail coefficient.
    pub neighbours: Vec<MHistogram>,
}

pub fn plane_histograms(image: &ImagePlane, opts: &Options) -> Result<PlaneHistograms> {
    let a = analyse(image, opts)?;
    let (n_max, empty) = codec::compute_nmax(&a.pyramid);
    if empty {
        return Ok(PlaneHistograms {
            groups: Vec::new(),
            neighbours: Vec::new(),
        });
    }
    let planes: Vec<i32> = (0..=i32::from(n_max)).rev().collect();
    Ok(PlaneHistograms {
        groups: coded_group_histograms(&a.pyramid, &a.weights),
        neighbours: par::map(opts.exec, &planes, |&n| m_histogram(&a.pyramid, n)),
    })
}

impl PlaneHistograms {
    pub fn to_csv(&self) -> String {
        histogram_csv(&[("groups", &self.groups), ("neighbours", &self.neighbours)])
    }
}
