use crate::image::ImagePlane;
use crate::transform::WaveletPyramid;
use crate::{Error, Result};

/// Mean squared error between two 8-bit images.
pub fn mse(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::invalid(format!(
            "size mismatch: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let sum: u64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / a.samples().len() as f64)
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical images.
pub fn psnr(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(if m == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / m).log10()
    })
}

/// Mean squared error in the coefficient domain.
pub fn coefficient_mse(a: &WaveletPyramid, b: &WaveletPyramid) -> Result<f64> {
    if (a.width(), a.height(), a.levels()) != (b.width(), b.height(), b.levels()) {
        return Err(Error::invalid("pyramid geometry mismatch"));
    }
    let sum: f64 = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.coeffs().len() as f64)
}
