//! Context weights: a 14-term linear predictor of coefficient magnitude,
//! trained per detail orientation by least squares and reused at coding time
//! to rank group members by predicted significance.
//!
//! The context of a coefficient is twelve spatial neighbours in its own
//! subband, its parent one level coarser and the mean of its four children
//! one level finer. Relatives that fall outside the pyramid contribute 0.

use crate::par::{self, Exec};
use crate::transform::{Orientation, Subband, WaveletPyramid};
use crate::{Error, Result};

pub const CONTEXT_LEN: usize = 14;

/// Row/column offsets of the twelve spatial neighbours, in feature order.
pub const SPATIAL_OFFSETS: [(isize, isize); 12] = [
    (-2, 0),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -2),
    (0, -1),
    (0, 1),
    (0, 2),
    (1, -1),
    (1, 0),
    (1, 1),
    (2, 0),
];

pub const PARENT_FEATURE: usize = 12;
pub const CHILDREN_FEATURE: usize = 13;

/// Fractional bits of the transmitted fixed-point weights.
pub const WEIGHT_FRAC_BITS: u32 = 12;
const WEIGHT_SCALE: f64 = (1u32 << WEIGHT_FRAC_BITS) as f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextVector(pub [f64; CONTEXT_LEN]);

/// What a context feature measures.
#[derive(Clone, Copy)]
pub enum ContextMode<'a> {
    /// Absolute coefficient values, used for training.
    Magnitude,
    /// 1 when the relative at this flat index is already known significant.
    Significance(&'a dyn Fn(usize) -> bool),
}

/// Parent position (one level coarser, same orientation), if it exists.
pub fn parent_of(p: &WaveletPyramid, sb: &Subband, i: usize, j: usize) -> Option<(Subband, usize, usize)> {
    let parent = p.subband(sb.level + 1, sb.orientation)?;
    let (pi, pj) = (i / 2, j / 2);
    (pi < parent.rows && pj < parent.cols).then_some((parent, pi, pj))
}

/// Child subband (one level finer, same orientation) for detail bands.
pub fn child_band(p: &WaveletPyramid, sb: &Subband) -> Option<Subband> {
    if sb.level <= 1 || sb.orientation == Orientation::LL {
        return None;
    }
    p.subband(sb.level - 1, sb.orientation)
}

pub fn build_context(
    p: &WaveletPyramid,
    sb: &Subband,
    i: usize,
    j: usize,
    mode: ContextMode<'_>,
) -> Result<ContextVector> {
    if sb.orientation == Orientation::LL {
        return Err(Error::invalid("LL coefficients have no weight context"));
    }
    Ok(context_unchecked(p, sb, i, j, mode))
}

pub(crate) fn context_unchecked(
    p: &WaveletPyramid,
    sb: &Subband,
    i: usize,
    j: usize,
    mode: ContextMode<'_>,
) -> ContextVector {
    let feature = |flat: usize| match mode {
        ContextMode::Magnitude => p.coeffs()[flat].abs(),
        ContextMode::Significance(sig) => f64::from(u8::from(sig(flat))),
    };
    let mut v = [0.0; CONTEXT_LEN];
    for (k, &(di, dj)) in SPATIAL_OFFSETS.iter().enumerate() {
        let (ni, nj) = (i as isize + di, j as isize + dj);
        if sb.contains(ni, nj) {
            v[k] = feature(p.index(sb, ni as usize, nj as usize));
        }
    }
    if let Some((parent, pi, pj)) = parent_of(p, sb, i, j) {
        v[PARENT_FEATURE] = feature(p.index(&parent, pi, pj));
    }
    if let Some(child) = child_band(p, sb) {
        let kids = (0..4).filter_map(|k| {
            let (ci, cj) = (2 * i + k / 2, 2 * j + k % 2);
            (ci < child.rows && cj < child.cols).then(|| p.index(&child, ci, cj))
        });
        v[CHILDREN_FEATURE] = match mode {
            ContextMode::Magnitude => kids.map(feature).sum::<f64>() / 4.0,
            ContextMode::Significance(sig) => f64::from(u8::from(kids.into_iter().any(sig))),
        };
    }
    ContextVector(v)
}

/// Solution of the ridge-regularised normal equations.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSolution {
    pub alpha: [f64; CONTEXT_LEN],
    pub lambda: f64,
}

/// Solve `(CᵀC + λI) α = Cᵀx` with `λ = 1e-6·trace(CᵀC)/14`.
///
/// Accumulation runs in row order so the result is reproducible bit for bit.
pub fn solve_ridge(rows: &[[f64; CONTEXT_LEN]], targets: &[f64]) -> Result<RidgeSolution> {
    assert_eq!(rows.len(), targets.len());
    if rows.len() < CONTEXT_LEN {
        return Err(Error::DegenerateTraining(format!(
            "{} rows for {CONTEXT_LEN} unknowns",
            rows.len()
        )));
    }
    let mut gram = [[0.0; CONTEXT_LEN]; CONTEXT_LEN];
    let mut rhs = [0.0; CONTEXT_LEN];
    for (row, &t) in rows.iter().zip(targets) {
        for a in 0..CONTEXT_LEN {
            if row[a] == 0.0 {
                continue;
            }
            rhs[a] += row[a] * t;
            for b in a..CONTEXT_LEN {
                gram[a][b] += row[a] * row[b];
            }
        }
    }
    for a in 0..CONTEXT_LEN {
        for b in 0..a {
            gram[a][b] = gram[b][a];
        }
    }
    let trace: f64 = (0..CONTEXT_LEN).map(|k| gram[k][k]).sum();
    if !(trace > 0.0) {
        return Err(Error::DegenerateTraining("all context features are zero".into()));
    }
    let lambda = 1e-6 * trace / CONTEXT_LEN as f64;
    for (k, row) in gram.iter_mut().enumerate() {
        row[k] += lambda;
    }
    let alpha = cholesky_solve(gram, rhs)
        .ok_or_else(|| Error::DegenerateTraining("normal matrix is not positive definite".into()))?;
    Ok(RidgeSolution { alpha, lambda })
}

fn cholesky_solve(
    mut a: [[f64; CONTEXT_LEN]; CONTEXT_LEN],
    b: [f64; CONTEXT_LEN],
) -> Option<[f64; CONTEXT_LEN]> {
    const N: usize = CONTEXT_LEN;
    // lower factor overwrites the lower triangle
    for j in 0..N {
        let mut d = a[j][j];
        for k in 0..j {
            d -= a[j][k] * a[j][k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..N {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    let mut y = [0.0; N];
    for i in 0..N {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i][k] * y[k];
        }
        y[i] = s / a[i][i];
    }
    let mut x = [0.0; N];
    for i in (0..N).rev() {
        let mut s = y[i];
        for k in i + 1..N {
            s -= a[k][i] * x[k];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}

/// Training rows for one orientation: every coefficient of that orientation
/// from level 2 up to the coarsest, in subband then raster order.
pub fn training_rows(p: &WaveletPyramid, orientation: Orientation) -> (Vec<[f64; CONTEXT_LEN]>, Vec<f64>) {
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for level in 2..=p.levels() {
        let Some(sb) = p.subband(level, orientation) else {
            continue;
        };
        for i in 0..sb.rows {
            for j in 0..sb.cols {
                rows.push(context_unchecked(p, &sb, i, j, ContextMode::Magnitude).0);
                targets.push(p.get(&sb, i, j).abs());
            }
        }
    }
    (rows, targets)
}

/// Weights for one detail orientation, with their transmitted fixed-point form.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub orientation: Orientation,
    /// Unclamped solver output (encoder side only; zeros when decoded).
    pub raw: [f64; CONTEXT_LEN],
    pub quantized: [i16; CONTEXT_LEN],
}

impl WeightSet {
    pub fn zeros(orientation: Orientation) -> Self {
        WeightSet {
            orientation,
            raw: [0.0; CONTEXT_LEN],
            quantized: [0; CONTEXT_LEN],
        }
    }

    pub fn from_real(orientation: Orientation, raw: [f64; CONTEXT_LEN]) -> Self {
        WeightSet {
            orientation,
            raw,
            quantized: raw.map(quantize_weight),
        }
    }

    pub fn from_quantized(orientation: Orientation, quantized: [i16; CONTEXT_LEN]) -> Self {
        WeightSet {
            orientation,
            raw: [0.0; CONTEXT_LEN],
            quantized,
        }
    }

    /// The values both codec sides use.
    pub fn alphas(&self) -> [f64; CONTEXT_LEN] {
        self.quantized.map(dequantize_weight)
    }
}

pub fn quantize_weight(alpha: f64) -> i16 {
    if alpha.is_nan() {
        return 0;
    }
    (alpha * WEIGHT_SCALE).round().clamp(-32767.0, 32767.0) as i16
}

pub fn dequantize_weight(q: i16) -> f64 {
    f64::from(q) / WEIGHT_SCALE
}

pub fn train_weights(p: &WaveletPyramid, orientation: Orientation) -> Result<WeightSet> {
    if orientation == Orientation::LL {
        return Err(Error::invalid("LL is coded without weights"));
    }
    if p.levels() < 2 {
        return Err(Error::DegenerateTraining("need at least two levels".into()));
    }
    let (rows, targets) = training_rows(p, orientation);
    let sol = solve_ridge(&rows, &targets)?;
    Ok(WeightSet::from_real(orientation, sol.alpha))
}

/// The three weight sets in HL, LH, HH order.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub sets: [WeightSet; 3],
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            sets: Orientation::DETAIL.map(WeightSet::zeros),
        }
    }
}

impl Weights {
    /// Train all three orientations; degenerate ones fall back to zeros.
    pub fn train(p: &WaveletPyramid, exec: Exec) -> Self {
        let sets = par::map(exec, &Orientation::DETAIL, |&o| {
            train_weights(p, o).unwrap_or_else(|_| WeightSet::zeros(o))
        });
        let mut it = sets.into_iter();
        Weights {
            sets: [(); 3].map(|_| it.next().expect("three orientations")),
        }
    }

    pub fn for_orientation(&self, o: Orientation) -> Option<&WeightSet> {
        o.detail_index().map(|k| &self.sets[k])
    }

    pub fn quantized(&self) -> [[i16; CONTEXT_LEN]; 3] {
        [0, 1, 2].map(|k| self.sets[k].quantized)
    }

    pub fn from_quantized(q: [[i16; CONTEXT_LEN]; 3]) -> Self {
        Weights {
            sets: [0, 1, 2].map(|k| WeightSet::from_quantized(Orientation::DETAIL[k], q[k])),
        }
    }
}

/// `W = Σ αₖ Sₖ` over the significance-mode context.
pub fn significance_degree(alphas: &[f64; CONTEXT_LEN], ctx: &ContextVector) -> f64 {
    alphas.iter().zip(ctx.0.iter()).map(|(a, s)| a * s).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pyramid_with(levels: u8, f: impl Fn(&mut WaveletPyramid)) -> WaveletPyramid {
        let mut p = WaveletPyramid::zeros(32, 32, levels).unwrap();
        f(&mut p);
        p
    }

    #[test]
    fn corner_context_is_zero_at_finest_level() {
        let p = pyramid_with(3, |p| p.coeffs_mut().iter_mut().for_each(|c| *c = 3.0));
        let sb = p.subband(1, Orientation::HH).unwrap();
        let ctx = build_context(&p, &sb, 0, 0, ContextMode::Magnitude).unwrap();
        // neighbours above/left are out of the subband, children absent
        for k in [0, 1, 2, 3, 4, 5, 8] {
            assert_eq!(ctx.0[k], 0.0, "feature {k}");
        }
        assert_eq!(ctx.0[CHILDREN_FEATURE], 0.0);
        assert_eq!(ctx.0[6], 3.0);
        assert_eq!(ctx.0[PARENT_FEATURE], 3.0);
    }

    #[test]
    fn only_parent_set() {
        let p = pyramid_with(3, |p| {
            let parent = p.subband(3, Orientation::LH).unwrap();
            let k = p.index(&parent, 1, 2);
            p.coeffs_mut()[k] = -10.0;
        });
        let sb = p.subband(2, Orientation::LH).unwrap();
        let ctx = build_context(&p, &sb, 2, 5, ContextMode::Magnitude).unwrap();
        let mut expect = [0.0; CONTEXT_LEN];
        expect[PARENT_FEATURE] = 10.0;
        assert_eq!(ctx.0, expect);
    }

    #[test]
    fn coarsest_detail_has_no_parent_and_children_average() {
        let p = pyramid_with(2, |p| {
            let child = p.subband(1, Orientation::HL).unwrap();
            for (k, v) in [(0, 4.0), (1, -8.0), (2, 0.0), (3, 2.0)] {
                let idx = p.index(&child, 2 + k / 2, 6 + k % 2);
                p.coeffs_mut()[idx] = v;
            }
        });
        let sb = p.subband(2, Orientation::HL).unwrap();
        let ctx = build_context(&p, &sb, 1, 3, ContextMode::Magnitude).unwrap();
        assert_eq!(ctx.0[PARENT_FEATURE], 0.0);
        assert_eq!(ctx.0[CHILDREN_FEATURE], 3.5);
    }

    #[test]
    fn significance_mode_reads_the_map() {
        let p = WaveletPyramid::zeros(32, 32, 3).unwrap();
        let sb = p.subband(2, Orientation::HH).unwrap();
        let none = |_: usize| false;
        let ctx = build_context(&p, &sb, 3, 3, ContextMode::Significance(&none)).unwrap();
        assert_eq!(ctx.0, [0.0; CONTEXT_LEN]);

        let left = p.index(&sb, 3, 2);
        let child = p.index(&p.subband(1, Orientation::HH).unwrap(), 7, 6);
        let sig = move |f: usize| f == left || f == child;
        let ctx = build_context(&p, &sb, 3, 3, ContextMode::Significance(&sig)).unwrap();
        let mut expect = [0.0; CONTEXT_LEN];
        expect[5] = 1.0;
        expect[CHILDREN_FEATURE] = 1.0;
        assert_eq!(ctx.0, expect);
    }

    #[test]
    fn ll_has_no_context() {
        let p = WaveletPyramid::zeros(16, 16, 2).unwrap();
        let ll = p.subband(2, Orientation::LL).unwrap();
        assert!(build_context(&p, &ll, 0, 0, ContextMode::Magnitude).is_err());
    }

    #[test]
    fn degree_examples() {
        let zero = ContextVector([0.0; CONTEXT_LEN]);
        let mut a = [0.0; CONTEXT_LEN];
        a[0] = 1.0;
        assert_eq!(significance_degree(&a, &zero), 0.0);
        let mut s = [0.0; CONTEXT_LEN];
        s[0] = 1.0;
        assert_eq!(significance_degree(&a, &ContextVector(s)), 1.0);

        let mut a = [0.0; CONTEXT_LEN];
        a[0] = 0.5;
        a[1] = -0.25;
        a[13] = 1.0;
        let mut s = [0.0; CONTEXT_LEN];
        s[0] = 1.0;
        s[1] = 1.0;
        s[13] = 1.0;
        assert_eq!(significance_degree(&a, &ContextVector(s)), 1.25);
    }

    #[test]
    fn quantization_is_idempotent_and_clamped() {
        for &a in &[0.0, 1.0, -2.6125, 7.9999, 12.0, -9.5, 1e-5] {
            let q = quantize_weight(a);
            let d = dequantize_weight(q);
            assert_eq!(quantize_weight(d), q);
            assert!(d.abs() < 8.0);
        }
    }

    #[test]
    fn too_few_rows_or_all_zero_is_degenerate() {
        let rows = vec![[1.0; CONTEXT_LEN]; 13];
        assert!(matches!(solve_ridge(&rows, &[1.0; 13]), Err(Error::DegenerateTraining(_))));
        let rows = vec![[0.0; CONTEXT_LEN]; 100];
        assert!(matches!(solve_ridge(&rows, &[0.0; 100]), Err(Error::DegenerateTraining(_))));

        let p = WaveletPyramid::zeros(64, 64, 4).unwrap();
        assert!(matches!(train_weights(&p, Orientation::HL), Err(Error::DegenerateTraining(_))));
        let w = Weights::train(&p, Exec::Sequential);
        assert_eq!(w, Weights::default());
    }
}
