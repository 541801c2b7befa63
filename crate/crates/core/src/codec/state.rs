use crate::transform::{Subband, WaveletPyramid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Untested,
    /// Tested insignificant in the current bitplane.
    Insignificant,
    Significant,
}

/// A rectangle in subband-local coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSet {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

impl BlockSet {
    pub fn whole(sb: &Subband) -> Self {
        BlockSet {
            row: 0,
            col: 0,
            rows: sb.rows,
            cols: sb.cols,
        }
    }

    pub fn area(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_pixel(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    /// Top-left, top-right, bottom-left, bottom-right; empty quadrants skipped.
    pub fn quadrants(&self) -> impl Iterator<Item = BlockSet> {
        let top = self.rows.div_ceil(2);
        let left = self.cols.div_ceil(2);
        let me = *self;
        [
            (0, 0, top, left),
            (0, left, top, me.cols - left),
            (top, 0, me.rows - top, left),
            (top, left, me.rows - top, me.cols - left),
        ]
        .into_iter()
        .filter(|&(_, _, r, c)| r > 0 && c > 0)
        .map(move |(dr, dc, rows, cols)| BlockSet {
            row: me.row + dr,
            col: me.col + dc,
            rows,
            cols,
        })
    }
}

/// Running group statistics for one group size N.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GroupStats {
    pub total: u64,
    /// Groups observed with M = 0 (exact for group tests, first-bit proxy otherwise).
    pub zero: u64,
    /// Groups observed with M = 1 (exact for group tests, "10" proxy otherwise).
    pub one: u64,
}

/// Everything both codec sides track. Encoder and decoder hold identical
/// copies after every coded bit.
#[derive(Debug, Clone, PartialEq)]
pub struct CoderState {
    /// Reconstruction values; also provides the pyramid geometry.
    pub(crate) recon: WaveletPyramid,
    pub(crate) status: Vec<Status>,
    /// Bitplane at which each coefficient became significant (-1 if never).
    pub(crate) sig_plane: Vec<i16>,
    /// One list per subband, in coding order.
    pub(crate) lis: Vec<Vec<BlockSet>>,
    pub(crate) lsp: Vec<u32>,
    /// Indexed by N (slot 0 unused).
    pub(crate) stats: [GroupStats; 9],
    pub(crate) plane: i32,
    pub(crate) digest: u64,
}

const MIX: u64 = 0x517c_c1b7_2722_0a95;

impl CoderState {
    pub fn new(geometry: &WaveletPyramid) -> Self {
        let recon = WaveletPyramid::zeros(geometry.width(), geometry.height(), geometry.levels())
            .expect("geometry already validated");
        let n = recon.coeffs().len();
        let lis = recon.subbands().iter().map(|sb| vec![BlockSet::whole(sb)]).collect();
        CoderState {
            recon,
            status: vec![Status::Untested; n],
            sig_plane: vec![-1; n],
            lis,
            lsp: Vec::new(),
            stats: [GroupStats::default(); 9],
            plane: -1,
            digest: 0,
        }
    }

    pub fn recon(&self) -> &WaveletPyramid {
        &self.recon
    }

    pub fn into_recon(self) -> WaveletPyramid {
        self.recon
    }

    pub fn status(&self, idx: usize) -> Status {
        self.status[idx]
    }

    pub fn lsp(&self) -> &[u32] {
        &self.lsp
    }

    pub fn lis(&self) -> &[Vec<BlockSet>] {
        &self.lis
    }

    pub fn stats(&self) -> &[GroupStats; 9] {
        &self.stats
    }

    pub fn plane(&self) -> i32 {
        self.plane
    }

    /// Running hash over every mutation applied so far.
    pub fn digest(&self) -> u64 {
        self.digest
    }

    pub fn is_significant(&self, idx: usize) -> bool {
        self.status[idx] == Status::Significant
    }

    fn mix(&mut self, tag: u64, value: u64) {
        self.digest = (self.digest.rotate_left(5) ^ (tag << 56) ^ value).wrapping_mul(MIX);
    }

    pub(crate) fn begin_plane(&mut self, n: i32) {
        for s in &mut self.status {
            if *s == Status::Insignificant {
                *s = Status::Untested;
            }
        }
        self.plane = n;
        self.mix(1, n as u64);
    }

    pub(crate) fn threshold(&self) -> f64 {
        2f64.powi(self.plane)
    }

    pub(crate) fn mark_insignificant(&mut self, idx: usize) {
        debug_assert_eq!(self.status[idx], Status::Untested);
        self.status[idx] = Status::Insignificant;
        self.mix(2, idx as u64);
    }

    pub(crate) fn mark_significant(&mut self, idx: usize, negative: bool) {
        debug_assert_eq!(self.status[idx], Status::Untested);
        self.status[idx] = Status::Significant;
        self.sig_plane[idx] = self.plane as i16;
        let mag = 1.5 * self.threshold();
        self.recon.coeffs_mut()[idx] = if negative { -mag } else { mag };
        self.lsp.push(idx as u32);
        self.mix(3, (idx as u64) << 1 | u64::from(negative));
    }

    pub(crate) fn refine(&mut self, idx: usize, bit: bool) {
        let step = self.threshold() / 2.0;
        let v = &mut self.recon.coeffs_mut()[idx];
        let delta = if bit { step } else { -step };
        *v += if *v < 0.0 { -delta } else { delta };
        self.mix(4, (idx as u64) << 1 | u64::from(bit));
    }

    pub(crate) fn record_group(&mut self, n: usize, zero: bool, one: bool) {
        let s = &mut self.stats[n];
        s.total += 1;
        s.zero += u64::from(zero);
        s.one += u64::from(one);
        self.mix(5, (n as u64) << 2 | u64::from(zero) << 1 | u64::from(one));
    }

    pub(crate) fn set_lis(&mut self, band: usize, sets: Vec<BlockSet>) {
        let mut h = band as u64;
        for s in &sets {
            h = (h.rotate_left(7) ^ (s.row as u64) << 40 ^ (s.col as u64) << 20 ^ s.area() as u64).wrapping_mul(MIX);
        }
        self.lis[band] = sets;
        self.mix(6, h);
    }
}
