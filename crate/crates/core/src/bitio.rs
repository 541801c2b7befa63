//! Bit sinks and sources.
//!
//! Raw mode packs bits MSB-first. Arithmetic mode is a 32-bit range coder
//! (carry handled through a cached byte) driven by three independent
//! adaptive zeroth-order models, one each for significance, sign and
//! refinement decisions.
//!
//! Both sides keep a synchronised running size in bits so a rate budget can
//! be honoured identically by encoder and decoder:
//!
//! - raw: the number of bits written/read;
//! - arithmetic: `8·(shifts + 4)`, the exact flushed size if the coder were
//!   finished now, where `shifts` counts renormalisations.
//!
//! A finished raw stream ends with a `1` marker bit padded with zeros, so the
//! reader recovers the exact bit length. A finished arithmetic stream that
//! reached its natural end carries one spare byte; a stream cut by a budget
//! does not. This lets a reader stop on exactly the same symbol as the writer
//! without any length field.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Significance,
    Sign,
    Refinement,
}

impl Model {
    fn slot(self) -> usize {
        match self {
            Model::Significance => 0,
            Model::Sign => 1,
            Model::Refinement => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Raw,
    Arithmetic,
}

/// The stream ran out (or the rate budget was reached); stop cleanly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncated;

impl fmt::Display for Truncated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("bit stream truncated")
    }
}

impl std::error::Error for Truncated {}

const COUNT_LIMIT: u32 = 1 << 16;
const TOP: u32 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Counts {
    zeros: u32,
    ones: u32,
}

impl Counts {
    const INIT: Counts = Counts { zeros: 1, ones: 1 };

    fn split(&self, range: u32) -> u32 {
        (range / (self.zeros + self.ones)) * self.zeros
    }

    fn update(&mut self, bit: bool) {
        if bit {
            self.ones += 1;
        } else {
            self.zeros += 1;
        }
        if self.zeros + self.ones >= COUNT_LIMIT {
            self.zeros = self.zeros.div_ceil(2);
            self.ones = self.ones.div_ceil(2);
        }
    }
}

/// Worst-case growth of the running size caused by one more symbol.
pub fn symbol_slack(mode: Mode) -> u64 {
    match mode {
        // the bit itself plus room for the end marker byte
        Mode::Raw => 1 + 8,
        // a symbol can shrink the range by 2^16: two renormalisation bytes,
        // plus the spare byte a natural end appends
        Mode::Arithmetic => 24,
    }
}

#[derive(Debug, Clone)]
pub struct BitSink {
    mode: Mode,
    out: Vec<u8>,
    // raw
    acc: u8,
    nacc: u8,
    nbits: u64,
    // arithmetic
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    first: bool,
    shifts: u64,
    symbols: u64,
    models: [Counts; 3],
}

impl BitSink {
    pub fn new(mode: Mode) -> Self {
        BitSink {
            mode,
            out: Vec::new(),
            acc: 0,
            nacc: 0,
            nbits: 0,
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            first: true,
            shifts: 0,
            symbols: 0,
            models: [Counts::INIT; 3],
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn put_bit(&mut self, bit: bool, model: Model) {
        match self.mode {
            Mode::Raw => {
                self.acc = (self.acc << 1) | u8::from(bit);
                self.nacc += 1;
                self.nbits += 1;
                if self.nacc == 8 {
                    self.out.push(self.acc);
                    self.acc = 0;
                    self.nacc = 0;
                }
            }
            Mode::Arithmetic => {
                self.symbols += 1;
                let m = &mut self.models[model.slot()];
                let bound = m.split(self.range);
                if bit {
                    self.low += u64::from(bound);
                    self.range -= bound;
                } else {
                    self.range = bound;
                }
                m.update(bit);
                while self.range < TOP {
                    self.range <<= 8;
                    self.shift_low();
                    self.shifts += 1;
                }
            }
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low > 0xFFFF_FFFF {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                if self.first {
                    // the leading byte is always zero and never written
                    self.first = false;
                } else {
                    self.out.push(byte.wrapping_add(carry));
                }
                byte = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = ((self.low >> 24) & 0xFF) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    /// Running size in bits; see the module docs for its exact meaning.
    pub fn bits_emitted(&self) -> u64 {
        match self.mode {
            Mode::Raw => self.nbits,
            Mode::Arithmetic if self.symbols == 0 => 0,
            Mode::Arithmetic => 8 * (self.shifts + 4),
        }
    }

    /// Flush and return the payload. `natural_end` marks a stream that was
    /// not cut by a budget.
    pub fn finish(mut self, natural_end: bool) -> Vec<u8> {
        match self.mode {
            Mode::Raw => {
                if self.nbits == 0 {
                    return self.out;
                }
                self.put_bit(true, Model::Significance);
                while self.nacc != 0 {
                    self.put_bit(false, Model::Significance);
                }
                self.out
            }
            Mode::Arithmetic => {
                if self.symbols == 0 {
                    return self.out;
                }
                for _ in 0..5 {
                    self.shift_low();
                }
                debug_assert_eq!(self.out.len() as u64, self.shifts + 4);
                if natural_end {
                    self.out.push(0);
                }
                self.out
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BitSource<'a> {
    mode: Mode,
    data: &'a [u8],
    pos: u64,
    // raw: payload length in bits after stripping the end marker
    limit: u64,
    // arithmetic
    code: u32,
    range: u32,
    shifts: u64,
    started: bool,
    starved: bool,
    models: [Counts; 3],
}

impl<'a> BitSource<'a> {
    pub fn new(mode: Mode, data: &'a [u8]) -> Self {
        let limit = match mode {
            Mode::Raw => raw_payload_bits(data),
            Mode::Arithmetic => 0,
        };
        BitSource {
            mode,
            data,
            pos: 0,
            limit,
            code: 0,
            range: u32::MAX,
            shifts: 0,
            started: false,
            starved: false,
            models: [Counts::INIT; 3],
        }
    }

    pub fn get_bit(&mut self, model: Model) -> Result<bool, Truncated> {
        match self.mode {
            Mode::Raw => {
                if self.pos >= self.limit {
                    return Err(Truncated);
                }
                let byte = self.data[(self.pos / 8) as usize];
                let bit = (byte >> (7 - self.pos % 8)) & 1 == 1;
                self.pos += 1;
                Ok(bit)
            }
            Mode::Arithmetic => {
                if self.starved || self.shifts + 4 >= self.data.len() as u64 {
                    return Err(Truncated);
                }
                if !self.started {
                    for _ in 0..4 {
                        self.code = (self.code << 8) | u32::from(self.data[self.pos as usize]);
                        self.pos += 1;
                    }
                    self.started = true;
                }
                let m = &mut self.models[model.slot()];
                let bound = m.split(self.range);
                let bit = if self.code < bound {
                    self.range = bound;
                    false
                } else {
                    self.code -= bound;
                    self.range -= bound;
                    true
                };
                m.update(bit);
                while self.range < TOP {
                    self.range <<= 8;
                    self.shifts += 1;
                    match self.data.get(self.pos as usize) {
                        Some(&b) => {
                            self.code = (self.code << 8) | u32::from(b);
                            self.pos += 1;
                        }
                        None => {
                            // this symbol is still valid; the next one is not
                            self.starved = true;
                            self.code <<= 8;
                        }
                    }
                }
                Ok(bit)
            }
        }
    }

    /// Mirror of [`BitSink::bits_emitted`].
    pub fn bits_consumed(&self) -> u64 {
        match self.mode {
            Mode::Raw => self.pos,
            Mode::Arithmetic if !self.started => 0,
            Mode::Arithmetic => 8 * (self.shifts + 4),
        }
    }
}

/// Bit length of a raw payload: everything before the final `1` marker.
fn raw_payload_bits(data: &[u8]) -> u64 {
    for (k, &b) in data.iter().enumerate().rev() {
        if b != 0 {
            return 8 * k as u64 + 7 - u64::from(b.trailing_zeros());
        }
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const MODELS: [Model; 3] = [Model::Significance, Model::Sign, Model::Refinement];

    fn round_trip(mode: Mode, symbols: &[(bool, Model)]) {
        let mut sink = BitSink::new(mode);
        for &(b, m) in symbols {
            sink.put_bit(b, m);
        }
        let bytes = sink.finish(true);
        let mut src = BitSource::new(mode, &bytes);
        for (k, &(b, m)) in symbols.iter().enumerate() {
            assert_eq!(src.get_bit(m), Ok(b), "symbol {k}");
        }
    }

    #[test]
    fn raw_packs_msb_first() {
        let mut sink = BitSink::new(Mode::Raw);
        for b in [1, 0, 1, 1, 0, 0, 0, 0] {
            sink.put_bit(b == 1, Model::Sign);
        }
        assert_eq!(sink.bits_emitted(), 8);
        assert_eq!(sink.finish(true), vec![0xB0, 0x80]);
    }

    #[test]
    fn bits_emitted_counts() {
        assert_eq!(BitSink::new(Mode::Raw).bits_emitted(), 0);
        assert_eq!(BitSink::new(Mode::Arithmetic).bits_emitted(), 0);
        let mut sink = BitSink::new(Mode::Raw);
        for k in 0..13 {
            sink.put_bit(k % 3 == 0, Model::Significance);
        }
        assert_eq!(sink.bits_emitted(), 13);
    }

    #[test]
    fn arithmetic_estimate_tracks_flushed_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sink = BitSink::new(Mode::Arithmetic);
        let mut last = 0;
        for _ in 0..5000 {
            sink.put_bit(rng.gen_bool(0.2), MODELS[rng.gen_range(0..3)]);
            let now = sink.bits_emitted();
            assert!(now >= last);
            last = now;
        }
        let est = sink.bits_emitted();
        let flushed = 8 * sink.clone().finish(false).len() as u64;
        assert!(flushed >= est && flushed - est <= 32, "est {est} flushed {flushed}");
    }

    #[test]
    fn raw_exhaustion_is_truncation() {
        let mut sink = BitSink::new(Mode::Raw);
        sink.put_bit(true, Model::Significance);
        sink.put_bit(false, Model::Significance);
        let bytes = sink.finish(true);
        let mut src = BitSource::new(Mode::Raw, &bytes);
        assert_eq!(src.get_bit(Model::Significance), Ok(true));
        assert_eq!(src.get_bit(Model::Significance), Ok(false));
        assert_eq!(src.get_bit(Model::Significance), Err(Truncated));
        assert_eq!(BitSource::new(Mode::Raw, &[]).get_bit(Model::Sign), Err(Truncated));
        assert_eq!(BitSource::new(Mode::Arithmetic, &[]).get_bit(Model::Sign), Err(Truncated));
    }

    #[test]
    fn skewed_source_compresses_near_entropy() {
        let n = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bits: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.1)).collect();
        let ones = bits.iter().filter(|&&b| b).count() as f64;
        let p = ones / n as f64;
        let h = -(p * p.log2() + (1.0 - p) * (1.0 - p).log2());
        let mut sink = BitSink::new(Mode::Arithmetic);
        for &b in &bits {
            sink.put_bit(b, Model::Significance);
        }
        let len = 8.0 * sink.finish(false).len() as f64;
        let bound = n as f64 * h;
        assert!((len - bound).abs() <= 0.05 * bound, "len {len} bound {bound}");
    }

    #[test]
    fn arithmetic_never_much_worse_than_raw() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &n in &[1usize, 10, 100, 1000, 10_000] {
            let uniform: Vec<(bool, Model)> = (0..n).map(|_| (rng.gen(), MODELS[rng.gen_range(0..3)])).collect();
            let alternating: Vec<(bool, Model)> = (0..n).map(|k| (k % 2 == 0, Model::Sign)).collect();
            for seq in [uniform, alternating] {
                let mut sink = BitSink::new(Mode::Arithmetic);
                seq.iter().for_each(|&(b, m)| sink.put_bit(b, m));
                let len = 8 * sink.finish(false).len();
                assert!(len <= n + 32 + 16, "n {n}: {len}");
            }
        }
    }

    #[test]
    fn interleaved_models_round_trip_long() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let symbols: Vec<(bool, Model)> = (0..200_000)
            .map(|k| {
                let m = MODELS[rng.gen_range(0..3)];
                let p = [0.02, 0.5, 0.9][m.slot()];
                (rng.gen_bool(p) ^ (k % 1000 == 0), m)
            })
            .collect();
        round_trip(Mode::Arithmetic, &symbols);
        round_trip(Mode::Raw, &symbols);
    }

    #[test]
    fn truncated_arithmetic_prefix_decodes_a_prefix() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let symbols: Vec<(bool, Model)> = (0..20_000).map(|_| (rng.gen_bool(0.3), MODELS[rng.gen_range(0..3)])).collect();
        let mut sink = BitSink::new(Mode::Arithmetic);
        symbols.iter().for_each(|&(b, m)| sink.put_bit(b, m));
        let bytes = sink.finish(true);
        for cut in [0, 3, 4, 5, 100, bytes.len() / 2, bytes.len() - 1] {
            let mut src = BitSource::new(Mode::Arithmetic, &bytes[..cut]);
            let mut k = 0;
            while let Ok(b) = src.get_bit(symbols[k].1) {
                assert_eq!(b, symbols[k].0, "cut {cut} symbol {k}");
                k += 1;
            }
            assert!(k < symbols.len());
        }
    }

    proptest! {
        #[test]
        fn any_sequence_round_trips(seq in prop::collection::vec((any::<bool>(), 0usize..3), 0..3000)) {
            let symbols: Vec<(bool, Model)> = seq.iter().map(|&(b, m)| (b, MODELS[m])).collect();
            round_trip(Mode::Raw, &symbols);
            round_trip(Mode::Arithmetic, &symbols);
        }

        #[test]
        fn raw_marker_recovers_exact_length(bits in prop::collection::vec(any::<bool>(), 1..200)) {
            let mut sink = BitSink::new(Mode::Raw);
            bits.iter().for_each(|&b| sink.put_bit(b, Model::Significance));
            let bytes = sink.finish(false);
            prop_assert_eq!(raw_payload_bits(&bytes), bits.len() as u64);
        }
    }
}
