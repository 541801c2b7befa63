//! Encoder and decoder for the dilation bitplane codec.
//!
//! Both directions run the same [`engine`] over a [`BitChannel`]; only the
//! channel differs. That makes the decoder a mirror of the encoder by
//! construction, and the tracing hooks here let tests confirm it bit by bit.

mod channel;
mod engine;
pub mod group;
mod state;

pub use channel::{BitChannel, Budget, DecodeChannel, EncodeChannel};
pub use engine::{Audit, Trace, TraceMode, NEIGHBOURS};
pub use state::{BlockSet, CoderState, GroupStats, Status};

use crate::bitio::Mode;
use crate::container::{CodedStream, ContainerHeader};
use crate::transform::WaveletPyramid;
use crate::weights::Weights;
use crate::Result;
use engine::Coder;

/// Highest bitplane `⌊log2 max|c|⌋`, and whether the payload is empty
/// because no coefficient reaches magnitude 1.
pub fn compute_nmax(pyramid: &WaveletPyramid) -> (u8, bool) {
    let max = pyramid.max_abs();
    if !(max >= 1.0) {
        return (0, true);
    }
    let mut n = 0u8;
    while 2f64.powi(i32::from(n) + 1) <= max {
        n += 1;
    }
    (n, false)
}

/// Result of an encode with its side products.
pub struct EncodeOutcome {
    pub stream: CodedStream,
    /// Encoder's reconstruction state when it stopped.
    pub state: CoderState,
    pub trace: Trace,
    pub audit: Option<Audit>,
}

/// Result of a decode with its side products.
pub struct DecodeOutcome {
    pub state: CoderState,
    pub trace: Trace,
    /// Whether decoding stopped before the last bitplane finished.
    pub truncated: bool,
}

/// Knobs for instrumented runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct Instrument {
    pub trace: TraceMode,
    pub audit: bool,
}

pub fn encode(pyramid: &WaveletPyramid, weights: &Weights, budget: Budget, mode: Mode) -> CodedStream {
    encode_instrumented(pyramid, weights, budget, mode, Instrument::default()).stream
}

pub fn encode_instrumented(
    pyramid: &WaveletPyramid,
    weights: &Weights,
    budget: Budget,
    mode: Mode,
    inst: Instrument,
) -> EncodeOutcome {
    let (n_max, empty) = compute_nmax(pyramid);
    let header = ContainerHeader {
        arithmetic: mode == Mode::Arithmetic,
        empty,
        width: pyramid.width(),
        height: pyramid.height(),
        levels: pyramid.levels(),
        n_max,
        weights: weights.quantized(),
    };
    // the decoder only sees dequantized weights; use the same here
    let weights = Weights::from_quantized(header.weights);
    let mut coder = Coder::new(EncodeChannel::new(mode, budget), pyramid, Some(pyramid.coeffs()), &weights);
    coder.trace.mode = inst.trace;
    if inst.audit {
        coder.enable_audit();
    }
    if !empty {
        // running out of budget is the normal way to stop
        let _ = coder.run(i32::from(n_max));
    }
    let payload = if empty { Vec::new() } else { coder.chan.finish() };
    EncodeOutcome {
        stream: CodedStream { header, payload },
        state: coder.state,
        trace: coder.trace,
        audit: coder.audit,
    }
}

pub fn decode(stream: &CodedStream, budget: Budget) -> Result<WaveletPyramid> {
    Ok(decode_instrumented(stream, budget, TraceMode::Off)?.state.into_recon())
}

pub fn decode_instrumented(stream: &CodedStream, budget: Budget, trace: TraceMode) -> Result<DecodeOutcome> {
    let h = &stream.header;
    let geometry = WaveletPyramid::zeros(h.width, h.height, h.levels)?;
    let weights = Weights::from_quantized(h.weights);
    let mode = if h.arithmetic { Mode::Arithmetic } else { Mode::Raw };
    let mut coder = Coder::new(DecodeChannel::new(mode, &stream.payload, budget), &geometry, None, &weights);
    coder.trace.mode = trace;
    let truncated = !h.empty && coder.run(i32::from(h.n_max)).is_err();
    Ok(DecodeOutcome {
        state: coder.state,
        trace: coder.trace,
        truncated,
    })
}

/// First point where encoder and decoder traces disagree.
#[derive(Debug, Clone, PartialEq)]
pub enum Divergence {
    /// Bit position where the pre-bit state digests differ.
    Digest(usize),
    /// Bit position where full state snapshots differ.
    Snapshot(usize),
    /// Traces have different lengths.
    Length { encoder: usize, decoder: usize },
    /// State after a completed bitplane differs.
    PlaneEnd(usize),
    /// Final states differ.
    Final,
}

/// Encode with tracing, decode the result with tracing, and compare the two
/// runs after every bit. Returns the number of bits compared.
pub fn lockstep(
    pyramid: &WaveletPyramid,
    weights: &Weights,
    budget: Budget,
    mode: Mode,
    trace: TraceMode,
) -> Result<std::result::Result<usize, Divergence>> {
    let enc = encode_instrumented(pyramid, weights, budget, mode, Instrument { trace, audit: false });
    let dec = decode_instrumented(&enc.stream, budget, trace)?;
    Ok(compare(&enc.trace, &enc.state, &dec.trace, &dec.state))
}

fn compare(et: &Trace, es: &CoderState, dt: &Trace, ds: &CoderState) -> std::result::Result<usize, Divergence> {
    if let Some(k) = et.digests.iter().zip(&dt.digests).position(|(a, b)| a != b) {
        return Err(Divergence::Digest(k));
    }
    if let Some(k) = et.snapshots.iter().zip(&dt.snapshots).position(|(a, b)| a != b) {
        return Err(Divergence::Snapshot(k));
    }
    if et.digests.len() != dt.digests.len() {
        return Err(Divergence::Length {
            encoder: et.digests.len(),
            decoder: dt.digests.len(),
        });
    }
    if let Some(k) = et.plane_ends.iter().zip(&dt.plane_ends).position(|(a, b)| a != b) {
        return Err(Divergence::PlaneEnd(k));
    }
    if et.plane_ends.len() != dt.plane_ends.len() || es != ds {
        return Err(Divergence::Final);
    }
    Ok(et.digests.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pyramid_with(values: &[(usize, f64)]) -> WaveletPyramid {
        let mut p = WaveletPyramid::zeros(8, 8, 1).unwrap();
        for &(k, v) in values {
            p.coeffs_mut()[k] = v;
        }
        p
    }

    #[test]
    fn nmax_examples() {
        assert_eq!(compute_nmax(&pyramid_with(&[(3, -1000.0)])), (9, false));
        assert_eq!(compute_nmax(&pyramid_with(&[(3, 1.0)])), (0, false));
        assert_eq!(compute_nmax(&pyramid_with(&[(3, 1023.999)])), (9, false));
        assert_eq!(compute_nmax(&pyramid_with(&[(3, 1024.0)])), (10, false));
        assert_eq!(compute_nmax(&pyramid_with(&[])), (0, true));
        assert_eq!(compute_nmax(&pyramid_with(&[(0, 0.75)])), (0, true));
    }

    #[test]
    fn empty_pyramid_round_trips_to_zero() {
        let p = pyramid_with(&[]);
        let s = encode(&p, &Weights::default(), Budget::UNLIMITED, Mode::Raw);
        assert!(s.header.empty && s.payload.is_empty());
        let d = decode(&s, Budget::UNLIMITED).unwrap();
        assert!(d.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn zero_budget_decodes_to_zero() {
        let p = pyramid_with(&[(0, 77.0), (9, -12.0)]);
        for mode in [Mode::Raw, Mode::Arithmetic] {
            let s = encode(&p, &Weights::default(), Budget::bits(0), mode);
            assert!(s.payload.is_empty(), "{mode:?}");
            let d = decode(&s, Budget::UNLIMITED).unwrap();
            assert!(d.coeffs().iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn full_rate_is_mirrored() {
        let p = pyramid_with(&[(0, 77.0), (1, 40.0), (9, -12.0), (10, 3.5), (40, -200.0), (63, 1.25)]);
        for mode in [Mode::Raw, Mode::Arithmetic] {
            let n = lockstep(&p, &Weights::default(), Budget::UNLIMITED, mode, TraceMode::Full)
                .unwrap()
                .unwrap();
            assert!(n > 0);
        }
        let s = encode(&p, &Weights::default(), Budget::UNLIMITED, Mode::Raw);
        let d = decode(&s, Budget::UNLIMITED).unwrap();
        for (a, b) in p.coeffs().iter().zip(d.coeffs()) {
            // coded to plane 0 with midpoint reconstruction
            assert!((a - b).abs() <= 0.5 + 1e-12 || (a.abs() < 1.0 && *b == 0.0), "{a} vs {b}");
        }
    }
}
