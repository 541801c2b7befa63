use crate::bitio::{symbol_slack, BitSink, BitSource, Mode, Model, Truncated};

/// One side of the coded stream. The coding algorithm is written once against
/// this trait; the encoder writes `truth()`, the decoder ignores it and reads.
pub trait BitChannel {
    fn code(&mut self, model: Model, truth: &dyn Fn() -> bool) -> Result<bool, Truncated>;
}

/// Payload size limit in bits; `None` is unlimited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Budget(pub Option<u64>);

impl Budget {
    pub const UNLIMITED: Budget = Budget(None);

    pub fn bits(bits: u64) -> Self {
        Budget(Some(bits))
    }

    /// Whether one more symbol could push a stream of `used` bits past the limit.
    fn exhausted(self, used: u64, mode: Mode) -> bool {
        // an arithmetic stream costs its four flush bytes as soon as it has one symbol
        let used = match mode {
            Mode::Raw => used,
            Mode::Arithmetic => used.max(32),
        };
        self.0.is_some_and(|limit| used + symbol_slack(mode) > limit)
    }
}

pub struct EncodeChannel {
    pub(crate) sink: BitSink,
    budget: Budget,
    pub(crate) hit_budget: bool,
}

impl EncodeChannel {
    pub fn new(mode: Mode, budget: Budget) -> Self {
        EncodeChannel {
            sink: BitSink::new(mode),
            budget,
            hit_budget: false,
        }
    }

    pub fn finish(self) -> Vec<u8> {
        let natural = !self.hit_budget;
        self.sink.finish(natural)
    }
}

impl BitChannel for EncodeChannel {
    fn code(&mut self, model: Model, truth: &dyn Fn() -> bool) -> Result<bool, Truncated> {
        if self.budget.exhausted(self.sink.bits_emitted(), self.sink.mode()) {
            self.hit_budget = true;
            return Err(Truncated);
        }
        let bit = truth();
        self.sink.put_bit(bit, model);
        Ok(bit)
    }
}

pub struct DecodeChannel<'a> {
    source: BitSource<'a>,
    mode: Mode,
    budget: Budget,
}

impl<'a> DecodeChannel<'a> {
    pub fn new(mode: Mode, payload: &'a [u8], budget: Budget) -> Self {
        DecodeChannel {
            source: BitSource::new(mode, payload),
            mode,
            budget,
        }
    }
}

impl BitChannel for DecodeChannel<'_> {
    fn code(&mut self, model: Model, _truth: &dyn Fn() -> bool) -> Result<bool, Truncated> {
        if self.budget.exhausted(self.source.bits_consumed(), self.mode) {
            return Err(Truncated);
        }
        self.source.get_bit(model)
    }
}
