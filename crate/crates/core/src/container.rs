//! The `.mdw` stream: a fixed 96-byte header followed by the embedded payload.
//!
//! ```text
//! 0   magic "MDWC"
//! 4   version (1)
//! 5   flags: bit0 arithmetic coding, bit1 empty payload
//! 6   width  u16 LE
//! 8   height u16 LE
//! 10  levels u8
//! 11  n_max  u8
//! 12  weights 3 x 14 x i16 LE, orientation order HL, LH, HH
//! ```

use std::path::Path;

use crate::weights::CONTEXT_LEN;
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"MDWC";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 96;
/// Header size in bits; charged against the rate budget.
pub const HEADER_BITS: u64 = HEADER_LEN as u64 * 8;

const FLAG_ARITHMETIC: u8 = 1;
const FLAG_EMPTY: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainerHeader {
    pub arithmetic: bool,
    pub empty: bool,
    pub width: usize,
    pub height: usize,
    pub levels: u8,
    pub n_max: u8,
    pub weights: [[i16; CONTEXT_LEN]; 3],
}

impl ContainerHeader {
    pub fn to_bytes(&self) -> Result<[u8; HEADER_LEN]> {
        let dim = |v: usize| u16::try_from(v).map_err(|_| Error::invalid(format!("dimension {v} exceeds 65535")));
        let mut b = [0u8; HEADER_LEN];
        b[..4].copy_from_slice(&MAGIC);
        b[4] = VERSION;
        b[5] = (u8::from(self.arithmetic) * FLAG_ARITHMETIC) | (u8::from(self.empty) * FLAG_EMPTY);
        b[6..8].copy_from_slice(&dim(self.width)?.to_le_bytes());
        b[8..10].copy_from_slice(&dim(self.height)?.to_le_bytes());
        b[10] = self.levels;
        b[11] = self.n_max;
        for (k, w) in self.weights.iter().flatten().enumerate() {
            b[12 + 2 * k..14 + 2 * k].copy_from_slice(&w.to_le_bytes());
        }
        Ok(b)
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < HEADER_LEN {
            return Err(Error::format(format!("header needs {HEADER_LEN} bytes, got {}", b.len())));
        }
        if b[..4] != MAGIC {
            return Err(Error::format("bad magic"));
        }
        if b[4] != VERSION {
            return Err(Error::format(format!("unsupported version {}", b[4])));
        }
        let flags = b[5];
        if flags & !(FLAG_ARITHMETIC | FLAG_EMPTY) != 0 {
            return Err(Error::format(format!("unknown flags {flags:#04x}")));
        }
        let mut weights = [[0i16; CONTEXT_LEN]; 3];
        for (k, w) in weights.iter_mut().flatten().enumerate() {
            *w = i16::from_le_bytes([b[12 + 2 * k], b[13 + 2 * k]]);
        }
        Ok(ContainerHeader {
            arithmetic: flags & FLAG_ARITHMETIC != 0,
            empty: flags & FLAG_EMPTY != 0,
            width: usize::from(u16::from_le_bytes([b[6], b[7]])),
            height: usize::from(u16::from_le_bytes([b[8], b[9]])),
            levels: b[10],
            n_max: b[11],
            weights,
        })
    }
}

/// Header plus payload, as stored in a `.mdw` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedStream {
    pub header: ContainerHeader,
    pub payload: Vec<u8>,
}

impl CodedStream {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&self.header.to_bytes()?);
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    /// Any payload length is accepted: a cut stream is still a valid stream.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = ContainerHeader::from_bytes(bytes)?;
        Ok(CodedStream {
            header,
            payload: bytes[HEADER_LEN..].to_vec(),
        })
    }

    /// Total size in bits, header included.
    pub fn total_bits(&self) -> u64 {
        HEADER_BITS + 8 * self.payload.len() as u64
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
