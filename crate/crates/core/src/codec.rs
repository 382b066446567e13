//! Canonical byte layout shared by digests and chain files: little-endian
//! fixed-width integers, `u32` length prefixes, fields in declaration order.
//! Decoding is strict so that every accepted byte string re-encodes to itself.

use crate::digest::Digest256;
use crate::types::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("unexpected end of input at offset {0}")]
    Truncated(usize),
    #[error("invalid {what} tag {tag} at offset {offset}")]
    BadTag {
        what: &'static str,
        tag: u8,
        offset: usize,
    },
    #[error("length prefix {0} exceeds remaining input")]
    BadLength(u32),
    #[error("{0} trailing bytes")]
    Trailing(usize),
    #[error("{0}")]
    Invalid(String),
}

pub trait Encode {
    fn encode(&self, out: &mut Encoder);

    fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::default();
        self.encode(&mut e);
        e.into_bytes()
    }
}

pub trait Decode: Sized {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, DecodeError>;

    /// Decodes a complete buffer, rejecting trailing bytes.
    fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let v = Self::decode(&mut d)?;
        d.finish()?;
        Ok(v)
    }
}

#[derive(Default, Debug)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn bool(&mut self, v: bool) -> &mut Self {
        self.u8(v as u8)
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn i64(&mut self, v: i64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn raw(&mut self, v: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(v);
        self
    }

    pub fn node(&mut self, v: NodeId) -> &mut Self {
        self.u32(v.0)
    }

    pub fn digest(&mut self, v: &Digest256) -> &mut Self {
        self.raw(&v.0)
    }

    pub fn len(&mut self, n: usize) -> &mut Self {
        self.u32(u32::try_from(n).expect("sequence longer than u32::MAX"))
    }

    pub fn seq<T: Encode>(&mut self, items: &[T]) -> &mut Self {
        self.len(items.len());
        for it in items {
            it.encode(self);
        }
        self
    }
}

pub struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Decoder { buf, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn finish(&self) -> Result<(), DecodeError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(DecodeError::Trailing(n)),
        }
    }

    pub fn raw(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.remaining() < n {
            return Err(DecodeError::Truncated(self.pos));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        Ok(self.raw(N)?.try_into().expect("length checked"))
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.raw(1)?[0])
    }

    pub fn bool(&mut self) -> Result<bool, DecodeError> {
        let offset = self.pos;
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            tag => Err(DecodeError::BadTag {
                what: "bool",
                tag,
                offset,
            }),
        }
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn i64(&mut self) -> Result<i64, DecodeError> {
        Ok(i64::from_le_bytes(self.array()?))
    }

    pub fn node(&mut self) -> Result<NodeId, DecodeError> {
        Ok(NodeId(self.u32()?))
    }

    pub fn digest(&mut self) -> Result<Digest256, DecodeError> {
        Ok(Digest256(self.array()?))
    }

    /// Reads a length prefix for elements of at least `min_size` bytes.
    pub fn len(&mut self, min_size: usize) -> Result<usize, DecodeError> {
        let n = self.u32()?;
        if (n as usize).saturating_mul(min_size.max(1)) > self.remaining() {
            return Err(DecodeError::BadLength(n));
        }
        Ok(n as usize)
    }

    pub fn seq<T: Decode>(&mut self, min_size: usize) -> Result<Vec<T>, DecodeError> {
        let n = self.len(min_size)?;
        (0..n).map(|_| T::decode(self)).collect()
    }
}
