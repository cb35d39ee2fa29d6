//! MSB-first bit I/O with byte-offset error reporting.

use crate::error::{Error, Result};

#[derive(Default)]
pub struct BitWriter {
    buf: Vec<u8>,
    acc: u32,
    nbits: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, value: u32, bits: u32) {
        debug_assert!(bits <= 24 && (bits == 32 || value < (1 << bits)));
        self.acc = (self.acc << bits) | value;
        self.nbits += bits;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.buf.push((self.acc >> self.nbits) as u8);
        }
    }

    /// Flushes with 1-padding (an all-ones tail never decodes as a valid
    /// symbol prefix shorter than the padding).
    pub fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.acc = (self.acc << pad) | ((1 << pad) - 1);
            self.buf.push(self.acc as u8);
            self.nbits = 0;
        }
        self.buf
    }
}

pub struct BitReader<'a> {
    data: &'a [u8],
    /// Absolute byte offset of `data[0]` in the enclosing stream, for errors.
    base_offset: usize,
    pos: usize,
    acc: u32,
    nbits: u32,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8], base_offset: usize) -> Self {
        Self {
            data,
            base_offset,
            pos: 0,
            acc: 0,
            nbits: 0,
        }
    }

    pub fn offset(&self) -> usize {
        self.base_offset + self.pos
    }

    pub fn read_bit(&mut self) -> Result<u32> {
        if self.nbits == 0 {
            if self.pos >= self.data.len() {
                return Err(Error::DecodeError {
                    offset: self.offset(),
                    reason: "bitstream exhausted".to_string(),
                });
            }
            self.acc = self.data[self.pos] as u32;
            self.pos += 1;
            self.nbits = 8;
        }
        self.nbits -= 1;
        Ok((self.acc >> self.nbits) & 1)
    }

    pub fn read(&mut self, bits: u32) -> Result<u32> {
        let mut v = 0;
        for _ in 0..bits {
            v = (v << 1) | self.read_bit()?;
        }
        Ok(v)
    }
}

/// Little-endian byte cursor with offset-carrying errors.
pub struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::DecodeError {
                offset: self.pos,
                reason: format!("truncated while reading {what}"),
            });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    pub fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn f64(&mut self, what: &str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn bytes(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        self.take(n, what)
    }

    pub fn expect_magic(&mut self, magic: &[u8], what: &str) -> Result<()> {
        let off = self.pos;
        let got = self.take(magic.len(), what)?;
        if got != magic {
            return Err(Error::DecodeError {
                offset: off,
                reason: format!("bad {what} magic"),
            });
        }
        Ok(())
    }
}
