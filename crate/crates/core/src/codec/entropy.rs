//! Run-length + canonical prefix coding of quantized 8x8 blocks.
//!
//! One alphabet covers the whole zig-zagged block (DC delta included as the
//! first element): EOB, ZRL (16 zeros), and (run, size) pairs for a nonzero
//! value of magnitude category `size` after `run` zeros. Code lengths come
//! from a fixed frozen table; codes are assigned canonically, so encoder and
//! decoder derive identical codebooks from the lengths alone.

use std::sync::OnceLock;

use super::bitio::{BitReader, BitWriter};
use crate::error::{Error, Result};

pub const MAX_SIZE: u32 = 12;
pub const MAX_LEVEL: i32 = (1 << MAX_SIZE) - 1;
const SYM_EOB: usize = 0;
const SYM_ZRL: usize = 1;
const SYMBOL_COUNT: usize = 2 + 16 * MAX_SIZE as usize;
const MAX_CODE_LEN: u32 = 15;

fn symbol(run: u32, size: u32) -> usize {
    2 + (run as usize) * MAX_SIZE as usize + (size as usize - 1)
}

/// Frozen code length per symbol: short EOB, and (run, size) lengths growing
/// with both run and magnitude category. Kraft-valid by construction
/// (verified in tests).
fn code_len(sym: usize) -> u32 {
    match sym {
        SYM_EOB => 2,
        SYM_ZRL => 9,
        _ => {
            let idx = sym - 2;
            let run = (idx / MAX_SIZE as usize) as u32;
            let size = (idx % MAX_SIZE as usize) as u32 + 1;
            (3 + run + size).min(MAX_CODE_LEN)
        }
    }
}

struct Codebook {
    /// Per symbol: (code value, length).
    codes: Vec<(u32, u32)>,
    /// Symbols sorted by (length, symbol), the canonical order.
    sorted_symbols: Vec<usize>,
    /// Per length 1..=MAX_CODE_LEN: first canonical code value and its index
    /// into `sorted_symbols`; count of codes at that length.
    first_code: [u32; MAX_CODE_LEN as usize + 1],
    first_index: [usize; MAX_CODE_LEN as usize + 1],
    count: [usize; MAX_CODE_LEN as usize + 1],
}

fn build_codebook() -> Codebook {
    let mut sorted: Vec<usize> = (0..SYMBOL_COUNT).collect();
    sorted.sort_by_key(|&s| (code_len(s), s));
    let mut codes = vec![(0u32, 0u32); SYMBOL_COUNT];
    let mut first_code = [0u32; MAX_CODE_LEN as usize + 1];
    let mut first_index = [0usize; MAX_CODE_LEN as usize + 1];
    let mut count = [0usize; MAX_CODE_LEN as usize + 1];
    let mut code = 0u32;
    let mut prev_len = 0u32;
    for (i, &sym) in sorted.iter().enumerate() {
        let len = code_len(sym);
        if len != prev_len {
            code <<= len - prev_len;
            first_code[len as usize] = code;
            first_index[len as usize] = i;
            prev_len = len;
        }
        codes[sym] = (code, len);
        count[len as usize] += 1;
        code += 1;
    }
    Codebook {
        codes,
        sorted_symbols: sorted,
        first_code,
        first_index,
        count,
    }
}

fn codebook() -> &'static Codebook {
    static BOOK: OnceLock<Codebook> = OnceLock::new();
    BOOK.get_or_init(build_codebook)
}

fn put_symbol(bw: &mut BitWriter, sym: usize) {
    let (code, len) = codebook().codes[sym];
    bw.put(code, len);
}

fn read_symbol(br: &mut BitReader) -> Result<usize> {
    let book = codebook();
    let mut code = 0u32;
    for len in 1..=MAX_CODE_LEN {
        code = (code << 1) | br.read_bit()?;
        let l = len as usize;
        if book.count[l] > 0 {
            let rel = code.wrapping_sub(book.first_code[l]);
            if code >= book.first_code[l] && (rel as usize) < book.count[l] {
                return Ok(book.sorted_symbols[book.first_index[l] + rel as usize]);
            }
        }
    }
    Err(Error::DecodeError {
        offset: br.offset(),
        reason: "invalid prefix code".to_string(),
    })
}

fn magnitude_size(v: i32) -> u32 {
    32 - (v.unsigned_abs()).leading_zeros()
}

fn put_value(bw: &mut BitWriter, v: i32, size: u32) {
    // JPEG-style magnitude coding: negatives stored as v + 2^size - 1
    let bits = if v >= 0 {
        v as u32
    } else {
        (v + ((1 << size) - 1)) as u32
    };
    bw.put(bits, size);
}

fn read_value(br: &mut BitReader, size: u32) -> Result<i32> {
    let bits = br.read(size)?;
    let half = 1u32 << (size - 1);
    Ok(if bits < half {
        bits as i32 - ((1 << size) - 1)
    } else {
        bits as i32
    })
}

/// Encodes 64 zig-zag-ordered levels (position 0 already DC-delta).
pub fn encode_block(levels: &[i32; 64], bw: &mut BitWriter) {
    let last = levels.iter().rposition(|&v| v != 0);
    let Some(last) = last else {
        put_symbol(bw, SYM_EOB);
        return;
    };
    let mut run = 0u32;
    for &v in &levels[..=last] {
        if v == 0 {
            run += 1;
            if run == 16 {
                put_symbol(bw, SYM_ZRL);
                run = 0;
            }
            continue;
        }
        let v = v.clamp(-MAX_LEVEL, MAX_LEVEL);
        let size = magnitude_size(v);
        put_symbol(bw, symbol(run, size));
        put_value(bw, v, size);
        run = 0;
    }
    if last < 63 {
        put_symbol(bw, SYM_EOB);
    }
}

/// Decodes one block of 64 zig-zag-ordered levels.
pub fn decode_block(br: &mut BitReader) -> Result<[i32; 64]> {
    let mut out = [0i32; 64];
    let mut pos = 0usize;
    while pos < 64 {
        match read_symbol(br)? {
            SYM_EOB => break,
            SYM_ZRL => {
                pos += 16;
                if pos > 64 {
                    return Err(Error::DecodeError {
                        offset: br.offset(),
                        reason: "zero run overflows block".to_string(),
                    });
                }
            }
            sym => {
                let idx = sym - 2;
                let run = idx / MAX_SIZE as usize;
                let size = (idx % MAX_SIZE as usize) as u32 + 1;
                pos += run;
                if pos >= 64 {
                    return Err(Error::DecodeError {
                        offset: br.offset(),
                        reason: "coefficient index overflows block".to_string(),
                    });
                }
                out[pos] = read_value(br, size)?;
                pos += 1;
            }
        }
    }
    Ok(out)
}
