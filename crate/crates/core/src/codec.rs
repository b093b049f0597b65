//! Fixed-width bitstream for decimated samples.
//!
//! The stored values are the exact integer numerators of `ρ^r A_r q` in
//! units of `δ/2`, two per entry (real, imaginary), each written as a
//! `b`-bit two's-complement integer, most significant bit first.
//!
//! Layout:
//!
//! ```text
//! "ADEC" | 0x01 | m:u32le | rho:u32le | L:u32le | r:u8 | b:u8 | delta:f64le | payload
//! ```
//!
//! The payload holds `2ηb` bits, zero-padded to a byte boundary.

use num_complex::Complex64;
use thiserror::Error;

use crate::operators::{self, DecimationPlan};
use crate::quantizer::QuantizationOutput;

pub const MAGIC: &[u8; 4] = b"ADEC";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 4 + 1 + 4 + 4 + 4 + 1 + 1 + 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("numerator {value} exceeds the range bound {n_max}")]
    Overflow { value: i128, n_max: u128 },
    #[error("malformed block: {0}")]
    Malformed(String),
    #[error("decoded numerator {value} exceeds the range bound {n_max}")]
    RangeViolation { value: i128, n_max: u128 },
    #[error("samples ({got}) do not match plan length {m}")]
    LengthMismatch { got: usize, m: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub m: u32,
    pub rho: u32,
    pub half_len: u32,
    pub r: u8,
    pub width: u8,
    pub delta: f64,
}

impl Header {
    pub fn eta(&self) -> usize {
        (self.m / self.rho) as usize
    }

    pub fn payload_bits(&self) -> usize {
        2 * self.eta() * self.width as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedBlock {
    pub header: Header,
    pub payload: Vec<u8>,
}

/// Decoded entries of `ρ^r A_r q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub header: Header,
    pub numerators_re: Vec<i128>,
    pub numerators_im: Vec<i128>,
    /// `numerator · δ/2` per channel.
    pub values: Vec<Complex64>,
}

/// Range envelope `2L(2m)^r + 2^r m` for numerators; `None` on overflow.
pub fn n_max(m: u64, r: u32, half_len: u32) -> Option<u128> {
    let two_m_r = (2 * u128::from(m)).checked_pow(r)?;
    let main = (2 * u128::from(half_len)).checked_mul(two_m_r)?;
    let extra = 2u128.checked_pow(r)?.checked_mul(u128::from(m))?;
    main.checked_add(extra)
}

/// `⌈log₂(2N + 1)⌉`: bits for a two's-complement integer in `[-N, N]`.
pub fn width_for(n_max: u128) -> u32 {
    let values = 2 * n_max + 1;
    128 - (values - 1).leading_zeros()
}

/// `2ηr·log₂(2m) + 2η·log₂(2L)`.
pub fn bit_budget(plan: &DecimationPlan, half_len: u32, m: usize) -> f64 {
    let eta = plan.eta as f64;
    2.0 * eta * plan.r as f64 * (2.0 * m as f64).log2() + 2.0 * eta * (2.0 * half_len as f64).log2()
}

struct BitWriter {
    bytes: Vec<u8>,
    used: usize,
}

impl BitWriter {
    fn new() -> Self {
        Self {
            bytes: Vec::new(),
            used: 0,
        }
    }

    fn push(&mut self, value: i128, width: u32) {
        let raw = value as u128;
        for bit in (0..width).rev() {
            if self.used.is_multiple_of(8) {
                self.bytes.push(0);
            }
            if (raw >> bit) & 1 == 1 {
                let last = self.bytes.last_mut().expect("byte pushed above");
                *last |= 0x80 >> (self.used % 8);
            }
            self.used += 1;
        }
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl BitReader<'_> {
    fn read(&mut self, width: u32) -> i128 {
        let mut raw: u128 = 0;
        for _ in 0..width {
            let bit = (self.bytes[self.pos / 8] >> (7 - self.pos % 8)) & 1;
            raw = (raw << 1) | u128::from(bit);
            self.pos += 1;
        }
        // sign-extend
        let shift = 128 - width;
        ((raw << shift) as i128) >> shift
    }
}

fn header_for(plan: &DecimationPlan, half_len: u32, delta: f64) -> Result<(Header, u128), CodecError> {
    let n = n_max(plan.m as u64, plan.r as u32, half_len)
        .ok_or_else(|| CodecError::Malformed("range bound overflows 128 bits".into()))?;
    let width = width_for(n);
    if width > 127 {
        return Err(CodecError::Malformed(format!("width {width} exceeds 127 bits")));
    }
    let to_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| CodecError::Malformed(format!("{what} does not fit in u32")))
    };
    let r = u8::try_from(plan.r).map_err(|_| CodecError::Malformed("order does not fit in u8".into()))?;
    Ok((
        Header {
            m: to_u32(plan.m, "m")?,
            rho: to_u32(plan.rho, "rho")?,
            half_len,
            r,
            width: width as u8,
            delta,
        },
        n,
    ))
}

/// Packs already-computed numerators under `plan`'s header.
pub fn encode_numerators(
    plan: &DecimationPlan,
    half_len: u32,
    delta: f64,
    re: &[i128],
    im: &[i128],
) -> Result<EncodedBlock, CodecError> {
    let (header, n) = header_for(plan, half_len, delta)?;
    if re.len() != plan.eta || im.len() != plan.eta {
        return Err(CodecError::LengthMismatch {
            got: re.len().min(im.len()),
            m: plan.eta,
        });
    }
    let mut writer = BitWriter::new();
    for (&a, &b) in re.iter().zip(im) {
        for v in [a, b] {
            if v.unsigned_abs() > n {
                return Err(CodecError::Overflow { value: v, n_max: n });
            }
            writer.push(v, u32::from(header.width));
        }
    }
    Ok(EncodedBlock {
        header,
        payload: writer.bytes,
    })
}

/// Encodes `ρ^r A_r q` computed exactly from the level indices of `q`.
pub fn encode(q: &QuantizationOutput, plan: &DecimationPlan) -> Result<EncodedBlock, CodecError> {
    if q.len() != plan.m {
        return Err(CodecError::LengthMismatch {
            got: q.len(),
            m: plan.m,
        });
    }
    let numerator = operators::adapted_numerator(plan);
    let overflow = || CodecError::Malformed("integer overflow in decimation".into());
    let re = numerator.mul_vec_i128(&q.numerators_re()).ok_or_else(overflow)?;
    let im = numerator.mul_vec_i128(&q.numerators_im()).ok_or_else(overflow)?;
    encode_numerators(plan, q.alphabet.half_len, q.alphabet.delta, &re, &im)
}

pub fn decode(block: &EncodedBlock) -> Result<Decoded, CodecError> {
    let h = block.header;
    if h.rho == 0 || !h.m.is_multiple_of(h.rho) {
        return Err(CodecError::Malformed(format!(
            "rho = {} does not divide m = {}",
            h.rho, h.m
        )));
    }
    let n = n_max(u64::from(h.m), u32::from(h.r), h.half_len)
        .ok_or_else(|| CodecError::Malformed("range bound overflows 128 bits".into()))?;
    if u32::from(h.width) != width_for(n) {
        return Err(CodecError::Malformed(format!(
            "width {} does not match header parameters (expected {})",
            h.width,
            width_for(n)
        )));
    }
    let bits = h.payload_bits();
    if block.payload.len() != bits.div_ceil(8) {
        return Err(CodecError::Malformed(format!(
            "payload has {} bytes, expected {}",
            block.payload.len(),
            bits.div_ceil(8)
        )));
    }
    if !bits.is_multiple_of(8) {
        let pad_mask = 0xffu8 >> (bits % 8);
        if block.payload.last().is_some_and(|&b| b & pad_mask != 0) {
            return Err(CodecError::Malformed("nonzero padding bits".into()));
        }
    }
    let mut reader = BitReader {
        bytes: &block.payload,
        pos: 0,
    };
    let eta = h.eta();
    let mut numerators_re = Vec::with_capacity(eta);
    let mut numerators_im = Vec::with_capacity(eta);
    for _ in 0..eta {
        for dst in [&mut numerators_re, &mut numerators_im] {
            let v = reader.read(u32::from(h.width));
            if v.unsigned_abs() > n {
                return Err(CodecError::RangeViolation { value: v, n_max: n });
            }
            dst.push(v);
        }
    }
    let half = h.delta / 2.0;
    let values = numerators_re
        .iter()
        .zip(&numerators_im)
        .map(|(&a, &b)| Complex64::new(a as f64 * half, b as f64 * half))
        .collect();
    Ok(Decoded {
        header: h,
        numerators_re,
        numerators_im,
        values,
    })
}

impl EncodedBlock {
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&h.m.to_le_bytes());
        out.extend_from_slice(&h.rho.to_le_bytes());
        out.extend_from_slice(&h.half_len.to_le_bytes());
        out.push(h.r);
        out.push(h.width);
        out.extend_from_slice(&h.delta.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        if bytes.len() < HEADER_LEN {
            return Err(CodecError::Malformed(format!(
                "{} bytes is shorter than the header",
                bytes.len()
            )));
        }
        if &bytes[0..4] != MAGIC {
            return Err(CodecError::Malformed("bad magic".into()));
        }
        if bytes[4] != VERSION {
            return Err(CodecError::Malformed(format!("unsupported version {}", bytes[4])));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
        let delta = f64::from_le_bytes(bytes[19..27].try_into().expect("8 bytes"));
        if !(delta.is_finite() && delta > 0.0) {
            return Err(CodecError::Malformed(format!("bad gap {delta}")));
        }
        let header = Header {
            m: u32_at(5),
            rho: u32_at(9),
            half_len: u32_at(13),
            r: bytes[17],
            width: bytes[18],
            delta,
        };
        Ok(Self {
            header,
            payload: bytes[HEADER_LEN..].to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer::{Alphabet, QuantizationOutput, Shaping};
    use proptest::prelude::*;

    fn levels_output(re: Vec<i32>, im: Vec<i32>, alphabet: Alphabet, r: usize) -> QuantizationOutput {
        let m = re.len();
        QuantizationOutput {
            levels_re: re,
            levels_im: im,
            u: vec![Complex64::new(0.0, 0.0); m],
            shaping: Shaping::SigmaDelta { order: r },
            alphabet,
            overloaded: false,
        }
    }

    #[test]
    fn all_positive_half_levels() {
        let alphabet = Alphabet::new(0.5, 2).unwrap();
        let q = levels_output(vec![0; 4], vec![0; 4], alphabet, 1);
        let plan = DecimationPlan::new(1, 4, 2).unwrap();
        let block = encode(&q, &plan).unwrap();
        let dec = decode(&block).unwrap();
        assert_eq!(dec.numerators_re, vec![2, 2]);
        assert_eq!(dec.numerators_im, vec![2, 2]);
        assert_eq!(dec.values[0], Complex64::new(0.5, 0.5));
    }

    #[test]
    fn empty_block() {
        let block = EncodedBlock {
            header: Header {
                m: 0,
                rho: 1,
                half_len: 1,
                r: 1,
                width: width_for(n_max(0, 1, 1).unwrap()) as u8,
                delta: 1.0,
            },
            payload: vec![],
        };
        let bytes = block.to_bytes();
        let back = EncodedBlock::from_bytes(&bytes).unwrap();
        assert!(decode(&back).unwrap().values.is_empty());
    }

    #[test]
    fn corrupted_blocks_are_rejected() {
        let alphabet = Alphabet::new(0.25, 8).unwrap();
        let q = levels_output(vec![1; 24], vec![-3; 24], alphabet, 1);
        let plan = DecimationPlan::new(1, 24, 4).unwrap();
        let bytes = encode(&q, &plan).unwrap().to_bytes();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(EncodedBlock::from_bytes(&bad), Err(CodecError::Malformed(_))));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(EncodedBlock::from_bytes(&bad), Err(CodecError::Malformed(_))));
        let mut bad = bytes.clone();
        bad.pop();
        let block = EncodedBlock::from_bytes(&bad).unwrap();
        assert!(matches!(decode(&block), Err(CodecError::Malformed(_))));
        let mut bad = bytes.clone();
        bad[18] += 1;
        let block = EncodedBlock::from_bytes(&bad).unwrap();
        assert!(matches!(decode(&block), Err(CodecError::Malformed(_))));
        assert!(matches!(
            EncodedBlock::from_bytes(&bytes[..10]),
            Err(CodecError::Malformed(_))
        ));
    }

    #[test]
    fn out_of_range_payload_is_reported() {
        let plan = DecimationPlan::new(1, 4, 2).unwrap();
        let n = n_max(4, 1, 1).unwrap() as i128;
        let mut block = encode_numerators(&plan, 1, 1.0, &[n, -n], &[0, 0]).unwrap();
        assert!(decode(&block).is_ok());
        assert!(matches!(
            encode_numerators(&plan, 1, 1.0, &[n + 1, 0], &[0, 0]),
            Err(CodecError::Overflow { .. })
        ));
        // Smallest representable value (-2^(b-1)) lies outside [-N, N].
        block.payload[0] = 0x80 | (block.payload[0] & 0x7f);
        let w = block.header.width;
        let mut w_bits = BitWriter::new();
        w_bits.push(-(1i128 << (w - 1)), u32::from(w));
        w_bits.push(0, u32::from(w));
        w_bits.push(0, u32::from(w));
        w_bits.push(0, u32::from(w));
        block.payload = w_bits.bytes;
        assert!(matches!(decode(&block), Err(CodecError::RangeViolation { .. })));
    }

    #[test]
    fn e1_bit_total_within_budget() {
        let plan = DecimationPlan::new(1, 24, 4).unwrap();
        let budget = bit_budget(&plan, 8, 24);
        assert!((budget - (12.0 * 48f64.log2() + 12.0 * 16f64.log2())).abs() < 1e-12);
        assert!((budget - 115.02).abs() < 0.01);
        let n = n_max(24, 1, 8).unwrap();
        let bits = 2 * 6 * width_for(n) as usize;
        assert!(bits as f64 <= budget + 4.0 * 6.0);
    }

    #[test]
    fn budget_examples() {
        let plan = DecimationPlan::from_eta(2, 6, 4).unwrap();
        let base = bit_budget(&plan, 1, plan.m);
        assert!((base - (2.0 * 6.0 * 2.0 * (2.0 * 24f64).log2() + 12.0)).abs() < 1e-12);
        let doubled = DecimationPlan::from_eta(2, 6, 8).unwrap();
        let diff = bit_budget(&doubled, 1, doubled.m) - base;
        assert!((diff - 2.0 * 6.0 * 2.0).abs() < 1e-9);
    }

    #[test]
    fn width_matches_log_formula() {
        for n in [0u128, 1, 2, 3, 7, 8, 1000, 1 << 40] {
            let expect = ((2 * n + 1) as f64).log2().ceil() as u32;
            assert_eq!(width_for(n), expect, "n = {n}");
        }
    }

    proptest! {
        #[test]
        fn roundtrip_is_exact(
            r in 1usize..=3,
            eta in 1usize..=7,
            rho in 1usize..=6,
            seed in prop::collection::vec((-8i32..8, -8i32..8), 42),
        ) {
            let plan = DecimationPlan::from_eta(r, eta, rho).unwrap();
            let alphabet = Alphabet::new(0.125, 8).unwrap();
            let (re, im): (Vec<i32>, Vec<i32>) =
                seed.iter().cycle().take(plan.m).copied().unzip();
            let q = levels_output(re, im, alphabet, r);
            let block = encode(&q, &plan).unwrap();
            let bytes = block.to_bytes();
            prop_assert_eq!(bytes.len(), HEADER_LEN + (2 * eta * block.header.width as usize).div_ceil(8));
            let dec = decode(&EncodedBlock::from_bytes(&bytes).unwrap()).unwrap();
            let numerator = operators::adapted_numerator(&plan);
            prop_assert_eq!(dec.numerators_re, numerator.mul_vec_i128(&q.numerators_re()).unwrap());
            prop_assert_eq!(dec.numerators_im, numerator.mul_vec_i128(&q.numerators_im()).unwrap());
        }
    }
}
