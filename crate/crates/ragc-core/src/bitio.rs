//! MSB-first bit streams and the primitive codes shared by all encoders:
//! Elias gamma, fixed-width fields, and run-length splitting.

use crate::error::{Error, Result};

/// Number of bits in the binary form of `v`: one more than the position of
/// the highest set bit. `bit_width(0)` is defined as 1 so a zero can always
/// be carried in a field of this width.
pub fn bit_width(v: u64) -> u32 {
    64 - v.max(1).leading_zeros()
}

/// A growable bit sequence, packed MSB-first within each byte. Zero padding
/// at the tail of the final byte is never interpreted as data.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct BitStream {
    bytes: Vec<u8>,
    len_bits: usize,
}

impl std::fmt::Debug for BitStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let shown: String = (0..self.len_bits.min(64))
            .map(|i| if self.bit(i) { '1' } else { '0' })
            .collect();
        let ellipsis = if self.len_bits > 64 { "..." } else { "" };
        write!(
            f,
            "BitStream[{} bits: {}{}]",
            self.len_bits, shown, ellipsis
        )
    }
}

impl BitStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len_bits(&self) -> usize {
        self.len_bits
    }

    pub fn is_empty(&self) -> bool {
        self.len_bits == 0
    }

    /// The packed bytes, including tail padding.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn push_bit(&mut self, bit: bool) {
        if self.len_bits.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.len_bits % 8);
        }
        self.len_bits += 1;
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        assert!(width <= 64, "field width over 64 bits");
        assert!(
            width == 64 || value >> width == 0,
            "value {value} does not fit in {width} bits"
        );
        for i in (0..width).rev() {
            self.push_bit((value >> i) & 1 == 1);
        }
    }

    /// Elias gamma code: `bit_width(n) - 1` zeros, then the binary form of `n`.
    pub fn write_gamma(&mut self, n: u64) -> Result<()> {
        if n == 0 {
            return Err(Error::Domain("gamma code is undefined for 0".into()));
        }
        let w = bit_width(n);
        for _ in 0..w - 1 {
            self.push_bit(false);
        }
        self.push_bits(n, w);
        Ok(())
    }

    pub fn append(&mut self, other: &BitStream) {
        let mut r = other.reader();
        let mut rem = other.len_bits;
        while rem >= 64 {
            let v = r.read_bits(64).expect("in-bounds read");
            self.push_bits(v, 64);
            rem -= 64;
        }
        if rem > 0 {
            let v = r.read_bits(rem as u32).expect("in-bounds read");
            self.push_bits(v, rem as u32);
        }
    }

    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.len_bits);
        (self.bytes[i / 8] >> (7 - i % 8)) & 1 == 1
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader::with_len(&self.bytes, self.len_bits)
    }

    /// Renders the stream as a string of `0`/`1`, for fixtures and debugging.
    pub fn to_bit_string(&self) -> String {
        (0..self.len_bits)
            .map(|i| if self.bit(i) { '1' } else { '0' })
            .collect()
    }

    /// Parses a string of `0`/`1`; whitespace and `_` are ignored.
    pub fn from_bit_string(s: &str) -> Self {
        let mut out = BitStream::new();
        for c in s.chars() {
            match c {
                '0' => out.push_bit(false),
                '1' => out.push_bit(true),
                c if c.is_whitespace() || c == '_' => {}
                c => panic!("invalid bit character {c:?}"),
            }
        }
        out
    }
}

/// A cursor over a packed bit sequence with an exact bit length.
#[derive(Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    len_bits: usize,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self {
            bytes,
            len_bits: bytes.len() * 8,
            pos: 0,
        }
    }

    pub fn with_len(bytes: &'a [u8], len_bits: usize) -> Self {
        assert!(len_bits <= bytes.len() * 8);
        Self {
            bytes,
            len_bits,
            pos: 0,
        }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn len_bits(&self) -> usize {
        self.len_bits
    }

    pub fn remaining(&self) -> usize {
        self.len_bits - self.pos
    }

    pub fn seek(&mut self, pos: usize) -> Result<()> {
        if pos > self.len_bits {
            return Err(Error::corrupt(pos, "seek past end of stream"));
        }
        self.pos = pos;
        Ok(())
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.len_bits {
            return Err(Error::corrupt(self.pos, "bit stream exhausted"));
        }
        let b = (self.bytes[self.pos / 8] >> (7 - self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Ok(b)
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64> {
        assert!(width <= 64);
        if self.remaining() < width as usize {
            return Err(Error::corrupt(
                self.pos,
                format!("{width}-bit field truncated"),
            ));
        }
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Ok(v)
    }

    pub fn read_gamma(&mut self) -> Result<u64> {
        let mut zeros = 0u32;
        while !self.read_bit()? {
            zeros += 1;
            if zeros > 63 {
                return Err(Error::corrupt(self.pos, "gamma code exceeds 64 bits"));
            }
        }
        let rest = self.read_bits(zeros)?;
        Ok((1u64 << zeros) | rest)
    }

    /// Copies the next `nbits` bits out into an owned stream.
    pub fn read_stream(&mut self, nbits: usize) -> Result<BitStream> {
        if self.remaining() < nbits {
            return Err(Error::corrupt(self.pos, "segment truncated"));
        }
        let mut out = BitStream::new();
        let mut rem = nbits;
        while rem >= 64 {
            out.push_bits(self.read_bits(64)?, 64);
            rem -= 64;
        }
        if rem > 0 {
            out.push_bits(self.read_bits(rem as u32)?, rem as u32);
        }
        Ok(out)
    }
}

/// Packs every value into `width` bits. Fails if a value does not fit.
pub fn encode_fixed(values: &[u64], width: u32) -> Result<BitStream> {
    if width == 0 || width > 64 {
        return Err(Error::Domain(format!("invalid field width {width}")));
    }
    let mut out = BitStream::new();
    for &v in values {
        if width < 64 && v >> width != 0 {
            return Err(Error::Domain(format!(
                "value {v} does not fit in {width} bits"
            )));
        }
        out.push_bits(v, width);
    }
    Ok(out)
}

pub fn decode_fixed(r: &mut BitReader<'_>, width: u32, count: usize) -> Result<Vec<u64>> {
    if r.remaining() < count.saturating_mul(width as usize) {
        return Err(Error::corrupt(r.pos(), "fixed-width block truncated"));
    }
    (0..count).map(|_| r.read_bits(width)).collect()
}

/// Splits a sequence into its maximal-run decomposition: the symbols of each
/// run and the run lengths. Adjacent symbol entries always differ.
pub fn rle_split(t: &[u64]) -> (Vec<u64>, Vec<u64>) {
    let mut symbols = Vec::new();
    let mut lengths = Vec::new();
    for &v in t {
        if symbols.last() == Some(&v) {
            *lengths.last_mut().unwrap() += 1;
        } else {
            symbols.push(v);
            lengths.push(1);
        }
    }
    (symbols, lengths)
}

/// Writes `seg` prefixed with its gamma-coded bit length, so the reader can
/// recover the exact extent of the segment.
pub fn write_framed(out: &mut BitStream, seg: &BitStream) -> Result<()> {
    out.write_gamma(seg.len_bits() as u64 + 1)?;
    out.append(seg);
    Ok(())
}

pub fn read_framed(r: &mut BitReader<'_>) -> Result<BitStream> {
    let n = r.read_gamma()? - 1;
    let n = usize::try_from(n).map_err(|_| Error::corrupt(r.pos(), "oversized segment"))?;
    r.read_stream(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_width_cases() {
        assert_eq!(bit_width(0), 1);
        assert_eq!(bit_width(1), 1);
        assert_eq!(bit_width(2), 2);
        assert_eq!(bit_width(3), 2);
        assert_eq!(bit_width(4), 3);
        assert_eq!(bit_width(5), 3);
        assert_eq!(bit_width(u64::MAX), 64);
    }

    #[test]
    fn gamma_vectors() {
        for (n, bits) in [
            (1, "1"),
            (2, "010"),
            (3, "011"),
            (5, "00101"),
            (8, "0001000"),
        ] {
            let mut s = BitStream::new();
            s.write_gamma(n).unwrap();
            assert_eq!(s.to_bit_string(), bits, "gamma({n})");
        }
    }

    #[test]
    fn gamma_rejects_zero() {
        let mut s = BitStream::new();
        assert!(matches!(s.write_gamma(0), Err(Error::Domain(_))));
    }

    #[test]
    fn gamma_round_trip_and_length() {
        for n in (1u64..=4096).chain([65535, 65536, 1 << 20, u64::MAX / 3]) {
            let mut s = BitStream::new();
            s.write_gamma(n).unwrap();
            assert_eq!(s.len_bits(), 2 * (bit_width(n) as usize - 1) + 1);
            assert_eq!(s.reader().read_gamma().unwrap(), n);
        }
    }

    #[test]
    fn gamma_truncated_errors() {
        let s = BitStream::from_bit_string("00");
        assert!(s.reader().read_gamma().unwrap_err().is_corrupt());
        let s = BitStream::from_bit_string("001");
        assert!(s.reader().read_gamma().unwrap_err().is_corrupt());
    }

    #[test]
    fn fixed_width_pack() {
        let s = encode_fixed(&[3, 1, 2], 2).unwrap();
        assert_eq!(s.to_bit_string(), "110110");
        assert!(encode_fixed(&[], 5).unwrap().is_empty());
        assert!(matches!(encode_fixed(&[4], 2), Err(Error::Domain(_))));
    }

    #[test]
    fn fixed_width_round_trip() {
        let values = [0u64, 1, 5, 1023, 7, 512];
        let s = encode_fixed(&values, 10).unwrap();
        assert_eq!(s.len_bits(), 10 * values.len());
        let mut r = s.reader();
        assert_eq!(decode_fixed(&mut r, 10, values.len()).unwrap(), values);
    }

    #[test]
    fn rle_cases() {
        assert_eq!(
            rle_split(&[1, 1, 1, 2, 2, 3]),
            (vec![1, 2, 3], vec![3, 2, 1])
        );
        assert_eq!(rle_split(&[7]), (vec![7], vec![1]));
        assert_eq!(rle_split(&[]), (vec![], vec![]));
    }

    #[test]
    fn rle_expansion_is_identity() {
        let t = [4u64, 4, 4, 4, 9, 9, 1, 4, 4];
        let (s, l) = rle_split(&t);
        let mut back = Vec::new();
        for (sym, len) in s.iter().zip(&l) {
            back.extend(std::iter::repeat_n(*sym, *len as usize));
        }
        assert_eq!(back, t);
        assert_eq!(l.iter().sum::<u64>() as usize, t.len());
        for w in s.windows(2) {
            assert_ne!(w[0], w[1]);
        }
    }

    #[test]
    fn stream_append_and_framing() {
        let mut a = BitStream::from_bit_string("1011");
        let b = BitStream::from_bit_string("001110101011010101110001101");
        a.append(&b);
        assert_eq!(a.to_bit_string(), format!("1011{}", b.to_bit_string()));

        let mut framed = BitStream::new();
        write_framed(&mut framed, &b).unwrap();
        framed.push_bits(0b101, 3); // trailing data after the frame
        let mut r = framed.reader();
        let got = read_framed(&mut r).unwrap();
        assert_eq!(got, b);
        assert_eq!(r.read_bits(3).unwrap(), 0b101);
    }

    #[test]
    fn reader_bounds() {
        let s = BitStream::from_bit_string("101");
        let mut r = s.reader();
        assert_eq!(r.read_bits(3).unwrap(), 0b101);
        assert!(r.read_bit().unwrap_err().is_corrupt());
        let mut r = s.reader();
        assert!(r.read_bits(4).unwrap_err().is_corrupt());
    }
}
