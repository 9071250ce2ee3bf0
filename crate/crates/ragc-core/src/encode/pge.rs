//! Packed gamma encoding: the text is cut into blocks of `epsilon`
//! symbols, each block is packed at the bit width of its largest value,
//! and the per-block widths are carried as gamma-coded, doubly
//! run-length-compressed first differences plus a sign bitmap.
//!
//! Stream layout: gamma-coded counts (|T| + 1, epsilon, |S1| + 1,
//! |S2| + 1), then five parts in order: gamma(S1), gamma(S2), gamma(L2),
//! the packed block payload, and the sign bitmap (`q` raw bits). The sign
//! bitmap sits at a fixed distance from the stream end, so decoding reads
//! it by seeking before consuming the payload; `pge_decode` therefore takes
//! a whole stream with an exact bit length rather than an open reader, and
//! embedded PGE segments are length-framed by their callers.
//!
//! The pair-oriented variant stores, for each two-symbol rule body, the
//! larger symbol (PGE-coded), the absolute difference (gamma-coded, plus
//! one so zero is representable) and a side bit saying whether the larger
//! symbol came first.

use crate::bitio::{bit_width, read_framed, rle_split, write_framed, BitReader, BitStream};
use crate::error::{Error, Result};
use crate::grammar::{Grammar, Rule};

/// Per-block width model of a text, the intermediate form of the encoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PgeBlocks {
    pub epsilon: u32,
    /// Width of each block: `bit_width` of its largest value.
    pub widths: Vec<u32>,
    /// First differences of the widths, magnitudes shifted by +1.
    pub width_delta: Vec<u64>,
    /// Sign bits: `true` when the width did not decrease.
    pub width_signs: Vec<bool>,
    pub s1: Vec<u64>,
    pub l1: Vec<u64>,
    pub s2: Vec<u64>,
    pub l2: Vec<u64>,
}

impl PgeBlocks {
    pub fn build(values: &[u64], epsilon: u32) -> Result<Self> {
        if epsilon == 0 {
            return Err(Error::Domain("block size must be at least 1".into()));
        }
        let widths: Vec<u32> = values
            .chunks(epsilon as usize)
            .map(|b| bit_width(b.iter().copied().max().unwrap_or(0)))
            .collect();
        let mut width_delta = Vec::with_capacity(widths.len());
        let mut width_signs = Vec::with_capacity(widths.len());
        for (i, &w) in widths.iter().enumerate() {
            if i == 0 {
                width_delta.push(w as u64 + 1);
                width_signs.push(true);
            } else {
                let prev = widths[i - 1];
                width_delta.push(w.abs_diff(prev) as u64 + 1);
                width_signs.push(w >= prev);
            }
        }
        let (s1, l1) = rle_split(&width_delta);
        let (s2, l2) = rle_split(&l1);
        Ok(PgeBlocks {
            epsilon,
            widths,
            width_delta,
            width_signs,
            s1,
            l1,
            s2,
            l2,
        })
    }
}

pub fn pge_encode(values: &[u64], epsilon: u32) -> Result<BitStream> {
    let blocks = PgeBlocks::build(values, epsilon)?;
    let mut out = BitStream::new();
    out.write_gamma(values.len() as u64 + 1)?;
    out.write_gamma(epsilon as u64)?;
    out.write_gamma(blocks.s1.len() as u64 + 1)?;
    out.write_gamma(blocks.s2.len() as u64 + 1)?;
    for &v in &blocks.s1 {
        out.write_gamma(v)?;
    }
    for &v in &blocks.s2 {
        out.write_gamma(v)?;
    }
    for &v in &blocks.l2 {
        out.write_gamma(v)?;
    }
    for (block, &w) in values.chunks(epsilon as usize).zip(&blocks.widths) {
        for &v in block {
            out.push_bits(v, w);
        }
    }
    for &s in &blocks.width_signs {
        out.push_bit(s);
    }
    Ok(out)
}

pub fn pge_decode(stream: &BitStream) -> Result<Vec<u64>> {
    let mut r = stream.reader();
    let n = (r.read_gamma()? - 1) as usize;
    let epsilon = r.read_gamma()?;
    if epsilon == 0 || epsilon > u32::MAX as u64 {
        return Err(Error::corrupt(r.pos(), "invalid block size"));
    }
    let epsilon = epsilon as usize;
    let s1_len = (r.read_gamma()? - 1) as usize;
    let s2_len = (r.read_gamma()? - 1) as usize;
    let q = n.div_ceil(epsilon);
    if n > stream.len_bits() {
        return Err(Error::corrupt(r.pos(), "symbol count exceeds stream"));
    }
    if s1_len > q || s2_len > s1_len {
        return Err(Error::corrupt(
            r.pos(),
            "run-length layer longer than its source",
        ));
    }
    let mut s1 = Vec::with_capacity(s1_len);
    for _ in 0..s1_len {
        s1.push(r.read_gamma()?);
    }
    let mut s2 = Vec::with_capacity(s2_len);
    for _ in 0..s2_len {
        s2.push(r.read_gamma()?);
    }
    let mut l2 = Vec::with_capacity(s2_len);
    for _ in 0..s2_len {
        l2.push(r.read_gamma()?);
    }
    // L1 = S2 expanded by L2; width deltas = S1 expanded by L1.
    let l1 = expand_rle(&s2, &l2, s1_len, r.pos())?;
    let width_delta = expand_rle(&s1, &l1, q, r.pos())?;

    // The sign bitmap occupies the last q bits; read it, then return for
    // the packed payload.
    if stream.len_bits() < r.pos() + q {
        return Err(Error::corrupt(r.pos(), "sign bitmap truncated"));
    }
    let payload_pos = r.pos();
    let signs_pos = stream.len_bits() - q;
    if signs_pos < payload_pos {
        return Err(Error::corrupt(signs_pos, "sign bitmap overlaps payload"));
    }
    r.seek(signs_pos)?;
    let mut signs = Vec::with_capacity(q);
    for _ in 0..q {
        signs.push(r.read_bit()?);
    }
    r.seek(payload_pos)?;

    let mut widths = Vec::with_capacity(q);
    for i in 0..q {
        let mag = width_delta[i] - 1;
        let w: u64 = if i == 0 {
            if !signs[0] {
                return Err(Error::corrupt(signs_pos, "first sign bit must be set"));
            }
            mag
        } else {
            let prev = *widths.last().unwrap() as u64;
            if signs[i] {
                prev + mag
            } else {
                prev.checked_sub(mag)
                    .ok_or_else(|| Error::corrupt(payload_pos, "block width underflow"))?
            }
        };
        if w == 0 || w > 64 {
            return Err(Error::corrupt(payload_pos, "block width out of range"));
        }
        widths.push(w as u32);
    }

    let mut out = Vec::with_capacity(n);
    for (i, &w) in widths.iter().enumerate() {
        let block_len = (n - i * epsilon).min(epsilon);
        for _ in 0..block_len {
            out.push(r.read_bits(w)?);
        }
    }
    if r.pos() != signs_pos {
        return Err(Error::corrupt(r.pos(), "packed payload length mismatch"));
    }
    Ok(out)
}

fn expand_rle(symbols: &[u64], lengths: &[u64], expect: usize, bit: usize) -> Result<Vec<u64>> {
    if symbols.len() != lengths.len() {
        return Err(Error::corrupt(bit, "run-length layers disagree"));
    }
    let total: u64 = lengths.iter().sum();
    if total != expect as u64 {
        return Err(Error::corrupt(bit, "run-length expansion has wrong total"));
    }
    let mut out = Vec::with_capacity(expect);
    for (&s, &l) in symbols.iter().zip(lengths) {
        for _ in 0..l {
            out.push(s);
        }
    }
    Ok(out)
}

/// The pair-oriented application: max/delta/side-bit per rule body plus a
/// PGE-coded start body. Only grammars whose bodies are all pairs qualify.
pub fn pair_pge_encode(g: &Grammar, epsilon: u32) -> Result<BitStream> {
    let mut maxes = Vec::with_capacity(g.variable_rule_count());
    let mut deltas = Vec::with_capacity(g.variable_rule_count());
    let mut sides = Vec::with_capacity(g.variable_rule_count());
    for rule in &g.rules[g.sigma()..] {
        match rule {
            Rule::Sequence(body) if body.len() == 2 => {
                let (a, b) = (body[0], body[1]);
                maxes.push(a.max(b));
                deltas.push(a.abs_diff(b));
                sides.push(a >= b);
            }
            _ => {
                return Err(Error::Unsupported(
                    "pair-oriented encoding requires all rule bodies to be pairs".into(),
                ))
            }
        }
    }
    let mut out = BitStream::new();
    write_framed(&mut out, &pge_encode(&maxes, epsilon)?)?;
    for &d in &deltas {
        out.write_gamma(d + 1)?;
    }
    for &s in &sides {
        out.push_bit(s);
    }
    write_framed(&mut out, &pge_encode(&g.tau, epsilon)?)?;
    Ok(out)
}

pub fn pair_pge_decode(
    r: &mut BitReader<'_>,
    rule_count: usize,
    terminals: &[u8],
) -> Result<Grammar> {
    let maxes = pge_decode(&read_framed(r)?)?;
    if maxes.len() != rule_count {
        return Err(Error::corrupt(r.pos(), "pair table has wrong rule count"));
    }
    let mut deltas = Vec::with_capacity(rule_count);
    for _ in 0..rule_count {
        deltas.push(r.read_gamma()? - 1);
    }
    let mut sides = Vec::with_capacity(rule_count);
    for _ in 0..rule_count {
        sides.push(r.read_bit()?);
    }
    let tau = pge_decode(&read_framed(r)?)?;

    let mut rules: Vec<Rule> = terminals.iter().map(|&b| Rule::Terminal(b)).collect();
    for i in 0..rule_count {
        let hi = maxes[i];
        let lo = hi
            .checked_sub(deltas[i])
            .ok_or_else(|| Error::corrupt(r.pos(), "pair delta underflow"))?;
        let body = if sides[i] { vec![hi, lo] } else { vec![lo, hi] };
        rules.push(Rule::Sequence(body));
    }
    let g = Grammar {
        terminals: terminals.to_vec(),
        rules,
        tau,
    };
    let violations = g.validate();
    if !violations.is_empty() {
        return Err(Error::corrupt(
            r.pos(),
            format!("decoded grammar invalid: {}", violations[0]),
        ));
    }
    Ok(g)
}
