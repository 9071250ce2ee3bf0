//! Converts a grammar to one delimited symbol text and codes it at the
//! symbol level: 32-bit fields, fixed bit length at the width of the
//! largest symbol, or canonical Huffman.
//!
//! Layout of the delimited text: the terminal ids `1..=sigma`, a
//! delimiter, then each rule body followed by a delimiter, then the start
//! rule body. Grammars whose bodies are all pairs drop the per-rule
//! delimiters and separate the flattened bodies from the start body with a
//! single delimiter instead. Run-rule bodies appear as the three symbols
//! `0 k base`. The delimiter value is `sigma + d + 2`, one past the start
//! symbol, which collides with nothing.

use std::collections::BTreeMap;

use crate::bitio::{bit_width, BitReader, BitStream};
use crate::error::{Error, Result};
use crate::grammar::{Grammar, Rule, Symbol, RUN_MARKER};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TextStyle {
    /// One delimiter after every rule body.
    PerRule,
    /// Pair bodies flattened into one section; two delimiters total.
    PairsCompact,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DelimitedText {
    pub symbols: Vec<Symbol>,
    pub delimiter: Symbol,
    pub style: TextStyle,
}

/// Serializes the grammar as a delimited symbol text. `PerRule` always
/// works and has length `grammar size + d + 1`; `PairsCompact` requires
/// every body to be a pair and has length `grammar size + 2`.
pub fn grammar_to_text(g: &Grammar, style: TextStyle) -> Result<DelimitedText> {
    let sigma = g.sigma() as Symbol;
    let d = g.variable_rule_count() as Symbol;
    let delimiter = sigma + d + 2;
    let mut symbols: Vec<Symbol> = (1..=sigma).collect();
    symbols.push(delimiter);
    match style {
        TextStyle::PerRule => {
            for rule in &g.rules[g.sigma()..] {
                match rule {
                    Rule::Terminal(_) => unreachable!("terminal rules precede variables"),
                    Rule::Sequence(body) => symbols.extend_from_slice(body),
                    Rule::Run { base, exponent } => {
                        symbols.extend_from_slice(&[RUN_MARKER, *exponent, *base]);
                    }
                }
                symbols.push(delimiter);
            }
        }
        TextStyle::PairsCompact => {
            for rule in &g.rules[g.sigma()..] {
                match rule {
                    Rule::Sequence(body) if body.len() == 2 => {
                        symbols.extend_from_slice(body);
                    }
                    _ => {
                        return Err(Error::Unsupported(
                            "pair-compact text requires all rule bodies to be pairs".into(),
                        ))
                    }
                }
            }
            symbols.push(delimiter);
        }
    }
    symbols.extend_from_slice(&g.tau);
    debug_assert_eq!(
        symbols.len() as u64,
        match style {
            TextStyle::PerRule => g.size() + d + 1,
            TextStyle::PairsCompact => g.size() + 2,
        }
    );
    Ok(DelimitedText {
        symbols,
        delimiter,
        style,
    })
}

/// Rebuilds a grammar from a delimited text produced by `grammar_to_text`.
/// `rule_count` (known from the container header) drives the parse: a run
/// exponent rides inline as a plain symbol and may collide with the
/// delimiter value, so rule bodies are consumed structurally rather than
/// by splitting on the delimiter.
pub fn text_to_grammar(
    symbols: &[Symbol],
    sigma: usize,
    rule_count: usize,
    style: TextStyle,
    terminals: &[u8],
) -> Result<Grammar> {
    if terminals.len() != sigma {
        return Err(Error::corrupt(0, "terminal table does not match sigma"));
    }
    let corrupt = |what: &str| Error::corrupt(0, format!("delimited text: {what}"));

    if symbols.len() < sigma + 1 {
        return Err(corrupt("missing terminal section"));
    }
    for (i, &s) in symbols[..sigma].iter().enumerate() {
        if s != i as Symbol + 1 {
            return Err(corrupt("terminal section is not 1..=sigma"));
        }
    }
    let delimiter = symbols[sigma];
    let mut rest = &symbols[sigma + 1..];
    let mut bodies: Vec<Vec<Symbol>> = Vec::with_capacity(rule_count);
    match style {
        TextStyle::PerRule => {
            for _ in 0..rule_count {
                if rest.first() == Some(&RUN_MARKER) {
                    if rest.len() < 4 {
                        return Err(corrupt("truncated run body"));
                    }
                    bodies.push(rest[..3].to_vec());
                    if rest[3] != delimiter {
                        return Err(corrupt("run body not followed by a delimiter"));
                    }
                    rest = &rest[4..];
                } else {
                    let end = rest
                        .iter()
                        .position(|&s| s == delimiter)
                        .ok_or_else(|| corrupt("rule body not terminated by a delimiter"))?;
                    bodies.push(rest[..end].to_vec());
                    rest = &rest[end + 1..];
                }
            }
        }
        TextStyle::PairsCompact => {
            if rest.len() < 2 * rule_count + 1 {
                return Err(corrupt("pair section truncated"));
            }
            for pair in rest[..2 * rule_count].chunks(2) {
                bodies.push(pair.to_vec());
            }
            if rest[2 * rule_count] != delimiter {
                return Err(corrupt("pair section not followed by a delimiter"));
            }
            rest = &rest[2 * rule_count + 1..];
        }
    }
    let tau = rest.to_vec();
    if tau.contains(&delimiter) || tau.contains(&RUN_MARKER) {
        return Err(corrupt("start body contains structural symbols"));
    }

    let mut rules: Vec<Rule> = terminals.iter().map(|&b| Rule::Terminal(b)).collect();
    for body in bodies {
        if body.first() == Some(&RUN_MARKER) {
            if body.len() != 3 {
                return Err(corrupt("run body must be exactly marker, exponent, base"));
            }
            rules.push(Rule::Run {
                base: body[2],
                exponent: body[1],
            });
        } else {
            if body.len() < 2 {
                return Err(corrupt("sequence body shorter than 2"));
            }
            rules.push(Rule::Sequence(body));
        }
    }
    let g = Grammar {
        terminals: terminals.to_vec(),
        rules,
        tau,
    };
    let violations = g.validate();
    if !violations.is_empty() {
        return Err(corrupt(&format!(
            "decoded grammar invalid: {}",
            violations[0]
        )));
    }
    Ok(g)
}

/// Fixed 32-bit fields; the baseline encoding.
pub fn encode_32bit(dt: &DelimitedText) -> Result<BitStream> {
    let mut out = BitStream::new();
    for &s in &dt.symbols {
        if s >> 32 != 0 {
            return Err(Error::Domain(format!("symbol {s} exceeds 32 bits")));
        }
        out.push_bits(s, 32);
    }
    Ok(out)
}

pub fn decode_32bit(r: &mut BitReader<'_>, count: usize) -> Result<Vec<Symbol>> {
    crate::bitio::decode_fixed(r, 32, count)
}

/// Fixed fields at the bit width of the largest symbol (delimiter
/// included); the width is carried as one gamma-coded field up front.
pub fn encode_fble(dt: &DelimitedText) -> Result<BitStream> {
    let max = dt.symbols.iter().copied().max().unwrap_or(0);
    let width = bit_width(max);
    let mut out = BitStream::new();
    out.write_gamma(width as u64)?;
    for &s in &dt.symbols {
        out.push_bits(s, width);
    }
    Ok(out)
}

pub fn decode_fble(r: &mut BitReader<'_>, count: usize) -> Result<Vec<Symbol>> {
    let width = r.read_gamma()?;
    if width == 0 || width > 64 {
        return Err(Error::corrupt(r.pos(), "invalid field width"));
    }
    crate::bitio::decode_fixed(r, width as u32, count)
}

/// Canonical Huffman over symbol frequencies. The header carries the code
/// lengths: gamma(distinct count), then gamma(symbol + 1), gamma(length)
/// per distinct symbol in ascending symbol order.
pub fn encode_huffman(dt: &DelimitedText) -> Result<BitStream> {
    if dt.symbols.is_empty() {
        return Err(Error::Domain(
            "huffman coding requires a non-empty text".into(),
        ));
    }
    let mut freqs: BTreeMap<Symbol, u64> = BTreeMap::new();
    for &s in &dt.symbols {
        *freqs.entry(s).or_insert(0) += 1;
    }
    let lengths = code_lengths(&freqs);
    let codes = canonical_codes(&lengths);

    let mut out = BitStream::new();
    out.write_gamma(lengths.len() as u64)?;
    for &(sym, len) in &lengths {
        out.write_gamma(sym + 1)?;
        out.write_gamma(len as u64)?;
    }
    for &s in &dt.symbols {
        let &(code, len) = codes.get(&s).expect("every symbol has a code");
        out.push_bits(code, len);
    }
    Ok(out)
}

pub fn decode_huffman(r: &mut BitReader<'_>, count: usize) -> Result<Vec<Symbol>> {
    let distinct = r.read_gamma()? as usize;
    if distinct == 0 || distinct > count.max(1) {
        return Err(Error::corrupt(r.pos(), "implausible huffman table size"));
    }
    let mut lengths = Vec::with_capacity(distinct);
    for _ in 0..distinct {
        let sym = r.read_gamma()? - 1;
        let len = r.read_gamma()?;
        if len == 0 || len > 64 {
            return Err(Error::corrupt(r.pos(), "invalid huffman code length"));
        }
        lengths.push((sym, len as u32));
    }
    // Canonical order: by (length, symbol). Decoding walks the first-code
    // table, one length at a time.
    let mut order = lengths.clone();
    order.sort_by_key(|&(sym, len)| (len, sym));
    let max_len = order.last().map(|&(_, len)| len).unwrap() as usize;
    let mut first_code = vec![0u64; max_len + 1];
    let mut first_idx = vec![0usize; max_len + 1];
    let mut per_len = vec![0usize; max_len + 1];
    let mut code = 0u128;
    let mut prev_len = 0u32;
    for (i, &(_, len)) in order.iter().enumerate() {
        code <<= len - prev_len;
        if code >= 1u128 << len {
            return Err(Error::corrupt(r.pos(), "huffman code lengths overflow"));
        }
        if per_len[len as usize] == 0 {
            first_code[len as usize] = code as u64;
            first_idx[len as usize] = i;
        }
        per_len[len as usize] += 1;
        code += 1;
        prev_len = len;
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut acc = 0u64;
        let mut len = 0usize;
        loop {
            acc = (acc << 1) | r.read_bit()? as u64;
            len += 1;
            if per_len.get(len).copied().unwrap_or(0) > 0 && acc >= first_code[len] {
                let offset = (acc - first_code[len]) as usize;
                if offset < per_len[len] {
                    out.push(order[first_idx[len] + offset].0);
                    break;
                }
            }
            if len >= max_len {
                return Err(Error::corrupt(r.pos(), "unterminated huffman code"));
            }
        }
    }
    Ok(out)
}

/// Optimal prefix-code lengths for the given frequencies, deterministic
/// under ties. A single distinct symbol gets a one-bit code.
fn code_lengths(freqs: &BTreeMap<Symbol, u64>) -> Vec<(Symbol, u32)> {
    if freqs.len() == 1 {
        let (&sym, _) = freqs.iter().next().unwrap();
        return vec![(sym, 1)];
    }
    // Node arena: leaves first (in ascending symbol order), merges appended.
    let syms: Vec<Symbol> = freqs.keys().copied().collect();
    let mut parent: Vec<usize> = vec![usize::MAX; freqs.len()];
    let mut heap = std::collections::BinaryHeap::new();
    for (i, &s) in syms.iter().enumerate() {
        heap.push(std::cmp::Reverse((freqs[&s], i)));
    }
    while heap.len() > 1 {
        let std::cmp::Reverse((fa, a)) = heap.pop().unwrap();
        let std::cmp::Reverse((fb, b)) = heap.pop().unwrap();
        let node = parent.len();
        parent.push(usize::MAX);
        parent[a] = node;
        parent[b] = node;
        heap.push(std::cmp::Reverse((fa + fb, node)));
    }
    syms.iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut depth = 0;
            let mut n = i;
            while parent[n] != usize::MAX {
                n = parent[n];
                depth += 1;
            }
            (s, depth)
        })
        .collect()
}

fn canonical_codes(lengths: &[(Symbol, u32)]) -> BTreeMap<Symbol, (u64, u32)> {
    let mut order = lengths.to_vec();
    order.sort_by_key(|&(sym, len)| (len, sym));
    let mut out = BTreeMap::new();
    let mut code = 0u64;
    let mut prev_len = 0u32;
    for (sym, len) in order {
        code <<= len - prev_len;
        out.insert(sym, (code, len));
        code += 1;
        prev_len = len;
    }
    out
}
