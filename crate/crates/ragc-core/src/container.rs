//! The on-disk format: a fixed byte prelude (magic, version, algorithm id,
//! encoding id, block size), a bit-level header (alphabet, original
//! length, rule count, start body length), and one encoding-specific
//! payload. Every integer field is gamma-coded as value + 1 so zero is
//! representable. Empty inputs produce a header-only container.

use crate::alphabet::ingest_bytes;
use crate::bitio::{read_framed, write_framed, BitReader, BitStream};
use crate::construct;
use crate::encode::naive::{self, TextStyle};
use crate::encode::pge;
use crate::encode::poppt::{self, PopptForm};
use crate::error::{Error, Result};
use crate::grammar::Grammar;

pub const MAGIC: [u8; 4] = *b"RAGC";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Repair,
    MrRepair,
    RlMrRepair,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::Repair,
        Algorithm::MrRepair,
        Algorithm::RlMrRepair,
    ];

    pub fn id(self) -> u8 {
        match self {
            Algorithm::Repair => 0,
            Algorithm::MrRepair => 1,
            Algorithm::RlMrRepair => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.id() == id)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Repair => "repair",
            Algorithm::MrRepair => "mr",
            Algorithm::RlMrRepair => "rlmr",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Encoding {
    N32bit,
    Fble,
    Huffman,
    Pge,
    PairPge,
    PopptIble,
    PopptPge,
}

impl Encoding {
    pub const ALL: [Encoding; 7] = [
        Encoding::N32bit,
        Encoding::Fble,
        Encoding::Huffman,
        Encoding::Pge,
        Encoding::PairPge,
        Encoding::PopptIble,
        Encoding::PopptPge,
    ];

    pub fn id(self) -> u8 {
        match self {
            Encoding::N32bit => 0,
            Encoding::Fble => 1,
            Encoding::Huffman => 2,
            Encoding::Pge => 3,
            Encoding::PairPge => 4,
            Encoding::PopptIble => 5,
            Encoding::PopptPge => 6,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.id() == id)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Encoding::N32bit => "32bit",
            Encoding::Fble => "fble",
            Encoding::Huffman => "huffman",
            Encoding::Pge => "pge",
            Encoding::PairPge => "pairpge",
            Encoding::PopptIble => "poppt-ible",
            Encoding::PopptPge => "poppt-pge",
        }
    }

    pub fn uses_epsilon(self) -> bool {
        matches!(self, Encoding::Pge | Encoding::PairPge | Encoding::PopptPge)
    }

    /// The pair-oriented encoding needs every rule body to be a pair, so it
    /// only applies to plain pair replacement.
    pub fn compatible_with(self, algo: Algorithm) -> bool {
        match self {
            Encoding::PairPge => algo == Algorithm::Repair,
            _ => true,
        }
    }
}

impl std::str::FromStr for Encoding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown encoding {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Header {
    pub algo: Algorithm,
    pub enc: Encoding,
    pub epsilon: u8,
    pub terminals: Vec<u8>,
    pub input_len: u64,
    pub rule_count: u64,
    pub tau_len: u64,
}

/// Grammar statistics plus encoded-size figures for one container.
#[derive(Clone, Debug, PartialEq)]
pub struct Stats {
    pub algo: Algorithm,
    pub enc: Encoding,
    pub epsilon: u8,
    pub sigma: usize,
    pub input_len: u64,
    pub rule_count: u64,
    pub sum_alpha: u64,
    pub tau_len: u64,
    pub grammar_size: u64,
    pub payload_bits: u64,
    pub file_bytes: u64,
}

impl Stats {
    /// Compressed size over input size, as a percentage.
    pub fn ratio_percent(&self) -> Option<f64> {
        (self.input_len > 0).then(|| self.file_bytes as f64 / self.input_len as f64 * 100.0)
    }
}

fn text_style(algo: Algorithm) -> TextStyle {
    match algo {
        Algorithm::Repair => TextStyle::PairsCompact,
        _ => TextStyle::PerRule,
    }
}

fn poppt_form(algo: Algorithm) -> PopptForm {
    match algo {
        Algorithm::Repair => PopptForm::Binary,
        _ => PopptForm::General,
    }
}

fn check_combination(algo: Algorithm, enc: Encoding, epsilon: u8) -> Result<u8> {
    if !enc.compatible_with(algo) {
        return Err(Error::Unsupported(format!(
            "encoding {:?} requires length-2 rule bodies and only applies to algorithm {:?}",
            enc.as_str(),
            Algorithm::Repair.as_str()
        )));
    }
    if enc.uses_epsilon() {
        if epsilon == 0 {
            return Err(Error::Domain("block size must be at least 1".into()));
        }
        Ok(epsilon)
    } else {
        Ok(0)
    }
}

/// Runs the chosen constructor over the input.
pub fn build_grammar(data: &[u8], algo: Algorithm) -> Grammar {
    let (text, map) = ingest_bytes(data);
    match algo {
        Algorithm::Repair => construct::construct_repair(&text, &map),
        Algorithm::MrRepair => construct::construct_mr_repair(&text, &map),
        Algorithm::RlMrRepair => construct::construct_rl_mr_repair(&text, &map),
    }
}

/// Serializes an already-constructed grammar into a container.
pub fn encode_with_grammar(
    g: &Grammar,
    input_len: u64,
    algo: Algorithm,
    enc: Encoding,
    epsilon: u8,
) -> Result<Vec<u8>> {
    let epsilon = check_combination(algo, enc, epsilon)?;
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.push(FORMAT_VERSION);
    out.push(algo.id());
    out.push(enc.id());
    out.push(epsilon);

    let mut bits = BitStream::new();
    bits.write_gamma(g.sigma() as u64 + 1)?;
    for &b in &g.terminals {
        bits.push_bits(b as u64, 8);
    }
    bits.write_gamma(input_len + 1)?;
    bits.write_gamma(g.variable_rule_count() as u64 + 1)?;
    bits.write_gamma(g.tau.len() as u64 + 1)?;

    if input_len > 0 {
        write_payload(&mut bits, g, algo, enc, epsilon)?;
    }
    out.extend_from_slice(bits.as_bytes());
    Ok(out)
}

fn write_payload(
    bits: &mut BitStream,
    g: &Grammar,
    algo: Algorithm,
    enc: Encoding,
    epsilon: u8,
) -> Result<()> {
    match enc {
        Encoding::N32bit | Encoding::Fble | Encoding::Huffman => {
            let dt = naive::grammar_to_text(g, text_style(algo))?;
            bits.write_gamma(dt.symbols.len() as u64 + 1)?;
            let body = match enc {
                Encoding::N32bit => naive::encode_32bit(&dt)?,
                Encoding::Fble => naive::encode_fble(&dt)?,
                _ => naive::encode_huffman(&dt)?,
            };
            bits.append(&body);
        }
        Encoding::Pge => {
            let dt = naive::grammar_to_text(g, text_style(algo))?;
            write_framed(bits, &pge::pge_encode(&dt.symbols, epsilon as u32)?)?;
        }
        Encoding::PairPge => {
            bits.append(&pge::pair_pge_encode(g, epsilon as u32)?);
        }
        Encoding::PopptIble | Encoding::PopptPge => {
            let p = poppt::build_poppt(g, poppt_form(algo))?;
            bits.write_gamma(p.shape.len_bits() as u64 + 1)?;
            bits.write_gamma(p.leaves.len() as u64 + 1)?;
            bits.write_gamma(p.run_exponents.len() as u64 + 1)?;
            bits.append(&p.shape);
            if enc == Encoding::PopptIble {
                bits.append(&poppt::encode_u_ible(&p.leaves, g.sigma())?);
            } else {
                write_framed(bits, &poppt::encode_u_pge(&p.leaves, epsilon as u32)?)?;
            }
            for &k in &p.run_exponents {
                bits.write_gamma(k)?;
            }
        }
    }
    Ok(())
}

/// Constructs and serializes in one step.
pub fn compress(data: &[u8], algo: Algorithm, enc: Encoding, epsilon: u8) -> Result<Vec<u8>> {
    check_combination(algo, enc, epsilon)?;
    if data.len() as u64 >= u32::MAX as u64 {
        return Err(Error::Domain(
            "inputs of 4 GiB and beyond are not supported".into(),
        ));
    }
    let g = build_grammar(data, algo);
    encode_with_grammar(&g, data.len() as u64, algo, enc, epsilon)
}

fn parse_prelude(file: &[u8]) -> Result<(Algorithm, Encoding, u8)> {
    if file.len() < 8 {
        return Err(Error::corrupt(
            file.len() * 8,
            "container shorter than its prelude",
        ));
    }
    if file[0..4] != MAGIC {
        return Err(Error::corrupt(0, "bad magic"));
    }
    if file[4] != FORMAT_VERSION {
        return Err(Error::corrupt(
            32,
            format!("unsupported format version {}", file[4]),
        ));
    }
    let algo = Algorithm::from_id(file[5])
        .ok_or_else(|| Error::corrupt(40, format!("unknown algorithm id {}", file[5])))?;
    let enc = Encoding::from_id(file[6])
        .ok_or_else(|| Error::corrupt(48, format!("unknown encoding id {}", file[6])))?;
    if !enc.compatible_with(algo) {
        return Err(Error::corrupt(48, "incompatible algorithm/encoding pair"));
    }
    Ok((algo, enc, file[7]))
}

fn read_header<'a>(file: &'a [u8]) -> Result<(Header, BitReader<'a>)> {
    let (algo, enc, epsilon) = parse_prelude(file)?;
    let mut r = BitReader::new(&file[8..]);
    let sigma = (r.read_gamma()? - 1) as usize;
    if sigma > 256 {
        return Err(Error::corrupt(r.pos(), "alphabet larger than 256"));
    }
    let mut terminals = Vec::with_capacity(sigma);
    for _ in 0..sigma {
        terminals.push(r.read_bits(8)? as u8);
    }
    if terminals.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::corrupt(
            r.pos(),
            "terminal table is not strictly ascending",
        ));
    }
    let input_len = r.read_gamma()? - 1;
    let rule_count = r.read_gamma()? - 1;
    let tau_len = r.read_gamma()? - 1;
    Ok((
        Header {
            algo,
            enc,
            epsilon,
            terminals,
            input_len,
            rule_count,
            tau_len,
        },
        r,
    ))
}

/// Parses the container and rebuilds the grammar without expanding it.
pub fn decode_grammar(file: &[u8]) -> Result<(Header, Grammar)> {
    let (header, mut r) = read_header(file)?;
    if header.input_len == 0 {
        let g = Grammar {
            terminals: Vec::new(),
            rules: Vec::new(),
            tau: Vec::new(),
        };
        finish(&mut r)?;
        return Ok((header, g));
    }
    let sigma = header.terminals.len();
    let g = match header.enc {
        Encoding::N32bit | Encoding::Fble | Encoding::Huffman => {
            let count = (r.read_gamma()? - 1) as usize;
            if count > r.remaining() {
                return Err(Error::corrupt(r.pos(), "symbol count exceeds payload"));
            }
            let symbols = match header.enc {
                Encoding::N32bit => naive::decode_32bit(&mut r, count)?,
                Encoding::Fble => naive::decode_fble(&mut r, count)?,
                _ => naive::decode_huffman(&mut r, count)?,
            };
            naive::text_to_grammar(
                &symbols,
                sigma,
                header.rule_count as usize,
                text_style(header.algo),
                &header.terminals,
            )?
        }
        Encoding::Pge => {
            let seg = read_framed(&mut r)?;
            let symbols = pge::pge_decode(&seg)?;
            naive::text_to_grammar(
                &symbols,
                sigma,
                header.rule_count as usize,
                text_style(header.algo),
                &header.terminals,
            )?
        }
        Encoding::PairPge => {
            pge::pair_pge_decode(&mut r, header.rule_count as usize, &header.terminals)?
        }
        Encoding::PopptIble | Encoding::PopptPge => {
            let b_len = (r.read_gamma()? - 1) as usize;
            let u_len = (r.read_gamma()? - 1) as usize;
            let exp_count = (r.read_gamma()? - 1) as usize;
            if b_len > r.remaining() || u_len > b_len || exp_count > b_len {
                return Err(Error::corrupt(
                    r.pos(),
                    "tree segment lengths exceed payload",
                ));
            }
            let shape = r.read_stream(b_len)?;
            let leaves = if header.enc == Encoding::PopptIble {
                poppt::decode_u_ible(&mut r, u_len, sigma)?
            } else {
                let seg = read_framed(&mut r)?;
                let leaves = pge::pge_decode(&seg)?;
                if leaves.len() != u_len {
                    return Err(Error::corrupt(r.pos(), "leaf text length mismatch"));
                }
                leaves
            };
            let mut exps = Vec::with_capacity(exp_count);
            for _ in 0..exp_count {
                exps.push(r.read_gamma()?);
            }
            poppt::decode_poppt(
                &shape,
                &leaves,
                &exps,
                &header.terminals,
                poppt_form(header.algo),
                header.tau_len as usize,
            )?
        }
    };
    finish(&mut r)?;
    if g.variable_rule_count() as u64 != header.rule_count {
        return Err(Error::corrupt(r.pos(), "rule count disagrees with header"));
    }
    if g.tau.len() as u64 != header.tau_len {
        return Err(Error::corrupt(
            r.pos(),
            "start body length disagrees with header",
        ));
    }
    let violations = g.validate();
    if !violations.is_empty() {
        return Err(Error::corrupt(
            r.pos(),
            format!("decoded grammar invalid: {}", violations[0]),
        ));
    }
    Ok((header, g))
}

/// Byte padding only after the payload.
fn finish(r: &mut BitReader<'_>) -> Result<()> {
    if r.remaining() >= 8 {
        return Err(Error::corrupt(r.pos(), "trailing data after payload"));
    }
    while r.remaining() > 0 {
        if r.read_bit()? {
            return Err(Error::corrupt(r.pos(), "nonzero padding"));
        }
    }
    Ok(())
}

/// Decompresses a container back to the original bytes.
pub fn decompress(file: &[u8]) -> Result<Vec<u8>> {
    let (header, g) = decode_grammar(file)?;
    let data = g.expand();
    if data.len() as u64 != header.input_len {
        return Err(Error::corrupt(
            file.len() * 8,
            format!(
                "expanded to {} bytes, header says {}",
                data.len(),
                header.input_len
            ),
        ));
    }
    Ok(data)
}

/// Grammar and size statistics for a container, without expanding it.
pub fn stats(file: &[u8]) -> Result<Stats> {
    let (header, g) = decode_grammar(file)?;
    let header_bits = {
        // Everything before the payload: prelude bytes plus bit header.
        let mut bits = 8u64 * 8;
        bits += 2 * crate::bitio::bit_width(header.terminals.len() as u64 + 1) as u64 - 1;
        bits += 8 * header.terminals.len() as u64;
        bits += 2 * crate::bitio::bit_width(header.input_len + 1) as u64 - 1;
        bits += 2 * crate::bitio::bit_width(header.rule_count + 1) as u64 - 1;
        bits += 2 * crate::bitio::bit_width(header.tau_len + 1) as u64 - 1;
        bits
    };
    Ok(Stats {
        algo: header.algo,
        enc: header.enc,
        epsilon: header.epsilon,
        sigma: g.sigma(),
        input_len: header.input_len,
        rule_count: header.rule_count,
        sum_alpha: g.sum_alpha(),
        tau_len: header.tau_len,
        grammar_size: g.size(),
        payload_bits: (file.len() as u64 * 8).saturating_sub(header_bits),
        file_bytes: file.len() as u64,
    })
}

/// Every valid (algorithm, encoding) combination.
pub fn all_combinations() -> Vec<(Algorithm, Encoding)> {
    let mut out = Vec::new();
    for algo in Algorithm::ALL {
        for enc in Encoding::ALL {
            if enc.compatible_with(algo) {
                out.push((algo, enc));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(data: &[u8], algo: Algorithm, enc: Encoding, eps: u8) {
        let file = compress(data, algo, enc, eps).unwrap();
        let back = decompress(&file).unwrap();
        assert_eq!(back, data, "{algo:?}/{enc:?} eps={eps}");
    }

    #[test]
    fn combination_count() {
        assert_eq!(all_combinations().len(), 7 + 6 + 6);
    }

    #[test]
    fn round_trips_every_combination() {
        let fixtures: [&[u8]; 6] = [
            b"",
            b"a",
            b"abab",
            b"aaaaaaaa",
            b"aabaaaabaaaaaaaab",
            b"grammar compression squeezes repetitive text; grammar compression!",
        ];
        for data in fixtures {
            for (algo, enc) in all_combinations() {
                round_trip(data, algo, enc, 8);
            }
        }
    }

    #[test]
    fn epsilon_variants_round_trip() {
        for eps in [1u8, 2, 6, 8, 16] {
            round_trip(
                b"mississippi mississippi",
                Algorithm::Repair,
                Encoding::PairPge,
                eps,
            );
            round_trip(
                b"mississippi mississippi",
                Algorithm::RlMrRepair,
                Encoding::PopptPge,
                eps,
            );
        }
    }

    #[test]
    fn incompatible_pair_is_rejected() {
        assert!(matches!(
            compress(b"abc", Algorithm::MrRepair, Encoding::PairPge, 8),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            compress(b"abc", Algorithm::RlMrRepair, Encoding::PairPge, 8),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn epsilon_zero_is_rejected_where_needed() {
        assert!(matches!(
            compress(b"abc", Algorithm::Repair, Encoding::Pge, 0),
            Err(Error::Domain(_))
        ));
        // and ignored where unused
        compress(b"abc", Algorithm::Repair, Encoding::Fble, 0).unwrap();
    }

    #[test]
    fn empty_input_yields_header_only_container() {
        let file = compress(b"", Algorithm::RlMrRepair, Encoding::PopptPge, 8).unwrap();
        assert!(file.len() <= 12);
        assert_eq!(decompress(&file).unwrap(), b"");
        let s = stats(&file).unwrap();
        assert_eq!(s.input_len, 0);
        assert_eq!(s.grammar_size, 0);
    }

    #[test]
    fn bad_magic_is_corrupt() {
        let mut file = compress(b"abab", Algorithm::Repair, Encoding::Fble, 0).unwrap();
        file[0] ^= 0xFF;
        assert!(decompress(&file).unwrap_err().is_corrupt());
    }

    #[test]
    fn bad_version_is_corrupt() {
        let mut file = compress(b"abab", Algorithm::Repair, Encoding::Fble, 0).unwrap();
        file[4] = 99;
        assert!(decompress(&file).unwrap_err().is_corrupt());
    }

    #[test]
    fn truncation_is_corrupt_not_a_crash() {
        let file = compress(
            b"truncation truncation truncation",
            Algorithm::MrRepair,
            Encoding::PopptPge,
            8,
        )
        .unwrap();
        for cut in 0..file.len() {
            assert!(
                decompress(&file[..cut]).is_err(),
                "length-{cut} prefix unexpectedly decoded"
            );
        }
    }

    #[test]
    fn stats_report_grammar_figures() {
        // One run rule over a^8: d=1, |tau|=1, size 5.
        let file = compress(b"aaaaaaaa", Algorithm::RlMrRepair, Encoding::PopptPge, 8).unwrap();
        let s = stats(&file).unwrap();
        assert_eq!(s.rule_count, 1);
        assert_eq!(s.tau_len, 1);
        assert_eq!(s.sum_alpha, 3);
        assert_eq!(s.grammar_size, 5);

        let file = compress(b"abc", Algorithm::Repair, Encoding::Fble, 0).unwrap();
        let s = stats(&file).unwrap();
        assert_eq!(s.rule_count, 0);
        assert_eq!(s.tau_len, 3);
        assert_eq!(s.grammar_size, 6);
        assert_eq!(s.grammar_size, s.sigma as u64 + s.sum_alpha + s.tau_len);
    }

    #[test]
    fn run_exponents_ride_in_the_side_stream() {
        // The general-form tree of a^8 carries its exponent outside U, so
        // the leaf text stays tiny and the bound holds.
        let file = compress(b"aaaaaaaa", Algorithm::RlMrRepair, Encoding::PopptPge, 8).unwrap();
        let (_, g) = decode_grammar(&file).unwrap();
        assert_eq!(
            g.rules,
            vec![
                crate::grammar::Rule::Terminal(b'a'),
                crate::grammar::Rule::Run {
                    base: 1,
                    exponent: 8
                }
            ]
        );
    }

    #[test]
    fn header_round_trip() {
        let file = compress(b"header fields", Algorithm::MrRepair, Encoding::Huffman, 0).unwrap();
        let (h, g) = decode_grammar(&file).unwrap();
        assert_eq!(h.algo, Algorithm::MrRepair);
        assert_eq!(h.enc, Encoding::Huffman);
        assert_eq!(h.input_len, 13);
        assert_eq!(h.rule_count, g.variable_rule_count() as u64);
        assert_eq!(h.tau_len, g.tau.len() as u64);
    }
}
