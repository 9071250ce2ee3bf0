//! Mapping between raw input bytes and the initial symbol text: every
//! occurring byte becomes a terminal symbol, assigned in ascending byte
//! order so the mapping is stable across permutations of the same alphabet.

use crate::error::{Error, Result};
use crate::grammar::Symbol;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphabetMap {
    bytes: Vec<u8>,
    /// byte -> terminal symbol, 0 when the byte does not occur.
    symbol_of: [u16; 256],
}

impl AlphabetMap {
    /// Builds the map for the distinct bytes of `data`.
    pub fn from_data(data: &[u8]) -> Self {
        let mut seen = [false; 256];
        for &b in data {
            seen[b as usize] = true;
        }
        let bytes: Vec<u8> = (0u16..256)
            .filter(|&b| seen[b as usize])
            .map(|b| b as u8)
            .collect();
        Self::from_terminal_bytes_unchecked(bytes)
    }

    /// Rebuilds a map from a stored terminal table; the bytes must be
    /// strictly ascending.
    pub fn from_terminal_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::corrupt(
                0,
                "terminal table is not strictly ascending",
            ));
        }
        Ok(Self::from_terminal_bytes_unchecked(bytes.to_vec()))
    }

    fn from_terminal_bytes_unchecked(bytes: Vec<u8>) -> Self {
        let mut symbol_of = [0u16; 256];
        for (i, &b) in bytes.iter().enumerate() {
            symbol_of[b as usize] = i as u16 + 1;
        }
        AlphabetMap { bytes, symbol_of }
    }

    pub fn sigma(&self) -> usize {
        self.bytes.len()
    }

    pub fn terminal_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn symbol_of(&self, b: u8) -> Option<Symbol> {
        match self.symbol_of[b as usize] {
            0 => None,
            s => Some(s as Symbol),
        }
    }

    pub fn byte_of(&self, s: Symbol) -> Option<u8> {
        if s == 0 {
            return None;
        }
        self.bytes.get(s as usize - 1).copied()
    }
}

/// Replaces each input byte with its terminal symbol.
pub fn ingest_bytes(data: &[u8]) -> (Vec<Symbol>, AlphabetMap) {
    let map = AlphabetMap::from_data(data);
    let text = data
        .iter()
        .map(|&b| map.symbol_of(b).expect("byte present in its own alphabet"))
        .collect();
    (text, map)
}

/// Maps terminal symbols back to bytes; inverse of `ingest_bytes`.
pub fn render_bytes(map: &AlphabetMap, symbols: &[Symbol]) -> Result<Vec<u8>> {
    symbols
        .iter()
        .map(|&s| {
            map.byte_of(s)
                .ok_or_else(|| Error::corrupt(0, format!("symbol {s} is not a terminal")))
        })
        .collect()
}
