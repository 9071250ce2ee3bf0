//! Grammar bit encodings: the delimited-text codecs, packed gamma
//! encoding, and the post-order partial parse tree representation.

pub mod naive;
pub mod pge;
pub mod poppt;
