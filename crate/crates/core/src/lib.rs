pub mod field;

pub use field::{Fp, GoldilocksConfig, PrimeField, Toy257Config};

/// The 64-bit production field `p = 2^64 - 2^32 + 1`.
pub type Goldilocks = Fp<GoldilocksConfig>;
/// The toy field `p = 257` used for exhaustive checks.
pub type Toy257 = Fp<Toy257Config>;
pub mod rscode;
pub mod circuit;
pub mod transport;
pub mod crypto;
pub mod inner;
pub mod outer;
pub mod combined;
pub mod nn;
