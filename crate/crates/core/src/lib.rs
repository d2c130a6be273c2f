//! Streaming approximate pattern matching under edit distance with a
//! threshold `k`.
//!
//! The crate is organized bottom-up:
//!
//! * [`sym`], [`lz`], [`oracle`], [`align`] — plain-string machinery:
//!   symbols, LZ77 factorizations, periodicity, reference dynamic programs,
//!   and alignment objects with exhaustive enumerators used as test oracles.
//! * [`grammar`], [`rank`], [`masked`] — the compressed string
//!   representation (run-length SLPs with LCE support), dummy rank/select,
//!   and the masked-pair encoding with capped edit distance queries.
//! * [`greedy`] — greedy and quasi-greedy encodings: construction,
//!   threshold lowering, concatenation, streaming construction, and
//!   products.
//! * [`cgk`], [`context`] — the CGK random walk and the context encoding
//!   built on top of it.
//! * [`sketch`] — equality fingerprints, k-mismatch and prefix-mismatch
//!   sketches, and the composable edit-distance sketches.
//! * [`matcher`] — pattern matching with `k` edits in the semi-streaming
//!   and fully streaming settings.
//! * [`wire`] — the versioned binary record format shared by the CLI.
//!
//! The crate is `no_std` (requires `alloc`); all I/O lives in the
//! companion CLI crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod align;
pub mod cgk;
pub mod config;
pub mod context;
pub mod field;
pub mod fprint;
pub mod grammar;
pub mod greedy;
pub mod lz;
pub mod masked;
pub mod matcher;
pub mod oracle;
pub mod rank;
pub mod sketch;
pub mod sym;
pub mod wire;

pub use sym::Sym;
