//! Secret-key and private-key agreement for the three-terminal source model.
//!
//! Terminals `X`, `Y` and `Z` observe `n` i.i.d. repetitions of a correlated
//! source `(X, Y, Z)` and talk over a public channel. All three agree on a
//! secret key hidden from an eavesdropper; `X` and `Y` additionally agree on
//! a private key hidden from the eavesdropper and from `Z`.
//!
//! The crate computes the SK-PK capacity region ([`region`]) and runs the
//! random-binning / joint-typicality schemes that reach its corner points
//! ([`protocol`]), together with exact small-blocklength evaluation of key
//! secrecy and uniformity ([`exact`]).
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod binning;
pub mod error;
pub mod exact;
pub mod protocol;
pub mod region;
pub mod rng;
pub mod source;
pub mod sum;
pub mod typicality;

pub use error::{Error, Result};
