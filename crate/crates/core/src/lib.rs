//! Multi-server secure gradient aggregation for wireless federated learning.
//!
//! Users split their gradients, Lagrange-encode them into one confidential
//! share per server, and ship the shares over an interference network in which
//! a rotating user transmits artificial noise aligned with every message a
//! server is not supposed to see. Each server sums its shares and sends the
//! sum back; any `r + 1` sums let a user interpolate the aggregate gradient.
//!
//! The crate is `no_std` (it needs `alloc`). Module map:
//!
//! * [`galois`]: prime-field arithmetic and univariate polynomials.
//! * [`coding`]: splitting, encoding, aggregation and reconstruction.
//! * [`protocol`]: the M-round uplink/downlink schedule over a [`protocol::Transport`].
//! * [`airsim`]: channel generation, alignment beamformers, rank, zero-forcing and leakage.
//! * [`analysis`]: closed-form DoF / NDT / lower-bound / gap evaluation.
//! * [`seed`]: master-seed splitting and Gaussian sampling.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod airsim;
pub mod analysis;
pub mod coding;
pub mod galois;
pub mod protocol;
pub mod seed;

pub use galois::{Fe, Polynomial, PrimeField};
