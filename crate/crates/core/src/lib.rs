//! Generation-based linear network coding for distributed record storage.
//!
//! Layers, bottom up: [`gf256`] field arithmetic, the [`blockcode`]
//! Hamming(7,4) pre-processing stage, the [`rlnc`] codec, the multilevel
//! tag/reader/client/server [`hierarchy`], the persistent [`store`], and the
//! [`simnet`] distribution simulator. [`cli`] wires them to the `netcode`
//! binary.

pub mod blockcode;
pub mod cli;
pub mod gf256;
pub mod hierarchy;
pub mod rlnc;
pub mod simnet;
pub mod store;
