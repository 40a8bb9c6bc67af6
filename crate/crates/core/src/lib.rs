//! Deterministic nano-drone racing simulator and analysis toolkit.
//!
//! A planar arena with poles, panels and gates ([`arena`]) is observed through
//! a three-sector collision perception model ([`perception`]). Three reactive
//! navigation policies ([`policy`]) close the loop through a unicycle vehicle
//! model with dead-reckoning drift ([`vehicle`]). Around that sit competition
//! scoring ([`scoring`]), the drift Monte Carlo study ([`analysis`]), the
//! photometric augmentation pipeline and dataset pose sampler ([`augment`]),
//! and the batch runner and CLI ([`experiment`], [`cli`]).

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod arena;
pub mod augment;
pub mod cli;
pub mod experiment;
pub mod geom;
pub mod io;
pub mod perception;
pub mod pgm;
pub mod policy;
pub mod scoring;
pub mod stats;
pub mod vehicle;
