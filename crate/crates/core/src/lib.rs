//! Core library for room-level indoor localization from WiFi beacon streams.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`types`] — beacon records, capture sessions, and location snapshots;
//! * [`augment`] — sliding-portion snapshot synthesis from beacon streams
//!   (`dataloc_plus`) plus the online no-drop snapshot;
//! * [`features`] — fixed-schema feature matrices over a device universe,
//!   stratified splitting, and sub-zone label rewriting;
//! * [`forest`] — a self-contained random-forest classifier (bootstrap
//!   sampling, Gini splits, majority voting);
//! * [`sim`] — a synthetic indoor RF scenario generator (log-distance path
//!   loss, shadowing, detection floor) producing realistic capture data;
//! * [`harness`] — experiment drivers: hyper-parameter grids, augmented vs.
//!   snapshot comparison, portion-variability curves, sub-zone scaling.
//!
//! Everything is deterministic: all randomness flows through the seeded,
//! fully specified generator in [`rng`], and every parallelizable loop uses
//! derived sub-seeds so results do not depend on scheduling.
//!
//! The crate is `no_std` (with `alloc`); file formats and the command-line
//! interface live in the companion `roomloc` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod augment;
pub mod features;
pub mod forest;
pub mod harness;
pub mod parallel;
pub mod rng;
pub mod sim;
pub mod types;
