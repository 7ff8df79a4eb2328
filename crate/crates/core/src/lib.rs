//! Deterministic simulator of a generative-AI-integrated semantic
//! communication network.
//!
//! Content is modelled as structured [`scene::Scene`]s. Three delivery
//! schemes are compared over a seeded AWGN channel:
//!
//! * **A**: cloud-generated content rendered to pixels and sent over a
//!   Huffman + LDPC stack;
//! * **B**: the original scene sent twice (uplink, then downlink) through the
//!   semantic codec, with no generative models;
//! * **C**: a keyword prompt goes uplink, the cloud regenerates content, the
//!   edge sends it with the semantic codec and the receiver calibrates it.
//!
//! [`experiment::run_experiment`] drives a full corpus run and produces the
//! metrics report and event log.

pub mod error;
pub mod experiment;
pub mod gai;
pub mod metrics;
pub mod phy;
pub mod scene;
pub mod semantic;
pub mod workflow;

pub use error::{Error, Result};
