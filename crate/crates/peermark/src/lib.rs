//! Watermarking toolkit for detecting LLM-generated peer reviews.
//!
//! The pipeline has three stages. First, a candidate phrase set is built and a
//! watermark is drawn from it uniformly at random with caller-supplied
//! randomness ([`watermark`]), and the secret choice is persisted in an
//! append-only, hash-chained registry ([`registry`]). Second, the instruction
//! carrying the watermark is hidden inside the manuscript PDF by white text,
//! synthesized fonts, or translated payloads ([`inject`]). Third, submitted
//! reviews are scanned for candidate occurrences and flagged under formal
//! false-positive-rate and family-wise-error-rate control ([`detect`]), with a
//! Monte-Carlo and resampling harness that checks the advertised bounds
//! empirically ([`simulate`]). [`llmclient`] drives review generation and the
//! reviewer-defense experiments against chat-completion providers, with
//! record/replay cassettes so nothing in the test suite touches the network.

pub mod corpus;
pub mod detect;
pub mod inject;
pub mod llmclient;
pub mod registry;
pub mod seed;
pub mod simulate;
pub mod watermark;
