//! Similarity-of-channels workflow for mass spectrometry imaging stacks.
//!
//! A [`MassChannelStack`](stack::MassChannelStack) is run through a grid of
//! pre-processing setups, similarity functions and clustering algorithms.
//! Each clustering is scored by two cluster-validity indices whose ranks
//! are fused into one score, and the ranked setups are written as a report.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod clustering;
pub mod container;
pub mod csv_import;
pub mod features;
pub mod preprocess;
pub mod report;
pub mod scoring;
pub mod similarity;
pub mod stack;
pub mod synthetic;
pub mod workflow;
