//! Construction and evaluation of multi-property molecule-optimization
//! instruction benchmarks.

pub mod molgraph;
pub mod exec;
pub mod fingerprint;
pub mod propmodel;
pub mod oracle;
pub mod pairmine;
pub mod synth;
pub mod fixtures;
pub mod taskforge;
pub mod prompts;
pub mod evalengine;
