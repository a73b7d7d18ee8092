//! Library side of the `rg` tool: the interactive play loop and the corpus
//! manifest, shared by the binary and its tests.

pub mod manifest;
pub mod play;
