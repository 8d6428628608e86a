//! Library side of the envyfix CLI: file formats and command execution.

pub mod commands;
pub mod format;
