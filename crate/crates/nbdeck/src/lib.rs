//! Command line and HTTP front ends for `nbdeck-core`.

pub mod cli;
pub mod service;
