//! IO, file formats, thread-pool drivers and the command-line front end for
//! `navgraph-core`.

pub mod cli;
pub mod dot;
pub mod driver;
pub mod edgelist;
pub mod report;

pub use navgraph_core as core;
