//! A toolkit for a multi-agent modal logic of vagueness with report
//! (`R_j`) and definitely (`D_j`) operators: parsing, finite-structure
//! model checking, Hilbert-style proof checking, decision procedures and
//! executable reconstructions of the sensor, sorites and clarity models.

pub mod axioms;
pub mod checker;
pub mod cli;
pub mod decision;
pub mod formula;
pub mod fuzz;
pub mod gen;
pub mod parser;
pub mod scenarios;
pub mod structure;

pub use formula::{AgentId, Formula};
pub use structure::{VagueStructure, World};
