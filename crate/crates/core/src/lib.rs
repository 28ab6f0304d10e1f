//! Process semantics, the Hadoop cluster model, scheduling policies and an
//! explicit-state checker for scheduler properties over workload traces.

pub mod kernel;
pub mod config;
pub mod trace;
pub mod model;
pub mod policy;
pub mod checker;
pub mod analysis;
pub mod whatif;
