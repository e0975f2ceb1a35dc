//! Transistor-level simulation and benchmarking of CNFET multiple-valued-logic
//! full adders.

pub mod adders;
pub mod bench;
pub mod charts;
pub mod device;
pub mod measure;
pub mod netlist;
pub mod oracle;
pub mod report;
pub mod solver;
