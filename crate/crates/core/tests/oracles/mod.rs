//! Brute-force oracles shared by the integration tests and the acceptance
//! suite. Each test target uses a subset.
#![allow(dead_code)]

pub mod hull;
pub mod rrcm;
pub mod venn;
