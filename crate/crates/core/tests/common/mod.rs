//! Shared pieces for the integration tests: brute-force oracles written
//! from the textbook definitions, random instance generators and the
//! acceptance criteria checks.
#![allow(dead_code)]

pub mod criteria;
pub mod gen;
pub mod oracles;
