#![allow(dead_code)]

pub mod bbc_oracle;
pub mod stats_oracle;
