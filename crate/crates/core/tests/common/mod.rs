#![allow(dead_code)]

pub mod kn_oracle;
pub mod synthetic;
