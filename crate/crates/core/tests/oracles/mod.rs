#![allow(dead_code)]

pub mod align;
pub mod lm;
pub mod select;
pub mod harness;
