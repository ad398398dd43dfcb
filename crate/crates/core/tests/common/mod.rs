#![allow(dead_code)]

pub mod csvs;
pub mod imc;
pub mod oracle;
