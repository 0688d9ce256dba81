pub mod bridge;
pub mod cli;
pub mod cost;
pub mod error;
pub mod eval;
pub mod expr;
pub mod lens;
pub mod normal;
pub mod optic;
pub mod real;
pub mod sample;
pub mod share;
pub mod signature;
pub mod term;
pub mod two_optic;
