pub mod basis;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod kernel;
pub mod output;
pub mod quad;
pub mod risk;
pub mod sample;
pub mod signals;
