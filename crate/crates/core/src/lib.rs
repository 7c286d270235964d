pub mod cli;
pub mod data;
pub mod deeponet;
pub mod engine;
pub mod infer;
pub mod nn;
pub mod plot;
pub mod train;
pub mod util;
