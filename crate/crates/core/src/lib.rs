pub mod augment;
pub mod autodiff;
pub mod cli;
pub mod data;
pub mod error;
pub mod math;
pub mod models;
pub mod trainers;
pub mod verify;

pub use error::{Error, Result};
