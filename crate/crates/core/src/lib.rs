pub mod baselines;
pub mod error;
pub mod experiment;
pub mod features;
pub mod fock;
pub mod learn;
pub mod reservoir;
pub mod seeding;
pub mod signals;
pub mod table;

pub use error::{QrcError, Result};
