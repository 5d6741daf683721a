// SPDX-License-Identifier: MIT
pub mod cli;
pub mod error;
pub mod likelihood;
pub mod model;
pub mod priors;
pub mod inference;
pub mod io;
pub mod search;
pub mod seed;
pub mod simulate;

pub use error::{Error, Result};
