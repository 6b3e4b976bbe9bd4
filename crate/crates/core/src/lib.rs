#![cfg_attr(not(test), no_std)]
extern crate alloc;

pub mod discrimination;
pub mod error;
pub mod freesets;
pub mod hermlin;
pub mod povm;
pub mod robustness;
pub mod sdpcore;

pub use error::{Error, Result};
