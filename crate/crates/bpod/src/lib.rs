pub mod analysis;
pub mod balancing;
pub mod channel;
pub mod config;
pub mod container;
pub mod criteria;
pub mod dynamics;
pub mod error;
pub mod field3d;
pub mod linalg;
pub mod modal;
pub mod pipeline;
pub mod report;
pub mod spectral;
pub mod system;

pub use error::{Error, Result};
