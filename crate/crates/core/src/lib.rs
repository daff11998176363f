pub mod dist;
pub mod error;
pub mod hgm;
pub mod mhg;
pub mod oracle;
pub mod pfaffian;
pub mod subset;
pub mod symfun;

pub use error::{Error, Result};
pub use subset::SubsetIndex;
