//! Exact continued-fraction arithmetic and the machinery for building Moran-type
//! Cantor sets of continued fractions whose digits are drawn from sparse integer
//! sets, inserting prescribed digit blocks into them, and certifying the
//! inequalities that keep their Hausdorff dimension under control.
//!
//! Pipeline: [`thinning`] extracts a relatively thin subset, [`moran`] builds the
//! seed set and its dimension estimates, [`insertion`] plans and verifies digit
//! insertion, and [`progressions`] mines witnesses among the inserted digits.

pub mod cfcore;
pub mod density;
pub mod error;
pub mod hp;
pub mod insertion;
pub mod intsets;
pub mod magnitude;
pub mod moran;
pub mod progressions;
pub mod serial;
pub mod thinning;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
