pub mod apdo;
pub mod bargmann;
pub mod coeff;
pub mod error;
pub mod grid;
pub mod hermite;
pub mod mixednorm;
pub mod realpdo;
pub mod verify;
pub mod weights;

pub use coeff::{Basis, CoeffArray, MultiIndex, TruncationSpec, C64};
pub use error::{Error, Result};
pub use grid::GridField;
