//! Numerics for the multi-species mean-field spin glass: exact small-N
//! pressures, the annealed / replica-symmetric / RSB variational bounds, and
//! Monte Carlo checks of the interpolation identities relating them.

pub mod annealed;
pub mod error;
pub mod exact;
pub mod model;
pub mod optim;
pub mod quadrature;
pub mod rs;
pub mod rsb;
pub mod verify;

pub use error::{Error, Result};
pub use model::{ModelSpec, SizedModel};
pub use quadrature::QuadratureRule;
