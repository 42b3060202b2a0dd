//! Concrete structures: the sweetness sensor, the sorites pile and the
//! height model for clarity.

pub mod sensor;
pub mod sorites;
pub mod williamson;
