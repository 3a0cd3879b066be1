//! Scalar abstraction for all real-valued quantities (times, rates, utilities).
//!
//! Resource counts (bandwidth units, computing units) are exact integers
//! everywhere in this crate; only the continuous quantities go through
//! [`Scalar`]. `f64` is the default precision used by the CLI and the type
//! aliases at the crate root, `f32` is supported for memory-bound sweeps.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Conversion from `f64` constants and samples. All samplers draw in
    /// `f64` and convert through this, so a given seed produces the same
    /// draw sequence regardless of the scalar type in use.
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 must convert into a Scalar")
    }

    fn to_f64_c(self) -> f64 {
        self.to_f64().expect("Scalar must convert into f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
