//! Scalar abstraction for the scoring math.
//!
//! All score arithmetic (BM25, tf-idf, fusion, normalization, metrics) is
//! generic over [`Real`], so the same kernels run on `f32` or `f64`. The
//! pipeline entry points use the [`crate::Score`] alias (`f64`).

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + AddAssign + Sum + Debug + Send + Sync + 'static {
    fn from_usize_(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }
}

impl<T> Real for T where T: Float + FromPrimitive + AddAssign + Sum + Debug + Send + Sync + 'static {}
