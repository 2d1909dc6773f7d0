use std::cmp::Ordering;
use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Numeric type usable as a residual-energy value.
///
/// Tree construction only compares energies, so any totally ordered
/// numeric type works: `f32`, `f64` and `Ratio<i64>` all qualify.
/// Values are assumed to be non-NaN.
pub trait Scalar: Num + Copy + PartialOrd + Debug + FromPrimitive + ToPrimitive {
    /// Total comparison for non-NaN values.
    fn total_cmp_energy(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }

    fn min_energy(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn max_energy(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl<T: Num + Copy + PartialOrd + Debug + FromPrimitive + ToPrimitive> Scalar for T {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn min_max_across_types() {
        assert_eq!(2.0f64.min_energy(3.0), 2.0);
        assert_eq!(2.0f32.max_energy(3.0), 3.0);
        let a = Rational::new(1, 3);
        let b = Rational::new(1, 2);
        assert_eq!(a.min_energy(b), a);
        assert_eq!(a.total_cmp_energy(&b), Ordering::Less);
    }
}
