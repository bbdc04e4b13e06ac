//! Fixed-point battery energy.
//!
//! State of charge is tracked in integer micro-kilowatt-hours so that charge
//! bookkeeping (arrival SoC, departure SoC, charged amount) is exact: the
//! amount charged at a station always equals `soc_out - soc_in` bit for bit.

use core::fmt;
use core::iter::Sum;
use core::ops::{Add, AddAssign, Neg, Sub, SubAssign};

/// Energy in micro-kWh (1e-6 kWh resolution).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Energy(i64);

impl Energy {
    pub const ZERO: Energy = Energy(0);
    pub const UNITS_PER_KWH: i64 = 1_000_000;

    /// Rounds `kwh` to the nearest representable amount.
    pub fn from_kwh(kwh: f64) -> Energy {
        Energy(libm::round(kwh * Self::UNITS_PER_KWH as f64) as i64)
    }

    pub const fn from_micro(units: i64) -> Energy {
        Energy(units)
    }

    pub const fn micro(self) -> i64 {
        self.0
    }

    pub fn kwh(self) -> f64 {
        self.0 as f64 / Self::UNITS_PER_KWH as f64
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn max(self, other: Energy) -> Energy {
        if self.0 >= other.0 {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Energy) -> Energy {
        if self.0 <= other.0 {
            self
        } else {
            other
        }
    }
}

impl Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl Sub for Energy {
    type Output = Energy;
    fn sub(self, rhs: Energy) -> Energy {
        Energy(self.0 - rhs.0)
    }
}

impl Neg for Energy {
    type Output = Energy;
    fn neg(self) -> Energy {
        Energy(-self.0)
    }
}

impl AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Energy {
    fn sub_assign(&mut self, rhs: Energy) {
        self.0 -= rhs.0;
    }
}

impl Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        iter.fold(Energy::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kwh())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kwh_round_trip_is_exact_on_grid() {
        for units in [0i64, 1, 999_999, 56_000_000, -3_141_592] {
            let e = Energy::from_micro(units);
            assert_eq!(Energy::from_kwh(e.kwh()), e);
        }
    }

    #[test]
    fn rounds_to_nearest_micro() {
        assert_eq!(Energy::from_kwh(1.15 * 17.0).micro(), 19_550_000);
        assert_eq!(Energy::from_kwh(0.000_000_4).micro(), 0);
        assert_eq!(Energy::from_kwh(0.000_000_6).micro(), 1);
    }
}
