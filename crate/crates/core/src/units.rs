//! Unit-tagged scalars.
//!
//! Every quantity that crosses a module boundary carries its unit in the
//! type. All of them are non-negative and finite; the checked constructors
//! reject anything else. Conversions between units are explicit functions
//! (`Megabits / MegabitsPerSecond -> Seconds`, and so on).

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! unit {
    ($(#[$meta:meta])* $name:ident, $label:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(f64);

        impl $name {
            pub const ZERO: Self = Self(0.0);

            /// Checked constructor: rejects negative and non-finite values.
            pub fn new(value: f64) -> Result<Self> {
                if value.is_finite() && value >= 0.0 {
                    Ok(Self(value))
                } else {
                    Err(Error::param(
                        stringify!($name),
                        format!("expected a finite non-negative value, got {value}"),
                    ))
                }
            }

            /// Constructor for values that are non-negative by construction.
            ///
            /// Debug builds still assert the invariant.
            pub(crate) fn from_raw(value: f64) -> Self {
                debug_assert!(value.is_finite() && value >= 0.0, "{value}");
                Self(value)
            }

            #[inline]
            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{} {}", self.0, $label)
            }
        }

        impl Add for $name {
            type Output = Self;
            fn add(self, rhs: Self) -> Self {
                Self(self.0 + rhs.0)
            }
        }

        impl AddAssign for $name {
            fn add_assign(&mut self, rhs: Self) {
                self.0 += rhs.0;
            }
        }
    };
}

unit!(
    /// Wall-clock or simulated duration.
    Seconds,
    "s"
);
unit!(
    /// Payload size (model parameters on the wire).
    Megabits,
    "Mbit"
);
unit!(
    /// Link throughput.
    MegabitsPerSecond,
    "Mbit/s"
);
unit!(
    /// A count of training samples.
    Samples,
    "samples"
);
unit!(
    /// Compute capability: training samples processed per second.
    SamplesPerSecond,
    "samples/s"
);

impl Seconds {
    /// `max(0, self - other)`.
    pub fn saturating_sub(self, other: Seconds) -> Seconds {
        Seconds((self.0 - other.0).max(0.0))
    }

    pub fn max(self, other: Seconds) -> Seconds {
        Seconds(self.0.max(other.0))
    }

    pub fn from_minutes(minutes: f64) -> Result<Seconds> {
        Seconds::new(minutes * 60.0)
    }
}

impl Megabits {
    /// Megabytes (10^6 bytes) to megabits.
    pub fn from_megabytes(megabytes: f64) -> Result<Megabits> {
        Megabits::new(megabytes * 8.0)
    }
}

impl Div<MegabitsPerSecond> for Megabits {
    type Output = Seconds;

    /// Transfer time. Division by a zero rate yields an infinite duration,
    /// which callers treat as "never completes".
    fn div(self, rate: MegabitsPerSecond) -> Seconds {
        Seconds(self.0 / rate.0)
    }
}

impl Div<SamplesPerSecond> for Samples {
    type Output = Seconds;

    fn div(self, rate: SamplesPerSecond) -> Seconds {
        Seconds(self.0 / rate.0)
    }
}

impl Mul<f64> for Samples {
    type Output = Samples;

    fn mul(self, factor: f64) -> Samples {
        Samples::from_raw(self.0 * factor)
    }
}

/// Identifier of one client: a dense index in `1..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClientId(u32);

impl ClientId {
    pub fn new(index: u32) -> Result<Self> {
        if index == 0 {
            return Err(Error::param("ClientId", "client indices start at 1"));
        }
        Ok(Self(index))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Zero-based position in a profile table.
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }

    pub(crate) fn from_slot(slot: usize) -> Self {
        Self(slot as u32 + 1)
    }
}

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}
