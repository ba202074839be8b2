//! The two-element group G = {+1, −1} and points of G^m.
//!
//! Ordering puts `Plus` before `Minus`, so comparing two points
//! lexicographically is the same as comparing their big-endian bit strings
//! with +1 ↦ 0 and −1 ↦ 1.

use std::fmt;
use std::ops::{Mul, Neg};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const ALL: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    /// Bit encoding: +1 ↦ 0, −1 ↦ 1.
    pub fn bit(self) -> u32 {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn from_bit(bit: u32) -> Sign {
        if bit & 1 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn from_value(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    /// Sign of a real number, with zero mapped to `Plus`.
    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Sign> {
        match c {
            '+' => Some(Sign::Plus),
            '-' | '−' => Some(Sign::Minus),
            _ => None,
        }
    }
}

impl Neg for Sign {
    type Output = Sign;

    fn neg(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A point of G^m.
pub type Point = Vec<Sign>;

/// Big-endian integer code of a point (first coordinate is the top bit).
pub fn point_code(point: &[Sign]) -> u64 {
    point.iter().fold(0u64, |acc, s| (acc << 1) | u64::from(s.bit()))
}

/// Inverse of [`point_code`] for points of length `m`.
pub fn point_from_code(code: u64, m: usize) -> Point {
    (0..m)
        .map(|i| Sign::from_bit(((code >> (m - 1 - i)) & 1) as u32))
        .collect()
}

/// All points of G^m in lexicographic order.
pub fn all_points(m: usize) -> impl Iterator<Item = Point> {
    assert!(m < 64, "G^{m} is too large to enumerate");
    (0..1u64 << m).map(move |c| point_from_code(c, m))
}

pub fn negate(point: &[Sign]) -> Point {
    point.iter().map(|&s| -s).collect()
}

/// Renders a point as a string of `+`/`-` characters.
pub fn point_string(point: &[Sign]) -> String {
    point.iter().map(|s| s.symbol()).collect()
}

pub fn parse_point(text: &str) -> Option<Point> {
    text.chars().map(Sign::from_symbol).collect()
}
