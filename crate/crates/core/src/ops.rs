use std::ops::{Add, AddAssign, Sub};

/// Tally of real-valued work: additions/subtractions and comparisons.
/// Sign flips, XORs, halving, table lookups and copies are free.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct OpCounter {
    pub additions: u64,
    pub comparisons: u64,
}

impl OpCounter {
    pub const fn new() -> Self {
        Self {
            additions: 0,
            comparisons: 0,
        }
    }

    #[inline]
    pub fn add(&mut self, n: u64) {
        self.additions += n;
    }

    #[inline]
    pub fn cmp(&mut self, n: u64) {
        self.comparisons += n;
    }

    pub fn total(&self) -> u64 {
        self.additions + self.comparisons
    }
}

impl AddAssign for OpCounter {
    fn add_assign(&mut self, rhs: Self) {
        self.additions += rhs.additions;
        self.comparisons += rhs.comparisons;
    }
}

impl Add for OpCounter {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl Sub for OpCounter {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            additions: self.additions - rhs.additions,
            comparisons: self.comparisons - rhs.comparisons,
        }
    }
}
