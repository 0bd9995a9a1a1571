//! Integer frequency intervals for a length-`L` periodic signal.

use std::ops::RangeInclusive;

/// The full interval `I_L` and the positive interval `I_L⁺` for length `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrequencyIndexing {
    len: usize,
}

impl FrequencyIndexing {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "signal length must be positive");
        Self { len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// `[1 - L/2, L/2]` for even `L`, `[-(L-1)/2, (L-1)/2]` for odd `L`.
    pub fn full_range(&self) -> RangeInclusive<i64> {
        let l = self.len as i64;
        if l % 2 == 0 {
            (1 - l / 2)..=(l / 2)
        } else {
            (-(l - 1) / 2)..=((l - 1) / 2)
        }
    }

    /// `[0, L/2]` for even `L`, `[0, (L-1)/2]` for odd `L`.
    pub fn positive_range(&self) -> RangeInclusive<usize> {
        0..=(self.len / 2)
    }

    pub fn positive_count(&self) -> usize {
        self.len / 2 + 1
    }

    /// Representative of `t mod L` inside the full interval.
    pub fn fold(&self, t: i64) -> i64 {
        let l = self.len as i64;
        let r = t.rem_euclid(l);
        if r > *self.full_range().end() {
            r - l
        } else {
            r
        }
    }

    /// Index in `[0, L)` of `t mod L`.
    pub fn wrap(&self, t: i64) -> usize {
        t.rem_euclid(self.len as i64) as usize
    }

    /// Whether `L` is even, so that the Nyquist bin `L/2` exists.
    pub fn has_nyquist(&self) -> bool {
        self.len % 2 == 0
    }
}
