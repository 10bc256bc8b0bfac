//! Saturating counters, the basic storage unit of every pattern history
//! table and of the per-transition decision counters.

/// Direction of a resolved (or predicted) conditional branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Taken,
    NotTaken,
}

impl Outcome {
    #[inline]
    pub fn is_taken(self) -> bool {
        matches!(self, Outcome::Taken)
    }

    #[inline]
    pub fn from_taken(taken: bool) -> Self {
        if taken {
            Outcome::Taken
        } else {
            Outcome::NotTaken
        }
    }
}

/// An n-bit saturating counter. Incremented on taken, decremented on
/// not-taken, clamped to [0, 2^width - 1]. The most significant bit is
/// the predicted direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaturatingCounter {
    value: u8,
    width: u8,
}

impl SaturatingCounter {
    /// Largest representable value for a given width.
    #[inline]
    pub fn max_value(width: u8) -> u8 {
        debug_assert!((1..=8).contains(&width));
        (((1u16) << width) - 1) as u8
    }

    pub fn new(value: u8, width: u8) -> Self {
        assert!((1..=8).contains(&width), "counter width must be 1..=8");
        assert!(
            value <= Self::max_value(width),
            "counter value {value} exceeds {width}-bit range"
        );
        SaturatingCounter { value, width }
    }

    #[inline]
    pub fn value(self) -> u8 {
        self.value
    }

    #[inline]
    pub fn width(self) -> u8 {
        self.width
    }

    /// Predicted direction: the MSB of the counter.
    #[inline]
    pub fn direction(self) -> bool {
        self.value >> (self.width - 1) != 0
    }

    /// Apply one outcome. Returns true iff the direction bit flipped.
    #[inline]
    pub fn update(&mut self, outcome: Outcome) -> bool {
        let before = self.direction();
        match outcome {
            Outcome::Taken => {
                if self.value < Self::max_value(self.width) {
                    self.value += 1;
                }
            }
            Outcome::NotTaken => {
                self.value = self.value.saturating_sub(1);
            }
        }
        self.direction() != before
    }

    /// Reflect the value across the midpoint: v -> max - v. Always flips
    /// the direction bit; applying it twice restores the original value.
    #[inline]
    pub fn invert(&mut self) {
        self.value = Self::max_value(self.width) - self.value;
    }
}
