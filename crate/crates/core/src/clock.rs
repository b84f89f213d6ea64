use serde::{Deserialize, Serialize};

/// Hours between follow reflections.
pub const REFLECTION_PERIOD: u64 = 48;

/// Logical simulation time; one turn is one hour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct SimClock {
    pub turn: u64,
}

impl SimClock {
    pub fn at(turn: u64) -> Self {
        SimClock { turn }
    }

    pub fn tick(&mut self) {
        self.turn += 1;
    }

    pub fn hour(&self) -> u8 {
        (self.turn % 24) as u8
    }

    /// Day of week, 1 through 7.
    pub fn day(&self) -> u8 {
        ((self.turn / 24) % 7 + 1) as u8
    }

    pub fn is_reflection_turn(&self) -> bool {
        self.turn > 0 && self.turn.is_multiple_of(REFLECTION_PERIOD)
    }
}
