use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Tag alphabet in label-vector order.
pub const TAGS: [char; 7] = ['b', 'c', 'f', 'm', 'o', 'p', 'v'];
pub const NUM_TAGS: usize = TAGS.len();

pub const TAG_DESCRIPTIONS: [&str; NUM_TAGS] = [
    "broadband noise",
    "child speech",
    "adult female speech",
    "adult male speech",
    "other identifiable sounds",
    "percussive sound events",
    "TV sounds or video games",
];

pub fn tag_index(letter: char) -> Option<usize> {
    TAGS.iter().position(|&t| t == letter)
}

/// Chunk-level multi-label reference over the tag alphabet.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct TagLabel {
    bits: [bool; NUM_TAGS],
}

impl TagLabel {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: [bool; NUM_TAGS]) -> Self {
        Self { bits }
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = [false; NUM_TAGS];
        for i in indices {
            bits[i] = true;
        }
        Self { bits }
    }

    pub fn bits(&self) -> [bool; NUM_TAGS] {
        self.bits
    }

    pub fn has(&self, event: usize) -> bool {
        self.bits[event]
    }

    pub fn set(&mut self, event: usize) {
        self.bits[event] = true;
    }

    pub fn targets(&self) -> [f64; NUM_TAGS] {
        self.bits.map(|b| if b { 1.0 } else { 0.0 })
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }
}

impl FromStr for TagLabel {
    type Err = Error;

    /// Parses a subset of `bcfmopv`; unknown or repeated letters are rejected.
    fn from_str(s: &str) -> Result<Self> {
        let mut label = TagLabel::empty();
        for ch in s.trim().chars() {
            let i = tag_index(ch).ok_or_else(|| Error::Tags(format!("unknown tag '{ch}'")))?;
            if label.bits[i] {
                return Err(Error::Tags(format!("duplicate tag '{ch}'")));
            }
            label.bits[i] = true;
        }
        Ok(label)
    }
}

impl fmt::Display for TagLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.bits.iter().enumerate() {
            if *b {
                write!(f, "{}", TAGS[i])?;
            }
        }
        Ok(())
    }
}
