//! Seeded random input arrays.

use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SimError;

/// How strongly to squeeze the value range to force repeated keys.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Duplicates {
    /// Distinct values whenever the width allows it.
    #[default]
    None,
    /// Values drawn from `max(2, n / 2)` keys.
    Some,
    /// Values drawn from `max(2, n / 8)` keys.
    Heavy,
}

impl FromStr for Duplicates {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Duplicates::None),
            "some" => Ok(Duplicates::Some),
            "heavy" => Ok(Duplicates::Heavy),
            other => Err(SimError::InvalidConfig(format!(
                "unknown duplicates mode `{other}` (expected none|some|heavy)"
            ))),
        }
    }
}

/// Number of distinct keys `generate` draws from.
pub fn value_range(n: usize, width: u32, duplicates: Duplicates) -> u64 {
    let full = if width >= 64 { u64::MAX } else { 1u64 << width };
    let squeezed = match duplicates {
        Duplicates::None => return full,
        Duplicates::Some => (n / 2).max(2),
        Duplicates::Heavy => (n / 8).max(2),
    };
    (squeezed as u64).min(full)
}

pub fn generate(n: usize, width: u32, seed: u64, duplicates: Duplicates) -> Result<Vec<u64>, SimError> {
    if n == 0 {
        return Err(SimError::InvalidConfig("cannot generate an empty array".into()));
    }
    if width == 0 || width > 64 {
        return Err(SimError::InvalidConfig(format!("width {width} outside 1..=64")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let range = value_range(n, width, duplicates);
    if duplicates == Duplicates::None && range >= n as u64 && range <= usize::MAX as u64 {
        return Ok(sample(&mut rng, range as usize, n)
            .into_iter()
            .map(|v| v as u64)
            .collect());
    }
    Ok((0..n)
        .map(|_| {
            if range == u64::MAX {
                rng.gen()
            } else {
                rng.gen_range(0..range)
            }
        })
        .collect())
}
