//! Earliest headway-feasible entry time.
//!
//! For one free job against fixed jobs on a resource, each disjunction
//! `T ≤ T_j − h ∨ T ≥ T_j + h` removes the open interval `(T_j − h, T_j + h)`
//! from the feasible line. The earliest feasible `T ≥ R` is therefore `R`
//! or the right end `T_j + h` of some blocked interval, and a left-to-right
//! scan over the blocked intervals finds it.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("earliest feasible entry {earliest} exceeds deadline {deadline}")]
pub struct DeadlineMissed {
    pub earliest: f64,
    pub deadline: f64,
}

/// An open interval `(center − half_width, center + half_width)` that the
/// entry time may not fall in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Block {
    pub center: f64,
    pub half_width: f64,
}

impl Block {
    fn blocks(&self, t: f64) -> bool {
        within_headway(t, self.center, self.half_width)
    }
}

/// Whether `t` lies strictly inside `(other − h, other + h)`.
///
/// The test is made against the interval ends as computed, so an entry placed
/// at `other + h` is never itself reported as a conflict.
pub fn within_headway(t: f64, other: f64, h: f64) -> bool {
    t > other - h && t < other + h
}

/// Smallest `t ≥ start` outside every block. Blocks may overlap and have
/// different widths, so the scan repeats until nothing moves `t`. Each block
/// moves `t` at most once, past its right end.
pub(crate) fn first_free(start: f64, blocks: &mut [Block]) -> f64 {
    blocks.sort_by(|a, b| a.center.total_cmp(&b.center));
    let mut t = start;
    loop {
        let mut moved = false;
        for b in blocks.iter() {
            if b.blocks(t) {
                t = b.center + b.half_width;
                moved = true;
            }
        }
        if !moved {
            return t;
        }
    }
}

/// Earliest entry time `T ≥ release` with `|T − T_j| ≥ h` for every
/// committed `T_j` in `occupied`, and `T ≤ deadline` when one is given.
pub fn earliest_feasible_entry(
    release: f64,
    deadline: Option<f64>,
    occupied: &[f64],
    h: f64,
) -> Result<f64, DeadlineMissed> {
    let mut blocks: Vec<Block> = occupied
        .iter()
        .map(|&c| Block {
            center: c,
            half_width: h,
        })
        .collect();
    let t = first_free(release, &mut blocks);
    match deadline {
        Some(d) if t > d => Err(DeadlineMissed {
            earliest: t,
            deadline: d,
        }),
        _ => Ok(t),
    }
}
