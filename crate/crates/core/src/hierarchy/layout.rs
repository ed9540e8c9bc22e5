use std::collections::HashMap;

use crate::error::{HeomError, Result};

/// Slot id used in the neighbor tables for "no such ADO".
const ABSENT: u32 = u32::MAX;

/// Default cap on the number of ADO slots.
pub const DEFAULT_MAX_SLOTS: usize = 4_000_000;

/// Dense indexing of all occupation vectors `n` with `sum n_k <= max_level`.
///
/// Slots are in graded lexicographic order: by level first, then by
/// descending lexicographic order of the occupation vector. Slot 0 is the
/// reduced density matrix.
#[derive(Debug, Clone)]
pub struct HierarchyLayout {
    n_cor: usize,
    max_level: usize,
    occupations: Vec<u16>,
    levels: Vec<u16>,
    level_starts: Vec<usize>,
    up: Vec<u32>,
    down: Vec<u32>,
}

/// Exact binomial coefficient, `None` on overflow.
pub fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Number of slots for `n_cor` modes truncated at `max_level`.
pub fn slot_count(n_cor: usize, max_level: usize) -> Option<u128> {
    binomial((n_cor + max_level) as u128, max_level as u128)
}

fn compositions(level: usize, parts: usize, prefix: &mut Vec<u16>, out: &mut Vec<u16>) {
    if parts == 1 {
        prefix.push(level as u16);
        out.extend_from_slice(prefix);
        prefix.pop();
        return;
    }
    for first in (0..=level).rev() {
        prefix.push(first as u16);
        compositions(level - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

impl HierarchyLayout {
    pub fn new(n_cor: usize, max_level: usize, max_slots: usize) -> Result<Self> {
        if n_cor == 0 {
            // Closed system: the reduced density matrix alone.
            return Ok(Self {
                n_cor: 0,
                max_level: 0,
                occupations: Vec::new(),
                levels: vec![0],
                level_starts: vec![0, 1],
                up: Vec::new(),
                down: Vec::new(),
            });
        }
        if max_level > u16::MAX as usize {
            return Err(HeomError::InvalidInput(format!("hierarchy level {max_level} is too large")));
        }
        let count = slot_count(n_cor, max_level).unwrap_or(u128::MAX);
        if count > max_slots as u128 {
            return Err(HeomError::Capacity { requested: count, cap: max_slots });
        }
        let count = count as usize;

        let mut occupations = Vec::with_capacity(count * n_cor);
        let mut levels = Vec::with_capacity(count);
        let mut level_starts = Vec::with_capacity(max_level + 2);
        let mut prefix = Vec::with_capacity(n_cor);
        for level in 0..=max_level {
            level_starts.push(occupations.len() / n_cor);
            compositions(level, n_cor, &mut prefix, &mut occupations);
            levels.resize(occupations.len() / n_cor, level as u16);
        }
        level_starts.push(count);
        debug_assert_eq!(levels.len(), count);

        let index: HashMap<&[u16], u32> = occupations
            .chunks_exact(n_cor)
            .enumerate()
            .map(|(slot, occ)| (occ, slot as u32))
            .collect();

        let mut up = vec![ABSENT; count * n_cor];
        let mut down = vec![ABSENT; count * n_cor];
        let mut probe = vec![0u16; n_cor];
        for slot in 0..count {
            let occ = &occupations[slot * n_cor..(slot + 1) * n_cor];
            if (levels[slot] as usize) < max_level {
                for k in 0..n_cor {
                    probe.copy_from_slice(occ);
                    probe[k] += 1;
                    let target = index[probe.as_slice()];
                    up[slot * n_cor + k] = target;
                    down[target as usize * n_cor + k] = slot as u32;
                }
            }
        }

        Ok(Self { n_cor, max_level, occupations, levels, level_starts, up, down })
    }

    pub fn n_cor(&self) -> usize {
        self.n_cor
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn occupation(&self, slot: usize) -> &[u16] {
        &self.occupations[slot * self.n_cor..(slot + 1) * self.n_cor]
    }

    pub fn level(&self, slot: usize) -> usize {
        self.levels[slot] as usize
    }

    /// Slots of the given level, as a contiguous range.
    pub fn level_range(&self, level: usize) -> std::ops::Range<usize> {
        if level > self.max_level {
            return self.len()..self.len();
        }
        self.level_starts[level]..self.level_starts[level + 1]
    }

    /// Slot of `n + e_k`, if it lies inside the truncated hierarchy.
    pub fn up(&self, slot: usize, k: usize) -> Option<usize> {
        let s = self.up[slot * self.n_cor + k];
        (s != ABSENT).then_some(s as usize)
    }

    /// Slot of `n - e_k`, if `n_k > 0`.
    pub fn down(&self, slot: usize, k: usize) -> Option<usize> {
        let s = self.down[slot * self.n_cor + k];
        (s != ABSENT).then_some(s as usize)
    }

    /// Slot of an occupation vector (linear scan within its level).
    pub fn find(&self, occupation: &[u16]) -> Option<usize> {
        if occupation.len() != self.n_cor {
            return None;
        }
        let level: usize = occupation.iter().map(|&n| n as usize).sum();
        self.level_range(level).find(|&slot| self.occupation(slot) == occupation)
    }
}
