// SPDX-License-Identifier: Apache-2.0

//! Magic constants standing in for bound variables.
//!
//! Each constant starts with a recognizable 8-digit hex prefix (a doubled
//! digit followed by ascending digits) and continues with irregular digits
//! derived from the seed. Entry 0 is `0x1123456789abcdef` followed by three
//! copies of `0123456789abcdef` for every seed.

use ethnum::U256;
use sha2::{Digest, Sha256};

use super::SmtError;

pub const POOL_SIZE: usize = 16;
pub const DEFAULT_SEED: u64 = 0;

const FIRST: &str = "1123456789abcdef0123456789abcdef0123456789abcdef0123456789abcdef";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MagicPool {
    pub seed: u64,
    pool: Vec<U256>,
}

fn prefix(k: usize) -> String {
    let d = |i: usize| char::from_digit(((k + 1 + i) % 16) as u32, 16).unwrap();
    let mut s = String::new();
    s.push(d(0));
    for i in 0..7 {
        s.push(d(i));
    }
    s
}

impl MagicPool {
    pub fn new(seed: u64) -> Self {
        let mut pool = vec![U256::from_str_radix(FIRST, 16).unwrap()];
        for k in 1..POOL_SIZE {
            let mut h = Sha256::new();
            h.update(seed.to_le_bytes());
            h.update((k as u64).to_le_bytes());
            let tail: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
            let hex = format!("{}{}", prefix(k), &tail[..56]);
            pool.push(U256::from_str_radix(&hex, 16).unwrap());
        }
        MagicPool { seed, pool }
    }

    pub fn len(&self) -> usize {
        self.pool.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pool.is_empty()
    }

    pub fn constants(&self) -> &[U256] {
        &self.pool
    }

    /// The constant at `index`, narrowed to its top `width` bits.
    pub fn get(&self, index: usize, width: u32) -> Result<U256, SmtError> {
        let v = self.pool.get(index).ok_or(SmtError::IndexOutOfRange {
            index,
            size: self.pool.len(),
        })?;
        Ok(if width >= 256 { *v } else { *v >> (256 - width) })
    }

    /// Fails if any pool constant appears among `constants`.
    pub fn check_disjoint(&self, constants: impl IntoIterator<Item = U256>) -> Result<(), SmtError> {
        for c in constants {
            if self.pool.contains(&c) {
                return Err(SmtError::MagicCollision(crate::expr::const_name(c)));
            }
        }
        Ok(())
    }
}

impl Default for MagicPool {
    fn default() -> Self {
        MagicPool::new(DEFAULT_SEED)
    }
}

/// The constant at `index` of `pool` at full width.
pub fn magic_constant(index: usize, pool: &MagicPool) -> Result<U256, SmtError> {
    pool.get(index, 256)
}
