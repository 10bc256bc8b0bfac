//! Packed direction bitmaps: one bit per tracked PHT entry, holding the
//! MSB (predicted direction) of that entry's counter.

use crate::error::{Error, Result};

const BLOCK_BITS: usize = 64;

/// Fixed-length bitmap of predictor direction bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionMap {
    len: usize,
    blocks: Vec<u64>,
}

impl DirectionMap {
    /// All-zero map of the given length.
    pub fn new(len: usize) -> Self {
        DirectionMap {
            len,
            blocks: vec![0; len.div_ceil(BLOCK_BITS)],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        assert!(idx < self.len, "bit {idx} out of range {}", self.len);
        self.blocks[idx / BLOCK_BITS] >> (idx % BLOCK_BITS) & 1 != 0
    }

    #[inline]
    pub fn set(&mut self, idx: usize, bit: bool) {
        assert!(idx < self.len, "bit {idx} out of range {}", self.len);
        let mask = 1u64 << (idx % BLOCK_BITS);
        if bit {
            self.blocks[idx / BLOCK_BITS] |= mask;
        } else {
            self.blocks[idx / BLOCK_BITS] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    fn check_len(&self, other: &DirectionMap) -> Result<()> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(())
    }

    /// Number of positions where the two maps differ.
    pub fn xor_count(&self, other: &DirectionMap) -> Result<usize> {
        self.check_len(other)?;
        Ok(self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Sorted indices of positions where the two maps differ.
    pub fn diff_indices(&self, other: &DirectionMap) -> Result<Vec<usize>> {
        self.check_len(other)?;
        let mut out = Vec::new();
        for (block_idx, (a, b)) in self.blocks.iter().zip(&other.blocks).enumerate() {
            let mut diff = a ^ b;
            while diff != 0 {
                let bit = diff.trailing_zeros() as usize;
                out.push(block_idx * BLOCK_BITS + bit);
                diff &= diff - 1;
            }
        }
        Ok(out)
    }

    /// Complement of the map (used to check inversion postconditions).
    pub fn complement(&self) -> DirectionMap {
        let mut out = DirectionMap::new(self.len);
        for (i, block) in self.blocks.iter().enumerate() {
            out.blocks[i] = !block;
        }
        // keep unused tail bits zero so equality stays well-defined
        let tail = self.len % BLOCK_BITS;
        if tail != 0 {
            if let Some(last) = out.blocks.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_count_of_identical_maps_is_zero() {
        let a = DirectionMap::new(128);
        let b = DirectionMap::new(128);
        assert_eq!(a.xor_count(&b).unwrap(), 0);
    }

    #[test]
    fn xor_count_counts_differing_bits() {
        let mut a = DirectionMap::new(128);
        let b = DirectionMap::new(128);
        for i in [2, 5, 7] {
            a.set(i, true);
        }
        assert_eq!(a.xor_count(&b).unwrap(), 3);
        assert_eq!(a.diff_indices(&b).unwrap(), vec![2, 5, 7]);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let a = DirectionMap::new(8);
        let b = DirectionMap::new(16);
        assert!(matches!(
            a.xor_count(&b),
            Err(Error::LengthMismatch { left: 8, right: 16 })
        ));
    }

    #[test]
    fn diff_indices_spans_block_boundaries() {
        let mut a = DirectionMap::new(128);
        let b = DirectionMap::new(128);
        a.set(0, true);
        a.set(127, true);
        assert_eq!(a.diff_indices(&b).unwrap(), vec![0, 127]);
    }

    #[test]
    fn complement_flips_every_bit() {
        let mut a = DirectionMap::new(70);
        a.set(3, true);
        a.set(69, true);
        let c = a.complement();
        for i in 0..70 {
            assert_eq!(c.get(i), !a.get(i));
        }
        assert_eq!(c.complement(), a);
    }
}
