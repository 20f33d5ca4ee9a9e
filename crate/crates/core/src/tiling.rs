//! Placement of overlapping spatial blocks along one mesh axis.
//!
//! A tiled axis of extent `e` with block width `w` and overlap `o = p*D`
//! places blocks at origins `t*(w - o) - o/2`, so each block's central
//! `w - o` cells are valid and the valid regions partition the axis. A block
//! width that already covers the axis leaves it untiled: one block of the
//! full extent with no halo.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisPlan {
    pub extent: usize,
    /// Cells streamed per block along this axis.
    pub width: usize,
    /// Cells trimmed from each side of a block before write-back.
    pub halo: usize,
    /// Block origins in mesh coordinates; may be negative at the low edge.
    pub origins: Vec<isize>,
}

impl AxisPlan {
    pub fn untiled(extent: usize) -> Self {
        Self {
            extent,
            width: extent,
            halo: 0,
            origins: vec![0],
        }
    }

    /// `overlap` must be even and smaller than `tile`.
    pub fn new(extent: usize, tile: Option<usize>, overlap: usize) -> Self {
        match tile {
            Some(w) if w < extent => {
                debug_assert!(w > overlap && overlap.is_multiple_of(2));
                let step = w - overlap;
                let halo = overlap / 2;
                let count = extent.div_ceil(step);
                let origins = (0..count).map(|t| (t * step) as isize - halo as isize).collect();
                Self {
                    extent,
                    width: w,
                    halo,
                    origins,
                }
            }
            _ => Self::untiled(extent),
        }
    }

    pub fn is_tiled(&self) -> bool {
        self.origins.len() > 1 || self.width != self.extent
    }

    pub fn count(&self) -> usize {
        self.origins.len()
    }

    /// Mesh cells `[lo, hi)` written back by block `t`.
    pub fn valid_range(&self, t: usize) -> (usize, usize) {
        let o = self.origins[t];
        let lo = (o + self.halo as isize).max(0) as usize;
        let hi = ((o + (self.width - self.halo) as isize).max(0) as usize).min(self.extent);
        (lo, hi)
    }

    /// Cells of block `t` that lie inside the mesh.
    pub fn in_mesh(&self, t: usize) -> usize {
        let o = self.origins[t];
        let lo = o.max(0);
        let hi = (o + self.width as isize).min(self.extent as isize);
        (hi - lo).max(0) as usize
    }

    /// Valid cells per block as counted by the block-validity formula:
    /// `width - overlap` on a tiled axis, the full extent otherwise.
    pub fn nominal_valid(&self) -> usize {
        self.width - 2 * self.halo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untiled_when_tile_covers_axis() {
        let p = AxisPlan::new(96, Some(128), 6);
        assert!(!p.is_tiled());
        assert_eq!(p.valid_range(0), (0, 96));
        assert_eq!(p.nominal_valid(), 96);
    }

    #[test]
    fn valid_ranges_partition_axis() {
        for (extent, tile, overlap) in [(96, 32, 6), (100, 16, 4), (17, 9, 2), (64, 40, 32)] {
            let p = AxisPlan::new(extent, Some(tile), overlap);
            let mut next = 0;
            for t in 0..p.count() {
                let (lo, hi) = p.valid_range(t);
                assert_eq!(lo, next);
                assert!(hi > lo);
                next = hi;
            }
            assert_eq!(next, extent);
        }
    }

    #[test]
    fn block_count_for_32_wide_blocks() {
        let p = AxisPlan::new(96, Some(32), 6);
        assert_eq!(p.count(), 4);
        assert_eq!(p.origins, vec![-3, 23, 49, 75]);
        assert_eq!(p.in_mesh(0), 29);
        assert_eq!(p.in_mesh(3), 21);
    }
}
