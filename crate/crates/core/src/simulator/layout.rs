//! Mapping between stream positions and mesh cells.
//!
//! A stream is a box of cells visited with the first axis fastest. The
//! first axis is padded to a whole number of `V`-wide chunks. A stream
//! either covers whole meshes stacked along their last axis (plain and
//! batched runs) or one spatial block of a single mesh.

use crate::mesh::MeshGeometry;
use crate::tiling::AxisPlan;

pub(crate) const OUTSIDE: usize = usize::MAX;

#[derive(Debug)]
pub(crate) struct StreamLayout {
    pub dims: [usize; 3],
    pub vector: usize,
    /// Destination of each stream cell as `mesh * points + point`, or
    /// [`OUTSIDE`] for padding and cells beyond the mesh edge.
    pub cell: Vec<usize>,
    /// Largest stencil radius that may be evaluated at each cell: the
    /// distance to the nearest mesh, per-mesh or block edge; -1 outside.
    pub depth: Vec<i32>,
    pub writeback: Vec<bool>,
}

/// One axis of a stream: which mesh cells it visits.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AxisSpan {
    /// Mesh coordinate of stream position 0 (negative in a low-edge block).
    pub origin: isize,
    pub width: usize,
    /// Cells trimmed from both ends before write-back; `None` when the axis
    /// is not blocked and the stream edge coincides with the mesh edge.
    pub halo: Option<usize>,
}

impl AxisSpan {
    pub fn whole(extent: usize) -> Self {
        Self {
            origin: 0,
            width: extent,
            halo: None,
        }
    }

    pub fn block(plan: &AxisPlan, t: usize) -> Self {
        if plan.is_tiled() {
            Self {
                origin: plan.origins[t],
                width: plan.width,
                halo: Some(plan.halo),
            }
        } else {
            Self::whole(plan.extent)
        }
    }
}

impl StreamLayout {
    pub fn cells(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn chunks(&self) -> usize {
        self.cells() / self.vector
    }

    /// Linear stream offset of a cell offset.
    pub fn linear_offset(&self, off: [i32; 3]) -> isize {
        off[0] as isize + self.dims[0] as isize * (off[1] as isize + self.dims[1] as isize * off[2] as isize)
    }

    /// Whole meshes stacked `batch` deep along their last axis.
    pub fn stacked(g: &MeshGeometry, batch: usize, vector: usize) -> Self {
        let [m, n, l] = g.extent3();
        let x = AxisSpan::whole(m);
        if g.ndim() == 2 {
            Self::build(g, vector, x, AxisSpan::whole(n * batch), 1)
        } else {
            Self::build(g, vector, x, AxisSpan::whole(n), l * batch)
        }
    }

    /// One spatial block of a single mesh.
    pub fn block(g: &MeshGeometry, vector: usize, x: AxisSpan, y: AxisSpan) -> Self {
        Self::build(g, vector, x, y, g.l())
    }

    /// `y` spans `n * batch` rows for a stacked 2D stream; for 3D streams the
    /// third axis spans `z_len = l * batch` planes.
    fn build(g: &MeshGeometry, vector: usize, x: AxisSpan, y: AxisSpan, z_len: usize) -> Self {
        let [m, n, l] = g.extent3();
        let points = g.points();
        let padded = x.width.div_ceil(vector) * vector;
        let dims = [padded, y.width, z_len];
        let total = dims.iter().product();
        let mut cell = vec![OUTSIDE; total];
        let mut depth = vec![-1; total];
        let mut writeback = vec![false; total];

        let axis_depth = |s: usize, span: &AxisSpan, gc: isize, extent: usize| -> Option<(i32, bool)> {
            if s >= span.width || gc < 0 || gc >= extent as isize {
                return None;
            }
            let gc = gc as usize;
            let mut d = gc.min(extent - 1 - gc);
            let mut keep = true;
            if let Some(h) = span.halo {
                d = d.min(s).min(span.width - 1 - s);
                keep = s >= h && s < span.width - h;
            }
            Some((d.min(i32::MAX as usize) as i32, keep))
        };

        let mut i = 0;
        for sz in 0..dims[2] {
            for sy in 0..dims[1] {
                for sx in 0..dims[0] {
                    let here = i;
                    i += 1;
                    let Some((dx, kx)) = axis_depth(sx, &x, x.origin + sx as isize, m) else {
                        continue;
                    };
                    let (mesh, gy, gz, dy, dz, ky) = if g.ndim() == 2 {
                        // y stacks whole meshes
                        let (b, gy) = (sy / n, sy % n);
                        let dy = gy.min(n - 1 - gy) as i32;
                        (b, gy, 0, dy, i32::MAX, true)
                    } else {
                        let Some((dy, ky)) = axis_depth(sy, &y, y.origin + sy as isize, n) else {
                            continue;
                        };
                        let gy = (y.origin + sy as isize) as usize;
                        let (b, gz) = (sz / l, sz % l);
                        let dz = gz.min(l - 1 - gz) as i32;
                        (b, gy, gz, dy, dz, ky)
                    };
                    let gx = (x.origin + sx as isize) as usize;
                    cell[here] = mesh * points + g.point_index(gx, gy, gz);
                    depth[here] = dx.min(dy).min(dz);
                    writeback[here] = kx && ky;
                }
            }
        }
        Self {
            dims,
            vector,
            cell,
            depth,
            writeback,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stacked_2d_depth_is_per_mesh() {
        let g = MeshGeometry::new_2d(5, 4).unwrap();
        let s = StreamLayout::stacked(&g, 2, 4);
        assert_eq!(s.dims, [8, 8, 1]);
        // column 2 of row 4 is row 0 of the second mesh: a boundary cell
        let at = |x: usize, y: usize| x + 8 * y;
        assert_eq!(s.depth[at(2, 4)], 0);
        assert_eq!(s.depth[at(2, 5)], 1);
        assert_eq!(s.cell[at(2, 5)], 20 + 2 + 5);
        assert_eq!(s.cell[at(6, 5)], OUTSIDE);
        assert!(s.writeback[at(0, 0)]);
    }

    #[test]
    fn block_halo_limits_depth_and_writeback() {
        let g = MeshGeometry::new_3d(96, 96, 3).unwrap();
        let plan = AxisPlan::new(96, Some(32), 6);
        let s = StreamLayout::block(&g, 8, AxisSpan::block(&plan, 1), AxisSpan::block(&plan, 0));
        assert_eq!(s.dims, [32, 32, 3]);
        let at = |x: usize, y: usize, z: usize| x + 32 * (y + 32 * z);
        // block 0 along y starts 3 cells before the mesh
        assert_eq!(s.cell[at(5, 2, 1)], OUTSIDE);
        assert_eq!(s.depth[at(5, 3, 1)], 0);
        assert!(!s.writeback[at(2, 10, 1)]);
        assert!(s.writeback[at(3, 10, 1)]);
        assert!(!s.writeback[at(29, 10, 1)]);
        assert_eq!(s.depth[at(10, 10, 1)], 1);
    }
}
