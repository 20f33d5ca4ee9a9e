//! Cyclic on-chip buffer over a stream of mesh-point records.

/// Holds the most recent cells of a stream, indexed by their linear stream
/// position modulo the slot count.
///
/// `capacity` is the cell distance between the stencil's two extreme taps
/// (`D` rows or planes for a star); the remaining slots model the lane
/// registers that hold the chunk currently being shifted in.
#[derive(Debug, Clone)]
pub struct WindowBuffer {
    width: usize,
    slots: usize,
    capacity: usize,
    data: Vec<f32>,
    /// Number of cells written so far.
    filled: usize,
}

impl WindowBuffer {
    pub(crate) fn new(record_width: usize, capacity: usize, slots: usize) -> Self {
        debug_assert!(slots >= capacity);
        Self {
            width: record_width,
            slots,
            capacity,
            data: vec![0.0; slots * record_width],
            filled: 0,
        }
    }

    /// Cells between the extreme taps, i.e. the buffered rows or planes.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Cells held outside the row buffer, one per lane plus read-ahead.
    pub fn shift_register_cells(&self) -> usize {
        self.slots - self.capacity
    }

    pub fn record_width(&self) -> usize {
        self.width
    }

    /// Appends the records of cells `filled..filled + chunk.len() / width`.
    pub(crate) fn push(&mut self, chunk: &[f32]) {
        for rec in chunk.chunks_exact(self.width) {
            let slot = self.filled % self.slots;
            self.data[slot * self.width..(slot + 1) * self.width].copy_from_slice(rec);
            self.filled += 1;
        }
    }

    #[inline]
    pub(crate) fn record(&self, cell: usize) -> &[f32] {
        debug_assert!(cell < self.filled, "cell {cell} read before arrival ({})", self.filled);
        debug_assert!(cell + self.slots >= self.filled, "cell {cell} already evicted");
        let slot = cell % self.slots;
        &self.data[slot * self.width..(slot + 1) * self.width]
    }

    #[inline]
    pub(crate) fn value(&self, cell: usize, offset: usize) -> f32 {
        debug_assert!(cell < self.filled && cell + self.slots >= self.filled);
        self.data[(cell % self.slots) * self.width + offset]
    }
}
