//! Structured mesh geometry and the flat value storage indexed by it.
//!
//! Values are stored row-major with `m` (the streaming dimension) varying
//! fastest, and the components of a vector element interleaved per point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default scalar component size: single-precision floating point.
pub const F32_BYTES: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeshGeometry {
    ndim: usize,
    extent: [usize; 3],
    element_bytes: u32,
    arity: usize,
}

impl MeshGeometry {
    pub fn new_2d(m: usize, n: usize) -> Result<Self> {
        Self::from_dims(&[m, n])
    }

    pub fn new_3d(m: usize, n: usize, l: usize) -> Result<Self> {
        Self::from_dims(&[m, n, l])
    }

    /// Builds a geometry from 2 or 3 extents, streaming dimension first.
    pub fn from_dims(dims: &[usize]) -> Result<Self> {
        if dims.len() != 2 && dims.len() != 3 {
            return Err(Error::Geometry(format!(
                "expected 2 or 3 dimensions, got {}",
                dims.len()
            )));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::Geometry(format!("dimension {pos} has zero extent")));
        }
        let mut extent = [1; 3];
        extent[..dims.len()].copy_from_slice(dims);
        Ok(Self {
            ndim: dims.len(),
            extent,
            element_bytes: F32_BYTES,
            arity: 1,
        })
    }

    pub fn with_arity(mut self, arity: usize) -> Result<Self> {
        if arity == 0 {
            return Err(Error::Geometry("arity must be at least 1".into()));
        }
        self.arity = arity;
        Ok(self)
    }

    pub fn with_element_bytes(mut self, bytes: u32) -> Result<Self> {
        if bytes == 0 {
            return Err(Error::Geometry("element size must be positive".into()));
        }
        self.element_bytes = bytes;
        Ok(self)
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn dims(&self) -> &[usize] {
        &self.extent[..self.ndim]
    }

    /// Extents padded to three dimensions (`l == 1` for 2D meshes).
    pub fn extent3(&self) -> [usize; 3] {
        self.extent
    }

    pub fn m(&self) -> usize {
        self.extent[0]
    }

    pub fn n(&self) -> usize {
        self.extent[1]
    }

    pub fn l(&self) -> usize {
        self.extent[2]
    }

    pub fn element_bytes(&self) -> u32 {
        self.element_bytes
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Bytes of one mesh point: `arity * element_bytes`.
    pub fn point_bytes(&self) -> u64 {
        self.arity as u64 * self.element_bytes as u64
    }

    pub fn points(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn len(&self) -> usize {
        self.points() * self.arity
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cells in one streamed row (2D) or plane (3D): the unit the window
    /// buffer holds `D` of.
    pub fn buffered_extent(&self) -> usize {
        if self.ndim == 2 {
            self.m()
        } else {
            self.m() * self.n()
        }
    }

    pub fn point_index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.extent[0] * (y + self.extent[1] * z)
    }

    /// Same shape, scalar components: the geometry of a pointwise field.
    pub fn scalar(&self) -> Self {
        Self { arity: 1, ..*self }
    }

    /// Same shape and component size, compared with [`MeshGeometry::arity`] ignored.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.ndim == other.ndim && self.extent == other.extent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldData {
    geometry: MeshGeometry,
    values: Vec<f32>,
}

impl FieldData {
    pub fn new(geometry: MeshGeometry, values: Vec<f32>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::FieldLength {
                expected: geometry.len(),
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { geometry, values })
    }

    /// Wraps executor output without the finiteness check applied to inputs.
    pub(crate) fn from_output(geometry: MeshGeometry, values: Vec<f32>) -> Self {
        debug_assert_eq!(values.len(), geometry.len());
        Self { geometry, values }
    }

    pub fn filled(geometry: MeshGeometry, value: f32) -> Self {
        Self {
            geometry,
            values: vec![value; geometry.len()],
        }
    }

    /// Uniform values in `[-1, 1)` from a seeded generator.
    pub fn random(geometry: MeshGeometry, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..geometry.len()).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        Self { geometry, values }
    }

    pub fn geometry(&self) -> &MeshGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn get(&self, point: usize, component: usize) -> f32 {
        self.values[point * self.geometry.arity() + component]
    }

    /// Bitwise comparison; `-0.0 != 0.0` and NaN payloads matter.
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        self.geometry == other.geometry
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Index of the first value whose bit pattern differs, if any.
    pub fn first_mismatch(&self, other: &Self) -> Option<usize> {
        if self.values.len() != other.values.len() {
            return Some(0);
        }
        self.values
            .iter()
            .zip(&other.values)
            .position(|(a, b)| a.to_bits() != b.to_bits())
    }
}

/// The external inputs of a pipeline: the streamed primary field plus the
/// scalar pointwise coefficient fields, in the pipeline's declared order.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    pub primary: FieldData,
    pub pointwise: Vec<FieldData>,
}

impl FieldSet {
    pub fn new(primary: FieldData, pointwise: Vec<FieldData>) -> Result<Self> {
        let g = primary.geometry();
        for (i, f) in pointwise.iter().enumerate() {
            if !f.geometry().same_shape(g) {
                return Err(Error::GeometryMismatch(format!(
                    "pointwise field {i} has dims {:?}, primary has {:?}",
                    f.geometry().dims(),
                    g.dims()
                )));
            }
            if f.geometry().arity() != 1 {
                return Err(Error::GeometryMismatch(format!(
                    "pointwise field {i} must be scalar, has arity {}",
                    f.geometry().arity()
                )));
            }
        }
        Ok(Self { primary, pointwise })
    }

    pub fn single(primary: FieldData) -> Self {
        Self {
            primary,
            pointwise: Vec::new(),
        }
    }

    /// Random primary and pointwise fields. Pointwise values are drawn from
    /// `[0.5, 1.5)` so they behave like positive material coefficients.
    pub fn random(geometry: MeshGeometry, pointwise: usize, seed: u64) -> Self {
        let primary = FieldData::random(geometry, seed);
        let scalar = geometry.scalar();
        let pointwise = (0..pointwise)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1));
                let values = (0..scalar.len()).map(|_| rng.gen_range(0.5f32..1.5)).collect();
                FieldData {
                    geometry: scalar,
                    values,
                }
            })
            .collect();
        Self { primary, pointwise }
    }

    pub fn geometry(&self) -> &MeshGeometry {
        self.primary.geometry()
    }

    pub fn bitwise_eq(&self, other: &Self) -> bool {
        self.primary.bitwise_eq(&other.primary)
            && self.pointwise.len() == other.pointwise.len()
            && self
                .pointwise
                .iter()
                .zip(&other.pointwise)
                .all(|(a, b)| a.bitwise_eq(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_rejects_bad_dims() {
        assert!(MeshGeometry::from_dims(&[4]).is_err());
        assert!(MeshGeometry::from_dims(&[4, 4, 4, 4]).is_err());
        assert!(MeshGeometry::new_2d(0, 3).is_err());
        assert!(MeshGeometry::new_3d(3, 3, 0).is_err());
    }

    #[test]
    fn geometry_sizes() {
        let g = MeshGeometry::new_3d(4, 5, 6).unwrap().with_arity(6).unwrap();
        assert_eq!(g.points(), 120);
        assert_eq!(g.len(), 720);
        assert_eq!(g.point_bytes(), 24);
        assert_eq!(g.buffered_extent(), 20);
        assert_eq!(g.point_index(1, 2, 3), 1 + 4 * (2 + 5 * 3));
        let g2 = MeshGeometry::new_2d(7, 3).unwrap();
        assert_eq!(g2.l(), 1);
        assert_eq!(g2.buffered_extent(), 7);
    }

    #[test]
    fn field_validation() {
        let g = MeshGeometry::new_2d(2, 2).unwrap();
        assert_eq!(
            FieldData::new(g, vec![0.0; 3]),
            Err(Error::FieldLength { expected: 4, actual: 3 })
        );
        assert_eq!(
            FieldData::new(g, vec![0.0, f32::NAN, 0.0, 0.0]),
            Err(Error::NonFinite { index: 1 })
        );
        assert!(FieldData::new(g, vec![1.0; 4]).is_ok());
    }

    #[test]
    fn random_is_seeded() {
        let g = MeshGeometry::new_2d(8, 8).unwrap();
        assert!(FieldData::random(g, 3).bitwise_eq(&FieldData::random(g, 3)));
        assert!(!FieldData::random(g, 3).bitwise_eq(&FieldData::random(g, 4)));
    }

    #[test]
    fn field_set_rejects_mismatched_pointwise() {
        let g = MeshGeometry::new_2d(4, 4).unwrap();
        let other = MeshGeometry::new_2d(4, 5).unwrap();
        let err = FieldSet::new(FieldData::filled(g, 0.0), vec![FieldData::filled(other, 1.0)]);
        assert!(matches!(err, Err(Error::GeometryMismatch(_))));
    }
}
