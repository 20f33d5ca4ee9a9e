//! Golden executor: whole-mesh, stage-by-stage nested loops.
//!
//! Every stage is applied over the full mesh before the next one starts,
//! with explicit double buffering between iterations. Arithmetic follows
//! the kernel's declared evaluation order (see [`crate::kernel`]) so the
//! streaming simulator can be compared against it bit for bit.

use crate::error::{Error, Result};
use crate::kernel::Coefficient;
use crate::mesh::{FieldData, FieldSet, MeshGeometry};
use crate::pipeline::PipelineSpec;

fn check_inputs(pipe: &PipelineSpec, inputs: &FieldSet) -> Result<()> {
    pipe.check_geometry(inputs.geometry())?;
    if inputs.pointwise.len() != pipe.pointwise_fields().len() {
        return Err(Error::GeometryMismatch(format!(
            "{} expects {} pointwise fields, got {}",
            pipe.name(),
            pipe.pointwise_fields().len(),
            inputs.pointwise.len()
        )));
    }
    Ok(())
}

fn is_interior(g: &MeshGeometry, x: usize, y: usize, z: usize, r: usize) -> bool {
    let coords = [x, y, z];
    g.dims().iter().zip(coords).all(|(&e, c)| c >= r && c + r < e)
}

/// Runs `n_iter` iterations of `pipe` and returns the final primary field.
pub fn run_reference(pipe: &PipelineSpec, inputs: &FieldSet, n_iter: u64) -> Result<FieldData> {
    check_inputs(pipe, inputs)?;
    let g = *inputs.geometry();
    let arity = g.arity();
    let [m, n, l] = g.extent3();
    let pointwise: Vec<&[f32]> = inputs.pointwise.iter().map(|f| f.values()).collect();

    let mut current = inputs.primary.values().to_vec();
    for _ in 0..n_iter {
        let mut kernel_values: Vec<Vec<f32>> = Vec::with_capacity(pipe.stages().len());
        let mut stream = current.clone();
        for (s, stage) in pipe.stages().iter().enumerate() {
            let kernel = &stage.kernel;
            let r = kernel.radius();
            let mut out = vec![0.0f32; stream.len()];
            let mut kv = vec![0.0f32; stream.len()];
            for z in 0..l {
                for y in 0..n {
                    for x in 0..m {
                        let p = g.point_index(x, y, z);
                        if !is_interior(&g, x, y, z, r) {
                            for c in 0..arity {
                                out[p * arity + c] = stream[p * arity + c];
                            }
                            continue;
                        }
                        for c in 0..arity {
                            let mut acc: Option<f32> = None;
                            for tap in kernel.taps() {
                                let q = g.point_index(
                                    (x as i64 + tap.offset[0] as i64) as usize,
                                    (y as i64 + tap.offset[1] as i64) as usize,
                                    (z as i64 + tap.offset[2] as i64) as usize,
                                );
                                let coeff = match tap.coeff {
                                    Coefficient::Const(v) => v,
                                    Coefficient::Field { field, weight } => weight * pointwise[field][p],
                                };
                                let term = coeff * stream[q * arity + c];
                                acc = Some(acc.map_or(term, |a| a + term));
                            }
                            let mut value = acc.unwrap_or(0.0);
                            let mut modulation: Option<f32> = None;
                            for &(field, weight) in kernel.modulation() {
                                let term = weight * pointwise[field][p];
                                modulation = Some(modulation.map_or(term, |a| a + term));
                            }
                            if let Some(mv) = modulation {
                                value *= mv;
                            }
                            if let Some(scale) = kernel.scale() {
                                value *= scale;
                            }
                            kv[p * arity + c] = value;
                        }
                        for c in 0..arity {
                            let i = p * arity + c;
                            let mut acc: Option<f32> = stage.combine.base.then(|| current[i]);
                            for &(j, w) in &stage.combine.terms {
                                let k = if j == s { kv[i] } else { kernel_values[j][i] };
                                let term = w * k;
                                acc = Some(acc.map_or(term, |a| a + term));
                            }
                            out[i] = acc.unwrap_or(0.0);
                        }
                    }
                }
            }
            kernel_values.push(kv);
            stream = out;
        }
        current = stream;
    }
    Ok(FieldData::from_output(g, current))
}

/// Runs each input set independently; all sets must share one geometry.
pub fn run_reference_batch(pipe: &PipelineSpec, batch: &[FieldSet], n_iter: u64) -> Result<Vec<FieldData>> {
    if let Some(first) = batch.first() {
        if let Some((i, _)) = batch.iter().enumerate().find(|(_, f)| f.geometry() != first.geometry()) {
            return Err(Error::GeometryMismatch(format!(
                "batch member {i} has dims {:?}, member 0 has {:?}",
                batch[i].geometry().dims(),
                first.geometry().dims()
            )));
        }
    }
    batch.iter().map(|f| run_reference(pipe, f, n_iter)).collect()
}
