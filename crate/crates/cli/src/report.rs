//! Report documents written by the commands, and their text rendering.

use std::fmt::Write as _;
use std::io::Write;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use stencilflow::explore::RankedDesign;
use stencilflow::{DesignPoint, ModelReport, ResourceProfile, SimResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub pipeline: String,
    pub dims: Vec<usize>,
    pub arity: usize,
    pub design: DesignPoint,
    pub device: ResourceProfile,
    pub model: ModelReport,
    pub warnings: Vec<String>,
}

/// Simulator counters without the output fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCounters {
    pub cycles: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub redundant_cells: u64,
    pub effective_iterations: u64,
    pub passes: u64,
    pub tiles: u64,
    pub pipeline_latency_estimate: u64,
}

impl From<&SimResult> for SimCounters {
    fn from(r: &SimResult) -> Self {
        Self {
            cycles: r.cycles,
            bytes_read: r.bytes_read,
            bytes_written: r.bytes_written,
            redundant_cells: r.redundant_cells,
            effective_iterations: r.effective_iterations,
            passes: r.passes,
            tiles: r.tiles,
            pipeline_latency_estimate: r.pipeline_latency_estimate,
        }
    }
}

/// Simulated minus predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delta {
    pub cycles: i64,
    pub bytes_read: i64,
    pub bytes_written: i64,
}

impl Delta {
    pub fn between(sim: &SimCounters, model: &ModelReport) -> Self {
        let d = |a: u64, b: u64| a as i64 - b as i64;
        Self {
            cycles: d(sim.cycles, model.cycles),
            bytes_read: d(sim.bytes_read, model.bytes_read),
            bytes_written: d(sim.bytes_written, model.bytes_written),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateDoc {
    pub pipeline: String,
    pub dims: Vec<usize>,
    pub design: DesignPoint,
    pub meshes: usize,
    pub simulator: SimCounters,
    pub model: ModelReport,
    pub delta: Delta,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyDoc {
    pub pipeline: String,
    pub design: DesignPoint,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// A real with 9 significant digits.
pub fn real(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.8e}")
    }
}

pub fn model_text(doc: &ModelDoc) -> String {
    let m = &doc.model;
    let d = &doc.design;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "pipeline      {} on {:?} (arity {})",
        doc.pipeline, doc.dims, doc.arity
    );
    let _ = writeln!(s, "design        {}", design_text(d));
    let _ = writeln!(s, "feasible      {}", if m.feasible { "yes" } else { "no" });
    for v in &m.violations {
        let _ = writeln!(s, "  violation   {v}");
    }
    let l = &m.limits;
    let _ = writeln!(
        s,
        "limits        V_max={} p_dsp={} p_mem={} p_max={}{}",
        l.v_max,
        l.p_dsp,
        l.p_mem,
        l.p_max,
        l.m_opt.map_or(String::new(), |m| format!(" M_opt={m}"))
    );
    let _ = writeln!(
        s,
        "iterations    {} requested, {} executed in {} passes",
        m.iterations, m.effective_iterations, m.passes
    );
    let _ = writeln!(s, "cycles        {}", m.cycles);
    let _ = writeln!(s, "runtime       {} s", real(m.runtime_s));
    let _ = writeln!(s, "throughput    {} cells/cycle", real(m.throughput_cells_per_cycle));
    let _ = writeln!(
        s,
        "traffic       {} B read, {} B written",
        m.bytes_read, m.bytes_written
    );
    let _ = writeln!(s, "bandwidth     {} B/s", real(m.bandwidth_bytes_per_s));
    if d.tile.is_some() {
        let _ = writeln!(
            s,
            "tiling        {} blocks, valid ratio {}, {} redundant cells",
            m.tiles,
            real(m.valid_ratio),
            m.redundant_cells
        );
    }
    for w in &doc.warnings {
        let _ = writeln!(s, "warning       {w}");
    }
    s
}

pub fn design_text(d: &DesignPoint) -> String {
    let mut s = format!("V={} p={} f={} MHz", d.vector, d.unroll, real(d.freq_hz / 1e6));
    if let Some(t) = d.tile {
        match t.n {
            Some(n) => s += &format!(" tile={}x{}", t.m, n),
            None => s += &format!(" tile={}", t.m),
        }
    }
    if d.batch > 1 {
        s += &format!(" B={}", d.batch);
    }
    s
}

pub fn simulate_text(doc: &SimulateDoc) -> String {
    let s_ = &doc.simulator;
    let mut s = String::new();
    let _ = writeln!(s, "pipeline      {} on {:?} x{}", doc.pipeline, doc.dims, doc.meshes);
    let _ = writeln!(s, "design        {}", design_text(&doc.design));
    let _ = writeln!(s, "              simulated        model            delta");
    let _ = writeln!(
        s,
        "cycles        {:<16} {:<16} {}",
        s_.cycles, doc.model.cycles, doc.delta.cycles
    );
    let _ = writeln!(
        s,
        "bytes read    {:<16} {:<16} {}",
        s_.bytes_read, doc.model.bytes_read, doc.delta.bytes_read
    );
    let _ = writeln!(
        s,
        "bytes written {:<16} {:<16} {}",
        s_.bytes_written, doc.model.bytes_written, doc.delta.bytes_written
    );
    let _ = writeln!(
        s,
        "iterations    {} in {} passes, {} blocks per pass",
        s_.effective_iterations, s_.passes, s_.tiles
    );
    let _ = writeln!(
        s,
        "latency est.  {} cycles (not included above)",
        s_.pipeline_latency_estimate
    );
    for o in &doc.outputs {
        let _ = writeln!(s, "wrote         {o}");
    }
    for w in &doc.warnings {
        let _ = writeln!(s, "warning       {w}");
    }
    s
}

pub fn verify_text(doc: &VerifyDoc) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} with {}", doc.pipeline, design_text(&doc.design));
    for c in &doc.checks {
        let _ = writeln!(s, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let _ = writeln!(
        s,
        "{}",
        if doc.pass {
            "all checks passed"
        } else {
            "verification failed"
        }
    );
    s
}

/// Columns of the exploration table, in order.
pub const EXPLORE_COLUMNS: [&str; 17] = [
    "rank",
    "vector",
    "unroll",
    "tile_m",
    "tile_n",
    "batch",
    "freq_hz",
    "cycles",
    "throughput_cells_per_cycle",
    "runtime_s",
    "bandwidth_bytes_per_s",
    "valid_ratio",
    "v_max",
    "p_dsp",
    "p_mem",
    "p_max",
    "m_opt",
];

pub fn write_explore_csv<W: Write>(out: W, designs: &[RankedDesign]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EXPLORE_COLUMNS)?;
    for (i, d) in designs.iter().enumerate() {
        let (design, r, l) = (&d.design, &d.report, &d.report.limits);
        let opt = |v: Option<u64>| v.map_or(String::new(), |v| v.to_string());
        w.write_record([
            (i + 1).to_string(),
            design.vector.to_string(),
            design.unroll.to_string(),
            opt(design.tile.map(|t| t.m as u64)),
            opt(design.tile.and_then(|t| t.n).map(u64::from)),
            design.batch.to_string(),
            real(design.freq_hz),
            r.cycles.to_string(),
            real(r.throughput_cells_per_cycle),
            real(r.runtime_s),
            real(r.bandwidth_bytes_per_s),
            real(r.valid_ratio),
            l.v_max.to_string(),
            l.p_dsp.to_string(),
            l.p_mem.to_string(),
            l.p_max.to_string(),
            opt(l.m_opt),
        ])?;
    }
    w.flush()?;
    Ok(())
}
