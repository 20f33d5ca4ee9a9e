//! Device budgets and candidate accelerator configurations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceProfile {
    pub dsp_total: u32,
    pub onchip_mem_bytes: u64,
    /// Sustained bandwidth of one memory channel, bytes per second.
    pub channel_bw: f64,
    pub num_ports: u32,
    pub freq_hz: f64,
    #[serde(default = "default_dsp_util")]
    pub dsp_util_cap: f64,
    #[serde(default = "default_mem_util")]
    pub mem_util_cap: f64,
}

fn default_dsp_util() -> f64 {
    0.9
}

fn default_mem_util() -> f64 {
    0.85
}

impl ResourceProfile {
    /// Xilinx Alveo U280: 8490 DSP blocks, 34.5 MB of UltraRAM and two
    /// 19.2 GB/s DDR4 channels, at the 300 MHz default HLS clock.
    pub fn u280() -> Self {
        Self {
            dsp_total: 8490,
            onchip_mem_bytes: 34_500_000,
            channel_bw: 19.2e9,
            num_ports: 2,
            freq_hz: 300e6,
            dsp_util_cap: default_dsp_util(),
            mem_util_cap: default_mem_util(),
        }
    }

    /// The same device streaming from `channels` of its 32 HBM channels
    /// (460 GB/s in total).
    pub fn u280_hbm(channels: u32) -> Self {
        Self {
            channel_bw: 460e9 / 32.0,
            num_ports: channels,
            ..Self::u280()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Profile(what.to_string()));
        if self.dsp_total == 0 {
            return bad("dsp_total must be positive");
        }
        if self.onchip_mem_bytes == 0 {
            return bad("onchip_mem_bytes must be positive");
        }
        if !(self.channel_bw > 0.0 && self.channel_bw.is_finite()) {
            return bad("channel_bw must be positive");
        }
        if self.num_ports == 0 {
            return bad("num_ports must be positive");
        }
        if !(self.freq_hz > 0.0 && self.freq_hz.is_finite()) {
            return bad("freq_hz must be positive");
        }
        for (name, cap) in [("dsp_util_cap", self.dsp_util_cap), ("mem_util_cap", self.mem_util_cap)] {
            if !(cap > 0.0 && cap <= 1.0) {
                return Err(Error::Profile(format!("{name} must be in (0, 1], got {cap}")));
            }
        }
        Ok(())
    }

    /// On-chip bytes available after the utilization cap.
    pub fn usable_mem_bytes(&self) -> f64 {
        self.mem_util_cap * self.onchip_mem_bytes as f64
    }
}

/// Spatial block size: `m` along the streaming dimension, `n` along the
/// second (3D only; 2D meshes are tiled in strips along `m`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tile {
    pub m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
}

impl Tile {
    pub fn strip(m: u32) -> Self {
        Self { m, n: None }
    }

    pub fn square(m: u32) -> Self {
        Self { m, n: Some(m) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignPoint {
    /// Mesh points updated per cycle (`V`).
    pub vector: u32,
    /// Iterations chained in one pass (`p`).
    pub unroll: u32,
    #[serde(default)]
    pub tile: Option<Tile>,
    #[serde(default = "one")]
    pub batch: u32,
    pub freq_hz: f64,
}

fn one() -> u32 {
    1
}

impl DesignPoint {
    pub fn new(vector: u32, unroll: u32, freq_hz: f64) -> Self {
        Self {
            vector,
            unroll,
            tile: None,
            batch: 1,
            freq_hz,
        }
    }

    pub fn with_tile(mut self, tile: Tile) -> Self {
        self.tile = Some(tile);
        self
    }

    pub fn with_batch(mut self, batch: u32) -> Self {
        self.batch = batch;
        self
    }

    /// Checks the invariants that do not depend on a mesh or device.
    /// `order` is the per-iteration stencil order `D`.
    pub fn validate(&self, order: u32) -> Result<()> {
        if self.vector == 0 {
            return Err(Error::Design("vector factor must be at least 1".into()));
        }
        if self.unroll == 0 {
            return Err(Error::Design("unroll depth must be at least 1".into()));
        }
        if self.batch == 0 {
            return Err(Error::Design("batch size must be at least 1".into()));
        }
        if !(self.freq_hz > 0.0 && self.freq_hz.is_finite()) {
            return Err(Error::Design("frequency must be positive".into()));
        }
        if let Some(tile) = self.tile {
            let overlap = self.unroll as u64 * order as u64;
            for t in std::iter::once(tile.m).chain(tile.n) {
                if t as u64 <= overlap {
                    return Err(Error::TileTooSmall {
                        tile: t as u64,
                        overlap,
                    });
                }
                if t % self.vector != 0 {
                    return Err(Error::TileMisaligned {
                        tile: t as u64,
                        vector: self.vector,
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u280_profile_is_valid() {
        let p = ResourceProfile::u280();
        p.validate().unwrap();
        assert_eq!(p.dsp_total, 8490);
    }

    #[test]
    fn profile_rejects_bad_caps() {
        let mut p = ResourceProfile::u280();
        p.dsp_util_cap = 0.0;
        assert!(p.validate().is_err());
        p.dsp_util_cap = 1.2;
        assert!(p.validate().is_err());
        p.dsp_util_cap = 1.0;
        p.onchip_mem_bytes = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn design_invariants() {
        let d = DesignPoint::new(8, 4, 300e6);
        d.validate(2).unwrap();
        assert!(DesignPoint::new(0, 4, 300e6).validate(2).is_err());
        assert!(DesignPoint::new(8, 0, 300e6).validate(2).is_err());
        assert!(d.with_batch(0).validate(2).is_err());
        assert_eq!(
            d.with_tile(Tile::strip(8)).validate(2),
            Err(Error::TileTooSmall { tile: 8, overlap: 8 })
        );
        assert_eq!(
            d.with_tile(Tile::strip(12)).validate(2),
            Err(Error::TileMisaligned { tile: 12, vector: 8 })
        );
        d.with_tile(Tile::square(16)).validate(2).unwrap();
    }

    #[test]
    fn profile_json_rejects_unknown_keys() {
        let text = r#"{"dsp_total":1,"onchip_mem_bytes":1,"channel_bw":1.0,"num_ports":1,"freq_hz":1.0,"dsp":2}"#;
        assert!(serde_json::from_str::<ResourceProfile>(text).is_err());
    }
}
