//! Dataset labeling from per-pixel depth and segmentation rasters.

use super::{SectorLabels, SensorGeometry};
use crate::arena::SurfaceClass;
use crate::pgm::{self, Pgm, PgmError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RasterError {
    #[error("raster dimensions differ: depth {depth:?}, seg {seg:?}")]
    DimensionMismatch { depth: (usize, usize), seg: (usize, usize) },
    #[error("raster width {0} is not divisible by 3")]
    WidthNotDivisible(usize),
    #[error("unknown segmentation class code {0}")]
    UnknownClass(u8),
    #[error("expected a {expected}-bit PGM")]
    Depth { expected: u8 },
    #[error(transparent)]
    Pgm(#[from] PgmError),
}

/// Per-pixel depth in meters, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthRaster {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
}

/// Per-pixel surface class, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SegRaster {
    pub width: usize,
    pub height: usize,
    pub classes: Vec<SurfaceClass>,
}

impl DepthRaster {
    pub fn filled(width: usize, height: usize, meters: f64) -> Self {
        DepthRaster { width, height, depth: vec![meters; width * height] }
    }

    /// From a 16-bit PGM holding millimeters.
    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self, RasterError> {
        let p = pgm::decode(bytes)?;
        if p.maxval < 256 {
            return Err(RasterError::Depth { expected: 16 });
        }
        Ok(DepthRaster {
            width: p.width,
            height: p.height,
            depth: p.samples.iter().map(|&mm| mm as f64 / 1000.0).collect(),
        })
    }

    /// To a 16-bit millimeter PGM; depths are rounded and saturate at 65.535 m.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let samples = self.depth.iter().map(|&m| (m * 1000.0).round().clamp(0.0, 65535.0) as u16).collect();
        pgm::encode(&Pgm { width: self.width, height: self.height, maxval: 65535, samples })
    }
}

impl SegRaster {
    pub fn filled(width: usize, height: usize, class: SurfaceClass) -> Self {
        SegRaster { width, height, classes: vec![class; width * height] }
    }

    /// From an 8-bit PGM of class codes (0 none, 1 obstacle, 2 gate frame,
    /// 3 wall, 4 out-of-area ground).
    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self, RasterError> {
        let p = pgm::decode(bytes)?;
        if p.maxval > 255 {
            return Err(RasterError::Depth { expected: 8 });
        }
        let classes = p
            .samples
            .iter()
            .map(|&c| SurfaceClass::from_code(c as u8).ok_or(RasterError::UnknownClass(c as u8)))
            .collect::<Result<_, _>>()?;
        Ok(SegRaster { width: p.width, height: p.height, classes })
    }

    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let samples = self.classes.iter().map(|c| c.code() as u16).collect();
        pgm::encode(&Pgm { width: self.width, height: self.height, maxval: 255, samples })
    }
}

/// Per vertical third: blocked iff the share of its pixels that are
/// obstacle-class and within `d_max` reaches `pixel_fraction`.
pub fn label_from_rasters(
    depth: &DepthRaster,
    seg: &SegRaster,
    geom: &SensorGeometry,
    ground_aware: bool,
) -> Result<SectorLabels, RasterError> {
    if (depth.width, depth.height) != (seg.width, seg.height) {
        return Err(RasterError::DimensionMismatch {
            depth: (depth.width, depth.height),
            seg: (seg.width, seg.height),
        });
    }
    let w = depth.width;
    if !w.is_multiple_of(3) || w == 0 {
        return Err(RasterError::WidthNotDivisible(w));
    }
    let third = w / 3;
    let mut counts = [0usize; 3];
    for (i, (&d, &c)) in depth.depth.iter().zip(&seg.classes).enumerate() {
        if c.is_obstacle(ground_aware) && d <= geom.d_max {
            counts[(i % w) / third] += 1;
        }
    }
    let need = geom.min_blocked(third * depth.height);
    Ok(counts.map(|n| u8::from(n >= need)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sky_is_clear() {
        let d = DepthRaster::filled(324, 324, 0.5);
        let s = SegRaster::filled(324, 324, SurfaceClass::None);
        assert_eq!(label_from_rasters(&d, &s, &SensorGeometry::default(), true).unwrap(), [0, 0, 0]);
    }

    #[test]
    fn left_third_fifteen_percent() {
        let (w, h) = (30, 20);
        let mut d = DepthRaster::filled(w, h, 10.0);
        let mut s = SegRaster::filled(w, h, SurfaceClass::None);
        // left third has 10 x 20 = 200 pixels; mark 30 of them
        let mut marked = 0;
        for y in 0..h {
            for x in 0..10 {
                if marked < 30 && (x + y) % 3 == 0 {
                    d.depth[y * w + x] = 1.5;
                    s.classes[y * w + x] = SurfaceClass::Obstacle;
                    marked += 1;
                }
            }
        }
        assert_eq!(marked, 30);
        assert_eq!(label_from_rasters(&d, &s, &SensorGeometry::default(), false).unwrap(), [1, 0, 0]);
    }

    #[test]
    fn exact_ten_percent_at_two_meters() {
        let (w, h) = (30, 10);
        let mut d = DepthRaster::filled(w, h, 5.0);
        let mut s = SegRaster::filled(w, h, SurfaceClass::None);
        // right third: 100 pixels, exactly 10 at exactly 2.0 m
        for y in 0..10 {
            d.depth[y * w + 25] = 2.0;
            s.classes[y * w + 25] = SurfaceClass::Wall;
        }
        assert_eq!(label_from_rasters(&d, &s, &SensorGeometry::default(), false).unwrap(), [0, 0, 1]);
        d.depth[9 * w + 25] = 2.0 + 1e-9;
        assert_eq!(label_from_rasters(&d, &s, &SensorGeometry::default(), false).unwrap(), [0, 0, 0]);
    }

    #[test]
    fn ground_counts_only_when_aware() {
        let d = DepthRaster::filled(3, 3, 1.0);
        let s = SegRaster::filled(3, 3, SurfaceClass::OutOfAreaGround);
        let g = SensorGeometry::default();
        assert_eq!(label_from_rasters(&d, &s, &g, false).unwrap(), [0, 0, 0]);
        assert_eq!(label_from_rasters(&d, &s, &g, true).unwrap(), [1, 1, 1]);
    }

    #[test]
    fn dimension_errors() {
        let g = SensorGeometry::default();
        let d = DepthRaster::filled(6, 4, 1.0);
        let s = SegRaster::filled(6, 5, SurfaceClass::None);
        assert!(matches!(label_from_rasters(&d, &s, &g, false), Err(RasterError::DimensionMismatch { .. })));
        let d = DepthRaster::filled(4, 4, 1.0);
        let s = SegRaster::filled(4, 4, SurfaceClass::None);
        assert_eq!(label_from_rasters(&d, &s, &g, false), Err(RasterError::WidthNotDivisible(4)));
    }

    #[test]
    fn pgm_rasters_roundtrip() {
        let mut d = DepthRaster::filled(3, 2, 2.0);
        d.depth[4] = 1.234;
        assert_eq!(DepthRaster::from_pgm_bytes(&d.to_pgm_bytes()).unwrap(), d);
        let mut s = SegRaster::filled(3, 2, SurfaceClass::None);
        s.classes[1] = SurfaceClass::GateFrame;
        assert_eq!(SegRaster::from_pgm_bytes(&s.to_pgm_bytes()).unwrap(), s);
        let bad = crate::pgm::encode(&Pgm { width: 1, height: 1, maxval: 255, samples: vec![9] });
        assert_eq!(SegRaster::from_pgm_bytes(&bad), Err(RasterError::UnknownClass(9)));
    }
}
