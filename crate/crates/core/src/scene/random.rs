use serde::{Deserialize, Serialize};

use super::{SceneBlock, SceneError, SceneSpec};
use crate::color::{BlockColor, ColorCounts};
use crate::detect::RECTIFIED_SIZE;
use crate::geometry::Point2;
use crate::rng::SplitMix64;
use crate::Quad;

/// Largest number of blocks of each color in the physical box.
pub const INVENTORY: ColorCounts = ColorCounts {
    red: 30,
    green: 30,
    blue: 13,
};

const MAX_REJECTIONS: usize = 10_000;
const CLEARANCE: f64 = 8.0;
const MARGIN: f64 = 20.0;
const SIDE_RANGE: (f64, f64) = (34.0, 46.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbLevel {
    /// Axis-aligned blocks, square box, no noise.
    Clean,
    /// Rotations up to 30 degrees, box sides skewed up to 15 degrees, noise sigma 5.
    Perturbed,
}

impl PerturbLevel {
    pub fn from_level(level: u8) -> Option<Self> {
        match level {
            0 => Some(Self::Clean),
            1 => Some(Self::Perturbed),
            _ => None,
        }
    }

    pub fn max_rotation(self) -> f64 {
        match self {
            Self::Clean => 0.0,
            Self::Perturbed => 30.0,
        }
    }

    pub fn max_skew(self) -> f64 {
        match self {
            Self::Clean => 0.0,
            Self::Perturbed => 15.0,
        }
    }

    pub fn noise_sigma(self) -> f64 {
        match self {
            Self::Clean => 0.0,
            Self::Perturbed => 5.0,
        }
    }
}

/// Scene `seed` of the benchmark set: 3 to 8 blocks, colors as even as the
/// count allows.
pub fn bench_scene(seed: u64, level: PerturbLevel) -> Result<SceneSpec, SceneError> {
    let k = 3 + (seed % 6) as u32;
    random_scene(seed, ColorCounts::new((k + 2) / 3, (k + 1) / 3, k / 3), level)
}

/// Draws a scene with the given number of blocks per color by rejection
/// sampling placements with at least 8 px between block footprints.
pub fn random_scene(seed: u64, counts: ColorCounts, level: PerturbLevel) -> Result<SceneSpec, SceneError> {
    if BlockColor::ALL.iter().any(|&c| counts.get(c) > INVENTORY.get(c)) {
        return Err(SceneError::InvalidBlock {
            index: 0,
            reason: "block counts exceed the inventory",
        });
    }
    let mut rng = SplitMix64::new(seed);
    let mut spec = SceneSpec::empty(seed);
    spec.noise_sigma = level.noise_sigma();
    spec.box_quad = box_quad(&mut rng, level);

    let size = RECTIFIED_SIZE as f64;
    let mut rejections = 0;
    for color in BlockColor::ALL {
        for _ in 0..counts.get(color) {
            let side = rng.uniform(SIDE_RANGE.0, SIDE_RANGE.1);
            let rot = level.max_rotation();
            let rotation = if rot > 0.0 { rng.uniform(-rot, rot) } else { 0.0 };
            loop {
                let mut b = SceneBlock::new(Point2::new(0.0, 0.0), side, rotation, color);
                let r = b.footprint_radius();
                b.center = Point2::new(
                    rng.uniform(MARGIN + r, size - MARGIN - r),
                    rng.uniform(MARGIN + r, size - MARGIN - r),
                );
                let clear = spec
                    .blocks
                    .iter()
                    .all(|o| o.center.distance(b.center) >= o.footprint_radius() + r + CLEARANCE);
                if clear {
                    spec.blocks.push(b);
                    break;
                }
                rejections += 1;
                if rejections >= MAX_REJECTIONS {
                    return Err(SceneError::PlacementFailure(rejections));
                }
            }
        }
    }
    Ok(spec)
}

fn box_quad(rng: &mut SplitMix64, level: PerturbLevel) -> Quad {
    let nominal = Quad::axis_square(120.0, 40.0, 400.0);
    let skew = level.max_skew();
    if skew == 0.0 {
        return nominal;
    }
    let jitter = 35.0;
    loop {
        let q = nominal.map(|p| Point2::new(p.x + rng.uniform(-jitter, jitter), p.y + rng.uniform(-jitter, jitter)));
        let in_frame = q.corners.iter().all(|p| p.x >= 8.0 && p.y >= 8.0 && p.x <= 632.0 && p.y <= 472.0);
        if in_frame && max_skew_deg(&q) <= skew {
            return q;
        }
    }
}

/// Largest deviation of a side from its nominal axis, or of a corner angle
/// from 90 degrees.
pub fn max_skew_deg(q: &Quad) -> f64 {
    let c = &q.corners;
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        let d = c[(i + 1) % 4] - c[i];
        let dev = if i % 2 == 0 {
            (d.y / d.x).atan().abs()
        } else {
            (d.x / d.y).atan().abs()
        };
        worst = worst.max(dev.to_degrees());
        let prev = c[(i + 3) % 4] - c[i];
        let angle = (d.dot(prev) / (d.norm() * prev.norm())).clamp(-1.0, 1.0).acos().to_degrees();
        worst = worst.max((angle - 90.0).abs());
    }
    worst
}
