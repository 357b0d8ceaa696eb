use serde::{Deserialize, Serialize};

use super::{Occluder, Patch, SceneBlock, SceneSpec};
use crate::color::{BlockColor, ColorCounts};
use crate::detect::RECTIFIED_SIZE;
use crate::geometry::Point2;
use crate::rng::SplitMix64;
use crate::Quad;

/// The six observed failure modes of the detection and assessment loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    /// A square-ish texture is taken for a block.
    ExtraBlock,
    /// A partly covered block is not found.
    MissedBlock,
    /// Visible side faces pull the fitted square off the top face.
    MisalignedBlock,
    /// Blocks beyond the divider are counted because the right border is lost.
    OtherSide,
    /// Rectification fails because the left border is lost.
    FailedPerspective,
    /// A wrong placement stays in view and is counted again every frame.
    PersistentError,
}

impl FaultKind {
    pub const ALL: [FaultKind; 6] = [
        FaultKind::ExtraBlock,
        FaultKind::MissedBlock,
        FaultKind::MisalignedBlock,
        FaultKind::OtherSide,
        FaultKind::FailedPerspective,
        FaultKind::PersistentError,
    ];

    /// Numbering used when the failure modes are listed.
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.get(usize::from(n).wrapping_sub(1)).copied()
    }
}

const PATCH_SIDE: f64 = 72.0;
const SIDE_FACE: f64 = 10.0;
const OCCLUDER_RGB: [u8; 3] = [110, 110, 110];

/// Returns a copy of `s` mutated to provoke the given failure.
pub fn inject_fault(s: &SceneSpec, fault: FaultKind) -> SceneSpec {
    let mut out = s.clone();
    let mut rng = SplitMix64::new(s.seed ^ 0xFA17_0000 ^ u64::from(fault.number()));
    match fault {
        FaultKind::ExtraBlock => {
            // Green on the default background is too faint for the edge
            // detector without the dark rim a real block has.
            let rgb = [BlockColor::Red, BlockColor::Blue][rng.below(2) as usize].rgb();
            let center = free_spot(&out, &mut rng, PATCH_SIDE);
            out.patches.push(Patch {
                center,
                side: PATCH_SIDE,
                rotation: 0.0,
                rgb,
            });
        }
        FaultKind::MissedBlock => {
            if let Some(b) = out.blocks.first() {
                let h = b.side / 2.0;
                let local = [(-h - 6.0, -0.1 * b.side), (h + 6.0, -0.1 * b.side), (h + 6.0, h + 6.0), (-h - 6.0, h + 6.0)];
                let (sn, cs) = b.rotation.to_radians().sin_cos();
                let corners = local.map(|(u, v)| Point2::new(b.center.x + u * cs - v * sn, b.center.y + u * sn + v * cs));
                out.occluders.push(Occluder {
                    corners: Quad::from_ordered(corners),
                    rgb: OCCLUDER_RGB,
                });
            }
        }
        FaultKind::MisalignedBlock => {
            if let Some(b) = out.blocks.first_mut() {
                b.side_face = SIDE_FACE;
            }
        }
        FaultKind::OtherSide => break_border(&mut out, true),
        FaultKind::FailedPerspective => break_border(&mut out, false),
        FaultKind::PersistentError => {
            if let Some(b) = out.blocks.first_mut() {
                b.persistent_error = true;
            }
        }
    }
    out
}

// Paints over one vertical border with the background and puts two blocks
// just beyond it.
fn break_border(s: &mut SceneSpec, right: bool) {
    let size = RECTIFIED_SIZE as f64;
    let x = if right { size } else { 0.0 };
    s.occluders.push(Occluder {
        corners: Quad::from_ordered([
            Point2::new(x - 12.0, -30.0),
            Point2::new(x + 12.0, -30.0),
            Point2::new(x + 12.0, size + 30.0),
            Point2::new(x - 12.0, size + 30.0),
        ]),
        rgb: s.background,
    });
    let dx = if right { size + 45.0 } else { -45.0 };
    for (y, color) in [(130.0, BlockColor::Red), (270.0, BlockColor::Green)] {
        s.distractors.push(SceneBlock::new(Point2::new(dx, y), 40.0, 0.0, color));
    }
}

// Center for a square of the given side clear of every block, or the
// emptiest sampled spot if none is fully clear.
fn free_spot(s: &SceneSpec, rng: &mut SplitMix64, side: f64) -> Point2<f64> {
    let size = RECTIFIED_SIZE as f64;
    let r = side / 2.0 * std::f64::consts::SQRT_2;
    let lo = 10.0 + side / 2.0;
    let mut best = (f64::NEG_INFINITY, Point2::new(size / 2.0, size / 2.0));
    for _ in 0..10_000 {
        let c = Point2::new(rng.uniform(lo, size - lo), rng.uniform(lo, size - lo));
        let slack = s
            .blocks
            .iter()
            .map(|b| c.distance(b.center) - b.footprint_radius() - r)
            .fold(f64::INFINITY, f64::min);
        if slack >= 8.0 {
            return c;
        }
        if slack > best.0 {
            best = (slack, c);
        }
    }
    best.1
}

/// One frame of a persistent-error sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceFrame {
    pub spec: SceneSpec,
    /// Correctly placed blocks visible in this frame, per color.
    pub expected: ColorCounts,
}

/// Builds a frame sequence in which the first `errors` blocks of `base` are
/// wrong placements visible from the first frame on, and the remaining blocks
/// appear one per frame as correct placements.
pub fn persistent_error_sequence(base: &SceneSpec, errors: usize, frames: usize) -> Vec<SequenceFrame> {
    let errors = errors.min(base.blocks.len());
    let (wrong, correct) = base.blocks.split_at(errors);
    (0..frames)
        .map(|k| {
            let mut spec = base.clone();
            spec.blocks = wrong
                .iter()
                .map(|b| SceneBlock {
                    persistent_error: true,
                    ..*b
                })
                .collect();
            let shown = &correct[..(k + 1).min(correct.len())];
            spec.blocks.extend_from_slice(shown);
            SequenceFrame {
                expected: ColorCounts::from_colors(shown.iter().map(|b| b.color)),
                spec,
            }
        })
        .collect()
}
