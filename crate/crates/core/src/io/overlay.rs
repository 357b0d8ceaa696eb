use crate::detect::{DetectedBlock, PipelineTrace};
use crate::raster::{rasterize_segment, Image};
use crate::Quad;

const PERIMETER_RGB: [u8; 3] = [255, 220, 0];
const SEGMENT_RGB: [u8; 3] = [255, 0, 255];

/// Outlines a quad with 1 px lines.
pub fn draw_quad(img: &mut Image, q: &Quad, rgb: [u8; 3]) {
    for i in 0..4 {
        for (x, y) in rasterize_segment(q.corners[i], q.corners[(i + 1) % 4]) {
            img.put(x, y, rgb);
        }
    }
}

fn outline_color(b: &DetectedBlock) -> [u8; 3] {
    // Fully saturated version of the block color.
    b.color.rgb().map(|c| if c > 128 { 255 } else { 0 })
}

/// Draws the stage-2 frame with its surviving segments and the detected
/// block outlines; aborted runs give the input frame with the partial
/// perimeter lines.
pub fn draw_detection_overlay(input: &Image, trace: &PipelineTrace) -> Image {
    let Some(frame) = &trace.working else {
        let mut out = input.clone();
        if let Err(crate::detect::DetectError::IncompletePerimeter { segments, .. }) = &trace.area {
            for s in segments {
                for (x, y) in rasterize_segment(s.p1, s.p2) {
                    out.put(x, y, PERIMETER_RGB);
                }
            }
        }
        return out;
    };
    let mut out = frame.clone();
    for s in &trace.graph.segments {
        for (x, y) in rasterize_segment(s.p1, s.p2) {
            out.put(x, y, SEGMENT_RGB);
        }
    }
    for b in &trace.blocks {
        draw_quad(&mut out, &b.top, outline_color(b));
        let inner = b.top.map(|p| p + (b.center() - p).scale(0.08));
        draw_quad(&mut out, &inner, outline_color(b));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::BlockColor;

    #[test]
    fn quad_outline_hits_corners() {
        let mut img = Image::filled(20, 20, [0, 0, 0]).unwrap();
        draw_quad(&mut img, &Quad::axis_square(2.0, 3.0, 10.0), [9, 9, 9]);
        for (x, y) in [(2, 3), (12, 3), (12, 13), (2, 13), (7, 3)] {
            assert_eq!(img.get(x, y), [9, 9, 9]);
        }
        assert_eq!(img.get(7, 8), [0, 0, 0]);
        let b = DetectedBlock::new(Quad::axis_square(0., 0., 5.), BlockColor::Green);
        assert_eq!(outline_color(&b), [0, 255, 0]);
    }
}
