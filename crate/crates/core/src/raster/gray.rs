use super::{GrayImage, Image};

/// Rec. 601 luma, `round(0.299 R + 0.587 G + 0.114 B)`.
///
/// Evaluated in integer arithmetic so the rounding is exact.
pub fn to_grayscale(img: &Image) -> GrayImage {
    let values = img
        .pixels()
        .map(|[r, g, b]| {
            let acc = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
            ((acc + 500) / 1000) as u8
        })
        .collect();
    GrayImage::from_raw(img.width(), img.height(), values).expect("dimensions preserved")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_pixel(rgb: [u8; 3]) -> u8 {
        to_grayscale(&Image::filled(1, 1, rgb).unwrap()).get(0, 0)
    }

    #[test]
    fn black_is_zero() {
        let g = to_grayscale(&Image::filled(4, 3, [0, 0, 0]).unwrap());
        assert!(g.as_raw().iter().all(|&v| v == 0));
        assert_eq!((g.width(), g.height()), (4, 3));
    }

    #[test]
    fn weights_sum_to_one() {
        assert_eq!(one_pixel([255, 255, 255]), 255);
    }

    #[test]
    fn pure_red() {
        // round(0.299 * 255) = round(76.245)
        assert_eq!(one_pixel([255, 0, 0]), 76);
        assert_eq!(one_pixel([0, 255, 0]), 150);
        assert_eq!(one_pixel([0, 0, 255]), 29);
    }

    #[test]
    fn matches_float_formula() {
        for r in (0..=255).step_by(17) {
            for g in (0..=255).step_by(15) {
                for b in (0..=255).step_by(51) {
                    let f = (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round() as u8;
                    assert_eq!(one_pixel([r as u8, g as u8, b as u8]), f);
                }
            }
        }
    }
}
