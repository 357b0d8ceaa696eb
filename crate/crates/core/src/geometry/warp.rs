use super::Homography;
use crate::raster::Image;
use crate::scalar::Real;

/// Resamples `img` into an `out_w` x `out_h` raster through `h`, which maps
/// source coordinates to output coordinates.
///
/// Each output pixel is pulled back through `h^-1` and sampled bilinearly;
/// samples that fall outside the source are black.
pub fn warp<T: Real>(img: &Image, h: &Homography<T>, out_w: usize, out_h: usize) -> Image {
    let inv = h.inverse().unwrap_or_else(|_| Homography::identity());
    let m = inv.matrix().map(|r| r.map(|v| v.to_f64_lossy()));
    let (sw, sh) = (img.width(), img.height());
    let max_x = (sw - 1) as f64;
    let max_y = (sh - 1) as f64;
    let mut data = vec![0u8; out_w * out_h * 3];
    for y in 0..out_h {
        for x in 0..out_w {
            let (fx, fy) = (x as f64, y as f64);
            let wz = m[2][0] * fx + m[2][1] * fy + m[2][2];
            let sx = (m[0][0] * fx + m[0][1] * fy + m[0][2]) / wz;
            let sy = (m[1][0] * fx + m[1][1] * fy + m[1][2]) / wz;
            if !(sx >= -1e-9 && sy >= -1e-9 && sx <= max_x + 1e-9 && sy <= max_y + 1e-9) {
                continue;
            }
            let sx = sx.clamp(0.0, max_x);
            let sy = sy.clamp(0.0, max_y);
            let x0 = sx.floor() as usize;
            let y0 = sy.floor() as usize;
            let tx = sx - x0 as f64;
            let ty = sy - y0 as f64;
            let x1 = (x0 + 1).min(sw - 1);
            let y1 = (y0 + 1).min(sh - 1);
            let (p00, p10, p01, p11) = (img.get(x0, y0), img.get(x1, y0), img.get(x0, y1), img.get(x1, y1));
            let o = (y * out_w + x) * 3;
            for c in 0..3 {
                let v = p00[c] as f64 * (1.0 - tx) * (1.0 - ty)
                    + p10[c] as f64 * tx * (1.0 - ty)
                    + p01[c] as f64 * (1.0 - tx) * ty
                    + p11[c] as f64 * tx * ty;
                data[o + c] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Image::from_raw(out_w, out_h, data).expect("output dimensions are positive")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(w: usize, h: usize) -> Image {
        let mut data = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            for x in 0..w {
                data.extend_from_slice(&[(x * 7 + y) as u8, (y * 11) as u8, (x ^ y) as u8]);
            }
        }
        Image::from_raw(w, h, data).unwrap()
    }

    #[test]
    fn identity_is_bit_exact() {
        let img = pattern(37, 23);
        assert_eq!(warp(&img, &Homography::<f64>::identity(), 37, 23), img);
    }

    #[test]
    fn integer_translation_shifts_and_blackens() {
        let img = pattern(30, 20);
        let out = warp(&img, &Homography::translation(5.0, 0.0), 30, 20);
        for y in 0..20 {
            for x in 0..30 {
                if x < 5 {
                    assert_eq!(out.get(x, y), [0, 0, 0]);
                } else {
                    assert_eq!(out.get(x, y), img.get(x - 5, y));
                }
            }
        }
    }
}
