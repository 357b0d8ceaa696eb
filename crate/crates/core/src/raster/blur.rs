use super::GrayImage;

const KERNEL_BITS: u32 = 16;
const KERNEL_ONE: u64 = 1 << KERNEL_BITS;

/// Normalized 1D Gaussian weights, radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let w: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = w.iter().sum();
    w.into_iter().map(|v| v / sum).collect()
}

// The kernel quantized to integers that sum to exactly 2^16, so that adding a
// constant to the input shifts the output by exactly that constant.
fn fixed_point_kernel(sigma: f64) -> Vec<u64> {
    let w = gaussian_kernel(sigma);
    let mut q: Vec<u64> = w.iter().map(|v| (v * KERNEL_ONE as f64).round() as u64).collect();
    let sum: u64 = q.iter().sum();
    let mid = q.len() / 2;
    q[mid] = q[mid] + KERNEL_ONE - sum;
    q
}

/// Separable Gaussian blur with replicated borders. `sigma == 0` is the identity.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    if sigma <= 0.0 {
        return img.clone();
    }
    let k = fixed_point_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let (w, h) = (img.width(), img.height());
    let src = img.as_raw();
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;

    // Horizontal pass keeps 16 fractional bits.
    let mut tmp = vec![0u64; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0u64;
            for (t, &kv) in k.iter().enumerate() {
                acc += kv * row[clamp(x as i64 + t as i64 - r, w)] as u64;
            }
            tmp[y * w + x] = acc;
        }
    }

    let mut out = vec![0u8; w * h];
    let half = 1u64 << (2 * KERNEL_BITS - 1);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0u64;
            for (t, &kv) in k.iter().enumerate() {
                acc += kv * tmp[clamp(y as i64 + t as i64 - r, h) * w + x];
            }
            out[y * w + x] = ((acc + half) >> (2 * KERNEL_BITS)).min(255) as u8;
        }
    }
    GrayImage::from_raw(w, h, out).expect("dimensions preserved")
}
