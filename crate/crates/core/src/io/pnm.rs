use super::IoError;
use crate::raster::{EdgeMap, GrayImage, Image};

/// Binary PPM (P6, maxval 255).
pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.as_raw());
    out
}

/// Binary PGM (P5, maxval 255).
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.as_raw());
    out
}

/// Binary PBM (P4); edge pixels are black (1).
pub fn encode_pbm(edges: &EdgeMap) -> Vec<u8> {
    let (w, h) = (edges.width(), edges.height());
    let mut out = format!("P4\n{w} {h}\n").into_bytes();
    for y in 0..h {
        for chunk in 0..w.div_ceil(8) {
            let mut byte = 0u8;
            for bit in 0..8 {
                let x = chunk * 8 + bit;
                if x < w && edges.get(x, y) {
                    byte |= 0x80 >> bit;
                }
            }
            out.push(byte);
        }
    }
    out
}

struct Header<'a> {
    magic: u8,
    fields: Vec<usize>,
    body: &'a [u8],
}

// Magic plus `n` whitespace-separated decimal fields, with `#` comments; one
// whitespace byte separates the header from the raster.
fn parse_header(bytes: &[u8], n: usize) -> Result<Header<'_>, IoError> {
    let bad = |m: &str| IoError::Malformed(m.to_string());
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(IoError::UnsupportedFormat);
    }
    let magic = bytes[1];
    let mut i = 2;
    let mut fields = Vec::with_capacity(n);
    while fields.len() < n {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if start == i {
            return Err(bad("truncated header"));
        }
        let v = std::str::from_utf8(&bytes[start..i])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("header field out of range"))?;
        fields.push(v);
    }
    if i >= bytes.len() || !bytes[i].is_ascii_whitespace() {
        return Err(bad("missing raster separator"));
    }
    Ok(Header {
        magic,
        fields,
        body: &bytes[i + 1..],
    })
}

/// Decodes binary P6, P5 or P4 into RGB.
pub fn decode_pnm(bytes: &[u8]) -> Result<Image, IoError> {
    let magic = bytes.get(1).copied().ok_or(IoError::UnsupportedFormat)?;
    let bad = |m: &str| IoError::Malformed(m.to_string());
    match magic {
        b'6' | b'5' => {
            let h = parse_header(bytes, 3)?;
            let (w, ht, max) = (h.fields[0], h.fields[1], h.fields[2]);
            if max != 255 {
                return Err(bad("only maxval 255 is supported"));
            }
            let channels = if h.magic == b'6' { 3 } else { 1 };
            let need = w.checked_mul(ht).and_then(|p| p.checked_mul(channels)).ok_or_else(|| bad("size overflow"))?;
            if h.body.len() < need {
                return Err(bad("truncated raster"));
            }
            let raw = &h.body[..need];
            let data = if channels == 3 {
                raw.to_vec()
            } else {
                raw.iter().flat_map(|&v| [v, v, v]).collect()
            };
            Ok(Image::from_raw(w, ht, data)?)
        }
        b'4' => {
            let h = parse_header(bytes, 2)?;
            let (w, ht) = (h.fields[0], h.fields[1]);
            let stride = w.div_ceil(8);
            if h.body.len() < stride.checked_mul(ht).ok_or_else(|| bad("size overflow"))? {
                return Err(bad("truncated raster"));
            }
            let mut data = Vec::with_capacity(w * ht * 3);
            for y in 0..ht {
                for x in 0..w {
                    let on = h.body[y * stride + x / 8] & (0x80 >> (x % 8)) != 0;
                    let v = if on { 0 } else { 255 };
                    data.extend_from_slice(&[v, v, v]);
                }
            }
            Ok(Image::from_raw(w, ht, data)?)
        }
        _ => Err(IoError::UnsupportedFormat),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_is_bit_exact() {
        let img = Image::from_raw(2, 1, vec![1, 2, 3, 250, 251, 252]).unwrap();
        let bytes = encode_ppm(&img);
        assert_eq!(bytes, b"P6\n2 1\n255\n\x01\x02\x03\xfa\xfb\xfc".to_vec());
        assert_eq!(decode_pnm(&bytes).unwrap(), img);
    }

    #[test]
    fn header_comments_and_whitespace() {
        let bytes = b"P6 # c\n# more\n1\t1 255\n\x10\x20\x30";
        assert_eq!(decode_pnm(bytes).unwrap().get(0, 0), [16, 32, 48]);
    }

    #[test]
    fn pgm_and_pbm_expand_to_rgb() {
        let g = GrayImage::from_raw(2, 1, vec![7, 200]).unwrap();
        let img = decode_pnm(&encode_pgm(&g)).unwrap();
        assert_eq!(img.get(1, 0), [200, 200, 200]);
        let mut e = EdgeMap::empty(10, 2).unwrap();
        e.mark(9, 1);
        let bytes = encode_pbm(&e);
        assert_eq!(bytes.len(), "P4\n10 2\n".len() + 4);
        let img = decode_pnm(&bytes).unwrap();
        assert_eq!(img.get(9, 1), [0, 0, 0]);
        assert_eq!(img.get(8, 1), [255, 255, 255]);
    }

    #[test]
    fn truncated_inputs() {
        assert!(matches!(decode_pnm(b"P6\n2 2\n255\n\x00"), Err(IoError::Malformed(_))));
        assert!(matches!(decode_pnm(b"P6\n2"), Err(IoError::Malformed(_))));
        assert!(matches!(decode_pnm(b"P6\n1 1\n65535\n\x00\x00"), Err(IoError::Malformed(_))));
    }
}
