use std::path::Path;

use super::CompositorError;

/// Linear RGB image, row-major interleaved, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub const CHANNELS: usize = 3;

    /// Values are clamped into `[0, 1]`.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height * 3, "image buffer size");
        ImageBuffer {
            width,
            height,
            data: data.into_iter().map(clamp01).collect(),
        }
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        let data = (0..width * height).flat_map(|_| rgb).collect();
        Self::from_vec(width, height, data)
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::from_vec(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = (y * self.width + x) * 3;
        for c in 0..3 {
            self.data[i + c] = clamp01(rgb[c]);
        }
    }

    /// One channel as a separate plane.
    pub fn plane(&self, channel: usize) -> Vec<f64> {
        self.data.iter().skip(channel).step_by(3).copied().collect()
    }

    pub fn from_planes(width: usize, height: usize, planes: [&[f64]; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for i in 0..width * height {
            for p in planes {
                data.push(p[i]);
            }
        }
        Self::from_vec(width, height, data)
    }

    /// Rec. 601 luma per pixel.
    pub fn luminance(&self) -> Vec<f64> {
        self.data
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect()
    }

    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data.iter().map(|v| (v * 255.0).round() as u8).collect()
    }

    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Self {
        Self::from_vec(width, height, bytes.iter().map(|&b| b as f64 / 255.0).collect())
    }

    /// Round trip through 8 bits, matching what a PNG stores.
    pub fn quantized(&self) -> Self {
        Self::from_rgb8(self.width, self.height, &self.to_rgb8())
    }

    pub fn load_png(path: &Path) -> Result<Self, CompositorError> {
        let img = ::image::open(path)?.to_rgb8();
        let (w, h) = img.dimensions();
        Ok(Self::from_rgb8(w as usize, h as usize, img.as_raw()))
    }

    pub fn save_png(&self, path: &Path) -> Result<(), CompositorError> {
        let buf = ::image::RgbImage::from_raw(self.width as u32, self.height as u32, self.to_rgb8())
            .expect("buffer matches dimensions");
        buf.save_with_format(path, ::image::ImageFormat::Png)?;
        Ok(())
    }

    /// Largest absolute per-channel difference.
    pub fn max_abs_diff(&self, other: &ImageBuffer) -> [f64; 3] {
        let mut out = [0.0f64; 3];
        for (i, (a, b)) in self.data.iter().zip(&other.data).enumerate() {
            let c = i % 3;
            out[c] = out[c].max((a - b).abs());
        }
        out
    }
}

fn clamp01(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// RGB in `[0,1]` to (hue degrees in `[0,360)`, saturation, value).
pub fn rgb_to_hsv([r, g, b]: [f64; 3]) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let chroma = max - min;
    let hue = if chroma <= 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / chroma).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / chroma + 2.0)
    } else {
        60.0 * ((r - g) / chroma + 4.0)
    };
    let sat = if max <= 0.0 { 0.0 } else { chroma / max };
    [hue.rem_euclid(360.0), sat, max]
}

pub fn hsv_to_rgb([h, s, v]: [f64; 3]) -> [f64; 3] {
    let c = v * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r1 + m, g1 + m, b1 + m]
}
