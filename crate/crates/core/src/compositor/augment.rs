use super::{hsv_to_rgb, rgb_to_hsv, Factor, Geometry, ImageBuffer, PerturbationParams};
use crate::{filter, par};

/// Sigma of the base blur used by the sharpening branch of clarity.
const UNSHARP_SIGMA: f64 = 1.0;

/// Applies every factor in `params` in the order hue, lighting, contrast,
/// clarity, scaling, translation. Each step clamps into `[0, 1]`.
pub fn apply_augmentation(image: &ImageBuffer, params: &PerturbationParams) -> ImageBuffer {
    let geometry = params
        .geometry
        .unwrap_or_else(|| Geometry::for_image(image.width(), image.height()));
    let mut out = image.clone();
    for (factor, setting) in &params.factors {
        let m = setting.magnitude;
        out = match factor {
            Factor::Hue => shift_hue(&out, m),
            Factor::Lighting => map_values(&out, |v| v + m),
            Factor::Contrast => scale_contrast(&out, m),
            Factor::Clarity => adjust_clarity(&out, m),
            Factor::Scaling => warp(&out, |x, y| {
                let [ax, ay] = geometry.anchor;
                (ax + (x - ax) / m, ay + (y - ay) / m)
            }),
            Factor::Translation => {
                let theta = setting.direction_deg.unwrap_or(0.0).to_radians();
                let (tx, ty) = (m * geometry.extent * theta.cos(), m * geometry.extent * theta.sin());
                warp(&out, |x, y| (x - tx, y - ty))
            }
        };
    }
    out
}

fn map_values(image: &ImageBuffer, f: impl Fn(f64) -> f64) -> ImageBuffer {
    let data = image.data().iter().map(|&v| f(v)).collect();
    ImageBuffer::from_vec(image.width(), image.height(), data)
}

fn shift_hue(image: &ImageBuffer, degrees: f64) -> ImageBuffer {
    if degrees == 0.0 {
        return image.clone();
    }
    let mut out = image.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        let [h, s, v] = rgb_to_hsv([px[0], px[1], px[2]]);
        let rgb = hsv_to_rgb([h + degrees, s, v]);
        px.copy_from_slice(&rgb);
    }
    ImageBuffer::from_vec(out.width(), out.height(), out.data().to_vec())
}

/// Scales each channel about its own mean.
fn scale_contrast(image: &ImageBuffer, gain: f64) -> ImageBuffer {
    let n = (image.width() * image.height()).max(1) as f64;
    let mut mean = [0.0; 3];
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for px in image.data().chunks_exact(3) {
        for c in 0..3 {
            mean[c] += px[c];
            lo[c] = lo[c].min(px[c]);
            hi[c] = hi[c].max(px[c]);
        }
    }
    for c in 0..3 {
        // A flat channel is its own mean; the summed mean can be off by an ulp.
        mean[c] = if lo[c] == hi[c] { lo[c] } else { mean[c] / n };
    }
    let data = image
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mu = mean[i % 3];
            if v == mu {
                v
            } else {
                mu + gain * (v - mu)
            }
        })
        .collect();
    ImageBuffer::from_vec(image.width(), image.height(), data)
}

/// Positive magnitude blurs with that sigma; negative sharpens by that amount.
fn adjust_clarity(image: &ImageBuffer, magnitude: f64) -> ImageBuffer {
    if magnitude == 0.0 {
        return image.clone();
    }
    let (w, h) = image.dims();
    let planes: Vec<Vec<f64>> = (0..3)
        .map(|c| {
            let p = image.plane(c);
            if magnitude > 0.0 {
                filter::gaussian_blur(&p, w, h, magnitude)
            } else {
                let base = filter::gaussian_blur(&p, w, h, UNSHARP_SIGMA);
                let amount = -magnitude;
                p.iter().zip(&base).map(|(v, b)| v + amount * (v - b)).collect()
            }
        })
        .collect();
    ImageBuffer::from_planes(w, h, [&planes[0], &planes[1], &planes[2]])
}

/// Bilinear sample with symmetric border reflection.
fn sample_bilinear(image: &ImageBuffer, x: f64, y: f64) -> [f64; 3] {
    let (w, h) = image.dims();
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let xi = |d: isize| filter::reflect(x0 as isize + d, w);
    let yi = |d: isize| filter::reflect(y0 as isize + d, h);
    if fx == 0.0 && fy == 0.0 {
        return image.pixel(xi(0), yi(0));
    }
    let p00 = image.pixel(xi(0), yi(0));
    let p10 = image.pixel(xi(1), yi(0));
    let p01 = image.pixel(xi(0), yi(1));
    let p11 = image.pixel(xi(1), yi(1));
    let mut out = [0.0; 3];
    for c in 0..3 {
        let top = p00[c] + fx * (p10[c] - p00[c]);
        let bottom = p01[c] + fx * (p11[c] - p01[c]);
        out[c] = top + fy * (bottom - top);
    }
    out
}

/// Backward warp: output pixel `(x, y)` reads the input at `source(x, y)`.
fn warp(image: &ImageBuffer, source: impl Fn(f64, f64) -> (f64, f64) + Sync) -> ImageBuffer {
    let (w, h) = image.dims();
    let mut data = vec![0.0; w * h * 3];
    par::for_each_row(&mut data, w * 3, |y, row| {
        for x in 0..w {
            let (sx, sy) = source(x as f64, y as f64);
            let rgb = sample_bilinear(image, sx, sy);
            row[x * 3..x * 3 + 3].copy_from_slice(&rgb);
        }
    });
    ImageBuffer::from_vec(w, h, data)
}
