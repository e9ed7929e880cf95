//! Procedural face-like test images with dlib-81 landmark layouts.
//!
//! These stand in for real portraits in tests, benches and demos. The
//! images have smooth shading plus fine seeded texture so block matching
//! and blur measures have something to work with.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::compositor::{hsv_to_rgb, CompositorError, ImageBuffer};
use crate::mask::{LandmarkSet81, Point};
use crate::rng::seeded;

/// Landmarks for a face centred at `(cx, cy)` with half-width `a` and
/// half-height `b`. Subject-right features sit at smaller `x`.
pub fn face_landmarks(cx: f64, cy: f64, a: f64, b: f64) -> Vec<Point> {
    let p = |x: f64, y: f64| Point { x: cx + x * a, y: cy + y * b };
    let mut pts = Vec::with_capacity(81);
    // Jaw 0..=16, image left to right through the chin.
    for i in 0..17 {
        let t = PI * i as f64 / 16.0;
        pts.push(p(-t.cos(), 0.1 + 0.9 * t.sin()));
    }
    // Brows 17..=26.
    for side in [-1.0, 1.0] {
        for i in 0..5 {
            let u = i as f64 / 4.0;
            let x = if side < 0.0 { -0.75 + 0.6 * u } else { 0.15 + 0.6 * u };
            pts.push(p(x, -0.45 - 0.08 * (PI * u).sin()));
        }
    }
    // Nose bridge 27..=30 and base 31..=35.
    for i in 0..4 {
        pts.push(p(0.0, -0.3 + 0.15 * i as f64));
    }
    for i in 0..5 {
        let u = i as f64 / 4.0;
        pts.push(p(-0.18 + 0.36 * u, 0.25 + 0.03 * (PI * u).sin()));
    }
    // Eyes 36..=47: corner, two upper, corner, two lower.
    for ex in [-0.42, 0.42] {
        for k in 0..6 {
            let t = PI - PI * k as f64 / 3.0;
            pts.push(p(ex + 0.18 * t.cos(), -0.22 - 0.07 * t.sin()));
        }
    }
    // Outer lip 48..=59 and inner lip 60..=67, from the left corner over the top.
    for (n, rx, ry) in [(12, 0.35, 0.12), (8, 0.25, 0.05)] {
        for k in 0..n {
            let t = PI - 2.0 * PI * k as f64 / n as f64;
            pts.push(p(rx * t.cos(), 0.55 - ry * t.sin()));
        }
    }
    // Forehead 68..=80.
    for i in 0..13 {
        let u = i as f64 / 12.0;
        pts.push(p(-0.8 + 1.6 * u, -0.6 - 0.3 * (PI * u).sin()));
    }
    pts
}

/// A seeded synthetic portrait and its landmarks.
pub fn synthetic_face(seed: u64, width: usize, height: usize) -> (ImageBuffer, LandmarkSet81) {
    let mut rng = seeded(seed);
    let (w, h) = (width as f64, height as f64);
    let cx = w * (0.5 + rng.random_range(-0.03..0.03));
    let cy = h * (0.55 + rng.random_range(-0.03..0.03));
    let a = w * rng.random_range(0.30..0.34);
    let b = h * rng.random_range(0.36..0.40);
    let points = face_landmarks(cx, cy, a, b);
    let landmarks =
        LandmarkSet81::new(points.clone(), width as u32, height as u32).expect("synthetic landmarks lie on the canvas");

    let skin_hue = rng.random_range(15.0..35.0);
    let skin_sat: f64 = rng.random_range(0.25..0.45);
    let bg_hue = rng.random_range(0.0..360.0);
    // Coarse value noise on an 8 px lattice plus per-pixel grain.
    let cell = 8usize;
    let (gw, gh) = (width / cell + 2, height / cell + 2);
    let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.random_range(-1.0..1.0)).collect();
    let grain: Vec<f64> = (0..width * height).map(|_| rng.random_range(-1.0..1.0)).collect();
    let coarse = |x: usize, y: usize| {
        let (fx, fy) = (x as f64 / cell as f64, y as f64 / cell as f64);
        let (ix, iy) = (fx as usize, fy as usize);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let at = |i: usize, j: usize| lattice[j * gw + i];
        let top = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
        let bot = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bot * ty
    };
    let ellipse = |x: f64, y: f64, ex: f64, ey: f64, rx: f64, ry: f64| ((x - ex) / rx).powi(2) + ((y - ey) / ry).powi(2);

    let image = ImageBuffer::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f64 + 0.5, y as f64 + 0.5);
        let texture = 0.05 * coarse(x, y) + 0.03 * grain[y * width + x];
        let face = ellipse(xf, yf, cx, cy, a * 1.02, b * 1.05);
        if face > 1.0 {
            return hsv_to_rgb([bg_hue, 0.2, (0.45 + 0.2 * yf / h + texture).clamp(0.0, 1.0)]);
        }
        // Soft shading towards the rim.
        let mut v = 0.82 - 0.15 * face + texture;
        let mut hue = skin_hue;
        let mut sat: f64 = skin_sat;
        for ex in [-0.42, 0.42] {
            let eye = ellipse(xf, yf, cx + ex * a, cy - 0.22 * b, 0.17 * a, 0.065 * b);
            if eye < 1.0 {
                v = 0.25 + 0.5 * eye + texture;
                sat *= 0.3;
            }
            let brow = ellipse(xf, yf, cx + ex * a, cy - 0.49 * b, 0.3 * a, 0.05 * b);
            if brow < 1.0 {
                v -= 0.3 * (1.0 - brow);
            }
        }
        let nose = ellipse(xf, yf, cx, cy + 0.22 * b, 0.14 * a, 0.08 * b);
        if nose < 1.0 {
            v -= 0.12 * (1.0 - nose);
        }
        let lips = ellipse(xf, yf, cx, cy + 0.55 * b, 0.33 * a, 0.11 * b);
        if lips < 1.0 {
            hue = 355.0;
            sat = 0.45;
            v -= 0.1;
        }
        hsv_to_rgb([hue, sat.clamp(0.0, 1.0), v.clamp(0.0, 1.0)])
    });
    (image.quantized(), landmarks)
}

/// Writes `count` synthetic portraits as `images/face_NNN.png` plus
/// `landmarks/face_NNN.json`. Returns the image paths.
pub fn write_fixture_set(
    dir: &Path,
    count: usize,
    seed: u64,
    width: usize,
    height: usize,
) -> Result<Vec<PathBuf>, CompositorError> {
    let images = dir.join("images");
    let landmarks = dir.join("landmarks");
    std::fs::create_dir_all(&images)?;
    std::fs::create_dir_all(&landmarks)?;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let stem = format!("face_{:03}", i + 1);
        let (img, lm) = synthetic_face(seed.wrapping_add(i as u64), width, height);
        let png = images.join(format!("{stem}.png"));
        img.save_png(&png)?;
        let file = lm.to_file(format!("../images/{stem}.png"));
        let json = serde_json::to_string_pretty(&file).map_err(|e| CompositorError::Io(e.into()))?;
        std::fs::write(landmarks.join(format!("{stem}.json")), json)?;
        out.push(png);
    }
    Ok(out)
}
