use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MaskError, Point};

pub const LANDMARK_COUNT: usize = 81;

/// On-disk landmark record, one per image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkFile {
    pub image: String,
    pub width: u32,
    pub height: u32,
    pub points: Vec<[f64; 2]>,
}

/// Validated set of exactly 81 landmarks inside the image canvas.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet81 {
    points: Vec<Point>,
    width: u32,
    height: u32,
}

impl LandmarkSet81 {
    pub fn new(points: Vec<Point>, width: u32, height: u32) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::InvalidLandmarks(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if points.len() != LANDMARK_COUNT {
            return Err(MaskError::InvalidLandmarks(format!(
                "expected {LANDMARK_COUNT} points, got {}",
                points.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            let inside = p.x.is_finite()
                && p.y.is_finite()
                && p.x >= 0.0
                && p.y >= 0.0
                && p.x < width as f64
                && p.y < height as f64;
            if !inside {
                return Err(MaskError::InvalidLandmarks(format!(
                    "point {i} ({}, {}) outside {width}x{height}",
                    p.x, p.y
                )));
            }
        }
        Ok(LandmarkSet81 {
            points,
            width,
            height,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Bounding box of all landmarks as `(min, max)`.
    pub fn face_box(&self) -> (Point, Point) {
        let first = self.points[0];
        self.points.iter().fold((first, first), |(lo, hi), p| {
            (
                Point::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        })
    }

    pub fn to_file(&self, image: impl Into<String>) -> LandmarkFile {
        LandmarkFile {
            image: image.into(),
            width: self.width,
            height: self.height,
            points: self.points.iter().map(|p| [p.x, p.y]).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<(Self, String), MaskError> {
        let file: LandmarkFile = serde_json::from_str(text)?;
        let set = LandmarkSet81::try_from(&file)?;
        Ok((set, file.image))
    }

    pub fn load(path: &Path) -> Result<(Self, String), MaskError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl TryFrom<&LandmarkFile> for LandmarkSet81 {
    type Error = MaskError;

    fn try_from(file: &LandmarkFile) -> Result<Self, Self::Error> {
        let points = file.points.iter().map(|p| Point::new(p[0], p[1])).collect();
        LandmarkSet81::new(points, file.width, file.height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize) -> Vec<Point> {
        (0..n)
            .map(|i| {
                let t = i as f64 / n as f64 * std::f64::consts::TAU;
                Point::new(50.0 + 20.0 * t.cos(), 50.0 + 20.0 * t.sin())
            })
            .collect()
    }

    #[test]
    fn rejects_wrong_count_and_out_of_bounds() {
        assert!(LandmarkSet81::new(ring(80), 100, 100).is_err());
        assert!(LandmarkSet81::new(ring(81), 0, 100).is_err());
        let mut pts = ring(81);
        pts[3] = Point::new(100.0, 5.0);
        assert!(LandmarkSet81::new(pts, 100, 100).is_err());
        assert!(LandmarkSet81::new(ring(81), 100, 100).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let set = LandmarkSet81::new(ring(81), 100, 100).unwrap();
        let text = serde_json::to_string(&set.to_file("a.png")).unwrap();
        let (back, image) = LandmarkSet81::from_json(&text).unwrap();
        assert_eq!(back, set);
        assert_eq!(image, "a.png");
    }
}
