use super::Polygon;
use crate::par;

/// Binary mask, row-major, values in {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RegionMask {
    pub fn zeros(width: usize, height: usize) -> Self {
        RegionMask {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn ones(width: usize, height: usize) -> Self {
        RegionMask {
            width,
            height,
            data: vec![1; width * height],
        }
    }

    /// Any non-zero byte counts as set.
    pub fn from_vec(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width * height, "mask buffer size");
        RegionMask {
            width,
            height,
            data: data.into_iter().map(|v| (v != 0) as u8).collect(),
        }
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

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.data[y * self.width + x] = on as u8;
    }

    pub fn count(&self) -> usize {
        self.data.iter().map(|&v| v as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &RegionMask) -> bool {
        self.data.len() == other.data.len()
            && self.data.iter().zip(&other.data).all(|(a, b)| *a <= *b)
    }

    pub fn union(&self, other: &RegionMask) -> RegionMask {
        assert_eq!((self.width, self.height), (other.width, other.height));
        RegionMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a | b).collect(),
        }
    }
}

/// Edge crossings of the horizontal line `y = yc`, half-open in y.
fn crossings(poly: &Polygon, yc: f64, out: &mut Vec<f64>) {
    let v = poly.vertices();
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + n - 1) % n]);
        if (a.y > yc) != (b.y > yc) {
            out.push((b.x - a.x) * (yc - a.y) / (b.y - a.y) + a.x);
        }
    }
}

/// Sets pixels whose center lies inside any polygon (even-odd per polygon,
/// union across polygons).
pub fn rasterize_mask(polygons: &[Polygon], width: usize, height: usize) -> RegionMask {
    let mut mask = RegionMask::zeros(width, height);
    if polygons.is_empty() || width == 0 {
        return mask;
    }
    par::for_each_row(&mut mask.data, width, |y, row| {
        let yc = y as f64 + 0.5;
        let mut xs = Vec::new();
        for poly in polygons.iter().filter(|p| p.len() >= 3) {
            xs.clear();
            crossings(poly, yc, &mut xs);
            if xs.is_empty() {
                continue;
            }
            xs.sort_by(f64::total_cmp);
            // A center is inside when an odd number of crossings lie strictly to its right.
            let mut right = 0usize;
            for (x, px) in row.iter_mut().enumerate().rev() {
                let xc = x as f64 + 0.5;
                while right < xs.len() && xs[xs.len() - 1 - right] > xc {
                    right += 1;
                }
                if right % 2 == 1 {
                    *px = 1;
                }
            }
        }
    });
    mask
}
