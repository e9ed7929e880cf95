use serde::{Deserialize, Serialize};

use super::RegionMask;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum MorphOp {
    Erode,
    Dilate,
    None,
}

/// Half-widths of the disc `dx^2 + dy^2 <= r^2`, indexed by `dy + r`.
fn disc_rows(radius: usize) -> Vec<usize> {
    let r2 = radius * radius;
    (0..=2 * radius)
        .map(|i| {
            let dy = i.abs_diff(radius);
            let rem = r2 - dy * dy;
            let mut w = (rem as f64).sqrt() as usize;
            while w * w > rem {
                w -= 1;
            }
            while (w + 1) * (w + 1) <= rem {
                w += 1;
            }
            w
        })
        .collect()
}

fn row_prefix(mask: &RegionMask) -> Vec<u32> {
    let (w, h) = (mask.width(), mask.height());
    let mut prefix = vec![0u32; (w + 1) * h];
    for y in 0..h {
        let base = y * (w + 1);
        for x in 0..w {
            prefix[base + x + 1] = prefix[base + x] + mask.data()[y * w + x] as u32;
        }
    }
    prefix
}

fn apply(mask: &RegionMask, radius: usize, erode: bool) -> RegionMask {
    let (w, h) = (mask.width(), mask.height());
    if radius == 0 || w == 0 || h == 0 {
        return mask.clone();
    }
    let rows = disc_rows(radius);
    let prefix = row_prefix(mask);
    let mut out = vec![0u8; w * h];
    par::for_each_row(&mut out, w, |y, row| {
        for (x, px) in row.iter_mut().enumerate() {
            let mut hit = erode;
            for (i, &half) in rows.iter().enumerate() {
                let yy = y as isize + i as isize - radius as isize;
                let lo = x as isize - half as isize;
                let hi = x as isize + half as isize;
                if erode {
                    // Off-canvas pixels count as background.
                    if yy < 0 || yy >= h as isize || lo < 0 || hi >= w as isize {
                        hit = false;
                        break;
                    }
                    let base = yy as usize * (w + 1);
                    let ones = prefix[base + hi as usize + 1] - prefix[base + lo as usize];
                    if ones as usize != (hi - lo + 1) as usize {
                        hit = false;
                        break;
                    }
                } else {
                    if yy < 0 || yy >= h as isize {
                        continue;
                    }
                    let lo = lo.max(0) as usize;
                    let hi = hi.min(w as isize - 1) as usize;
                    let base = yy as usize * (w + 1);
                    if prefix[base + hi + 1] > prefix[base + lo] {
                        hit = true;
                        break;
                    }
                }
            }
            *px = hit as u8;
        }
    });
    RegionMask::from_vec(w, h, out)
}

/// Binary erosion by a disc of `radius`.
pub fn erode(mask: &RegionMask, radius: usize) -> RegionMask {
    apply(mask, radius, true)
}

/// Binary dilation by a disc of `radius`.
pub fn dilate(mask: &RegionMask, radius: usize) -> RegionMask {
    apply(mask, radius, false)
}

pub fn morph_mask(mask: &RegionMask, op: MorphOp, radius: usize) -> RegionMask {
    match op {
        MorphOp::Erode => erode(mask, radius),
        MorphOp::Dilate => dilate(mask, radius),
        MorphOp::None => mask.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_half_widths() {
        assert_eq!(disc_rows(1), vec![0, 1, 0]);
        assert_eq!(disc_rows(2), vec![0, 1, 2, 1, 0]);
        assert_eq!(disc_rows(3), vec![0, 2, 2, 3, 2, 2, 0]);
    }

    #[test]
    fn radius_zero_is_identity() {
        let m = RegionMask::from_vec(3, 2, vec![1, 0, 1, 0, 1, 1]);
        assert_eq!(erode(&m, 0), m);
        assert_eq!(dilate(&m, 0), m);
    }

    #[test]
    fn dilating_a_point_gives_a_plus() {
        let mut m = RegionMask::zeros(5, 5);
        m.set(2, 2, true);
        let d = dilate(&m, 1);
        assert_eq!(d.count(), 5);
        for (x, y) in [(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)] {
            assert!(d.get(x, y));
        }
    }

    #[test]
    fn eroding_full_mask_strips_border() {
        let e = erode(&RegionMask::ones(6, 5), 1);
        for y in 0..5 {
            for x in 0..6 {
                let interior = x > 0 && x < 5 && y > 0 && y < 4;
                assert_eq!(e.get(x, y), interior, "({x},{y})");
            }
        }
    }
}
