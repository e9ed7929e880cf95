//! Separable Gaussian filtering on single planes with half-sample
//! symmetric borders (`d c b a | a b c d | d c b a`).
//!
//! With a symmetric kernel that border mode conserves the plane sum.

use crate::par;

/// Maps any integer index into `0..n` by symmetric reflection.
pub fn reflect(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

/// Normalized 1-D Gaussian taps for `sigma`, radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / denom).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Convolves a `width x height` plane with a separable kernel.
pub fn convolve_separable(plane: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    assert_eq!(plane.len(), width * height);
    if kernel.len() <= 1 || plane.is_empty() {
        return plane.to_vec();
    }
    let radius = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; plane.len()];
    par::for_each_row(&mut tmp, width, |y, row| {
        let src = &plane[y * width..(y + 1) * width];
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let xi = reflect(x as isize + k as isize - radius, width);
                acc += w * src[xi];
            }
            *out = acc;
        }
    });
    let mut out = vec![0.0; plane.len()];
    par::for_each_row(&mut out, width, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let yi = reflect(y as isize + k as isize - radius, height);
                acc += w * tmp[yi * width + x];
            }
            *o = acc;
        }
    });
    out
}

pub fn gaussian_blur(plane: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    convolve_separable(plane, width, height, &gaussian_kernel(sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_folds_both_sides() {
        assert_eq!(reflect(-1, 4), 0);
        assert_eq!(reflect(-2, 4), 1);
        assert_eq!(reflect(4, 4), 3);
        assert_eq!(reflect(5, 4), 2);
        assert_eq!(reflect(9, 4), 1);
        assert_eq!(reflect(0, 1), 0);
        assert_eq!(reflect(-7, 1), 0);
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel(1.3);
        assert_eq!(k.len(), 2 * 4 + 1);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..k.len() {
            assert_eq!(k[i], k[k.len() - 1 - i]);
        }
    }

    #[test]
    fn blur_conserves_sum_even_at_borders() {
        let (w, h) = (9, 7);
        let plane: Vec<f64> = (0..w * h).map(|i| ((i * 37) % 11) as f64 / 10.0).collect();
        let out = gaussian_blur(&plane, w, h, 2.5);
        let a: f64 = plane.iter().sum();
        let b: f64 = out.iter().sum();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}
