use std::f64::consts::PI;

use crate::geometry::Vec3;

/// Width of the encoded feature vector for `levels` frequencies.
pub fn encoded_len(levels: usize) -> usize {
    3 + 6 * levels
}

/// Fourier features: `q`, then for each level `l` the three `sin(2^l pi q)`
/// components followed by the three `cos(2^l pi q)` components.
pub fn encode_into(q: &Vec3, levels: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), encoded_len(levels));
    out[..3].copy_from_slice(q.as_slice());
    let mut freq = PI;
    for l in 0..levels {
        let base = 3 + 6 * l;
        for axis in 0..3 {
            let (s, c) = (freq * q[axis]).sin_cos();
            out[base + axis] = s;
            out[base + 3 + axis] = c;
        }
        freq *= 2.0;
    }
}

pub fn encode(q: &Vec3, levels: usize) -> Vec<f64> {
    let mut out = vec![0.0; encoded_len(levels)];
    encode_into(q, levels, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_levels_is_identity() {
        let q = Vec3::new(0.1, -0.2, 0.3);
        assert_eq!(encode(&q, 0), vec![0.1, -0.2, 0.3]);
    }

    #[test]
    fn origin_features() {
        let f = encode(&Vec3::zeros(), 5);
        assert_eq!(f.len(), 33);
        for l in 0..5 {
            let base = 3 + 6 * l;
            assert!(f[base..base + 3].iter().all(|&s| s == 0.0));
            assert!(f[base + 3..base + 6].iter().all(|&c| c == 1.0));
        }
    }

    #[test]
    fn matches_direct_recomputation() {
        let q = Vec3::new(0.25, 0.0, 0.0);
        let f = encode(&q, 6);
        assert_eq!(f.len(), 39);
        for l in 0..6 {
            let w = 2f64.powi(l as i32) * PI;
            let base = 3 + 6 * l;
            assert!((f[base] - (w * 0.25).sin()).abs() < 1e-12);
            assert!((f[base + 3] - (w * 0.25).cos()).abs() < 1e-12);
            assert_eq!(f[base + 1], 0.0);
            assert_eq!(f[base + 4], 1.0);
        }
        // sin(pi/4), sin(pi/2), sin(pi), ...
        assert!((f[3] - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((f[9] - 1.0).abs() < 1e-12);
        assert!(f[15].abs() < 1e-12);
    }
}
