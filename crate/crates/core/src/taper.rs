//! Cosine tapers: the smooth cutoffs behind every mute, cap and window.

/// Symmetric weight vector: 1 on the central `flat_fraction * n` samples,
/// raised-cosine decay toward the ends.
///
/// The taper never quite reaches 0 on the grid itself; the cosine arch hits
/// zero half a nominal sample outside both ends, so the endpoint weight is
/// `cos^2(pi/2 * (1 - 1/n))` when `flat_fraction = 0`.
pub fn build_taper(n: usize, flat_fraction: f64) -> Vec<f64> {
    assert!(
        (0.0..=1.0).contains(&flat_fraction),
        "flat_fraction must lie in [0, 1], got {flat_fraction}"
    );
    if n == 0 {
        return Vec::new();
    }
    let center = (n as f64 - 1.0) / 2.0;
    let flat_half = flat_fraction * n as f64 / 2.0;
    let edge = n as f64 / 2.0 - flat_half;
    (0..n)
        .map(|i| {
            let d = (i as f64 - center).abs();
            if d <= flat_half || edge <= 0.0 {
                1.0
            } else {
                let u = ((d - flat_half) / edge).min(1.0);
                let c = (std::f64::consts::FRAC_PI_2 * u).cos();
                c * c
            }
        })
        .collect()
}

/// Smooth scalar window: 1 for `v <= lo`, cos^2 roll-off on `(lo, hi)`,
/// 0 for `v >= hi`. Degenerates to a step when `hi <= lo`.
pub fn edge_weight(v: f64, lo: f64, hi: f64) -> f64 {
    if v <= lo {
        1.0
    } else if v >= hi {
        0.0
    } else {
        let u = (v - lo) / (hi - lo);
        let c = (std::f64::consts::FRAC_PI_2 * u).cos();
        c * c
    }
}

/// Band-pass window over `[lo, hi]` with cosine edges of width
/// `taper * (hi - lo)` inside each end of the band.
pub fn band_weight(v: f64, lo: f64, hi: f64, taper: f64) -> f64 {
    if v < lo || v > hi {
        return 0.0;
    }
    let w = (hi - lo) * taper.clamp(0.0, 0.5);
    if w == 0.0 {
        return 1.0;
    }
    let up = edge_weight(lo + w - v, 0.0, w);
    let down = edge_weight(v - (hi - w), 0.0, w);
    up * down
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_fraction_one_is_all_ones() {
        assert!(build_taper(7, 1.0).iter().all(|&w| w == 1.0));
    }

    #[test]
    fn arch_is_symmetric_with_unit_center() {
        let w = build_taper(5, 0.0);
        assert_eq!(w.len(), 5);
        assert_eq!(w[2], 1.0);
        for i in 0..5 {
            assert!((w[i] - w[4 - i]).abs() < 1e-15);
        }
        // strictly decreasing toward the ends
        assert!(w[0] < w[1] && w[1] < w[2]);
    }

    #[test]
    fn endpoint_bound() {
        for n in [2usize, 3, 5, 16, 101] {
            let w = build_taper(n, 0.0);
            let bound = {
                let c = (std::f64::consts::FRAC_PI_2 * (1.0 - 1.0 / n as f64)).cos();
                c * c
            };
            assert!(w[0] <= bound + 1e-15, "n={n}: {} > {bound}", w[0]);
            assert!(bound < 1.0);
        }
    }

    #[test]
    fn empty_input() {
        assert!(build_taper(0, 0.3).is_empty());
    }

    #[test]
    fn weights_bounded() {
        for frac in [0.0, 0.25, 0.5, 0.9, 1.0] {
            for &w in &build_taper(33, frac) {
                assert!((0.0..=1.0).contains(&w));
            }
        }
    }

    #[test]
    fn band_window_edges() {
        assert_eq!(band_weight(0.5, 1.0, 2.0, 0.1), 0.0);
        assert_eq!(band_weight(1.5, 1.0, 2.0, 0.1), 1.0);
        assert_eq!(band_weight(2.5, 1.0, 2.0, 0.1), 0.0);
        assert!(band_weight(1.02, 1.0, 2.0, 0.1) < 1.0);
    }
}
