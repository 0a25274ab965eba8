//! Raster perturbations for grid datasets: domain shift (edge detection +
//! median smoothing), translation with cut-off, and center zoom.

use ndarray::Array2;
use rand::Rng;

use super::{FlagSet, HardnessError};
use crate::num::{real, Real};
use crate::rng;

/// Replace flagged rasters by their Sobel gradient magnitude, smoothed with
/// a 3x3 median filter (edge replication at borders) and rescaled to the
/// input raster's min/max range. Deterministic; a constant raster maps to
/// an all-zero edge map.
pub fn perturb_near_ood_domain<T: Real>(
    features: &Array2<T>,
    flags: &FlagSet,
    grid: (usize, usize),
) -> Result<Array2<T>, HardnessError> {
    let (h, w) = grid;
    if h * w != features.ncols() {
        return Err(HardnessError::MissingGrid);
    }
    let mut out = features.clone();
    for row in 0..features.nrows() {
        if !flags.get(row) {
            continue;
        }
        let raster: Vec<T> = (0..h * w).map(|c| features[[row, c]]).collect();
        let edges = sobel_magnitude(&raster, h, w);
        let smoothed = median_filter_3x3(&edges, h, w);
        let rescaled = rescale_to_range(&smoothed, &raster);
        for (c, &v) in rescaled.iter().enumerate() {
            out[[row, c]] = v;
        }
    }
    Ok(out)
}

fn at<T: Real>(raster: &[T], h: usize, w: usize, r: isize, c: isize) -> T {
    // edge replication: clamp out-of-range indices to the border
    let r = r.clamp(0, h as isize - 1) as usize;
    let c = c.clamp(0, w as isize - 1) as usize;
    raster[r * w + c]
}

fn sobel_magnitude<T: Real>(raster: &[T], h: usize, w: usize) -> Vec<T> {
    let two: T = real(2.0);
    let mut out = vec![T::zero(); h * w];
    for r in 0..h as isize {
        for c in 0..w as isize {
            let gx = at(raster, h, w, r - 1, c + 1) - at(raster, h, w, r - 1, c - 1)
                + two * (at(raster, h, w, r, c + 1) - at(raster, h, w, r, c - 1))
                + at(raster, h, w, r + 1, c + 1)
                - at(raster, h, w, r + 1, c - 1);
            let gy = at(raster, h, w, r + 1, c - 1) - at(raster, h, w, r - 1, c - 1)
                + two * (at(raster, h, w, r + 1, c) - at(raster, h, w, r - 1, c))
                + at(raster, h, w, r + 1, c + 1)
                - at(raster, h, w, r - 1, c + 1);
            out[r as usize * w + c as usize] = (gx * gx + gy * gy).sqrt();
        }
    }
    out
}

fn median_filter_3x3<T: Real>(raster: &[T], h: usize, w: usize) -> Vec<T> {
    let mut out = vec![T::zero(); h * w];
    let mut window = [T::zero(); 9];
    for r in 0..h as isize {
        for c in 0..w as isize {
            let mut idx = 0;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    window[idx] = at(raster, h, w, r + dr, c + dc);
                    idx += 1;
                }
            }
            window.sort_by(|a, b| a.partial_cmp(b).expect("finite raster"));
            out[r as usize * w + c as usize] = window[4];
        }
    }
    out
}

/// Affinely map `values` onto the min/max range of `reference`; a constant
/// map is returned unchanged (in particular zero gradients stay zero).
fn rescale_to_range<T: Real>(values: &[T], reference: &[T]) -> Vec<T> {
    let (v_min, v_max) = min_max(values);
    if v_max <= v_min {
        return values.to_vec();
    }
    let (r_min, r_max) = min_max(reference);
    values
        .iter()
        .map(|&v| r_min + (v - v_min) * (r_max - r_min) / (v_max - v_min))
        .collect()
}

fn min_max<T: Real>(values: &[T]) -> (T, T) {
    let mut lo = values[0];
    let mut hi = values[0];
    for &v in values {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    (lo, hi)
}

/// Translate flagged rasters by `(+-pixels, +-pixels)` with per-sample
/// direction draws; vacated cells take the raster minimum, so the shift is
/// lossy at the borders.
pub fn perturb_crop_shift<T: Real>(
    features: &Array2<T>,
    flags: &FlagSet,
    grid: (usize, usize),
    pixels: usize,
    seed: u64,
) -> Result<Array2<T>, HardnessError> {
    let (h, w) = grid;
    if h * w != features.ncols() {
        return Err(HardnessError::MissingGrid);
    }
    if pixels == 0 || pixels >= h.min(w) {
        return Err(HardnessError::BadPixels { pixels, h, w });
    }
    let mut rng = rng::derived_stream(seed, &["crop_shift"]);
    let mut out = features.clone();
    for row in 0..features.nrows() {
        if !flags.get(row) {
            continue;
        }
        let dr = if rng.gen::<bool>() { pixels as isize } else { -(pixels as isize) };
        let dc = if rng.gen::<bool>() { pixels as isize } else { -(pixels as isize) };
        let raster: Vec<T> = (0..h * w).map(|c| features[[row, c]]).collect();
        let (fill, _) = min_max(&raster);
        for r in 0..h as isize {
            for c in 0..w as isize {
                let src_r = r - dr;
                let src_c = c - dc;
                let v = if src_r >= 0 && src_r < h as isize && src_c >= 0 && src_c < w as isize {
                    raster[src_r as usize * w + src_c as usize]
                } else {
                    fill
                };
                out[[row, (r as usize) * w + c as usize]] = v;
            }
        }
    }
    Ok(out)
}

/// Replace flagged rasters by the central `(h/factor) x (w/factor)` crop
/// resampled back to `h x w` with nearest-neighbor interpolation.
pub fn perturb_zoom<T: Real>(
    features: &Array2<T>,
    flags: &FlagSet,
    grid: (usize, usize),
    factor: f64,
) -> Result<Array2<T>, HardnessError> {
    let (h, w) = grid;
    if h * w != features.ncols() {
        return Err(HardnessError::MissingGrid);
    }
    if !(factor > 1.0) || !factor.is_finite() {
        return Err(HardnessError::BadZoomFactor(factor));
    }
    let crop_h = (h as f64 / factor).floor() as usize;
    let crop_w = (w as f64 / factor).floor() as usize;
    if crop_h == 0 || crop_w == 0 {
        return Err(HardnessError::CropTooSmall(factor));
    }
    let off_r = (h - crop_h) / 2;
    let off_c = (w - crop_w) / 2;

    let mut out = features.clone();
    for row in 0..features.nrows() {
        if !flags.get(row) {
            continue;
        }
        let raster: Vec<T> = (0..h * w).map(|c| features[[row, c]]).collect();
        for r in 0..h {
            for c in 0..w {
                let src_r = off_r + r * crop_h / h;
                let src_c = off_c + c * crop_w / w;
                out[[row, r * w + c]] = raster[src_r * w + src_c];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_raster(values: &[f64]) -> (Array2<f64>, FlagSet) {
        let mut m = Array2::<f64>::zeros((1, values.len()));
        for (i, &v) in values.iter().enumerate() {
            m[[0, i]] = v;
        }
        (m, FlagSet::from_flags(vec![true]))
    }

    #[test]
    fn domain_shift_constant_raster_gives_zero_map() {
        let (m, flags) = single_raster(&[3.0; 9]);
        let out = perturb_near_ood_domain(&m, &flags, (3, 3)).unwrap();
        for c in 0..9 {
            assert_eq!(out[[0, c]], 0.0);
        }
    }

    #[test]
    fn domain_shift_center_pixel_matches_hand_computation() {
        // 5x5 zero raster with a unit center pixel, hand-evaluated stencils
        let mut values = vec![0.0; 25];
        values[12] = 1.0;
        let (m, flags) = single_raster(&values);
        let out = perturb_near_ood_domain(&m, &flags, (5, 5)).unwrap();

        // Sobel magnitude around the center: corners sqrt(2), edge-adjacent 2,
        // center 0. The 3x3 median at the center window {0,2,2,2,2,sqrt2 x4}
        // sorted gives sqrt(2); all other windows have majority zeros except
        // those overlapping the cross, whose medians stay 0.
        let s = 2.0f64.sqrt();
        let mut edges = vec![0.0; 25];
        for (r, c, v) in [
            (1usize, 1usize, s),
            (1, 3, s),
            (3, 1, s),
            (3, 3, s),
            (1, 2, 2.0),
            (2, 1, 2.0),
            (2, 3, 2.0),
            (3, 2, 2.0),
        ] {
            edges[r * 5 + c] = v;
        }
        let median = median_filter_3x3(&edges, 5, 5);
        let mut expected = vec![0.0; 25];
        expected[12] = s; // only the center window has five nonzero entries
        assert_eq!(median, expected);

        // the pipeline output rescales that map to the input range [0, 1]
        for c in 0..25 {
            let want = if c == 12 { 1.0 } else { 0.0 };
            assert!((out[[0, c]] - want).abs() < 1e-12, "cell {c}: {}", out[[0, c]]);
        }
    }

    #[test]
    fn domain_shift_output_range_matches_input_range() {
        let values: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin() + 2.0).collect();
        let (m, flags) = single_raster(&values);
        let out = perturb_near_ood_domain(&m, &flags, (4, 4)).unwrap();
        let got: Vec<f64> = (0..16).map(|c| out[[0, c]]).collect();
        let (in_lo, in_hi) = min_max(&values);
        let (out_lo, out_hi) = min_max(&got);
        assert!((in_lo - out_lo).abs() < 1e-12);
        assert!((in_hi - out_hi).abs() < 1e-12);
    }

    #[test]
    fn crop_shift_rejects_bad_pixel_counts() {
        let (m, flags) = single_raster(&[0.0; 9]);
        assert!(perturb_crop_shift(&m, &flags, (3, 3), 0, 0).is_err());
        assert!(perturb_crop_shift(&m, &flags, (3, 3), 3, 0).is_err());
    }

    #[test]
    fn crop_shift_moves_corner_mark() {
        // 3x3 raster with a mark at the top-left corner, shifted by 1
        let mut values = vec![0.0; 9];
        values[0] = 5.0;
        let (m, flags) = single_raster(&values);
        for seed in 0..8 {
            let out = perturb_crop_shift(&m, &flags, (3, 3), 1, seed).unwrap();
            let marks: Vec<usize> = (0..9).filter(|&c| out[[0, c]] == 5.0).collect();
            // mark survives only for the (+1, +1) shift, landing at (1, 1)
            assert!(marks.is_empty() || marks == vec![4], "seed {seed}: {marks:?}");
        }
    }

    #[test]
    fn crop_shift_is_lossy() {
        let values: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let (m, flags) = single_raster(&values);
        let shifted = perturb_crop_shift(&m, &flags, (4, 4), 1, 3).unwrap();
        // shifting back cannot restore the cut-off border
        let back = perturb_crop_shift(&shifted, &flags, (4, 4), 1, 104).unwrap();
        let restored: Vec<f64> = (0..16).map(|c| back[[0, c]]).collect();
        assert_ne!(restored, values);
    }

    #[test]
    fn zoom_factor_two_repeats_central_block() {
        // 4x4: central 2x2 block expands with each cell repeated 2x2
        let values: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let (m, flags) = single_raster(&values);
        let out = perturb_zoom(&m, &flags, (4, 4), 2.0).unwrap();
        let center = [values[5], values[6], values[9], values[10]];
        let expected = [
            center[0], center[0], center[1], center[1],
            center[0], center[0], center[1], center[1],
            center[2], center[2], center[3], center[3],
            center[2], center[2], center[3], center[3],
        ];
        for c in 0..16 {
            assert_eq!(out[[0, c]], expected[c], "cell {c}");
        }
    }

    #[test]
    fn zoom_constant_raster_unchanged() {
        let (m, flags) = single_raster(&[2.5; 16]);
        let out = perturb_zoom(&m, &flags, (4, 4), 2.0).unwrap();
        for c in 0..16 {
            assert_eq!(out[[0, c]], 2.5);
        }
    }

    #[test]
    fn zoom_6x6_hand_resample() {
        let values: Vec<f64> = (0..36).map(|i| i as f64).collect();
        let (m, flags) = single_raster(&values);
        let out = perturb_zoom(&m, &flags, (6, 6), 2.0).unwrap();
        // crop is rows/cols 1..4 of the 6x6; nearest neighbor uses
        // src = offset + out_index * 3 / 6
        for r in 0..6usize {
            for c in 0..6usize {
                let src_r = 1 + r * 3 / 6;
                let src_c = 1 + c * 3 / 6;
                assert_eq!(out[[0, r * 6 + c]], values[src_r * 6 + src_c]);
            }
        }
    }

    #[test]
    fn zoom_rejects_tiny_crops() {
        let (m, flags) = single_raster(&[0.0; 4]);
        assert!(perturb_zoom(&m, &flags, (2, 2), 3.0).is_err());
        assert!(perturb_zoom(&m, &flags, (2, 2), 1.0).is_err());
    }
}
