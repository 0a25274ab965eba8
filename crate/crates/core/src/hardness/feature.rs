//! Feature-space perturbations for tabular data: covariate noise, joint
//! structure destruction (far OoD), and marginal-tail resampling (atypical).
//! Labels are never touched here.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{FlagSet, HardnessError};
use crate::data::Dataset;
use crate::num::{real, to_f64, Real};
use crate::rng;

/// Add isotropic Gaussian noise `N(0, sigma^2 I)` to flagged rows.
pub fn perturb_near_ood_covariate<T: Real>(
    features: &Array2<T>,
    flags: &FlagSet,
    sigma: f64,
    seed: u64,
) -> Result<Array2<T>, HardnessError> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(HardnessError::BadSigma(sigma));
    }
    let mut rng = rng::derived_stream(seed, &["near_ood_covariate"]);
    let mut out = features.clone();
    for row in 0..out.nrows() {
        if !flags.get(row) {
            continue;
        }
        for col in 0..out.ncols() {
            let noise: f64 = rng.sample(StandardNormal);
            out[[row, col]] = out[[row, col]] + real(sigma * noise);
        }
    }
    Ok(out)
}

/// Destroy joint feature structure on flagged rows: every column's values
/// are independently permuted among the flagged rows (marginals preserved),
/// and binary-valued columns are additionally flipped.
///
/// Fewer than two flagged rows make the permutation degenerate; the call
/// proceeds with a warning and only binary flips take effect.
pub fn perturb_far_ood<T: Real>(features: &Array2<T>, flags: &FlagSet, seed: u64) -> Array2<T> {
    let flagged = flags.indices();
    if flagged.len() == 1 {
        log::warn!("far-ood with a single flagged row: permutation is the identity");
    }
    let mut rng = rng::derived_stream(seed, &["far_ood"]);
    let mut out = features.clone();
    for col in 0..features.ncols() {
        let mut order: Vec<usize> = (0..flagged.len()).collect();
        crate::data::fisher_yates(&mut order, &mut rng);
        let values: Vec<T> = flagged.iter().map(|&r| features[[r, col]]).collect();
        for (slot, &src) in order.iter().enumerate() {
            out[[flagged[slot], col]] = values[src];
        }
        if let Some((lo, hi)) = binary_values(features, col) {
            for &row in &flagged {
                let v = out[[row, col]];
                out[[row, col]] = if v == lo { hi } else { lo };
            }
        }
    }
    out
}

/// The two values of a binary column, or `None` when the column takes
/// fewer or more than two distinct values.
fn binary_values<T: Real>(features: &Array2<T>, col: usize) -> Option<(T, T)> {
    let mut first = None;
    let mut second = None;
    for row in 0..features.nrows() {
        let v = features[[row, col]];
        match (first, second) {
            (None, _) => first = Some(v),
            (Some(a), None) if v != a => second = Some(v),
            (Some(a), Some(b)) if v != a && v != b => return None,
            _ => {}
        }
    }
    match (first, second) {
        (Some(a), Some(b)) => Some((a, b)),
        _ => None,
    }
}

/// Push flagged rows into the marginal tail of the most label-predictive
/// feature.
///
/// The feature with maximal absolute Pearson correlation to the label is
/// selected; each flagged row's value there is replaced by a uniform draw
/// from the empirical values at or beyond `quantile` (upper tail when the
/// row sits at or above the column median, lower tail otherwise), so every
/// replacement stays inside the observed support.
pub fn perturb_atypical_tail<T: Real>(
    ds: &Dataset<T>,
    flags: &FlagSet,
    quantile: f64,
    seed: u64,
) -> Result<Array2<T>, HardnessError> {
    if !(quantile > 0.5 && quantile < 1.0) {
        return Err(HardnessError::BadQuantile(quantile));
    }
    let feature = most_label_correlated(ds)?;
    let n = ds.len();

    let mut sorted: Vec<f64> = (0..n).map(|r| to_f64(ds.features[[r, feature]])).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite features"));
    // nearest-rank thresholds; the two tails hold the same number of values
    let upper_start = ((quantile * n as f64).ceil() as usize).saturating_sub(1);
    let tail_len = n - upper_start;
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };

    let mut rng = rng::derived_stream(seed, &["atypical_tail"]);
    let mut out = ds.features.clone();
    for row in 0..n {
        if !flags.get(row) {
            continue;
        }
        let upper = to_f64(ds.features[[row, feature]]) >= median;
        let pick = rng.gen_range(0..tail_len);
        let value = if upper {
            sorted[upper_start + pick]
        } else {
            sorted[pick]
        };
        out[[row, feature]] = real(value);
    }
    Ok(out)
}

/// Index of the feature column with maximal `|corr(column, label)|`.
fn most_label_correlated<T: Real>(ds: &Dataset<T>) -> Result<usize, HardnessError> {
    let n = ds.len() as f64;
    let label_mean = ds.labels.iter().map(|&y| y as f64).sum::<f64>() / n;
    let label_var = ds
        .labels
        .iter()
        .map(|&y| (y as f64 - label_mean).powi(2))
        .sum::<f64>()
        / n;

    let mut best = None;
    let mut best_corr = -1.0;
    for col in 0..ds.dims() {
        let mean = (0..ds.len())
            .map(|r| to_f64(ds.features[[r, col]]))
            .sum::<f64>()
            / n;
        let mut cov = 0.0;
        let mut var = 0.0;
        for (row, &y) in ds.labels.iter().enumerate() {
            let dx = to_f64(ds.features[[row, col]]) - mean;
            cov += dx * (y as f64 - label_mean);
            var += dx * dx;
        }
        if var <= 0.0 || label_var <= 0.0 {
            continue;
        }
        let corr = (cov / n).abs() / ((var / n).sqrt() * label_var.sqrt());
        if corr > best_corr {
            best_corr = corr;
            best = Some(col);
        }
    }
    best.ok_or(HardnessError::AllConstantFeatures)
}
