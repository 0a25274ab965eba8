//! Label-space perturbations: uniform, asymmetric (Dirichlet), adjacent,
//! and instance-dependent mislabeling. Features are never touched here.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::{FlagSet, HardnessError};
use crate::data::Dataset;
use crate::linalg;
use crate::num::{real, to_f64, Real};
use crate::rng;

/// Per-class mislabeling rules: each class maps to a distribution over
/// permitted wrong classes. No class may map to itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleMatrix {
    /// `rows[c]` lists `(target_class, probability)` pairs for true class `c`.
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl RuleMatrix {
    pub fn new(rows: Vec<Vec<(usize, f64)>>) -> Result<Self, HardnessError> {
        let m = Self { rows };
        m.validate()?;
        Ok(m)
    }

    pub fn class_count(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<(), HardnessError> {
        for (class, row) in self.rows.iter().enumerate() {
            if row.is_empty() {
                return Err(HardnessError::RuleMissingClass(class));
            }
            let mut total = 0.0;
            for &(target, prob) in row {
                if target == class {
                    return Err(HardnessError::BadRules(format!(
                        "class {class} maps to itself"
                    )));
                }
                if !(prob >= 0.0) {
                    return Err(HardnessError::BadRules(format!(
                        "negative probability for class {class}"
                    )));
                }
                total += prob;
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(HardnessError::BadRules(format!(
                    "probabilities for class {class} sum to {total}"
                )));
            }
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, class: usize, rng: &mut R) -> Result<usize, HardnessError> {
        let row = self
            .rows
            .get(class)
            .filter(|r| !r.is_empty())
            .ok_or(HardnessError::RuleMissingClass(class))?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(target, prob) in row {
            acc += prob;
            if u < acc {
                return Ok(target);
            }
        }
        Ok(row.last().expect("non-empty row").0)
    }
}

/// Replace each flagged label with a uniform draw over the other `k - 1`
/// classes.
pub fn mislabel_uniform(
    labels: &[usize],
    flags: &FlagSet,
    k: usize,
    seed: u64,
) -> Result<Vec<usize>, HardnessError> {
    if k < 2 {
        return Err(HardnessError::NeedTwoClasses(k));
    }
    let mut rng = rng::derived_stream(seed, &["mislabel_uniform"]);
    let mut out = labels.to_vec();
    for (i, y) in out.iter_mut().enumerate() {
        if flags.get(i) {
            let draw = rng.gen_range(0..k - 1);
            *y = if draw < *y { draw } else { draw + 1 };
        }
    }
    Ok(out)
}

/// Draw one Dirichlet(alpha) transition row per class over the off-diagonal
/// entries, then resample each flagged label from its class row.
///
/// Returns the new labels and the `k x k` row-stochastic transition matrix
/// (zero diagonal).
pub fn mislabel_asymmetric(
    labels: &[usize],
    flags: &FlagSet,
    k: usize,
    alpha: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<Vec<f64>>), HardnessError> {
    if k < 2 {
        return Err(HardnessError::NeedTwoClasses(k));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(HardnessError::BadAlpha(alpha));
    }
    let mut rng = rng::derived_stream(seed, &["mislabel_asymmetric"]);
    let gamma = Gamma::new(alpha, 1.0).map_err(|_| HardnessError::BadAlpha(alpha))?;
    let mut transition = vec![vec![0.0; k]; k];
    for (i, row) in transition.iter_mut().enumerate() {
        let mut draws = vec![0.0; k - 1];
        let mut total = 0.0;
        for d in draws.iter_mut() {
            *d = gamma.sample(&mut rng);
            total += *d;
        }
        let uniform = 1.0 / (k - 1) as f64;
        for (offset, j) in (0..k).filter(|&j| j != i).enumerate() {
            // a degenerate all-zero draw (underflow at tiny alpha) falls back
            // to the uniform row
            row[j] = if total > 0.0 { draws[offset] / total } else { uniform };
        }
    }

    let mut out = labels.to_vec();
    for (i, y) in out.iter_mut().enumerate() {
        if flags.get(i) {
            *y = sample_categorical(&transition[*y], &mut rng);
        }
    }
    Ok((out, transition))
}

fn sample_categorical<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (j, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = j;
        }
        acc += p;
        if u < acc {
            return j;
        }
    }
    last_nonzero
}

/// Mislabel flagged class `c` to `c - 1` or `c + 1` with equal probability;
/// boundary classes map only inward.
pub fn mislabel_adjacent(
    labels: &[usize],
    flags: &FlagSet,
    k: usize,
    seed: u64,
) -> Result<Vec<usize>, HardnessError> {
    if k < 2 {
        return Err(HardnessError::NeedTwoClasses(k));
    }
    let mut rng = rng::derived_stream(seed, &["mislabel_adjacent"]);
    let mut out = labels.to_vec();
    for (i, y) in out.iter_mut().enumerate() {
        if flags.get(i) {
            *y = if *y == 0 {
                1
            } else if *y == k - 1 {
                k - 2
            } else if rng.gen::<bool>() {
                *y + 1
            } else {
                *y - 1
            };
        }
    }
    Ok(out)
}

/// Build instance-dependent rules: project features onto the top
/// `min(d, 8)` principal components and map each class (with probability 1)
/// to the class whose centroid is nearest in the projected space.
///
/// A degenerate covariance (no variance anywhere) falls back to raw
/// features.
pub fn build_instance_rules<T: Real>(ds: &Dataset<T>) -> Result<RuleMatrix, HardnessError> {
    let k = ds.class_count;
    if k < 2 {
        return Err(HardnessError::NeedTwoClasses(k));
    }
    let counts = ds.class_counts();
    if let Some(class) = counts.iter().position(|&c| c == 0) {
        return Err(HardnessError::RuleMissingClass(class));
    }

    let centroids = class_centroids(ds);
    let projected = match pca_projection(ds) {
        Some(basis) => project_rows(&centroids, &basis),
        None => centroids,
    };

    let mut rows = Vec::with_capacity(k);
    for i in 0..k {
        let mut best = None;
        let mut best_dist = f64::INFINITY;
        for j in 0..k {
            if j == i {
                continue;
            }
            let dist: f64 = (0..projected.ncols())
                .map(|c| {
                    let diff = to_f64(projected[[i, c]]) - to_f64(projected[[j, c]]);
                    diff * diff
                })
                .sum();
            if dist < best_dist {
                best_dist = dist;
                best = Some(j);
            }
        }
        rows.push(vec![(best.expect("k >= 2 gives a candidate"), 1.0)]);
    }
    RuleMatrix::new(rows)
}

fn class_centroids<T: Real>(ds: &Dataset<T>) -> Array2<T> {
    let d = ds.dims();
    let k = ds.class_count;
    let mut sums = Array2::<T>::zeros((k, d));
    let counts = ds.class_counts();
    for (row, &y) in ds.labels.iter().enumerate() {
        for col in 0..d {
            sums[[y, col]] = sums[[y, col]] + ds.features[[row, col]];
        }
    }
    for class in 0..k {
        let n: T = real(counts[class] as f64);
        for col in 0..d {
            sums[[class, col]] = sums[[class, col]] / n;
        }
    }
    sums
}

/// Top `min(d, 8)` principal directions of the centered feature matrix,
/// as a `d x q` column basis. `None` when the covariance is degenerate.
fn pca_projection<T: Real>(ds: &Dataset<T>) -> Option<Array2<T>> {
    let n = ds.len();
    let d = ds.dims();
    let q = d.min(8);
    let n_t: T = real(n as f64);

    let mut means = vec![T::zero(); d];
    for col in 0..d {
        let mut acc = T::zero();
        for row in 0..n {
            acc = acc + ds.features[[row, col]];
        }
        means[col] = acc / n_t;
    }
    let mut cov = Array2::<T>::zeros((d, d));
    for row in 0..n {
        for a in 0..d {
            let da = ds.features[[row, a]] - means[a];
            for b in a..d {
                let db = ds.features[[row, b]] - means[b];
                cov[[a, b]] = cov[[a, b]] + da * db;
            }
        }
    }
    let mut trace = T::zero();
    for a in 0..d {
        for b in a..d {
            cov[[a, b]] = cov[[a, b]] / n_t;
            cov[[b, a]] = cov[[a, b]];
        }
        trace = trace + cov[[a, a]];
    }
    if !trace.is_finite() || trace <= real(1e-12) {
        return None;
    }

    let (_, vectors) = linalg::symmetric_eigen(&cov);
    let mut basis = Array2::<T>::zeros((d, q));
    for col in 0..q {
        for row in 0..d {
            basis[[row, col]] = vectors[[row, col]];
        }
    }
    Some(basis)
}

fn project_rows<T: Real>(rows: &Array2<T>, basis: &Array2<T>) -> Array2<T> {
    let n = rows.nrows();
    let d = rows.ncols();
    let q = basis.ncols();
    let mut out = Array2::<T>::zeros((n, q));
    for i in 0..n {
        for j in 0..q {
            let mut acc = T::zero();
            for c in 0..d {
                acc = acc + rows[[i, c]] * basis[[c, j]];
            }
            out[[i, j]] = acc;
        }
    }
    out
}

/// Resample each flagged label from its class's rule distribution.
pub fn mislabel_instance(
    labels: &[usize],
    flags: &FlagSet,
    rules: &RuleMatrix,
    seed: u64,
) -> Result<Vec<usize>, HardnessError> {
    rules.validate()?;
    if let Some(&y) = labels.iter().find(|&&y| y >= rules.class_count()) {
        return Err(HardnessError::RuleMissingClass(y));
    }
    let mut rng = rng::derived_stream(seed, &["mislabel_instance"]);
    let mut out = labels.to_vec();
    for (i, y) in out.iter_mut().enumerate() {
        if flags.get(i) {
            *y = rules.sample(*y, &mut rng)?;
        }
    }
    Ok(out)
}
