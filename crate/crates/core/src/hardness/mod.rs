//! Hardness injection: perturbation recipes over a dataset plus the
//! ground-truth flags marking which samples were made hard.
//!
//! Mislabeling kinds touch only labels; OoD and atypical kinds touch only
//! features. Every draw flows from the spec seed, so a perturbation is
//! bit-reproducible from `(dataset, spec)`.

mod feature;
mod grid;
mod mislabel;

pub use feature::{perturb_atypical_tail, perturb_far_ood, perturb_near_ood_covariate};
pub use grid::{perturb_crop_shift, perturb_near_ood_domain, perturb_zoom};
pub use mislabel::{
    build_instance_rules, mislabel_adjacent, mislabel_asymmetric, mislabel_instance,
    mislabel_uniform, RuleMatrix,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, DataError};
use crate::num::Real;
use crate::rng;

#[derive(Debug, Error)]
pub enum HardnessError {
    #[error("proportion {0} outside [0, 0.5]")]
    BadProportion(f64),
    #[error("mislabeling needs at least 2 classes, got {0}")]
    NeedTwoClasses(usize),
    #[error("dirichlet concentration must be positive, got {0}")]
    BadAlpha(f64),
    #[error("noise standard deviation must be positive and finite, got {0}")]
    BadSigma(f64),
    #[error("perturbation requires a grid dataset")]
    MissingGrid,
    #[error("tail quantile {0} outside (0.5, 1)")]
    BadQuantile(f64),
    #[error("shift of {pixels} pixels invalid for a {h}x{w} grid")]
    BadPixels { pixels: usize, h: usize, w: usize },
    #[error("zoom factor {0} must exceed 1")]
    BadZoomFactor(f64),
    #[error("zoom crop smaller than 1x1 for factor {0}")]
    CropTooSmall(f64),
    #[error("no mislabeling rule for class {0}")]
    RuleMissingClass(usize),
    #[error("invalid rule matrix: {0}")]
    BadRules(String),
    #[error("cannot pick a tail feature: all feature columns are constant")]
    AllConstantFeatures,
    #[error("composite perturbation list is empty")]
    EmptyComposite,
    #[error("composite perturbations cannot nest")]
    NestedComposite,
    #[error(transparent)]
    Data(#[from] DataError),
}

/// One hardness recipe from the taxonomy.
///
/// Grid-only kinds (`NearOodDomain`, `AtypicalCropShift`, `AtypicalZoom`)
/// require the dataset to carry a `grid_shape`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HardnessKind {
    MislabelUniform,
    MislabelAsymmetric { alpha: f64 },
    MislabelAdjacent,
    /// `rules: None` derives the rule matrix from the dataset via a PCA
    /// nearest-centroid construction at perturbation time.
    MislabelInstance { rules: Option<RuleMatrix> },
    NearOodCovariate { sigma: f64 },
    NearOodDomain,
    FarOod,
    AtypicalTail { quantile: f64 },
    AtypicalCropShift { pixels: usize },
    AtypicalZoom { factor: f64 },
    /// Applies each sub-perturbation, in order, to the same flag set.
    Composite { parts: Vec<HardnessKind> },
}

impl HardnessKind {
    pub fn name(&self) -> String {
        match self {
            HardnessKind::MislabelUniform => "mislabel_uniform".into(),
            HardnessKind::MislabelAsymmetric { .. } => "mislabel_asymmetric".into(),
            HardnessKind::MislabelAdjacent => "mislabel_adjacent".into(),
            HardnessKind::MislabelInstance { .. } => "mislabel_instance".into(),
            HardnessKind::NearOodCovariate { .. } => "near_ood_covariate".into(),
            HardnessKind::NearOodDomain => "near_ood_domain".into(),
            HardnessKind::FarOod => "far_ood".into(),
            HardnessKind::AtypicalTail { .. } => "atypical_tail".into(),
            HardnessKind::AtypicalCropShift { .. } => "atypical_crop_shift".into(),
            HardnessKind::AtypicalZoom { .. } => "atypical_zoom".into(),
            HardnessKind::Composite { parts } => {
                let inner: Vec<String> = parts.iter().map(|p| p.name()).collect();
                format!("composite({})", inner.join("+"))
            }
        }
    }

    /// Kinds that only make sense on raster datasets.
    pub fn grid_only(&self) -> bool {
        matches!(
            self,
            HardnessKind::NearOodDomain
                | HardnessKind::AtypicalCropShift { .. }
                | HardnessKind::AtypicalZoom { .. }
        )
    }

    /// Label-space perturbations (mislabeling family).
    pub fn is_mislabeling(&self) -> bool {
        matches!(
            self,
            HardnessKind::MislabelUniform
                | HardnessKind::MislabelAsymmetric { .. }
                | HardnessKind::MislabelAdjacent
                | HardnessKind::MislabelInstance { .. }
        )
    }

    /// Far-OoD and atypical kinds default to the restricted proportion grid.
    pub fn restricted_proportions(&self) -> bool {
        match self {
            HardnessKind::FarOod
            | HardnessKind::AtypicalTail { .. }
            | HardnessKind::AtypicalCropShift { .. }
            | HardnessKind::AtypicalZoom { .. } => true,
            HardnessKind::Composite { parts } => {
                parts.iter().any(|p| p.restricted_proportions())
            }
            _ => false,
        }
    }
}

/// A perturbation recipe: which kind, what fraction of samples, which seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessSpec {
    #[serde(flatten)]
    pub kind: HardnessKind,
    pub proportion: f64,
    pub seed: u64,
}

impl HardnessSpec {
    pub fn new(kind: HardnessKind, proportion: f64, seed: u64) -> Self {
        Self {
            kind,
            proportion,
            seed,
        }
    }

    /// Structural validation against a dataset.
    pub fn validate<T: Real>(&self, ds: &Dataset<T>) -> Result<(), HardnessError> {
        if !(0.0..=0.5).contains(&self.proportion) || !self.proportion.is_finite() {
            return Err(HardnessError::BadProportion(self.proportion));
        }
        validate_kind(&self.kind, ds, true)
    }
}

fn validate_kind<T: Real>(
    kind: &HardnessKind,
    ds: &Dataset<T>,
    allow_composite: bool,
) -> Result<(), HardnessError> {
    if kind.grid_only() && ds.grid_shape.is_none() {
        return Err(HardnessError::MissingGrid);
    }
    if let HardnessKind::Composite { parts } = kind {
        if !allow_composite {
            return Err(HardnessError::NestedComposite);
        }
        if parts.is_empty() {
            return Err(HardnessError::EmptyComposite);
        }
        for part in parts {
            validate_kind(part, ds, false)?;
        }
    }
    Ok(())
}

/// Ground-truth hardness indicator: exactly `floor(p * n)` samples flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagSet {
    flags: Vec<bool>,
    count: usize,
}

impl FlagSet {
    pub fn from_flags(flags: Vec<bool>) -> Self {
        let count = flags.iter().filter(|&&f| f).count();
        Self { flags, count }
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    /// Number of flagged (hard) samples.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn get(&self, idx: usize) -> bool {
        self.flags[idx]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.flags
    }

    /// Flagged sample indices in ascending order.
    pub fn indices(&self) -> Vec<usize> {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
            .collect()
    }
}

/// Draw a uniformly random subset of `floor(p * n)` sample indices.
pub fn select_flags(n: usize, p: f64, seed: u64) -> Result<FlagSet, HardnessError> {
    if !(0.0..=0.5).contains(&p) || !p.is_finite() {
        return Err(HardnessError::BadProportion(p));
    }
    let count = (p * n as f64).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng::derived_stream(seed, &["flags"]);
    crate::data::fisher_yates(&mut order, &mut rng);
    let mut flags = vec![false; n];
    for &idx in order.iter().take(count) {
        flags[idx] = true;
    }
    Ok(FlagSet { flags, count })
}

/// Everything needed to reproduce and audit one perturbation draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub kind: String,
    pub spec: HardnessSpec,
    pub flag_indices: Vec<usize>,
    /// Row-stochastic label transition matrix (asymmetric mislabeling).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
    /// Materialized instance-mislabeling rules.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rules: Option<RuleMatrix>,
}

/// A perturbed dataset plus its ground truth and reproduction metadata.
#[derive(Debug, Clone)]
pub struct PerturbOutcome<T> {
    pub dataset: Dataset<T>,
    pub flags: FlagSet,
    pub record: PerturbationRecord,
}

/// Apply a hardness spec: select flags, then dispatch the kind-specific
/// perturbation. Composite kinds share one flag set across all parts.
pub fn perturb<T: Real>(
    ds: &Dataset<T>,
    spec: &HardnessSpec,
) -> Result<PerturbOutcome<T>, HardnessError> {
    spec.validate(ds)?;
    let flags = select_flags(ds.len(), spec.proportion, spec.seed)?;
    let mut record = PerturbationRecord {
        kind: spec.kind.name(),
        spec: spec.clone(),
        flag_indices: flags.indices(),
        transition: None,
        rules: None,
    };
    let mut out = ds.clone();
    match &spec.kind {
        HardnessKind::Composite { parts } => {
            for (idx, part) in parts.iter().enumerate() {
                let sub_seed = rng::derive(spec.seed, &["composite", &idx.to_string()]);
                apply_kind(&mut out, part, &flags, sub_seed, &mut record)?;
            }
        }
        kind => apply_kind(&mut out, kind, &flags, spec.seed, &mut record)?,
    }
    Ok(PerturbOutcome {
        dataset: out,
        flags,
        record,
    })
}

fn apply_kind<T: Real>(
    ds: &mut Dataset<T>,
    kind: &HardnessKind,
    flags: &FlagSet,
    seed: u64,
    record: &mut PerturbationRecord,
) -> Result<(), HardnessError> {
    let k = ds.class_count;
    match kind {
        HardnessKind::MislabelUniform => {
            ds.labels = mislabel_uniform(&ds.labels, flags, k, seed)?;
        }
        HardnessKind::MislabelAsymmetric { alpha } => {
            let (labels, transition) = mislabel_asymmetric(&ds.labels, flags, k, *alpha, seed)?;
            ds.labels = labels;
            record.transition = Some(transition);
        }
        HardnessKind::MislabelAdjacent => {
            ds.labels = mislabel_adjacent(&ds.labels, flags, k, seed)?;
        }
        HardnessKind::MislabelInstance { rules } => {
            let rules = match rules {
                Some(r) => r.clone(),
                None => build_instance_rules(ds)?,
            };
            ds.labels = mislabel_instance(&ds.labels, flags, &rules, seed)?;
            record.rules = Some(rules);
        }
        HardnessKind::NearOodCovariate { sigma } => {
            ds.features = perturb_near_ood_covariate(&ds.features, flags, *sigma, seed)?;
        }
        HardnessKind::NearOodDomain => {
            let grid = ds.grid_shape.ok_or(HardnessError::MissingGrid)?;
            ds.features = perturb_near_ood_domain(&ds.features, flags, grid)?;
        }
        HardnessKind::FarOod => {
            ds.features = perturb_far_ood(&ds.features, flags, seed);
        }
        HardnessKind::AtypicalTail { quantile } => {
            ds.features = perturb_atypical_tail(ds, flags, *quantile, seed)?;
        }
        HardnessKind::AtypicalCropShift { pixels } => {
            let grid = ds.grid_shape.ok_or(HardnessError::MissingGrid)?;
            ds.features = perturb_crop_shift(&ds.features, flags, grid, *pixels, seed)?;
        }
        HardnessKind::AtypicalZoom { factor } => {
            let grid = ds.grid_shape.ok_or(HardnessError::MissingGrid)?;
            ds.features = perturb_zoom(&ds.features, flags, grid, *factor)?;
        }
        HardnessKind::Composite { .. } => return Err(HardnessError::NestedComposite),
    }
    Ok(())
}
