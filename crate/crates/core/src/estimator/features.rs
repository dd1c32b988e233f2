use serde::{Deserialize, Serialize};

use crate::dictionary::Dictionary;
use crate::{dft, CVec, Error, Result, C64};

/// Which inner products form the magnitude part of the features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    /// `|F y|`, the unitary DFT.
    Dft,
    /// `|Dᴴ y|`, a learned dictionary.
    Dictionary,
}

/// Order of the magnitude part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MagnitudeOrder {
    /// Transform-index order.
    Natural,
    /// Sorted largest first. Discards *where* the energy sits and keeps *how
    /// it is spread*, which is what a sparsity count depends on.
    Descending,
}

/// Whether the raw observation is appended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RawPart {
    /// `[Re y₀, Im y₀, Re y₁, …]` after the magnitudes.
    Interleaved,
    Omitted,
}

/// How a complex observation becomes a real feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureEncoding {
    pub transform: TransformKind,
    pub order: MagnitudeOrder,
    pub raw: RawPart,
}

impl Default for FeatureEncoding {
    fn default() -> Self {
        Self { transform: TransformKind::Dft, order: MagnitudeOrder::Natural, raw: RawPart::Interleaved }
    }
}

impl FeatureEncoding {
    pub(crate) fn tags(&self) -> [u64; 3] {
        [
            match self.transform {
                TransformKind::Dft => 1,
                TransformKind::Dictionary => 2,
            },
            match self.order {
                MagnitudeOrder::Natural => 1,
                MagnitudeOrder::Descending => 2,
            },
            match self.raw {
                RawPart::Interleaved => 1,
                RawPart::Omitted => 2,
            },
        ]
    }

    pub(crate) fn from_tags(t: [u64; 3]) -> Result<Self> {
        let bad = || Error::Format(format!("unknown feature-encoding tags {t:?}"));
        Ok(Self {
            transform: match t[0] {
                1 => TransformKind::Dft,
                2 => TransformKind::Dictionary,
                _ => return Err(bad()),
            },
            order: match t[1] {
                1 => MagnitudeOrder::Natural,
                2 => MagnitudeOrder::Descending,
                _ => return Err(bad()),
            },
            raw: match t[2] {
                1 => RawPart::Interleaved,
                2 => RawPart::Omitted,
                _ => return Err(bad()),
            },
        })
    }
}

/// The transform a feature extraction projects onto.
#[derive(Debug, Clone, Copy)]
pub enum Transform<'a> {
    Dft,
    Dictionary(&'a Dictionary),
}

impl Transform<'_> {
    pub fn kind(&self) -> TransformKind {
        match self {
            Transform::Dft => TransformKind::Dft,
            Transform::Dictionary(_) => TransformKind::Dictionary,
        }
    }
}

/// Real feature vector fed to the regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Feature dimension `p_in` for signals of length `n`.
pub fn feature_dim(n: usize, transform: Transform<'_>, enc: &FeatureEncoding) -> usize {
    let p = match transform {
        Transform::Dft => n,
        Transform::Dictionary(d) => d.len(),
    };
    p + match enc.raw {
        RawPart::Interleaved => 2 * n,
        RawPart::Omitted => 0,
    }
}

/// `v = [p ‖ raw]` with `p` the magnitudes of `⟨y, column⟩` over the transform.
pub fn extract_features(y: &[C64], transform: Transform<'_>, enc: &FeatureEncoding) -> Result<FeatureVector> {
    if transform.kind() != enc.transform {
        return Err(Error::InvalidInput(format!(
            "encoding expects {:?} features but a {:?} transform was supplied",
            enc.transform,
            transform.kind()
        )));
    }
    let mut p: Vec<f64> = match transform {
        Transform::Dft => dft::forward(y).iter().map(|c| c.norm()).collect(),
        Transform::Dictionary(d) => {
            crate::error::ensure_dim("feature signal length", d.rows(), y.len())?;
            d.atoms().ad_mul(&CVec::from_column_slice(y)).iter().map(|c| c.norm()).collect()
        }
    };
    if enc.order == MagnitudeOrder::Descending {
        p.sort_by(|a, b| b.total_cmp(a));
    }
    if enc.raw == RawPart::Interleaved {
        p.reserve(2 * y.len());
        for z in y {
            p.push(z.re);
            p.push(z.im);
        }
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("observation contains non-finite values".into()));
    }
    Ok(FeatureVector(p))
}
