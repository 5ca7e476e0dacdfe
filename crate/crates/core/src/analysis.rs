//! Feature importances read off the columns of a learned transform, and the
//! KL-divergence association between affordances built on them.

use std::cmp::Ordering;
use std::fmt::Write as _;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{validate_groups, FeatureGroupSpec};
use crate::error::{Error, Result};

/// Columns with norm at or below this fraction of the largest norm count as
/// discarded.
pub const DEFAULT_KEPT_THRESHOLD: f64 = 1e-3;
/// Lower bound on every fitted variance.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Column norms of `L` and the same vector normalized to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeProfile {
    pub column_norms: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl MagnitudeProfile {
    pub fn from_norms(column_norms: Vec<f64>) -> Result<Self> {
        if column_norms.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("column norms must be finite and non-negative".into()));
        }
        let total: f64 = column_norms.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument(
                "transform is identically zero; no magnitude profile".into(),
            ));
        }
        let normalized = column_norms.iter().map(|v| v / total).collect();
        Ok(Self {
            column_norms,
            normalized,
        })
    }

    pub fn dims(&self) -> usize {
        self.column_norms.len()
    }
}

pub fn magnitude_profile(l: &Array2<f64>) -> Result<MagnitudeProfile> {
    MagnitudeProfile::from_norms(
        l.axis_iter(Axis(1))
            .map(|c| c.dot(&c).sqrt())
            .collect(),
    )
}

/// Fraction of columns whose norm exceeds `rel_threshold · max norm`.
pub fn kept_fraction(profile: &MagnitudeProfile, rel_threshold: f64) -> f64 {
    let max = profile.column_norms.iter().copied().fold(0.0f64, f64::max);
    let cut = rel_threshold * max;
    let kept = profile.column_norms.iter().filter(|&&v| v > cut).count();
    kept as f64 / profile.dims() as f64
}

/// Element-wise mean of normalized profiles, re-normalized.
pub fn mean_profile(profiles: &[MagnitudeProfile]) -> Result<MagnitudeProfile> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::InvalidArgument("no profiles to average".into()))?;
    let d = first.dims();
    let mut norms = vec![0.0; d];
    for p in profiles {
        if p.dims() != d {
            return Err(Error::DimensionMismatch {
                context: "profile averaging".into(),
                expected: d,
                found: p.dims(),
            });
        }
        for (acc, v) in norms.iter_mut().zip(&p.normalized) {
            *acc += v;
        }
    }
    for v in &mut norms {
        *v /= profiles.len() as f64;
    }
    MagnitudeProfile::from_norms(norms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStat {
    pub name: String,
    /// Sum of the profile's normalized entries inside the group.
    pub mass: f64,
    /// KL divergence (nats) of the within-group distribution from uniform.
    pub kl_vs_uniform: f64,
    /// The group carries no mass; its KL is reported as 0.
    pub zero_mass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub groups: Vec<GroupStat>,
}

/// `Σ p ln(p · n)` over a distribution of `n` bins, with `0 ln 0 = 0`.
pub fn kl_vs_uniform(p: &[f64]) -> f64 {
    let n = p.len() as f64;
    let kl: f64 = p
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * (v * n).ln())
        .sum();
    kl.clamp(0.0, n.ln())
}

pub fn group_summary(profile: &MagnitudeProfile, groups: &[FeatureGroupSpec]) -> Result<GroupSummary> {
    validate_groups(groups, profile.dims())?;
    let groups = groups
        .iter()
        .map(|g| {
            let slice = &profile.normalized[g.range()];
            let mass: f64 = slice.iter().sum();
            if mass > 0.0 {
                let within: Vec<f64> = slice.iter().map(|v| v / mass).collect();
                GroupStat {
                    name: g.name.clone(),
                    mass,
                    kl_vs_uniform: kl_vs_uniform(&within),
                    zero_mass: false,
                }
            } else {
                GroupStat {
                    name: g.name.clone(),
                    mass: 0.0,
                    kl_vs_uniform: 0.0,
                    zero_mass: true,
                }
            }
        })
        .collect();
    Ok(GroupSummary { groups })
}

/// Diagonal Gaussian over normalized magnitude profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMagnitudeModel {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Per-dimension mean and population variance (floored) over runs.
pub fn fit_gaussian(profiles: &[MagnitudeProfile]) -> Result<GaussianMagnitudeModel> {
    if profiles.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "fitting a Gaussian needs at least 2 profiles, got {}",
            profiles.len()
        )));
    }
    let d = profiles[0].dims();
    if let Some(p) = profiles.iter().find(|p| p.dims() != d) {
        return Err(Error::DimensionMismatch {
            context: "Gaussian fit".into(),
            expected: d,
            found: p.dims(),
        });
    }
    let r = profiles.len() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|j| profiles.iter().map(|p| p.normalized[j]).sum::<f64>() / r)
        .collect();
    let variance = (0..d)
        .map(|j| {
            let v = profiles
                .iter()
                .map(|p| (p.normalized[j] - mean[j]).powi(2))
                .sum::<f64>()
                / r;
            v.max(VARIANCE_FLOOR)
        })
        .collect();
    Ok(GaussianMagnitudeModel { mean, variance })
}

/// `KL(P ‖ Q)` in nats for diagonal Gaussians.
pub fn kl_gaussian(p: &GaussianMagnitudeModel, q: &GaussianMagnitudeModel) -> Result<f64> {
    let d = p.mean.len();
    for len in [p.variance.len(), q.mean.len(), q.variance.len()] {
        if len != d {
            return Err(Error::DimensionMismatch {
                context: "Gaussian KL".into(),
                expected: d,
                found: len,
            });
        }
    }
    let mut sum = 0.0;
    for j in 0..d {
        let vp = p.variance[j].max(VARIANCE_FLOOR);
        let vq = q.variance[j].max(VARIANCE_FLOOR);
        let dm = q.mean[j] - p.mean[j];
        sum += vp / vq + dm * dm / vq - 1.0 + (vq / vp).ln();
    }
    Ok(0.5 * sum)
}

/// Pairwise KL between per-affordance models, rows sorted by name.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationTable {
    pub names: Vec<String>,
    /// `kl[[a, b]] = KL(model_a ‖ model_b)`.
    pub kl: Array2<f64>,
    /// Up to three nearest other affordances per row, with their divergence.
    pub top3: Vec<Vec<(String, f64)>>,
}

pub fn associate(models: &[(String, GaussianMagnitudeModel)]) -> Result<AssociationTable> {
    if models.len() < 2 {
        return Err(Error::InvalidArgument("association needs at least two affordances".into()));
    }
    let mut sorted: Vec<&(String, GaussianMagnitudeModel)> = models.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidArgument(format!("duplicate affordance `{}`", w[0].0)));
    }
    let a_count = sorted.len();
    let mut kl = Array2::<f64>::zeros((a_count, a_count));
    for a in 0..a_count {
        for b in 0..a_count {
            if a != b {
                kl[[a, b]] = kl_gaussian(&sorted[a].1, &sorted[b].1)?.max(0.0);
            }
        }
    }
    let top3 = (0..a_count)
        .map(|a| {
            let mut others: Vec<usize> = (0..a_count).filter(|&b| b != a).collect();
            others.sort_by(|&x, &y| {
                kl[[a, x]]
                    .partial_cmp(&kl[[a, y]])
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| sorted[x].0.cmp(&sorted[y].0))
            });
            others
                .into_iter()
                .take(3)
                .map(|b| (sorted[b].0.clone(), kl[[a, b]]))
                .collect()
        })
        .collect();
    Ok(AssociationTable {
        names: sorted.iter().map(|m| m.0.clone()).collect(),
        kl,
        top3,
    })
}

impl AssociationTable {
    /// Full matrix as CSV; rows are the reference distribution.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("affordance");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (a, n) in self.names.iter().enumerate() {
            out.push_str(n);
            for b in 0..self.names.len() {
                let _ = write!(out, ",{}", self.kl[[a, b]]);
            }
            out.push('\n');
        }
        out
    }

    /// Fixed-width text table: affordance followed by its three nearest.
    pub fn render_text(&self) -> String {
        let cell = |e: Option<&(String, f64)>| match e {
            Some((n, v)) => format!("{n} ({v:.3})"),
            None => "-".to_owned(),
        };
        let rows: Vec<[String; 4]> = self
            .names
            .iter()
            .zip(&self.top3)
            .map(|(n, t)| [n.clone(), cell(t.first()), cell(t.get(1)), cell(t.get(2))])
            .collect();
        let header = ["Affordance".to_owned(), "NN1".into(), "NN2".into(), "NN3".into()];
        let mut widths = header.clone().map(|h| h.len());
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, r: &[String; 4]| {
            let cells: Vec<String> = r.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
        };
        line(&mut out, &header);
        let _ = writeln!(
            out,
            "{}",
            widths.map(|w| "-".repeat(w)).join("-+-")
        );
        for r in &rows {
            line(&mut out, r);
        }
        out
    }
}
