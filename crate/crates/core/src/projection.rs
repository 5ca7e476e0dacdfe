//! Maps feature importances back onto point-cloud points and writes
//! red–blue coloured PLY files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::analysis::MagnitudeProfile;
use crate::data::{FeatureGroupSpec, PointCloudFeatureMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PointImportance {
    pub values: Vec<f64>,
    /// `values / max(values)`, or all zero when every value is zero.
    pub normalized: Vec<f64>,
    pub all_zero: bool,
}

impl PointImportance {
    pub fn from_values(values: Vec<f64>) -> Self {
        let max = values.iter().copied().fold(0.0f64, f64::max);
        let all_zero = max <= 0.0;
        let normalized = if all_zero {
            vec![0.0; values.len()]
        } else {
            values.iter().map(|v| v / max).collect()
        };
        Self {
            values,
            normalized,
            all_zero,
        }
    }
}

/// Weights of the point-mapped groups: the profile restricted to those
/// groups and renormalized jointly to sum to one. Returns `(group, weights)`
/// pairs in layout order.
pub fn point_mapped_weights<'g>(
    profile: &MagnitudeProfile,
    groups: &'g [FeatureGroupSpec],
) -> Result<Vec<(&'g FeatureGroupSpec, Vec<f64>)>> {
    let mapped: Vec<&FeatureGroupSpec> = groups.iter().filter(|g| g.point_mapped).collect();
    if mapped.is_empty() {
        return Err(Error::InvalidArgument("no point-mapped feature groups".into()));
    }
    if let Some(g) = mapped.iter().find(|g| g.offset + g.length > profile.dims()) {
        return Err(Error::DimensionMismatch {
            context: format!("group `{}` end vs profile length", g.name),
            expected: profile.dims(),
            found: g.offset + g.length,
        });
    }
    let subset_mass: f64 = mapped.iter().map(|g| profile.normalized[g.range()].iter().sum::<f64>()).sum();
    Ok(mapped
        .into_iter()
        .map(|g| {
            let w = profile.normalized[g.range()]
                .iter()
                .map(|&v| if subset_mass > 0.0 { v / subset_mass } else { 0.0 })
                .collect();
            (g, w)
        })
        .collect())
}

/// Per-point importance: the sum over point-mapped groups of the weight of
/// the bin each point is assigned to.
pub fn point_importance(
    profile: &MagnitudeProfile,
    map: &PointCloudFeatureMap,
    groups: &[FeatureGroupSpec],
) -> Result<PointImportance> {
    let p = map.point_count();
    if p == 0 {
        return Err(Error::InvalidArgument(format!("cloud `{}` has no points", map.instance_id)));
    }
    let weights = point_mapped_weights(profile, groups)?;
    for name in map.assignments.keys() {
        if !weights.iter().any(|(g, _)| &g.name == name) {
            return Err(Error::InvalidArgument(format!(
                "cloud `{}`: assignment for `{name}`, which is not a point-mapped group",
                map.instance_id
            )));
        }
    }
    let mut values = vec![0.0; p];
    for (g, w) in &weights {
        let bins = map.assignments.get(&g.name).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "cloud `{}`: missing assignments for point-mapped group `{}`",
                map.instance_id, g.name
            ))
        })?;
        if bins.len() != p {
            return Err(Error::DimensionMismatch {
                context: format!("cloud `{}` group `{}` assignments vs points", map.instance_id, g.name),
                expected: p,
                found: bins.len(),
            });
        }
        for (acc, &b) in values.iter_mut().zip(bins) {
            let wb = w.get(b).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "cloud `{}`: bin {b} out of range for group `{}` of length {}",
                    map.instance_id, g.name, g.length
                ))
            })?;
            *acc += wb;
        }
    }
    Ok(PointImportance::from_values(values))
}

/// Linear red–blue ramp: 1 → (255, 0, 0), 0 → (0, 0, 255), rounding half up.
pub fn colorize(importance: &PointImportance) -> Vec<[u8; 3]> {
    importance
        .normalized
        .iter()
        .map(|&t| {
            let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
            let to_byte = |x: f64| (255.0 * x + 0.5).floor() as u8;
            [to_byte(t), 0, to_byte(1.0 - t)]
        })
        .collect()
}

/// ASCII PLY text for a coloured point cloud.
pub fn ply_string(points: &[[f64; 3]], colors: &[[u8; 3]], comment: &str) -> Result<String> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("refusing to write an empty cloud".into()));
    }
    if points.len() != colors.len() {
        return Err(Error::DimensionMismatch {
            context: "PLY colors vs points".into(),
            expected: points.len(),
            found: colors.len(),
        });
    }
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    let comment = comment.replace(['\n', '\r'], " ");
    let _ = writeln!(out, "comment {comment}");
    let _ = writeln!(out, "element vertex {}", points.len());
    for p in ["x", "y", "z"] {
        let _ = writeln!(out, "property float {p}");
    }
    for p in ["red", "green", "blue"] {
        let _ = writeln!(out, "property uchar {p}");
    }
    out.push_str("element face 0\nproperty list uchar int vertex_indices\nend_header\n");
    for (p, c) in points.iter().zip(colors) {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            p[0] as f32, p[1] as f32, p[2] as f32, c[0], c[1], c[2]
        );
    }
    Ok(out)
}

pub fn export_cloud(points: &[[f64; 3]], colors: &[[u8; 3]], path: &Path) -> Result<()> {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let text = ply_string(points, colors, &format!("importance {stem}"))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
