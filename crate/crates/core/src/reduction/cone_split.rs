//! Per-cone deficits after balancing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::deficit::{bm_deficit, convex_hull, Measured};
use crate::geometry::minkowski::minkowski_combine;
use crate::geometry::voxel::VoxelSet;
use crate::reduction::balance::cone_masses;
use crate::reduction::simplex::{cone_membership, ConeFamily};

/// One row of the per-cone report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeRow {
    pub cone_index: usize,
    #[serde(rename = "volume_A")]
    pub volume_a: f64,
    #[serde(rename = "volume_B")]
    pub volume_b: f64,
    /// `|t A_C + (1-t) B_C| / (t|A_C|^{1/n} + (1-t)|B_C|^{1/n})^n - 1`.
    pub deficit: f64,
    pub grid_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeSplit {
    pub rows: Vec<ConeRow>,
    pub global: Measured,
    /// `Σ_C |t(A∩C) + (1-t)(B∩C)|`.
    pub parts_volume: f64,
    /// `|tA + (1-t)B|`.
    pub global_volume: f64,
    /// Volume of part cells whose centers fall outside their own cone; the
    /// only place where parts of different cones can overlap.
    pub leak: f64,
    /// `w_n = (n+1)(4n³)^n`.
    pub w_n: f64,
}

impl ConeSplit {
    /// `Σ_C |t(A∩C)+(1-t)(B∩C)| ≤ |tA+(1-t)B|` up to the boundary leak.
    pub fn superadditive(&self) -> bool {
        self.parts_volume <= self.global_volume + self.leak + 1e-9 * self.global_volume
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("rows serialize")
    }
}

/// `(n+1)(4n³)^n`.
pub fn w_n(n: usize) -> f64 {
    (n as f64 + 1.0) * (4.0 * (n as f64).powi(3)).powi(n as i32)
}

/// Split `A` and `B` by the cones of `F` (cells by their centers) and measure
/// the deficit of every piece.
pub fn cone_split_deficits(a: &VoxelSet, b: &VoxelSet, family: &ConeFamily, t: f64) -> Result<ConeSplit> {
    let dim = family.dim();
    if a.dim() != dim || b.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: b.dim() });
    }
    let zero = vec![0.0; dim];
    let (ma, mb) = (cone_masses(a, family, &zero), cone_masses(b, family, &zero));
    let gap = ma.iter().zip(&mb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if gap > 1e-6 * a.volume() {
        return Err(Error::Precondition(format!("cone masses are unbalanced (gap {gap:.3e})")));
    }
    let global = bm_deficit(a, b, t)?;
    let global_volume = minkowski_combine(a, b, t)?.set.volume();

    let mut rows = Vec::with_capacity(family.len());
    let (mut parts_volume, mut leak) = (0.0, 0.0);
    for i in 0..family.len() {
        let ai = a.filter_centers(|p| cone_membership(family, p) == i);
        let bi = b.filter_centers(|p| cone_membership(family, p) == i);
        if ai.is_empty() || bi.is_empty() {
            rows.push(ConeRow { cone_index: i, volume_a: ai.volume(), volume_b: bi.volume(), deficit: 0.0, grid_error: 0.0 });
            continue;
        }
        let sum = minkowski_combine(&ai, &bi, t)?;
        let (va, vb) = (ai.volume(), bi.volume());
        let nf = dim as f64;
        let bm = (t * va.powf(1.0 / nf) + (1.0 - t) * vb.powf(1.0 / nf)).powi(dim as i32);
        let staircase = 0.5 * (ai.spacing() * convex_hull(&ai)?.surface_area() + bi.spacing() * convex_hull(&bi)?.surface_area());
        let vol = sum.set.volume();
        parts_volume += vol;
        leak += sum.set.filter_centers(|p| cone_membership(family, p) != i).volume();
        rows.push(ConeRow {
            cone_index: i,
            volume_a: va,
            volume_b: vb,
            deficit: vol / bm - 1.0,
            grid_error: (sum.volume_error + staircase) / bm,
        });
    }
    Ok(ConeSplit { rows, global, parts_volume, global_volume, leak, w_n: w_n(dim) })
}
