//! Per-cone masses and the balancing translation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::linalg::{solve, Point};
use crate::geometry::polytope::{clip_by, enumerate_vertices, Halfspace, Polytope};
use crate::geometry::voxel::VoxelSet;
use crate::optim::nelder_mead;
use crate::reduction::simplex::{cone_membership, ConeFamily};

/// Volume of the box `[lo, hi]` cut by the given halfspaces.
pub(crate) fn clipped_box_volume(lo: &[f64], hi: &[f64], hs: &[Halfspace]) -> f64 {
    let dim = lo.len();
    match dim {
        1 => {
            let (mut a, mut b) = (lo[0], hi[0]);
            for h in hs {
                let (nx, c) = (h.normal[0], h.offset);
                if nx > 0.0 {
                    b = b.min(c / nx);
                } else if nx < 0.0 {
                    a = a.max(c / nx);
                } else if c < 0.0 {
                    return 0.0;
                }
            }
            (b - a).max(0.0)
        }
        2 => {
            let mut poly = vec![vec![lo[0], lo[1]], vec![hi[0], lo[1]], vec![hi[0], hi[1]], vec![lo[0], hi[1]]];
            for h in hs {
                poly = clip_by(&poly, h);
                if poly.len() < 3 {
                    return 0.0;
                }
            }
            crate::geometry::convex2d::polygon_area(&poly).max(0.0)
        }
        _ => {
            let mut all: Vec<Halfspace> = hs.to_vec();
            for k in 0..dim {
                let mut e = vec![0.0; dim];
                e[k] = 1.0;
                all.push(Halfspace { normal: e.clone(), offset: hi[k] });
                e[k] = -1.0;
                all.push(Halfspace { normal: e, offset: -lo[k] });
            }
            let verts = enumerate_vertices(dim, &all);
            if verts.len() <= dim {
                return 0.0;
            }
            Polytope::from_vertices(dim, verts).map(|p| p.volume()).unwrap_or(0.0)
        }
    }
}

/// Exact volumes `|(X + shift) ∩ C_i|` for every cone of the family.
///
/// Cells whose corners all lie in one cone count whole; the few cells cut by
/// cone boundaries are clipped exactly.
pub fn cone_masses(x: &VoxelSet, family: &ConeFamily, shift: &[f64]) -> Vec<f64> {
    let dim = x.dim();
    let h = x.spacing();
    let cell = x.cell_volume();
    let tol = 1e-12 * h;
    let mut masses = vec![0.0; family.len()];
    let mut corner = vec![0.0; dim];
    for c in x.cells() {
        let lo: Point = (0..dim).map(|k| x.origin()[k] + shift[k] + h * c[k] as f64).collect();
        let center: Point = lo.iter().map(|v| v + 0.5 * h).collect();
        let i = cone_membership(family, &center);
        let mut whole = true;
        for mask in 0..(1usize << dim) {
            for k in 0..dim {
                corner[k] = lo[k] + if mask >> k & 1 == 1 { h } else { 0.0 };
            }
            if !family.contains(i, &corner, tol) {
                whole = false;
                break;
            }
        }
        if whole {
            masses[i] += cell;
            continue;
        }
        let hi: Point = lo.iter().map(|v| v + h).collect();
        let parts: Vec<f64> = family.cones.iter().map(|hs| clipped_box_volume(&lo, &hi, hs)).collect();
        // distribute the cell exactly; renormalise away clipping round-off
        let total: f64 = parts.iter().sum();
        for (m, p) in masses.iter_mut().zip(&parts) {
            *m += if total > 0.0 { cell * p / total } else { 0.0 };
        }
    }
    masses
}

/// Per-cone masses counting each cell wholly in the cone of its center.
pub fn cone_masses_by_center(x: &VoxelSet, family: &ConeFamily, shift: &[f64]) -> Vec<f64> {
    let mut masses = vec![0.0; family.len()];
    let cell = x.cell_volume();
    for c in x.cells() {
        let p: Point = x.cell_center(&c).iter().zip(shift).map(|(a, b)| a + b).collect();
        masses[cone_membership(family, &p)] += cell;
    }
    masses
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Balance {
    pub translation: Point,
    /// `max_C ||A ∩ C| - |(B + v) ∩ C||`.
    pub residual: f64,
    /// Residual after every accepted step of the polishing stage; nonincreasing.
    pub history: Vec<f64>,
    pub masses_a: Vec<f64>,
    pub masses_b: Vec<f64>,
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Translation `v` with `|A ∩ C| = |(B + v) ∩ C|` for every cone `C`, to
/// within `1e-6 |A|`.
///
/// Nelder-Mead from eight starts on the cell-center masses finds the basin;
/// a damped Gauss-Newton iteration on the exact masses then polishes the
/// solution. `seed` drives the random starts.
pub fn balancing_translation(a: &VoxelSet, b: &VoxelSet, family: &ConeFamily, seed: u64) -> Result<Balance> {
    let dim = a.dim();
    if b.dim() != dim || family.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: b.dim() });
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let (va, vb) = (a.volume(), b.volume());
    if (va - vb).abs() > 1e-9 * va {
        return Err(Error::VolumeMismatch { a: va, b: vb });
    }
    let tol = 1e-6 * va;
    let ma = cone_masses(a, family, &vec![0.0; dim]);
    let exact = |v: &[f64]| cone_masses(b, family, v);

    let zero = vec![0.0; dim];
    let mb0 = exact(&zero);
    if max_gap(&ma, &mb0) <= tol {
        let residual = max_gap(&ma, &mb0);
        return Ok(Balance { translation: zero, residual, history: vec![residual], masses_a: ma, masses_b: mb0 });
    }

    // coarse stage
    let ma_center = cone_masses_by_center(a, family, &zero);
    let merit_center = |v: &[f64]| {
        let mb = cone_masses_by_center(b, family, v);
        ma_center.iter().zip(&mb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
    };
    let (blo, bhi) = {
        let (lo, hi) = b.bounding_box().expect("nonempty");
        let h = b.spacing();
        let o = b.origin();
        let lo: Point = (0..dim).map(|k| o[k] + h * lo[k] as f64).collect();
        let hi: Point = (0..dim).map(|k| o[k] + h * hi[k] as f64).collect();
        (lo, hi)
    };
    let width = (0..dim).map(|k| bhi[k] - blo[k]).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ca = a.centroid().expect("nonempty");
    let cb = b.centroid().expect("nonempty");
    let mut starts: Vec<Point> = vec![ca.iter().zip(&cb).map(|(x, y)| x - y).collect()];
    while starts.len() < 8 {
        starts.push((0..dim).map(|_| rng.random_range(-0.5..0.5) * width).collect());
    }
    let mut candidates: Vec<(f64, Point)> = Vec::new();
    for s in &starts {
        let m = nelder_mead(merit_center, s, 0.1 * width, 0.0, 200 * (dim + 1));
        candidates.push((m.value, m.x));
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0));

    // polishing stage on exact masses
    let mut best: Option<Balance> = None;
    for (_, start) in candidates.iter().take(3) {
        let result = polish(&ma, start, &exact, b.spacing(), tol);
        let better = best.as_ref().is_none_or(|b| result.residual < b.residual);
        if better {
            best = Some(result);
        }
        if best.as_ref().is_some_and(|b| b.residual <= tol) {
            break;
        }
    }
    let best = best.expect("at least one start");
    if best.residual <= tol {
        Ok(best)
    } else {
        Err(Error::NonConvergence { message: "balancing translation".into(), residual: best.residual })
    }
}

fn polish<F>(ma: &[f64], start: &[f64], exact: &F, h: f64, tol: f64) -> Balance
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let dim = start.len();
    let m = ma.len();
    let mut v = start.to_vec();
    let mut mb = exact(&v);
    let mut r: Vec<f64> = ma.iter().zip(&mb).map(|(x, y)| y - x).collect();
    let norm2 = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();
    let mut history = vec![max_gap(ma, &mb)];
    let fd = 1e-3 * h;
    for _ in 0..60 {
        if max_gap(ma, &mb) <= tol {
            break;
        }
        // forward-difference Jacobian of the residual
        let mut jac = vec![vec![0.0; dim]; m];
        for k in 0..dim {
            let mut w = v.clone();
            w[k] += fd;
            let mk = exact(&w);
            for i in 0..m {
                jac[i][k] = (mk[i] - mb[i]) / fd;
            }
        }
        // normal equations with Levenberg damping
        let mut step = None;
        for damping in [0.0, 1e-8, 1e-4, 1e-1] {
            let mut jtj = vec![vec![0.0; dim]; dim];
            let mut jtr = vec![0.0; dim];
            for i in 0..m {
                for p in 0..dim {
                    jtr[p] -= jac[i][p] * r[i];
                    for q in 0..dim {
                        jtj[p][q] += jac[i][p] * jac[i][q];
                    }
                }
            }
            let scale = (0..dim).map(|p| jtj[p][p]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            for (p, row) in jtj.iter_mut().enumerate() {
                row[p] += damping * scale;
            }
            if let Some(s) = solve(&jtj, &jtr) {
                if s.iter().all(|x| x.is_finite()) {
                    step = Some(s);
                    break;
                }
            }
        }
        let Some(step) = step else { break };
        let mut accepted = false;
        let mut alpha = 1.0;
        for _ in 0..30 {
            let w: Point = v.iter().zip(&step).map(|(x, s)| x + alpha * s).collect();
            let mw = exact(&w);
            let rw: Vec<f64> = ma.iter().zip(&mw).map(|(x, y)| y - x).collect();
            if norm2(&rw) < norm2(&r) {
                v = w;
                mb = mw;
                r = rw;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        history.push(max_gap(ma, &mb));
    }
    // the sup-norm can wiggle while the merit decreases; report the running minimum
    for i in 1..history.len() {
        history[i] = history[i].min(history[i - 1]);
    }
    Balance { translation: v, residual: max_gap(ma, &mb), history, masses_a: ma.to_vec(), masses_b: mb }
}
