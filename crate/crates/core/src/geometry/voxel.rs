//! Axis-aligned occupancy grids.
//!
//! A [`VoxelSet`] is a finite union of closed cubes
//! `origin + h * (cell + [0,1]^n)`. Cells are stored row-wise: every row is
//! keyed by its first `n - 1` lattice coordinates and holds sorted, disjoint,
//! half-open runs `[start, end)` along the last axis. This keeps large convex
//! blobs compact and makes Minkowski sums and overlap counts run-at-a-time.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::linalg::Point;

/// Half-open run `[start, end)` of lattice cells along the last axis.
pub type Run = (i64, i64);

#[derive(Clone, Debug, PartialEq)]
pub struct VoxelSet {
    dim: usize,
    spacing: f64,
    origin: Point,
    rows: BTreeMap<Vec<i64>, Vec<Run>>,
}

/// Sort runs and merge overlapping or touching ones.
pub(crate) fn normalize_runs(runs: &mut Vec<Run>) {
    runs.retain(|r| r.1 > r.0);
    if runs.len() < 2 {
        return;
    }
    runs.sort_unstable();
    let mut out: Vec<Run> = Vec::with_capacity(runs.len());
    for &(s, e) in runs.iter() {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    *runs = out;
}

/// Length of the intersection of two normalized run lists, the second shifted.
pub(crate) fn runs_overlap(a: &[Run], b: &[Run], shift_b: i64) -> i64 {
    let (mut i, mut j, mut total) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        let (bs, be) = (b[j].0 + shift_b, b[j].1 + shift_b);
        let lo = a[i].0.max(bs);
        let hi = a[i].1.min(be);
        if hi > lo {
            total += hi - lo;
        }
        if a[i].1 < be {
            i += 1;
        } else {
            j += 1;
        }
    }
    total
}

impl VoxelSet {
    pub fn new(dim: usize, spacing: f64, origin: Point) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!("spacing {spacing} must be positive")));
        }
        if origin.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: origin.len() });
        }
        Ok(Self { dim, spacing, origin, rows: BTreeMap::new() })
    }

    pub fn from_cells<I>(dim: usize, spacing: f64, origin: Point, cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<i64>>,
    {
        let mut set = Self::new(dim, spacing, origin)?;
        for c in cells {
            if c.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: c.len() });
            }
            let last = c[dim - 1];
            set.rows.entry(c[..dim - 1].to_vec()).or_default().push((last, last + 1));
        }
        for runs in set.rows.values_mut() {
            normalize_runs(runs);
        }
        Ok(set)
    }

    /// Cells whose centers satisfy `inside`, scanning the lattice box `[lo, hi)`.
    pub fn from_predicate<F>(
        spacing: f64,
        origin: Point,
        lo: &[i64],
        hi: &[i64],
        inside: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> bool,
    {
        let dim = origin.len();
        let mut set = Self::new(dim, spacing, origin)?;
        let mut prefix: Vec<i64> = lo[..dim - 1].to_vec();
        let mut center = vec![0.0; dim];
        'rows: loop {
            for k in 0..dim - 1 {
                center[k] = set.origin[k] + spacing * (prefix[k] as f64 + 0.5);
            }
            let mut runs = Vec::new();
            let mut start: Option<i64> = None;
            for c in lo[dim - 1]..hi[dim - 1] {
                center[dim - 1] = set.origin[dim - 1] + spacing * (c as f64 + 0.5);
                match (inside(&center), start) {
                    (true, None) => start = Some(c),
                    (false, Some(s)) => {
                        runs.push((s, c));
                        start = None;
                    }
                    _ => {}
                }
            }
            if let Some(s) = start {
                runs.push((s, hi[dim - 1]));
            }
            if !runs.is_empty() {
                set.rows.insert(prefix.clone(), runs);
            }
            // odometer over the prefix box
            let mut k = 0;
            loop {
                if k + 1 >= dim {
                    break 'rows;
                }
                prefix[k] += 1;
                if prefix[k] < hi[k] {
                    break;
                }
                prefix[k] = lo[k];
                k += 1;
            }
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn rows(&self) -> &BTreeMap<Vec<i64>, Vec<Run>> {
        &self.rows
    }

    pub(crate) fn from_rows(
        dim: usize,
        spacing: f64,
        origin: Point,
        rows: BTreeMap<Vec<i64>, Vec<Run>>,
    ) -> Self {
        Self { dim, spacing, origin, rows }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn cell_count(&self) -> u64 {
        self.rows
            .values()
            .flat_map(|runs| runs.iter().map(|(s, e)| (e - s) as u64))
            .sum()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Lebesgue measure: `h^n` times the cell count.
    pub fn volume(&self) -> f64 {
        self.cell_count() as f64 * self.cell_volume()
    }

    pub fn insert_run(&mut self, prefix: Vec<i64>, start: i64, end: i64) {
        let runs = self.rows.entry(prefix).or_default();
        runs.push((start, end));
        normalize_runs(runs);
    }

    pub fn insert(&mut self, cell: &[i64]) {
        let last = cell[self.dim - 1];
        self.insert_run(cell[..self.dim - 1].to_vec(), last, last + 1);
    }

    pub fn contains_cell(&self, cell: &[i64]) -> bool {
        let Some(runs) = self.rows.get(&cell[..self.dim - 1]) else {
            return false;
        };
        let c = cell[self.dim - 1];
        let idx = runs.partition_point(|r| r.1 <= c);
        idx < runs.len() && runs[idx].0 <= c
    }

    /// Lattice cell containing a point (cells are half-open on the upper side).
    pub fn cell_of(&self, p: &[f64]) -> Vec<i64> {
        p.iter()
            .zip(&self.origin)
            .map(|(x, o)| ((x - o) / self.spacing).floor() as i64)
            .collect()
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        self.contains_cell(&self.cell_of(p))
    }

    /// Membership in the closed union of cells: `p` counts when any cell whose
    /// closure lies within `tol` of `p` (per axis) is occupied.
    pub fn contains_point_closed(&self, p: &[f64], tol: f64) -> bool {
        let mut q = p.to_vec();
        for mask in 0..(1usize << self.dim) {
            for k in 0..self.dim {
                q[k] = p[k] + if mask >> k & 1 == 1 { tol } else { -tol };
            }
            if self.contains_point(&q) {
                return true;
            }
        }
        false
    }

    pub fn cell_center(&self, cell: &[i64]) -> Point {
        cell.iter()
            .zip(&self.origin)
            .map(|(c, o)| o + self.spacing * (*c as f64 + 0.5))
            .collect()
    }

    pub fn cells(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        self.rows.iter().flat_map(|(prefix, runs)| {
            runs.iter().flat_map(move |&(s, e)| {
                (s..e).map(move |c| {
                    let mut cell = prefix.clone();
                    cell.push(c);
                    cell
                })
            })
        })
    }

    /// Inclusive-exclusive lattice bounding box `[lo, hi)`.
    pub fn bounding_box(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let mut lo = vec![i64::MAX; self.dim];
        let mut hi = vec![i64::MIN; self.dim];
        for (prefix, runs) in &self.rows {
            for k in 0..self.dim - 1 {
                lo[k] = lo[k].min(prefix[k]);
                hi[k] = hi[k].max(prefix[k] + 1);
            }
            lo[self.dim - 1] = lo[self.dim - 1].min(runs[0].0);
            hi[self.dim - 1] = hi[self.dim - 1].max(runs[runs.len() - 1].1);
        }
        (!self.rows.is_empty()).then_some((lo, hi))
    }

    /// Centroid in world coordinates.
    pub fn centroid(&self) -> Option<Point> {
        let n = self.cell_count();
        if n == 0 {
            return None;
        }
        let mut sum = vec![0.0; self.dim];
        for (prefix, runs) in &self.rows {
            for &(s, e) in runs {
                let len = (e - s) as f64;
                for k in 0..self.dim - 1 {
                    sum[k] += len * (prefix[k] as f64 + 0.5);
                }
                // sum of (c + 1/2) for c in [s, e)
                sum[self.dim - 1] += len * (s + e) as f64 / 2.0;
            }
        }
        Some(
            sum.iter()
                .zip(&self.origin)
                .map(|(s, o)| o + self.spacing * s / n as f64)
                .collect(),
        )
    }

    /// Shift by a lattice vector (exact).
    pub fn translate_cells(&self, shift: &[i64]) -> Self {
        let d = self.dim;
        let rows = self
            .rows
            .iter()
            .map(|(prefix, runs)| {
                let p: Vec<i64> = prefix.iter().zip(shift).map(|(a, b)| a + b).collect();
                let r = runs.iter().map(|(s, e)| (s + shift[d - 1], e + shift[d - 1])).collect();
                (p, r)
            })
            .collect();
        Self { rows, ..self.clone_header() }
    }

    /// Shift by an arbitrary vector, moving the origin and keeping cell keys.
    pub fn translate(&self, v: &[f64]) -> Self {
        let mut out = self.clone();
        for (o, x) in out.origin.iter_mut().zip(v) {
            *o += x;
        }
        out
    }

    fn clone_header(&self) -> Self {
        Self {
            dim: self.dim,
            spacing: self.spacing,
            origin: self.origin.clone(),
            rows: BTreeMap::new(),
        }
    }

    /// True when both sets live on the same lattice (same spacing, and
    /// origins differing by a lattice vector within `1e-9` relative).
    pub fn same_lattice(&self, other: &Self) -> bool {
        self.lattice_offset(other).is_some()
    }

    /// Lattice vector `k` with `other.origin = self.origin + h * k`.
    pub fn lattice_offset(&self, other: &Self) -> Option<Vec<i64>> {
        if self.dim != other.dim || ((self.spacing - other.spacing) / self.spacing).abs() > 1e-12 {
            return None;
        }
        let mut k = Vec::with_capacity(self.dim);
        for (a, b) in self.origin.iter().zip(&other.origin) {
            let q = (b - a) / self.spacing;
            let r = q.round();
            if (q - r).abs() > 1e-9 {
                return None;
            }
            k.push(r as i64);
        }
        Some(k)
    }

    /// Re-express `other` on this set's lattice keys. Requires a common lattice.
    pub fn rekey(&self, other: &Self) -> Option<Self> {
        let k = self.lattice_offset(other)?;
        let mut moved = other.translate_cells(&k);
        moved.origin = self.origin.clone();
        Some(moved)
    }

    /// Resample onto this set's lattice by testing cell centers of `other`'s
    /// lattice box against membership in `other`.
    pub fn resample_onto(&self, other: &Self) -> Self {
        if let Some(r) = self.rekey(other) {
            return r;
        }
        let Some((olo, ohi)) = other.bounding_box() else {
            return self.clone_header();
        };
        let lo: Vec<i64> = (0..self.dim)
            .map(|k| {
                let w = other.origin[k] + other.spacing * olo[k] as f64;
                ((w - self.origin[k]) / self.spacing).floor() as i64 - 1
            })
            .collect();
        let hi: Vec<i64> = (0..self.dim)
            .map(|k| {
                let w = other.origin[k] + other.spacing * ohi[k] as f64;
                ((w - self.origin[k]) / self.spacing).ceil() as i64 + 1
            })
            .collect();
        VoxelSet::from_predicate(self.spacing, self.origin.clone(), &lo, &hi, |p| other.contains_point(p))
            .expect("header already validated")
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        let other = self.require_lattice(other)?;
        let mut out = self.clone();
        for (prefix, runs) in &other.rows {
            let entry = out.rows.entry(prefix.clone()).or_default();
            entry.extend_from_slice(runs);
            normalize_runs(entry);
        }
        Ok(out)
    }

    /// Number of common cells with `other` shifted by the lattice vector `shift`.
    pub fn overlap_count(&self, other: &Self, shift: &[i64]) -> u64 {
        let d = self.dim;
        let mut total = 0i64;
        let mut key = vec![0i64; d - 1];
        for (prefix, runs) in &other.rows {
            for k in 0..d - 1 {
                key[k] = prefix[k] + shift[k];
            }
            if let Some(mine) = self.rows.get(&key) {
                total += runs_overlap(mine, runs, shift[d - 1]);
            }
        }
        total as u64
    }

    /// `|self ∩ other|` for sets on a common lattice.
    pub fn intersection_volume(&self, other: &Self) -> Result<f64> {
        let other = self.require_lattice(other)?;
        Ok(self.overlap_count(&other, &vec![0; self.dim]) as f64 * self.cell_volume())
    }

    /// `|self △ other|` for sets on a common lattice.
    pub fn symmetric_difference_volume(&self, other: &Self) -> Result<f64> {
        let inter = self.intersection_volume(other)?;
        Ok(self.volume() + other.volume() - 2.0 * inter)
    }

    fn require_lattice(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        self.rekey(other)
            .ok_or_else(|| Error::InvalidParameter("sets do not share a lattice".into()))
    }

    /// Keep only cells whose centers satisfy `keep`.
    pub fn filter_centers<F: Fn(&[f64]) -> bool>(&self, keep: F) -> Self {
        let cells: Vec<Vec<i64>> = self.cells().filter(|c| keep(&self.cell_center(c))).collect();
        Self::from_cells(self.dim, self.spacing, self.origin.clone(), cells)
            .expect("header already validated")
    }

    /// Remove `count` cells, taking the highest cells along the last axis
    /// first and breaking ties by row order. Deterministic.
    pub fn trim_highest(&mut self, count: u64) {
        let mut remaining = count;
        while remaining > 0 {
            let mut best: Option<(i64, Vec<i64>)> = None;
            for (prefix, runs) in &self.rows {
                let top = runs[runs.len() - 1].1;
                if best.as_ref().is_none_or(|(b, _)| top > *b) {
                    best = Some((top, prefix.clone()));
                }
            }
            let Some((_, prefix)) = best else { return };
            let runs = self.rows.get_mut(&prefix).expect("row exists");
            let last = runs.len() - 1;
            runs[last].1 -= 1;
            if runs[last].1 <= runs[last].0 {
                runs.pop();
            }
            if runs.is_empty() {
                self.rows.remove(&prefix);
            }
            remaining -= 1;
        }
    }

    /// Lattice corner points (in lattice units, relative to the origin) that
    /// can be extreme points of the hull: both end corners of every row.
    pub(crate) fn hull_candidate_corners(&self) -> Vec<Point> {
        let d = self.dim;
        let mut pts = Vec::new();
        for (prefix, runs) in &self.rows {
            let lo = runs[0].0 as f64;
            let hi = runs[runs.len() - 1].1 as f64;
            for mask in 0..(1u32 << (d - 1)) {
                let mut p: Point = (0..d - 1)
                    .map(|k| prefix[k] as f64 + ((mask >> k) & 1) as f64)
                    .collect();
                p.push(lo);
                pts.push(p.clone());
                *p.last_mut().unwrap() = hi;
                pts.push(p);
            }
        }
        pts
    }

    /// World coordinates of the centers of the first and last cell of every
    /// row; their hull is the hull of all cell centers.
    pub fn extreme_centers(&self) -> Vec<Point> {
        let mut pts = Vec::with_capacity(2 * self.rows.len());
        for (prefix, runs) in &self.rows {
            let mut cell = prefix.clone();
            cell.push(runs[0].0);
            pts.push(self.cell_center(&cell));
            *cell.last_mut().unwrap() = runs[runs.len() - 1].1 - 1;
            pts.push(self.cell_center(&cell));
        }
        pts
    }

    /// Text format: header `voxelset <n> <h> <origin...>` then one line per cell.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        write!(s, "voxelset {} {}", self.dim, fmt_f64(self.spacing)).unwrap();
        for o in &self.origin {
            write!(s, " {}", fmt_f64(*o)).unwrap();
        }
        s.push('\n');
        for cell in self.cells() {
            let line: Vec<String> = cell.iter().map(|c| c.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        let perr = |line: usize, m: &str| Error::Parse { line, message: m.to_string() };
        if toks.first() != Some(&"voxelset") || toks.len() < 3 {
            return Err(perr(1, "expected `voxelset <n> <h> <origin...>`"));
        }
        let dim: usize = toks[1].parse().map_err(|_| perr(1, "bad dimension"))?;
        let spacing: f64 = toks[2].parse().map_err(|_| perr(1, "bad spacing"))?;
        if toks.len() != 3 + dim {
            return Err(perr(1, "origin must have n coordinates"));
        }
        let origin = toks[3..]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| perr(1, "bad origin coordinate")))
            .collect::<Result<Vec<_>>>()?;
        let mut cells = Vec::new();
        for (i, line) in lines {
            let cell = line
                .split_whitespace()
                .map(|t| t.parse::<i64>().map_err(|_| perr(i + 1, "bad cell index")))
                .collect::<Result<Vec<_>>>()?;
            if cell.len() != dim {
                return Err(perr(i + 1, "cell must have n indices"));
            }
            cells.push(cell);
        }
        Self::from_cells(dim, spacing, origin, cells)
    }
}

/// Shortest round-trip formatting for reals.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn interval(h: f64, a: i64, b: i64) -> VoxelSet {
        VoxelSet::from_cells(1, h, vec![0.0], (a..b).map(|c| vec![c])).unwrap()
    }

    #[test]
    fn thousand_cells_at_tenth_spacing_is_unit_volume() {
        let cells = (0..10).flat_map(|i| (0..10).flat_map(move |j| (0..10).map(move |k| vec![i, j, k])));
        let s = VoxelSet::from_cells(3, 0.1, vec![0.0; 3], cells).unwrap();
        assert_eq!(s.cell_count(), 1000);
        assert!((s.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn runs_merge_and_membership() {
        let s = VoxelSet::from_cells(2, 1.0, vec![0.0, 0.0], vec![vec![0, 1], vec![0, 2], vec![0, 5]]).unwrap();
        assert_eq!(s.rows()[&vec![0]], vec![(1, 3), (5, 6)]);
        assert!(s.contains_cell(&[0, 2]));
        assert!(!s.contains_cell(&[0, 3]));
        assert!(s.contains_point(&[0.5, 5.5]));
        assert!(!s.contains_point(&[1.5, 5.5]));
    }

    #[test]
    fn text_round_trip() {
        let s = VoxelSet::from_cells(2, 0.25, vec![-1.0, 0.5], vec![vec![0, 0], vec![-3, 7]]).unwrap();
        let t = s.to_text();
        assert!(t.starts_with("voxelset 2 0.25 -1.0 0.5\n"));
        assert_eq!(VoxelSet::from_text(&t).unwrap(), s);
    }

    #[test]
    fn text_errors_carry_line_numbers() {
        let err = VoxelSet::from_text("voxelset 2 1 0 0\n1 2\n3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        assert!(VoxelSet::from_text("voxels 1 1 0").is_err());
    }

    #[test]
    fn trimming_is_highest_first() {
        let mut s = interval(1.0, 0, 10);
        s.trim_highest(3);
        assert_eq!(s.rows()[&vec![]], vec![(0, 7)]);
    }

    #[test]
    fn resampling_onto_finer_lattice() {
        let coarse = interval(1.0, 0, 2);
        let fine = VoxelSet::new(1, 0.5, vec![0.0]).unwrap();
        let r = fine.resample_onto(&coarse);
        assert!((r.volume() - 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn disjoint_union_volume_is_additive(a in 0i64..50, la in 1i64..20, gap in 0i64..10, lb in 1i64..20) {
            let x = interval(0.1, a, a + la);
            let y = interval(0.1, a + la + gap, a + la + gap + lb);
            let u = x.union(&y).unwrap();
            prop_assert_eq!(u.cell_count(), x.cell_count() + y.cell_count());
            prop_assert!((u.volume() - (x.volume() + y.volume())).abs() < 1e-12);
        }

        #[test]
        fn overlap_count_matches_cellwise(cells_a in proptest::collection::vec((0i64..8, 0i64..8), 1..30),
                                          cells_b in proptest::collection::vec((0i64..8, 0i64..8), 1..30),
                                          sx in -3i64..3, sy in -3i64..3) {
            let a = VoxelSet::from_cells(2, 1.0, vec![0.0, 0.0], cells_a.iter().map(|&(x, y)| vec![x, y])).unwrap();
            let b = VoxelSet::from_cells(2, 1.0, vec![0.0, 0.0], cells_b.iter().map(|&(x, y)| vec![x, y])).unwrap();
            let brute = b.cells().filter(|c| a.contains_cell(&[c[0] + sx, c[1] + sy])).count() as u64;
            prop_assert_eq!(a.overlap_count(&b, &[sx, sy]), brute);
        }
    }
}
