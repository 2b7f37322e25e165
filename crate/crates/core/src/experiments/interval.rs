//! Exact interval arithmetic for one-dimensional unions, used as an oracle
//! for voxel deficits.

/// Sort and merge closed intervals, dropping empty ones.
pub fn merge_intervals(intervals: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = intervals.iter().copied().filter(|(a, b)| b > a).collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

pub fn union_length(intervals: &[(f64, f64)]) -> f64 {
    merge_intervals(intervals).iter().map(|(a, b)| b - a).sum()
}

/// `tA + (1-t)B` for unions of intervals: the union of all pairwise sums.
pub fn interval_combination(a: &[(f64, f64)], b: &[(f64, f64)], t: f64) -> Vec<(f64, f64)> {
    let sums: Vec<(f64, f64)> = a
        .iter()
        .flat_map(|&(a0, a1)| b.iter().map(move |&(b0, b1)| (t * a0 + (1.0 - t) * b0, t * a1 + (1.0 - t) * b1)))
        .collect();
    merge_intervals(&sums)
}

/// `|tA + (1-t)B| / |A| - 1`.
pub fn interval_deficit(a: &[(f64, f64)], b: &[(f64, f64)], t: f64) -> f64 {
    union_length(&interval_combination(a, b, t)) / union_length(a) - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merging() {
        assert_eq!(merge_intervals(&[(2.0, 3.0), (0.0, 1.0), (0.5, 2.0), (4.0, 4.0)]), vec![(0.0, 3.0)]);
        assert_eq!(union_length(&[(0.0, 1.0), (2.0, 2.5)]), 1.5);
    }

    #[test]
    fn two_pieces_against_an_interval() {
        // A = [0,1] ∪ [1+g, 2+g], B = [0,2]: tA + (1-t)B = [0, 2 + tg]
        let g = 0.3;
        for t in [0.1, 0.25, 0.5] {
            let d = interval_deficit(&[(0.0, 1.0), (1.0 + g, 2.0 + g)], &[(0.0, 2.0)], t);
            assert!((d - t * g / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn convex_sets_have_zero_deficit() {
        assert!(interval_deficit(&[(0.0, 2.0)], &[(5.0, 7.0)], 0.3).abs() < 1e-15);
    }
}
