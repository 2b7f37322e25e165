//! Primal network simplex for the transportation problem.
//!
//! The spanning-tree bookkeeping (thread order, successor counts, last
//! successors) follows the classical block-search implementation of the
//! LEMON graph library. Arcs of the complete bipartite graph are implicit:
//! arc `a = i * m + j` joins source `i` to sink `n + j`, and its cost is
//! evaluated on demand, so memory stays linear in the number of nodes plus
//! one tree bit per arc. Supplies are integers and the problem is
//! uncapacitated, so non-tree arcs always carry zero flow.

use std::collections::HashMap;

use crate::error::{Error, Result};

const DIR_UP: i64 = 1;
const DIR_DOWN: i64 = -1;
const INF: i64 = i64::MAX;

/// Optimal basic solution of a transportation problem.
#[derive(Clone, Debug)]
pub struct Solution {
    /// `(i, j, flow)` for every positive flow.
    pub flows: Vec<(usize, usize, i64)>,
    pub cost: f64,
    /// Node potentials: `c_ij + pi_i - pi_{n+j} >= 0` with equality on the tree.
    pub potentials: Vec<f64>,
    pub pivots: usize,
}

struct Solver<'a, F: Fn(usize, usize) -> f64> {
    n: usize,
    m: usize,
    cost: &'a F,
    arc_num: usize,
    node_num: usize,
    root: usize,
    // artificial arcs: index arc_num + u for node u
    art_source: Vec<usize>,
    art_target: Vec<usize>,
    art_cost: Vec<f64>,
    in_tree: Vec<u64>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_dir: Vec<i64>,
    pflow: Vec<i64>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    pi: Vec<f64>,
    dirty_revs: Vec<usize>,
    // pivot state
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: i64,
    in_flow: i64,
    next_arc: usize,
    block_size: usize,
    eps: f64,
}

const NONE: usize = usize::MAX;

impl<'a, F: Fn(usize, usize) -> f64> Solver<'a, F> {
    fn source(&self, a: usize) -> usize {
        if a < self.arc_num {
            a / self.m
        } else {
            self.art_source[a - self.arc_num]
        }
    }

    fn target(&self, a: usize) -> usize {
        if a < self.arc_num {
            self.n + a % self.m
        } else {
            self.art_target[a - self.arc_num]
        }
    }

    fn arc_cost(&self, a: usize) -> f64 {
        if a < self.arc_num {
            (self.cost)(a / self.m, a % self.m)
        } else {
            self.art_cost[a - self.arc_num]
        }
    }

    fn is_tree(&self, a: usize) -> bool {
        a >= self.arc_num || self.in_tree[a / 64] >> (a % 64) & 1 == 1
    }

    fn set_tree(&mut self, a: usize, on: bool) {
        if a < self.arc_num {
            if on {
                self.in_tree[a / 64] |= 1 << (a % 64);
            } else {
                self.in_tree[a / 64] &= !(1 << (a % 64));
            }
        }
    }

    fn new(supply: &[i64], demand: &[i64], cost: &'a F, max_cost: f64) -> Self {
        let (n, m) = (supply.len(), demand.len());
        let node_num = n + m;
        let arc_num = n * m;
        let root = node_num;
        let art = (max_cost + 1.0) * (node_num as f64 + 1.0);
        let mut s = Self {
            n,
            m,
            cost,
            arc_num,
            node_num,
            root,
            art_source: vec![0; node_num],
            art_target: vec![0; node_num],
            art_cost: vec![0.0; node_num],
            in_tree: vec![0; arc_num.div_ceil(64)],
            parent: vec![NONE; node_num + 1],
            pred: vec![NONE; node_num + 1],
            pred_dir: vec![0; node_num + 1],
            pflow: vec![0; node_num + 1],
            thread: vec![0; node_num + 1],
            rev_thread: vec![0; node_num + 1],
            succ_num: vec![0; node_num + 1],
            last_succ: vec![0; node_num + 1],
            pi: vec![0.0; node_num + 1],
            dirty_revs: Vec::new(),
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0,
            in_flow: 0,
            next_arc: 0,
            block_size: ((arc_num as f64).sqrt().ceil() as usize).max(10),
            eps: 1e-12 * (1.0 + max_cost),
        };
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = node_num + 1;
        s.last_succ[root] = root - 1;
        for u in 0..node_num {
            let e = u;
            s.parent[u] = root;
            s.pred[u] = arc_num + e;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.succ_num[u] = 1;
            s.last_succ[u] = u;
            let sup = if u < n { supply[u] } else { -demand[u - n] };
            if sup >= 0 {
                s.pred_dir[u] = DIR_UP;
                s.pi[u] = 0.0;
                s.art_source[e] = u;
                s.art_target[e] = root;
                s.pflow[u] = sup;
                s.art_cost[e] = 0.0;
            } else {
                s.pred_dir[u] = DIR_DOWN;
                s.pi[u] = art;
                s.art_source[e] = root;
                s.art_target[e] = u;
                s.pflow[u] = -sup;
                s.art_cost[e] = art;
            }
        }
        s
    }

    fn reduced(&self, a: usize) -> f64 {
        self.arc_cost(a) + self.pi[self.source(a)] - self.pi[self.target(a)]
    }

    fn find_entering_arc(&mut self) -> bool {
        let mut min = -self.eps;
        let mut found = NONE;
        let mut cnt = self.block_size;
        let total = self.arc_num;
        let mut e = self.next_arc;
        for _ in 0..total {
            if !self.is_tree(e) {
                let c = self.reduced(e);
                if c < min {
                    min = c;
                    found = e;
                }
            }
            e += 1;
            if e == total {
                e = 0;
            }
            cnt -= 1;
            if cnt == 0 {
                if found != NONE {
                    break;
                }
                cnt = self.block_size;
            }
        }
        if found == NONE {
            return false;
        }
        self.in_arc = found;
        self.next_arc = e;
        true
    }

    fn find_join_node(&mut self) {
        let mut u = self.source(self.in_arc);
        let mut v = self.target(self.in_arc);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    fn find_leaving_arc(&mut self) -> bool {
        let first = self.source(self.in_arc);
        let second = self.target(self.in_arc);
        self.delta = INF;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            let d = if self.pred_dir[u] == DIR_DOWN { INF } else { self.pflow[u] };
            if d < self.delta {
                self.delta = d;
                self.u_out = u;
                result = 1;
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            let d = if self.pred_dir[u] == DIR_UP { INF } else { self.pflow[u] };
            if d <= self.delta {
                self.delta = d;
                self.u_out = u;
                result = 2;
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        result != 0
    }

    fn change_flow(&mut self) {
        let val = self.delta;
        self.in_flow = 0;
        if val > 0 {
            self.in_flow = val;
            let mut u = self.source(self.in_arc);
            while u != self.join {
                self.pflow[u] -= self.pred_dir[u] * val;
                u = self.parent[u];
            }
            let mut u = self.target(self.in_arc);
            while u != self.join {
                self.pflow[u] += self.pred_dir[u] * val;
                u = self.parent[u];
            }
        }
        let leaving = self.pred[self.u_out];
        self.set_tree(self.in_arc, true);
        self.set_tree(leaving, false);
    }

    fn update_tree_structure(&mut self) {
        let (u_in, v_in, u_out, join) = (self.u_in, self.v_in, self.u_out, self.join);
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];
        let in_dir = if u_in == self.source(self.in_arc) { DIR_UP } else { DIR_DOWN };

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = in_dir;
            self.pflow[u_in] = self.in_flow;
            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue =
                if old_rev_thread == v_in { self.thread[old_last_succ] } else { self.thread[v_in] };
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);
                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;
                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;
                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;
            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }
            for i in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[i];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }
            let mut tmp_sc = 0usize as isize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                self.pflow[u] = self.pflow[p];
                tmp_sc += self.succ_num[u] as isize - self.succ_num[p] as isize;
                self.succ_num[u] = tmp_sc as usize;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = in_dir;
            self.pflow[u_in] = self.in_flow;
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in { join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }
        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let u_in = self.u_in;
        let sigma = self.pi[self.v_in] - self.pi[u_in] - self.pred_dir[u_in] as f64 * self.arc_cost(self.pred[u_in]);
        let end = self.thread[self.last_succ[u_in]];
        let mut u = u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    /// Recompute all potentials from the tree to remove accumulated drift.
    fn refresh_potentials(&mut self) {
        self.pi[self.root] = 0.0;
        let mut u = self.thread[self.root];
        while u != self.root {
            let p = self.parent[u];
            let c = self.arc_cost(self.pred[u]);
            self.pi[u] = if self.pred_dir[u] == DIR_UP { self.pi[p] - c } else { self.pi[p] + c };
            u = self.thread[u];
        }
    }

    fn run(&mut self, max_pivots: usize) -> Result<usize> {
        let mut pivots = 0;
        loop {
            if !self.find_entering_arc() {
                self.refresh_potentials();
                if !self.find_entering_arc() {
                    break;
                }
            }
            self.find_join_node();
            if !self.find_leaving_arc() || self.delta == INF {
                return Err(Error::Degenerate("transport problem is unbounded".into()));
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
            pivots += 1;
            if pivots % 4096 == 0 {
                self.refresh_potentials();
            }
            if pivots > max_pivots {
                return Err(Error::BudgetExceeded(format!("more than {max_pivots} pivots")));
            }
        }
        Ok(pivots)
    }
}

/// Solve `min Σ c(i,j) f_ij` subject to `Σ_j f_ij = supply_i`,
/// `Σ_i f_ij = demand_j`, `f >= 0`, with integer data.
pub fn solve_transportation<F>(supply: &[i64], demand: &[i64], cost: F) -> Result<Solution>
where
    F: Fn(usize, usize) -> f64,
{
    let (n, m) = (supply.len(), demand.len());
    if n == 0 || m == 0 {
        return Err(Error::EmptySet);
    }
    if supply.iter().chain(demand).any(|&s| s < 0) {
        return Err(Error::InvalidParameter("supplies must be nonnegative".into()));
    }
    if supply.iter().sum::<i64>() != demand.iter().sum::<i64>() {
        return Err(Error::InvalidParameter("total supply differs from total demand".into()));
    }
    let mut max_cost: f64 = 0.0;
    for i in 0..n {
        for j in 0..m {
            let c = cost(i, j);
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidParameter("costs must be finite and nonnegative".into()));
            }
            max_cost = max_cost.max(c);
        }
    }
    let mut solver = Solver::new(supply, demand, &cost, max_cost);
    let pivots = solver.run(200 * (n + m) * (n + m).ilog2().max(1) as usize + 100_000)?;

    let mut flows = Vec::new();
    let mut total = 0.0;
    let mut seen: HashMap<usize, i64> = HashMap::new();
    for u in 0..solver.node_num {
        let a = solver.pred[u];
        if a >= solver.arc_num {
            if solver.pflow[u] != 0 {
                return Err(Error::Degenerate("artificial arc carries flow".into()));
            }
            continue;
        }
        if solver.pflow[u] > 0 {
            seen.insert(a, solver.pflow[u]);
        }
    }
    let mut arcs: Vec<(usize, i64)> = seen.into_iter().collect();
    arcs.sort_unstable();
    for (a, f) in arcs {
        let (i, j) = (a / m, a % m);
        total += f as f64 * cost(i, j);
        flows.push((i, j, f));
    }
    Ok(Solution { flows, cost: total, potentials: solver.pi[..n + m].to_vec(), pivots })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// All permutations of `0..n` by Heap's algorithm.
    fn permutations(n: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut a: Vec<usize> = (0..n).collect();
        let mut c = vec![0; n];
        out.push(a.clone());
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    a.swap(0, i);
                } else {
                    a.swap(c[i], i);
                }
                out.push(a.clone());
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        out
    }

    #[test]
    fn assignment_matches_exhaustive_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 1..=7 {
            for _ in 0..10 {
                let c: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
                let sol = solve_transportation(&vec![1; n], &vec![1; n], |i, j| c[i][j]).unwrap();
                let best = permutations(n)
                    .iter()
                    .map(|p| (0..n).map(|i| c[i][p[i]]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                assert!((sol.cost - best).abs() < 1e-9, "n={n}: {} vs {best}", sol.cost);
            }
        }
    }

    #[test]
    fn unbalanced_sizes_and_duals() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let (n, m) = (13, 7);
        let c: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(0.0..5.0)).collect()).collect();
        let supply = vec![7i64; n];
        let demand = vec![13i64; m];
        let sol = solve_transportation(&supply, &demand, |i, j| c[i][j]).unwrap();
        let mut rows = vec![0; n];
        let mut cols = vec![0; m];
        for &(i, j, f) in &sol.flows {
            rows[i] += f;
            cols[j] += f;
            let slack = c[i][j] + sol.potentials[i] - sol.potentials[n + j];
            assert!(slack.abs() < 1e-9);
        }
        assert_eq!(rows, supply);
        assert_eq!(cols, demand);
        assert!(sol.flows.len() <= n + m - 1);
        for i in 0..n {
            for j in 0..m {
                assert!(c[i][j] + sol.potentials[i] - sol.potentials[n + j] >= -1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve_transportation(&[1, 1], &[1], |_, _| 0.0).is_err());
        assert!(solve_transportation(&[], &[], |_, _| 0.0).is_err());
    }
}
