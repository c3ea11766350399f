//! Combinatorial p-modulus of the paths joining two plates.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::capacity::{capacity, CondenserSpec};
use crate::error::{Error, Result};
use crate::netgraph::{NetGraph, VertexFn, VertexSet};
use crate::penergy::SolverOptions;

/// A path as a vertex sequence.
pub type VertexPath = Vec<usize>;

/// Sum of `rho` over the vertices of `path`.
pub fn rho_length(rho: &[f64], path: &[usize]) -> f64 {
    path.iter().map(|&v| rho[v]).sum()
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Vertex-weighted distances from `sources` inside `allowed`: a path costs
/// the sum of `rho` over all its vertices, the first one included.
fn vertex_dijkstra(graph: &NetGraph, rho: &[f64], sources: &VertexSet, allowed: &[bool]) -> (Vec<f64>, Vec<usize>) {
    let n = graph.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    for s in sources.iter() {
        if allowed[s] && rho[s] < dist[s] {
            dist[s] = rho[s];
            heap.push(Entry(rho[s], s));
        }
    }
    while let Some(Entry(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &w in graph.neighbors(v) {
            if !allowed[w] {
                continue;
            }
            let nd = d + rho[w];
            if nd < dist[w] {
                dist[w] = nd;
                prev[w] = v;
                heap.push(Entry(nd, w));
            }
        }
    }
    (dist, prev)
}

fn trace(prev: &[usize], mut v: usize) -> VertexPath {
    let mut path = vec![v];
    while prev[v] != usize::MAX {
        v = prev[v];
        path.push(v);
    }
    path.reverse();
    path
}

fn check_plates(graph: &NetGraph, spec: &CondenserSpec) -> Result<Vec<bool>> {
    let n = graph.n();
    if spec.a0.is_empty() || spec.a1.is_empty() {
        return Err(Error::Input("condenser plates must be nonempty".into()));
    }
    if spec.a0.iter().chain(spec.a1.iter()).any(|v| v >= n) {
        return Err(Error::Input("plate vertex out of range".into()));
    }
    if !spec.a0.intersection(&spec.a1).is_empty() {
        return Err(Error::Input("condenser plates intersect".into()));
    }
    let allowed = match &spec.a2 {
        Some(a2) => a2.mask(n),
        None => vec![true; n],
    };
    if spec.a0.iter().chain(spec.a1.iter()).any(|v| !allowed[v]) {
        return Err(Error::Input("plates must lie inside the ambient set".into()));
    }
    Ok(allowed)
}

/// A `rho`-shortest path from `a0` to `a1` with all vertices in `a2`.
pub fn rho_shortest_path(graph: &NetGraph, rho: &[f64], spec: &CondenserSpec) -> Result<Option<(VertexPath, f64)>> {
    if rho.len() != graph.n() || rho.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
        return Err(Error::Input("rho must be finite, nonnegative and total on the graph".into()));
    }
    let allowed = check_plates(graph, spec)?;
    let (dist, prev) = vertex_dijkstra(graph, rho, &spec.a0, &allowed);
    let best = spec.a1.iter().filter(|&v| dist[v].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b]));
    Ok(best.map(|t| (trace(&prev, t), dist[t])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusOptions {
    /// Relative gap between the certified upper bound and the dual lower
    /// bound at which the cutting plane stops.
    pub tol: f64,
    /// Constraint violation at which the inner dual ascent stops.
    pub inner_tol: f64,
    pub max_rounds: usize,
    /// Dual sweeps between two separation rounds.
    pub sweeps_per_round: usize,
    /// Paths added per round.
    pub batch: usize,
    /// Required length of every path; 1 in the definition.
    pub unit: f64,
}

impl Default for ModulusOptions {
    fn default() -> Self {
        ModulusOptions { tol: 1e-6, inner_tol: 1e-8, max_rounds: 100_000, sweeps_per_round: 2, batch: 8, unit: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusResult {
    /// `sum rho_star^p`, an upper bound within `tol` of the modulus.
    pub value: f64,
    /// Admissible density: every path has `rho_star`-length at least `unit`.
    pub rho_star: VertexFn,
    pub active_paths: Vec<VertexPath>,
    /// Min over active paths of `L(path) - unit` under `rho_star`.
    pub admissibility_slack: f64,
    pub lower_bound: f64,
    pub duality_gap_estimate: f64,
    pub rounds: usize,
    pub p: f64,
}

/// Dual of `min (1/p) sum rho^p` subject to `L_rho(path) >= unit` over a
/// finite family, solved by exact coordinate ascent on the multipliers.
/// The density is `rho = load^{1/(p-1)}` where `load(z)` sums the
/// multipliers of the paths through `z`.
struct PathDual {
    p: f64,
    unit: f64,
    paths: Vec<VertexPath>,
    lambda: Vec<f64>,
    load: Vec<f64>,
}

impl PathDual {
    fn new(n: usize, p: f64, unit: f64) -> Self {
        PathDual { p, unit, paths: Vec::new(), lambda: Vec::new(), load: vec![0.0; n] }
    }

    fn rho_of(&self, load: f64) -> f64 {
        if load <= 0.0 {
            0.0
        } else {
            load.powf(1.0 / (self.p - 1.0))
        }
    }

    fn rho(&self) -> VertexFn {
        self.load.iter().map(|&s| self.rho_of(s)).collect()
    }


    /// Moves `lambda[k]` to the maximizer of the dual along that coordinate;
    /// returns the constraint violation before the move.
    fn update(&mut self, k: usize) -> f64 {
        let lam = self.lambda[k];
        let path = std::mem::take(&mut self.paths[k]);
        let target = self.unit;
        let r = 1.0 / (self.p - 1.0);
        // load >= lambda on the path, so every load + delta stays >= 0 for
        // delta >= -lambda and the length is smooth and increasing there
        let eval = |delta: f64| -> (f64, f64) {
            let mut f = -target;
            let mut df = 0.0;
            for &z in &path {
                let t = (self.load[z] + delta).max(0.0);
                if t > 0.0 {
                    let pw = t.powf(r);
                    f += pw;
                    df += r * pw / t;
                }
            }
            (f, df)
        };
        let (f0, df0) = eval(0.0);
        let violation = if lam > 0.0 { f0.abs() } else { (-f0).max(0.0) };
        let delta = if eval(-lam).0 >= 0.0 {
            -lam
        } else {
            let (mut lo, mut hi) = (-lam, f64::INFINITY);
            let (mut x, mut f, mut df) = (0.0, f0, df0);
            if f > 0.0 {
                hi = 0.0;
            } else {
                lo = 0.0;
            }
            for _ in 0..100 {
                if f.abs() <= 1e-15 * target {
                    break;
                }
                let newton = if df > 0.0 && df.is_finite() { x - f / df } else { f64::NAN };
                x = if newton > lo && newton < hi {
                    newton
                } else if hi.is_finite() {
                    0.5 * (lo + hi)
                } else {
                    // grow until the length passes the target
                    let fresh = (target / path.len() as f64).powf(self.p - 1.0);
                    lo + 2.0 * (lo.abs() + lam).max(fresh)
                };
                (f, df) = eval(x);
                if f > 0.0 {
                    hi = x;
                } else {
                    lo = x;
                }
                if hi - lo <= 1e-16 * (hi.abs() + lam + 1e-300) {
                    break;
                }
            }
            x
        };
        for &z in &path {
            self.load[z] = (self.load[z] + delta).max(0.0);
        }
        self.lambda[k] = lam + delta;
        self.paths[k] = path;
        violation
    }

    /// Up to `max_sweeps` passes over the family; returns the largest
    /// violation seen in the last pass.
    fn ascend(&mut self, tol: f64, max_sweeps: usize) -> f64 {
        let mut worst = f64::INFINITY;
        for _ in 0..max_sweeps {
            worst = 0.0;
            for k in 0..self.paths.len() {
                worst = worst.max(self.update(k));
            }
            if worst <= tol * self.unit {
                break;
            }
        }
        worst
    }

    /// `p` times the dual objective: a lower bound on the modulus of the
    /// current family.
    fn lower_bound(&self) -> f64 {
        let q = self.p / (self.p - 1.0);
        let lin: f64 = self.lambda.iter().sum::<f64>() * self.unit;
        let conj: f64 = self.load.iter().filter(|&&s| s > 0.0).map(|&s| s.powf(q)).sum::<f64>() / q;
        self.p * (lin - conj)
    }
}

fn pow_sum(rho: &[f64], p: f64) -> f64 {
    rho.iter().filter(|&&r| r > 0.0).map(|&r| r.powf(p)).sum()
}

/// Combinatorial p-modulus of the paths from `a0` to `a1` inside `a2`, by a
/// cutting plane over `rho`-shortest paths.
pub fn p_modulus(graph: &NetGraph, spec: &CondenserSpec, p: f64, opts: &ModulusOptions) -> Result<ModulusResult> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("p must exceed 1, got {p}")));
    }
    if !(opts.unit > 0.0) {
        return Err(Error::Input("unit must be positive".into()));
    }
    let n = graph.n();
    let allowed = check_plates(graph, spec)?;
    let (dist, prev) = vertex_dijkstra(graph, &vec![1.0; n], &spec.a0, &allowed);
    let Some(first) = spec.a1.iter().filter(|&v| dist[v].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b])) else {
        return Ok(ModulusResult {
            value: 0.0,
            rho_star: vec![0.0; n],
            active_paths: Vec::new(),
            admissibility_slack: f64::INFINITY,
            lower_bound: 0.0,
            duality_gap_estimate: 0.0,
            rounds: 0,
            p,
        });
    };
    let mut dual = PathDual::new(n, p, opts.unit);
    let mut seen: HashSet<VertexPath> = HashSet::new();
    let path = trace(&prev, first);
    seen.insert(path.clone());
    dual.paths.push(path);
    dual.lambda.push(0.0);

    let (mut best_upper, mut best_rho) = (f64::INFINITY, Vec::new());
    let mut lower = 0.0f64;
    for round in 1..=opts.max_rounds {
        let violation = dual.ascend(opts.inner_tol, opts.sweeps_per_round);
        lower = lower.max(dual.lower_bound());
        let rho = dual.rho();
        let (from0, prev0) = vertex_dijkstra(graph, &rho, &spec.a0, &allowed);
        let (from1, prev1) = vertex_dijkstra(graph, &rho, &spec.a1, &allowed);
        let min_len = spec.a1.iter().map(|v| from0[v]).fold(f64::INFINITY, f64::min);
        if min_len > 0.0 {
            let scale = opts.unit / min_len;
            let upper = pow_sum(&rho, p) * scale.powf(p);
            if upper < best_upper {
                best_upper = upper;
                best_rho = rho.iter().map(|r| r * scale).collect();
            }
        }
        if best_upper.is_finite() && best_upper - lower <= opts.tol * best_upper {
            let slack = dual.paths.iter().map(|th| rho_length(&best_rho, th) - opts.unit).fold(f64::INFINITY, f64::min);
            return Ok(ModulusResult {
                value: best_upper,
                rho_star: best_rho,
                active_paths: dual.paths,
                admissibility_slack: slack,
                lower_bound: lower,
                duality_gap_estimate: best_upper - lower,
                rounds: round,
                p,
            });
        }
        // the shortest path through v has length from0 + from1 - rho(v);
        // add the most violated ones
        let mut through: Vec<(f64, usize)> = (0..n)
            .filter(|&v| allowed[v] && from0[v].is_finite() && from1[v].is_finite())
            .map(|v| (from0[v] + from1[v] - rho[v], v))
            .filter(|&(l, _)| l < opts.unit * (1.0 - opts.inner_tol))
            .collect();
        through.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut added = 0;
        for &(_, v) in &through {
            let mut path = trace(&prev0, v);
            let mut w = v;
            while prev1[w] != usize::MAX {
                w = prev1[w];
                path.push(w);
            }
            if seen.insert(path.clone()) {
                dual.paths.push(path);
                dual.lambda.push(0.0);
                added += 1;
                if added >= opts.batch {
                    break;
                }
            }
        }
        if added == 0 && violation <= opts.inner_tol * opts.unit {
            // every shortest path is already in the family and the dual is
            // settled; only a tighter inner solve can close the gap
            dual.ascend(opts.inner_tol * 1e-3, 100 * opts.sweeps_per_round);
        }
    }
    Err(Error::ModulusBudget { iterations: opts.max_rounds, lower, upper: best_upper })
}

/// Every simple path from `a0` to `a1` inside `a2` that meets `a1` only at
/// its last vertex; longer paths contain one of these and add no constraint.
pub fn enumerate_paths(graph: &NetGraph, spec: &CondenserSpec, limit: usize) -> Result<Vec<VertexPath>> {
    let allowed = check_plates(graph, spec)?;
    let is_target = spec.a1.mask(graph.n());
    let mut out = Vec::new();
    let mut on_path = vec![false; graph.n()];
    let mut stack = Vec::new();
    fn dfs(
        graph: &NetGraph,
        v: usize,
        allowed: &[bool],
        is_target: &[bool],
        on_path: &mut [bool],
        stack: &mut Vec<usize>,
        out: &mut Vec<VertexPath>,
        limit: usize,
    ) -> bool {
        stack.push(v);
        on_path[v] = true;
        let mut ok = true;
        if is_target[v] {
            out.push(stack.clone());
            ok = out.len() <= limit;
        } else {
            for &w in graph.neighbors(v) {
                if allowed[w] && !on_path[w] && !dfs(graph, w, allowed, is_target, on_path, stack, out, limit) {
                    ok = false;
                    break;
                }
            }
        }
        on_path[v] = false;
        stack.pop();
        ok
    }
    for s in spec.a0.iter() {
        if !dfs(graph, s, &allowed, &is_target, &mut on_path, &mut stack, &mut out, limit) {
            return Err(Error::Resource(format!("more than {limit} paths")));
        }
    }
    Ok(out)
}

pub const BRUTE_MAX_VERTICES: usize = 12;
pub const BRUTE_MAX_PATHS: usize = 100_000;

/// Modulus of the full enumerated path family by a log-barrier interior
/// point method; for small graphs only.
pub fn brute_modulus(graph: &NetGraph, spec: &CondenserSpec, p: f64, unit: f64) -> Result<f64> {
    if graph.n() > BRUTE_MAX_VERTICES {
        return Err(Error::Resource(format!("brute force is limited to {BRUTE_MAX_VERTICES} vertices")));
    }
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p must exceed 1, got {p}")));
    }
    let paths = enumerate_paths(graph, spec, BRUTE_MAX_PATHS)?;
    if paths.is_empty() {
        return Ok(0.0);
    }
    let mut index = vec![usize::MAX; graph.n()];
    let mut vars = Vec::new();
    for path in &paths {
        for &v in path {
            if index[v] == usize::MAX {
                index[v] = vars.len();
                vars.push(v);
            }
        }
    }
    let k = vars.len();
    let rows: Vec<Vec<usize>> = paths.iter().map(|path| path.iter().map(|&v| index[v]).collect()).collect();
    let m = rows.len();
    // every path has at least two vertices, so rho = unit is strictly feasible
    let mut x = vec![unit; k];
    let objective = |x: &[f64]| -> f64 { x.iter().map(|v| v.powf(p)).sum() };
    let barrier = |x: &[f64], t: f64| -> f64 {
        if x.iter().any(|&v| v <= 0.0) {
            return f64::INFINITY;
        }
        let mut f = t * objective(x) - x.iter().map(|v| v.ln()).sum::<f64>();
        for row in &rows {
            let s: f64 = row.iter().map(|&i| x[i]).sum::<f64>() - unit;
            if s <= 0.0 {
                return f64::INFINITY;
            }
            f -= s.ln();
        }
        f
    };
    let mut t = 1.0 / objective(&x);
    loop {
        for _ in 0..200 {
            let mut g = DVector::from_fn(k, |i, _| t * p * x[i].powf(p - 1.0) - 1.0 / x[i]);
            let mut h = DMatrix::from_fn(k, k, |i, j| {
                if i == j {
                    t * p * (p - 1.0) * x[i].powf(p - 2.0) + 1.0 / (x[i] * x[i])
                } else {
                    0.0
                }
            });
            for row in &rows {
                let s: f64 = row.iter().map(|&i| x[i]).sum::<f64>() - unit;
                for &i in row {
                    g[i] -= 1.0 / s;
                    for &j in row {
                        h[(i, j)] += 1.0 / (s * s);
                    }
                }
            }
            let Some(chol) = h.cholesky() else {
                return Err(Error::NonConvergence { iterations: 0, residual: f64::NAN });
            };
            let d = chol.solve(&(-&g));
            let decrement = -g.dot(&d);
            if decrement < 1e-20 {
                break;
            }
            let f0 = barrier(&x, t);
            let mut step = 1.0;
            loop {
                let trial: Vec<f64> = (0..k).map(|i| x[i] + step * d[i]).collect();
                let f = barrier(&trial, t);
                if f <= f0 - 0.25 * step * decrement {
                    x = trial;
                    break;
                }
                step *= 0.5;
                if step < 1e-20 {
                    break;
                }
            }
            if step < 1e-20 {
                break;
            }
        }
        // barrier gap bound: (constraints + positivity terms) / t
        let gap = (m + k) as f64 / t;
        if gap <= 1e-10 * objective(&x) {
            return Ok(objective(&x));
        }
        t *= 8.0;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparabilityReport {
    pub capacity: f64,
    pub modulus: f64,
    /// `(Psi(eps) / Phi(eps)) cap / mod`.
    pub ratio: Option<f64>,
    pub band: f64,
    pub in_band: bool,
    pub degenerate: bool,
}

/// Default band `(N + 1)^p` from the maximal degree `N`.
pub fn default_band(graph: &NetGraph, p: f64) -> f64 {
    let deg = (0..graph.n()).map(|v| graph.degree(v)).max().unwrap_or(0);
    ((deg + 1) as f64).powf(p)
}

pub fn check_mod_cap_comparability(
    graph: &NetGraph,
    spec: &CondenserSpec,
    p: f64,
    band: Option<f64>,
    solver: &SolverOptions,
    opts: &ModulusOptions,
) -> Result<ComparabilityReport> {
    let cap = capacity(graph, spec, p, solver)?.value;
    let modulus = p_modulus(graph, spec, p, opts)?.value;
    let band = band.unwrap_or_else(|| default_band(graph, p));
    let raw = cap / graph.conductance_factor();
    let degenerate = raw == 0.0 && modulus == 0.0;
    let ratio = (!degenerate).then(|| raw / modulus);
    let in_band = ratio.is_some_and(|r| r.is_finite() && r >= 1.0 / band && r <= band);
    Ok(ComparabilityReport { capacity: cap, modulus, ratio, band, in_band, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penergy::tests::path;
    use crate::scaling::PowerScaling;

    fn graph(n: usize, edges: &[(usize, usize)]) -> NetGraph {
        let coords = (0..n).map(|i| [i as f64, 0.0]).collect();
        NetGraph::from_edges(coords, 1, 1.0, PowerScaling::volume(1.0), PowerScaling::walk(2.0), edges.to_vec(), vec![1.0; edges.len()])
    }

    fn plates(a0: &[usize], a1: &[usize]) -> CondenserSpec {
        CondenserSpec::new(VertexSet::new(a0.to_vec()), VertexSet::new(a1.to_vec()))
    }

    #[test]
    fn shortest_path_on_a_path() {
        let g = path(3);
        let (p, l) = rho_shortest_path(&g, &[0.1, 0.5, 0.2], &plates(&[0], &[2])).unwrap().unwrap();
        assert_eq!(p, vec![0, 1, 2]);
        assert!((l - 0.8).abs() < 1e-15);
        let (_, l) = rho_shortest_path(&g, &[0.0; 3], &plates(&[0], &[2])).unwrap().unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn single_path_modulus() {
        let g = path(5);
        for p in [1.5, 2.0, 3.0] {
            let r = p_modulus(&g, &plates(&[0], &[4]), p, &ModulusOptions::default()).unwrap();
            let want = 5f64.powf(1.0 - p);
            assert!((r.value - want).abs() < 1e-6 * want, "p={p} {}", r.value);
            assert!(r.rho_star.iter().all(|&x| (x - 0.2).abs() < 1e-6));
        }
    }

    #[test]
    fn two_disjoint_paths_and_four_cycle() {
        // 0-1-2-3 and 0'-4-5-3' sharing no vertex: plates {0,6}, {3,7}
        let g = graph(8, &[(0, 1), (1, 2), (2, 3), (6, 4), (4, 5), (5, 7)]);
        let r = p_modulus(&g, &plates(&[0, 6], &[3, 7]), 2.0, &ModulusOptions::default()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-6);
        let c4 = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let s = plates(&[0], &[2]);
        // both paths contain the two corners: rho = (0.4, 0.2, 0.4, 0.2)
        let brute = brute_modulus(&c4, &s, 2.0, 1.0).unwrap();
        assert!((brute - 0.4).abs() < 1e-8, "{brute}");
        let cut = p_modulus(&c4, &s, 2.0, &ModulusOptions::default()).unwrap();
        assert!((cut.value - 0.4).abs() < 1e-6);
    }

    #[test]
    fn disconnected_plates_have_zero_modulus() {
        let g = graph(4, &[(0, 1), (2, 3)]);
        let r = p_modulus(&g, &plates(&[0], &[3]), 2.0, &ModulusOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(brute_modulus(&g, &plates(&[0], &[3]), 2.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn unit_scales_by_power() {
        let g = graph(5, &[(0, 1), (1, 2), (2, 4), (0, 3), (3, 4), (1, 3)]);
        let s = plates(&[0], &[4]);
        let one = p_modulus(&g, &s, 3.0, &ModulusOptions::default()).unwrap().value;
        let two = p_modulus(&g, &s, 3.0, &ModulusOptions { unit: 2.0, ..Default::default() }).unwrap().value;
        assert!((two / one - 8.0).abs() < 1e-5);
    }

    #[test]
    fn path_comparability_in_band() {
        let g = path(5);
        let rep = check_mod_cap_comparability(&g, &plates(&[0], &[4]), 2.0, Some(2.0), &SolverOptions::default(), &ModulusOptions::default()).unwrap();
        let want = 5.0 / 4.0;
        assert!((rep.ratio.unwrap() - want).abs() < 1e-5);
        assert!(rep.in_band);
    }
}
