//! The epsilon-approximation graph: edges, intrinsic metric, balls, degree,
//! 5B covers and the linear local connectivity check.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scaling::PowerScaling;
use crate::spaces::{dist, GridIndex, PointCloud};

pub type VertexFn = Vec<f64>;
pub type VertexMeasure = Vec<f64>;

/// Sorted set of vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VertexSet(Vec<usize>);

impl VertexSet {
    pub fn new(mut ids: Vec<usize>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        VertexSet(ids)
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        VertexSet(mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect())
    }

    pub fn all(n: usize) -> Self {
        VertexSet((0..n).collect())
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &v in &self.0 {
            m[v] = true;
        }
        m
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        VertexSet::new(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.iter().copied().filter(|&v| !other.contains(v)).collect())
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.iter().copied().filter(|&v| other.contains(v)).collect())
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.0.iter().all(|&v| other.contains(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Intrinsic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeRule {
    /// `d < 5/2 eps`
    Strict,
    /// `d <= 5/2 eps`
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
}

/// Undirected graph on an epsilon-net with Euclidean edge lengths.
#[derive(Debug, Clone)]
pub struct NetGraph {
    coords: Vec<[f64; 2]>,
    dim: usize,
    epsilon: f64,
    phi: PowerScaling,
    psi: PowerScaling,
    edges: Vec<(usize, usize)>,
    lengths: Vec<f64>,
    offsets: Vec<usize>,
    nbrs: Vec<usize>,
    nbr_len: Vec<f64>,
}

pub fn build_graph(
    cloud: &PointCloud,
    net: &[usize],
    epsilon: f64,
    phi: PowerScaling,
    psi: PowerScaling,
) -> Result<NetGraph> {
    build_graph_with_rule(cloud, net, epsilon, phi, psi, EdgeRule::Strict)
}

pub fn build_graph_with_rule(
    cloud: &PointCloud,
    net: &[usize],
    epsilon: f64,
    phi: PowerScaling,
    psi: PowerScaling,
    rule: EdgeRule,
) -> Result<NetGraph> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Input(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut ids = net.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.iter().any(|&i| i >= cloud.len()) {
        return Err(Error::Input("net index out of range".into()));
    }
    let coords: Vec<[f64; 2]> = ids.iter().map(|&i| cloud.points[i]).collect();
    NetGraph::from_coords(coords, cloud.kind.dim(), epsilon, phi, psi, rule)
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    // reversed for a min-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl NetGraph {
    pub fn from_coords(
        coords: Vec<[f64; 2]>,
        dim: usize,
        epsilon: f64,
        phi: PowerScaling,
        psi: PowerScaling,
        rule: EdgeRule,
    ) -> Result<NetGraph> {
        let reach = 2.5 * epsilon;
        let mut grid = GridIndex::new(reach);
        for (i, p) in coords.iter().enumerate() {
            grid.insert(i, p);
        }
        let mut edges = Vec::new();
        let mut lengths = Vec::new();
        for (i, p) in coords.iter().enumerate() {
            let mut near = Vec::new();
            grid.for_each_near(p, 1, |j| {
                if j > i {
                    let d = dist(p, &coords[j]);
                    let keep = match rule {
                        EdgeRule::Strict => d < reach,
                        EdgeRule::Closed => d <= reach,
                    };
                    if keep {
                        near.push((j, d));
                    }
                }
            });
            near.sort_unstable_by_key(|x| x.0);
            for (j, d) in near {
                edges.push((i, j));
                lengths.push(d);
            }
        }
        Ok(Self::from_edges(coords, dim, epsilon, phi, psi, edges, lengths))
    }

    /// Assembles a graph from an explicit edge list (`a < b` not required).
    pub fn from_edges(
        coords: Vec<[f64; 2]>,
        dim: usize,
        epsilon: f64,
        phi: PowerScaling,
        psi: PowerScaling,
        edges: Vec<(usize, usize)>,
        lengths: Vec<f64>,
    ) -> NetGraph {
        let n = coords.len();
        let mut pairs: Vec<((usize, usize), f64)> = edges
            .into_iter()
            .zip(lengths)
            .map(|((a, b), l)| ((a.min(b), a.max(b)), l))
            .collect();
        pairs.sort_by(|x, y| x.0.cmp(&y.0));
        pairs.dedup_by(|x, y| x.0 == y.0);
        let edges: Vec<(usize, usize)> = pairs.iter().map(|x| x.0).collect();
        let lengths: Vec<f64> = pairs.iter().map(|x| x.1).collect();
        let mut deg = vec![0usize; n + 1];
        for &(a, b) in &edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut fill = offsets.clone();
        let mut nbrs = vec![0usize; offsets[n]];
        let mut nbr_len = vec![0.0; offsets[n]];
        for (&(a, b), &l) in edges.iter().zip(&lengths) {
            nbrs[fill[a]] = b;
            nbr_len[fill[a]] = l;
            fill[a] += 1;
            nbrs[fill[b]] = a;
            nbr_len[fill[b]] = l;
            fill[b] += 1;
        }
        NetGraph { coords, dim, epsilon, phi, psi, edges, lengths, offsets, nbrs, nbr_len }
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn phi(&self) -> PowerScaling {
        self.phi
    }

    pub fn psi(&self) -> PowerScaling {
        self.psi
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Replaces the walk scaling; the geometry is unchanged.
    pub fn set_psi(&mut self, psi: PowerScaling) {
        self.psi = psi;
    }

    pub fn with_psi(&self, psi: PowerScaling) -> NetGraph {
        let mut g = self.clone();
        g.psi = psi;
        g
    }

    pub fn coords(&self, v: usize) -> [f64; 2] {
        self.coords[v]
    }

    pub fn all_coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.nbrs[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn neighbor_lengths(&self, v: usize) -> &[f64] {
        &self.nbr_len[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// `Phi(eps)`, the mass of every vertex.
    pub fn vertex_mass(&self) -> f64 {
        self.phi.at(self.epsilon)
    }

    /// `Phi(eps) / Psi(eps)`.
    pub fn conductance_factor(&self) -> f64 {
        self.phi.at(self.epsilon) / self.psi.at(self.epsilon)
    }

    pub fn measure(&self, set: &VertexSet) -> f64 {
        self.vertex_mass() * set.len() as f64
    }

    pub fn euclidean(&self, a: usize, b: usize) -> f64 {
        dist(&self.coords[a], &self.coords[b])
    }

    /// Vertex nearest to a point in the plane (Euclidean).
    pub fn nearest_vertex(&self, x: f64, y: f64) -> usize {
        let p = [x, y];
        (0..self.n())
            .min_by(|&a, &b| dist(&self.coords[a], &p).total_cmp(&dist(&self.coords[b], &p)))
            .unwrap_or(0)
    }

    /// Shortest-path distances from a set of sources, exploring only up to
    /// `cutoff` (vertices farther away stay at `+inf`).
    pub fn distances_multi(&self, sources: &[usize], cutoff: f64) -> Vec<f64> {
        let mut d = vec![f64::INFINITY; self.n()];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            d[s] = 0.0;
            heap.push(Item(0.0, s));
        }
        while let Some(Item(dv, v)) = heap.pop() {
            if dv > d[v] || dv >= cutoff {
                continue;
            }
            for (&w, &l) in self.neighbors(v).iter().zip(self.neighbor_lengths(v)) {
                let nd = dv + l;
                if nd < d[w] {
                    d[w] = nd;
                    heap.push(Item(nd, w));
                }
            }
        }
        d
    }

    pub fn distances_within(&self, source: usize, cutoff: f64) -> Vec<f64> {
        self.distances_multi(&[source], cutoff)
    }

    pub fn distances(&self, source: usize, metric: MetricKind) -> Vec<f64> {
        match metric {
            MetricKind::Intrinsic => self.distances_within(source, f64::INFINITY),
            MetricKind::Euclidean => (0..self.n()).map(|v| self.euclidean(source, v)).collect(),
        }
    }

    pub fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &w in self.neighbors(v) {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || self.components().iter().all(|&c| c == 0)
    }

    /// Vertices outside `set` adjacent to it.
    pub fn boundary_ring(&self, set: &VertexSet) -> VertexSet {
        let inside = set.mask(self.n());
        let mut ring = vec![false; self.n()];
        for v in set.iter() {
            for &w in self.neighbors(v) {
                if !inside[w] {
                    ring[w] = true;
                }
            }
        }
        VertexSet::from_mask(&ring)
    }

    pub fn to_json(&self) -> Result<String> {
        let vertices: Vec<Value> = self.coords.iter().map(|p| json!(p[..self.dim].to_vec())).collect();
        let edges: Vec<Value> = self
            .edges
            .iter()
            .zip(&self.lengths)
            .map(|(&(a, b), &l)| json!([a, b, l]))
            .collect();
        let v = json!({
            "epsilon": self.epsilon,
            "phi": {"exp": self.phi.exponent, "coeff": self.phi.coeff},
            "psi": {"exp": self.psi.exponent, "coeff": self.psi.coeff},
            "vertices": vertices,
            "edges": edges,
        });
        Ok(crate::canon::value_to_string(&v, false))
    }

    pub fn from_json(s: &str) -> Result<NetGraph> {
        let v: Value = serde_json::from_str(s)?;
        let bad = |what: &str| Error::Input(format!("graph file: bad or missing '{what}'"));
        let f = |x: &Value, what: &str| x.as_f64().ok_or_else(|| bad(what));
        let epsilon = f(&v["epsilon"], "epsilon")?;
        let scaling = |key: &str, role| -> Result<PowerScaling> {
            PowerScaling::new(f(&v[key]["exp"], key)?, f(&v[key]["coeff"], key)?, role)
        };
        let phi = scaling("phi", crate::scaling::ScalingRole::Volume)?;
        let psi = scaling("psi", crate::scaling::ScalingRole::Walk)?;
        let verts = v["vertices"].as_array().ok_or_else(|| bad("vertices"))?;
        let mut dim = 2;
        let mut coords = Vec::with_capacity(verts.len());
        for p in verts {
            let p = p.as_array().ok_or_else(|| bad("vertices"))?;
            match p.len() {
                1 => {
                    dim = 1;
                    coords.push([f(&p[0], "vertices")?, 0.0]);
                }
                2 => coords.push([f(&p[0], "vertices")?, f(&p[1], "vertices")?]),
                _ => return Err(bad("vertices")),
            }
        }
        let raw = v["edges"].as_array().ok_or_else(|| bad("edges"))?;
        let mut edges = Vec::with_capacity(raw.len());
        let mut lengths = Vec::with_capacity(raw.len());
        for e in raw {
            let e = e.as_array().ok_or_else(|| bad("edges"))?;
            if e.len() != 3 {
                return Err(bad("edges"));
            }
            let a = e[0].as_u64().ok_or_else(|| bad("edges"))? as usize;
            let b = e[1].as_u64().ok_or_else(|| bad("edges"))? as usize;
            if a >= coords.len() || b >= coords.len() || a == b {
                return Err(bad("edges"));
            }
            edges.push((a, b));
            lengths.push(f(&e[2], "edges")?);
        }
        Ok(NetGraph::from_edges(coords, dim, epsilon, phi, psi, edges, lengths))
    }
}

/// Single-source distances over all vertices; unreachable vertices get `+inf`.
pub fn graph_metric(graph: &NetGraph, source: usize) -> Vec<f64> {
    graph.distances_within(source, f64::INFINITY)
}

/// `{v : d(center, v) < r}`.
pub fn ball(graph: &NetGraph, center: usize, r: f64, metric: MetricKind) -> VertexSet {
    let d = match metric {
        MetricKind::Intrinsic => graph.distances_within(center, r),
        MetricKind::Euclidean => graph.distances(center, metric),
    };
    VertexSet((0..graph.n()).filter(|&v| d[v] < r).collect())
}

/// `{v : r_in < d(center, v) < r_out}`.
pub fn annulus(graph: &NetGraph, center: usize, r_in: f64, r_out: f64, metric: MetricKind) -> VertexSet {
    let d = match metric {
        MetricKind::Intrinsic => graph.distances_within(center, r_out),
        MetricKind::Euclidean => graph.distances(center, metric),
    };
    VertexSet((0..graph.n()).filter(|&v| d[v] > r_in && d[v] < r_out).collect())
}

pub fn check_bounded_degree(graph: &NetGraph) -> usize {
    (0..graph.n()).map(|v| graph.degree(v)).max().unwrap_or(0)
}

/// Largest-radius-first selection of pairwise disjoint balls
/// (`d(c_i, c_j) >= r_i + r_j`), intrinsic metric.
pub fn greedy_5b_cover(graph: &NetGraph, balls: &[(usize, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&a, &b| balls[b].1.total_cmp(&balls[a].1).then(a.cmp(&b)));
    let mut chosen: Vec<(usize, Vec<f64>)> = Vec::new();
    for i in order {
        let (c, r) = balls[i];
        let disjoint = chosen.iter().all(|(j, d)| d[c] >= r + balls[*j].1);
        if disjoint {
            let reach = 2.0 * balls[i].1 + balls.iter().map(|b| b.1).fold(0.0, f64::max);
            chosen.push((i, graph.distances_within(c, reach)));
        }
    }
    let mut out: Vec<usize> = chosen.into_iter().map(|x| x.0).collect();
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCheck {
    pub disjoint: bool,
    pub covers: bool,
}

/// Exhaustive check of a 5B selection.
pub fn verify_5b_cover(graph: &NetGraph, balls: &[(usize, f64)], selected: &[usize]) -> CoverCheck {
    let dists: Vec<Vec<f64>> = selected.iter().map(|&i| graph_metric(graph, balls[i].0)).collect();
    let mut disjoint = true;
    for a in 0..selected.len() {
        for b in a + 1..selected.len() {
            let (ca, ra) = balls[selected[a]];
            let rb = balls[selected[b]].1;
            let _ = ca;
            if dists[b][balls[selected[a]].0] < ra + rb {
                disjoint = false;
            }
        }
    }
    let mut covered = vec![false; graph.n()];
    for (k, &i) in selected.iter().enumerate() {
        for v in 0..graph.n() {
            if dists[k][v] < 5.0 * balls[i].1 {
                covered[v] = true;
            }
        }
    }
    let covers = balls
        .iter()
        .all(|&(c, r)| ball(graph, c, r, MetricKind::Intrinsic).iter().all(|v| covered[v]));
    CoverCheck { disjoint, covers }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlcReport {
    pub connected: bool,
    pub vacuous: bool,
    pub annulus_size: usize,
    pub components: usize,
}

/// Whether all vertices of `annulus(r/2, r)` are joined inside
/// `annulus(r/(2A), A r)`.
pub fn check_llc(graph: &NetGraph, center: usize, r: f64, a: f64) -> Result<LlcReport> {
    if !(a > 1.0) || !(r > 0.0) {
        return Err(Error::Domain(format!("check_llc needs r > 0 and A > 1 (got r={r}, A={a})")));
    }
    let d = graph.distances_within(center, a * r);
    let n = graph.n();
    let inner: Vec<usize> = (0..n).filter(|&v| d[v] > r / 2.0 && d[v] < r).collect();
    if inner.is_empty() {
        return Ok(LlcReport { connected: true, vacuous: true, annulus_size: 0, components: 0 });
    }
    let allowed: Vec<bool> = d.iter().map(|&x| x > r / (2.0 * a) && x < a * r).collect();
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    for &s in &inner {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = count;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &w in graph.neighbors(v) {
                if allowed[w] && comp[w] == usize::MAX {
                    comp[w] = count;
                    queue.push_back(w);
                }
            }
        }
        count += 1;
    }
    Ok(LlcReport { connected: count == 1, vacuous: false, annulus_size: inner.len(), components: count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{extract_epsnet_ordered, generate_space, SpaceKind};

    fn carpet(level: u32) -> NetGraph {
        let c = generate_space(SpaceKind::Carpet, level, 1.0).unwrap();
        let eps = 3f64.powi(-(level as i32));
        let order: Vec<usize> = (0..c.len()).collect();
        let net = extract_epsnet_ordered(&c, eps, &order).unwrap();
        build_graph(&c, &net, eps, PowerScaling::volume(c.d_h), PowerScaling::walk(2.0)).unwrap()
    }

    fn path(n: usize) -> NetGraph {
        let coords = (0..n).map(|i| [i as f64, 0.0]).collect();
        let edges = (1..n).map(|i| (i - 1, i)).collect();
        NetGraph::from_edges(coords, 1, 1.0, PowerScaling::volume(1.0), PowerScaling::walk(2.0), edges, vec![1.0; n - 1])
    }

    #[test]
    fn edge_thresholds() {
        let cloud = PointCloud {
            points: vec![[0.0, 0.0], [2.0, 0.0], [5.0, 0.0]],
            kind: SpaceKind::Interval,
            level: 0,
            scale: 5.0,
            d_h: 1.0,
        };
        let g = build_graph(&cloud, &[0, 1, 2], 1.0, PowerScaling::volume(1.0), PowerScaling::walk(2.0)).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn carpet_level2_edges_match_pair_scan() {
        let g = carpet(2);
        let eps = 1.0 / 9.0;
        let mut count = 0;
        for a in 0..g.n() {
            for b in a + 1..g.n() {
                if g.euclidean(a, b) < 2.5 * eps {
                    count += 1;
                }
            }
        }
        assert_eq!(g.num_edges(), count);
        for &l in g.edge_lengths() {
            assert!(l >= eps * (1.0 - 1e-9) && l < 2.5 * eps);
        }
        assert!(g.is_connected());
    }

    #[test]
    fn metric_examples() {
        let g = path(3);
        let d = graph_metric(&g, 0);
        assert_eq!(d, vec![0.0, 1.0, 2.0]);
        let g = carpet(3);
        let a = g.nearest_vertex(0.0, 0.0);
        let b = g.nearest_vertex(1.0, 1.0);
        let d = graph_metric(&g, a)[b];
        let e = g.euclidean(a, b);
        assert!(d >= e && d <= 1.5 * e);
    }

    #[test]
    fn balls_and_annuli() {
        let g = carpet(3);
        let c = g.nearest_vertex(0.0, 0.5);
        assert_eq!(ball(&g, c, 0.99 / 27.0, MetricKind::Intrinsic).ids(), &[c]);
        let small = ball(&g, c, 0.2, MetricKind::Intrinsic);
        let big = ball(&g, c, 0.5, MetricKind::Intrinsic);
        assert!(small.is_subset(&big));
        let ratio = g.measure(&big) / 0.5f64.powf(g.phi().exponent);
        assert!(ratio > 1.0 / 8.0 && ratio < 8.0, "{ratio}");
        let ann = annulus(&g, c, 0.2, 0.5, MetricKind::Intrinsic);
        let closed: Vec<usize> = big.iter().filter(|&v| graph_metric(&g, c)[v] <= 0.2).collect();
        assert_eq!(ann.len() + closed.len(), big.len());
    }

    #[test]
    fn degree_examples() {
        let single = path(1);
        assert_eq!(check_bounded_degree(&single), 0);
        let c = generate_space(SpaceKind::Interval, 20, 20.0).unwrap();
        let order: Vec<usize> = (0..c.len()).collect();
        let net = extract_epsnet_ordered(&c, 0.99, &order).unwrap();
        let g = build_graph(&c, &net, 0.99, PowerScaling::volume(1.0), PowerScaling::walk(2.0)).unwrap();
        assert_eq!(check_bounded_degree(&g), 4);
        // level 2 is too small for a hole-free 5x5 neighbourhood
        assert_eq!(check_bounded_degree(&carpet(2)), 14);
        let degs: Vec<usize> = (3..6).map(|l| check_bounded_degree(&carpet(l))).collect();
        assert_eq!(degs, vec![18, 18, 18]);
    }

    #[test]
    fn cover_examples() {
        let g = path(20);
        assert_eq!(greedy_5b_cover(&g, &[(3, 2.0)]), vec![0]);
        assert_eq!(greedy_5b_cover(&g, &[(3, 2.0), (10, 2.0)]), vec![0, 1]);
        assert_eq!(greedy_5b_cover(&g, &[(3, 2.0), (4, 3.0)]), vec![1]);
    }

    #[test]
    fn llc_examples() {
        let c = generate_space(SpaceKind::Interval, 64, 64.0).unwrap();
        let order: Vec<usize> = (0..c.len()).collect();
        let net = extract_epsnet_ordered(&c, 1.0, &order).unwrap();
        let g = build_graph(&c, &net, 1.0, PowerScaling::volume(1.0), PowerScaling::walk(2.0)).unwrap();
        let r = check_llc(&g, 32, 8.0, 2.0).unwrap();
        assert!(!r.connected && r.components == 2);
        let r = check_llc(&g, 0, 0.5, 2.0).unwrap();
        assert!(r.vacuous && r.connected);
    }

    #[test]
    fn json_is_byte_stable() {
        let g = carpet(2);
        let s = g.to_json().unwrap();
        let back = NetGraph::from_json(&s).unwrap();
        assert_eq!(back.to_json().unwrap(), s);
        assert_eq!(back.edges(), g.edges());
    }
}
