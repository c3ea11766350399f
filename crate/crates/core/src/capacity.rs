//! Condenser capacities, equilibrium potentials, capacity scaling sweeps,
//! the dyadic Wolff potential, and cutoff functions.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgraph::{graph_metric, NetGraph, VertexFn, VertexMeasure, VertexSet};
use crate::penergy::{
    abs_pow, energy, energy_touching, p_laplacian_in, riesz_measure, solve_dirichlet, DirichletProblem,
    SolverOptions, Variational,
};
use crate::scaling::{loglog_fit, LogLogFit, PowerScaling};

/// Plates of a condenser: the potential is 1 on `a0`, 0 on `a1`, and free on
/// the rest of the ambient set `a2` (all vertices when `None`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondenserSpec {
    pub a0: VertexSet,
    pub a1: VertexSet,
    pub a2: Option<VertexSet>,
}

impl CondenserSpec {
    pub fn new(a0: VertexSet, a1: VertexSet) -> Self {
        CondenserSpec { a0, a1, a2: None }
    }

    pub fn within(a0: VertexSet, a1: VertexSet, a2: VertexSet) -> Self {
        CondenserSpec { a0, a1, a2: Some(a2) }
    }

    fn ambient(&self, n: usize) -> VertexSet {
        self.a2.clone().unwrap_or_else(|| VertexSet::all(n))
    }

    fn validate(&self, n: usize) -> Result<VertexSet> {
        if self.a0.is_empty() || self.a1.is_empty() {
            return Err(Error::Input("condenser plates must be nonempty".into()));
        }
        if self.a0.iter().chain(self.a1.iter()).any(|v| v >= n) {
            return Err(Error::Input("plate vertex out of range".into()));
        }
        if !self.a0.intersection(&self.a1).is_empty() {
            return Err(Error::Input("condenser plates intersect".into()));
        }
        let a2 = self.ambient(n);
        if !self.a0.is_subset(&a2) || !self.a1.is_subset(&a2) {
            return Err(Error::Input("plates must lie inside the ambient set".into()));
        }
        Ok(a2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub value: f64,
    pub potential: VertexFn,
    pub kkt_residual: f64,
    pub p: f64,
}

/// Minimizes the energy over edges inside `a2` with `u = 1` on `a0`,
/// `u = 0` on `a1`, and `u = 0` outside `a2`.
pub fn capacity(graph: &NetGraph, spec: &CondenserSpec, p: f64, opts: &SolverOptions) -> Result<CapacityResult> {
    let n = graph.n();
    let a2 = spec.validate(n)?;
    let mut base = vec![0.0; n];
    for v in spec.a0.iter() {
        base[v] = 1.0;
    }
    let free = a2.difference(&spec.a0.union(&spec.a1));
    let var = Variational {
        graph,
        free: free.ids().to_vec(),
        base,
        active: a2.mask(n),
        p,
        lambda: 0.0,
        source: vec![0.0; free.len()],
        allow_floating: true,
    };
    let sol = var.solve(opts, None)?;
    let value = energy(graph, &sol.u, p, Some(&a2));
    Ok(CapacityResult { value, potential: sol.u, kkt_residual: sol.kkt_residual, p })
}

/// Solves `-Delta_p u = nu / m` on `a2 \ a1` with `u = 0` on `a1` and outside
/// `a2`, using only edges inside `a2`.
fn condenser_poisson(graph: &NetGraph, a2: &VertexSet, a1: &VertexSet, nu: &[f64], p: f64, opts: &SolverOptions) -> Result<VertexFn> {
    let n = graph.n();
    let free = a2.difference(a1);
    let m = graph.vertex_mass();
    let var = Variational {
        graph,
        free: free.ids().to_vec(),
        base: vec![0.0; n],
        active: a2.mask(n),
        p,
        lambda: 0.0,
        source: free.iter().map(|v| nu[v] / m).collect(),
        allow_floating: true,
    };
    Ok(var.solve(opts, None)?.u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub value: f64,
    /// Largest |Riesz mass| on `a2 \ (a0 u a1)`, relative to the capacity.
    pub off_plate_mass: f64,
    pub support_ok: bool,
    /// Riesz mass of the potential on `a0`.
    pub plate_mass: f64,
    pub pairing_rel_err: f64,
    pub pairing_ok: bool,
    /// `mu[u](a0) / value` for each competitor with `u <= 1`, starting with
    /// the equilibrium potential itself; all should be <= 1.
    pub competitor_ratios: Vec<f64>,
    pub competitors_ok: bool,
    /// `mu[v](a2 \ a1) / value` for each supersolution with `v >= 1` on `a0`;
    /// all should be >= 1.
    pub supersolution_ratios: Vec<f64>,
    pub supersolutions_ok: bool,
}

impl EquilibriumReport {
    pub fn all_ok(&self) -> bool {
        self.support_ok && self.pairing_ok && self.competitors_ok && self.supersolutions_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumTolerances {
    /// Off-plate Riesz mass allowed, relative to the capacity.
    pub support: f64,
    /// Relative error allowed in `E(e) = mu[e](a0)` and in the extremal
    /// inequalities.
    pub pairing: f64,
}

impl Default for EquilibriumTolerances {
    fn default() -> Self {
        EquilibriumTolerances { support: 1e-8, pairing: 1e-6 }
    }
}

/// Discrete checks of the equilibrium identities for a solved condenser:
/// Riesz support on the plates, `E(e) = mu[e](a0)`, and the extremal
/// inequalities against `trials` random competitors and supersolutions.
pub fn check_equilibrium_identities(
    graph: &NetGraph,
    result: &CapacityResult,
    spec: &CondenserSpec,
    trials: usize,
    seed: u64,
    tol: EquilibriumTolerances,
    opts: &SolverOptions,
) -> Result<EquilibriumReport> {
    let n = graph.n();
    let p = result.p;
    let a2 = spec.validate(n)?;
    let value = result.value;
    let lap = p_laplacian_in(graph, &result.potential, p, &a2);
    let plates = spec.a0.union(&spec.a1);
    let off = a2.difference(&plates).iter().fold(0.0f64, |a, v| a.max(lap[v].abs()));
    let off_plate_mass = if value > 0.0 { off / value } else { off };
    let plate_mass: f64 = spec.a0.iter().map(|v| -lap[v]).sum();
    let pairing_rel_err = if value > 0.0 { (plate_mass - value).abs() / value } else { plate_mass.abs() };

    let interior = a2.difference(&spec.a1);
    let a0_ids = spec.a0.ids();
    let interior_ids = interior.ids();
    // the equilibrium potential is its own extremal competitor
    let mut competitor_ratios = vec![if value > 0.0 { plate_mass / value } else { plate_mass }];
    let mut supersolution_ratios = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        // competitor: potential of a random nonnegative measure on a0, scaled to max 1
        let mut nu = vec![0.0; n];
        for &v in a0_ids {
            if rng.gen_bool(0.5) {
                nu[v] = rng.gen::<f64>();
            }
        }
        let pick = a0_ids[rng.gen_range(0..a0_ids.len())];
        nu[pick] += 1.0;
        if let Ok(u) = condenser_poisson(graph, &a2, &spec.a1, &nu, p, opts) {
            let top = u.iter().fold(0.0f64, |a, &b| a.max(b));
            if top > 0.0 {
                let u: Vec<f64> = u.iter().map(|x| x / top).collect();
                let l = p_laplacian_in(graph, &u, p, &a2);
                let mass: f64 = spec.a0.iter().map(|v| -l[v]).sum();
                competitor_ratios.push(if value > 0.0 { mass / value } else { mass });
            }
        }
        // supersolution: potential of a random positive measure on a2 \ a1,
        // scaled so that its minimum on a0 is 1
        let mut nu = vec![0.0; n];
        for &v in interior_ids {
            if rng.gen_bool(0.3) {
                nu[v] = rng.gen::<f64>();
            }
        }
        let pick = interior_ids[rng.gen_range(0..interior_ids.len())];
        nu[pick] += 1.0;
        if let Ok(v) = condenser_poisson(graph, &a2, &spec.a1, &nu, p, opts) {
            let low = spec.a0.iter().map(|z| v[z]).fold(f64::INFINITY, f64::min);
            if low > 0.0 && low.is_finite() {
                let v: Vec<f64> = v.iter().map(|x| x / low).collect();
                let l = p_laplacian_in(graph, &v, p, &a2);
                let mass: f64 = interior.iter().map(|z| -l[z]).sum();
                supersolution_ratios.push(if value > 0.0 { mass / value } else { mass });
            }
        }
    }
    let competitors_ok = competitor_ratios.iter().all(|&r| r <= 1.0 + tol.pairing);
    let supersolutions_ok = supersolution_ratios.iter().all(|&r| r >= 1.0 - tol.pairing);
    Ok(EquilibriumReport {
        value,
        off_plate_mass,
        support_ok: off_plate_mass <= tol.support,
        plate_mass,
        pairing_rel_err,
        pairing_ok: pairing_rel_err <= tol.pairing,
        competitor_ratios,
        competitors_ok,
        supersolution_ratios,
        supersolutions_ok,
    })
}

/// Which balls a sweep accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallPolicy {
    /// The outer ball must stay away from the edge of the cloud's bounding
    /// box; for clouds that are windows into an unbounded space.
    Interior,
    /// Any ball whose complement is nonempty; for compact spaces.
    Any,
}

/// True when some vertex of `set` lies within `eps / 2` of the bounding box
/// of the whole vertex cloud.
pub fn touches_frame(graph: &NetGraph, set: &VertexSet) -> bool {
    let dim = graph.dim();
    let coords = graph.all_coords();
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for c in coords {
        for k in 0..dim {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    let tol = 0.5 * graph.epsilon();
    set.iter().any(|v| (0..dim).any(|k| coords[v][k] - lo[k] < tol || hi[k] - coords[v][k] < tol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub cap: Option<f64>,
    pub mu_ball: f64,
    pub wolff_term: Option<f64>,
    pub beta_hat_running: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub center: usize,
    pub a: f64,
    pub p: f64,
    pub d_h: f64,
    pub rows: Vec<SweepRow>,
    pub fit: Option<LogLogFit>,
    pub slope: Option<f64>,
    pub beta_hat: Option<f64>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(crate::canon::format_float).unwrap_or_default();
        let mut out = String::from("r,cap,mu_ball,wolff_term,beta_hat_running\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                crate::canon::format_float(row.r),
                opt(row.cap),
                crate::canon::format_float(row.mu_ball),
                opt(row.wolff_term),
                opt(row.beta_hat_running)
            ));
        }
        out
    }
}

/// `cap(B(x, r), X \ B(x, a r))` for each radius, with `beta_hat = d_h - slope`
/// of log cap against log r.
pub fn capacity_scaling_sweep(
    graph: &NetGraph,
    center: usize,
    radii: &[f64],
    a: f64,
    p: f64,
    policy: BallPolicy,
    opts: &SolverOptions,
) -> Result<SweepResult> {
    if !(a > 1.0) {
        return Err(Error::Domain(format!("annulus factor must exceed 1, got {a}")));
    }
    if center >= graph.n() {
        return Err(Error::Input("center out of range".into()));
    }
    let d_h = graph.phi().exponent;
    let dist = graph_metric(graph, center);
    let mut rows = Vec::new();
    let mut pts = Vec::new();
    for &r in radii {
        let inner = VertexSet::new((0..graph.n()).filter(|&v| dist[v] < r).collect());
        let outer = VertexSet::new((0..graph.n()).filter(|&v| dist[v] < a * r).collect());
        let rest = VertexSet::new((0..graph.n()).filter(|&v| dist[v] >= a * r).collect());
        let mu_ball = graph.measure(&inner);
        let skip = if rest.is_empty() {
            Some("outer ball covers the graph".to_string())
        } else if policy == BallPolicy::Interior && touches_frame(graph, &outer) {
            Some("outer ball reaches the edge of the cloud".to_string())
        } else {
            None
        };
        if let Some(note) = skip {
            rows.push(SweepRow { r, cap: None, mu_ball, wolff_term: None, beta_hat_running: None, note: Some(note) });
            continue;
        }
        let res = capacity(graph, &CondenserSpec::new(inner, rest), p, opts)?;
        let cap = res.value;
        if cap > 0.0 {
            pts.push((r, cap));
        }
        let running = if pts.len() >= 2 { loglog_fit(&pts).ok().map(|f| d_h - f.slope) } else { None };
        let wolff_term = (cap > 0.0).then(|| (mu_ball / cap).powf(1.0 / (p - 1.0)));
        rows.push(SweepRow { r, cap: Some(cap), mu_ball, wolff_term, beta_hat_running: running, note: None });
    }
    let fit = if pts.len() >= 2 { Some(loglog_fit(&pts)?) } else { None };
    let slope = fit.as_ref().map(|f| f.slope);
    Ok(SweepResult { center, a, p, d_h, rows, fit, slope, beta_hat: slope.map(|s| d_h - s) })
}

/// Capacities of the dyadic annuli around one center, cached by radius.
pub struct AnnulusCaps<'a> {
    graph: &'a NetGraph,
    center: usize,
    p: f64,
    opts: SolverOptions,
    dist: Vec<f64>,
    cache: HashMap<u64, f64>,
}

impl<'a> AnnulusCaps<'a> {
    pub fn new(graph: &'a NetGraph, center: usize, p: f64, opts: &SolverOptions) -> Self {
        AnnulusCaps { graph, center, p, opts: *opts, dist: graph_metric(graph, center), cache: HashMap::new() }
    }

    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    /// `cap(B(x, r/2), X \ B(x, r))`; zero when the complement is empty.
    pub fn get(&mut self, r: f64) -> Result<f64> {
        if let Some(&c) = self.cache.get(&r.to_bits()) {
            return Ok(c);
        }
        let n = self.graph.n();
        let inner = VertexSet::new((0..n).filter(|&v| self.dist[v] < r / 2.0).collect());
        let rest = VertexSet::new((0..n).filter(|&v| self.dist[v] >= r).collect());
        let c = if rest.is_empty() {
            0.0
        } else {
            capacity(self.graph, &CondenserSpec::new(inner, rest), self.p, &self.opts)?.value
        };
        self.cache.insert(r.to_bits(), c);
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WolffTerm {
    pub n: usize,
    /// Outer radius `2^{-n} R`.
    pub radius: f64,
    pub mu_ball: f64,
    pub cap_annulus: f64,
    pub term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WolffResult {
    pub center: usize,
    pub radius: f64,
    pub p: f64,
    pub terms: Vec<WolffTerm>,
    pub total: f64,
    pub n_max: usize,
    /// Some annulus had zero capacity but positive mass.
    pub infinite: bool,
}

/// `floor(log2(R / eps))`.
pub fn wolff_levels(radius: f64, eps: f64) -> usize {
    (radius / eps).log2().floor().max(0.0) as usize
}

/// Dyadic Wolff potential
/// `sum_{n=0}^{n_max} (mu(B(x, 2^-n R)) / cap(B(x, 2^-n-1 R), X \ B(x, 2^-n R)))^{1/(p-1)}`.
pub fn wolff_potential(graph: &NetGraph, mu: &VertexMeasure, x: usize, radius: f64, p: f64, opts: &SolverOptions) -> Result<WolffResult> {
    let mut caps = AnnulusCaps::new(graph, x, p, opts);
    wolff_potential_cached(&mut caps, mu, radius)
}

pub fn wolff_potential_cached(caps: &mut AnnulusCaps, mu: &VertexMeasure, radius: f64) -> Result<WolffResult> {
    let graph = caps.graph;
    let eps = graph.epsilon();
    if !(radius > eps) {
        return Err(Error::Input(format!("Wolff radius {radius} must exceed eps = {eps}")));
    }
    if mu.len() != graph.n() || mu.iter().any(|&m| !(m >= 0.0)) {
        return Err(Error::Input("measure must be nonnegative and total on the graph".into()));
    }
    let p = caps.p;
    let n_max = wolff_levels(radius, eps);
    let mut terms = Vec::with_capacity(n_max + 1);
    let mut total = 0.0;
    let mut infinite = false;
    for n in 0..=n_max {
        let r = radius / 2f64.powi(n as i32);
        let mu_ball: f64 = (0..graph.n()).filter(|&v| caps.dist[v] < r).map(|v| mu[v]).sum();
        let cap = caps.get(r)?;
        let term = if mu_ball == 0.0 {
            0.0
        } else if cap == 0.0 {
            infinite = true;
            f64::INFINITY
        } else {
            (mu_ball / cap).powf(1.0 / (p - 1.0))
        };
        total += term;
        terms.push(WolffTerm { n, radius: r, mu_ball, cap_annulus: cap, term });
    }
    Ok(WolffResult { center: caps.center, radius, p, terms, total, n_max, infinite })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WolffBoundsReport {
    pub x0: usize,
    pub radius: f64,
    pub p: f64,
    pub u_x0: f64,
    pub min_ball: f64,
    pub wolff_r: WolffResult,
    pub wolff_2r: WolffResult,
    /// `u(x0) / W(x0, R)`.
    pub lower_ratio: Option<f64>,
    /// `u(x0) / (min_{B(x0,R)} u + W(x0, 2R))`.
    pub upper_ratio: Option<f64>,
    pub degenerate: bool,
}

/// Solves `-Delta_p u = f` on `domain` with zero data on its ring and
/// compares `u(x0)` with the Wolff potential of `mu = -Delta_p u`.
pub fn verify_wolff_bounds(
    graph: &NetGraph,
    domain: &VertexSet,
    x0: usize,
    radius: f64,
    f: &[f64],
    p: f64,
    opts: &SolverOptions,
) -> Result<WolffBoundsReport> {
    if f.iter().any(|&v| v < 0.0) {
        return Err(Error::Input("source must be nonnegative".into()));
    }
    let mut caps = AnnulusCaps::new(graph, x0, p, opts);
    let big: Vec<usize> = (0..graph.n()).filter(|&v| caps.dist[v] < 4.0 * radius).collect();
    if !big.iter().all(|&v| domain.contains(v)) {
        return Err(Error::Geometry("B(x0, 4R) must lie inside the domain".into()));
    }
    let prob = DirichletProblem::new(graph, domain.clone(), vec![0.0; graph.n()], 0.0, f.to_vec(), p)?;
    let sol = solve_dirichlet(&prob, opts)?;
    let u = sol.u;
    let scale = u.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let lap_tol = 1e-8 * graph.conductance_factor() * scale.powf(p - 1.0).max(f64::MIN_POSITIVE);
    let mu = riesz_measure(graph, &u, p, domain, lap_tol)?;
    let wolff_r = wolff_potential_cached(&mut caps, &mu, radius)?;
    let wolff_2r = wolff_potential_cached(&mut caps, &mu, 2.0 * radius)?;
    let min_ball = (0..graph.n()).filter(|&v| caps.dist[v] < radius).map(|v| u[v]).fold(f64::INFINITY, f64::min);
    let u_x0 = u[x0];
    let lower_ratio = (wolff_r.total > 0.0).then(|| u_x0 / wolff_r.total);
    let denom = min_ball + wolff_2r.total;
    let upper_ratio = (denom > 0.0).then(|| u_x0 / denom);
    let degenerate = lower_ratio.is_none() || upper_ratio.is_none();
    Ok(WolffBoundsReport { x0, radius, p, u_x0, min_ball, wolff_r, wolff_2r, lower_ratio, upper_ratio, degenerate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffResult {
    pub phi: VertexFn,
    pub center: usize,
    pub radius: f64,
    pub outer_factor: f64,
    pub p: f64,
    /// `lambda = 1 / psi_hat(R)` used in the annulus problem.
    pub lambda: f64,
    /// Mid-annulus minimum of `u / psi_hat(R)^{1/(p-1)}`.
    pub c3: f64,
    pub energy: f64,
    pub measured_c1: Option<f64>,
    pub measured_c2: Option<f64>,
}

/// Cutoff for `B(x0, R)` inside `B(x0, 2R)`: solve
/// `-Delta_p u + |u|^{p-2} u / psi_hat(R) = 1` on `2B minus the closed ball`,
/// normalize by the minimum over `{5R/4 <= d < 3R/2}`, set `phi = 1` on
/// `(3/2)B` and `min(u / min, 1)` elsewhere.
pub fn build_cutoff(graph: &NetGraph, x0: usize, radius: f64, psi_hat: PowerScaling, p: f64, opts: &SolverOptions) -> Result<CutoffResult> {
    build_cutoff_between(graph, x0, radius, 2.0 * radius, psi_hat, p, opts)
}

/// The same construction for `B(x0, inner)` inside `B(x0, outer)`, with
/// `psi_hat` evaluated at the gap `outer - inner`.
pub fn build_cutoff_between(graph: &NetGraph, x0: usize, inner: f64, outer: f64, psi_hat: PowerScaling, p: f64, opts: &SolverOptions) -> Result<CutoffResult> {
    let n = graph.n();
    if x0 >= n {
        return Err(Error::Input("center out of range".into()));
    }
    if !(inner > 0.0 && outer > inner) {
        return Err(Error::Input(format!("need 0 < inner < outer, got {inner}, {outer}")));
    }
    let gap = outer - inner;
    let dist = graph_metric(graph, x0);
    if (0..n).all(|v| dist[v] < outer) {
        return Err(Error::Geometry("the outer ball covers the graph".into()));
    }
    let plateau = inner + 0.5 * gap;
    let omega = VertexSet::new((0..n).filter(|&v| dist[v] > inner && dist[v] < outer).collect());
    let mid: Vec<usize> = (0..n).filter(|&v| dist[v] >= inner + 0.25 * gap && dist[v] < plateau).collect();
    if mid.is_empty() {
        return Err(Error::Geometry("mid-annulus is empty".into()));
    }
    let psi_r = psi_hat.at(gap);
    let lambda = 1.0 / psi_r;
    let prob = DirichletProblem::new(graph, omega, vec![0.0; n], lambda, vec![1.0; n], p)?;
    let u = solve_dirichlet(&prob, opts)?.u;
    let low = mid.iter().map(|&v| u[v]).fold(f64::INFINITY, f64::min);
    if !(low > 0.0) {
        return Err(Error::Geometry("annulus solution vanishes on the mid-annulus".into()));
    }
    let phi: Vec<f64> = (0..n).map(|v| if dist[v] < plateau { 1.0 } else { (u[v] / low).clamp(0.0, 1.0) }).collect();
    let energy = energy(graph, &phi, p, None);
    Ok(CutoffResult {
        phi,
        center: x0,
        radius: inner,
        outer_factor: outer / inner,
        p,
        lambda,
        c3: low / psi_r.powf(1.0 / (p - 1.0)),
        energy,
        measured_c1: None,
        measured_c2: None,
    })
}

/// How `dGamma(phi)` on an edge is shared between its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GammaSplit {
    /// Half to each endpoint.
    #[default]
    Half,
    /// All to the endpoint with the larger `|f|`.
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTerms {
    /// `sum |f|^p dGamma(phi)`.
    pub lhs: f64,
    /// Energy of `f` over edges touching `2B`.
    pub gradient: f64,
    /// `sum_{2B} m |f|^p / psi_hat(R)`.
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevFit {
    /// Frontier point with `c1 = c2`, the one minimizing `max(c1, c2)`.
    pub c1: f64,
    pub c2: f64,
    /// Vertices of the feasible frontier, sorted by `c1`.
    pub frontier: Vec<(f64, f64)>,
    pub probes: Vec<ProbeTerms>,
    /// `c1 gradient + c2 mass - lhs` per probe at the reported point.
    pub slack: Vec<f64>,
}

pub fn probe_terms(graph: &NetGraph, cutoff: &CutoffResult, f: &[f64], psi_hat_r: f64, split: GammaSplit) -> ProbeTerms {
    let p = cutoff.p;
    let c = graph.conductance_factor();
    let dist = graph_metric(graph, cutoff.center);
    let two_b = VertexSet::new((0..graph.n()).filter(|&v| dist[v] < cutoff.outer_factor * cutoff.radius).collect());
    let mut lhs = 0.0;
    for &(a, b) in graph.edges() {
        let g = c * abs_pow(cutoff.phi[a] - cutoff.phi[b], p);
        if g == 0.0 {
            continue;
        }
        let (fa, fb) = (abs_pow(f[a], p), abs_pow(f[b], p));
        lhs += match split {
            GammaSplit::Half => 0.5 * g * (fa + fb),
            GammaSplit::Max => g * fa.max(fb),
        };
    }
    let gradient = energy_touching(graph, f, p, &two_b);
    let mass = graph.vertex_mass() * two_b.iter().map(|v| abs_pow(f[v], p)).sum::<f64>() / psi_hat_r;
    ProbeTerms { lhs, gradient, mass }
}

/// Fits `lhs <= c1 gradient + c2 mass` over the probes.
pub fn check_cutoff_sobolev(
    graph: &NetGraph,
    cutoff: &CutoffResult,
    probes: &[VertexFn],
    psi_hat_r: f64,
    split: GammaSplit,
) -> Result<SobolevFit> {
    if probes.is_empty() {
        return Err(Error::Input("no probes".into()));
    }
    let terms: Vec<ProbeTerms> = probes.iter().map(|f| probe_terms(graph, cutoff, f, psi_hat_r, split)).collect();
    let mut c = 0.0f64;
    for t in &terms {
        let d = t.gradient + t.mass;
        if t.lhs > 0.0 {
            c = c.max(if d > 0.0 { t.lhs / d } else { f64::INFINITY });
        }
    }
    let frontier = pareto_frontier(&terms);
    let slack = terms.iter().map(|t| c * t.gradient + c * t.mass - t.lhs).collect();
    Ok(SobolevFit { c1: c, c2: c, frontier, probes: terms, slack })
}

/// Vertices of the lower-left boundary of
/// `{(c1, c2) >= 0 : lhs_i <= c1 g_i + c2 h_i for all i}`.
fn pareto_frontier(terms: &[ProbeTerms]) -> Vec<(f64, f64)> {
    let need = |c1: f64| -> f64 {
        terms
            .iter()
            .map(|t| {
                let rest = t.lhs - c1 * t.gradient;
                if rest <= 0.0 {
                    0.0
                } else if t.mass > 0.0 {
                    rest / t.mass
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    };
    // breakpoints: where some constraint's requirement reaches zero, or two
    // constraints cross
    let mut cands = vec![0.0];
    for t in terms {
        if t.gradient > 0.0 && t.lhs > 0.0 {
            cands.push(t.lhs / t.gradient);
        }
    }
    for (i, a) in terms.iter().enumerate() {
        for b in &terms[i + 1..] {
            if a.mass > 0.0 && b.mass > 0.0 {
                let den = a.gradient / a.mass - b.gradient / b.mass;
                if den != 0.0 {
                    let c1 = (a.lhs / a.mass - b.lhs / b.mass) / den;
                    if c1 > 0.0 && c1.is_finite() {
                        cands.push(c1);
                    }
                }
            }
        }
    }
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cands.dedup();
    let mut out: Vec<(f64, f64)> = Vec::new();
    for c1 in cands {
        let c2 = need(c1);
        if c2.is_finite() {
            if let Some(&(_, last)) = out.last() {
                if c2 >= last {
                    continue;
                }
            }
            out.push((c1, c2));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penergy::tests::path;

    #[test]
    fn path_condenser_closed_form() {
        let g = path(5);
        for (p, want) in [(2.0, 0.25), (3.0, 0.0625), (1.5, 0.5)] {
            let spec = CondenserSpec::new(VertexSet::new(vec![0]), VertexSet::new(vec![4]));
            let res = capacity(&g, &spec, p, &SolverOptions::default()).unwrap();
            assert!((res.value - want).abs() < 1e-9 * want, "p={p} {}", res.value);
            for (k, &v) in res.potential.iter().enumerate() {
                assert!((v - (1.0 - k as f64 / 4.0)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn disconnected_condenser_is_zero() {
        let g = path(5);
        let spec = CondenserSpec::within(VertexSet::new(vec![0]), VertexSet::new(vec![4]), VertexSet::new(vec![0, 2, 3, 4]));
        let res = capacity(&g, &spec, 2.0, &SolverOptions::default()).unwrap();
        assert_eq!(res.value, 0.0);
        assert_eq!(res.potential[0], 1.0);
        assert!(res.potential[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn plates_must_be_disjoint() {
        let g = path(3);
        let spec = CondenserSpec::new(VertexSet::new(vec![0, 1]), VertexSet::new(vec![1, 2]));
        assert!(matches!(capacity(&g, &spec, 2.0, &SolverOptions::default()), Err(Error::Input(_))));
    }

    #[test]
    fn path_equilibrium_identities() {
        let g = path(5);
        let spec = CondenserSpec::new(VertexSet::new(vec![0]), VertexSet::new(vec![4]));
        let opts = SolverOptions::default();
        let res = capacity(&g, &spec, 2.0, &opts).unwrap();
        let rep = check_equilibrium_identities(&g, &res, &spec, 5, 3, EquilibriumTolerances::default(), &opts).unwrap();
        assert!((rep.plate_mass - 0.25).abs() < 1e-12);
        assert!(rep.all_ok(), "{rep:?}");
    }

    #[test]
    fn wolff_levels_truncation() {
        assert_eq!(wolff_levels(1.0, 0.1), 3);
        assert_eq!(wolff_levels(0.8, 0.1), 3);
        assert_eq!(wolff_levels(0.15, 0.1), 0);
    }

    #[test]
    fn wolff_of_zero_measure() {
        let g = path(40);
        let mu = vec![0.0; 40];
        let w = wolff_potential(&g, &mu, 20, 8.0, 2.0, &SolverOptions::default()).unwrap();
        assert_eq!(w.total, 0.0);
        assert_eq!(w.n_max, 3);
    }

    #[test]
    fn frontier_of_two_probes() {
        let t = |lhs, gradient, mass| ProbeTerms { lhs, gradient, mass };
        // 1 <= c1 + 0 c2 handled by c1 = 1; 1 <= 0 c1 + c2 by c2 = 1
        let f = pareto_frontier(&[t(1.0, 1.0, 0.0), t(1.0, 0.0, 1.0)]);
        assert_eq!(f, vec![(1.0, 1.0)]);
        let f = pareto_frontier(&[t(2.0, 1.0, 1.0)]);
        assert_eq!(f, vec![(0.0, 2.0), (2.0, 0.0)]);
    }
}
