//! Discrete p-energy, p-Laplacian, Riesz measure, variational solvers and
//! the comparison-type principle checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, pcg, Cholesky, Precond, SymCsr};
use crate::netgraph::{NetGraph, VertexFn, VertexMeasure, VertexSet};

/// Tie tolerance used by the principle checks.
pub const PRINCIPLE_TOL: f64 = 1e-8;

#[inline]
pub(crate) fn signed_pow(t: f64, e: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else if e == 1.0 {
        t
    } else if e == 2.0 {
        t * t.abs()
    } else {
        t.signum() * t.abs().powf(e)
    }
}

#[inline]
pub(crate) fn abs_pow(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t * t
    } else if p == 1.0 {
        t.abs()
    } else {
        t.abs().powf(p)
    }
}

/// Second derivative of the smoothed power `(t^2 + mu)^{p/2} / p`.
#[inline]
fn reg_curvature(t: f64, p: f64, mu: f64) -> f64 {
    if p == 2.0 {
        return 1.0;
    }
    let s = t * t + mu;
    s.powf((p - 4.0) / 2.0) * ((p - 1.0) * t * t + mu)
}

/// `(t^2 + mu)^{p/2} - mu^{p/2}`, which is `|t|^p` at `mu = 0`.
#[inline]
fn smooth_pow(t: f64, p: f64, mu: f64) -> f64 {
    if mu == 0.0 {
        abs_pow(t, p)
    } else {
        (t * t + mu).powf(p / 2.0) - mu.powf(p / 2.0)
    }
}

/// Derivative of `smooth_pow / p`.
#[inline]
fn smooth_flux(t: f64, p: f64, mu: f64) -> f64 {
    if mu == 0.0 {
        signed_pow(t, p - 1.0)
    } else {
        t * (t * t + mu).powf((p - 2.0) / 2.0)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("p must lie in (1, inf), got {p}")))
    }
}

/// `Phi(eps)/Psi(eps) * sum |u(a) - u(b)|^p` over unordered edges with both
/// endpoints in `region` (all edges when `None`).
pub fn energy(graph: &NetGraph, u: &[f64], p: f64, region: Option<&VertexSet>) -> f64 {
    let mask = region.map(|r| r.mask(graph.n()));
    let s: f64 = graph
        .edges()
        .iter()
        .filter(|&&(a, b)| mask.as_ref().map_or(true, |m| m[a] && m[b]))
        .map(|&(a, b)| abs_pow(u[a] - u[b], p))
        .sum();
    graph.conductance_factor() * s
}

/// Energy over edges with at least one endpoint in `set`.
pub fn energy_touching(graph: &NetGraph, u: &[f64], p: f64, set: &VertexSet) -> f64 {
    let mask = set.mask(graph.n());
    let s: f64 = graph
        .edges()
        .iter()
        .filter(|&&(a, b)| mask[a] || mask[b])
        .map(|&(a, b)| abs_pow(u[a] - u[b], p))
        .sum();
    graph.conductance_factor() * s
}

/// `c * sum_{w ~ v} |u(w)-u(v)|^{p-2} (u(w)-u(v))` at every vertex.
pub fn p_laplacian(graph: &NetGraph, u: &[f64], p: f64) -> VertexFn {
    let c = graph.conductance_factor();
    (0..graph.n())
        .map(|v| c * graph.neighbors(v).iter().map(|&w| signed_pow(u[w] - u[v], p - 1.0)).sum::<f64>())
        .collect()
}

/// p-Laplacian of the subgraph induced by `region`: only neighbours inside
/// `region` contribute, and values outside it are zero.
pub fn p_laplacian_in(graph: &NetGraph, u: &[f64], p: f64, region: &VertexSet) -> VertexFn {
    let c = graph.conductance_factor();
    let mask = region.mask(graph.n());
    let mut out = vec![0.0; graph.n()];
    for v in region.iter() {
        out[v] = c * graph
            .neighbors(v)
            .iter()
            .filter(|&&w| mask[w])
            .map(|&w| signed_pow(u[w] - u[v], p - 1.0))
            .sum::<f64>();
    }
    out
}

/// `-Delta_p u` on `domain`, zero elsewhere. Fails if some value is below
/// `-tol`.
pub fn riesz_measure(graph: &NetGraph, u: &[f64], p: f64, domain: &VertexSet, tol: f64) -> Result<VertexMeasure> {
    let lap = p_laplacian(graph, u, p);
    let mut mu = vec![0.0; graph.n()];
    for v in domain.iter() {
        let val = -lap[v];
        if val < -tol {
            return Err(Error::Precondition(format!("negative Riesz mass {val:e} at vertex {v}")));
        }
        mu[v] = val.max(0.0);
    }
    Ok(mu)
}

/// `E(u; v) = c * sum |du|^{p-2} du dv` over all edges; equals
/// `sum_z v(z) (-Delta_p u(z))`.
pub fn energy_pairing(graph: &NetGraph, u: &[f64], v: &[f64], p: f64) -> f64 {
    let s: f64 = graph
        .edges()
        .iter()
        .map(|&(a, b)| signed_pow(u[a] - u[b], p - 1.0) * (v[a] - v[b]))
        .sum();
    graph.conductance_factor() * s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Irls,
    Gradient,
}

/// Linear solver for the Newton systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearSolver {
    /// Sparse Cholesky, falling back to CG when the factorization fails.
    Direct,
    /// Preconditioned conjugate gradients.
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub method: SolveMethod,
    pub linear: LinearSolver,
    /// Regularization floor, relative to the squared data scale.
    pub reg_floor: f64,
    pub max_iters: usize,
    /// Relative objective decrease used to stop the gradient method.
    pub tol: f64,
    /// Normalized KKT residual required for success.
    pub kkt_tol: f64,
    /// Upper bound on the inner CG forcing term.
    pub inner_tol: f64,
    pub inner_max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: SolveMethod::Irls,
            linear: LinearSolver::Direct,
            reg_floor: 1e-12,
            max_iters: 10_000,
            tol: 1e-10,
            kkt_tol: 1e-10,
            inner_tol: 1e-4,
            inner_max_iters: 20_000,
        }
    }
}

impl SolverOptions {
    fn effective_method(&self, p: f64) -> SolveMethod {
        if p < 1.2 || p > 6.0 {
            SolveMethod::Gradient
        } else {
            self.method
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub u: VertexFn,
    pub iterations: usize,
    pub final_energy: f64,
    pub kkt_residual: f64,
}

/// Dirichlet data on the one-edge ring around `domain`.
#[derive(Debug, Clone)]
pub struct DirichletProblem<'a> {
    pub graph: &'a NetGraph,
    pub domain: VertexSet,
    pub boundary: VertexSet,
    /// Read on `boundary`.
    pub boundary_values: VertexFn,
    pub lambda: f64,
    /// Read on `domain`.
    pub source: VertexFn,
    pub p: f64,
}

impl<'a> DirichletProblem<'a> {
    pub fn new(
        graph: &'a NetGraph,
        domain: VertexSet,
        boundary_values: VertexFn,
        lambda: f64,
        source: VertexFn,
        p: f64,
    ) -> Result<Self> {
        check_p(p)?;
        let n = graph.n();
        if boundary_values.len() != n || source.len() != n {
            return Err(Error::Input("boundary values and source must be total on the graph".into()));
        }
        if domain.iter().any(|v| v >= n) {
            return Err(Error::Input("domain vertex out of range".into()));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("lambda must be nonnegative, got {lambda}")));
        }
        let boundary = graph.boundary_ring(&domain);
        if boundary.iter().any(|v| !boundary_values[v].is_finite()) {
            return Err(Error::Input("boundary values must be finite".into()));
        }
        Ok(DirichletProblem { graph, domain, boundary, boundary_values, lambda, source, p })
    }

    pub fn harmonic(graph: &'a NetGraph, domain: VertexSet, boundary_values: VertexFn, p: f64) -> Result<Self> {
        let n = graph.n();
        Self::new(graph, domain, boundary_values, 0.0, vec![0.0; n], p)
    }
}

/// Minimizer of `(1/p) E + (lambda/p) sum m|u|^p - sum m f u` over the free
/// vertices, counting edges with at least one free endpoint whose other
/// endpoint is active.
pub(crate) struct Variational<'a> {
    pub graph: &'a NetGraph,
    pub free: Vec<usize>,
    /// Values of every non-free vertex.
    pub base: Vec<f64>,
    pub active: Vec<bool>,
    pub p: f64,
    pub lambda: f64,
    /// Source per free vertex.
    pub source: Vec<f64>,
    /// Components without Dirichlet data and without a source are pinned to
    /// their base value instead of being rejected.
    pub allow_floating: bool,
}

struct Local {
    int: Vec<(usize, usize)>,
    bnd: Vec<(usize, f64)>,
    c: f64,
    m: f64,
    p: f64,
    lambda: f64,
    f: Vec<f64>,
    lo: f64,
    hi: f64,
    clamp: bool,
    /// Hessian regularization.
    mu: f64,
    /// Regularize each term at the rounding level of its own operands, with
    /// `mu` as a floor.
    mu_local: bool,
    /// Smoothing of the objective itself; zero for the true problem.
    smooth: f64,
}

impl Local {
    fn n(&self) -> usize {
        self.f.len()
    }

    /// Objective value and the sum of absolute terms (for noise estimates).
    fn objective(&self, x: &[f64]) -> (f64, f64) {
        let p = self.p;
        let mut e = 0.0;
        let sm = self.smooth;
        for &(i, j) in &self.int {
            e += smooth_pow(x[i] - x[j], p, sm);
        }
        for &(i, g) in &self.bnd {
            e += smooth_pow(x[i] - g, p, sm);
        }
        let e = self.c * e / p;
        let mut lam = 0.0;
        let mut lin = 0.0;
        let mut lin_abs = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            if self.lambda > 0.0 {
                lam += smooth_pow(xi, p, sm);
            }
            lin += self.f[i] * xi;
            lin_abs += (self.f[i] * xi).abs();
        }
        let lam = self.lambda * self.m * lam / p;
        (e + lam - self.m * lin, e + lam + self.m * lin_abs)
    }

    /// Gradient and per-vertex force scale.
    fn gradient(&self, x: &[f64], g: &mut [f64], scale: &mut [f64]) {
        let (p, sm) = (self.p, self.smooth);
        let n = self.n();
        for i in 0..n {
            let lt = if self.lambda > 0.0 { self.lambda * self.m * smooth_flux(x[i], p, sm) } else { 0.0 };
            g[i] = lt - self.m * self.f[i];
            scale[i] = lt.abs() + (self.m * self.f[i]).abs();
        }
        for &(i, j) in &self.int {
            let t = self.c * smooth_flux(snap(x[i], x[j]), p, sm);
            g[i] += t;
            g[j] -= t;
            scale[i] += t.abs();
            scale[j] += t.abs();
        }
        for &(i, b) in &self.bnd {
            let t = self.c * smooth_flux(snap(x[i], b), p, sm);
            g[i] += t;
            scale[i] += t.abs();
        }
    }

    fn residual(&self, x: &[f64]) -> f64 {
        let n = self.n();
        let mut g = vec![0.0; n];
        let mut s = vec![0.0; n];
        self.gradient(x, &mut g, &mut s);
        self.kkt(x, &g, &s)
    }

    /// Per-vertex change of the force balance that rounding of the iterate
    /// alone can cause. For p < 2 a tied edge carries flux of order
    /// `(eps_machine |u|)^{p-1}`, far above `eps_machine` times the flux scale.
    fn rounding_allowance(&self, x: &[f64], out: &mut [f64]) {
        let (p, sm) = (self.p, self.smooth);
        let slack = |t: f64, size: f64| -> f64 {
            let d = 16.0 * f64::EPSILON * size;
            let t = t.abs();
            smooth_flux(t + d, p, sm) - smooth_flux(t, p, sm)
        };
        for i in 0..self.n() {
            out[i] = if self.lambda > 0.0 { self.lambda * self.m * slack(x[i], x[i].abs()) } else { 0.0 };
        }
        for &(i, j) in &self.int {
            let a = self.c * slack(x[i] - x[j], x[i].abs() + x[j].abs());
            out[i] += a;
            out[j] += a;
        }
        for &(i, b) in &self.bnd {
            out[i] += self.c * slack(x[i] - b, x[i].abs() + b.abs());
        }
    }

    /// Normalized KKT residual: the largest force imbalance beyond the
    /// rounding allowance, over the largest summed force magnitude.
    fn kkt(&self, x: &[f64], g: &[f64], s: &[f64]) -> f64 {
        let mut allow = vec![0.0; self.n()];
        self.rounding_allowance(x, &mut allow);
        let excess: Vec<f64> = g.iter().zip(&allow).map(|(g, a)| (g.abs() - a).max(0.0)).collect();
        kkt_from(&excess, s)
    }

    /// Differences entering each energy term: interior edges, ring edges,
    /// then the zeroth-order terms.
    fn term_diffs(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.int.iter().map(|&(i, j)| snap(x[i], x[j])));
        out.extend(self.bnd.iter().map(|&(i, b)| snap(x[i], b)));
        if self.lambda > 0.0 {
            out.extend_from_slice(x);
        }
    }

    /// Newton matrix. Terms flagged in `secant` use the secant weight
    /// `(t^2 + mu)^{(p-2)/2}` instead of the second derivative; for `p < 2`
    /// this stops the sign oscillation Newton produces on near-ties.
    fn hessian(&self, x: &[f64], secant: &[bool]) -> SymCsr {
        let (p, mu) = (self.p, self.mu);
        let n = self.n();
        let (ni, nb) = (self.int.len(), self.bnd.len());
        let weight = |a: f64, b: f64, k: usize| {
            let t = a - b;
            let mu = if self.mu_local { (f64::EPSILON * (a.abs() + b.abs())).powi(2).max(mu) } else { mu };
            if secant.get(k).copied().unwrap_or(false) {
                (t * t + mu).powf((p - 2.0) / 2.0)
            } else {
                reg_curvature(t, p, mu)
            }
        };
        let mut shift = vec![0.0; n];
        if self.lambda > 0.0 {
            for i in 0..n {
                shift[i] = self.lambda * self.m * weight(x[i], 0.0, ni + nb + i);
            }
        }
        for (k, &(i, b)) in self.bnd.iter().enumerate() {
            shift[i] += self.c * weight(x[i], b, ni + k);
        }
        let w: Vec<f64> = self.int.iter().enumerate().map(|(k, &(i, j))| self.c * weight(x[i], x[j], k)).collect();
        SymCsr::from_weighted_edges(n, &self.int, &w, &shift)
    }

    fn project(&self, x: &mut [f64]) {
        if self.clamp {
            x.iter_mut().for_each(|v| *v = v.clamp(self.lo, self.hi));
        }
    }
}

/// `a - b`, or zero when the difference is below the rounding resolution of
/// the operands.
#[inline]
fn snap(a: f64, b: f64) -> f64 {
    let d = a - b;
    if d.abs() <= 4.0 * f64::EPSILON * (a.abs() + b.abs()) {
        0.0
    } else {
        d
    }
}

fn kkt_from(g: &[f64], s: &[f64]) -> f64 {
    let gmax = g.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let smax = s.iter().fold(0.0f64, |a, &b| a.max(b));
    if gmax == 0.0 {
        0.0
    } else if smax == 0.0 {
        f64::INFINITY
    } else {
        gmax / smax
    }
}

/// Continuation stages shrink the smoothing by this factor.
const STAGE_FACTOR: f64 = 1e-3;
/// Residual at which a smoothed stage hands over to the next.
const STAGE_KKT: f64 = 1e-3;

struct RunStats {
    iterations: usize,
}

fn newton(loc: &Local, x: &mut [f64], kkt_tol: f64, opts: &SolverOptions, chol: &mut Cholesky) -> Result<RunStats> {
    let n = loc.n();
    let mut g = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut secant: Vec<bool> = Vec::new();
    let (mut before, mut after) = (Vec::new(), Vec::new());
    let mut iterations = 0;
    loop {
        loc.gradient(x, &mut g, &mut s);
        let res = loc.kkt(x, &g, &s);
        if res <= kkt_tol {
            return Ok(RunStats { iterations });
        }
        if iterations >= opts.max_iters {
            return Err(Error::NonConvergence { iterations, residual: res });
        }
        iterations += 1;
        let h = loc.hessian(x, &secant);
        let b: Vec<f64> = g.iter().map(|v| -v).collect();
        let direct = match opts.linear {
            LinearSolver::Direct => chol.solve(&h, &b),
            LinearSolver::Iterative => None,
        };
        let mut d = match direct {
            Some(d) => d,
            None => {
                let eta = opts.inner_tol.min(res.sqrt()).max(1e-14);
                let mut d = vec![0.0; n];
                let pre = if n > 2000 { Precond::SymGaussSeidel } else { Precond::Jacobi };
                pcg(&h, &b, &mut d, eta, opts.inner_max_iters, pre);
                d
            }
        };
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            for i in 0..n {
                d[i] = -g[i] / h.diag[i].max(f64::MIN_POSITIVE);
            }
            slope = dot(&g, &d);
        }
        let (j0, j0abs) = loc.objective(x);
        let noise = 64.0 * f64::EPSILON * j0abs.max(j0.abs());
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                y[i] = x[i] + alpha * d[i];
            }
            loc.project(&mut y);
            let (j1, _) = loc.objective(&y);
            if j1 <= j0 + 1e-4 * alpha * slope {
                accepted = true;
            } else if (j1 - j0).abs() <= noise && loc.residual(&y) < res {
                accepted = true;
            }
            if accepted {
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence { iterations, residual: res });
        }
        // terms that changed sign or moved by more than their own size get
        // secant weights next step; settled terms keep Newton weights
        if loc.p < 2.0 {
            loc.term_diffs(x, &mut before);
            loc.term_diffs(&y, &mut after);
            secant.resize(before.len(), false);
            for k in 0..before.len() {
                secant[k] = before[k] * after[k] < 0.0 || (after[k] - before[k]).abs() > after[k].abs();
            }
        }
        x.copy_from_slice(&y);
    }
}

/// Jacobi-scaled nonlinear conjugate gradients (Polak-Ribiere+).
fn gradient_descent(loc: &Local, x: &mut [f64], kkt_tol: f64, opts: &SolverOptions) -> Result<RunStats> {
    let n = loc.n();
    let mut g = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut prev_gz = 0.0;
    let mut prev_g = vec![0.0; n];
    let mut iterations = 0;
    let mut last = loc.objective(x).0;
    loop {
        loc.gradient(x, &mut g, &mut s);
        let res = loc.kkt(x, &g, &s);
        if res <= kkt_tol {
            return Ok(RunStats { iterations });
        }
        if iterations >= opts.max_iters {
            return Err(Error::NonConvergence { iterations, residual: res });
        }
        let diag = loc.hessian(x, &[]).diag;
        let z: Vec<f64> = (0..n).map(|i| g[i] / diag[i].max(f64::MIN_POSITIVE)).collect();
        let gz = dot(&g, &z);
        let beta = if iterations == 0 || prev_gz == 0.0 {
            0.0
        } else {
            let num: f64 = (0..n).map(|i| z[i] * (g[i] - prev_g[i])).sum();
            (num / prev_gz).max(0.0)
        };
        for i in 0..n {
            d[i] = -z[i] + beta * d[i];
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            for i in 0..n {
                d[i] = -z[i];
            }
            slope = -gz;
        }
        prev_gz = gz;
        prev_g.copy_from_slice(&g);
        iterations += 1;
        let (j0, _) = loc.objective(x);
        let mut alpha = 1.0;
        let mut accepted = false;
        // expand while the Armijo condition keeps holding with growing gain
        for _ in 0..60 {
            for i in 0..n {
                y[i] = x[i] + alpha * d[i];
            }
            loc.project(&mut y);
            let (j1, _) = loc.objective(&y);
            if j1 <= j0 + 1e-4 * alpha * slope {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Ok(RunStats { iterations });
        }
        x.copy_from_slice(&y);
        let now = loc.objective(x).0;
        if (last - now).abs() <= opts.tol * now.abs().max(f64::MIN_POSITIVE) {
            loc.gradient(x, &mut g, &mut s);
            return Ok(RunStats { iterations });
        }
        last = now;
    }
}

impl<'a> Variational<'a> {
    fn localize(&self, p: f64, mu_rel: f64) -> Result<(Local, Vec<usize>)> {
        let graph = self.graph;
        let n = graph.n();
        let mut local = vec![usize::MAX; n];
        for (k, &v) in self.free.iter().enumerate() {
            local[v] = k;
        }
        let mut int = Vec::new();
        let mut bnd = Vec::new();
        for (k, &v) in self.free.iter().enumerate() {
            for &w in graph.neighbors(v) {
                if local[w] != usize::MAX {
                    if v < w {
                        int.push((k, local[w]));
                    }
                } else if self.active[w] {
                    bnd.push((k, self.base[w]));
                }
            }
        }
        // components of the free set
        let nf = self.free.len();
        let mut parent: Vec<usize> = (0..nf).collect();
        fn find(parent: &mut [usize], mut a: usize) -> usize {
            while parent[a] != a {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            a
        }
        for &(i, j) in &int {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
            }
        }
        let mut anchored = vec![self.lambda > 0.0; nf];
        let mut sourced = vec![false; nf];
        for &(i, _) in &bnd {
            let r = find(&mut parent, i);
            anchored[r] = true;
        }
        for i in 0..nf {
            if self.source[i] != 0.0 {
                let r = find(&mut parent, i);
                sourced[r] = true;
            }
        }
        let mut keep = vec![true; nf];
        for i in 0..nf {
            let r = find(&mut parent, i);
            if !anchored[r] {
                if sourced[r] || !self.allow_floating {
                    return Err(Error::IllPosed(
                        "a component of the domain has no boundary data and lambda = 0".into(),
                    ));
                }
                keep[i] = false;
            }
        }
        let (int, bnd, free_idx, f) = if keep.iter().all(|&k| k) {
            (int, bnd, (0..nf).collect::<Vec<_>>(), self.source.clone())
        } else {
            let mut remap = vec![usize::MAX; nf];
            let mut idx = Vec::new();
            for i in 0..nf {
                if keep[i] {
                    remap[i] = idx.len();
                    idx.push(i);
                }
            }
            let int = int
                .into_iter()
                .filter(|&(i, j)| keep[i] && keep[j])
                .map(|(i, j)| (remap[i], remap[j]))
                .collect();
            let bnd = bnd.into_iter().filter(|&(i, _)| keep[i]).map(|(i, b)| (remap[i], b)).collect();
            let f = idx.iter().map(|&i| self.source[i]).collect();
            (int, bnd, idx, f)
        };
        let fixed_vals: Vec<f64> = bnd.iter().map(|b: &(usize, f64)| b.1).collect();
        let lo = fixed_vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = fixed_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let clamp = self.lambda == 0.0 && f.iter().all(|&v: &f64| v == 0.0) && lo.is_finite();
        let data_scale = fixed_vals.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let loc = Local {
            int,
            bnd,
            c: graph.conductance_factor(),
            m: graph.vertex_mass(),
            p,
            lambda: self.lambda,
            f,
            lo,
            hi,
            clamp,
            mu: mu_rel * data_scale.max(1e-300).powi(2),
            smooth: 0.0,
            mu_local: false,
        };
        Ok((loc, free_idx))
    }

    pub fn solve(&self, opts: &SolverOptions, init: Option<&[f64]>) -> Result<Solution> {
        check_p(self.p)?;
        let (mut loc, free_idx) = self.localize(self.p, opts.reg_floor)?;
        let nl = loc.n();
        let mut x: Vec<f64> = match init {
            Some(x0) => free_idx.iter().map(|&i| x0[self.free[i]]).collect(),
            None => vec![0.0; nl],
        };
        let mut iterations = 0;
        let mut chol = Cholesky::new();
        if nl > 0 {
            if init.is_none() && self.p != 2.0 {
                // quadratic warm start, then rescale when the data are homogeneous
                let (quad, _) = self.localize(2.0, opts.reg_floor)?;
                let warm = SolverOptions { kkt_tol: 1e-6, ..*opts };
                let st = newton(&quad, &mut x, warm.kkt_tol, &warm, &mut chol)?;
                iterations += st.iterations;
                if loc.bnd.iter().all(|b| b.1 == 0.0) {
                    rescale_homogeneous(&loc, &mut x);
                }
            }
            let scale = x.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let fixed = loc.bnd.iter().fold(0.0f64, |a, b| a.max(b.1.abs()));
            let scale2 = scale.max(fixed).max(1e-300).powi(2);
            loc.mu = opts.reg_floor * scale2;
            let st = match opts.effective_method(self.p) {
                SolveMethod::Irls => {
                    if self.p != 2.0 {
                        // continuation through smoothed objectives
                        let mut rel = 1e-2;
                        while rel > opts.reg_floor {
                            loc.smooth = rel * scale2;
                            loc.mu = loc.smooth;
                            let st = newton(&loc, &mut x, STAGE_KKT, opts, &mut chol)?;
                            iterations += st.iterations;
                            rel *= STAGE_FACTOR;
                        }
                        loc.smooth = 0.0;
                        // Newton regularization at rounding level of each term: for
                        // p < 2 a larger floor caps the curvature of near-ties and stalls
                        loc.mu_local = self.p < 2.0;
                        loc.mu = if self.p < 2.0 { 1e-48 } else { opts.reg_floor } * scale2;
                    }
                    newton(&loc, &mut x, opts.kkt_tol, opts, &mut chol)?
                }
                SolveMethod::Gradient => gradient_descent(&loc, &mut x, opts.kkt_tol, opts)?,
            };
            iterations += st.iterations;
        }
        let mut u = self.base.clone();
        for v in &self.free {
            u[*v] = self.base[*v];
        }
        for (k, &i) in free_idx.iter().enumerate() {
            u[self.free[i]] = x[k];
        }
        // residual with mu = 0 over the kept free vertices
        let kkt_residual = loc.residual(&x);
        let free_set = VertexSet::new(self.free.clone());
        let final_energy = energy_touching_active(self.graph, &u, self.p, &free_set, &self.active);
        Ok(Solution { u, iterations, final_energy, kkt_residual })
    }
}

fn energy_touching_active(graph: &NetGraph, u: &[f64], p: f64, set: &VertexSet, active: &[bool]) -> f64 {
    let mask = set.mask(graph.n());
    let s: f64 = graph
        .edges()
        .iter()
        .filter(|&&(a, b)| (mask[a] || mask[b]) && active[a] && active[b])
        .map(|&(a, b)| abs_pow(u[a] - u[b], p))
        .sum();
    graph.conductance_factor() * s
}

/// Best multiple `t x` for problems with zero Dirichlet data.
fn rescale_homogeneous(loc: &Local, x: &mut [f64]) {
    let p = loc.p;
    let mut a = 0.0;
    for &(i, j) in &loc.int {
        a += abs_pow(x[i] - x[j], p);
    }
    for &(i, _) in &loc.bnd {
        a += abs_pow(x[i], p);
    }
    a *= loc.c;
    let bsum: f64 = x.iter().map(|&v| abs_pow(v, p)).sum::<f64>() * loc.m * loc.lambda;
    let csum: f64 = loc.m * x.iter().zip(&loc.f).map(|(v, f)| v * f).sum::<f64>();
    let k = a + bsum;
    if k > 0.0 && csum > 0.0 {
        let t = (csum / k).powf(1.0 / (p - 1.0));
        x.iter_mut().for_each(|v| *v *= t);
    }
}

pub fn solve_dirichlet(problem: &DirichletProblem, opts: &SolverOptions) -> Result<Solution> {
    solve_dirichlet_from(problem, opts, None)
}

/// As [`solve_dirichlet`], starting from a total initial guess.
pub fn solve_dirichlet_from(problem: &DirichletProblem, opts: &SolverOptions, init: Option<&[f64]>) -> Result<Solution> {
    let graph = problem.graph;
    let n = graph.n();
    if problem.boundary.is_empty() && problem.lambda == 0.0 && !problem.domain.is_empty() {
        return Err(Error::IllPosed("empty boundary ring with lambda = 0".into()));
    }
    let mut base = vec![0.0; n];
    let mut active = vec![false; n];
    for v in problem.boundary.iter() {
        base[v] = problem.boundary_values[v];
        active[v] = true;
    }
    for v in problem.domain.iter() {
        active[v] = true;
    }
    let var = Variational {
        graph,
        free: problem.domain.ids().to_vec(),
        base,
        active,
        p: problem.p,
        lambda: problem.lambda,
        source: problem.domain.iter().map(|v| problem.source[v]).collect(),
        allow_floating: false,
    };
    var.solve(opts, init)
}

/// Zero boundary data, source `f`, and `lambda` term on `domain`.
pub fn solve_poisson(
    graph: &NetGraph,
    domain: &VertexSet,
    f: &[f64],
    lambda: f64,
    p: f64,
    opts: &SolverOptions,
) -> Result<Solution> {
    let n = graph.n();
    let prob = DirichletProblem::new(graph, domain.clone(), vec![0.0; n], lambda, f.to_vec(), p)?;
    solve_dirichlet(&prob, opts)
}

/// Replaces `u` on `domain` minus `hole` by its harmonic extension from the
/// values of `u` on the ring of that set (which contains the hole's
/// boundary and the ring of `domain`). Values elsewhere are kept.
pub fn poisson_modification(
    graph: &NetGraph,
    u: &[f64],
    domain: &VertexSet,
    hole: &VertexSet,
    p: f64,
    opts: &SolverOptions,
) -> Result<VertexFn> {
    if !hole.is_subset(domain) {
        return Err(Error::Precondition("hole must lie inside the domain".into()));
    }
    let rest = domain.difference(hole);
    if rest.is_empty() {
        return Ok(u.to_vec());
    }
    let prob = DirichletProblem::harmonic(graph, rest.clone(), u.to_vec(), p)?;
    let sol = solve_dirichlet(&prob, opts)?;
    let mut out = u.to_vec();
    for v in rest.iter() {
        out[v] = sol.u[v];
    }
    Ok(out)
}

/// Pointwise minimum of two vertex functions.
pub fn pointwise_min(a: &[f64], b: &[f64]) -> VertexFn {
    a.iter().zip(b).map(|(x, y)| x.min(*y)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Harmonic,
    Superharmonic,
    Subharmonic,
    None,
}

/// Label each vertex of `domain` by the sign of `-Delta_p u`; vertices
/// outside get `None`.
pub fn classify(graph: &NetGraph, u: &[f64], p: f64, domain: &VertexSet, tol: f64) -> Vec<Label> {
    let lap = p_laplacian(graph, u, p);
    let mut out = vec![Label::None; graph.n()];
    for v in domain.iter() {
        let s = -lap[v];
        out[v] = if s.abs() <= tol {
            Label::Harmonic
        } else if s > 0.0 {
            Label::Superharmonic
        } else {
            Label::Subharmonic
        };
    }
    out
}

/// Superharmonic in the weak sense: no vertex of `domain` labelled
/// subharmonic.
pub fn is_superharmonic(labels: &[Label], domain: &VertexSet) -> bool {
    domain.iter().all(|v| matches!(labels[v], Label::Harmonic | Label::Superharmonic))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    Holds,
    Fails,
    Inconclusive,
}

/// Checks `u >= v - tol` on `domain` after verifying the hypotheses
/// `-Delta_p u + lambda m |u|^{p-2} u >= -Delta_p v + lambda m |v|^{p-2} v`
/// on `domain` and `u >= v` on its ring.
pub fn check_comparison(
    graph: &NetGraph,
    u: &[f64],
    v: &[f64],
    p: f64,
    domain: &VertexSet,
    lambda: f64,
    tol: f64,
) -> Comparison {
    let m = graph.vertex_mass();
    let lu = p_laplacian(graph, u, p);
    let lv = p_laplacian(graph, v, p);
    let ring = graph.boundary_ring(domain);
    for z in ring.iter() {
        if u[z] < v[z] - tol {
            return Comparison::Inconclusive;
        }
    }
    for z in domain.iter() {
        let ou = -lu[z] + lambda * m * signed_pow(u[z], p - 1.0);
        let ov = -lv[z] + lambda * m * signed_pow(v[z], p - 1.0);
        let scale = 1.0 + ou.abs().max(ov.abs());
        if ou < ov - tol * scale {
            return Comparison::Inconclusive;
        }
    }
    if domain.iter().all(|z| u[z] >= v[z] - tol) {
        Comparison::Holds
    } else {
        Comparison::Fails
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::scaling::PowerScaling;

    pub(crate) fn path(n: usize) -> NetGraph {
        let coords = (0..n).map(|i| [i as f64, 0.0]).collect();
        let edges = (1..n).map(|i| (i - 1, i)).collect();
        NetGraph::from_edges(coords, 1, 1.0, PowerScaling::volume(1.0), PowerScaling::walk(2.0), edges, vec![1.0; n - 1])
    }

    #[test]
    fn energy_examples() {
        let g = path(5);
        assert_eq!(energy(&g, &[3.0; 5], 2.0, None), 0.0);
        let u = [0.0, 0.25, 0.5, 0.75, 1.0];
        assert!((energy(&g, &u, 2.0, None) - 0.25).abs() < 1e-15);
        let g2 = path(2);
        assert_eq!(energy(&g2, &[0.0, 1.0], 3.0, None), 1.0);
    }

    #[test]
    fn laplacian_examples() {
        let g = path(3);
        assert_eq!(p_laplacian(&g, &[0.0, 0.0, 1.0], 2.0)[1], 1.0);
        assert!(p_laplacian(&g, &[2.0; 3], 1.5).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn linear_on_path_for_any_p() {
        let g = path(4);
        for p in [1.5, 2.0, 3.0, 4.5] {
            let mut b = vec![0.0; 4];
            b[3] = 1.0;
            let prob = DirichletProblem::harmonic(&g, VertexSet::new(vec![1, 2]), b, p).unwrap();
            let s = solve_dirichlet(&prob, &SolverOptions::default()).unwrap();
            for (k, want) in [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0].iter().enumerate() {
                assert!((s.u[k] - want).abs() < 1e-9, "p={p} {:?}", s.u);
            }
        }
    }

    #[test]
    fn constant_data_gives_constant() {
        let g = path(6);
        let prob = DirichletProblem::harmonic(&g, VertexSet::new(vec![1, 2, 3, 4]), vec![2.5; 6], 3.0).unwrap();
        let s = solve_dirichlet(&prob, &SolverOptions::default()).unwrap();
        assert!(s.u.iter().all(|&x| (x - 2.5).abs() < 1e-12));
    }

    #[test]
    fn star_poisson() {
        // one interior vertex with k boundary neighbours
        let k = 5;
        let coords = (0..=k).map(|i| [i as f64, 0.0]).collect();
        let edges: Vec<(usize, usize)> = (1..=k).map(|i| (0, i)).collect();
        let eps = 0.5;
        let g = NetGraph::from_edges(coords, 1, eps, PowerScaling::volume(1.3), PowerScaling::walk(2.2), edges, vec![1.0; k]);
        let mut f = vec![0.0; k + 1];
        f[0] = 1.0;
        let s = solve_poisson(&g, &VertexSet::new(vec![0]), &f, 0.0, 2.0, &SolverOptions::default()).unwrap();
        let want = eps.powf(2.2) / k as f64;
        assert!((s.u[0] - want).abs() < 1e-12 * want);
        let zero = solve_poisson(&g, &VertexSet::new(vec![0]), &vec![0.0; k + 1], 0.0, 3.0, &SolverOptions::default()).unwrap();
        assert_eq!(zero.u[0], 0.0);
    }

    #[test]
    fn ill_posed_without_ring() {
        let g = path(3);
        let prob = DirichletProblem::harmonic(&g, VertexSet::all(3), vec![0.0; 3], 2.0).unwrap();
        assert!(matches!(solve_dirichlet(&prob, &SolverOptions::default()), Err(Error::IllPosed(_))));
    }

    #[test]
    fn gradient_method_on_extreme_p() {
        let g = path(6);
        let mut b = vec![0.0; 6];
        b[5] = 1.0;
        let prob = DirichletProblem::harmonic(&g, VertexSet::new(vec![1, 2, 3, 4]), b, 1.1).unwrap();
        let opts = SolverOptions { kkt_tol: 1e-8, ..Default::default() };
        let s = solve_dirichlet(&prob, &opts).unwrap();
        for k in 0..6 {
            assert!((s.u[k] - k as f64 / 5.0).abs() < 1e-4, "{:?}", s.u);
        }
    }

    #[test]
    fn poisson_modification_lies_below() {
        let g = path(9);
        let dom = VertexSet::new((1..8).collect());
        let f = vec![1.0; 9];
        let opts = SolverOptions::default();
        for p in [1.5, 2.0, 3.0] {
            let u = solve_poisson(&g, &dom, &f, 0.0, p, &opts).unwrap().u;
            let hole = VertexSet::new(vec![4]);
            let w = poisson_modification(&g, &u, &dom, &hole, p, &opts).unwrap();
            assert!(dom.iter().all(|v| w[v] <= u[v] + 1e-8));
            assert!(is_superharmonic(&classify(&g, &w, p, &dom, 1e-8), &dom));
            assert_eq!(w[4], u[4]);
        }
        assert!(poisson_modification(&g, &vec![0.0; 9], &dom, &VertexSet::new(vec![0]), 2.0, &opts).is_err());
    }

    #[test]
    fn classify_examples() {
        let g = path(5);
        let all = VertexSet::new(vec![1, 2, 3]);
        let labels = classify(&g, &[1.0; 5], 2.0, &all, 1e-12);
        assert!(all.iter().all(|v| labels[v] == Label::Harmonic));
        let mut f = vec![1.0; 5];
        f[0] = 0.0;
        let s = solve_poisson(&g, &all, &f, 0.0, 1.5, &SolverOptions::default()).unwrap();
        let labels = classify(&g, &s.u, 1.5, &all, 1e-12);
        assert!(all.iter().all(|v| labels[v] == Label::Superharmonic));
    }

    #[test]
    fn comparison_examples() {
        let g = path(6);
        let dom = VertexSet::new(vec![1, 2, 3, 4]);
        let mut b = vec![0.0; 6];
        b[0] = 0.3;
        b[5] = 1.0;
        let u = solve_dirichlet(&DirichletProblem::harmonic(&g, dom.clone(), b.clone(), 2.5).unwrap(), &SolverOptions::default())
            .unwrap()
            .u;
        assert_eq!(check_comparison(&g, &u, &u, 2.5, &dom, 0.0, PRINCIPLE_TOL), Comparison::Holds);
        let shifted: Vec<f64> = b.iter().map(|x| x - 1.0).collect();
        let v = solve_dirichlet(&DirichletProblem::harmonic(&g, dom.clone(), shifted, 2.5).unwrap(), &SolverOptions::default())
            .unwrap()
            .u;
        assert_eq!(check_comparison(&g, &u, &v, 2.5, &dom, 0.0, PRINCIPLE_TOL), Comparison::Holds);
        assert_eq!(check_comparison(&g, &v, &u, 2.5, &dom, 0.0, PRINCIPLE_TOL), Comparison::Inconclusive);
    }
}
