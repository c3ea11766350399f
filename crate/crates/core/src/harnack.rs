//! Empirical checks of the iteration machinery: Harnack ratios, mean value
//! and growth estimates, BMO of logarithms, Sobolev, Caccioppoli and
//! Poincare ratios.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{build_cutoff_between, capacity, touches_frame, BallPolicy, CondenserSpec};
use crate::error::{Error, Result};
use crate::netgraph::{ball, graph_metric, MetricKind, NetGraph, VertexFn, VertexSet};
use crate::penergy::{abs_pow, energy, solve_dirichlet, DirichletProblem, SolverOptions};
use crate::scaling::PowerScaling;

/// Per-trial RNG: one ChaCha stream per trial index.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn mass_mean(graph: &NetGraph, f: impl Fn(usize) -> f64, set: &VertexSet) -> f64 {
    // uniform vertex mass, so the m-weighted mean is the plain mean
    let _ = graph;
    set.iter().map(f).sum::<f64>() / set.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Bumps,
    ExpField,
    Affine,
    Constant,
}

/// Nonnegative boundary data on `ring`, scaled to maximum 1. Trials cycle
/// through bumps, exponentiated random fields and clamped affine functions.
pub fn sample_boundary(graph: &NetGraph, ring: &VertexSet, center: usize, scale: f64, kind: BoundaryKind, rng: &mut ChaCha8Rng) -> VertexFn {
    let n = graph.n();
    let ids = ring.ids();
    let c = graph.coords(center);
    let mut g = vec![0.0; n];
    match kind {
        BoundaryKind::Constant => {
            for &v in ids {
                g[v] = 1.0;
            }
        }
        BoundaryKind::Bumps => {
            let k = rng.gen_range(1..=3);
            for _ in 0..k {
                let v = ids[rng.gen_range(0..ids.len())];
                g[v] = rng.gen_range(0.5..=1.0);
            }
        }
        BoundaryKind::ExpField => {
            let modes: Vec<(f64, f64, f64, f64)> = (0..6)
                .map(|_| {
                    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                    let freq = rng.gen_range(0.5..4.0) * std::f64::consts::TAU / scale;
                    (freq * angle.cos(), freq * angle.sin(), rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(-1.0..1.0))
                })
                .collect();
            for &v in ids {
                let x = graph.coords(v);
                let s: f64 = modes.iter().map(|&(kx, ky, ph, a)| a * (kx * x[0] + ky * x[1] + ph).cos()).sum();
                g[v] = s.exp();
            }
        }
        BoundaryKind::Affine => {
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let b = rng.gen_range(-0.5..0.5) * scale;
            for &v in ids {
                let x = graph.coords(v);
                g[v] = (angle.cos() * (x[0] - c[0]) + angle.sin() * (x[1] - c[1]) + b).max(0.0);
            }
            if ids.iter().all(|&v| g[v] == 0.0) {
                // the half-plane missed the ring; flip it
                for &v in ids {
                    let x = graph.coords(v);
                    g[v] = (-(angle.cos() * (x[0] - c[0]) + angle.sin() * (x[1] - c[1])) - b).max(0.0);
                }
            }
        }
    }
    let top = ids.iter().map(|&v| g[v]).fold(0.0, f64::max);
    if top > 0.0 {
        for &v in ids {
            g[v] /= top;
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackTrial {
    pub index: usize,
    pub kind: BoundaryKind,
    pub sup: f64,
    pub inf: f64,
    pub ratio: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackReport {
    pub center: usize,
    pub r: f64,
    pub a_h: f64,
    pub p: f64,
    pub delta_shift: f64,
    pub trials: Vec<HarnackTrial>,
    /// Max ratio over the trials that solved; `None` when a trial had
    /// `inf <= 0` or none solved.
    pub c_h_hat: Option<f64>,
    pub skipped: usize,
}

/// Solves the p-harmonic problem in `domain` with data `g` and returns
/// `(sup, inf)` of `u + delta_rel * max g` over `inner`.
pub fn harnack_trial(graph: &NetGraph, domain: &VertexSet, inner: &VertexSet, g: VertexFn, p: f64, delta_rel: f64, opts: &SolverOptions) -> Result<(f64, f64)> {
    let top = graph.boundary_ring(domain).iter().map(|v| g[v]).fold(0.0, f64::max);
    let prob = DirichletProblem::harmonic(graph, domain.clone(), g, p)?;
    let u = solve_dirichlet(&prob, opts)?.u;
    let delta = delta_rel * top;
    let sup = inner.iter().map(|v| u[v] + delta).fold(f64::NEG_INFINITY, f64::max);
    let inf = inner.iter().map(|v| u[v] + delta).fold(f64::INFINITY, f64::min);
    Ok((sup, inf))
}

pub const DEFAULT_DELTA_SHIFT: f64 = 1e-12;

/// Harnack ratios `sup / inf` over `B(center, r)` for nonnegative
/// p-harmonic functions on `B(center, a_h r)` with random boundary data.
#[allow(clippy::too_many_arguments)]
pub fn estimate_harnack(
    graph: &NetGraph,
    center: usize,
    r: f64,
    a_h: f64,
    p: f64,
    trials: usize,
    seed: u64,
    delta_rel: f64,
    policy: BallPolicy,
    opts: &SolverOptions,
) -> Result<HarnackReport> {
    if !(a_h > 1.0) {
        return Err(Error::Domain(format!("A_H must exceed 1, got {a_h}")));
    }
    let domain = ball(graph, center, a_h * r, MetricKind::Intrinsic);
    let ring = graph.boundary_ring(&domain);
    if ring.is_empty() {
        return Err(Error::Geometry("B(center, A_H r) has an empty boundary ring".into()));
    }
    if policy == BallPolicy::Interior && touches_frame(graph, &ring) {
        return Err(Error::Geometry("B(center, A_H r) reaches the edge of the cloud".into()));
    }
    let inner = ball(graph, center, r, MetricKind::Intrinsic);
    let kinds = [BoundaryKind::Bumps, BoundaryKind::ExpField, BoundaryKind::Affine];
    let records: Vec<HarnackTrial> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let kind = kinds[t % kinds.len()];
            let g = sample_boundary(graph, &ring, center, a_h * r, kind, &mut rng);
            match harnack_trial(graph, &domain, &inner, g, p, delta_rel, opts) {
                Ok((sup, inf)) => HarnackTrial { index: t, kind, sup, inf, ratio: sup / inf, note: None },
                Err(e) => HarnackTrial { index: t, kind, sup: f64::NAN, inf: f64::NAN, ratio: f64::NAN, note: Some(e.to_string()) },
            }
        })
        .collect();
    let solved: Vec<&HarnackTrial> = records.iter().filter(|t| t.note.is_none()).collect();
    let skipped = records.len() - solved.len();
    let c_h_hat = if !solved.is_empty() && solved.iter().all(|t| t.inf > 0.0) {
        Some(solved.iter().map(|t| t.ratio).fold(1.0, f64::max))
    } else {
        None
    };
    Ok(HarnackReport { center, r, a_h, p, delta_shift: delta_rel, trials: records, c_h_hat, skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanValueReport {
    /// `sup_{B(R/4)} u^q / mean_{B(R)} u^q`.
    pub ratio: Option<f64>,
    pub degenerate: bool,
}

/// L^q mean value ratio for a nonnegative subharmonic `u`.
pub fn check_mean_value(graph: &NetGraph, u: &[f64], center: usize, radius: f64, q: f64) -> Result<MeanValueReport> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!("q must be positive, got {q}")));
    }
    let big = ball(graph, center, radius, MetricKind::Intrinsic);
    let quarter = ball(graph, center, radius / 4.0, MetricKind::Intrinsic);
    if quarter.is_empty() {
        return Err(Error::Geometry("B(x, R/4) is empty".into()));
    }
    let mean = mass_mean(graph, |v| u[v].max(0.0).powf(q), &big);
    let sup = quarter.iter().map(|v| u[v].max(0.0).powf(q)).fold(0.0, f64::max);
    if mean == 0.0 {
        return Ok(MeanValueReport { ratio: None, degenerate: true });
    }
    Ok(MeanValueReport { ratio: Some(sup / mean), degenerate: false })
}

/// `(mean_{B(R)} u^q)^{1/q} / inf_{B(R/2)} u` for a nonnegative
/// superharmonic `u`; `None` when the infimum vanishes.
pub fn weak_harnack_ratio(graph: &NetGraph, u: &[f64], center: usize, radius: f64, q: f64) -> Result<Option<f64>> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!("q must be positive, got {q}")));
    }
    let big = ball(graph, center, radius, MetricKind::Intrinsic);
    let half = ball(graph, center, radius / 2.0, MetricKind::Intrinsic);
    let mean = mass_mean(graph, |v| u[v].max(0.0).powf(q), &big).powf(1.0 / q);
    let inf = half.iter().map(|v| u[v]).fold(f64::INFINITY, f64::min);
    Ok((inf > 0.0).then(|| mean / inf))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    /// `m(B and {u >= a}) / m(B)`.
    pub density: f64,
    pub hypothesis_holds: bool,
    /// `inf_{B/2} u / a` when the hypothesis holds.
    pub delta_hat: Option<f64>,
}

pub fn check_growth_lemma(graph: &NetGraph, u: &[f64], center: usize, radius: f64, a: f64, eps_fraction: f64) -> Result<GrowthReport> {
    if !(a > 0.0) {
        return Err(Error::Input("level a must be positive".into()));
    }
    let b = ball(graph, center, radius, MetricKind::Intrinsic);
    let half = ball(graph, center, radius / 2.0, MetricKind::Intrinsic);
    if b.is_empty() || half.is_empty() {
        return Err(Error::Geometry("empty ball".into()));
    }
    let density = b.iter().filter(|&v| u[v] >= a).count() as f64 / b.len() as f64;
    let hypothesis_holds = density >= eps_fraction;
    let delta_hat = hypothesis_holds.then(|| half.iter().map(|v| u[v]).fold(f64::INFINITY, f64::min) / a);
    Ok(GrowthReport { density, hypothesis_holds, delta_hat })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmoReport {
    pub norm: f64,
    /// Balls `(center, radius)` that lay inside the domain.
    pub balls: Vec<(usize, f64)>,
    pub per_ball: Vec<f64>,
}

/// Max over the given balls that lie inside `domain` of the mean of
/// `|u - u_B|`.
pub fn bmo_norm(graph: &NetGraph, u: &[f64], domain: &VertexSet, balls: &[(usize, f64)]) -> Result<BmoReport> {
    let mut used = Vec::new();
    let mut per_ball = Vec::new();
    for &(c, r) in balls {
        let b = ball(graph, c, r, MetricKind::Intrinsic);
        if b.is_empty() || !b.is_subset(domain) {
            continue;
        }
        let mean = mass_mean(graph, |v| u[v], &b);
        per_ball.push(mass_mean(graph, |v| (u[v] - mean).abs(), &b));
        used.push((c, r));
    }
    if used.is_empty() {
        return Err(Error::Input("no sampled ball lies inside the domain".into()));
    }
    let norm = per_ball.iter().cloned().fold(0.0, f64::max);
    Ok(BmoReport { norm, balls: used, per_ball })
}

/// Random balls with radii from `radii` whose closure stays in `domain`.
pub fn sample_balls(graph: &NetGraph, domain: &VertexSet, radii: &[f64], per_radius: usize, seed: u64) -> Vec<(usize, f64)> {
    let ids = domain.ids();
    let mut out = Vec::new();
    if ids.is_empty() {
        return out;
    }
    for (k, &r) in radii.iter().enumerate() {
        let mut rng = trial_rng(seed, k);
        let mut found = 0;
        for _ in 0..50 * per_radius {
            if found == per_radius {
                break;
            }
            let c = ids[rng.gen_range(0..ids.len())];
            let b = ball(graph, c, r, MetricKind::Intrinsic);
            if b.is_subset(domain) && graph.boundary_ring(&b).is_subset(domain) {
                out.push((c, r));
                found += 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogBmoReport {
    pub bmo: BmoReport,
    /// Absolute shift added to `h` (relative shift times max h).
    pub shift: f64,
    /// Fitted exponential decay rate of the level-set tails of
    /// `|u - u_B| / norm`.
    pub jn_rate: Option<f64>,
    /// `c` used for the crossover product, half the decay rate in units of u.
    pub crossover_c: Option<f64>,
    /// Max over balls of `mean exp(c(u-u_B)) * mean exp(-c(u-u_B))`.
    pub crossover_product: Option<f64>,
}

/// BMO of `log(h + shift_rel * max h)` plus John-Nirenberg tail and
/// crossover statistics. Scaling `h` leaves the report unchanged.
pub fn check_log_bmo(graph: &NetGraph, h: &[f64], domain: &VertexSet, balls: &[(usize, f64)], shift_rel: f64) -> Result<LogBmoReport> {
    let top = domain.iter().map(|v| h[v]).fold(0.0, f64::max);
    if domain.iter().any(|v| h[v] < 0.0) || !(top > 0.0) {
        return Err(Error::Input("h must be nonnegative and not identically zero".into()));
    }
    let shift = shift_rel * top;
    let mut u = vec![0.0; graph.n()];
    for v in domain.iter() {
        u[v] = (h[v] + shift).ln();
    }
    let bmo = bmo_norm(graph, &u, domain, balls)?;
    let norm = bmo.norm;
    let sets: Vec<(VertexSet, f64)> = bmo
        .balls
        .iter()
        .map(|&(c, r)| {
            let b = ball(graph, c, r, MetricKind::Intrinsic);
            let mean = mass_mean(graph, |v| u[v], &b);
            (b, mean)
        })
        .collect();
    let mut jn_rate = None;
    if norm > 0.0 {
        // tail T(s) = max over balls of m({|u - u_B| > s norm}) / m(B)
        let mut pts = Vec::new();
        let mut s = 0.5;
        loop {
            let tail = sets
                .iter()
                .map(|(b, mean)| b.iter().filter(|&v| (u[v] - mean).abs() > s * norm).count() as f64 / b.len() as f64)
                .fold(0.0, f64::max);
            if tail == 0.0 || s > 50.0 {
                break;
            }
            pts.push((s, tail.ln()));
            s += 0.5;
        }
        if pts.len() >= 2 {
            let k = pts.len() as f64;
            let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, &(x, y)| (a.0 + x, a.1 + y));
            let (mx, my) = (sx / k, sy / k);
            let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |a, &(x, y)| (a.0 + (x - mx) * (y - my), a.1 + (x - mx) * (x - mx)));
            let slope = sxy / sxx;
            if slope < 0.0 {
                jn_rate = Some(-slope);
            }
        }
    }
    let crossover_c = jn_rate.map(|rate| 0.5 * rate / norm);
    let crossover_product = crossover_c.map(|c| {
        sets.iter()
            .map(|(b, mean)| {
                let plus = mass_mean(graph, |v| (c * (u[v] - mean)).exp(), b);
                let minus = mass_mean(graph, |v| (-c * (u[v] - mean)).exp(), b);
                plus * minus
            })
            .fold(0.0, f64::max)
    });
    Ok(LogBmoReport { bmo, shift, jn_rate, crossover_c, crossover_product })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevCheckSpec {
    pub beta_star: f64,
    pub c_vd_hat: f64,
    pub nu: f64,
    pub kappa: f64,
}

impl SobolevCheckSpec {
    pub fn new(beta_star: f64, c_vd_hat: f64) -> Result<Self> {
        if !(beta_star > 0.0) || !(c_vd_hat >= 1.0) {
            return Err(Error::Domain("need beta_star > 0 and C_VD >= 1".into()));
        }
        let nu = (beta_star + 1.0).max(c_vd_hat.log2());
        Ok(SobolevCheckSpec { beta_star, c_vd_hat, nu, kappa: nu / (nu - beta_star) })
    }
}

/// Max of `m(B(x, 2r)) / m(B(x, r))` over the given balls.
pub fn measure_doubling(graph: &NetGraph, balls: &[(usize, f64)]) -> f64 {
    balls
        .iter()
        .map(|&(c, r)| {
            let dist = graph_metric(graph, c);
            let small = dist.iter().filter(|&&d| d < r).count();
            let big = dist.iter().filter(|&&d| d < 2.0 * r).count();
            big as f64 / small.max(1) as f64
        })
        .fold(1.0, f64::max)
}

/// `(sum m |f|^{p kappa})^{1/kappa} / (psi_hat(R) / V(R)^{(kappa-1)/kappa} E(f))`
/// for `f` supported in `B(center, R)`.
pub fn check_sobolev(graph: &NetGraph, f: &[f64], center: usize, radius: f64, spec: &SobolevCheckSpec, psi_hat: PowerScaling, p: f64) -> Result<f64> {
    let b = ball(graph, center, radius, MetricKind::Intrinsic);
    let mask = b.mask(graph.n());
    if (0..graph.n()).any(|v| !mask[v] && f[v] != 0.0) {
        return Err(Error::Precondition("f must vanish outside the ball".into()));
    }
    let k = spec.kappa;
    let m = graph.vertex_mass();
    let lhs = (m * b.iter().map(|v| abs_pow(f[v], p * k)).sum::<f64>()).powf(1.0 / k);
    let e = energy(graph, f, p, None);
    if e == 0.0 {
        return if lhs == 0.0 { Ok(0.0) } else { Err(Error::Precondition("nonzero f with zero energy".into())) };
    }
    let vol = graph.measure(&b);
    Ok(lhs / (psi_hat.at(radius) / vol.powf((k - 1.0) / k) * e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaccioppoliReport {
    pub ratio: f64,
    pub cutoff_energy: f64,
}

/// `E(phi (u - theta)_+) psi_hat(r) / sum_{B(R+r)} m u^p`, with `phi` the
/// constructed cutoff for `B(R)` inside `B(R + r)`.
#[allow(clippy::too_many_arguments)]
pub fn check_caccioppoli(
    graph: &NetGraph,
    u: &[f64],
    center: usize,
    radius: f64,
    gap: f64,
    theta: f64,
    psi_hat: PowerScaling,
    p: f64,
    opts: &SolverOptions,
) -> Result<CaccioppoliReport> {
    let cut = build_cutoff_between(graph, center, radius, radius + gap, psi_hat, p, opts)?;
    let w: Vec<f64> = (0..graph.n()).map(|v| cut.phi[v] * (u[v] - theta).max(0.0)).collect();
    let big = ball(graph, center, radius + gap, MetricKind::Intrinsic);
    let denom = graph.vertex_mass() * big.iter().map(|v| abs_pow(u[v], p)).sum::<f64>();
    let num = energy(graph, &w, p, None) * psi_hat.at(gap);
    let ratio = if num == 0.0 { 0.0 } else { num / denom };
    Ok(CaccioppoliReport { ratio, cutoff_energy: cut.energy })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    /// Max over nonconstant probes of `lhs / (psi_hat(r) E_{A B}(f))`.
    pub c_pi_hat: f64,
    pub per_probe: Vec<Option<f64>>,
    /// For p = 2: the exact supremum of the quotient.
    pub exact: Option<f64>,
}

pub fn poincare_quotient(graph: &NetGraph, f: &[f64], b: &VertexSet, ab: &VertexSet, p: f64) -> Option<f64> {
    let mean = mass_mean(graph, |v| f[v], b);
    let lhs = graph.vertex_mass() * b.iter().map(|v| abs_pow(f[v] - mean, p)).sum::<f64>();
    let e = energy(graph, f, p, Some(ab));
    let scale = b.iter().map(|v| f[v].abs()).fold(0.0, f64::max);
    if lhs <= 1e-24 * graph.vertex_mass() * scale.powf(p) * b.len() as f64 || e == 0.0 {
        return None;
    }
    Some(lhs / e)
}

/// Largest exact `sum_B m |f - f_B|^2 / E_{AB}(f)` for p = 2: the inverse of
/// the smallest nonzero eigenvalue of the Schur complement on `B` of the
/// weighted Laplacian of `A B`, divided by the vertex mass.
pub fn poincare_exact_p2(graph: &NetGraph, b: &VertexSet, ab: &VertexSet) -> Result<f64> {
    // keep the part of AB reachable from B
    let n = graph.n();
    let in_ab = ab.mask(n);
    let mut keep = vec![false; n];
    let mut stack: Vec<usize> = b.iter().collect();
    for &v in &stack {
        keep[v] = true;
    }
    while let Some(v) = stack.pop() {
        for &w in graph.neighbors(v) {
            if in_ab[w] && !keep[w] {
                keep[w] = true;
                stack.push(w);
            }
        }
    }
    let in_b = b.mask(n);
    let inner: Vec<usize> = b.iter().collect();
    let outer: Vec<usize> = (0..n).filter(|&v| keep[v] && !in_b[v]).collect();
    if inner.len() + outer.len() > 4000 {
        return Err(Error::Resource("exact Poincare route is limited to 4000 vertices".into()));
    }
    let mut pos = vec![usize::MAX; n];
    for (i, &v) in inner.iter().chain(outer.iter()).enumerate() {
        pos[v] = i;
    }
    let k = inner.len() + outer.len();
    let c = graph.conductance_factor();
    let mut lap = DMatrix::<f64>::zeros(k, k);
    for &(a, bb) in graph.edges() {
        if pos[a] != usize::MAX && pos[bb] != usize::MAX {
            let (i, j) = (pos[a], pos[bb]);
            lap[(i, i)] += c;
            lap[(j, j)] += c;
            lap[(i, j)] -= c;
            lap[(j, i)] -= c;
        }
    }
    let nb = inner.len();
    let schur = if outer.is_empty() {
        lap
    } else {
        let l_bb = lap.view((0, 0), (nb, nb)).into_owned();
        let l_bo = lap.view((0, nb), (nb, k - nb)).into_owned();
        let l_oo = lap.view((nb, nb), (k - nb, k - nb)).into_owned();
        let chol = l_oo.cholesky().ok_or_else(|| Error::Geometry("outer block is singular".into()))?;
        let x = chol.solve(&l_bo.transpose());
        l_bb - &l_bo * x
    };
    let eig = SymmetricEigen::new(schur);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    let top = vals.last().cloned().unwrap_or(0.0).abs();
    let second = vals.iter().skip(1).cloned().find(|&v| v > 1e-12 * top).ok_or_else(|| Error::Geometry("ball has a single vertex".into()))?;
    Ok(graph.vertex_mass() / second)
}

/// Probe functions for the Poincare check: the coordinates, the capacity
/// potential of `B(r/2)` inside `B(r)`, and random low-frequency fields.
pub fn poincare_probes(graph: &NetGraph, center: usize, r: f64, count: usize, seed: u64, p: f64, opts: &SolverOptions) -> Result<Vec<VertexFn>> {
    let n = graph.n();
    let coords = graph.all_coords();
    let mut probes = vec![coords.iter().map(|c| c[0]).collect::<Vec<_>>()];
    if graph.dim() > 1 {
        probes.push(coords.iter().map(|c| c[1]).collect());
    }
    let dist = graph_metric(graph, center);
    let a0 = VertexSet::new((0..n).filter(|&v| dist[v] < r / 2.0).collect());
    let a1 = VertexSet::new((0..n).filter(|&v| dist[v] >= r).collect());
    if !a0.is_empty() && !a1.is_empty() {
        probes.push(capacity(graph, &CondenserSpec::new(a0, a1), p, opts)?.potential);
    }
    for t in 0..count {
        let mut rng = trial_rng(seed, t);
        let modes: Vec<(f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                let freq = rng.gen_range(0.25..2.0) * std::f64::consts::TAU / (2.0 * r);
                (freq * angle.cos(), freq * angle.sin(), rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(-1.0..1.0))
            })
            .collect();
        probes.push(
            coords
                .iter()
                .map(|x| modes.iter().map(|&(kx, ky, ph, a)| a * (kx * x[0] + ky * x[1] + ph).cos()).sum())
                .collect(),
        );
    }
    Ok(probes)
}

/// Lower estimate of the Poincare constant on `B(center, r)` with energy on
/// `B(center, a_pi r)`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_poincare(graph: &NetGraph, center: usize, r: f64, a_pi: f64, probes: &[VertexFn], psi_hat: PowerScaling, p: f64, exact: bool) -> Result<PoincareReport> {
    if !(a_pi >= 1.0) {
        return Err(Error::Domain(format!("A_PI must be at least 1, got {a_pi}")));
    }
    let b = ball(graph, center, r, MetricKind::Intrinsic);
    let ab = ball(graph, center, a_pi * r, MetricKind::Intrinsic);
    let psi = psi_hat.at(r);
    let per_probe: Vec<Option<f64>> = probes.iter().map(|f| poincare_quotient(graph, f, &b, &ab, p).map(|q| q / psi)).collect();
    let exact = if exact && p == 2.0 { Some(poincare_exact_p2(graph, &b, &ab)? / psi) } else { None };
    let best = per_probe.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    let c_pi_hat = match exact {
        Some(e) => e.max(best),
        None if best.is_finite() => best,
        None => return Err(Error::Input("every probe is constant on the ball".into())),
    };
    Ok(PoincareReport { c_pi_hat, per_probe, exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penergy::tests::path;

    #[test]
    fn constant_data_gives_ratio_one() {
        let g = path(21);
        let domain = VertexSet::new((1..20).collect());
        let inner = VertexSet::new((8..13).collect());
        let mut data = vec![0.0; 21];
        data[0] = 2.0;
        data[20] = 2.0;
        let (sup, inf) = harnack_trial(&g, &domain, &inner, data, 3.0, DEFAULT_DELTA_SHIFT, &SolverOptions::default()).unwrap();
        assert!((sup / inf - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bmo_of_constant_and_checkerboard() {
        let g = path(20);
        let all = VertexSet::all(20);
        let balls = [(10, 3.5), (5, 2.5)];
        assert_eq!(bmo_norm(&g, &[4.0; 20], &all, &balls).unwrap().norm, 0.0);
        let alt: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        // B(10, 4.5) holds 6..=14: five +1, four -1, mean 1/9, and for
        // two-valued data the mean oscillation is 1 - mean^2
        let rep = bmo_norm(&g, &alt, &all, &[(10, 4.5)]).unwrap();
        assert!((rep.norm - 80.0 / 81.0).abs() < 1e-15, "{}", rep.norm);
    }

    #[test]
    fn log_bmo_is_scale_invariant() {
        let g = path(30);
        let all = VertexSet::all(30);
        let h: Vec<f64> = (0..30).map(|i| 1.0 + (i as f64 * 0.3).sin().abs()).collect();
        let h100: Vec<f64> = h.iter().map(|x| 100.0 * x).collect();
        let balls = [(10, 4.0), (15, 6.0), (20, 3.0)];
        let a = check_log_bmo(&g, &h, &all, &balls, 1e-6).unwrap();
        let b = check_log_bmo(&g, &h100, &all, &balls, 1e-6).unwrap();
        assert!((a.bmo.norm - b.bmo.norm).abs() <= 1e-10 * a.bmo.norm);
    }

    #[test]
    fn growth_lemma_trivial_case() {
        let g = path(9);
        let rep = check_growth_lemma(&g, &[2.0; 9], 4, 3.5, 1.0, 0.5).unwrap();
        assert!(rep.hypothesis_holds);
        assert!(rep.delta_hat.unwrap() >= 1.0);
    }

    #[test]
    fn interval_poincare_matches_neumann_eigenvalue() {
        // 64 vertices at unit spacing: length 63, continuum value 63^2/pi^2
        let g = path(64);
        let all = VertexSet::all(64);
        let exact = poincare_exact_p2(&g, &all, &all).unwrap();
        let want = 63f64.powi(2) / std::f64::consts::PI.powi(2);
        assert!((exact / want - 1.0).abs() < 0.2, "{exact} vs {want}");
    }

    #[test]
    fn sobolev_ratio_is_homogeneous() {
        let g = path(11);
        let f: Vec<f64> = (0..11).map(|i| if (1..10).contains(&i) { (5.0 - (i as f64 - 5.0).abs()) / 5.0 } else { 0.0 }).collect();
        let spec = SobolevCheckSpec::new(2.0, 2.0).unwrap();
        let psi = PowerScaling::walk(2.0);
        let a = check_sobolev(&g, &f, 5, 5.5, &spec, psi, 2.0).unwrap();
        let f3: Vec<f64> = f.iter().map(|x| 3.0 * x).collect();
        let b = check_sobolev(&g, &f3, 5, 5.5, &spec, psi, 2.0).unwrap();
        assert!((a / b - 1.0).abs() < 1e-12);
        assert!(spec.kappa > 1.0);
    }
}
