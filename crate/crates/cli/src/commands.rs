//! One function per subcommand.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde_json::{json, Value};

use ppot::acceptance::run_all;
use ppot::cable::{build_cable_system, cable_energy, interpolate, CableRegion};
use ppot::capacity::{
    build_cutoff, capacity, capacity_scaling_sweep, check_cutoff_sobolev, verify_wolff_bounds, BallPolicy, CondenserSpec, GammaSplit,
};
use ppot::harnack::{estimate_harnack, estimate_poincare, poincare_probes, sample_boundary, trial_rng, BoundaryKind, DEFAULT_DELTA_SHIFT};
use ppot::modulus::{p_modulus, ModulusOptions};
use ppot::netgraph::{build_graph, check_llc, graph_metric, NetGraph, VertexSet};
use ppot::penergy::{solve_dirichlet, DirichletProblem, SolverOptions};
use ppot::scaling::PowerScaling;
use ppot::spaces::{extract_epsnet, generate_space, NetSpec, SpaceKind};

use crate::config::Config;
use crate::report::{write_file, Failure};
use crate::{CenterArgs, Command, DataKind, GraphArg, Outcome, Policy};

type Dispatched = (&'static str, Value, Outcome);

pub fn dispatch(cmd: &Command, cfg: &Config) -> Result<Dispatched, Failure> {
    let params = serde_json::to_value(cmd).map_err(|e| Failure::input(e.to_string()))?;
    let opts = cfg.solver.options();
    let p_of = |p: &Option<f64>| -> Result<f64, Failure> {
        let p = p.or(cfg.p).unwrap_or(2.0);
        if p > 1.0 {
            Ok(p)
        } else {
            Err(Failure::input(format!("p must exceed 1, got {p}")))
        }
    };
    let outcome = match cmd {
        Command::BuildGraph { kind, level, scale, epsilon, seed, d_h, beta, out, .. } => {
            return build(cfg, kind, *level, *scale, *epsilon, *seed, *d_h, *beta, out).map(|o| ("build-graph", params, o));
        }
        Command::Solve { graph, center, r, p, lambda, f, boundary, seed, out, .. } => {
            let g = load_graph(graph, cfg)?;
            solve(&g, center, *r, p_of(p)?, *lambda, *f, *boundary, *seed, out.as_deref(), &opts)?
        }
        Command::Capacity { graph, center, r, a, p, .. } => {
            let g = load_graph(graph, cfg)?;
            let (x0, spec) = condenser(&g, center, *r, *a)?;
            let res = capacity(&g, &spec, p_of(p)?, &opts)?;
            let mut asserts = BTreeMap::new();
            asserts.insert("value_nonnegative".into(), res.value >= 0.0);
            asserts.insert("kkt_within_tol".into(), res.kkt_residual <= opts.kkt_tol);
            outcome(
                json!({"center": x0, "value": res.value, "kkt_residual": res.kkt_residual, "p": res.p,
                       "plate_sizes": [spec.a0.len(), spec.a1.len()]}),
                asserts,
            )
        }
        Command::Modulus { graph, center, r, a, p, tol, .. } => {
            let g = load_graph(graph, cfg)?;
            let (x0, spec) = condenser(&g, center, *r, *a)?;
            let res = p_modulus(&g, &spec, p_of(p)?, &ModulusOptions { tol: *tol, ..Default::default() })?;
            let mut asserts = BTreeMap::new();
            asserts.insert("gap_within_tol".into(), res.duality_gap_estimate <= *tol * res.value.max(f64::MIN_POSITIVE) * (1.0 + 1e-9));
            outcome(
                json!({"center": x0, "value": res.value, "lower_bound": res.lower_bound, "gap": res.duality_gap_estimate,
                       "rounds": res.rounds, "active_paths": res.active_paths.len(), "admissibility_slack": res.admissibility_slack}),
                asserts,
            )
        }
        Command::Wolff { graph, center, radius, p, f, .. } => {
            let g = load_graph(graph, cfg)?;
            let x0 = center_vertex(&g, center);
            let d = graph_metric(&g, x0);
            let domain = VertexSet::new((0..g.n()).filter(|&v| d[v] < 4.0 * radius + 2.0 * g.epsilon()).collect());
            let rep = verify_wolff_bounds(&g, &domain, x0, *radius, &vec![*f; g.n()], p_of(p)?, &opts)?;
            let mut asserts = BTreeMap::new();
            asserts.insert("nondegenerate".into(), !rep.degenerate);
            outcome(to_value(&rep)?, asserts)
        }
        Command::Cutoff { graph, center, radius, p, beta, probes, seed, .. } => {
            let g = load_graph(graph, cfg)?;
            let p = p_of(p)?;
            let psi = beta.map(PowerScaling::walk).unwrap_or_else(|| g.psi());
            let g = g.with_psi(psi);
            let x0 = center_vertex(&g, center);
            let cut = build_cutoff(&g, x0, *radius, psi, p, &opts)?;
            let extra = probes.saturating_sub(3);
            let fs = poincare_probes(&g, x0, 2.0 * radius, extra, *seed, p, &opts)?;
            let fit = check_cutoff_sobolev(&g, &cut, &fs, psi.at(*radius), GammaSplit::Half)?;
            let mut asserts = BTreeMap::new();
            let in_range = cut.phi.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x));
            asserts.insert("phi_in_unit_interval".into(), in_range);
            asserts.insert("constants_finite".into(), fit.c1.is_finite() && fit.c2.is_finite());
            outcome(
                json!({"center": x0, "radius": radius, "p": p, "lambda": cut.lambda, "energy": cut.energy, "c3": cut.c3,
                       "c1": fit.c1, "c2": fit.c2, "frontier": fit.frontier, "probes": fs.len()}),
                asserts,
            )
        }
        Command::Harnack { graph, center, r, a_h, p, trials, seed, policy, .. } => {
            let g = load_graph(graph, cfg)?;
            let x0 = center_vertex(&g, center);
            let rep = estimate_harnack(&g, x0, *r, *a_h, p_of(p)?, *trials, *seed, DEFAULT_DELTA_SHIFT, ball_policy(*policy), &opts)?;
            let mut asserts = BTreeMap::new();
            asserts.insert("all_inf_positive".into(), rep.trials.iter().all(|t| t.inf > 0.0));
            asserts.insert("c_h_finite".into(), rep.c_h_hat.is_some_and(f64::is_finite));
            outcome(to_value(&rep)?, asserts)
        }
        Command::Poincare { graph, center, r, a_pi, p, probes, seed, exact, .. } => {
            let g = load_graph(graph, cfg)?;
            let p = p_of(p)?;
            let x0 = center_vertex(&g, center);
            let fs = poincare_probes(&g, x0, *r, *probes, *seed, p, &opts)?;
            let rep = estimate_poincare(&g, x0, *r, *a_pi, &fs, g.psi(), p, *exact)?;
            let mut asserts = BTreeMap::new();
            asserts.insert("finite".into(), rep.c_pi_hat.is_finite());
            outcome(to_value(&rep)?, asserts)
        }
        Command::ScalingSweep { graph, center, radii, a, p, policy, csv, .. } => {
            let g = load_graph(graph, cfg)?;
            let x0 = center_vertex(&g, center);
            let sweep = capacity_scaling_sweep(&g, x0, radii, *a, p_of(p)?, ball_policy(*policy), &opts)?;
            let mut out = outcome(to_value(&sweep)?, BTreeMap::new());
            if let Some(path) = csv {
                write_file(path, &sweep.to_csv())?;
                out.outputs.push(path.display().to_string());
            }
            out.assertions.insert("fitted".into(), sweep.slope.is_some());
            out
        }
        Command::Llc { graph, center, r, a, expect, .. } => {
            let g = load_graph(graph, cfg)?;
            let x0 = center_vertex(&g, center);
            let rep = check_llc(&g, x0, *r, *a)?;
            let mut asserts = BTreeMap::new();
            if let Some(want) = expect {
                asserts.insert("matches_expectation".into(), rep.connected == *want);
            }
            outcome(to_value(&rep)?, asserts)
        }
        Command::Cable { graph, p, samples, seed, .. } => {
            let g = load_graph(graph, cfg)?;
            let p = p_of(p)?;
            let cs = build_cable_system(&g);
            let mut worst: f64 = 0.0;
            for t in 0..*samples {
                let mut rng = trial_rng(*seed, t);
                let u: Vec<f64> = (0..g.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let e = ppot::penergy::energy(&g, &u, p, None);
                let c = cable_energy(&g, &cs, &interpolate(&g, &u)?, p, CableRegion::All);
                if e > 0.0 {
                    worst = worst.max((c - e).abs() / e);
                }
            }
            let mut asserts = BTreeMap::new();
            asserts.insert("energy_identity".into(), worst <= 1e-12);
            outcome(
                json!({"cables": cs.cables.len(), "total_mass": cs.total_mass(), "vertex_mass": cs.vertex_mass(),
                       "p": p, "samples": samples, "max_relative_gap": worst}),
                asserts,
            )
        }
        Command::VerifyAll { only, .. } => {
            let mut acc = cfg.acceptance.clone();
            if !only.is_empty() {
                acc.only = only.clone();
            }
            let results = run_all(&acc, |o| eprintln!("{}", o.line()));
            let mut asserts = BTreeMap::new();
            for o in &results {
                asserts.insert(format!("criterion_{:02}", o.id), o.passed);
            }
            let rows: Vec<Value> = results.iter().map(|o| json!({"id": o.id, "name": o.name, "passed": o.passed, "detail": o.detail})).collect();
            outcome(json!({ "criteria": rows }), asserts)
        }
    };
    Ok((name_of(cmd), params, outcome))
}

fn name_of(cmd: &Command) -> &'static str {
    match cmd {
        Command::BuildGraph { .. } => "build-graph",
        Command::Solve { .. } => "solve",
        Command::Capacity { .. } => "capacity",
        Command::Modulus { .. } => "modulus",
        Command::Wolff { .. } => "wolff",
        Command::Cutoff { .. } => "cutoff",
        Command::Harnack { .. } => "harnack",
        Command::Poincare { .. } => "poincare",
        Command::ScalingSweep { .. } => "scaling-sweep",
        Command::Llc { .. } => "llc",
        Command::Cable { .. } => "cable",
        Command::VerifyAll { .. } => "verify-all",
    }
}

fn outcome(result: Value, assertions: BTreeMap<String, bool>) -> Outcome {
    Outcome { result, assertions, outputs: Vec::new() }
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value, Failure> {
    serde_json::to_value(x).map_err(|e| Failure::input(e.to_string()))
}

fn ball_policy(p: Policy) -> BallPolicy {
    match p {
        Policy::Interior => BallPolicy::Interior,
        Policy::Any => BallPolicy::Any,
    }
}

fn center_vertex(g: &NetGraph, c: &CenterArgs) -> usize {
    g.nearest_vertex(c.center_x, c.center_y)
}

/// `B(x, r)` against the complement of `B(x, a r)`.
fn condenser(g: &NetGraph, c: &CenterArgs, r: f64, a: f64) -> Result<(usize, CondenserSpec), Failure> {
    if !(r > 0.0 && a > 1.0) {
        return Err(Failure::input(format!("need r > 0 and A > 1 (got r={r}, A={a})")));
    }
    let x0 = center_vertex(g, c);
    let d = graph_metric(g, x0);
    let a0 = VertexSet::new((0..g.n()).filter(|&v| d[v] < r).collect());
    let a1 = VertexSet::new((0..g.n()).filter(|&v| d[v] >= a * r).collect());
    if a1.is_empty() {
        return Err(Failure::input("the outer ball covers the whole graph"));
    }
    Ok((x0, CondenserSpec::new(a0, a1)))
}

fn graph_from_config(cfg: &Config) -> Result<NetGraph, Failure> {
    let (space, net) = match (&cfg.space, &cfg.net) {
        (Some(s), Some(n)) => (s, n),
        _ => return Err(Failure::input("no --graph given and the config lacks [space] and [net]")),
    };
    make_graph(&space.kind, space.level, space.scale, net.epsilon, net.seed, cfg.scaling.d_h, cfg.fixed_beta())
}

fn load_graph(arg: &GraphArg, cfg: &Config) -> Result<NetGraph, Failure> {
    let g = match &arg.graph {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
            NetGraph::from_json(&text)?
        }
        None => graph_from_config(cfg)?,
    };
    Ok(match cfg.fixed_beta() {
        Some(b) => g.with_psi(PowerScaling::walk(b)),
        None => g,
    })
}

fn default_scale(kind: SpaceKind, level: u32) -> f64 {
    match kind {
        SpaceKind::Interval | SpaceKind::Lattice2d => level.max(1) as f64,
        SpaceKind::Carpet | SpaceKind::Gasket => 1.0,
    }
}

fn make_graph(kind: &str, level: u32, scale: Option<f64>, epsilon: f64, seed: u64, d_h: Option<f64>, beta: Option<f64>) -> Result<NetGraph, Failure> {
    let kind = SpaceKind::parse(kind)?;
    let cloud = generate_space(kind, level, scale.unwrap_or_else(|| default_scale(kind, level)))?;
    let net = extract_epsnet(&cloud, &NetSpec { epsilon, seed })?;
    let phi = PowerScaling::volume(d_h.unwrap_or(cloud.d_h));
    let psi = PowerScaling::walk(beta.unwrap_or(2.0));
    Ok(build_graph(&cloud, &net, epsilon, phi, psi)?)
}

#[allow(clippy::too_many_arguments)]
fn build(
    cfg: &Config,
    kind: &Option<String>,
    level: Option<u32>,
    scale: Option<f64>,
    epsilon: Option<f64>,
    seed: Option<u64>,
    d_h: Option<f64>,
    beta: Option<f64>,
    out: &Path,
) -> Result<Outcome, Failure> {
    let space = cfg.space.as_ref();
    let net = cfg.net.as_ref();
    let kind = kind.clone().or_else(|| space.map(|s| s.kind.clone())).ok_or_else(|| Failure::input("--kind is required"))?;
    let level = level.or(space.map(|s| s.level)).ok_or_else(|| Failure::input("--level is required"))?;
    let scale = scale.or(space.and_then(|s| s.scale));
    let epsilon = epsilon.or(net.map(|n| n.epsilon)).ok_or_else(|| Failure::input("--epsilon is required"))?;
    let seed = seed.or(net.map(|n| n.seed)).unwrap_or(1);
    let g = make_graph(&kind, level, scale, epsilon, seed, d_h.or(cfg.scaling.d_h), beta.or(cfg.fixed_beta()))?;
    write_file(out, &g.to_json()?)?;
    let degree = (0..g.n()).map(|v| g.degree(v)).max().unwrap_or(0);
    let mut asserts = BTreeMap::new();
    asserts.insert("nonempty".into(), g.n() > 0);
    let mut o = outcome(
        json!({"kind": kind, "level": level, "epsilon": epsilon, "vertices": g.n(), "edges": g.num_edges(), "max_degree": degree}),
        asserts,
    );
    o.outputs.push(out.display().to_string());
    Ok(o)
}

#[allow(clippy::too_many_arguments)]
fn solve(
    g: &NetGraph,
    c: &CenterArgs,
    r: f64,
    p: f64,
    lambda: f64,
    f: f64,
    data: DataKind,
    seed: u64,
    out: Option<&Path>,
    opts: &SolverOptions,
) -> Result<Outcome, Failure> {
    let x0 = center_vertex(g, c);
    let d = graph_metric(g, x0);
    let domain = VertexSet::new((0..g.n()).filter(|&v| d[v] < r).collect());
    let ring = g.boundary_ring(&domain);
    let values = if ring.is_empty() {
        vec![0.0; g.n()]
    } else {
        let kind = match data {
            DataKind::Constant => BoundaryKind::Constant,
            DataKind::Affine => BoundaryKind::Affine,
            DataKind::Bumps => BoundaryKind::Bumps,
            DataKind::Expfield => BoundaryKind::ExpField,
        };
        sample_boundary(g, &ring, x0, r, kind, &mut trial_rng(seed, 0))
    };
    let prob = DirichletProblem::new(g, domain.clone(), values.clone(), lambda, vec![f; g.n()], p)?;
    let sol = solve_dirichlet(&prob, opts)?;
    let mut asserts = BTreeMap::new();
    asserts.insert("kkt_within_tol".into(), sol.kkt_residual <= opts.kkt_tol);
    if f == 0.0 && lambda == 0.0 && !ring.is_empty() {
        let lo = ring.iter().map(|v| values[v]).fold(f64::INFINITY, f64::min);
        let hi = ring.iter().map(|v| values[v]).fold(f64::NEG_INFINITY, f64::max);
        asserts.insert("maximum_principle".into(), domain.iter().all(|v| sol.u[v] >= lo - 1e-8 && sol.u[v] <= hi + 1e-8));
    }
    let mut o = outcome(
        json!({"center": x0, "domain_size": domain.len(), "ring_size": ring.len(), "iterations": sol.iterations,
               "final_energy": sol.final_energy, "kkt_residual": sol.kkt_residual,
               "max_u": domain.iter().map(|v| sol.u[v]).fold(f64::NEG_INFINITY, f64::max),
               "min_u": domain.iter().map(|v| sol.u[v]).fold(f64::INFINITY, f64::min)}),
        asserts,
    );
    if let Some(path) = out {
        write_file(path, &ppot::canon::to_canonical_json(&sol, false)?)?;
        o.outputs.push(path.display().to_string());
    }
    Ok(o)
}
