//! Cable system over a net graph: each edge becomes a segment of its own
//! length carrying the measure `Phi(eps)/length` times arc length, so every
//! cable has mass `Phi(eps)`. Functions are vertex-determined and linear on
//! each cable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgraph::{NetGraph, VertexSet};
use crate::scaling::PowerScaling;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cable {
    pub a: usize,
    pub b: usize,
    pub length: f64,
    /// Density of the cable measure against arc length.
    pub density: f64,
}

impl Cable {
    /// Mass under the cable measure (always `Phi(eps)` up to rounding).
    pub fn mass(&self) -> f64 {
        self.density * self.length
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CableSystem {
    pub epsilon: f64,
    pub phi: PowerScaling,
    pub psi: PowerScaling,
    pub cables: Vec<Cable>,
}

impl CableSystem {
    pub fn vertex_mass(&self) -> f64 {
        self.phi.at(self.epsilon)
    }

    pub fn conductance_factor(&self) -> f64 {
        self.phi.at(self.epsilon) / self.psi.at(self.epsilon)
    }

    pub fn total_mass(&self) -> f64 {
        self.cables.iter().map(Cable::mass).sum()
    }

    /// Volume scaling with a linear branch below `eps`.
    pub fn phi_eps(&self, r: f64) -> f64 {
        if r <= self.epsilon {
            self.phi.at(self.epsilon) * r / self.epsilon
        } else {
            self.phi.at(r)
        }
    }

    /// Walk scaling with exponent `p` below `eps`.
    pub fn psi_eps(&self, r: f64, p: f64) -> f64 {
        if r <= self.epsilon {
            self.psi.at(self.epsilon) * (r / self.epsilon).powf(p)
        } else {
            self.psi.at(r)
        }
    }

    /// `(r/R)^tau Phi_eps(R)/Phi_eps(r)` divided by `Psi_eps(R)/Psi_eps(r)`.
    pub fn volume_walk_ratio(&self, r: f64, big_r: f64, tau: f64, p: f64) -> f64 {
        (r / big_r).powf(tau) * self.phi_eps(big_r) / self.phi_eps(r) * self.psi_eps(r, p) / self.psi_eps(big_r, p)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Io(e.to_string()))
    }
}

pub fn build_cable_system(graph: &NetGraph) -> CableSystem {
    let mass = graph.vertex_mass();
    let cables = graph
        .edges()
        .iter()
        .zip(graph.edge_lengths())
        .map(|(&(a, b), &length)| Cable { a, b, length, density: mass / length })
        .collect();
    CableSystem { epsilon: graph.epsilon(), phi: graph.phi(), psi: graph.psi(), cables }
}

/// Piecewise-linear function on the cables, stored by its vertex values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CableFn {
    pub values: Vec<f64>,
}

impl CableFn {
    /// Value at arc length `t` from `cable.a`.
    pub fn at(&self, cable: &Cable, t: f64) -> f64 {
        let (ua, ub) = (self.values[cable.a], self.values[cable.b]);
        (t * ub + (cable.length - t) * ua) / cable.length
    }

    /// Constant derivative along the cable, oriented from `a` to `b`.
    pub fn gradient(&self, cable: &Cable) -> f64 {
        (self.values[cable.b] - self.values[cable.a]) / cable.length
    }

    pub fn restrict(&self) -> &[f64] {
        &self.values
    }
}

pub fn interpolate(graph: &NetGraph, u: &[f64]) -> Result<CableFn> {
    if u.len() != graph.n() {
        return Err(Error::Input(format!("function has {} values for {} vertices", u.len(), graph.n())));
    }
    Ok(CableFn { values: u.to_vec() })
}

/// Which cables an energy is summed over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CableRegion {
    All,
    /// Cables whose open interior meets the intrinsic ball.
    Ball { center: usize, r: f64 },
}

fn vertex_distances(graph: &NetGraph, center: usize, r: f64) -> Vec<f64> {
    graph.distances_within(center, r)
}

/// `(Phi(eps)/Psi(eps)) * length^{p-1} * integral of |gradient|^p` over each
/// selected cable, the integral taken against arc length.
pub fn cable_energy(graph: &NetGraph, cs: &CableSystem, f: &CableFn, p: f64, region: CableRegion) -> f64 {
    let factor = cs.conductance_factor();
    let dist = match region {
        CableRegion::All => None,
        CableRegion::Ball { center, r } => Some((vertex_distances(graph, center, r), r)),
    };
    let mut total = 0.0;
    for c in &cs.cables {
        if let Some((d, r)) = &dist {
            if d[c.a].min(d[c.b]) >= *r {
                continue;
            }
        }
        let integral = f.gradient(c).abs().powf(p) * c.length;
        total += c.length.powf(p - 1.0) * integral;
    }
    factor * total
}

/// Cable mass of the intrinsic ball `{y : d(x, y) < r}`, where the distance
/// to a point on a cable runs through the nearer endpoint.
pub fn cable_ball_measure(graph: &NetGraph, cs: &CableSystem, x: usize, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("ball radius must be positive, got {r}")));
    }
    let d = vertex_distances(graph, x, r);
    let mut mass = 0.0;
    for c in &cs.cables {
        let from_a = (r - d[c.a]).clamp(0.0, c.length);
        let from_b = (r - d[c.b]).clamp(0.0, c.length);
        let covered = (from_a + from_b).min(c.length);
        mass += c.density * covered;
    }
    Ok(mass)
}

/// `(diam / 2, diam)` in the intrinsic metric, bracketing the one-dimensional
/// Hausdorff content of the set.
pub fn content_bounds(graph: &NetGraph, set: &VertexSet) -> Result<(f64, f64)> {
    if set.is_empty() {
        return Err(Error::Input("content of an empty set".into()));
    }
    let mut diam: f64 = 0.0;
    for a in set.iter() {
        let d = graph.distances_within(a, f64::INFINITY);
        for b in set.iter() {
            diam = diam.max(d[b]);
        }
    }
    Ok((diam / 2.0, diam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penergy::energy;
    use crate::penergy::tests::path;

    #[test]
    fn single_cable() {
        let g = path(2);
        let cs = build_cable_system(&g);
        assert_eq!(cs.cables.len(), 1);
        assert_eq!(cs.cables[0].mass(), 1.0);
        let f = interpolate(&g, &[0.0, 1.0]).unwrap();
        assert_eq!(f.at(&cs.cables[0], 0.5), 0.5);
        for p in [1.5, 2.0, 3.0] {
            assert_eq!(cable_energy(&g, &cs, &f, p, CableRegion::All), 1.0);
        }
        let c = interpolate(&g, &[2.0, 2.0]).unwrap();
        assert_eq!(c.gradient(&cs.cables[0]), 0.0);
        assert_eq!(cable_energy(&g, &cs, &c, 2.0, CableRegion::All), 0.0);
    }

    #[test]
    fn branches_meet_at_eps() {
        let g = path(3);
        let cs = build_cable_system(&g);
        let e = cs.epsilon;
        assert_eq!(cs.phi_eps(e), cs.phi.at(e));
        assert_eq!(cs.psi_eps(e, 1.7), cs.psi.at(e));
        assert!((cs.phi_eps(e * (1.0 + 1e-12)) - cs.phi_eps(e)).abs() < 1e-9);
    }

    #[test]
    fn half_cable_ball() {
        let g = path(2);
        let cs = build_cable_system(&g);
        assert!((cable_ball_measure(&g, &cs, 0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(cable_ball_measure(&g, &cs, 0, 100.0).unwrap(), 1.0);
        assert!(cable_ball_measure(&g, &cs, 0, 0.0).is_err());
    }

    #[test]
    fn content_of_pairs() {
        let g = path(6);
        assert_eq!(content_bounds(&g, &VertexSet::new(vec![2])).unwrap(), (0.0, 0.0));
        assert_eq!(content_bounds(&g, &VertexSet::new(vec![1, 4])).unwrap(), (1.5, 3.0));
    }

    #[test]
    fn ball_region_energy() {
        let g = path(6);
        let cs = build_cable_system(&g);
        let u: Vec<f64> = (0..6).map(|i| (i * i) as f64).collect();
        let f = interpolate(&g, &u).unwrap();
        // ball of radius 1.5 at vertex 0 reaches vertex 1, so cables 0-1 and 1-2
        let e = cable_energy(&g, &cs, &f, 2.0, CableRegion::Ball { center: 0, r: 1.5 });
        assert_eq!(e, 1.0 + 9.0);
        assert_eq!(cable_energy(&g, &cs, &f, 2.0, CableRegion::All), energy(&g, &u, 2.0, None));
    }
}
