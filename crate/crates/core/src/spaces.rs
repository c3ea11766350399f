//! Model point clouds and greedy epsilon-nets.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_POINT_CAP: usize = 1_000_000;

/// Relative slack in the separation test, so that points at distance exactly
/// epsilon (up to rounding) are kept apart rather than merged.
pub const SEPARATION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Interval,
    Lattice2d,
    Carpet,
    Gasket,
}

impl SpaceKind {
    pub fn hausdorff_dim(self) -> f64 {
        match self {
            SpaceKind::Interval => 1.0,
            SpaceKind::Lattice2d => 2.0,
            SpaceKind::Carpet => 8f64.ln() / 3f64.ln(),
            SpaceKind::Gasket => 3f64.ln() / 2f64.ln(),
        }
    }

    pub fn dim(self) -> usize {
        match self {
            SpaceKind::Interval => 1,
            _ => 2,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "interval" => Ok(SpaceKind::Interval),
            "lattice2d" => Ok(SpaceKind::Lattice2d),
            "carpet" => Ok(SpaceKind::Carpet),
            "gasket" => Ok(SpaceKind::Gasket),
            other => Err(Error::Input(format!("unknown space kind '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Interval => "interval",
            SpaceKind::Lattice2d => "lattice2d",
            SpaceKind::Carpet => "carpet",
            SpaceKind::Gasket => "gasket",
        }
    }
}

/// Points are stored in the plane; one-dimensional kinds use `y = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<[f64; 2]>,
    pub kind: SpaceKind,
    pub level: u32,
    pub scale: f64,
    pub d_h: f64,
}

#[derive(Serialize, Deserialize)]
struct CloudFile {
    kind: SpaceKind,
    level: u32,
    scale: f64,
    points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        let dim = self.kind.dim();
        let file = CloudFile {
            kind: self.kind,
            level: self.level,
            scale: self.scale,
            points: self.points.iter().map(|p| p[..dim].to_vec()).collect(),
        };
        crate::canon::to_canonical_json(&file, false)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: CloudFile = serde_json::from_str(s)?;
        let mut points = Vec::with_capacity(file.points.len());
        for p in &file.points {
            match p.len() {
                1 => points.push([p[0], 0.0]),
                2 => points.push([p[0], p[1]]),
                n => return Err(Error::Input(format!("point with {n} coordinates"))),
            }
        }
        Ok(PointCloud { points, kind: file.kind, level: file.level, scale: file.scale, d_h: file.kind.hausdorff_dim() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub epsilon: f64,
    pub seed: u64,
}

pub fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub fn generate_space(kind: SpaceKind, level: u32, scale: f64) -> Result<PointCloud> {
    generate_space_capped(kind, level, scale, DEFAULT_POINT_CAP)
}

pub fn generate_space_capped(kind: SpaceKind, level: u32, scale: f64, cap: usize) -> Result<PointCloud> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Input(format!("scale must be positive, got {scale}")));
    }
    let count: f64 = match kind {
        SpaceKind::Interval => level as f64 + 1.0,
        SpaceKind::Lattice2d => {
            if level < 1 {
                return Err(Error::Input("lattice2d needs box side >= 1".into()));
            }
            (level as f64 + 1.0).powi(2)
        }
        SpaceKind::Carpet => 8f64.powi(level as i32),
        SpaceKind::Gasket => 3f64.powi(level as i32),
    };
    if count > cap as f64 {
        return Err(Error::Resource(format!("{} level {level} needs {count} points, cap is {cap}", kind.name())));
    }
    let points = match kind {
        SpaceKind::Interval => {
            if level == 0 {
                vec![[0.0, 0.0]]
            } else {
                (0..=level).map(|k| [scale * k as f64 / level as f64, 0.0]).collect()
            }
        }
        SpaceKind::Lattice2d => {
            let k = level as usize;
            let mut pts = Vec::with_capacity((k + 1) * (k + 1));
            for j in 0..=k {
                for i in 0..=k {
                    pts.push([scale * i as f64 / k as f64, scale * j as f64 / k as f64]);
                }
            }
            pts
        }
        SpaceKind::Carpet => carpet_centers(level, scale),
        SpaceKind::Gasket => gasket_centers(level, scale),
    };
    Ok(PointCloud { points, kind, level, scale, d_h: kind.hausdorff_dim() })
}

fn carpet_centers(level: u32, scale: f64) -> Vec<[f64; 2]> {
    let side = 3usize.pow(level);
    let h = scale / side as f64;
    let removed = |mut i: usize, mut j: usize| {
        for _ in 0..level {
            if i % 3 == 1 && j % 3 == 1 {
                return true;
            }
            i /= 3;
            j /= 3;
        }
        false
    };
    let mut pts = Vec::with_capacity(8usize.pow(level));
    for j in 0..side {
        for i in 0..side {
            if !removed(i, j) {
                pts.push([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
            }
        }
    }
    pts
}

fn gasket_centers(level: u32, scale: f64) -> Vec<[f64; 2]> {
    let mut tris = vec![[[0.0, 0.0], [scale, 0.0], [scale / 2.0, scale * 3f64.sqrt() / 2.0]]];
    for _ in 0..level {
        let mut next = Vec::with_capacity(tris.len() * 3);
        for t in &tris {
            let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            let (a, b, c) = (t[0], t[1], t[2]);
            next.push([a, mid(a, b), mid(a, c)]);
            next.push([mid(a, b), b, mid(b, c)]);
            next.push([mid(a, c), mid(b, c), c]);
        }
        tris = next;
    }
    tris.iter()
        .map(|t| [(t[0][0] + t[1][0] + t[2][0]) / 3.0, (t[0][1] + t[1][1] + t[2][1]) / 3.0])
        .collect()
}

/// Uniform grid over the plane for radius queries at a fixed cell size.
pub struct GridIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl GridIndex {
    pub fn new(cell: f64) -> Self {
        Self { cell, buckets: HashMap::new() }
    }

    fn key(&self, p: &[f64; 2]) -> (i64, i64) {
        ((p[0] / self.cell).floor() as i64, (p[1] / self.cell).floor() as i64)
    }

    pub fn insert(&mut self, id: usize, p: &[f64; 2]) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(id);
    }

    /// Calls `f` on every stored id whose cell lies within `reach` cells of `p`.
    pub fn for_each_near(&self, p: &[f64; 2], reach: i64, mut f: impl FnMut(usize)) {
        let (ci, cj) = self.key(p);
        for di in -reach..=reach {
            for dj in -reach..=reach {
                if let Some(ids) = self.buckets.get(&(ci + di, cj + dj)) {
                    ids.iter().for_each(|&id| f(id));
                }
            }
        }
    }
}

/// Greedy maximal epsilon-separated subset scanning the points in `order`.
pub fn extract_epsnet_ordered(cloud: &PointCloud, epsilon: f64, order: &[usize]) -> Result<Vec<usize>> {
    if cloud.is_empty() {
        return Err(Error::Input("empty point cloud".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Input(format!("epsilon must be positive, got {epsilon}")));
    }
    let threshold = epsilon * (1.0 - SEPARATION_SLACK);
    let mut grid = GridIndex::new(epsilon);
    let mut net = Vec::new();
    for &i in order {
        let p = &cloud.points[i];
        let mut ok = true;
        grid.for_each_near(p, 1, |j| {
            if ok && dist(p, &cloud.points[j]) < threshold {
                ok = false;
            }
        });
        if ok {
            grid.insert(i, p);
            net.push(i);
        }
    }
    net.sort_unstable();
    Ok(net)
}

/// Greedy epsilon-net over a seed-shuffled scan order. Returned indices are
/// sorted.
pub fn extract_epsnet(cloud: &PointCloud, spec: &NetSpec) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);
    extract_epsnet_ordered(cloud, spec.epsilon, &order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> PointCloud {
        PointCloud {
            points: xs.iter().map(|&x| [x, 0.0]).collect(),
            kind: SpaceKind::Interval,
            level: 0,
            scale: 1.0,
            d_h: 1.0,
        }
    }

    #[test]
    fn carpet_level_one() {
        let c = generate_space(SpaceKind::Carpet, 1, 1.0).unwrap();
        assert_eq!(c.len(), 8);
        for i in 0..3 {
            for j in 0..3 {
                let p = [(i as f64 + 0.5) / 3.0, (j as f64 + 0.5) / 3.0];
                let present = c.points.iter().any(|q| dist(&p, q) < 1e-12);
                assert_eq!(present, (i, j) != (1, 1));
            }
        }
    }

    #[test]
    fn carpet_level_three_matches_recursive_enumeration() {
        // independent construction: subdivide retained cells recursively
        fn cells(level: u32) -> Vec<(f64, f64, f64)> {
            let mut cur = vec![(0.0, 0.0, 1.0)];
            for _ in 0..level {
                let mut next = Vec::new();
                for (x, y, s) in cur {
                    let t = s / 3.0;
                    for i in 0..3 {
                        for j in 0..3 {
                            if (i, j) != (1, 1) {
                                next.push((x + i as f64 * t, y + j as f64 * t, t));
                            }
                        }
                    }
                }
                cur = next;
            }
            cur
        }
        let c = generate_space(SpaceKind::Carpet, 3, 1.0).unwrap();
        assert_eq!(c.len(), 512);
        let oracle = cells(3);
        assert_eq!(oracle.len(), 512);
        for (x, y, s) in oracle {
            let p = [x + s / 2.0, y + s / 2.0];
            assert!(c.points.iter().any(|q| dist(&p, q) < 1e-12));
        }
        for p in &c.points {
            for v in p {
                let k = v * 27.0 - 0.5;
                assert!((k - k.round()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn simple_kinds() {
        let c = generate_space(SpaceKind::Interval, 4, 1.0).unwrap();
        let xs: Vec<f64> = c.points.iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(generate_space(SpaceKind::Lattice2d, 5, 1.0).unwrap().len(), 36);
        assert_eq!(generate_space(SpaceKind::Gasket, 4, 1.0).unwrap().len(), 81);
        assert!(matches!(generate_space(SpaceKind::Carpet, 7, 1.0), Err(Error::Resource(_))));
        assert!(generate_space(SpaceKind::Lattice2d, 0, 1.0).is_err());
    }

    #[test]
    fn net_examples() {
        let c = line(&[0.0, 0.5, 1.0]);
        assert_eq!(extract_epsnet_ordered(&c, 0.6, &[0, 1, 2]).unwrap(), vec![0, 2]);
        assert_eq!(extract_epsnet_ordered(&c, 0.4, &[1, 0, 2]).unwrap(), vec![0, 1, 2]);
        let carpet = generate_space(SpaceKind::Carpet, 3, 1.0).unwrap();
        let net = extract_epsnet(&carpet, &NetSpec { epsilon: 1.0 / 27.0, seed: 7 }).unwrap();
        assert_eq!(net.len(), 512);
        assert!(extract_epsnet(&line(&[]), &NetSpec { epsilon: 1.0, seed: 0 }).is_err());
    }

    #[test]
    fn cloud_json_round_trip() {
        let c = generate_space(SpaceKind::Gasket, 2, 2.0).unwrap();
        let back = PointCloud::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        let c = generate_space(SpaceKind::Interval, 3, 1.0).unwrap();
        assert!(c.to_json().unwrap().contains("\"points\":[[0.0],"));
    }
}
