//! Power-law scaling functions, regime predicates, the iteration lemma and
//! log-log regression.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingRole {
    Volume,
    Walk,
}

/// `coeff * r^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerScaling {
    #[serde(rename = "exp")]
    pub exponent: f64,
    pub coeff: f64,
    #[serde(default = "default_role", skip_serializing)]
    pub role: ScalingRole,
}

fn default_role() -> ScalingRole {
    ScalingRole::Volume
}

impl PowerScaling {
    pub fn new(exponent: f64, coeff: f64, role: ScalingRole) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::Domain(format!("scaling exponent must be positive, got {exponent}")));
        }
        if !(coeff > 0.0 && coeff.is_finite()) {
            return Err(Error::Domain(format!("scaling coefficient must be positive, got {coeff}")));
        }
        Ok(Self { exponent, coeff, role })
    }

    pub fn volume(exponent: f64) -> Self {
        Self { exponent, coeff: 1.0, role: ScalingRole::Volume }
    }

    pub fn walk(exponent: f64) -> Self {
        Self { exponent, coeff: 1.0, role: ScalingRole::Walk }
    }

    /// Evaluates without the domain check; callers pass `r >= 0`.
    pub fn at(&self, r: f64) -> f64 {
        self.coeff * r.powf(self.exponent)
    }

    pub fn doubling_constant(&self) -> f64 {
        2f64.powf(self.exponent)
    }
}

pub fn eval_scaling(s: &PowerScaling, r: f64) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::Domain(format!("scaling evaluated at negative radius {r}")));
    }
    Ok(s.at(r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub d_h: f64,
    pub beta_p: f64,
    pub p: f64,
    pub fvr: bool,
    pub rsvr: bool,
    pub svr: bool,
    pub tau: f64,
    pub window_ok: bool,
}

pub fn regime(d_h: f64, beta_p: f64, p: f64) -> Result<RegimeReport> {
    if !(d_h > 0.0) || !(beta_p > 0.0) || !(p > 1.0) {
        return Err(Error::Domain(format!(
            "regime needs d_h > 0, beta_p > 0, p > 1 (got {d_h}, {beta_p}, {p})"
        )));
    }
    Ok(RegimeReport {
        d_h,
        beta_p,
        p,
        fvr: d_h >= beta_p,
        rsvr: beta_p > d_h - 1.0,
        svr: beta_p > d_h,
        tau: d_h - beta_p,
        window_ok: p <= beta_p && beta_p <= d_h + (p - 1.0),
    })
}

/// Trajectory of `A_{j+1} = c0 b^j A_j^{1+beta}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub values: Vec<f64>,
    /// `b^{-j/beta} A_0` for each j.
    pub envelope: Vec<f64>,
    pub threshold: f64,
    pub satisfied: bool,
    pub saturated: bool,
}

/// Relative distance to the threshold below which the start value is treated
/// as sitting exactly on it.
pub const THRESHOLD_SNAP: f64 = 1e-12;

/// Runs the recursion at equality.
///
/// The recursion is evaluated for the normalized quantity
/// `a_j = A_j / (b^{-j/beta} A_0)`, which obeys
/// `log a_{j+1} = (1+beta) log a_j + log k` with
/// `log k = log c0 + beta log A0 + log b / beta`. At the threshold `log k = 0`
/// and `a_j = 1` for every j; a direct evaluation would amplify rounding by
/// `(1+beta)^j`, so `log k` within `THRESHOLD_SNAP` of zero is snapped.
pub fn iterate_bound(a0: f64, c0: f64, b: f64, beta: f64, jmax: usize) -> Result<IterationTrace> {
    if !(a0 > 0.0 && c0 > 0.0 && beta > 0.0) || !(b > 1.0) {
        return Err(Error::Domain("iterate_bound needs A0, c0, beta > 0 and b > 1".into()));
    }
    let (la0, lc0, lb) = (a0.ln(), c0.ln(), b.ln());
    let threshold = (-lc0 / beta - lb / (beta * beta)).exp();
    let mut log_k = lc0 + beta * la0 + lb / beta;
    let scale = lc0.abs() + (beta * la0).abs() + (lb / beta).abs();
    if log_k.abs() <= THRESHOLD_SNAP * scale.max(1.0) {
        log_k = 0.0;
    }
    let mut values = Vec::with_capacity(jmax + 1);
    let mut envelope = Vec::with_capacity(jmax + 1);
    let mut log_a = 0.0f64;
    let mut saturated = false;
    let mut within = true;
    for j in 0..=jmax {
        if j > 0 {
            log_a = (1.0 + beta) * log_a + log_k;
        }
        let log_env = la0 - (j as f64) * lb / beta;
        let log_val = log_a + log_env;
        let v = if log_val > f64::MAX.ln() || log_a.is_infinite() && log_a > 0.0 {
            saturated = true;
            f64::MAX
        } else {
            log_val.exp()
        };
        values.push(v);
        envelope.push(log_env.exp());
        if log_a > THRESHOLD_SNAP {
            within = false;
        }
    }
    let below = a0 <= threshold * (1.0 + THRESHOLD_SNAP) || log_k <= 0.0;
    Ok(IterationTrace { values, envelope, threshold, satisfied: below && within, saturated })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

impl LogLogFit {
    pub fn predict(&self, r: f64) -> f64 {
        (self.intercept + self.slope * r.ln()).exp()
    }
}

pub fn loglog_fit(pairs: &[(f64, f64)]) -> Result<LogLogFit> {
    if pairs.len() < 2 {
        return Err(Error::Input("log-log fit needs at least two points".into()));
    }
    if pairs.iter().any(|&(r, y)| !(r > 0.0 && y > 0.0 && r.is_finite() && y.is_finite())) {
        return Err(Error::Input("log-log fit needs positive finite values".into()));
    }
    let points: Vec<(f64, f64)> = pairs.iter().map(|&(r, y)| (r.ln(), y.ln())).collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(Error::Input("log-log fit needs at least two distinct radii".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy <= 1e-300 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(LogLogFit { slope, intercept, r_squared, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let d = 8f64.ln() / 3f64.ln();
        assert_eq!(eval_scaling(&PowerScaling::walk(2.0), 3.0).unwrap(), 9.0);
        assert!((eval_scaling(&PowerScaling::volume(d), 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((eval_scaling(&PowerScaling::volume(d), 3.0).unwrap() - 8.0).abs() < 1e-12);
        assert!(matches!(eval_scaling(&PowerScaling::walk(2.0), -1.0), Err(Error::Domain(_))));
        assert!(PowerScaling::new(-1.0, 1.0, ScalingRole::Walk).is_err());
    }

    #[test]
    fn regime_examples() {
        let d = 8f64.ln() / 3f64.ln();
        let r = regime(d, 2.1, 2.0).unwrap();
        assert!(!r.fvr && r.rsvr && r.svr);
        let r = regime(2.0, 2.0, 2.0).unwrap();
        assert!(r.fvr && r.rsvr && !r.svr);
        let r = regime(2.0, 0.9, 1.5).unwrap();
        assert!(!r.rsvr && !r.window_ok);
        assert!(regime(2.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn iteration_at_threshold() {
        let (c0, b, beta): (f64, f64, f64) = (3.0, 5.0, 0.7);
        let a0 = c0.powf(-1.0 / beta) * b.powf(-1.0 / (beta * beta));
        let t = iterate_bound(a0, c0, b, beta, 30).unwrap();
        assert!(t.satisfied && !t.saturated);
        for (v, e) in t.values.iter().zip(&t.envelope) {
            assert!(*v <= e * (1.0 + 1e-12));
        }
    }

    #[test]
    fn iteration_small_and_divergent() {
        let t = iterate_bound(1e-30, 1.0, 2.0, 1.0, 20).unwrap();
        assert!(t.satisfied);
        assert!(t.values.windows(2).all(|w| w[1] <= w[0]));
        // threshold for c0=1, b=2, beta=1 is 1/2
        let t = iterate_bound(5.0, 1.0, 2.0, 1.0, 20).unwrap();
        assert!((t.threshold - 0.5).abs() < 1e-15);
        assert!(!t.satisfied);
        assert!(t.saturated);
        assert!(t.values[5] > t.values[1]);
    }

    #[test]
    fn divergent_matches_direct_recursion_early() {
        let t = iterate_bound(5.0, 1.0, 2.0, 1.0, 4).unwrap();
        let mut a: f64 = 5.0;
        for j in 0..4 {
            assert!((t.values[j] - a).abs() <= 1e-9 * a);
            a = 2f64.powi(j as i32) * a * a;
        }
    }

    #[test]
    fn loglog_examples() {
        let f = loglog_fit(&[(1.0, 1.0), (2.0, 4.0), (4.0, 16.0)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-10);
        let f = loglog_fit(&[(1.0, 3.0), (2.0, 3.0)]).unwrap();
        assert!(f.slope.abs() < 1e-15);
        // equispaced abscissae 0, ln2, 2 ln2: the OLS slope is (y3 - y1) / (2 ln2)
        let f = loglog_fit(&[(1.0, 1.0), (2.0, 3.9), (4.0, 16.1)]).unwrap();
        let expected = 16.1f64.ln() / (2.0 * 2f64.ln());
        assert!((f.slope - expected).abs() < 1e-12, "{}", f.slope);
        assert!((f.slope - 2.004494).abs() < 1e-6);
        assert!(f.r_squared > 0.999);
        assert!(loglog_fit(&[(1.0, 1.0)]).is_err());
        assert!(loglog_fit(&[(1.0, 1.0), (2.0, 0.0)]).is_err());
        assert!(loglog_fit(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }
}
