//! Lattice delta, trader delta and gamma, read off the first layers of the
//! same tree that prices the root; plus batch surfaces over `(t, S)` grids.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{check_grid, rollback, NodeValue, Rollback};
use crate::termsheet::{ConvertibleTerms, Date, MarketParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreekPoint {
    pub t: Date,
    pub spot: f64,
    pub value: f64,
    pub equity: f64,
    pub debt: f64,
    pub delta: f64,
    /// `delta / conversion ratio`; absent when the ratio is zero.
    pub delta_pct: Option<f64>,
    pub gamma: f64,
}

fn spread(r: &Rollback) -> f64 {
    let p = &r.result.params;
    (p.up - p.down) * r.spot
}

pub(crate) fn delta_of(r: &Rollback) -> f64 {
    let (down, up) = (r.layer1[0].value(), r.layer1[1].value());
    (up - down) / spread(r)
}

fn gamma_of(r: &Rollback) -> f64 {
    let p = &r.result.params;
    let [dd, ud, uu]: [NodeValue; 3] = r.layer2[..].try_into().expect("three nodes on layer 2");
    let width = p.up - p.down;
    let delta_up = (uu.value() - ud.value()) / (width * p.up * r.spot);
    let delta_down = (ud.value() - dd.value()) / (width * p.down * r.spot);
    (delta_up - delta_down) / spread(r)
}

fn require_steps(steps: usize, min: usize, what: &str) -> Result<()> {
    if steps < min {
        return Err(Error::config(format!("{what} needs at least {min} lattice steps, got {steps}")));
    }
    Ok(())
}

/// `(V+ - V-) / ((u - d) S)` with `V+`, `V-` the step-one node values.
pub fn delta(terms: &ConvertibleTerms, mkt: &MarketParams, t: Date, spot: f64, steps: usize) -> Result<f64> {
    require_steps(steps, 2, "delta")?;
    rollback(terms, mkt, t, spot, steps).map(|r| delta_of(&r))
}

pub fn delta_pct(terms: &ConvertibleTerms, mkt: &MarketParams, t: Date, spot: f64, steps: usize) -> Result<f64> {
    let ratio = terms.conversion.ratio;
    if ratio <= 0.0 {
        return Err(Error::domain("trader delta is undefined for a zero conversion ratio"));
    }
    delta(terms, mkt, t, spot, steps).map(|d| d / ratio)
}

/// Difference of the step-one deltas (each from the step-two nodes) over
/// `(u - d) S`.
pub fn gamma(terms: &ConvertibleTerms, mkt: &MarketParams, t: Date, spot: f64, steps: usize) -> Result<f64> {
    require_steps(steps, 3, "gamma")?;
    rollback(terms, mkt, t, spot, steps).map(|r| gamma_of(&r))
}

/// Value, components and all Greeks from a single rollback.
pub fn greek_point(terms: &ConvertibleTerms, mkt: &MarketParams, t: Date, spot: f64, steps: usize) -> Result<GreekPoint> {
    require_steps(steps, 3, "greeks")?;
    let r = rollback(terms, mkt, t, spot, steps)?;
    let delta = delta_of(&r);
    let ratio = terms.conversion.ratio;
    Ok(GreekPoint {
        t,
        spot,
        value: r.result.value(),
        equity: r.result.root.equity,
        debt: r.result.root.debt,
        delta,
        delta_pct: (ratio > 0.0).then(|| delta / ratio),
        gamma: gamma_of(&r),
    })
}

pub fn greek_profile(
    terms: &ConvertibleTerms,
    mkt: &MarketParams,
    t: Date,
    grid: &[f64],
    steps: usize,
) -> Result<Vec<GreekPoint>> {
    check_grid(grid)?;
    grid.par_iter()
        .map(|&s| greek_point(terms, mkt, t, s, steps).map_err(|e| e.at(format!("t={t}, S={s}"))))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Surface {
    pub times: Vec<Date>,
    pub spots: Vec<f64>,
    /// Row-major: one row per time.
    pub points: Vec<GreekPoint>,
}

impl Surface {
    pub fn at(&self, ti: usize, si: usize) -> &GreekPoint {
        &self.points[ti * self.spots.len() + si]
    }

    pub fn row(&self, ti: usize) -> &[GreekPoint] {
        let w = self.spots.len();
        &self.points[ti * w..(ti + 1) * w]
    }
}

pub fn surface(
    terms: &ConvertibleTerms,
    mkt: &MarketParams,
    times: &[Date],
    spots: &[f64],
    steps: usize,
) -> Result<Surface> {
    check_grid(spots)?;
    if times.is_empty() {
        return Err(Error::domain("time grid is empty"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("time grid must be ascending"));
    }
    if let Some(t) = times.iter().find(|t| **t >= terms.maturity) {
        return Err(Error::domain(format!("surface date {t} is not before maturity")));
    }
    let w = spots.len();
    let points = (0..times.len() * w)
        .into_par_iter()
        .map(|k| {
            let (t, s) = (times[k / w], spots[k % w]);
            greek_point(terms, mkt, t, s, steps).map_err(|e| e.at(format!("t={t}, S={s}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Surface {
        times: times.to_vec(),
        spots: spots.to_vec(),
        points,
    })
}

/// `count` dates evenly spaced in `[issue, maturity)`.
pub fn default_time_grid(terms: &ConvertibleTerms, count: usize) -> Result<Vec<Date>> {
    let days = terms.issue.days_until(terms.maturity);
    (0..count)
        .map(|i| terms.issue.add_days(i as i64 * days / count as i64))
        .collect()
}

/// Ascending grid `lo, lo + step, ...` up to and including `hi`.
pub fn spot_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && step > 0.0) {
        return Err(Error::domain(format!("invalid spot grid [{lo}, {hi}] step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + step * i as f64).collect())
}
