//! Monte Carlo value-at-risk with the stock as the only risk driver.
//!
//! Scenarios are one-step geometric Brownian motion draws. Uniforms come
//! from ChaCha20 seeded with `seed_from_u64`, mapped to the open interval
//! `(0, 1)` as `((x >> 11) + 0.5) / 2^53`; normals are obtained by the
//! inverse normal CDF. Each scenario is revalued on a fresh lattice at the
//! end of the holding period.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::lattice::price_tf_crr;
use crate::termsheet::{ConvertibleTerms, Date, MarketParams};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarSpec {
    pub evaluation_date: Date,
    pub holding_days: u32,
    /// Confidence level `1 - alpha`, e.g. 0.99.
    pub confidence: f64,
    pub scenarios: usize,
    /// Annual drift of the scenario GBM.
    pub drift: f64,
    /// Annual volatility of the scenario GBM.
    pub scenario_vol: f64,
    pub spot: f64,
    pub seed: u64,
    pub steps: usize,
}

impl VarSpec {
    /// 1-day 99% VaR from 2-Jan-2004, 10000 GBM scenarios (drift 5%, vol
    /// 30%) around spot 100, 500-step repricing.
    pub fn reference(seed: u64) -> Self {
        Self {
            evaluation_date: Date::from_ymd(2004, 1, 2).expect("valid date"),
            holding_days: 1,
            confidence: 0.99,
            scenarios: 10_000,
            drift: 0.05,
            scenario_vol: 0.30,
            spot: 100.0,
            seed,
            steps: 500,
        }
    }

    pub fn alpha(&self) -> f64 {
        1.0 - self.confidence
    }

    pub fn holding_years(&self) -> f64 {
        self.holding_days as f64 / 365.0
    }

    pub fn horizon_date(&self) -> Result<Date> {
        self.evaluation_date.add_days(self.holding_days as i64)
    }

    pub fn validate(&self) -> Result<()> {
        let alpha = self.alpha();
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("confidence must lie in (0, 1), got {}", self.confidence)));
        }
        if self.scenarios == 0 {
            return Err(Error::domain("need at least one scenario"));
        }
        if self.holding_days == 0 {
            return Err(Error::domain("holding period must be positive"));
        }
        if !(self.scenario_vol.is_finite() && self.scenario_vol >= 0.0) {
            return Err(Error::domain("scenario volatility must be >= 0"));
        }
        if !(self.spot.is_finite() && self.spot > 0.0) {
            return Err(Error::domain("spot must be > 0"));
        }
        Ok(())
    }
}

/// Uniform on the open unit interval from the top 53 bits of a draw.
fn open_unit(rng: &mut ChaCha20Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

pub fn standard_normals(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (0..count).map(|_| normal.inverse_cdf(open_unit(&mut rng))).collect()
}

/// Stock prices at the end of the holding period.
pub fn simulate_stock(spec: &VarSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let h = spec.holding_years();
    let sigma = spec.scenario_vol;
    let drift = (spec.drift - 0.5 * sigma * sigma) * h;
    let scale = sigma * h.sqrt();
    Ok(standard_normals(spec.seed, spec.scenarios)
        .into_iter()
        .map(|z| spec.spot * (drift + scale * z).exp())
        .collect())
}

/// `(V0, V_h)`: dirty value today and at the horizon in each scenario.
pub fn revalue(
    spec: &VarSpec,
    terms: &ConvertibleTerms,
    mkt: &MarketParams,
    scenarios: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if let Some((i, s)) = scenarios.iter().enumerate().find(|(_, s)| !(**s > 0.0)) {
        return Err(Error::domain(format!("scenario {i} has non-positive stock price {s}")));
    }
    let v0 = price_tf_crr(terms, mkt, spec.evaluation_date, spec.spot, spec.steps)?.value();
    let horizon = spec.horizon_date()?;
    let values = scenarios
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            price_tf_crr(terms, mkt, horizon, s, spec.steps)
                .map(|r| r.value())
                .map_err(|e| e.at(format!("scenario {i} (S={s})")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((v0, values))
}

/// `-min{x : P(X <= x) > alpha}` under the empirical distribution of `pnl`.
///
/// The minimiser is the order statistic `X_(floor(alpha n) + 1)` (1-based);
/// `alpha n` within 1e-9 of an integer is snapped to it so that e.g.
/// `alpha = 1 - 0.99` with `n = 10000` selects the 101st loss.
pub fn var_quantile(pnl: &[f64], alpha: f64) -> Result<f64> {
    if pnl.is_empty() {
        return Err(Error::domain("P&L sample is empty"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut sorted = pnl.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let scaled = alpha * n as f64;
    let nearest = scaled.round();
    let below = if (scaled - nearest).abs() < 1e-9 { nearest } else { scaled.floor() };
    let idx = (below as usize).min(n - 1);
    Ok(-sorted[idx])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn mode_bin(&self) -> usize {
        let max = self.counts.iter().max().copied().unwrap_or(0);
        self.counts.iter().position(|c| *c == max).unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Equal-width bins over `[min, max]`; the top edge is inclusive.
pub fn density_histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::domain("histogram needs at least one bin"));
    }
    if values.is_empty() {
        return Ok(Histogram {
            edges: vec![0.0; bins + 1],
            counts: vec![0; bins],
        });
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0u64; bins];
    for &v in values {
        let idx = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[derive(Clone, Debug, Serialize)]
pub struct VarResult {
    pub v0: f64,
    pub stock: Vec<f64>,
    pub values: Vec<f64>,
    pub pnl: Vec<f64>,
    pub var_abs: f64,
    pub var_pct: f64,
    pub stock_histogram: Histogram,
    pub value_histogram: Histogram,
}

pub fn run_var(spec: &VarSpec, terms: &ConvertibleTerms, mkt: &MarketParams, bins: usize) -> Result<VarResult> {
    let stock = simulate_stock(spec)?;
    let (v0, values) = revalue(spec, terms, mkt, &stock)?;
    let pnl: Vec<f64> = values.iter().map(|v| v - v0).collect();
    let var_abs = var_quantile(&pnl, spec.alpha())?;
    Ok(VarResult {
        v0,
        var_pct: var_abs / v0 * 100.0,
        var_abs,
        stock_histogram: density_histogram(&stock, bins)?,
        value_histogram: density_histogram(&values, bins)?,
        stock,
        values,
        pnl,
    })
}
