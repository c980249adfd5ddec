//! Cox-Ross-Rubinstein lattice for the two-component (equity / cash-only)
//! convertible bond model.
//!
//! The equity part rolls back at the risk-free rate, the cash-only part at
//! the risky rate `r + r_c`. At every node the held value is tested against
//! the dirty call level, the dirty put level and the conversion value, and the
//! winner decides which component carries the node value.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::termsheet::{coupon_injections, year_fraction, ContractTimeline, ConvertibleTerms, Date, MarketParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticeParams {
    pub steps: usize,
    pub dt: f64,
    pub up: f64,
    pub down: f64,
    pub prob: f64,
}

/// Standard CRR parameterization over `[t0, t_end]` (both in years).
pub fn build_crr_params(volatility: f64, rate: f64, t0: f64, t_end: f64, steps: usize) -> Result<LatticeParams> {
    if steps == 0 {
        return Err(Error::config("lattice needs at least one step"));
    }
    if !(t_end > t0) {
        return Err(Error::domain(format!("lattice horizon must be positive, got [{t0}, {t_end}]")));
    }
    if !(volatility.is_finite() && volatility > 0.0) {
        return Err(Error::domain(format!("volatility must be > 0, got {volatility}")));
    }
    let dt = (t_end - t0) / steps as f64;
    let up = (volatility * dt.sqrt()).exp();
    let down = 1.0 / up;
    let growth = (rate * dt).exp();
    let prob = (growth - down) / (up - down);
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::config(format!(
            "risk-neutral probability {prob} outside (0, 1); dt = {dt} is too coarse for vol {volatility} and rate {rate}"
        )));
    }
    Ok(LatticeParams {
        steps,
        dt,
        up,
        down,
        prob,
    })
}

/// Value split into the equity-settled and cash-settled components.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct NodeValue {
    pub equity: f64,
    pub debt: f64,
}

impl NodeValue {
    pub fn new(equity: f64, debt: f64) -> Self {
        Self { equity, debt }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.equity + self.debt
    }
}

/// Which alternative set the node value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Binding {
    Continuation,
    Conversion,
    Call,
    Put,
}

/// `max(min(held, call), put, conversion)` with the component split decided
/// by the winning alternative. Ties go to continuation, then conversion,
/// then call, then put.
#[inline]
pub fn apply_constraints(held: NodeValue, call: f64, put: f64, conversion: f64) -> (NodeValue, Binding) {
    let v = held.value();
    let best = v.min(call).max(put).max(conversion);
    if best == v {
        (held, Binding::Continuation)
    } else if best == conversion {
        (NodeValue::new(conversion, 0.0), Binding::Conversion)
    } else if best == call {
        (NodeValue::new(call, 0.0), Binding::Call)
    } else {
        (NodeValue::new(0.0, put), Binding::Put)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BindingCounts {
    pub conversion: u64,
    pub call: u64,
    pub put: u64,
}

impl BindingCounts {
    fn record(&mut self, b: Binding) {
        match b {
            Binding::Continuation => {}
            Binding::Conversion => self.conversion += 1,
            Binding::Call => self.call += 1,
            Binding::Put => self.put += 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PriceResult {
    pub root: NodeValue,
    pub params: LatticeParams,
    pub bindings: BindingCounts,
}

impl PriceResult {
    /// Dirty price.
    pub fn value(&self) -> f64 {
        self.root.value()
    }
}

/// Node values of the first three layers of a rollback, kept for the
/// lattice Greeks.
#[derive(Clone, Debug)]
pub(crate) struct Rollback {
    pub result: PriceResult,
    pub spot: f64,
    /// Layer 1, ordered by up-move count: `[down, up]`.
    pub layer1: Vec<NodeValue>,
    /// Layer 2: `[dd, ud, uu]`.
    pub layer2: Vec<NodeValue>,
}

/// Per-layer contract data precomputed on the lattice time grid.
struct LayerData {
    call: Vec<f64>,
    put: Vec<f64>,
    ratio: Vec<f64>,
    coupon: Vec<f64>,
}

impl LayerData {
    fn new(timeline: &ContractTimeline, mkt: &MarketParams, dt: f64, steps: usize) -> Self {
        let taus: Vec<f64> = (0..=steps)
            .map(|i| if i == steps { timeline.horizon } else { i as f64 * dt })
            .collect();
        Self {
            call: taus.iter().map(|&t| timeline.dirty_call(t)).collect(),
            put: taus.iter().map(|&t| timeline.dirty_put(t)).collect(),
            ratio: taus.iter().map(|&t| timeline.ratio_at(t)).collect(),
            coupon: coupon_injections(
                &timeline.intermediate_coupons,
                timeline.coupon_amount(),
                dt,
                steps,
                mkt.risky_rate(),
            ),
        }
    }
}

pub(crate) fn rollback(
    terms: &ConvertibleTerms,
    mkt: &MarketParams,
    t0: Date,
    spot: f64,
    steps: usize,
) -> Result<Rollback> {
    if !(spot.is_finite() && spot > 0.0) {
        return Err(Error::domain(format!("spot must be > 0, got {spot}")));
    }
    let timeline = ContractTimeline::new(terms, t0)?;
    let params = build_crr_params(mkt.volatility, mkt.rate, 0.0, timeline.horizon, steps)?;
    let n = steps;
    let layers = LayerData::new(&timeline, mkt, params.dt, n);

    // u^k for k in -n..=n, indexed by k + n.
    let powers: Vec<f64> = (0..=2 * n).map(|k| params.up.powi(k as i32 - n as i32)).collect();
    let stock = |i: usize, j: usize| spot * powers[2 * j + n - i];

    let mut bindings = BindingCounts::default();
    let mut equity = vec![0.0; n + 1];
    let mut debt = vec![0.0; n + 1];

    let redemption = timeline.redemption + layers.coupon[n];
    for j in 0..=n {
        let conv = layers.ratio[n] * stock(n, j);
        let (nv, b) = apply_constraints(NodeValue::new(0.0, redemption), layers.call[n], layers.put[n], conv);
        bindings.record(b);
        equity[j] = nv.equity;
        debt[j] = nv.debt;
    }

    let p = params.prob;
    let q = 1.0 - p;
    let disc_equity = (-mkt.rate * params.dt).exp();
    let disc_debt = (-mkt.risky_rate() * params.dt).exp();
    let snapshot = |e: &[f64], b: &[f64], len: usize| -> Vec<NodeValue> {
        (0..len).map(|j| NodeValue::new(e[j], b[j])).collect()
    };
    let mut layer1 = Vec::new();
    let mut layer2 = Vec::new();
    match n {
        1 => layer1 = snapshot(&equity, &debt, 2),
        2 => layer2 = snapshot(&equity, &debt, 3),
        _ => {}
    }

    for i in (0..n).rev() {
        let (call, put, ratio, coupon) = (layers.call[i], layers.put[i], layers.ratio[i], layers.coupon[i]);
        for j in 0..=i {
            let e = disc_equity * (p * equity[j + 1] + q * equity[j]);
            let b = disc_debt * (p * debt[j + 1] + q * debt[j]) + coupon;
            let (nv, bind) = apply_constraints(NodeValue::new(e, b), call, put, ratio * stock(i, j));
            debug_assert!(nv.equity >= 0.0 && nv.debt >= 0.0, "negative component at ({i}, {j})");
            bindings.record(bind);
            equity[j] = nv.equity;
            debt[j] = nv.debt;
        }
        match i {
            2 => layer2 = snapshot(&equity, &debt, 3),
            1 => layer1 = snapshot(&equity, &debt, 2),
            _ => {}
        }
    }
    let root = NodeValue::new(equity[0], debt[0]);
    if !(root.equity.is_finite() && root.debt.is_finite()) {
        return Err(Error::Numerical {
            layer: 0,
            message: "non-finite root value".into(),
        });
    }
    Ok(Rollback {
        result: PriceResult { root, params, bindings },
        spot,
        layer1,
        layer2,
    })
}

/// Dirty TF value of the convertible at `(t0, spot)` on an `steps`-step tree.
pub fn price_tf_crr(
    terms: &ConvertibleTerms,
    mkt: &MarketParams,
    t0: Date,
    spot: f64,
    steps: usize,
) -> Result<PriceResult> {
    rollback(terms, mkt, t0, spot, steps).map(|r| r.result)
}

/// Clean price: dirty value less the accrued coupon at `t0`.
pub fn clean_price(terms: &ConvertibleTerms, t0: Date, dirty: f64) -> Result<f64> {
    Ok(dirty - terms.accrued_interest(t0)?)
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain("spot grid is empty"));
    }
    if grid.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::domain("spot grid must be positive"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("spot grid must be ascending"));
    }
    Ok(())
}

/// One independent tree per spot, evaluated in parallel.
pub fn price_profile_raw(
    terms: &ConvertibleTerms,
    mkt: &MarketParams,
    t0: Date,
    grid: &[f64],
    steps: usize,
) -> Result<Vec<(f64, NodeValue)>> {
    check_grid(grid)?;
    grid.par_iter()
        .map(|&s| {
            price_tf_crr(terms, mkt, t0, s, steps)
                .map(|r| (s, r.root))
                .map_err(|e| e.at(format!("t={t0}, S={s}")))
        })
        .collect()
}

/// Years from `t0` to maturity.
pub fn time_to_maturity(terms: &ConvertibleTerms, t0: Date) -> Result<f64> {
    year_fraction(t0, terms.maturity, terms.day_count)
}
