//! Delta-hedged (convertible arbitrage) position and its response to a single
//! stock shock.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{check_grid, price_tf_crr, rollback};
use crate::sensitivities::{delta_of, spot_grid};
use crate::termsheet::{ConvertibleTerms, Date, MarketParams};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HedgeStressSpec {
    pub shock: f64,
    pub spots: Vec<f64>,
    pub t: Date,
    pub steps: usize,
    /// Position nominal; increments are reported per 100 nominal and scaled
    /// by `contract_size / nominal`.
    pub contract_size: f64,
}

impl HedgeStressSpec {
    /// Shock 0.5 at the issue date, 500 steps, 1,000,000 nominal, spots
    /// 50..=200 in steps of 0.5.
    pub fn reference(terms: &ConvertibleTerms) -> Self {
        Self {
            shock: 0.5,
            spots: spot_grid(50.0, 200.0, 0.5).expect("static grid"),
            t: terms.issue,
            steps: 500,
            contract_size: 1_000_000.0,
        }
    }

    pub fn scaling(&self, terms: &ConvertibleTerms) -> f64 {
        self.contract_size / terms.nominal
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(&self.spots)?;
        if !self.shock.is_finite() {
            return Err(Error::domain("shock must be finite"));
        }
        if let Some(s) = self.spots.iter().find(|s| **s + self.shock <= 0.0) {
            return Err(Error::domain(format!("shocked spot {s} + {} is not positive", self.shock)));
        }
        if !(self.contract_size.is_finite() && self.contract_size > 0.0) {
            return Err(Error::domain("contract size must be > 0"));
        }
        Ok(())
    }
}

/// `V - delta * S`, per 100 nominal.
pub fn hedged_position(terms: &ConvertibleTerms, mkt: &MarketParams, t: Date, spot: f64, steps: usize) -> Result<f64> {
    let (value, delta) = value_and_delta(terms, mkt, t, spot, steps)?;
    Ok(value - delta * spot)
}

fn value_and_delta(terms: &ConvertibleTerms, mkt: &MarketParams, t: Date, spot: f64, steps: usize) -> Result<(f64, f64)> {
    if steps < 2 {
        return Err(Error::config(format!("hedge needs at least 2 lattice steps, got {steps}")));
    }
    let r = rollback(terms, mkt, t, spot, steps)?;
    Ok((r.result.value(), delta_of(&r)))
}

/// `V(S + h) - V(S) - h * delta(S)`: the hedge is struck before the shock.
pub fn hedge_increment(
    terms: &ConvertibleTerms,
    mkt: &MarketParams,
    t: Date,
    spot: f64,
    shock: f64,
    steps: usize,
) -> Result<f64> {
    Ok(increment_parts(terms, mkt, t, spot, shock, steps)?.0)
}

fn increment_parts(
    terms: &ConvertibleTerms,
    mkt: &MarketParams,
    t: Date,
    spot: f64,
    shock: f64,
    steps: usize,
) -> Result<(f64, f64)> {
    if !(spot + shock > 0.0) {
        return Err(Error::domain(format!("shocked spot {} is not positive", spot + shock)));
    }
    let (value, delta) = value_and_delta(terms, mkt, t, spot, steps)?;
    let shocked = if shock == 0.0 {
        value
    } else {
        price_tf_crr(terms, mkt, t, spot + shock, steps)?.value()
    };
    let position = value - delta * spot;
    Ok((shocked - value - shock * delta, position))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StressPoint {
    pub spot: f64,
    pub increment: f64,
    pub increment_scaled: f64,
    /// Increment relative to the size of the hedged position.
    pub increment_relative: f64,
}

pub fn stress_curve(spec: &HedgeStressSpec, terms: &ConvertibleTerms, mkt: &MarketParams) -> Result<Vec<StressPoint>> {
    spec.validate()?;
    let scale = spec.scaling(terms);
    spec.spots
        .par_iter()
        .map(|&s| {
            let (inc, position) = increment_parts(terms, mkt, spec.t, s, spec.shock, spec.steps)
                .map_err(|e| e.at(format!("S={s}")))?;
            Ok(StressPoint {
                spot: s,
                increment: inc,
                increment_scaled: inc * scale,
                increment_relative: inc / position.abs(),
            })
        })
        .collect()
}
