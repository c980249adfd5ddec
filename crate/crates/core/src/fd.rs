//! Explicit finite-difference solution of the coupled equity / cash-only
//! PDE system on a uniform stock grid.
//!
//! Both components carry the same convection-diffusion operator
//! `L X = 1/2 sigma^2 S^2 X_SS + r S X_S`; the equity part decays at `r` and
//! the cash part at `r + r_c`. Each backward step applies the operator
//! explicitly with central differences and the decay as an exact
//! exponential factor, injects coupons, sets the boundary rows and then
//! projects every interior node onto the payoff constraints with the same
//! classification the lattice uses.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{apply_constraints, NodeValue};
use crate::termsheet::{coupon_injections, year_offset, ContractTimeline, ConvertibleTerms, Date, MarketParams};

/// Upper bound on the number of time layers kept in an [`FdSolution`].
const MAX_STORED_LAYERS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FdGrid {
    pub s_max: f64,
    /// Stock nodes including both boundaries.
    pub n_s: usize,
    /// Time layers including both ends.
    pub n_t: usize,
}

impl FdGrid {
    pub fn ds(&self) -> f64 {
        self.s_max / (self.n_s - 1) as f64
    }

    /// Largest stable time step for the explicit scheme.
    pub fn max_stable_dt(&self, mkt: &MarketParams) -> f64 {
        let ds = self.ds();
        let sig = mkt.volatility * self.s_max;
        ds * ds / (sig * sig + mkt.risky_rate().max(0.0) * ds * ds)
    }

    /// Smallest layer count over `horizon` years satisfying the stability
    /// bound.
    pub fn stable(s_max: f64, n_s: usize, horizon: f64, mkt: &MarketParams) -> Result<Self> {
        let mut grid = Self { s_max, n_s, n_t: 2 };
        grid.check_shape()?;
        let steps = (horizon / grid.max_stable_dt(mkt)).ceil().max(1.0) as usize;
        grid.n_t = steps + 1;
        Ok(grid)
    }

    /// `S_max = 400`, unit stock spacing, stable time stepping from `t0`.
    pub fn reference(terms: &ConvertibleTerms, mkt: &MarketParams, t0: Date) -> Result<Self> {
        Self::stable(400.0, 401, year_offset(t0, terms.maturity, terms.day_count), mkt)
    }

    fn check_shape(&self) -> Result<()> {
        if self.n_s < 3 {
            return Err(Error::config(format!("FD grid needs at least 3 stock nodes, got {}", self.n_s)));
        }
        if self.n_t < 2 {
            return Err(Error::config("FD grid needs at least 2 time layers"));
        }
        if !(self.s_max.is_finite() && self.s_max > 0.0) {
            return Err(Error::config("FD grid S_max must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FdSolution {
    pub grid: FdGrid,
    pub origin: Date,
    /// Year offset of maturity from `origin`.
    pub horizon: f64,
    /// Offsets of the stored layers, ascending; the first is 0 and the last
    /// is the horizon.
    pub times: Vec<f64>,
    /// `equity[k][j]` at stored layer `k`, stock node `j`.
    pub equity: Vec<Vec<f64>>,
    pub debt: Vec<Vec<f64>>,
}

impl FdSolution {
    pub fn node(&self, layer: usize, j: usize) -> NodeValue {
        NodeValue::new(self.equity[layer][j], self.debt[layer][j])
    }

    pub fn spot(&self, j: usize) -> f64 {
        j as f64 * self.grid.ds()
    }

    /// Values on the evaluation-date layer.
    pub fn root_layer(&self) -> Vec<NodeValue> {
        (0..self.grid.n_s).map(|j| self.node(0, j)).collect()
    }

    pub fn nearest_layer(&self, tau: f64) -> usize {
        let idx = self.times.partition_point(|t| *t < tau);
        match idx {
            0 => 0,
            i if i >= self.times.len() => self.times.len() - 1,
            i => {
                if (tau - self.times[i - 1]) <= (self.times[i] - tau) {
                    i - 1
                } else {
                    i
                }
            }
        }
    }
}

/// Stride between stored layers for a solve with `n_t` layers.
fn storage_stride(n_t: usize) -> usize {
    n_t.div_ceil(MAX_STORED_LAYERS).max(1)
}

pub fn solve_tf_fd(terms: &ConvertibleTerms, mkt: &MarketParams, t0: Date, grid: FdGrid) -> Result<FdSolution> {
    grid.check_shape()?;
    let timeline = ContractTimeline::new(terms, t0)?;
    let layers = grid.n_t - 1;
    let dt = timeline.horizon / layers as f64;
    let limit = grid.max_stable_dt(mkt);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::config(format!(
            "unstable FD grid: dt = {dt:e} exceeds the explicit bound {limit:e}; use at least {} layers",
            (timeline.horizon / limit).ceil() as usize + 1
        )));
    }

    let n = grid.n_s;
    let top = n - 1;
    let ds = grid.ds();
    let spot = |j: usize| j as f64 * ds;
    let tau = |m: usize| if m == layers { timeline.horizon } else { m as f64 * dt };
    let inj = coupon_injections(
        &timeline.intermediate_coupons,
        timeline.coupon_amount(),
        dt,
        layers,
        mkt.risky_rate(),
    );

    // Per-node stencil weights for dt * L.
    let half_var = 0.5 * mkt.volatility * mkt.volatility * dt;
    let half_drift = 0.5 * mkt.rate * dt;
    let (lower, centre, upper): (Vec<f64>, Vec<f64>, Vec<f64>) = (0..n)
        .map(|j| {
            let jf = j as f64;
            let diff = half_var * jf * jf;
            let conv = half_drift * jf;
            (diff - conv, 1.0 - 2.0 * diff, diff + conv)
        })
        .fold((vec![], vec![], vec![]), |(mut a, mut b, mut c), (x, y, z)| {
            a.push(x);
            b.push(y);
            c.push(z);
            (a, b, c)
        });
    let decay_equity = (-mkt.rate * dt).exp();
    let decay_debt = (-mkt.risky_rate() * dt).exp();

    let stride = storage_stride(grid.n_t);
    let mut stored: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::with_capacity(layers / stride + 2);

    let terminal_ratio = timeline.ratio_at(timeline.horizon);
    let mut floor = timeline.redemption + inj[layers];
    let mut equity = vec![0.0; n];
    let mut debt = vec![0.0; n];
    let (call, put, ratio) = (
        timeline.dirty_call(timeline.horizon),
        timeline.dirty_put(timeline.horizon),
        terminal_ratio,
    );
    for j in 0..n {
        let (nv, _) = apply_constraints(NodeValue::new(0.0, floor), call, put, ratio * spot(j));
        equity[j] = nv.equity;
        debt[j] = nv.debt;
    }
    stored.push((timeline.horizon, equity.clone(), debt.clone()));

    let mut next_e = vec![0.0; n];
    let mut next_b = vec![0.0; n];
    for m in (0..layers).rev() {
        let t = tau(m);
        let (call, put, ratio) = (timeline.dirty_call(t), timeline.dirty_put(t), timeline.ratio_at(t));
        floor = decay_debt * floor + inj[m];

        for j in 1..top {
            let e = lower[j] * equity[j - 1] + centre[j] * equity[j] + upper[j] * equity[j + 1];
            let b = lower[j] * debt[j - 1] + centre[j] * debt[j] + upper[j] * debt[j + 1];
            let held = NodeValue::new(decay_equity * e, decay_debt * b + inj[m]);
            let (nv, _) = apply_constraints(held, call, put, ratio * spot(j));
            next_e[j] = nv.equity;
            next_b[j] = nv.debt;
        }

        let (nv, _) = apply_constraints(NodeValue::new(0.0, floor), call, put, 0.0);
        next_e[0] = nv.equity;
        next_b[0] = nv.debt;

        let far = terminal_ratio * grid.s_max;
        let held = if far >= floor {
            NodeValue::new(far, 0.0)
        } else {
            NodeValue::new(0.0, floor)
        };
        let (nv, _) = apply_constraints(held, call, put, ratio * grid.s_max);
        next_e[top] = nv.equity;
        next_b[top] = nv.debt;

        std::mem::swap(&mut equity, &mut next_e);
        std::mem::swap(&mut debt, &mut next_b);

        if let Some(j) = (0..n).find(|&j| !(equity[j].is_finite() && debt[j].is_finite())) {
            return Err(Error::Numerical {
                layer: m,
                message: format!("non-finite value at stock node {j}"),
            });
        }
        if m % stride == 0 {
            stored.push((t, equity.clone(), debt.clone()));
        }
    }

    stored.reverse();
    let (times, (equity, debt)) = stored.into_iter().map(|(t, e, b)| (t, (e, b))).unzip();
    Ok(FdSolution {
        grid,
        origin: t0,
        horizon: timeline.horizon,
        times,
        equity,
        debt,
    })
}

/// Section of the solution at date `t`: nearest stored layer, linear
/// interpolation in the stock price.
pub fn fd_profile(solution: &FdSolution, t: Date, spots: &[f64]) -> Result<Vec<(f64, NodeValue)>> {
    let tau = year_offset(solution.origin, t, Default::default());
    if tau < -1e-12 || tau > solution.horizon + 1e-12 {
        return Err(Error::domain(format!("date {t} is outside the solved span")));
    }
    let layer = solution.nearest_layer(tau);
    let ds = solution.grid.ds();
    let top = solution.grid.n_s - 1;
    spots
        .iter()
        .map(|&s| {
            if !(s >= 0.0 && s <= solution.grid.s_max) {
                return Err(Error::domain(format!(
                    "spot {s} outside the FD grid [0, {}]",
                    solution.grid.s_max
                )));
            }
            let x = s / ds;
            let j = (x.floor() as usize).min(top - 1);
            let w = x - j as f64;
            let (a, b) = (solution.node(layer, j), solution.node(layer, j + 1));
            let nv = if w == 0.0 {
                a
            } else if w == 1.0 {
                b
            } else {
                NodeValue::new(a.equity + w * (b.equity - a.equity), a.debt + w * (b.debt - a.debt))
            };
            Ok((s, nv))
        })
        .collect()
}
