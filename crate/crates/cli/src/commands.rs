use anyhow::Context;
use tflab::diagnostics::{local_extrema, non_increasing_steps, second_differences, sign_changes, strict_decreases};
use tflab::sensitivities::{default_time_grid, spot_grid};
use tflab::termsheet::year_fraction;
use tflab::{
    fd_profile, greek_profile, price_profile_raw, price_tf_crr, run_var, solve_tf_fd, stress_curve, surface, ConvertibleTerms,
    Date, FdGrid, GreekPoint, HedgeStressSpec, Histogram,
};

use crate::config::{Command, RunConfig, SpotRange};
use crate::report::{Report, Table};

/// Tolerance for counting monotonicity violations in `compare`.
pub const MONOTONE_TOL: f64 = 1e-6;

/// Sign changes smaller than this are rounding noise, not oscillation.
pub const SIGN_TOL: f64 = 1e-10;

pub fn run(cfg: &RunConfig) -> anyhow::Result<Report> {
    match cfg.command {
        Command::Price => cmd_price(cfg),
        Command::Surface => cmd_surface(cfg),
        Command::Greeks => cmd_greeks(cfg),
        Command::HedgeStress => cmd_hedge_stress(cfg),
        Command::Var => cmd_var(cfg),
        Command::Compare => cmd_compare(cfg),
    }
}

fn years_since_issue(terms: &ConvertibleTerms, t: Date) -> anyhow::Result<f64> {
    Ok(year_fraction(terms.issue, t, terms.day_count)?)
}

fn grid(range: Option<SpotRange>) -> anyhow::Result<Vec<f64>> {
    let r = range.context("spot range not configured")?;
    Ok(spot_grid(r.min, r.max, r.step)?)
}

fn required<T: Copy>(v: Option<T>, what: &str) -> anyhow::Result<T> {
    v.with_context(|| format!("{what} not configured"))
}

pub fn cmd_price(cfg: &RunConfig) -> anyhow::Result<Report> {
    let terms = cfg.contract()?;
    let t = required(cfg.date, "date")?;
    let spot = required(cfg.spot, "spot")?;
    let res = price_tf_crr(&terms, &cfg.market, t, spot, cfg.steps)?;
    let accrued = terms.accrued_interest(t)?;
    let p = res.params;

    let mut table = Table::new(
        "price",
        &[
            "t_years", "t_date", "S", "steps", "V_dirty", "V_clean", "accrued", "E", "B", "dt", "u", "d", "p",
            "conversion_nodes", "call_nodes", "put_nodes",
        ],
    );
    table.push(vec![
        years_since_issue(&terms, t)?.into(),
        t.to_string().into(),
        spot.into(),
        cfg.steps.into(),
        res.value().into(),
        (res.value() - accrued).into(),
        accrued.into(),
        res.root.equity.into(),
        res.root.debt.into(),
        p.dt.into(),
        p.up.into(),
        p.down.into(),
        p.prob.into(),
        res.bindings.conversion.into(),
        res.bindings.call.into(),
        res.bindings.put.into(),
    ]);

    let mut report = Report::new(cfg.clone());
    report.note("V_dirty", res.value());
    report.note("V_clean", res.value() - accrued);
    report.note("E", res.root.equity);
    report.note("B", res.root.debt);
    report.tables.push(table);
    Ok(report)
}

const GREEK_COLUMNS: [&str; 10] = [
    "t_years", "t_date", "S", "V_dirty", "V_clean", "E", "B", "delta", "delta_pct", "gamma",
];

fn greek_rows(table: &mut Table, terms: &ConvertibleTerms, points: &[GreekPoint]) -> anyhow::Result<()> {
    for g in points {
        let accrued = terms.accrued_interest(g.t)?;
        table.push(vec![
            years_since_issue(terms, g.t)?.into(),
            g.t.to_string().into(),
            g.spot.into(),
            g.value.into(),
            (g.value - accrued).into(),
            g.equity.into(),
            g.debt.into(),
            g.delta.into(),
            g.delta_pct.into(),
            g.gamma.into(),
        ]);
    }
    Ok(())
}

pub fn cmd_surface(cfg: &RunConfig) -> anyhow::Result<Report> {
    let terms = cfg.contract()?;
    let spots = grid(cfg.spots)?;
    let times = default_time_grid(&terms, required(cfg.t_points, "t_points")?)?;
    let surf = surface(&terms, &cfg.market, &times, &spots, cfg.steps)?;
    let mut table = Table::new("surface", &GREEK_COLUMNS);
    greek_rows(&mut table, &terms, &surf.points)?;
    let mut report = Report::new(cfg.clone());
    report.note("dates", times.len());
    report.note("spots", spots.len());
    report.tables.push(table);
    Ok(report)
}

pub fn cmd_greeks(cfg: &RunConfig) -> anyhow::Result<Report> {
    let terms = cfg.contract()?;
    let t = required(cfg.date, "date")?;
    let spots = grid(cfg.spots)?;
    let points = greek_profile(&terms, &cfg.market, t, &spots, cfg.steps)?;
    let values: Vec<f64> = points.iter().map(|g| g.value).collect();
    let deltas: Vec<f64> = points.iter().map(|g| g.delta).collect();
    let gammas: Vec<f64> = points.iter().map(|g| g.gamma).collect();

    let mut table = Table::new("greeks", &GREEK_COLUMNS);
    greek_rows(&mut table, &terms, &points)?;
    let mut report = Report::new(cfg.clone());
    report.note("value_non_increasing_steps", non_increasing_steps(&values, 0.0).len());
    report.note("value_curvature_sign_changes", sign_changes(&second_differences(&values), SIGN_TOL).len());
    report.note("delta_local_extrema", local_extrema(&deltas, SIGN_TOL));
    report.note("gamma_sign_changes", sign_changes(&gammas, SIGN_TOL).len());
    report.tables.push(table);
    Ok(report)
}

pub fn cmd_hedge_stress(cfg: &RunConfig) -> anyhow::Result<Report> {
    let terms = cfg.contract()?;
    let spec = HedgeStressSpec {
        shock: required(cfg.shock, "shock")?,
        spots: grid(cfg.spots)?,
        t: required(cfg.date, "date")?,
        steps: cfg.steps,
        contract_size: required(cfg.contract_size, "contract size")?,
    };
    let curve = stress_curve(&spec, &terms, &cfg.market)?;
    let mut table = Table::new("hedge_stress", &["S", "increment", "increment_scaled", "increment_relative"]);
    for p in &curve {
        table.push(vec![
            p.spot.into(),
            p.increment.into(),
            p.increment_scaled.into(),
            p.increment_relative.into(),
        ]);
    }
    let inc: Vec<f64> = curve.iter().map(|p| p.increment).collect();
    let worst = curve
        .iter()
        .max_by(|a, b| a.increment.abs().total_cmp(&b.increment.abs()))
        .expect("non-empty grid");
    let mut report = Report::new(cfg.clone());
    report.note("scaling", spec.scaling(&terms));
    report.note("increment_sign_changes", sign_changes(&inc, SIGN_TOL).len());
    report.note("max_abs_increment", worst.increment.abs());
    report.note("max_abs_increment_at_S", worst.spot);
    report.tables.push(table);
    Ok(report)
}

fn histogram_table(name: &str, h: &Histogram) -> Table {
    let total = h.total() as f64;
    let mut t = Table::new(name, &["bin_lo", "bin_hi", "center", "count", "density"]);
    for (i, c) in h.counts.iter().enumerate() {
        let (lo, hi) = (h.edges[i], h.edges[i + 1]);
        let width = hi - lo;
        let density = if width > 0.0 { *c as f64 / (total * width) } else { f64::NAN };
        t.push(vec![lo.into(), hi.into(), (0.5 * (lo + hi)).into(), (*c).into(), density.into()]);
    }
    t
}

pub fn cmd_var(cfg: &RunConfig) -> anyhow::Result<Report> {
    let terms = cfg.contract()?;
    let spec = cfg.var.clone().context("VaR spec not configured")?;
    let res = run_var(&spec, &terms, &cfg.market, required(cfg.bins, "bins")?)?;

    let mut scenarios = Table::new("var_scenarios", &["index", "S_h", "V_h", "pnl"]);
    for (i, ((s, v), x)) in res.stock.iter().zip(&res.values).zip(&res.pnl).enumerate() {
        scenarios.push(vec![i.into(), (*s).into(), (*v).into(), (*x).into()]);
    }
    let mut report = Report::new(cfg.clone());
    report.note("horizon_date", spec.horizon_date()?.to_string());
    report.note("V0", res.v0);
    report.note("var_abs", res.var_abs);
    report.note("var_pct", res.var_pct);
    report.note("stock_mode_center", res.stock_histogram.centers()[res.stock_histogram.mode_bin()]);
    report.note("value_mode_center", res.value_histogram.centers()[res.value_histogram.mode_bin()]);
    report.tables.push(histogram_table("var_stock_histogram", &res.stock_histogram));
    report.tables.push(histogram_table("var_value_histogram", &res.value_histogram));
    report.tables.push(scenarios);
    Ok(report)
}

pub fn cmd_compare(cfg: &RunConfig) -> anyhow::Result<Report> {
    let terms = cfg.contract()?;
    let t = required(cfg.date, "date")?;
    let spots = grid(cfg.spots)?;
    let fd_cfg = cfg.fd.context("FD grid not configured")?;

    let lattice: Vec<f64> = price_profile_raw(&terms, &cfg.market, t, &spots, cfg.steps)?
        .iter()
        .map(|(_, nv)| nv.value())
        .collect();
    let horizon = year_fraction(t, terms.maturity, terms.day_count)?;
    let fd_grid = FdGrid::stable(fd_cfg.s_max, fd_cfg.nodes, horizon, &cfg.market)?;
    let sol = solve_tf_fd(&terms, &cfg.market, t, fd_grid)?;
    let fd: Vec<f64> = fd_profile(&sol, t, &spots)?.iter().map(|(_, nv)| nv.value()).collect();

    let mut table = Table::new("compare", &["S", "V_lattice", "V_fd", "diff"]);
    let mut max_diff = 0.0f64;
    for ((s, l), f) in spots.iter().zip(&lattice).zip(&fd) {
        max_diff = max_diff.max((l - f).abs());
        table.push(vec![(*s).into(), (*l).into(), (*f).into(), (l - f).into()]);
    }
    let mut report = Report::new(cfg.clone());
    report.note("fd_time_layers", fd_grid.n_t);
    report.note("max_abs_diff", max_diff);
    report.note("lattice_violations", non_increasing_steps(&lattice, MONOTONE_TOL).len());
    report.note("fd_violations", non_increasing_steps(&fd, MONOTONE_TOL).len());
    report.note("lattice_strict_decreases", strict_decreases(&lattice, 0.0).len());
    report.note("fd_strict_decreases", strict_decreases(&fd, MONOTONE_TOL).len());
    report.note("lattice_curvature_sign_changes", sign_changes(&second_differences(&lattice), SIGN_TOL).len());
    report.note("fd_curvature_sign_changes", sign_changes(&second_differences(&fd), SIGN_TOL).len());
    report.tables.push(table);
    Ok(report)
}
