//! Convertible bond contract terms, calendar arithmetic and the contract
//! functions (conversion value, dirty call and put levels).
//!
//! Dates are calendar dates without a time of day. Everything downstream of
//! this module works on a year axis measured from an evaluation date under
//! act/365; [`ContractTimeline`] performs that projection once per pricing.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance (in years) when comparing lattice layer times with contract
/// dates. One second is about 3.2e-8 years.
pub(crate) const TIME_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Date(NaiveDate);

impl Date {
    pub fn from_ymd(year: i32, month: u32, day: u32) -> Result<Self> {
        NaiveDate::from_ymd_opt(year, month, day)
            .map(Date)
            .ok_or_else(|| Error::domain(format!("invalid date {year:04}-{month:02}-{day:02}")))
    }

    pub fn year(&self) -> i32 {
        self.0.year()
    }

    pub fn month(&self) -> u32 {
        self.0.month()
    }

    pub fn day(&self) -> u32 {
        self.0.day()
    }

    /// Signed number of calendar days from `self` to `other`.
    pub fn days_until(&self, other: Date) -> i64 {
        other.0.signed_duration_since(self.0).num_days()
    }

    pub fn add_days(&self, days: i64) -> Result<Date> {
        self.0
            .checked_add_signed(chrono::Duration::days(days))
            .map(Date)
            .ok_or_else(|| Error::domain("date arithmetic overflow"))
    }

    pub fn sub_months(&self, months: u32) -> Result<Date> {
        self.0
            .checked_sub_months(Months::new(months))
            .map(Date)
            .ok_or_else(|| Error::domain("date arithmetic overflow"))
    }

    pub fn add_months(&self, months: u32) -> Result<Date> {
        self.0
            .checked_add_months(Months::new(months))
            .map(Date)
            .ok_or_else(|| Error::domain("date arithmetic overflow"))
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%d"))
    }
}

impl FromStr for Date {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
            .map(Date)
            .map_err(|e| Error::domain(format!("invalid ISO-8601 date {s:?}: {e}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DayCount {
    #[default]
    #[serde(rename = "ACT/365", alias = "act/365", alias = "ACT_365", alias = "Act/365")]
    Act365,
}

impl DayCount {
    pub fn days_in_year(&self) -> f64 {
        match self {
            DayCount::Act365 => 365.0,
        }
    }
}

/// Year fraction between two ordered dates.
pub fn year_fraction(d1: Date, d2: Date, dc: DayCount) -> Result<f64> {
    if d1 > d2 {
        return Err(Error::domain(format!(
            "year_fraction requires d1 <= d2, got {d1} > {d2}"
        )));
    }
    Ok(d1.days_until(d2) as f64 / dc.days_in_year())
}

/// Signed year offset of `to` relative to `from`.
pub(crate) fn year_offset(from: Date, to: Date, dc: DayCount) -> f64 {
    from.days_until(to) as f64 / dc.days_in_year()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouponSchedule {
    pub rate: f64,
    pub frequency: u32,
    pub nominal: f64,
    dates: Vec<Date>,
}

impl CouponSchedule {
    /// Coupon dates are generated by stepping `12 / frequency` months back
    /// from maturity until the issue date is reached. A frequency of zero
    /// means the bond pays no coupons.
    pub fn generate(issue: Date, maturity: Date, rate: f64, frequency: u32, nominal: f64) -> Result<Self> {
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::domain(format!("coupon rate must be finite and >= 0, got {rate}")));
        }
        if issue >= maturity {
            return Err(Error::domain("issue date must precede maturity"));
        }
        let mut dates = Vec::new();
        if frequency > 0 {
            if 12 % frequency != 0 {
                return Err(Error::domain(format!(
                    "coupon frequency must divide 12, got {frequency}"
                )));
            }
            let step = 12 / frequency;
            let mut k = 0u32;
            loop {
                let d = maturity.sub_months(step * k)?;
                if d <= issue {
                    break;
                }
                dates.push(d);
                k += 1;
            }
            dates.reverse();
        }
        Ok(Self {
            rate,
            frequency,
            nominal,
            dates,
        })
    }

    pub fn dates(&self) -> &[Date] {
        &self.dates
    }

    pub fn amount(&self) -> f64 {
        if self.frequency == 0 {
            0.0
        } else {
            self.nominal * self.rate / self.frequency as f64
        }
    }
}

/// A contractual price level: flat, or stepping at given dates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriceLevel {
    Constant(f64),
    Schedule(Vec<PriceStep>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceStep {
    pub from: Date,
    pub price: f64,
}

impl PriceLevel {
    fn at(&self, t: Date) -> f64 {
        match self {
            PriceLevel::Constant(p) => *p,
            PriceLevel::Schedule(steps) => steps
                .iter()
                .take_while(|s| s.from <= t)
                .last()
                .or(steps.first())
                .map(|s| s.price)
                .unwrap_or(f64::NAN),
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let ok = |p: f64| p.is_finite() && p > 0.0;
        match self {
            PriceLevel::Constant(p) if ok(*p) => Ok(()),
            PriceLevel::Constant(p) => Err(Error::domain(format!("{what} price must be > 0, got {p}"))),
            PriceLevel::Schedule(steps) => {
                if steps.is_empty() {
                    return Err(Error::domain(format!("{what} price schedule is empty")));
                }
                if steps.windows(2).any(|w| w[0].from >= w[1].from) {
                    return Err(Error::domain(format!(
                        "{what} price schedule dates must be strictly increasing"
                    )));
                }
                if let Some(s) = steps.iter().find(|s| !ok(s.price)) {
                    return Err(Error::domain(format!("{what} price must be > 0, got {}", s.price)));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversionTerms {
    pub ratio: f64,
    pub start: Date,
    pub end: Date,
}

impl ConversionTerms {
    pub fn contains(&self, t: Date) -> bool {
        self.start <= t && t <= self.end
    }
}

/// An issuer call or holder put right: a clean price level over a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExerciseWindow {
    pub price: PriceLevel,
    pub start: Date,
    pub end: Date,
}

impl ExerciseWindow {
    pub fn contains(&self, t: Date) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn clean_price(&self, t: Date) -> f64 {
        self.price.at(t)
    }
}

pub type CallTerms = ExerciseWindow;
pub type PutTerms = ExerciseWindow;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvertibleTerms {
    pub nominal: f64,
    pub issue: Date,
    pub maturity: Date,
    pub coupons: CouponSchedule,
    pub conversion: ConversionTerms,
    pub call: Option<CallTerms>,
    pub put: Option<PutTerms>,
    pub day_count: DayCount,
}

/// On-disk term sheet layout. Field names are the file's keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSheetFile {
    pub nominal: f64,
    pub coupon_rate: f64,
    pub coupon_frequency: u32,
    pub issue_date: Date,
    pub maturity_date: Date,
    pub conversion: ConversionTerms,
    #[serde(default)]
    pub call: Option<CallTerms>,
    #[serde(default)]
    pub put: Option<PutTerms>,
    #[serde(default)]
    pub day_count: DayCount,
}

const TABLE1_JSON: &str = include_str!("../../../tables/tf_table1.json");

impl ConvertibleTerms {
    /// The reference instrument: 5-year 4% semi-annual convertible into one
    /// share, callable at 110 from year two.
    pub fn table1() -> Self {
        Self::from_json(TABLE1_JSON).expect("bundled reference term sheet is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nominal.is_finite() && self.nominal > 0.0) {
            return Err(Error::domain(format!("nominal must be > 0, got {}", self.nominal)));
        }
        if self.issue >= self.maturity {
            return Err(Error::domain("issue date must precede maturity"));
        }
        let inside = |s: Date, e: Date, what: &str| {
            if s > e || s < self.issue || e > self.maturity {
                Err(Error::domain(format!(
                    "{what} window [{s}, {e}] must lie inside [{}, {}]",
                    self.issue, self.maturity
                )))
            } else {
                Ok(())
            }
        };
        if !(self.conversion.ratio.is_finite() && self.conversion.ratio >= 0.0) {
            return Err(Error::domain("conversion ratio must be >= 0"));
        }
        inside(self.conversion.start, self.conversion.end, "conversion")?;
        if let Some(call) = &self.call {
            inside(call.start, call.end, "call")?;
            call.price.validate("call")?;
        }
        if let Some(put) = &self.put {
            inside(put.start, put.end, "put")?;
            put.price.validate("put")?;
        }
        Ok(())
    }

    pub fn from_file(file: TermSheetFile) -> Result<Self> {
        let coupons = CouponSchedule::generate(
            file.issue_date,
            file.maturity_date,
            file.coupon_rate,
            file.coupon_frequency,
            file.nominal,
        )?;
        let terms = Self {
            nominal: file.nominal,
            issue: file.issue_date,
            maturity: file.maturity_date,
            coupons,
            conversion: file.conversion,
            call: file.call,
            put: file.put,
            day_count: file.day_count,
        };
        terms.validate()?;
        Ok(terms)
    }

    pub fn to_file(&self) -> TermSheetFile {
        TermSheetFile {
            nominal: self.nominal,
            coupon_rate: self.coupons.rate,
            coupon_frequency: self.coupons.frequency,
            issue_date: self.issue,
            maturity_date: self.maturity,
            conversion: self.conversion.clone(),
            call: self.call.clone(),
            put: self.put.clone(),
            day_count: self.day_count,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TermSheetFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_file(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("term sheet serializes")
    }

    /// Copy of the contract with nominal, conversion ratio and all price
    /// levels multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let scale_level = |lvl: &PriceLevel| match lvl {
            PriceLevel::Constant(p) => PriceLevel::Constant(p * factor),
            PriceLevel::Schedule(steps) => PriceLevel::Schedule(
                steps
                    .iter()
                    .map(|s| PriceStep {
                        from: s.from,
                        price: s.price * factor,
                    })
                    .collect(),
            ),
        };
        let mut file = self.to_file();
        file.nominal *= factor;
        file.conversion.ratio *= factor;
        if let Some(c) = file.call.as_mut() {
            c.price = scale_level(&c.price);
        }
        if let Some(p) = file.put.as_mut() {
            p.price = scale_level(&p.price);
        }
        Self::from_file(file)
    }

    fn check_life(&self, t: Date) -> Result<()> {
        if t < self.issue || t > self.maturity {
            return Err(Error::domain(format!(
                "date {t} outside bond life [{}, {}]",
                self.issue, self.maturity
            )));
        }
        Ok(())
    }

    /// Coupon accrued since the last coupon date (or issue) on `t`.
    pub fn accrued_interest(&self, t: Date) -> Result<f64> {
        self.check_life(t)?;
        let dates = self.coupons.dates();
        let next_idx = dates.partition_point(|d| *d <= t);
        let Some(&next) = dates.get(next_idx) else {
            return Ok(0.0);
        };
        let prev = if next_idx == 0 { self.issue } else { dates[next_idx - 1] };
        let elapsed = year_fraction(prev, t, self.day_count)?;
        let period = year_fraction(prev, next, self.day_count)?;
        Ok(self.coupons.amount() * elapsed / period)
    }

    pub fn conversion_value(&self, spot: f64, t: Date) -> f64 {
        if self.conversion.contains(t) {
            self.conversion.ratio * spot
        } else {
            0.0
        }
    }

    /// Clean call level plus accrued inside the call window, `+inf` outside.
    pub fn dirty_call_price(&self, t: Date) -> Result<f64> {
        self.check_life(t)?;
        match &self.call {
            Some(call) if call.contains(t) => Ok(call.clean_price(t) + self.accrued_interest(t)?),
            _ => Ok(f64::INFINITY),
        }
    }

    /// Clean put level plus accrued inside the put window, `0` outside.
    pub fn dirty_put_price(&self, t: Date) -> Result<f64> {
        self.check_life(t)?;
        match &self.put {
            Some(put) if put.contains(t) => Ok(put.clean_price(t) + self.accrued_interest(t)?),
            _ => Ok(0.0),
        }
    }

    /// Final redemption cash flow: nominal plus the coupon paid at maturity.
    pub fn redemption_amount(&self) -> f64 {
        let final_coupon = match self.coupons.dates().last() {
            Some(d) if *d == self.maturity => self.coupons.amount(),
            _ => 0.0,
        };
        self.nominal + final_coupon
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub rate: f64,
    pub credit_spread: f64,
    pub volatility: f64,
}

impl MarketParams {
    pub fn new(rate: f64, credit_spread: f64, volatility: f64) -> Result<Self> {
        if !(rate.is_finite() && credit_spread.is_finite()) {
            return Err(Error::domain("rates must be finite"));
        }
        if !(volatility.is_finite() && volatility > 0.0) {
            return Err(Error::domain(format!("volatility must be > 0, got {volatility}")));
        }
        Ok(Self {
            rate,
            credit_spread,
            volatility,
        })
    }

    /// 5% risk-free, 2% credit spread, 30% volatility.
    pub fn table1() -> Self {
        Self {
            rate: 0.05,
            credit_spread: 0.02,
            volatility: 0.30,
        }
    }

    pub fn risky_rate(&self) -> f64 {
        self.rate + self.credit_spread
    }
}

#[derive(Clone, Debug)]
struct Window {
    lo: f64,
    hi: f64,
}

impl Window {
    fn contains(&self, tau: f64) -> bool {
        tau >= self.lo - TIME_EPS && tau <= self.hi + TIME_EPS
    }
}

#[derive(Clone, Debug)]
struct TimedLevel {
    window: Window,
    /// (start offset, clean price) steps, ascending.
    steps: Vec<(f64, f64)>,
}

impl TimedLevel {
    fn project(w: &ExerciseWindow, origin: Date, dc: DayCount) -> Self {
        let steps = match &w.price {
            PriceLevel::Constant(p) => vec![(f64::NEG_INFINITY, *p)],
            PriceLevel::Schedule(s) => s
                .iter()
                .enumerate()
                .map(|(i, st)| {
                    let lo = if i == 0 { f64::NEG_INFINITY } else { year_offset(origin, st.from, dc) };
                    (lo, st.price)
                })
                .collect(),
        };
        Self {
            window: Window {
                lo: year_offset(origin, w.start, dc),
                hi: year_offset(origin, w.end, dc),
            },
            steps,
        }
    }

    fn clean(&self, tau: f64) -> f64 {
        self.steps
            .iter()
            .take_while(|(lo, _)| *lo <= tau + TIME_EPS)
            .last()
            .map(|(_, p)| *p)
            .unwrap_or(self.steps[0].1)
    }
}

/// The contract projected onto a year axis starting at an evaluation date.
///
/// Offsets are act/365 year fractions from the origin; dates before the
/// origin map to negative offsets.
#[derive(Clone, Debug)]
pub struct ContractTimeline {
    pub origin: Date,
    /// Offset of maturity.
    pub horizon: f64,
    /// Nominal plus the coupon paid at maturity.
    pub redemption: f64,
    coupon_amount: f64,
    /// Offsets of issue followed by every coupon date.
    accrual_bounds: Vec<f64>,
    /// Coupons strictly after the origin and strictly before maturity.
    pub intermediate_coupons: Vec<f64>,
    conversion: Window,
    ratio: f64,
    call: Option<TimedLevel>,
    put: Option<TimedLevel>,
}

impl ContractTimeline {
    pub fn new(terms: &ConvertibleTerms, origin: Date) -> Result<Self> {
        if origin < terms.issue || origin >= terms.maturity {
            return Err(Error::domain(format!(
                "evaluation date {origin} must lie in [{}, {})",
                terms.issue, terms.maturity
            )));
        }
        let dc = terms.day_count;
        let off = |d: Date| year_offset(origin, d, dc);
        let dates = terms.coupons.dates();
        let mut accrual_bounds = Vec::with_capacity(dates.len() + 1);
        accrual_bounds.push(off(terms.issue));
        accrual_bounds.extend(dates.iter().map(|d| off(*d)));
        let intermediate_coupons = dates
            .iter()
            .filter(|d| **d > origin && **d < terms.maturity)
            .map(|d| off(*d))
            .collect();
        Ok(Self {
            origin,
            horizon: off(terms.maturity),
            redemption: terms.redemption_amount(),
            coupon_amount: terms.coupons.amount(),
            accrual_bounds,
            intermediate_coupons,
            conversion: Window {
                lo: off(terms.conversion.start),
                hi: off(terms.conversion.end),
            },
            ratio: terms.conversion.ratio,
            call: terms.call.as_ref().map(|c| TimedLevel::project(c, origin, dc)),
            put: terms.put.as_ref().map(|p| TimedLevel::project(p, origin, dc)),
        })
    }

    pub fn coupon_amount(&self) -> f64 {
        self.coupon_amount
    }

    pub fn accrued(&self, tau: f64) -> f64 {
        let b = &self.accrual_bounds;
        let next_idx = b.partition_point(|x| *x <= tau + TIME_EPS);
        if next_idx == 0 || next_idx >= b.len() {
            return 0.0;
        }
        let (prev, next) = (b[next_idx - 1], b[next_idx]);
        self.coupon_amount * ((tau - prev) / (next - prev)).max(0.0)
    }

    /// Conversion ratio in force at `tau` (zero outside the window).
    pub fn ratio_at(&self, tau: f64) -> f64 {
        if self.conversion.contains(tau) {
            self.ratio
        } else {
            0.0
        }
    }

    pub fn dirty_call(&self, tau: f64) -> f64 {
        match &self.call {
            Some(c) if c.window.contains(tau) => c.clean(tau) + self.accrued(tau),
            _ => f64::INFINITY,
        }
    }

    pub fn dirty_put(&self, tau: f64) -> f64 {
        match &self.put {
            Some(p) if p.window.contains(tau) => p.clean(tau) + self.accrued(tau),
            _ => 0.0,
        }
    }
}

/// Maps coupon offsets onto a uniform layer grid `0, dt, 2dt, ..., n dt`.
///
/// Each coupon lands on the first layer at or after its date; the amount is
/// discounted at `risky_rate` from the coupon date to that layer. Returns a
/// per-layer injection vector of length `n + 1`.
pub(crate) fn coupon_injections(
    coupon_offsets: &[f64],
    amount: f64,
    dt: f64,
    layers: usize,
    risky_rate: f64,
) -> Vec<f64> {
    let mut inj = vec![0.0; layers + 1];
    for &tau in coupon_offsets {
        let idx = ((tau / dt) - 1e-9).ceil().max(0.0) as usize;
        let idx = idx.min(layers);
        let lag = (idx as f64 * dt - tau).max(0.0);
        inj[idx] += amount * (-risky_rate * lag).exp();
    }
    inj
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn d(s: &str) -> Date {
        s.parse().unwrap()
    }

    /// Walks the calendar one day at a time.
    fn enumerate_days(a: Date, b: Date) -> i64 {
        let mut n = 0;
        let mut cur = a;
        while cur < b {
            cur = cur.add_days(1).unwrap();
            n += 1;
        }
        n
    }

    #[test]
    fn year_fraction_matches_calendar_enumeration() {
        let a = d("2002-01-02");
        assert_eq!(year_fraction(a, a, DayCount::Act365).unwrap(), 0.0);
        let five = enumerate_days(a, d("2007-01-02"));
        assert_eq!(five, 1826);
        assert_eq!(year_fraction(a, d("2007-01-02"), DayCount::Act365).unwrap(), 1826.0 / 365.0);
        let half = enumerate_days(a, d("2002-07-02"));
        assert_eq!(half, 181);
        assert_eq!(year_fraction(a, d("2002-07-02"), DayCount::Act365).unwrap(), 181.0 / 365.0);
    }

    #[test]
    fn year_fraction_rejects_reversed_dates() {
        let err = year_fraction(d("2003-01-01"), d("2002-01-01"), DayCount::Act365);
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn table1_coupon_schedule() {
        let t = ConvertibleTerms::table1();
        let dates = t.coupons.dates();
        assert_eq!(dates.len(), 10);
        assert_eq!(dates[0], d("2002-07-02"));
        assert_eq!(dates[1], d("2003-01-02"));
        assert_eq!(*dates.last().unwrap(), t.maturity);
        assert!(dates.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(t.coupons.amount(), 2.0);
        assert_eq!(t.redemption_amount(), 102.0);
    }

    #[test]
    fn accrued_interest_cases() {
        let t = ConvertibleTerms::table1();
        assert_eq!(t.accrued_interest(t.issue).unwrap(), 0.0);
        assert_eq!(t.accrued_interest(d("2004-01-02")).unwrap(), 0.0);
        assert_eq!(t.accrued_interest(t.maturity).unwrap(), 0.0);
        // 90 of 181 days into the first period.
        let mid = t.issue.add_days(90).unwrap();
        assert_relative_eq!(t.accrued_interest(mid).unwrap(), 2.0 * 90.0 / 181.0, max_relative = 1e-15);
        assert!(matches!(t.accrued_interest(d("2001-12-31")), Err(Error::Domain(_))));
        assert!(matches!(t.accrued_interest(d("2007-01-03")), Err(Error::Domain(_))));
    }

    #[test]
    fn contract_functions() {
        let t = ConvertibleTerms::table1();
        assert_eq!(t.conversion_value(110.0, d("2004-01-02")), 110.0);
        assert_eq!(t.dirty_call_price(d("2004-01-02")).unwrap(), 110.0);
        assert_eq!(t.dirty_call_price(d("2003-01-02")).unwrap(), f64::INFINITY);
        let mid = d("2004-04-02");
        let ai = t.accrued_interest(mid).unwrap();
        assert_relative_eq!(ai, 2.0 * 91.0 / 182.0, max_relative = 1e-15);
        assert_eq!(t.dirty_call_price(mid).unwrap(), 110.0 + ai);
        assert_eq!(t.dirty_put_price(mid).unwrap(), 0.0);

        let mut zero = t.to_file();
        zero.conversion.ratio = 0.0;
        let zero = ConvertibleTerms::from_file(zero).unwrap();
        assert_eq!(zero.conversion_value(500.0, mid), 0.0);

        let mut short = t.to_file();
        short.conversion.end = d("2005-01-02");
        let short = ConvertibleTerms::from_file(short).unwrap();
        assert_eq!(short.conversion_value(120.0, d("2005-06-01")), 0.0);
    }

    #[test]
    fn put_inside_window_is_dirty() {
        let mut f = ConvertibleTerms::table1().to_file();
        f.put = Some(PutTerms {
            price: PriceLevel::Constant(98.0),
            start: d("2003-01-02"),
            end: d("2005-01-02"),
        });
        let t = ConvertibleTerms::from_file(f).unwrap();
        assert_eq!(t.dirty_put_price(d("2004-01-02")).unwrap(), 98.0);
        let mid = d("2004-03-15");
        let ai = t.accrued_interest(mid).unwrap();
        assert!(ai > 0.0);
        assert_eq!(t.dirty_put_price(mid).unwrap(), 98.0 + ai);
        assert_eq!(t.dirty_put_price(d("2006-01-02")).unwrap(), 0.0);
    }

    #[test]
    fn piecewise_call_schedule() {
        let mut f = ConvertibleTerms::table1().to_file();
        f.call = Some(CallTerms {
            price: PriceLevel::Schedule(vec![
                PriceStep { from: d("2004-01-02"), price: 112.0 },
                PriceStep { from: d("2005-01-02"), price: 108.0 },
            ]),
            start: d("2004-01-02"),
            end: d("2007-01-02"),
        });
        let t = ConvertibleTerms::from_file(f).unwrap();
        assert_eq!(t.dirty_call_price(d("2004-07-02")).unwrap(), 112.0);
        assert_eq!(t.dirty_call_price(d("2005-07-02")).unwrap(), 108.0);
        let tl = ContractTimeline::new(&t, t.issue).unwrap();
        let tau = year_offset(t.issue, d("2005-07-02"), DayCount::Act365);
        assert_eq!(tl.dirty_call(tau), 108.0);
    }

    #[test]
    fn invalid_terms_rejected() {
        let mut f = ConvertibleTerms::table1().to_file();
        f.call.as_mut().unwrap().end = d("2008-01-02");
        assert!(ConvertibleTerms::from_file(f).is_err());
        let mut f = ConvertibleTerms::table1().to_file();
        f.conversion.ratio = -1.0;
        assert!(ConvertibleTerms::from_file(f).is_err());
        let mut f = ConvertibleTerms::table1().to_file();
        f.maturity_date = f.issue_date;
        assert!(ConvertibleTerms::from_file(f).is_err());
        let mut f = ConvertibleTerms::table1().to_file();
        f.coupon_frequency = 5;
        assert!(ConvertibleTerms::from_file(f).is_err());
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "{\n  \"nominal\": 100.0,\n  \"coupon_rate\": oops\n}";
        match ConvertibleTerms::from_json(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn table1_round_trip_is_lossless() {
        let t = ConvertibleTerms::table1();
        let back = ConvertibleTerms::from_json(&t.to_json()).unwrap();
        assert_eq!(t, back);
        let file: serde_json::Value = serde_json::from_str(TABLE1_JSON).unwrap();
        let again: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(file, again);
    }

    #[test]
    fn timeline_agrees_with_dated_functions() {
        let t = ConvertibleTerms::table1();
        let origin = d("2003-05-17");
        let tl = ContractTimeline::new(&t, origin).unwrap();
        for days in [0i64, 30, 230, 231, 400, 597] {
            let date = origin.add_days(days).unwrap();
            let tau = days as f64 / 365.0;
            assert_relative_eq!(tl.accrued(tau), t.accrued_interest(date).unwrap(), epsilon = 1e-12);
            let (a, b) = (tl.dirty_call(tau), t.dirty_call_price(date).unwrap());
            if b.is_infinite() {
                assert!(a.is_infinite());
            } else {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
        assert_eq!(tl.redemption, 102.0);
        assert_relative_eq!(tl.horizon, 1326.0 / 365.0);
    }

    #[test]
    fn injections_land_on_first_layer_at_or_after() {
        let inj = coupon_injections(&[0.25, 0.5], 2.0, 0.1, 10, 0.07);
        assert_relative_eq!(inj[3], 2.0 * (-0.07f64 * 0.05).exp(), max_relative = 1e-12);
        assert_relative_eq!(inj[5], 2.0, max_relative = 1e-12);
        assert_eq!(inj.iter().filter(|x| **x != 0.0).count(), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn date_strategy() -> impl Strategy<Value = Date> {
            (0i64..4000).prop_map(|n| Date::from_ymd(2000, 1, 1).unwrap().add_days(n).unwrap())
        }

        proptest! {
            #[test]
            fn year_fraction_is_additive(a in date_strategy(), b in date_strategy(), c in date_strategy()) {
                let mut v = [a, b, c];
                v.sort();
                let dc = DayCount::Act365;
                let whole = year_fraction(v[0], v[2], dc).unwrap();
                let parts = year_fraction(v[0], v[1], dc).unwrap() + year_fraction(v[1], v[2], dc).unwrap();
                // Day counts are integers, so the only error is the final division.
                prop_assert!((whole - parts).abs() <= 4.0 * f64::EPSILON * whole.max(1.0));
            }

            #[test]
            fn accrued_is_bounded_and_increasing(days in 0i64..1825) {
                let t = ConvertibleTerms::table1();
                let date = t.issue.add_days(days).unwrap();
                let next = date.add_days(1).unwrap();
                let ai = t.accrued_interest(date).unwrap();
                let ai_next = t.accrued_interest(next).unwrap();
                prop_assert!((0.0..2.0).contains(&ai));
                if t.coupons.dates().contains(&next) {
                    prop_assert_eq!(ai_next, 0.0);
                } else {
                    prop_assert!(ai_next > ai);
                }
            }

            #[test]
            fn conversion_value_is_homogeneous(s in 0.0f64..1e4, lambda in 0.0f64..50.0, days in 0i64..1826) {
                let t = ConvertibleTerms::table1();
                let date = t.issue.add_days(days).unwrap();
                let lhs = t.conversion_value(lambda * s, date);
                let rhs = lambda * t.conversion_value(s, date);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
            }
        }
    }
}
