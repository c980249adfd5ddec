//! Command-line overrides resolved into a fully specified, hashable run
//! configuration.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::Serialize;
use tflab::termsheet::TermSheetFile;
use tflab::{ConvertibleTerms, Date, MarketParams, VarSpec};

use crate::report::sha256_hex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Price,
    Surface,
    Greeks,
    HedgeStress,
    Var,
    Compare,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Price => "price",
            Command::Surface => "surface",
            Command::Greeks => "greeks",
            Command::HedgeStress => "hedge-stress",
            Command::Var => "var",
            Command::Compare => "compare",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Report,
}

/// Flags shared by every subcommand. Anything left unset takes the
/// subcommand's default.
#[derive(Clone, Debug, Default, Args)]
pub struct Overrides {
    /// Term-sheet JSON; the built-in example contract when omitted.
    #[arg(long)]
    pub terms: Option<PathBuf>,
    /// Risk-free rate, continuously compounded.
    #[arg(long, allow_negative_numbers = true)]
    pub rate: Option<f64>,
    /// Credit spread, continuously compounded.
    #[arg(long, allow_negative_numbers = true)]
    pub spread: Option<f64>,
    #[arg(long)]
    pub vol: Option<f64>,
    #[arg(long)]
    pub spot: Option<f64>,
    /// Evaluation date, YYYY-MM-DD.
    #[arg(long)]
    pub date: Option<Date>,
    /// Lattice steps.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub s_min: Option<f64>,
    #[arg(long)]
    pub s_max: Option<f64>,
    #[arg(long)]
    pub s_step: Option<f64>,
    /// Dates in the surface time grid.
    #[arg(long)]
    pub t_points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub shock: Option<f64>,
    #[arg(long)]
    pub contract_size: Option<f64>,
    #[arg(long)]
    pub scenarios: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub confidence: Option<f64>,
    #[arg(long)]
    pub holding_days: Option<u32>,
    /// Annual drift of the VaR scenarios.
    #[arg(long, allow_negative_numbers = true)]
    pub drift: Option<f64>,
    /// Annual volatility of the VaR scenarios; defaults to --vol.
    #[arg(long)]
    pub scenario_vol: Option<f64>,
    /// Histogram bins for the VaR densities.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Stock nodes of the finite-difference grid (compare).
    #[arg(long)]
    pub fd_nodes: Option<usize>,
    /// Upper stock boundary of the finite-difference grid (compare).
    #[arg(long)]
    pub fd_s_max: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpotRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FdSettings {
    pub s_max: f64,
    pub nodes: usize,
}

/// Everything that determines a report's payload. The output directory is
/// not part of it.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub terms: TermSheetFile,
    pub market: MarketParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub date: Option<Date>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spot: Option<f64>,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spots: Option<SpotRange>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shock: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contract_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var: Option<VarSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd: Option<FdSettings>,
    pub format: OutputFormat,
    #[serde(skip)]
    pub out: PathBuf,
}

impl RunConfig {
    pub fn resolve(command: Command, o: &Overrides) -> anyhow::Result<Self> {
        let terms = match &o.terms {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ConvertibleTerms::from_json(&text).with_context(|| format!("term sheet {}", path.display()))?
            }
            None => ConvertibleTerms::table1(),
        };
        let base = MarketParams::table1();
        let market = MarketParams::new(
            o.rate.unwrap_or(base.rate),
            o.spread.unwrap_or(base.credit_spread),
            o.vol.unwrap_or(base.volatility),
        )?;
        let second_year: Date = terms.issue.add_months(24)?;
        let steps = o.steps.unwrap_or(500);
        let spot = o.spot.unwrap_or(100.0);
        let range = |min: f64, max: f64, step: f64| SpotRange {
            min: o.s_min.unwrap_or(min),
            max: o.s_max.unwrap_or(max),
            step: o.s_step.unwrap_or(step),
        };

        let mut cfg = RunConfig {
            command,
            terms: terms.to_file(),
            market,
            date: None,
            spot: None,
            steps,
            spots: None,
            t_points: None,
            shock: None,
            contract_size: None,
            var: None,
            bins: None,
            fd: None,
            format: o.format,
            out: o.out.clone(),
        };
        match command {
            Command::Price => {
                cfg.date = Some(o.date.unwrap_or(terms.issue));
                cfg.spot = Some(spot);
            }
            Command::Surface => {
                cfg.spots = Some(range(50.0, 200.0, 1.0));
                cfg.t_points = Some(o.t_points.unwrap_or(61));
            }
            Command::Greeks => {
                cfg.date = Some(o.date.unwrap_or(second_year));
                cfg.spots = Some(range(50.0, 200.0, 0.5));
            }
            Command::HedgeStress => {
                cfg.date = Some(o.date.unwrap_or(terms.issue));
                cfg.spots = Some(range(50.0, 200.0, 0.5));
                cfg.shock = Some(o.shock.unwrap_or(0.5));
                cfg.contract_size = Some(o.contract_size.unwrap_or(1_000_000.0));
            }
            Command::Var => {
                let spec = VarSpec {
                    evaluation_date: o.date.unwrap_or(second_year),
                    holding_days: o.holding_days.unwrap_or(1),
                    confidence: o.confidence.unwrap_or(0.99),
                    scenarios: o.scenarios.unwrap_or(10_000),
                    drift: o.drift.unwrap_or(0.05),
                    scenario_vol: o.scenario_vol.unwrap_or(market.volatility),
                    spot,
                    seed: o.seed.unwrap_or(20_040_102),
                    steps,
                };
                spec.validate()?;
                cfg.var = Some(spec);
                cfg.bins = Some(o.bins.unwrap_or(100));
            }
            Command::Compare => {
                cfg.date = Some(o.date.unwrap_or(second_year));
                cfg.spots = Some(range(105.0, 112.0, 0.1));
                cfg.fd = Some(FdSettings {
                    s_max: o.fd_s_max.unwrap_or(400.0),
                    nodes: o.fd_nodes.unwrap_or(401),
                });
            }
        }
        if steps == 0 {
            anyhow::bail!("--steps must be at least 1");
        }
        Ok(cfg)
    }

    pub fn contract(&self) -> anyhow::Result<ConvertibleTerms> {
        Ok(ConvertibleTerms::from_file(self.terms.clone())?)
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }
}
