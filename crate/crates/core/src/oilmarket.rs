//! Oil-price main loop: price moves with the expected supply-to-demand ratio.
//!
//! ```text
//! dP/dt = alpha1 * (ExS * TOS) / (ExD * TOD) + beta1
//! ```
//!
//! All rates are per day. TOS grows linearly from `StartTime`, an upset
//! removes a fraction of base supply, speculation lowers the supply
//! expectation, and an OPEC decision can route spare supply back in through
//! a pipeline delay.

use std::fmt::Write;

use thiserror::Error;

use crate::calibrate::DAYS_PER_QUARTER;
use crate::diag::Diagnostics;
use crate::integrate::{IntegratorKind, SimError, Simulation, Trajectory};
use crate::modelfmt::parse_model;
use crate::scenario::{Event, EventAction, GridOverrides, ScenarioDoc};
use crate::sdcore::{format_number, GridError, Model, TimeGrid, DEFAULT_TIME_STEP};

pub const OIL_MODEL_SFM: &str = include_str!("../fixtures/oilmarket.sfm");
pub const SCENARIO_A_SFS: &str = include_str!("../fixtures/scenario_a.sfs");
pub const SCENARIO_B_HOLD_SFS: &str = include_str!("../fixtures/scenario_b_hold.sfs");
pub const SCENARIO_B_SPARE_SFS: &str = include_str!("../fixtures/scenario_b_spare.sfs");

pub const SCENARIO_A_HORIZON: f64 = 43.0;
pub const SCENARIO_B_HORIZON: f64 = 120.0;

/// Supply growth per day that takes the default market from 100 to 99.16
/// in 43 days. With `k = alpha1 * r0` (`r0 = BaseTOS/BaseTOD`) the price is
/// `P(T) = P0 + (k + beta1) * T + k * g * T^2 / 2`, solved for `g`.
pub const SCENARIO_A_SUPPLY_GROWTH: f64 = 0.001565842465357822;

/// Every quantity that shapes the oil model and its two scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct OilMarketParams {
    /// USD/day per unit of ratio.
    pub alpha1: f64,
    /// USD/day.
    pub beta1: f64,
    pub initial_price: f64,
    pub base_tos: f64,
    pub base_tod: f64,
    /// Fraction of `base_tos` per day.
    pub supply_growth: f64,
    pub start_time: f64,
    /// Multiplier paths as `(t, value)` breakpoints, linear in between.
    pub exs_path: Vec<(f64, f64)>,
    pub exd_path: Vec<(f64, f64)>,
    pub upset_time: f64,
    /// Fraction of `base_tos` lost at the upset; 0 means no upset.
    pub upset_magnitude: f64,
    /// Fractional drop of the supply expectation once the upset is known.
    pub speculation: f64,
    /// Days over which speculation builds up.
    pub spec_ramp: f64,
    pub meeting_delay: f64,
    pub opec_decision: u8,
    pub spare_lag: f64,
    pub spare_duration: f64,
}

impl Default for OilMarketParams {
    /// Calibration fixture: the line `PCR = -50 R + 51.45` per quarter, which
    /// passes through a mean ratio of 1.00 at a mean PCR of 1.45, rescaled to
    /// days. The market starts 3% oversupplied.
    fn default() -> Self {
        OilMarketParams {
            alpha1: -50.0 / DAYS_PER_QUARTER,
            beta1: 51.45 / DAYS_PER_QUARTER,
            initial_price: 100.0,
            base_tos: 92.7,
            base_tod: 90.0,
            supply_growth: SCENARIO_A_SUPPLY_GROWTH,
            start_time: 0.0,
            exs_path: vec![(0.0, 1.0)],
            exd_path: vec![(0.0, 1.0)],
            upset_time: 10.0,
            upset_magnitude: 0.1,
            speculation: 0.008,
            spec_ramp: 5.0,
            meeting_delay: 20.0,
            opec_decision: 0,
            spare_lag: 10.0,
            spare_duration: 90.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum OilError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("expected demand must be positive, got {0}")]
    NonPositiveDemand(f64),
    #[error(transparent)]
    Model(#[from] Diagnostics),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl OilMarketParams {
    pub fn validate(&self) -> Result<(), OilError> {
        let bad = |msg: String| Err(OilError::Param(msg));
        let named = [
            ("alpha1", self.alpha1),
            ("beta1", self.beta1),
            ("initial_price", self.initial_price),
            ("supply_growth", self.supply_growth),
            ("start_time", self.start_time),
            ("upset_time", self.upset_time),
            ("upset_magnitude", self.upset_magnitude),
            ("speculation", self.speculation),
            ("meeting_delay", self.meeting_delay),
        ];
        if let Some((name, v)) = named.iter().find(|(_, v)| !v.is_finite()) {
            return bad(format!("{name} must be finite, got {v}"));
        }
        for (name, v) in [
            ("base_tos", self.base_tos),
            ("base_tod", self.base_tod),
            ("spec_ramp", self.spec_ramp),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("spare_lag", self.spare_lag),
            ("spare_duration", self.spare_duration),
            ("meeting_delay", self.meeting_delay),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if self.opec_decision > 1 {
            return bad(format!(
                "opec_decision must be 0 or 1, got {}",
                self.opec_decision
            ));
        }
        for (name, path) in [("exs_path", &self.exs_path), ("exd_path", &self.exd_path)] {
            if path.is_empty() {
                return bad(format!("{name} needs at least one point"));
            }
            if path
                .iter()
                .any(|&(t, v)| !t.is_finite() || !(v.is_finite() && v > 0.0))
            {
                return bad(format!("{name} values must be positive"));
            }
        }
        Ok(())
    }

    /// `alpha1 + beta1` in quarters, for reading the per-day constants back.
    pub fn balanced_rate_per_quarter(&self) -> f64 {
        (self.alpha1 + self.beta1) * DAYS_PER_QUARTER
    }
}

/// `(ExS * TOS) / (ExD * TOD)`, evaluated as `(ExS / ExD) * (TOS / TOD)`.
pub fn effective_ratio(tos: f64, tod: f64, exs: f64, exd: f64) -> Result<f64, OilError> {
    let expected_demand = tod * exd;
    if expected_demand.is_nan() || expected_demand <= 0.0 {
        return Err(OilError::NonPositiveDemand(expected_demand));
    }
    Ok(exs / exd * (tos / tod))
}

fn points(path: &[(f64, f64)]) -> String {
    let pts: Vec<String> = path
        .iter()
        .map(|(t, v)| format!("({}, {})", format_number(*t), format_number(*v)))
        .collect();
    pts.join(", ")
}

/// Model source for `p`. The bundled `oilmarket.sfm` is this text for the
/// default parameters.
pub fn render_oil_model(p: &OilMarketParams) -> String {
    let n = format_number;
    let mut s = String::new();
    let consts = [
        ("alpha1", p.alpha1),
        ("beta1", p.beta1),
        ("InitialPrice", p.initial_price),
        ("BaseTOS", p.base_tos),
        ("BaseTOD", p.base_tod),
        ("SupplyGrowth", p.supply_growth),
        ("StartTime", p.start_time),
        ("UpsetTime", p.upset_time),
        ("UpsetLoss", 0.0),
        ("Speculation", 0.0),
        ("SpecRamp", p.spec_ramp),
        ("OPECDecision", f64::from(p.opec_decision)),
        ("SpareOrder", 0.0),
    ];
    for (name, v) in consts {
        writeln!(s, "const {name} = {}", n(v)).unwrap();
    }
    writeln!(s, "lookup ExSPath = [{}]", points(&p.exs_path)).unwrap();
    writeln!(s, "lookup ExDPath = [{}]", points(&p.exd_path)).unwrap();
    s.push_str(
        "stock OilPrice = InitialPrice { in: dPrice }\n\
         flow dPrice = alpha1 * Ratio + beta1 [USD/day]\n\
         aux TOS = BaseTOS * (1 + SupplyGrowth * (t - StartTime) - UpsetLoss + SpareArrival)\n\
         aux TOD = BaseTOD\n\
         aux Sentiment = 1 - Speculation * clamp((t - UpsetTime) / SpecRamp, 0, 1)\n\
         aux ExS = ExSPath(t) * Sentiment\n\
         aux ExD = ExDPath(t)\n\
         aux Ratio = ExSPath(t) / ExDPath(t) * Sentiment * (TOS / TOD)\n",
    );
    writeln!(
        s,
        "delay SpareArrival = OPECDecision * SpareOrder by {}",
        n(p.spare_lag)
    )
    .unwrap();
    s
}

pub fn build_oil_model(p: &OilMarketParams) -> Result<Model, OilError> {
    p.validate()?;
    Ok(parse_model(&render_oil_model(p))?)
}

fn grid_overrides(horizon: f64) -> GridOverrides {
    GridOverrides {
        t0: Some(0.0),
        horizon: Some(horizon),
        dt_internal: Some(DEFAULT_TIME_STEP),
        dt_data: Some(1.0),
    }
}

fn grid_of(doc: &ScenarioDoc) -> Result<TimeGrid, GridError> {
    doc.grid.apply(&TimeGrid::days(1.0)?)
}

/// Neutral case: no events, supply growing at `p.supply_growth`.
pub fn scenario_a(p: &OilMarketParams) -> Result<(ScenarioDoc, TimeGrid), OilError> {
    p.validate()?;
    let doc = ScenarioDoc::new()
        .with_model("oilmarket.sfm")
        .with_grid(grid_overrides(SCENARIO_A_HORIZON))
        .param("SupplyGrowth", p.supply_growth);
    let grid = grid_of(&doc)?;
    Ok((doc, grid))
}

/// Geopolitical upset at `p.upset_time`; the OPEC meeting follows after
/// `p.meeting_delay`. With `decision = 1` spare supply equal to the lost
/// volume is ordered for `p.spare_duration` days and arrives `p.spare_lag`
/// days later. Supply growth is held at 0.
pub fn scenario_b(p: &OilMarketParams, decision: u8) -> Result<(ScenarioDoc, TimeGrid), OilError> {
    p.validate()?;
    if decision > 1 {
        return Err(OilError::Param(format!(
            "decision must be 0 or 1, got {decision}"
        )));
    }
    if !(p.upset_time >= 0.0 && p.upset_time < SCENARIO_B_HORIZON) {
        return Err(OilError::Param(format!(
            "upset_time {} is outside the {SCENARIO_B_HORIZON}-day horizon",
            p.upset_time
        )));
    }
    let meeting = p.upset_time + p.meeting_delay;
    let doc = ScenarioDoc::new()
        .with_model("oilmarket.sfm")
        .with_grid(grid_overrides(SCENARIO_B_HORIZON))
        .param("SupplyGrowth", 0.0)
        .param("UpsetTime", p.upset_time)
        .param("Speculation", p.speculation)
        .param("SpecRamp", p.spec_ramp)
        .event(Event::new(
            p.upset_time,
            EventAction::StepInput,
            "UpsetLoss",
            p.upset_magnitude,
        ))
        .event(Event::new(
            meeting,
            EventAction::SwitchDecision,
            "OPECDecision",
            f64::from(decision),
        ))
        .event(Event::new(
            meeting,
            EventAction::PulseInput {
                duration: p.spare_duration,
            },
            "SpareOrder",
            p.upset_magnitude,
        ));
    let grid = grid_of(&doc)?;
    Ok((doc, grid))
}

/// Runs a scenario on `model`, recording the ratio, its inputs and the price change.
pub fn run_scenario(
    model: &Model,
    doc: &ScenarioDoc,
    grid: &TimeGrid,
    kind: IntegratorKind,
) -> Result<Trajectory, OilError> {
    let overlay = doc.compile(model, grid)?;
    let record = ["dPrice", "Ratio", "TOS", "TOD", "ExS", "ExD"];
    Ok(Simulation::new(model, *grid)
        .integrator(kind)
        .record(&record)
        .overlay(&overlay)
        .run()?)
}

/// One warning per stretch of negative price.
pub fn price_warnings(traj: &Trajectory) -> Vec<String> {
    let Some(price) = traj.get("OilPrice") else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut below = false;
    for (t, &p) in price.times().zip(&price.values) {
        if p < 0.0 && !below {
            out.push(format!(
                "warning: OilPrice is negative ({}) at t = {}",
                p,
                format_number(t)
            ));
        }
        below = p < 0.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelfmt::parse_scenario;

    #[test]
    fn ratio_examples() {
        assert_eq!(effective_ratio(90.0, 90.0, 1.0, 1.0).unwrap(), 1.0);
        let r = effective_ratio(91.74, 86.8, 1.0, 1.0).unwrap();
        assert!((r - 91.74 / 86.8).abs() < 1e-15);
        assert!((r - 1.056_912_4).abs() < 1e-7);
        assert!(matches!(
            effective_ratio(90.0, 90.0, 1.0, 0.0),
            Err(OilError::NonPositiveDemand(_))
        ));
        assert!(effective_ratio(90.0, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn bundled_model_is_the_default_rendering() {
        let bundled = parse_model(OIL_MODEL_SFM).unwrap();
        assert_eq!(
            bundled,
            build_oil_model(&OilMarketParams::default()).unwrap()
        );
    }

    #[test]
    fn bundled_scenarios_match_builders() {
        let p = OilMarketParams::default();
        assert_eq!(
            parse_scenario(SCENARIO_A_SFS).unwrap(),
            scenario_a(&p).unwrap().0
        );
        assert_eq!(
            parse_scenario(SCENARIO_B_HOLD_SFS).unwrap(),
            scenario_b(&p, 0).unwrap().0
        );
        assert_eq!(
            parse_scenario(SCENARIO_B_SPARE_SFS).unwrap(),
            scenario_b(&p, 1).unwrap().0
        );
    }

    #[test]
    fn scenario_a_growth_hits_target() {
        let p = OilMarketParams::default();
        let k = p.alpha1 * p.base_tos / p.base_tod;
        let t: f64 = 43.0;
        let g = (99.16 - 100.0 - (k + p.beta1) * t) / (k * t * t / 2.0);
        assert!((g - SCENARIO_A_SUPPLY_GROWTH).abs() < 1e-15, "{g}");
    }

    #[test]
    fn calibration_constants_read_back() {
        let p = OilMarketParams::default();
        assert!((p.balanced_rate_per_quarter() - 1.45).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let p = OilMarketParams {
            base_tod: 0.0,
            ..Default::default()
        };
        assert!(matches!(build_oil_model(&p), Err(OilError::Param(_))));
        let p = OilMarketParams {
            exs_path: vec![(0.0, -1.0)],
            ..Default::default()
        };
        assert!(p.validate().is_err());
        assert!(scenario_b(&OilMarketParams::default(), 2).is_err());
    }

    #[test]
    fn negative_price_warns_once_per_stretch() {
        let p = OilMarketParams {
            initial_price: 0.0003,
            supply_growth: 0.0,
            ..Default::default()
        };
        let m = build_oil_model(&p).unwrap();
        let grid = TimeGrid::days(1.0).unwrap();
        let traj = run_scenario(&m, &ScenarioDoc::new(), &grid, IntegratorKind::Rk4).unwrap();
        let warnings = price_warnings(&traj);
        assert_eq!(warnings.len(), 1, "{warnings:?}");
    }
}
