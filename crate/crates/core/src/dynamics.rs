//! Delayed-information price dynamics.
//!
//! Each period every firm republishes its balance sheet. It marks its own
//! exogenous holdings at current prices but sees other firms only through
//! what they published `lag` periods earlier. With a lag of one and
//! constant prices this is exactly Picard iteration of the revaluation
//! operator, read as a time series instead of a solver.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::Network;
use crate::solver::{median, solve_equilibrium, SolveError, SolverConfig};
use crate::valuation::{
    exogenous_value, publish_balance_sheet, revalue_with, BalanceSheet, PriceVector, StateError,
    ValuationError, ValuationState, CASH,
};

/// Window of post-shock residual ratios used to classify feedback.
pub const DEFAULT_WINDOW: usize = 8;

/// Residuals at or below this are treated as no movement at all.
pub const STATIONARY_TOLERANCE: f64 = 1e-9;

/// Median ratio band around one separating growth from decay.
const RATIO_BAND: f64 = 1e-6;

/// A simulation halts once any value exceeds this multiple of the total
/// initial exogenous value.
const DIVERGENCE_FACTOR: f64 = 1e12;

/// Upper bound on horizons and lags, in periods.
pub const MAX_PERIODS: usize = 1_000_000;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid scenario: {0}")]
    ScenarioInvalid(String),

    #[error("need {needed} published states, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("need {needed} post-shock residuals, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error(transparent)]
    Valuation(#[from] ValuationError),

    #[error("invalid initial state: {0}")]
    InitialState(#[from] StateError),
}

/// One point of an asset's price path; the price holds until the next point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricePoint {
    pub time: usize,
    pub price: f64,
}

/// Instantaneous overwrite of one asset's price from `time` on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shock {
    pub time: usize,
    pub asset: usize,
    pub price: f64,
}

/// Exogenous inputs of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    price_path: Vec<Vec<PricePoint>>,
    shocks: Vec<Shock>,
    lags: Vec<usize>,
    horizon: usize,
    initial_state: ValuationState,
    prices: Vec<PriceVector>,
}

impl Scenario {
    /// Validates the scenario and tabulates prices for times `0..=horizon`.
    ///
    /// `price_path[m]` lists the path points of asset `m`. An asset named
    /// `cash` without points is priced at one throughout; any other asset
    /// needs a point at time 0 or a shock at time 0.
    pub fn new(
        network: &Network,
        price_path: Vec<Vec<PricePoint>>,
        shocks: Vec<Shock>,
        lags: Vec<usize>,
        horizon: usize,
        initial_state: ValuationState,
    ) -> Result<Self, DynamicsError> {
        let invalid = |msg: String| Err(DynamicsError::ScenarioInvalid(msg));
        if horizon == 0 || horizon > MAX_PERIODS {
            return invalid(format!("horizon must be between 1 and {MAX_PERIODS}, got {horizon}"));
        }
        if lags.len() != network.firm_count() {
            return invalid(format!(
                "expected {} lags, found {}",
                network.firm_count(),
                lags.len()
            ));
        }
        if let Some(i) = lags.iter().position(|&l| l == 0 || l > MAX_PERIODS) {
            return invalid(format!(
                "lag of `{}` must be between 1 and {MAX_PERIODS}, got {}",
                network.firms()[i],
                lags[i]
            ));
        }
        if price_path.len() != network.asset_count() {
            return invalid(format!(
                "expected price paths for {} assets, found {}",
                network.asset_count(),
                price_path.len()
            ));
        }
        initial_state.validate(network)?;

        // Per asset: time -> price, shocks layered over path points.
        let m = network.asset_count();
        let mut table: Vec<Vec<Option<f64>>> = vec![vec![None; horizon + 1]; m];
        for (a, points) in price_path.iter().enumerate() {
            let name = &network.assets()[a];
            for p in points {
                check_event(p.time, p.price, horizon, name.as_str())?;
                if table[a][p.time].replace(p.price).is_some() {
                    return invalid(format!("two path points for `{name}` at time {}", p.time));
                }
            }
        }
        let mut shocked = vec![vec![false; horizon + 1]; m];
        for s in &shocks {
            if s.asset >= m {
                return invalid(format!("shock refers to asset index {}", s.asset));
            }
            let name = &network.assets()[s.asset];
            check_event(s.time, s.price, horizon, name.as_str())?;
            if std::mem::replace(&mut shocked[s.asset][s.time], true) {
                return invalid(format!("two shocks for `{name}` at time {}", s.time));
            }
            table[s.asset][s.time] = Some(s.price);
        }
        for (a, column) in table.iter_mut().enumerate() {
            let name = network.assets()[a].as_str();
            if column[0].is_none() {
                if name == CASH && price_path[a].is_empty() {
                    column[0] = Some(1.0);
                } else {
                    return invalid(format!("asset `{name}` has no price at time 0"));
                }
            }
            for t in 1..=horizon {
                if column[t].is_none() {
                    column[t] = column[t - 1];
                }
            }
        }
        let prices = (0..=horizon)
            .map(|t| PriceVector::new(network, table.iter().map(|c| c[t].unwrap_or(0.0)).collect()))
            .collect::<Result<Vec<_>, _>>()?;

        let mut price_path = price_path;
        for points in &mut price_path {
            points.sort_by_key(|p| p.time);
        }
        Ok(Self {
            price_path,
            shocks,
            lags,
            horizon,
            initial_state,
            prices,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    pub fn max_lag(&self) -> usize {
        self.lags.iter().copied().max().unwrap_or(1)
    }

    pub fn price_path(&self) -> &[Vec<PricePoint>] {
        &self.price_path
    }

    pub fn shocks(&self) -> &[Shock] {
        &self.shocks
    }

    pub fn initial_state(&self) -> &ValuationState {
        &self.initial_state
    }

    /// Prices in force at time `t`.
    pub fn prices_at(&self, t: usize) -> &PriceVector {
        &self.prices[t]
    }

    /// Last time at which any price differs from the period before; 0 if
    /// prices never change.
    pub fn last_price_change(&self) -> usize {
        (1..=self.horizon)
            .rev()
            .find(|&t| self.prices[t] != self.prices[t - 1])
            .unwrap_or(0)
    }
}

fn check_event(time: usize, price: f64, horizon: usize, asset: &str) -> Result<(), DynamicsError> {
    if time > horizon {
        return Err(DynamicsError::ScenarioInvalid(format!(
            "price event for `{asset}` at time {time} is beyond the horizon {horizon}"
        )));
    }
    if !(price.is_finite() && price >= 0.0) {
        return Err(DynamicsError::ScenarioInvalid(format!(
            "price of `{asset}` at time {time} must be finite and nonnegative, got {price}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackClass {
    /// Adjustments shrink geometrically towards a new equilibrium.
    Negative,
    /// Adjustments grow: boom-bust-like divergence.
    Positive,
    Oscillating,
    Stationary,
}

impl fmt::Display for FeedbackClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedbackClass::Negative => "negative",
            FeedbackClass::Positive => "positive",
            FeedbackClass::Oscillating => "oscillating",
            FeedbackClass::Stationary => "stationary",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Published state at each time `0..=T`, or fewer if halted.
    pub states: Vec<ValuationState>,
    /// `sheets[t][i]` is firm `i`'s statement at time `t`.
    pub sheets: Vec<Vec<BalanceSheet>>,
    /// `residuals[t] = ‖states[t] - states[t-1]‖∞`; `residuals[0]` is 0.
    pub residuals: Vec<f64>,
    /// `None` only when no post-shock residual exists to judge by.
    pub classification: Option<FeedbackClass>,
    /// Time at which the divergence cutoff stopped the run.
    pub halted_at: Option<usize>,
    pub last_price_change: usize,
}

/// Publishes the time-`t` state. `history` ends with the state of `t - 1`;
/// firm `i` observes `history[len - lags[i]]`.
pub fn step(
    network: &Network,
    history: &[ValuationState],
    prices: &PriceVector,
    lags: &[usize],
) -> Result<ValuationState, DynamicsError> {
    let needed = lags.iter().copied().max().unwrap_or(1);
    if lags.len() != network.firm_count() {
        return Err(DynamicsError::ScenarioInvalid(format!(
            "expected {} lags, found {}",
            network.firm_count(),
            lags.len()
        )));
    }
    if lags.contains(&0) {
        return Err(DynamicsError::ScenarioInvalid("lags must be at least 1".into()));
    }
    if history.len() < needed || history.is_empty() {
        return Err(DynamicsError::InsufficientHistory {
            needed: needed.max(1),
            available: history.len(),
        });
    }
    if prices.len() != network.asset_count() {
        return Err(ValuationError::DimensionMismatch {
            what: "prices".into(),
            expected: network.asset_count(),
            found: prices.len(),
        }
        .into());
    }
    for state in &history[history.len() - needed..] {
        state.check_dims(network)?;
    }
    let len = history.len();
    Ok(revalue_with(network, prices, |i| &history[len - lags[i]]))
}

/// Runs the scenario from `initial_state` to the horizon.
///
/// Before time 0 the system is taken to have sat at `initial_state`, so a
/// firm whose lag reaches back past time 0 observes the initial state.
pub fn simulate(network: &Network, scenario: &Scenario) -> Result<Trajectory, DynamicsError> {
    scenario.initial_state.check_dims(network)?;
    let n = network.firm_count();
    let max_lag = scenario.max_lag();
    let horizon = scenario.horizon;

    let initial_exogenous: f64 = (0..n)
        .map(|i| exogenous_value(network, i, scenario.prices_at(0)))
        .sum();
    let cutoff = DIVERGENCE_FACTOR * initial_exogenous.max(1.0);

    // history[max_lag - 1] is time 0; earlier slots are the padded past.
    let mut history: Vec<ValuationState> = vec![scenario.initial_state.clone(); max_lag];
    let mut states = vec![scenario.initial_state.clone()];
    let mut residuals = vec![0.0];
    let sheets_at = |history: &[ValuationState], prices: &PriceVector| -> Result<Vec<BalanceSheet>, DynamicsError> {
        let len = history.len();
        (0..n)
            .map(|i| Ok(publish_balance_sheet(network, i, &history[len - scenario.lags[i]], prices)?))
            .collect()
    };
    // At time 0 each firm's statement marks the initial state itself.
    let mut sheets = vec![(0..n)
        .map(|i| publish_balance_sheet(network, i, &scenario.initial_state, scenario.prices_at(0)))
        .collect::<Result<Vec<_>, _>>()?];
    let mut halted_at = None;

    for t in 1..=horizon {
        let prices = scenario.prices_at(t);
        let next = step(network, &history, prices, &scenario.lags)?;
        sheets.push(sheets_at(&history, prices)?);
        residuals.push(next.sup_distance(states.last().expect("nonempty")));
        let magnitude = next.max_abs();
        states.push(next.clone());
        history.push(next);
        if history.len() > max_lag {
            history.remove(0);
        }
        if magnitude.is_nan() || magnitude > cutoff {
            halted_at = Some(t);
            break;
        }
    }

    let mut trajectory = Trajectory {
        states,
        sheets,
        residuals,
        classification: None,
        halted_at,
        last_price_change: scenario.last_price_change(),
    };
    trajectory.classification = classify_with_fallback(&trajectory);
    Ok(trajectory)
}

fn classify_with_fallback(trajectory: &Trajectory) -> Option<FeedbackClass> {
    (1..=DEFAULT_WINDOW)
        .rev()
        .find_map(|window| classify_feedback(trajectory, window).ok())
}

/// Classifies the response to the last price change from the first
/// `window + 1` residuals after it.
pub fn classify_feedback(trajectory: &Trajectory, window: usize) -> Result<FeedbackClass, DynamicsError> {
    if trajectory.halted_at.is_some() {
        return Ok(FeedbackClass::Positive);
    }
    let start = trajectory.last_price_change + 1;
    let post: &[f64] = trajectory.residuals.get(start..).unwrap_or(&[]);
    let needed = window + 1;
    if window == 0 || post.len() < needed {
        return Err(DynamicsError::InsufficientData {
            needed,
            available: post.len(),
        });
    }
    let observed = &post[..needed];
    if observed.iter().all(|&r| r <= STATIONARY_TOLERANCE) {
        return Ok(FeedbackClass::Stationary);
    }
    let mut ratios: Vec<f64> = observed
        .windows(2)
        .filter(|w| !(w[0] == 0.0 && w[1] == 0.0))
        .map(|w| w[1] / w[0])
        .collect();
    let ratio = match median(&mut ratios) {
        Some(r) => r,
        None => return Ok(FeedbackClass::Oscillating),
    };
    Ok(if ratio < 1.0 - RATIO_BAND {
        FeedbackClass::Negative
    } else if ratio > 1.0 + RATIO_BAND {
        FeedbackClass::Positive
    } else {
        FeedbackClass::Oscillating
    })
}

/// `‖states[t] - equilibrium‖∞` for every published time, where the
/// equilibrium is solved at the scenario's final prices.
pub fn limit_gap(
    trajectory: &Trajectory,
    network: &Network,
    scenario: &Scenario,
    config: &SolverConfig,
) -> Result<Vec<f64>, SolveError> {
    let final_prices = scenario.prices_at(scenario.horizon);
    let (equilibrium, _) = solve_equilibrium(network, final_prices, config)?;
    Ok(trajectory
        .states
        .iter()
        .map(|s| s.sup_distance(&equilibrium))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::paper_network;
    use crate::network::{BuildOptions, HoldingPart, NetworkParts};

    fn paper_state(e1: f64, e2: f64) -> ValuationState {
        ValuationState {
            equity: vec![e1, e2],
            debt: vec![vec![500.0], vec![500.0]],
        }
    }

    fn paper_scenario(net: &Network, horizon: usize) -> Scenario {
        Scenario::new(
            net,
            vec![vec![PricePoint { time: 0, price: 1000.0 }], vec![]],
            vec![
                Shock { time: 1, asset: 0, price: 700.0 },
                Shock { time: 2, asset: 0, price: 500.0 },
            ],
            vec![1, 1],
            horizon,
            paper_state(1000.0, 1000.0),
        )
        .unwrap()
    }

    #[test]
    fn step_reproduces_the_hand_recursion() {
        let net = paper_network();
        let p700 = PriceVector::from_named(&net, [("commodities", 700.0)]).unwrap();
        let p500 = PriceVector::from_named(&net, [("commodities", 500.0)]).unwrap();
        let s1 = step(&net, &[paper_state(1000.0, 1000.0)], &p700, &[1, 1]).unwrap();
        assert_eq!(s1, paper_state(700.0, 1000.0));
        let s2 = step(&net, &[s1], &p500, &[1, 1]).unwrap();
        assert_eq!(s2, paper_state(500.0, 850.0));
    }

    #[test]
    fn step_keeps_a_fixed_point() {
        let net = paper_network();
        let p = PriceVector::from_named(&net, [("commodities", 1000.0)]).unwrap();
        let s = paper_state(1000.0, 1000.0);
        assert_eq!(step(&net, std::slice::from_ref(&s), &p, &[1, 1]).unwrap(), s);
    }

    #[test]
    fn step_needs_enough_history() {
        let net = paper_network();
        let p = PriceVector::from_named(&net, [("commodities", 1000.0)]).unwrap();
        assert_eq!(
            step(&net, &[paper_state(1000.0, 1000.0)], &p, &[1, 2]),
            Err(DynamicsError::InsufficientHistory { needed: 2, available: 1 })
        );
    }

    #[test]
    fn heterogeneous_lags() {
        // firm 2 sees firm 1 two quarters late.
        let net = paper_network();
        let p = PriceVector::from_named(&net, [("commodities", 500.0)]).unwrap();
        let history = [paper_state(900.0, 1000.0), paper_state(700.0, 950.0)];
        let s = step(&net, &history, &p, &[1, 2]).unwrap();
        assert_eq!(s.equity, vec![500.0 + 0.5 * 950.0 - 500.0, 1000.0 + 0.5 * 900.0 - 500.0]);
    }

    #[test]
    fn paper_trajectory() {
        let net = paper_network();
        let traj = simulate(&net, &paper_scenario(&net, 20)).unwrap();
        let e1: Vec<f64> = traj.states.iter().take(4).map(|s| s.equity[0]).collect();
        let e2: Vec<f64> = traj.states.iter().take(4).map(|s| s.equity[1]).collect();
        assert_eq!(e1, vec![1000.0, 700.0, 500.0, 425.0]);
        assert_eq!(e2, vec![1000.0, 1000.0, 850.0, 750.0]);
        assert_eq!(traj.residuals[1], 300.0);
        assert_eq!(traj.classification, Some(FeedbackClass::Negative));
        assert_eq!(traj.last_price_change, 2);
        assert!(traj.sheets.iter().flatten().all(BalanceSheet::balances));
        // time-1 statement of firm 2 still carries firm 1 at 1000
        assert_eq!(traj.sheets[1][1].asset_items[1].value, 500.0);
        assert_eq!(traj.sheets[1][1].equity, 1000.0);
    }

    #[test]
    fn constant_path_is_stationary() {
        let net = paper_network();
        let scenario = Scenario::new(
            &net,
            vec![vec![PricePoint { time: 0, price: 1000.0 }], vec![]],
            vec![],
            vec![1, 1],
            12,
            paper_state(1000.0, 1000.0),
        )
        .unwrap();
        let traj = simulate(&net, &scenario).unwrap();
        assert!(traj.states.iter().all(|s| *s == paper_state(1000.0, 1000.0)));
        assert_eq!(traj.classification, Some(FeedbackClass::Stationary));
    }

    fn reciprocal(fraction: f64, options: BuildOptions) -> Network {
        Network::build_with(
            NetworkParts {
                firms: vec!["a".into(), "b".into()],
                assets: vec!["x".into(), "y".into()],
                holdings: vec![
                    HoldingPart { firm: "a".into(), asset: "x".into(), quantity: 1.0 },
                    HoldingPart { firm: "b".into(), asset: "y".into(), quantity: 1.0 },
                ],
                equity: Some(vec![vec![0.0, fraction], vec![fraction, 0.0]]),
                ..Default::default()
            },
            options,
        )
        .unwrap()
    }

    #[test]
    fn excess_holdings_diverge() {
        let relaxed = BuildOptions { allow_excess_holdings: true };
        let net = reciprocal(1.2, relaxed);
        let scenario = Scenario::new(
            &net,
            vec![vec![PricePoint { time: 0, price: 100.0 }], vec![PricePoint { time: 0, price: 100.0 }]],
            vec![],
            vec![1, 1],
            30,
            ValuationState::zeros(&net),
        )
        .unwrap();
        let traj = simulate(&net, &scenario).unwrap();
        // e(t) = 100 + 1.2 e(t-1) from 0: residuals 100 * 1.2^(t-1)
        for t in 2..traj.residuals.len() {
            let ratio = traj.residuals[t] / traj.residuals[t - 1];
            assert!((ratio - 1.2).abs() < 1e-9);
        }
        assert_eq!(classify_feedback(&traj, 8), Ok(FeedbackClass::Positive));
    }

    #[test]
    fn divergence_cutoff_halts() {
        let relaxed = BuildOptions { allow_excess_holdings: true };
        let net = reciprocal(3.0, relaxed);
        let scenario = Scenario::new(
            &net,
            vec![vec![PricePoint { time: 0, price: 1.0 }], vec![PricePoint { time: 0, price: 1.0 }]],
            vec![],
            vec![1, 1],
            1000,
            ValuationState::zeros(&net),
        )
        .unwrap();
        let traj = simulate(&net, &scenario).unwrap();
        let halted = traj.halted_at.unwrap();
        assert!(halted < 1000);
        assert_eq!(traj.states.len(), halted + 1);
        assert_eq!(traj.classification, Some(FeedbackClass::Positive));
    }

    #[test]
    fn swapping_states_oscillate() {
        let net = Network::build(NetworkParts {
            firms: vec!["a".into(), "b".into()],
            equity: Some(vec![vec![0.0, 1.0], vec![1.0, 0.0]]),
            ..Default::default()
        })
        .unwrap();
        let scenario = Scenario::new(
            &net,
            vec![],
            vec![],
            vec![1, 1],
            10,
            ValuationState { equity: vec![1.0, 0.0], debt: vec![vec![], vec![]] },
        )
        .unwrap();
        let traj = simulate(&net, &scenario).unwrap();
        assert_eq!(traj.classification, Some(FeedbackClass::Oscillating));
    }

    #[test]
    fn classification_needs_data() {
        let net = paper_network();
        let traj = simulate(&net, &paper_scenario(&net, 5)).unwrap();
        assert!(matches!(
            classify_feedback(&traj, 8),
            Err(DynamicsError::InsufficientData { needed: 9, available: 3 })
        ));
        // fallback uses a shorter window
        assert_eq!(traj.classification, Some(FeedbackClass::Negative));
    }

    #[test]
    fn limit_gap_of_the_example() {
        let net = paper_network();
        let scenario = paper_scenario(&net, 20);
        let traj = simulate(&net, &scenario).unwrap();
        let config = SolverConfig { tolerance: 1e-12, ..Default::default() };
        let gaps = limit_gap(&traj, &net, &scenario, &config).unwrap();
        // firm 2 is furthest away at t = 2: 850 - 666.67
        assert!((gaps[2] - (850.0 - 2000.0 / 3.0)).abs() < 1e-9);
        assert!((traj.states[2].equity[0] - 1000.0 / 3.0 - 500.0 / 3.0).abs() < 1e-9);
        for t in 2..=18 {
            assert!((gaps[t + 2] / gaps[t] - 0.25).abs() < 1e-9);
        }
        for t in 3..=20 {
            assert!(gaps[t] <= gaps[t - 1]);
        }
    }

    #[test]
    fn gap_at_fixed_point_is_zero() {
        let net = paper_network();
        let scenario = Scenario::new(
            &net,
            vec![vec![PricePoint { time: 0, price: 1000.0 }], vec![]],
            vec![],
            vec![1, 1],
            3,
            paper_state(1000.0, 1000.0),
        )
        .unwrap();
        let traj = simulate(&net, &scenario).unwrap();
        let gaps = limit_gap(&traj, &net, &scenario, &SolverConfig::default()).unwrap();
        assert!(gaps.iter().all(|&g| g < 1e-9));
    }

    #[test]
    fn scenario_validation() {
        let net = paper_network();
        let base = |horizon, shocks: Vec<Shock>, path: Vec<Vec<PricePoint>>| {
            Scenario::new(&net, path, shocks, vec![1, 1], horizon, paper_state(1000.0, 1000.0))
        };
        let path = || vec![vec![PricePoint { time: 0, price: 1000.0 }], vec![]];
        assert!(matches!(base(0, vec![], path()), Err(DynamicsError::ScenarioInvalid(_))));
        assert!(matches!(base(5, vec![], vec![vec![], vec![]]), Err(DynamicsError::ScenarioInvalid(_))));
        assert!(matches!(
            base(5, vec![Shock { time: 9, asset: 0, price: 1.0 }], path()),
            Err(DynamicsError::ScenarioInvalid(_))
        ));
        assert!(matches!(
            base(5, vec![Shock { time: 1, asset: 0, price: f64::NAN }], path()),
            Err(DynamicsError::ScenarioInvalid(_))
        ));
        let bad_state = Scenario::new(
            &net,
            path(),
            vec![],
            vec![1, 1],
            5,
            ValuationState { equity: vec![-1.0, 0.0], debt: vec![vec![500.0], vec![500.0]] },
        );
        assert!(matches!(bad_state, Err(DynamicsError::InitialState(_))));
    }

    #[test]
    fn shocks_override_path_points() {
        let net = paper_network();
        let scenario = Scenario::new(
            &net,
            vec![vec![PricePoint { time: 0, price: 1000.0 }, PricePoint { time: 3, price: 900.0 }], vec![]],
            vec![Shock { time: 3, asset: 0, price: 800.0 }],
            vec![1, 1],
            5,
            paper_state(1000.0, 1000.0),
        )
        .unwrap();
        let c: Vec<f64> = (0..=5).map(|t| scenario.prices_at(t).get(0)).collect();
        assert_eq!(c, vec![1000.0, 1000.0, 1000.0, 800.0, 800.0, 800.0]);
        assert_eq!(scenario.prices_at(4).get(1), 1.0);
        assert_eq!(scenario.last_price_change(), 3);
    }
}
