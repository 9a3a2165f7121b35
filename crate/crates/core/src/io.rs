//! JSON network/scenario documents and trajectory output.
//!
//! Documents carry a `schema_version` (currently `"1"`) and reject unknown
//! fields. Numbers are written in shortest round-trip form; two-decimal
//! rounding exists only as a display option for trajectories.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::error::Category;
use thiserror::Error;

use crate::dynamics::{DynamicsError, FeedbackClass, PricePoint, Scenario, Shock, Trajectory, MAX_PERIODS};
use crate::network::{HoldingPart, Network, NetworkError, NetworkParts, TranchePart};
use crate::solver::{solve_equilibrium, SolveError, SolverConfig};
use crate::valuation::{PriceVector, ValuationError, ValuationState};

pub const SCHEMA_VERSION: &str = "1";

/// `initial_state` directive: solve the equilibrium at time-0 prices.
pub const EQUILIBRIUM_AT_T0: &str = "equilibrium-at-t0";

#[derive(Error, Debug)]
pub enum DocumentError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Network(#[from] NetworkError),

    #[error("{path}: unknown reference `{id}`")]
    UnknownReference { path: String, id: String },

    #[error(transparent)]
    Valuation(#[from] ValuationError),

    #[error(transparent)]
    Scenario(#[from] DynamicsError),

    #[error("resolving {EQUILIBRIUM_AT_T0}: {0}")]
    Solve(#[from] SolveError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl DocumentError {
    /// Process exit code for this error: 1 for unreadable or malformed
    /// input, 2 when an equilibrium fails to converge, 3 for input that
    /// parses but violates a model constraint.
    pub fn exit_code(&self) -> i32 {
        match self {
            DocumentError::Parse { .. } | DocumentError::Schema(_) | DocumentError::Io(_) => 1,
            DocumentError::Solve(SolveError::NoConvergence { .. }) => 2,
            _ => 3,
        }
    }

    /// Document path of the offending field, when known.
    pub fn path(&self) -> Option<&str> {
        match self {
            DocumentError::Network(e) => Some(match e {
                NetworkError::DuplicateId { path, .. }
                | NetworkError::UnknownReference { path, .. }
                | NetworkError::InvalidFraction { path, .. }
                | NetworkError::ColumnSumExceeded { path, .. }
                | NetworkError::DimensionMismatch { path, .. }
                | NetworkError::InvalidAmount { path, .. }
                | NetworkError::InvalidSeniority { path, .. } => path,
            }),
            DocumentError::UnknownReference { path, .. } => Some(path),
            _ => None,
        }
    }
}

fn from_json<'a, T: Deserialize<'a>>(bytes: &'a [u8]) -> Result<T, DocumentError> {
    serde_json::from_slice(bytes).map_err(|e| match e.classify() {
        Category::Data => DocumentError::Schema(e.to_string()),
        Category::Io | Category::Syntax | Category::Eof => DocumentError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
    })
}

fn check_version(version: &str) -> Result<(), DocumentError> {
    if version == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(DocumentError::Schema(format!(
            "unsupported schema_version `{version}` (expected `{SCHEMA_VERSION}`)"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub schema_version: String,
    pub firms: Vec<String>,
    #[serde(default)]
    pub assets: Vec<String>,
    #[serde(default)]
    pub holdings: Vec<HoldingDoc>,
    #[serde(default)]
    pub ownership: OwnershipDoc,
    #[serde(default)]
    pub tranches: Vec<TrancheDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldingDoc {
    pub firm: String,
    pub asset: String,
    pub quantity: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OwnershipDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equity: Option<Vec<Vec<f64>>>,
    /// One matrix per seniority rank, most senior first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub debt: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrancheDoc {
    pub firm: String,
    pub seniority: u32,
    pub face: f64,
}

impl NetworkDocument {
    pub fn from_network(network: &Network) -> Self {
        let parts = network.to_parts();
        Self {
            schema_version: SCHEMA_VERSION.into(),
            firms: parts.firms,
            assets: parts.assets,
            holdings: parts
                .holdings
                .into_iter()
                .map(|h| HoldingDoc {
                    firm: h.firm,
                    asset: h.asset,
                    quantity: h.quantity,
                })
                .collect(),
            ownership: OwnershipDoc {
                equity: parts.equity,
                debt: parts.debt,
            },
            tranches: parts
                .tranches
                .into_iter()
                .map(|t| TrancheDoc {
                    firm: t.firm,
                    seniority: t.seniority,
                    face: t.face,
                })
                .collect(),
        }
    }

    pub fn into_parts(self) -> Result<NetworkParts, DocumentError> {
        check_version(&self.schema_version)?;
        Ok(NetworkParts {
            firms: self.firms,
            assets: self.assets,
            holdings: self
                .holdings
                .into_iter()
                .map(|h| HoldingPart {
                    firm: h.firm,
                    asset: h.asset,
                    quantity: h.quantity,
                })
                .collect(),
            equity: self.ownership.equity,
            debt: self.ownership.debt,
            tranches: self
                .tranches
                .into_iter()
                .map(|t| TranchePart {
                    firm: t.firm,
                    seniority: t.seniority,
                    face: t.face,
                })
                .collect(),
        })
    }
}

/// Parses and validates a network document.
pub fn parse_network(bytes: &[u8]) -> Result<Network, DocumentError> {
    let doc: NetworkDocument = from_json(bytes)?;
    Ok(Network::build(doc.into_parts()?)?)
}

pub fn serialize_network(network: &Network) -> String {
    to_pretty_json(&NetworkDocument::from_network(network))
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("documents always serialize");
    out.push('\n');
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub schema_version: String,
    /// Asset name -> price points; each price holds until the next point.
    #[serde(default)]
    pub price_path: BTreeMap<String, Vec<PricePoint>>,
    #[serde(default)]
    pub shocks: Vec<ShockDoc>,
    #[serde(default)]
    pub lags: LagSpec,
    pub horizon: usize,
    pub initial_state: InitialStateDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockDoc {
    pub time: usize,
    pub asset: String,
    pub price: f64,
}

/// A single lag for every firm, or one per firm name (missing firms use 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LagSpec {
    Uniform(usize),
    PerFirm(BTreeMap<String, usize>),
}

impl Default for LagSpec {
    fn default() -> Self {
        LagSpec::Uniform(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialStateDoc {
    Directive(String),
    Explicit(ExplicitStateDoc),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitStateDoc {
    pub equity: BTreeMap<String, f64>,
    /// Firm name -> recovery per tranche, most senior first. Firms without
    /// debt may be left out.
    #[serde(default)]
    pub debt: BTreeMap<String, Vec<f64>>,
}

fn resolve_firm(network: &Network, name: &str, path: impl FnOnce() -> String) -> Result<usize, DocumentError> {
    network.firm_index(name).ok_or_else(|| DocumentError::UnknownReference {
        path: path(),
        id: name.to_string(),
    })
}

fn resolve_asset(network: &Network, name: &str, path: impl FnOnce() -> String) -> Result<usize, DocumentError> {
    network.asset_index(name).ok_or_else(|| DocumentError::UnknownReference {
        path: path(),
        id: name.to_string(),
    })
}

impl ExplicitStateDoc {
    fn resolve(&self, network: &Network) -> Result<ValuationState, DocumentError> {
        let n = network.firm_count();
        let mut equity = vec![None; n];
        for (name, &value) in &self.equity {
            let i = resolve_firm(network, name, || format!("initial_state.equity.{name}"))?;
            equity[i] = Some(value);
        }
        let equity = equity
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                e.ok_or_else(|| {
                    DocumentError::Schema(format!(
                        "initial_state.equity: missing firm `{}`",
                        network.firms()[i]
                    ))
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let mut debt: Vec<Vec<f64>> = (0..n).map(|_| Vec::new()).collect();
        for (name, values) in &self.debt {
            let i = resolve_firm(network, name, || format!("initial_state.debt.{name}"))?;
            debt[i] = values.clone();
        }
        for (i, recoveries) in debt.iter().enumerate() {
            let k = network.faces_of(i).len();
            if recoveries.len() != k {
                return Err(DocumentError::Schema(format!(
                    "initial_state.debt.{}: expected {k} tranche values, found {}",
                    network.firms()[i],
                    recoveries.len()
                )));
            }
        }
        Ok(ValuationState { equity, debt })
    }

    fn from_state(network: &Network, state: &ValuationState) -> Self {
        let names = network.firms().iter().map(|f| f.name.clone());
        Self {
            equity: names.clone().zip(state.equity.iter().copied()).collect(),
            debt: names
                .zip(state.debt.iter().cloned())
                .filter(|(_, d)| !d.is_empty())
                .collect(),
        }
    }
}

impl ScenarioDocument {
    pub fn from_scenario(network: &Network, scenario: &Scenario) -> Self {
        let lags = scenario.lags();
        let lags = match lags.first() {
            Some(&first) if lags.iter().any(|&l| l != first) => LagSpec::PerFirm(
                network
                    .firms()
                    .iter()
                    .map(|f| f.name.clone())
                    .zip(lags.iter().copied())
                    .collect(),
            ),
            Some(&first) => LagSpec::Uniform(first),
            None => LagSpec::Uniform(1),
        };
        Self {
            schema_version: SCHEMA_VERSION.into(),
            price_path: network
                .assets()
                .iter()
                .zip(scenario.price_path())
                .filter(|(_, points)| !points.is_empty())
                .map(|(a, points)| (a.0.clone(), points.clone()))
                .collect(),
            shocks: scenario
                .shocks()
                .iter()
                .map(|s| ShockDoc {
                    time: s.time,
                    asset: network.assets()[s.asset].0.clone(),
                    price: s.price,
                })
                .collect(),
            lags,
            horizon: scenario.horizon(),
            initial_state: InitialStateDoc::Explicit(ExplicitStateDoc::from_state(
                network,
                scenario.initial_state(),
            )),
        }
    }

    /// Resolves names against `network` and builds the scenario.
    pub fn resolve(self, network: &Network) -> Result<Scenario, DocumentError> {
        check_version(&self.schema_version)?;
        if self.horizon == 0 || self.horizon > MAX_PERIODS {
            return Err(DocumentError::Schema(format!(
                "horizon must be between 1 and {MAX_PERIODS}, got {}",
                self.horizon
            )));
        }
        let mut path = vec![Vec::new(); network.asset_count()];
        for (name, points) in self.price_path {
            let a = resolve_asset(network, &name, || format!("price_path.{name}"))?;
            path[a] = points;
        }
        let shocks = self
            .shocks
            .iter()
            .enumerate()
            .map(|(s, shock)| {
                Ok(Shock {
                    time: shock.time,
                    asset: resolve_asset(network, &shock.asset, || format!("shocks[{s}].asset"))?,
                    price: shock.price,
                })
            })
            .collect::<Result<Vec<_>, DocumentError>>()?;
        let lags = match self.lags {
            LagSpec::Uniform(lag) => vec![lag; network.firm_count()],
            LagSpec::PerFirm(map) => {
                let mut lags = vec![1; network.firm_count()];
                for (name, lag) in map {
                    lags[resolve_firm(network, &name, || format!("lags.{name}"))?] = lag;
                }
                lags
            }
        };
        if lags.iter().any(|&l| l == 0 || l > MAX_PERIODS) {
            return Err(DocumentError::Schema(format!("lags must be between 1 and {MAX_PERIODS}")));
        }

        let initial = match &self.initial_state {
            InitialStateDoc::Explicit(doc) => doc.resolve(network)?,
            InitialStateDoc::Directive(d) if d == EQUILIBRIUM_AT_T0 => {
                // Zero initial state only to tabulate time-0 prices.
                let probe = Scenario::new(
                    network,
                    path.clone(),
                    shocks.clone(),
                    lags.clone(),
                    self.horizon,
                    ValuationState::zeros(network),
                )?;
                solve_equilibrium(network, probe.prices_at(0), &SolverConfig::default())?.0
            }
            InitialStateDoc::Directive(d) => {
                return Err(DocumentError::Schema(format!(
                    "initial_state: unknown directive `{d}` (expected `{EQUILIBRIUM_AT_T0}` or an explicit state)"
                )))
            }
        };
        Ok(Scenario::new(network, path, shocks, lags, self.horizon, initial)?)
    }
}

/// Parses a scenario document against the network it refers to.
pub fn parse_scenario(bytes: &[u8], network: &Network) -> Result<Scenario, DocumentError> {
    let doc: ScenarioDocument = from_json(bytes)?;
    doc.resolve(network)
}

pub fn serialize_scenario(network: &Network, scenario: &Scenario) -> String {
    to_pretty_json(&ScenarioDocument::from_scenario(network, scenario))
}

/// Parses a price file: a JSON object mapping asset names to prices.
pub fn parse_prices(bytes: &[u8], network: &Network) -> Result<PriceVector, DocumentError> {
    let map: BTreeMap<String, f64> = from_json(bytes)?;
    for name in map.keys() {
        resolve_asset(network, name, || format!("prices.{name}"))?;
    }
    Ok(PriceVector::from_named(
        network,
        map.iter().map(|(k, &v)| (k.as_str(), v)),
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

fn display(value: f64, round_2: bool) -> String {
    if round_2 {
        format!("{value:.2}")
    } else {
        value.to_string()
    }
}

fn round2(value: f64) -> f64 {
    (value * 100.0).round() / 100.0
}

#[derive(Serialize)]
struct TrajectoryJson<'a> {
    firms: Vec<&'a str>,
    classification: Option<FeedbackClass>,
    halted_at: Option<usize>,
    last_price_change: usize,
    periods: Vec<PeriodJson>,
}

#[derive(Serialize)]
struct PeriodJson {
    time: usize,
    equity: Vec<f64>,
    debt: Vec<Vec<f64>>,
    residual: Option<f64>,
    sheets: Vec<SheetJson>,
}

#[derive(Serialize)]
struct SheetJson {
    firm: String,
    assets: BTreeMap<String, f64>,
    liabilities: f64,
    equity: f64,
}

/// Renders a trajectory as CSV or JSON.
///
/// CSV columns are `time`, `equity_<firm>` per firm, `debt_<firm>_<k>` per
/// tranche, then `residual` (empty at time 0).
pub fn emit_trajectory(
    trajectory: &Trajectory,
    network: &Network,
    format: OutputFormat,
    round_2: bool,
) -> Result<Vec<u8>, DocumentError> {
    match format {
        OutputFormat::Csv => emit_csv(trajectory, network, round_2),
        OutputFormat::Json => {
            let r = |x: f64| if round_2 { round2(x) } else { x };
            let doc = TrajectoryJson {
                firms: network.firms().iter().map(|f| f.name.as_str()).collect(),
                classification: trajectory.classification,
                halted_at: trajectory.halted_at,
                last_price_change: trajectory.last_price_change,
                periods: trajectory
                    .states
                    .iter()
                    .enumerate()
                    .map(|(t, s)| PeriodJson {
                        time: t,
                        equity: s.equity.iter().map(|&x| r(x)).collect(),
                        debt: s.debt.iter().map(|d| d.iter().map(|&x| r(x)).collect()).collect(),
                        residual: (t > 0).then(|| r(trajectory.residuals[t])),
                        sheets: trajectory.sheets[t]
                            .iter()
                            .map(|sheet| SheetJson {
                                firm: sheet.firm.name.clone(),
                                assets: sheet
                                    .asset_items
                                    .iter()
                                    .map(|item| (item.label.clone(), r(item.value)))
                                    .collect(),
                                liabilities: r(sheet.liabilities),
                                equity: r(sheet.equity),
                            })
                            .collect(),
                    })
                    .collect(),
            };
            Ok(to_pretty_json(&doc).into_bytes())
        }
    }
}

fn emit_csv(trajectory: &Trajectory, network: &Network, round_2: bool) -> Result<Vec<u8>, DocumentError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["time".to_string()];
    header.extend(network.firms().iter().map(|f| format!("equity_{}", f.name)));
    for f in network.firms() {
        for k in 1..=network.faces_of(f.index).len() {
            header.push(format!("debt_{}_{k}", f.name));
        }
    }
    header.push("residual".into());
    writer.write_record(&header).map_err(csv_error)?;

    for (t, state) in trajectory.states.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(state.equity.iter().map(|&e| display(e, round_2)));
        row.extend(state.debt.iter().flatten().map(|&d| display(d, round_2)));
        row.push(if t == 0 {
            String::new()
        } else {
            display(trajectory.residuals[t], round_2)
        });
        writer.write_record(&row).map_err(csv_error)?;
    }
    writer
        .into_inner()
        .map_err(|e| DocumentError::Io(std::io::Error::other(e.to_string())))
}

fn csv_error(e: csv::Error) -> DocumentError {
    DocumentError::Io(std::io::Error::other(e.to_string()))
}
