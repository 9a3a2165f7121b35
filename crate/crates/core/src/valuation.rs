//! One application of the revaluation operator.
//!
//! Every firm marks its exogenous holdings at current prices and its claims
//! on other firms at the values found in an observed [`ValuationState`],
//! then splits the resulting asset value between its debt tranches (most
//! senior first) and equity under limited liability. All firms revalue
//! simultaneously: nobody sees another firm's same-round result.

use std::collections::HashMap;

use thiserror::Error;

use crate::network::{FirmId, Network};

/// Name of the asset that defaults to a price of one when none is given.
pub const CASH: &str = "cash";

/// Published balance sheets must balance to this absolute tolerance.
pub const BALANCE_TOLERANCE: f64 = 1e-9;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ValuationError {
    #[error("{what}: expected {expected} entries, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown asset `{0}`")]
    UnknownAsset(String),

    #[error("no price given for asset `{0}`")]
    MissingPrice(String),

    #[error("price of `{asset}` must be finite and nonnegative, got {value}")]
    InvalidPrice { asset: String, value: f64 },

    #[error("firm index {0} out of range")]
    UnknownFirm(usize),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum StateError {
    #[error(transparent)]
    Shape(#[from] ValuationError),

    #[error("equity of `{firm}` must be finite and nonnegative, got {value}")]
    NegativeEquity { firm: String, value: f64 },

    #[error("recovery on `{firm}` seniority {seniority} is {value}, outside [0, {face}]")]
    RecoveryOutOfRange {
        firm: String,
        seniority: usize,
        value: f64,
        face: f64,
    },

    #[error("`{firm}` reports equity {equity} while its debt is impaired")]
    EquityWhileImpaired { firm: String, equity: f64 },
}

/// Price per unit of every asset in a network, in asset order.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    /// Prices in the network's asset order.
    pub fn new(network: &Network, prices: Vec<f64>) -> Result<Self, ValuationError> {
        if prices.len() != network.asset_count() {
            return Err(ValuationError::DimensionMismatch {
                what: "prices".into(),
                expected: network.asset_count(),
                found: prices.len(),
            });
        }
        for (asset, &value) in network.assets().iter().zip(&prices) {
            check_price(asset.as_str(), value)?;
        }
        Ok(Self(prices))
    }

    /// Prices by asset name. An asset named `cash` left out of `named`
    /// is priced at one; every other asset must be present.
    pub fn from_named<'a, I>(network: &Network, named: I) -> Result<Self, ValuationError>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut given: HashMap<&str, f64> = HashMap::new();
        for (name, value) in named {
            if network.asset_index(name).is_none() {
                return Err(ValuationError::UnknownAsset(name.to_string()));
            }
            check_price(name, value)?;
            given.insert(name, value);
        }
        let prices = network
            .assets()
            .iter()
            .map(|a| match given.get(a.as_str()) {
                Some(&p) => Ok(p),
                None if a.as_str() == CASH => Ok(1.0),
                None => Err(ValuationError::MissingPrice(a.0.clone())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self(prices))
    }

    pub fn get(&self, asset: usize) -> f64 {
        self.0[asset]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_price(asset: &str, value: f64) -> Result<(), ValuationError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ValuationError::InvalidPrice {
            asset: asset.to_string(),
            value,
        })
    }
}

/// Equity value and per-tranche debt recovery of every firm.
///
/// `debt[i][k]` is the recovery on firm `i`'s tranche of seniority `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationState {
    pub equity: Vec<f64>,
    pub debt: Vec<Vec<f64>>,
}

impl ValuationState {
    /// Every claim valued at zero.
    pub fn zeros(network: &Network) -> Self {
        Self {
            equity: vec![0.0; network.firm_count()],
            debt: (0..network.firm_count())
                .map(|i| vec![0.0; network.faces_of(i).len()])
                .collect(),
        }
    }

    /// Equity as given and all debt recovered at face.
    pub fn with_full_recovery(network: &Network, equity: Vec<f64>) -> Self {
        Self {
            equity,
            debt: (0..network.firm_count())
                .map(|i| network.faces_of(i).to_vec())
                .collect(),
        }
    }

    pub fn check_dims(&self, network: &Network) -> Result<(), ValuationError> {
        let n = network.firm_count();
        if self.equity.len() != n {
            return Err(ValuationError::DimensionMismatch {
                what: "state.equity".into(),
                expected: n,
                found: self.equity.len(),
            });
        }
        if self.debt.len() != n {
            return Err(ValuationError::DimensionMismatch {
                what: "state.debt".into(),
                expected: n,
                found: self.debt.len(),
            });
        }
        for (i, d) in self.debt.iter().enumerate() {
            let k = network.faces_of(i).len();
            if d.len() != k {
                return Err(ValuationError::DimensionMismatch {
                    what: format!("state.debt[{i}]"),
                    expected: k,
                    found: d.len(),
                });
            }
        }
        Ok(())
    }

    /// Checks dimensions, limited liability, recovery bounds, and that no
    /// firm shows equity while any of its tranches is impaired.
    pub fn validate(&self, network: &Network) -> Result<(), StateError> {
        self.check_dims(network)?;
        for (i, firm) in network.firms().iter().enumerate() {
            let e = self.equity[i];
            if !(e.is_finite() && e >= 0.0) {
                return Err(StateError::NegativeEquity {
                    firm: firm.name.clone(),
                    value: e,
                });
            }
            let mut impaired = false;
            for (k, (&d, &face)) in self.debt[i].iter().zip(network.faces_of(i)).enumerate() {
                if !(d >= 0.0 && d <= face) {
                    return Err(StateError::RecoveryOutOfRange {
                        firm: firm.name.clone(),
                        seniority: k + 1,
                        value: d,
                        face,
                    });
                }
                impaired |= d < face;
            }
            if impaired && e != 0.0 {
                return Err(StateError::EquityWhileImpaired {
                    firm: firm.name.clone(),
                    equity: e,
                });
            }
        }
        Ok(())
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.equity
            .iter()
            .copied()
            .chain(self.debt.iter().flatten().copied())
    }

    /// Sup-norm distance over all equity and debt entries.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values()
            .zip(other.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, nan_max)
    }

    /// Sum of absolute differences over all equity and debt entries.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.values()
            .zip(other.values())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Largest absolute entry; NaN if any entry is NaN.
    pub fn max_abs(&self) -> f64 {
        self.values().map(f64::abs).fold(0.0, nan_max)
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Self) -> bool {
        self.values().zip(other.values()).all(|(a, b)| a <= b)
    }
}

// NaN-propagating max, so a blown-up state never looks converged.
fn nan_max(acc: f64, x: f64) -> f64 {
    if x.is_nan() || acc.is_nan() {
        f64::NAN
    } else {
        acc.max(x)
    }
}

/// What an asset-side item of a balance sheet refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemKind {
    Exogenous { asset: usize },
    Equity { issuer: usize },
    Debt { issuer: usize, seniority: usize },
}

/// Visits every asset item of `firm` with its current value, in the order
/// exogenous holdings, equity stakes, then debt claims by rank.
///
/// This single routine feeds both the scalar asset value and the published
/// balance sheet, so the two always sum identically.
fn for_each_item(
    network: &Network,
    firm: usize,
    observed: &ValuationState,
    prices: &PriceVector,
    mut visit: impl FnMut(ItemKind, f64),
) {
    for h in network.holdings_of(firm) {
        visit(
            ItemKind::Exogenous { asset: h.asset },
            h.quantity * prices.get(h.asset),
        );
    }
    let own = network.ownership();
    for (j, &frac) in own.equity.row(firm).iter().enumerate() {
        if frac != 0.0 {
            visit(ItemKind::Equity { issuer: j }, frac * observed.equity[j]);
        }
    }
    for (k, m) in own.debt.iter().enumerate() {
        for (j, &frac) in m.row(firm).iter().enumerate() {
            if frac != 0.0 {
                visit(
                    ItemKind::Debt {
                        issuer: j,
                        seniority: k + 1,
                    },
                    frac * observed.debt[j][k],
                );
            }
        }
    }
}

fn asset_value_unchecked(
    network: &Network,
    firm: usize,
    observed: &ValuationState,
    prices: &PriceVector,
) -> f64 {
    let mut v = 0.0;
    for_each_item(network, firm, observed, prices, |_, x| v += x);
    v
}

fn check_inputs(
    network: &Network,
    state: &ValuationState,
    prices: &PriceVector,
) -> Result<(), ValuationError> {
    if prices.len() != network.asset_count() {
        return Err(ValuationError::DimensionMismatch {
            what: "prices".into(),
            expected: network.asset_count(),
            found: prices.len(),
        });
    }
    state.check_dims(network)
}

/// Total asset value of `firm`: exogenous holdings at `prices` plus its
/// share of every other firm's equity and debt as recorded in `state`.
pub fn firm_asset_value(
    network: &Network,
    firm: usize,
    state: &ValuationState,
    prices: &PriceVector,
) -> Result<f64, ValuationError> {
    check_inputs(network, state, prices)?;
    if firm >= network.firm_count() {
        return Err(ValuationError::UnknownFirm(firm));
    }
    Ok(asset_value_unchecked(network, firm, state, prices))
}

/// Value of a firm's exogenous holdings alone.
pub fn exogenous_value(network: &Network, firm: usize, prices: &PriceVector) -> f64 {
    network
        .holdings_of(firm)
        .map(|h| h.quantity * prices.get(h.asset))
        .sum()
}

/// Split of a firm's asset value between its tranches and its equity.
#[derive(Debug, Clone, PartialEq)]
pub struct Apportionment {
    pub debt: Vec<f64>,
    pub equity: f64,
}

/// Limited-liability seniority waterfall.
///
/// Tranche `k` recovers `min(max(v - senior_faces, 0), face_k)` where
/// `senior_faces` is the total face of all more senior tranches; equity
/// gets `max(v - total_face, 0)`. The pieces always add back up to `v`.
pub fn waterfall(value: f64, faces: &[f64]) -> Apportionment {
    debug_assert!(value.is_nan() || value >= 0.0, "negative firm value {value}");
    let mut senior = 0.0;
    let debt = faces
        .iter()
        .map(|&face| {
            let d = (value - senior).max(0.0).min(face);
            senior += face;
            d
        })
        .collect();
    Apportionment {
        debt,
        equity: (value - senior).max(0.0),
    }
}

/// Revalues every firm against `observed[i]`, the state firm `i` sees.
///
/// With a single observed state for all firms this is the operator itself;
/// the dynamics engine passes each firm its own lagged view.
pub(crate) fn revalue_with<'s>(
    network: &Network,
    prices: &PriceVector,
    observed: impl Fn(usize) -> &'s ValuationState,
) -> ValuationState {
    let n = network.firm_count();
    let mut equity = Vec::with_capacity(n);
    let mut debt = Vec::with_capacity(n);
    for i in 0..n {
        let v = asset_value_unchecked(network, i, observed(i), prices);
        let split = waterfall(v, network.faces_of(i));
        equity.push(split.equity);
        debt.push(split.debt);
    }
    ValuationState { equity, debt }
}

/// One simultaneous revaluation of every firm against `state`.
pub fn phi(
    network: &Network,
    state: &ValuationState,
    prices: &PriceVector,
) -> Result<ValuationState, ValuationError> {
    check_inputs(network, state, prices)?;
    Ok(revalue_with(network, prices, |_| state))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssetItem {
    pub label: String,
    pub kind: ItemKind,
    pub value: f64,
}

/// A firm's published statement. Liabilities are carried at recovery value.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceSheet {
    pub firm: FirmId,
    pub asset_items: Vec<AssetItem>,
    pub liabilities: f64,
    /// Recovery on each own tranche, most senior first.
    pub tranche_recoveries: Vec<f64>,
    pub equity: f64,
}

impl BalanceSheet {
    pub fn total_assets(&self) -> f64 {
        self.asset_items.iter().map(|item| item.value).sum()
    }

    /// `assets - (liabilities + equity)`.
    pub fn imbalance(&self) -> f64 {
        self.total_assets() - (self.liabilities + self.equity)
    }

    pub fn balances(&self) -> bool {
        self.imbalance().abs() <= BALANCE_TOLERANCE
    }
}

fn item_label(network: &Network, kind: ItemKind) -> String {
    match kind {
        ItemKind::Exogenous { asset } => network.assets()[asset].0.clone(),
        ItemKind::Equity { issuer } => format!("equity:{}", network.firms()[issuer].name),
        ItemKind::Debt { issuer, seniority } => {
            format!("debt:{}:{}", network.firms()[issuer].name, seniority)
        }
    }
}

/// Balance sheet `firm` publishes when it marks its claims on others at
/// the values in `state` and its own holdings at `prices`.
pub fn publish_balance_sheet(
    network: &Network,
    firm: usize,
    state: &ValuationState,
    prices: &PriceVector,
) -> Result<BalanceSheet, ValuationError> {
    check_inputs(network, state, prices)?;
    let id = network
        .firms()
        .get(firm)
        .cloned()
        .ok_or(ValuationError::UnknownFirm(firm))?;
    let mut asset_items = Vec::new();
    let mut v = 0.0;
    for_each_item(network, firm, state, prices, |kind, value| {
        v += value;
        asset_items.push(AssetItem {
            label: item_label(network, kind),
            kind,
            value,
        });
    });
    let split = waterfall(v, network.faces_of(firm));
    Ok(BalanceSheet {
        firm: id,
        asset_items,
        liabilities: split.debt.iter().sum(),
        tranche_recoveries: split.debt,
        equity: split.equity,
    })
}

/// Outside-held value minus total exogenous value.
///
/// Outside investors own `1 - column_sum` of every claim. At a fixed point
/// of [`phi`] their holdings are worth exactly the exogenous assets, so the
/// residual vanishes.
///
/// # Panics
///
/// If `state` or `prices` do not match the network's dimensions.
pub fn conservation_check(network: &Network, state: &ValuationState, prices: &PriceVector) -> f64 {
    let own = network.ownership();
    let mut outside = 0.0;
    let mut exogenous = 0.0;
    for j in 0..network.firm_count() {
        outside += (1.0 - own.equity.column_sum(j)) * state.equity[j];
        for (k, &d) in state.debt[j].iter().enumerate() {
            outside += (1.0 - own.debt[k].column_sum(j)) * d;
        }
        exogenous += exogenous_value(network, j, prices);
    }
    outside - exogenous
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::{paper_network, paper_parts};
    use crate::network::{HoldingPart, Network, NetworkParts, TranchePart};
    use proptest::prelude::*;

    fn prices(net: &Network, commodities: f64) -> PriceVector {
        PriceVector::from_named(net, [("commodities", commodities)]).unwrap()
    }

    fn paper_state(e1: f64, e2: f64) -> ValuationState {
        ValuationState {
            equity: vec![e1, e2],
            debt: vec![vec![500.0], vec![500.0]],
        }
    }

    #[test]
    fn cash_defaults_to_one() {
        let net = paper_network();
        let p = prices(&net, 700.0);
        assert_eq!(p.as_slice(), &[700.0, 1.0]);
        assert!(matches!(
            PriceVector::from_named(&net, [("cash", 1.0)]),
            Err(ValuationError::MissingPrice(a)) if a == "commodities"
        ));
        assert!(matches!(
            PriceVector::from_named(&net, [("commodities", -1.0)]),
            Err(ValuationError::InvalidPrice { .. })
        ));
    }

    #[test]
    fn asset_value_time_one() {
        let net = paper_network();
        let v = firm_asset_value(&net, 0, &paper_state(1000.0, 1000.0), &prices(&net, 700.0));
        assert_eq!(v.unwrap(), 1200.0);
        let v = firm_asset_value(&net, 1, &paper_state(1000.0, 1000.0), &prices(&net, 500.0));
        assert_eq!(v.unwrap(), 1500.0);
    }

    #[test]
    fn asset_value_without_cross_holdings() {
        let mut parts = paper_parts();
        parts.equity = None;
        let net = Network::build(parts).unwrap();
        let v = firm_asset_value(&net, 0, &paper_state(1000.0, 1000.0), &prices(&net, 700.0));
        assert_eq!(v.unwrap(), 700.0);
    }

    #[test]
    fn asset_value_dimension_mismatch() {
        let net = paper_network();
        let state = ValuationState {
            equity: vec![1.0],
            debt: vec![vec![500.0]],
        };
        assert!(matches!(
            firm_asset_value(&net, 0, &state, &prices(&net, 700.0)),
            Err(ValuationError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn waterfall_examples() {
        assert_eq!(
            waterfall(1500.0, &[500.0]),
            Apportionment {
                debt: vec![500.0],
                equity: 1000.0
            }
        );
        assert_eq!(
            waterfall(300.0, &[500.0]),
            Apportionment {
                debt: vec![300.0],
                equity: 0.0
            }
        );
        assert_eq!(
            waterfall(700.0, &[500.0, 400.0]),
            Apportionment {
                debt: vec![500.0, 200.0],
                equity: 0.0
            }
        );
        // boundary: exactly the total face
        assert_eq!(
            waterfall(900.0, &[500.0, 400.0]),
            Apportionment {
                debt: vec![500.0, 400.0],
                equity: 0.0
            }
        );
        assert_eq!(waterfall(0.0, &[]).equity, 0.0);
    }

    #[test]
    fn phi_fixed_points_of_the_example() {
        let net = paper_network();
        let s = paper_state(1000.0, 1000.0);
        assert_eq!(phi(&net, &s, &prices(&net, 1000.0)).unwrap(), s);

        let s = paper_state(1000.0 / 3.0, 2000.0 / 3.0);
        let next = phi(&net, &s, &prices(&net, 500.0)).unwrap();
        assert!(next.sup_distance(&s) <= 1e-9);
    }

    #[test]
    fn phi_hand_step() {
        let net = paper_network();
        let next = phi(&net, &paper_state(700.0, 1000.0), &prices(&net, 500.0)).unwrap();
        assert_eq!(next, paper_state(500.0, 850.0));
    }

    #[test]
    fn balance_sheets_of_the_example() {
        let net = paper_network();
        let sheet =
            publish_balance_sheet(&net, 0, &paper_state(1000.0, 1000.0), &prices(&net, 1000.0))
                .unwrap();
        let items: Vec<(&str, f64)> = sheet
            .asset_items
            .iter()
            .map(|i| (i.label.as_str(), i.value))
            .collect();
        assert_eq!(items, vec![("commodities", 1000.0), ("equity:firm2", 500.0)]);
        assert_eq!(sheet.liabilities, 500.0);
        assert_eq!(sheet.equity, 1000.0);

        let sheet =
            publish_balance_sheet(&net, 0, &paper_state(1000.0, 1000.0), &prices(&net, 700.0))
                .unwrap();
        let values: Vec<f64> = sheet.asset_items.iter().map(|i| i.value).collect();
        assert_eq!(values, vec![700.0, 500.0]);
        assert_eq!(sheet.liabilities, 500.0);
        assert_eq!(sheet.equity, 700.0);
        assert!(sheet.balances());
    }

    #[test]
    fn empty_balance_sheet() {
        let net = Network::build(NetworkParts {
            firms: vec!["shell".into()],
            ..Default::default()
        })
        .unwrap();
        let p = PriceVector::new(&net, vec![]).unwrap();
        let sheet = publish_balance_sheet(&net, 0, &ValuationState::zeros(&net), &p).unwrap();
        assert!(sheet.asset_items.is_empty());
        assert_eq!(sheet.equity, 0.0);
        assert_eq!(sheet.liabilities, 0.0);
    }

    #[test]
    fn conservation_examples() {
        let net = paper_network();
        let limit = paper_state(1000.0 / 3.0, 2000.0 / 3.0);
        assert!(conservation_check(&net, &limit, &prices(&net, 500.0)).abs() < 1e-9);

        // 0.5*700 + 0.5*1000 + 1000 - 1500 = 350
        let r = conservation_check(&net, &paper_state(700.0, 1000.0), &prices(&net, 500.0));
        assert_eq!(r, 350.0);

        let empty = Network::build(NetworkParts::default()).unwrap();
        let p = PriceVector::new(&empty, vec![]).unwrap();
        assert_eq!(conservation_check(&empty, &ValuationState::zeros(&empty), &p), 0.0);
    }

    #[test]
    fn impaired_debt_crosses_to_holder() {
        // b holds 40% of a's only tranche; a is insolvent.
        let net = Network::build(NetworkParts {
            firms: vec!["a".into(), "b".into()],
            assets: vec!["gold".into()],
            holdings: vec![
                HoldingPart {
                    firm: "a".into(),
                    asset: "gold".into(),
                    quantity: 1.0,
                },
                HoldingPart {
                    firm: "b".into(),
                    asset: "gold".into(),
                    quantity: 1.0,
                },
            ],
            equity: None,
            debt: vec![vec![vec![0.0, 0.0], vec![0.4, 0.0]]],
            tranches: vec![TranchePart {
                firm: "a".into(),
                seniority: 1,
                face: 200.0,
            }],
        })
        .unwrap();
        let p = PriceVector::new(&net, vec![100.0]).unwrap();
        let s0 = phi(&net, &ValuationState::zeros(&net), &p).unwrap();
        let s1 = phi(&net, &s0, &p).unwrap();
        assert_eq!(s1.debt[0], vec![100.0]);
        assert_eq!(s1.equity, vec![0.0, 140.0]);
        s1.validate(&net).unwrap();
        let sheet = publish_balance_sheet(&net, 0, &s1, &p).unwrap();
        assert_eq!(sheet.liabilities, 100.0);
        assert!(sheet.balances());
    }

    #[test]
    fn validate_rejects_equity_while_impaired() {
        let net = paper_network();
        let s = ValuationState {
            equity: vec![10.0, 0.0],
            debt: vec![vec![400.0], vec![500.0]],
        };
        assert!(matches!(
            s.validate(&net),
            Err(StateError::EquityWhileImpaired { .. })
        ));
    }

    proptest! {
        #[test]
        fn waterfall_apportions_everything(
            value in 0.0f64..1e7,
            faces in proptest::collection::vec(0.0f64..1e6, 0..5),
        ) {
            let split = waterfall(value, &faces);
            let total: f64 = split.debt.iter().sum::<f64>() + split.equity;
            prop_assert!((total - value).abs() <= 1e-12 * value.max(1.0));
            for (d, f) in split.debt.iter().zip(&faces) {
                prop_assert!(*d >= 0.0 && d <= f);
            }
            prop_assert!(split.equity >= 0.0);
        }

        #[test]
        fn waterfall_is_monotone(
            a in 0.0f64..1e6,
            b in 0.0f64..1e6,
            faces in proptest::collection::vec(0.0f64..1e5, 0..5),
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let x = waterfall(lo, &faces);
            let y = waterfall(hi, &faces);
            prop_assert!(x.equity <= y.equity);
            for (p, q) in x.debt.iter().zip(&y.debt) {
                prop_assert!(p <= q);
            }
        }
    }
}
