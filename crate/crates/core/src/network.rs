//! Static description of a network of cross-owned firms.
//!
//! A [`Network`] holds the firms, the exogenous assets they hold, the
//! fraction of every firm's equity and debt tranches held by other firms,
//! and each firm's own debt schedule. It is validated once on construction
//! and immutable afterwards.
//!
//! Claims not held inside the network belong to outside investors, who are
//! never tracked individually: the outside share of a claim is one minus
//! its insider column sum.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column sums may exceed one by this much before a build is rejected.
pub const COLUMN_SUM_TOLERANCE: f64 = 1e-12;

/// Errors raised while assembling a [`Network`].
///
/// Every variant carries the document-style path of the offending field,
/// e.g. `ownership.equity[1][1]` or `holdings[0].asset`.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum NetworkError {
    #[error("{path}: duplicate identifier `{id}`")]
    DuplicateId { path: String, id: String },

    #[error("{path}: unknown reference `{id}`")]
    UnknownReference { path: String, id: String },

    #[error("{path}: invalid fraction {value} (entries must lie in [0, 1] with a zero diagonal)")]
    InvalidFraction { path: String, value: f64 },

    #[error("{path}: insider holdings sum to {sum}, more than the whole claim")]
    ColumnSumExceeded { path: String, sum: f64 },

    #[error("{path}: expected {expected} entries, found {found}")]
    DimensionMismatch {
        path: String,
        expected: usize,
        found: usize,
    },

    #[error("{path}: amount must be finite and nonnegative, got {value}")]
    InvalidAmount { path: String, value: f64 },

    #[error("{path}: {detail}")]
    InvalidSeniority { path: String, detail: String },
}

/// Symbolic name of an exogenous asset such as `commodities` or `cash`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AssetId(pub String);

impl AssetId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AssetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A firm's name together with its dense position in the firm ordering.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FirmId {
    pub name: String,
    pub index: usize,
}

impl fmt::Display for FirmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Units of an exogenous asset held by a firm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExogenousHolding {
    pub firm: usize,
    pub asset: usize,
    pub quantity: f64,
}

/// One debt tranche owed by `firm`. Seniority 1 is paid first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DebtTranche {
    pub firm: usize,
    pub seniority: u32,
    pub face: f64,
}

/// Dense row-major `n x n` matrix of holding fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Fraction of column firm `j`'s claim held by row firm `i`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }
}

/// Cross-ownership of equity and of each debt seniority rank.
///
/// `debt[k]` describes rank `k + 1`; its length equals the largest number
/// of tranches any firm has.
#[derive(Debug, Clone, PartialEq)]
pub struct OwnershipMatrix {
    pub equity: SquareMatrix,
    pub debt: Vec<SquareMatrix>,
}

/// Raw, unvalidated network components, keyed by name.
///
/// Mirrors the JSON network document one-to-one. `equity` may be omitted
/// (no equity cross-holdings) and `debt` may list fewer ranks than exist.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkParts {
    pub firms: Vec<String>,
    pub assets: Vec<String>,
    pub holdings: Vec<HoldingPart>,
    pub equity: Option<Vec<Vec<f64>>>,
    pub debt: Vec<Vec<Vec<f64>>>,
    pub tranches: Vec<TranchePart>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldingPart {
    pub firm: String,
    pub asset: String,
    pub quantity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranchePart {
    pub firm: String,
    pub seniority: u32,
    pub face: f64,
}

/// Build-time validation switches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildOptions {
    /// Accept ownership fractions above one and column sums above one.
    /// Only meant for studying divergent (positive feedback) systems.
    pub allow_excess_holdings: bool,
}

/// A validated financial network.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    firms: Vec<FirmId>,
    assets: Vec<AssetId>,
    holdings: Vec<ExogenousHolding>,
    ownership: OwnershipMatrix,
    tranches: Vec<DebtTranche>,
    // derived
    holdings_by_firm: Vec<Vec<usize>>,
    faces: Vec<Vec<f64>>,
    options: BuildOptions,
}

/// Insider column sums of every claim issued by one firm.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimColumnSums {
    pub equity: f64,
    /// One entry per tranche the firm has issued, most senior first.
    pub debt: Vec<f64>,
}

impl Network {
    /// Validates `parts` and builds a network.
    pub fn build(parts: NetworkParts) -> Result<Self, NetworkError> {
        Self::build_with(parts, BuildOptions::default())
    }

    pub fn build_with(parts: NetworkParts, options: BuildOptions) -> Result<Self, NetworkError> {
        let firm_index = index_names(&parts.firms, "firms")?;
        let asset_index = index_names(&parts.assets, "assets")?;
        let n = parts.firms.len();

        let firms = parts
            .firms
            .iter()
            .enumerate()
            .map(|(index, name)| FirmId {
                name: name.clone(),
                index,
            })
            .collect();
        let assets = parts.assets.iter().cloned().map(AssetId).collect();

        let mut holdings = Vec::with_capacity(parts.holdings.len());
        let mut holdings_by_firm = vec![Vec::new(); n];
        for (h, part) in parts.holdings.iter().enumerate() {
            let firm = lookup(&firm_index, &part.firm, || format!("holdings[{h}].firm"))?;
            let asset = lookup(&asset_index, &part.asset, || format!("holdings[{h}].asset"))?;
            check_amount(part.quantity, || format!("holdings[{h}].quantity"))?;
            holdings_by_firm[firm].push(holdings.len());
            holdings.push(ExogenousHolding {
                firm,
                asset,
                quantity: part.quantity,
            });
        }

        let mut tranches = Vec::with_capacity(parts.tranches.len());
        let mut by_rank: Vec<BTreeMap<u32, (usize, f64)>> = vec![BTreeMap::new(); n];
        for (t, part) in parts.tranches.iter().enumerate() {
            let firm = lookup(&firm_index, &part.firm, || format!("tranches[{t}].firm"))?;
            check_amount(part.face, || format!("tranches[{t}].face"))?;
            if part.seniority == 0 {
                return Err(NetworkError::InvalidSeniority {
                    path: format!("tranches[{t}].seniority"),
                    detail: "seniority ranks start at 1".into(),
                });
            }
            if by_rank[firm].insert(part.seniority, (t, part.face)).is_some() {
                return Err(NetworkError::InvalidSeniority {
                    path: format!("tranches[{t}].seniority"),
                    detail: format!(
                        "firm `{}` already has a tranche of seniority {}",
                        part.firm, part.seniority
                    ),
                });
            }
            tranches.push(DebtTranche {
                firm,
                seniority: part.seniority,
                face: part.face,
            });
        }
        let mut faces = Vec::with_capacity(n);
        for ranks in &by_rank {
            // BTreeMap iterates in rank order, so density means key == position + 1.
            for (pos, (&rank, &(t, _))) in ranks.iter().enumerate() {
                if rank as usize != pos + 1 {
                    return Err(NetworkError::InvalidSeniority {
                        path: format!("tranches[{t}].seniority"),
                        detail: format!("seniority ranks must be dense from 1; missing rank {}", pos + 1),
                    });
                }
            }
            faces.push(ranks.values().map(|&(_, face)| face).collect::<Vec<f64>>());
        }
        let max_rank = faces.iter().map(Vec::len).max().unwrap_or(0);

        let equity = match &parts.equity {
            Some(rows) => fraction_matrix(rows, n, "ownership.equity", options)?,
            None => SquareMatrix::zeros(n),
        };
        check_columns(&equity, "ownership.equity", options)?;

        let mut debt = Vec::with_capacity(max_rank);
        for (k, rows) in parts.debt.iter().enumerate() {
            let path = format!("ownership.debt[{k}]");
            let m = fraction_matrix(rows, n, &path, options)?;
            for (j, firm_faces) in faces.iter().enumerate() {
                if k >= firm_faces.len() {
                    if let Some(i) = (0..n).find(|&i| m.get(i, j) != 0.0) {
                        return Err(NetworkError::UnknownReference {
                            path: format!("{path}[{i}][{j}]"),
                            id: format!("{} seniority {}", parts.firms[j], k + 1),
                        });
                    }
                }
            }
            check_columns(&m, &path, options)?;
            if k < max_rank {
                debt.push(m);
            }
        }
        debt.resize_with(max_rank, || SquareMatrix::zeros(n));

        Ok(Self {
            firms,
            assets,
            holdings,
            ownership: OwnershipMatrix { equity, debt },
            tranches,
            holdings_by_firm,
            faces,
            options,
        })
    }

    pub fn firm_count(&self) -> usize {
        self.firms.len()
    }

    pub fn asset_count(&self) -> usize {
        self.assets.len()
    }

    pub fn firms(&self) -> &[FirmId] {
        &self.firms
    }

    pub fn assets(&self) -> &[AssetId] {
        &self.assets
    }

    pub fn holdings(&self) -> &[ExogenousHolding] {
        &self.holdings
    }

    /// Holdings of one firm, in document order.
    pub fn holdings_of(&self, firm: usize) -> impl Iterator<Item = &ExogenousHolding> + '_ {
        self.holdings_by_firm[firm].iter().map(|&h| &self.holdings[h])
    }

    pub fn ownership(&self) -> &OwnershipMatrix {
        &self.ownership
    }

    pub fn tranches(&self) -> &[DebtTranche] {
        &self.tranches
    }

    /// Face values of a firm's tranches, most senior first.
    pub fn faces_of(&self, firm: usize) -> &[f64] {
        &self.faces[firm]
    }

    /// Number of seniority ranks in use across the network.
    pub fn max_seniority(&self) -> usize {
        self.ownership.debt.len()
    }

    pub fn options(&self) -> BuildOptions {
        self.options
    }

    pub fn firm_index(&self, name: &str) -> Option<usize> {
        self.firms.iter().position(|f| f.name == name)
    }

    pub fn asset_index(&self, name: &str) -> Option<usize> {
        self.assets.iter().position(|a| a.0 == name)
    }

    /// Reassembles the named components this network was built from,
    /// with debt ranks normalised to [`Network::max_seniority`].
    pub fn to_parts(&self) -> NetworkParts {
        let name = |i: usize| self.firms[i].name.clone();
        NetworkParts {
            firms: self.firms.iter().map(|f| f.name.clone()).collect(),
            assets: self.assets.iter().map(|a| a.0.clone()).collect(),
            holdings: self
                .holdings
                .iter()
                .map(|h| HoldingPart {
                    firm: name(h.firm),
                    asset: self.assets[h.asset].0.clone(),
                    quantity: h.quantity,
                })
                .collect(),
            equity: Some(self.ownership.equity.to_rows()),
            debt: self.ownership.debt.iter().map(SquareMatrix::to_rows).collect(),
            tranches: self
                .tranches
                .iter()
                .map(|t| TranchePart {
                    firm: name(t.firm),
                    seniority: t.seniority,
                    face: t.face,
                })
                .collect(),
        }
    }
}

/// Insider column sums for every firm's equity and tranches.
pub fn insider_column_sums(network: &Network) -> Vec<ClaimColumnSums> {
    let own = network.ownership();
    (0..network.firm_count())
        .map(|j| ClaimColumnSums {
            equity: own.equity.column_sum(j),
            debt: (0..network.faces_of(j).len())
                .map(|k| own.debt[k].column_sum(j))
                .collect(),
        })
        .collect()
}

fn index_names(names: &[String], field: &str) -> Result<HashMap<String, usize>, NetworkError> {
    let mut index = HashMap::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        if index.insert(name.clone(), i).is_some() {
            return Err(NetworkError::DuplicateId {
                path: format!("{field}[{i}]"),
                id: name.clone(),
            });
        }
    }
    Ok(index)
}

fn lookup(
    index: &HashMap<String, usize>,
    name: &str,
    path: impl FnOnce() -> String,
) -> Result<usize, NetworkError> {
    index
        .get(name)
        .copied()
        .ok_or_else(|| NetworkError::UnknownReference {
            path: path(),
            id: name.to_string(),
        })
}

fn check_amount(value: f64, path: impl FnOnce() -> String) -> Result<(), NetworkError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(NetworkError::InvalidAmount {
            path: path(),
            value,
        })
    }
}

fn fraction_matrix(
    rows: &[Vec<f64>],
    n: usize,
    path: &str,
    options: BuildOptions,
) -> Result<SquareMatrix, NetworkError> {
    if rows.len() != n {
        return Err(NetworkError::DimensionMismatch {
            path: path.to_string(),
            expected: n,
            found: rows.len(),
        });
    }
    let mut m = SquareMatrix::zeros(n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(NetworkError::DimensionMismatch {
                path: format!("{path}[{i}]"),
                expected: n,
                found: row.len(),
            });
        }
        for (j, &value) in row.iter().enumerate() {
            let upper_ok = options.allow_excess_holdings || value <= 1.0;
            let ok = value.is_finite() && value >= 0.0 && upper_ok && (i != j || value == 0.0);
            if !ok {
                return Err(NetworkError::InvalidFraction {
                    path: format!("{path}[{i}][{j}]"),
                    value,
                });
            }
            m.set(i, j, value);
        }
    }
    Ok(m)
}

fn check_columns(m: &SquareMatrix, path: &str, options: BuildOptions) -> Result<(), NetworkError> {
    if options.allow_excess_holdings {
        return Ok(());
    }
    for j in 0..m.dim() {
        let sum = m.column_sum(j);
        if sum > 1.0 + COLUMN_SUM_TOLERANCE {
            return Err(NetworkError::ColumnSumExceeded {
                path: format!("{path}[*][{j}]"),
                sum,
            });
        }
    }
    Ok(())
}
