//! Full-information equilibrium by Picard iteration.
//!
//! The equilibrium is a fixed point of [`phi`]. Starting from the
//! exogenous-only valuation (a lower bound of every fixed point), the
//! iterates increase monotonically. When every insider column sum is below
//! one the operator contracts in the l1 norm with that factor, which makes
//! the fixed point unique.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::network::{insider_column_sums, Network};
use crate::valuation::{exogenous_value, phi, revalue_with, PriceVector, ValuationError, ValuationState};

/// Claims whose column sum reaches `1 - UNIQUENESS_MARGIN` void the
/// uniqueness guarantee.
pub const UNIQUENESS_MARGIN: f64 = 1e-12;

/// Extra iterations allowed past the stopping rule to reach machine precision.
pub const POLISH_LIMIT: usize = 200;

/// Number of trailing residual ratios the contraction estimate looks at.
const ESTIMATE_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// Cross-claims valued at zero, then the waterfall.
    ExogenousOnly,
    Given(ValuationState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Sup-norm stopping threshold, in currency units.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial: InitialGuess,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 10_000,
            initial: InitialGuess::ExogenousOnly,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(SolveError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(SolveError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    /// Applications of the operator in the main loop.
    pub iterations: usize,
    /// `‖phi(x) - x‖∞` for the returned state, recomputed after the loop.
    pub final_residual: f64,
    /// Median of the last ten successive residual ratios.
    pub contraction_estimate: Option<f64>,
    pub guaranteed_unique: bool,
    /// Sup-norm step sizes `‖x_{t+1} - x_t‖∞`, one per iteration.
    pub residuals: Vec<f64>,
    /// The same steps measured in the l1 norm.
    pub l1_residuals: Vec<f64>,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Valuation(#[from] ValuationError),

    #[error(
        "no convergence after {} iterations (residual {:e})",
        diagnostics.iterations,
        diagnostics.final_residual
    )]
    NoConvergence {
        state: Box<ValuationState>,
        diagnostics: Box<SolveDiagnostics>,
    },
}

/// The exogenous-only valuation: `phi` applied to the all-zero state.
pub fn exogenous_only_state(network: &Network, prices: &PriceVector) -> Result<ValuationState, ValuationError> {
    phi(network, &ValuationState::zeros(network), prices)
}

/// Iterator over Picard iterates `phi(x), phi(phi(x)), ...`.
///
/// The starting point itself is not yielded.
pub struct Picard<'a> {
    network: &'a Network,
    prices: &'a PriceVector,
    current: ValuationState,
}

impl<'a> Picard<'a> {
    pub fn new(
        network: &'a Network,
        prices: &'a PriceVector,
        start: ValuationState,
    ) -> Result<Self, ValuationError> {
        // One checked application validates dimensions for the whole run.
        phi(network, &start, prices)?;
        Ok(Self {
            network,
            prices,
            current: start,
        })
    }

    pub fn current(&self) -> &ValuationState {
        &self.current
    }
}

impl Iterator for Picard<'_> {
    type Item = ValuationState;

    fn next(&mut self) -> Option<ValuationState> {
        let current = &self.current;
        let next = revalue_with(self.network, self.prices, |_| current);
        self.current = next.clone();
        Some(next)
    }
}

/// Iterates to a fixed point of [`phi`].
///
/// Stops once a step moves the state by at most `tolerance` and a fresh
/// application of the operator confirms the residual is also within it.
/// From there it keeps iterating, up to [`POLISH_LIMIT`] more steps, for as
/// long as the residual does not grow, which usually lands on the exact
/// floating-point fixed point.
pub fn solve_equilibrium(
    network: &Network,
    prices: &PriceVector,
    config: &SolverConfig,
) -> Result<(ValuationState, SolveDiagnostics), SolveError> {
    config.validate()?;
    let mut current = match &config.initial {
        InitialGuess::ExogenousOnly => exogenous_only_state(network, prices)?,
        InitialGuess::Given(state) => state.clone(),
    };
    let guaranteed_unique = check_contraction(network).guaranteed_unique;
    let apply = |state: &ValuationState| revalue_with(network, prices, |_| state);
    let mut next = phi(network, &current, prices)?;
    let mut residuals = Vec::new();
    let mut l1_residuals = Vec::new();

    let diagnostics = |iterations, final_residual, residuals: Vec<f64>, l1_residuals| SolveDiagnostics {
        iterations,
        final_residual,
        contraction_estimate: contraction_estimate(&residuals),
        guaranteed_unique,
        residuals,
        l1_residuals,
    };

    for iteration in 1..=config.max_iterations {
        let step = next.sup_distance(&current);
        residuals.push(step);
        l1_residuals.push(next.l1_distance(&current));
        current = next;
        next = apply(&current);
        if step > config.tolerance {
            continue;
        }
        let mut residual = next.sup_distance(&current);
        if residual > config.tolerance {
            continue;
        }
        let mut iterations = iteration;
        for _ in 0..POLISH_LIMIT {
            if residual == 0.0 || iterations == config.max_iterations {
                break;
            }
            let after = apply(&next);
            let after_residual = after.sup_distance(&next);
            if after_residual > residual {
                break;
            }
            iterations += 1;
            residuals.push(residual);
            l1_residuals.push(next.l1_distance(&current));
            current = std::mem::replace(&mut next, after);
            residual = after_residual;
        }
        return Ok((current, diagnostics(iterations, residual, residuals, l1_residuals)));
    }

    let final_residual = next.sup_distance(&current);
    Err(SolveError::NoConvergence {
        state: Box::new(current),
        diagnostics: Box::new(diagnostics(config.max_iterations, final_residual, residuals, l1_residuals)),
    })
}

fn contraction_estimate(residuals: &[f64]) -> Option<f64> {
    let mut ratios: Vec<f64> = residuals
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    let tail = ratios.len().saturating_sub(ESTIMATE_WINDOW);
    median(&mut ratios[tail..])
}

pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

/// A claim issued by a firm: its equity or one of its tranches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClaimRef {
    Equity { issuer: usize },
    Debt { issuer: usize, seniority: usize },
}

impl ClaimRef {
    pub fn describe(&self, network: &Network) -> String {
        match *self {
            ClaimRef::Equity { issuer } => format!("equity of {}", network.firms()[issuer].name),
            ClaimRef::Debt { issuer, seniority } => {
                format!("debt of {} (seniority {seniority})", network.firms()[issuer].name)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub guaranteed_unique: bool,
    pub worst_column_sum: f64,
    /// Claims whose insider column sum voids the guarantee.
    pub offending_claims: Vec<(ClaimRef, f64)>,
}

impl fmt::Display for ContractionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "guaranteed_unique: {}, worst_column_sum: {}",
            self.guaranteed_unique, self.worst_column_sum
        )
    }
}

/// Sufficient condition for a unique fixed point and geometric
/// convergence: every insider column sum strictly below one.
pub fn check_contraction(network: &Network) -> ContractionReport {
    let threshold = 1.0 - UNIQUENESS_MARGIN;
    let mut worst: f64 = 0.0;
    let mut offending_claims = Vec::new();
    for (issuer, sums) in insider_column_sums(network).into_iter().enumerate() {
        let claims = std::iter::once((ClaimRef::Equity { issuer }, sums.equity)).chain(
            sums.debt
                .into_iter()
                .enumerate()
                .map(move |(k, s)| (ClaimRef::Debt { issuer, seniority: k + 1 }, s)),
        );
        for (claim, sum) in claims {
            worst = worst.max(sum);
            if sum >= threshold {
                offending_claims.push((claim, sum));
            }
        }
    }
    ContractionReport {
        guaranteed_unique: worst < threshold,
        worst_column_sum: worst,
        offending_claims,
    }
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LinearError {
    #[error(transparent)]
    Valuation(#[from] ValuationError),

    #[error("I - M is singular")]
    SingularSystem,

    #[error("firm `{firm}` is insolvent at the linear solution (equity {equity})")]
    RegimeViolation { firm: String, equity: f64 },
}

/// Direct solution assuming every firm is solvent.
///
/// Then all debt recovers at face and equity solves
/// `(I - M) e = a - b`, where `M` is the equity cross-holding matrix, `a`
/// the exogenous value plus cross-held debt at face, and `b` each firm's
/// total face.
pub fn closed_form_linear(network: &Network, prices: &PriceVector) -> Result<ValuationState, LinearError> {
    if prices.len() != network.asset_count() {
        return Err(ValuationError::DimensionMismatch {
            what: "prices".into(),
            expected: network.asset_count(),
            found: prices.len(),
        }
        .into());
    }
    let n = network.firm_count();
    let own = network.ownership();
    let system = DMatrix::from_fn(n, n, |i, j| {
        let identity = if i == j { 1.0 } else { 0.0 };
        identity - own.equity.get(i, j)
    });
    let rhs = DVector::from_fn(n, |i, _| {
        let mut a = exogenous_value(network, i, prices);
        for (k, m) in own.debt.iter().enumerate() {
            for j in 0..n {
                if let Some(&face) = network.faces_of(j).get(k) {
                    a += m.get(i, j) * face;
                }
            }
        }
        let b: f64 = network.faces_of(i).iter().sum();
        a - b
    });
    let equity = system.lu().solve(&rhs).ok_or(LinearError::SingularSystem)?;
    if equity.iter().any(|e| !e.is_finite()) {
        return Err(LinearError::SingularSystem);
    }
    if let Some((i, &e)) = equity.iter().enumerate().find(|(_, &e)| e < 0.0) {
        return Err(LinearError::RegimeViolation {
            firm: network.firms()[i].name.clone(),
            equity: e,
        });
    }
    // `+ 0.0` turns a -0.0 into 0.0.
    let equity = equity.iter().map(|&e| e + 0.0).collect();
    Ok(ValuationState::with_full_recovery(network, equity))
}
