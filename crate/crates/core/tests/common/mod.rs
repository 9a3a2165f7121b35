#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use reflexnet::network::{HoldingPart, Network, NetworkParts, TranchePart};
use reflexnet::valuation::{PriceVector, ValuationState};

pub const NETWORK_FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/paper_example.network.json");
pub const SCENARIO_FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/paper_example.scenario.json");
pub const P500_FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/p500.json");
pub const P1000_FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/p1000.json");

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_firms: usize,
    pub max_assets: usize,
    /// Column sums are drawn uniformly from `[0, max_column_sum]`.
    pub max_column_sum: f64,
    pub max_ranks: usize,
    /// Tranche faces are drawn from `[0, max_face]`.
    pub max_face: f64,
    pub cross_debt: bool,
    pub density: f64,
}

impl Default for Shape {
    fn default() -> Self {
        Self {
            max_firms: 8,
            max_assets: 3,
            max_column_sum: 0.9,
            max_ranks: 2,
            max_face: 150.0,
            cross_debt: true,
            density: 0.5,
        }
    }
}

fn fraction_matrix(rng: &mut ChaCha8Rng, n: usize, shape: &Shape, issued: impl Fn(usize) -> bool) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for j in 0..n {
        if !issued(j) {
            continue;
        }
        for (i, row) in m.iter_mut().enumerate() {
            if i != j && rng.gen_bool(shape.density) {
                row[j] = rng.gen_range(0.0..1.0);
            }
        }
        let sum: f64 = m.iter().map(|row| row[j]).sum();
        if sum > 0.0 {
            let target = rng.gen_range(0.0..=shape.max_column_sum);
            for row in m.iter_mut() {
                row[j] *= target / sum;
            }
        }
    }
    m
}

pub fn random_parts(rng: &mut ChaCha8Rng, shape: &Shape) -> NetworkParts {
    let n = rng.gen_range(1..=shape.max_firms);
    let m = rng.gen_range(1..=shape.max_assets);
    let firms: Vec<String> = (0..n).map(|i| format!("f{i}")).collect();
    let assets: Vec<String> = (0..m).map(|a| format!("a{a}")).collect();
    let mut holdings = Vec::new();
    for firm in &firms {
        for asset in &assets {
            if rng.gen_bool(0.6) {
                holdings.push(HoldingPart {
                    firm: firm.clone(),
                    asset: asset.clone(),
                    quantity: rng.gen_range(0.0..100.0),
                });
            }
        }
    }
    let ranks: Vec<usize> = (0..n).map(|_| rng.gen_range(0..=shape.max_ranks)).collect();
    let mut tranches = Vec::new();
    for (i, &k) in ranks.iter().enumerate() {
        for seniority in 1..=k {
            tranches.push(TranchePart {
                firm: firms[i].clone(),
                seniority: seniority as u32,
                face: rng.gen_range(0.0..=shape.max_face),
            });
        }
    }
    let equity = fraction_matrix(rng, n, shape, |_| true);
    let max_rank = ranks.iter().copied().max().unwrap_or(0);
    let debt = if shape.cross_debt {
        (0..max_rank)
            .map(|k| fraction_matrix(rng, n, shape, |j| ranks[j] > k))
            .collect()
    } else {
        Vec::new()
    };
    NetworkParts {
        firms,
        assets,
        holdings,
        equity: Some(equity),
        debt,
        tranches,
    }
}

pub fn random_network(rng: &mut ChaCha8Rng, shape: &Shape) -> Network {
    Network::build(random_parts(rng, shape)).expect("generator produces valid networks")
}

pub fn random_prices(rng: &mut ChaCha8Rng, network: &Network) -> PriceVector {
    let prices = (0..network.asset_count()).map(|_| rng.gen_range(0.5..2.0)).collect();
    PriceVector::new(network, prices).unwrap()
}

/// Any nonnegative state of the right shape; not necessarily consistent.
pub fn random_state(rng: &mut ChaCha8Rng, network: &Network) -> ValuationState {
    ValuationState {
        equity: (0..network.firm_count()).map(|_| rng.gen_range(0.0..500.0)).collect(),
        debt: (0..network.firm_count())
            .map(|i| {
                network
                    .faces_of(i)
                    .iter()
                    .map(|&face| rng.gen_range(0.0..=1.0) * face)
                    .collect()
            })
            .collect(),
    }
}

/// Componentwise `state + bump` with nonnegative bumps.
pub fn bumped(rng: &mut ChaCha8Rng, state: &ValuationState) -> ValuationState {
    ValuationState {
        equity: state.equity.iter().map(|e| e + rng.gen_range(0.0..50.0)).collect(),
        debt: state
            .debt
            .iter()
            .map(|d| d.iter().map(|x| x + rng.gen_range(0.0..20.0)).collect())
            .collect(),
    }
}

pub fn bumped_prices(rng: &mut ChaCha8Rng, network: &Network, prices: &PriceVector) -> PriceVector {
    let raised = prices.as_slice().iter().map(|p| p + rng.gen_range(0.0..0.5)).collect();
    PriceVector::new(network, raised).unwrap()
}
