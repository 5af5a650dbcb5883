//! Seeded random instances for property tests and self-audits: convex cost
//! curves, raw order books, and whole market rounds.

use crate::energy::CostCurve;
use crate::market::books::{MnoState, Order, Side};
use rand::Rng;
use std::sync::Arc;

/// Strictly convex curve: idle draw in [30, 90) W, first marginal in
/// [0.5, 3) W, marginal increments in [0.05, 1.5) W. Sleeping costs nothing.
pub fn random_convex_curve<R: Rng>(rng: &mut R, units: usize) -> Arc<CostCurve> {
    assert!(units >= 1);
    let idle: f64 = rng.random_range(30.0..90.0);
    let mut marginal: f64 = rng.random_range(0.5..3.0);
    let mut energy = Vec::with_capacity(units + 1);
    energy.push(idle);
    for _ in 0..units {
        energy.push(energy.last().unwrap() + marginal);
        marginal += rng.random_range(0.05..1.5);
    }
    Arc::new(
        CostCurve::from_energies(energy, 1.0 / units as f64, 0.0)
            .expect("generated curve is strictly convex"),
    )
}

/// Unstructured book: up to ten one-unit orders per side with values in
/// [0, 20) W. Owners are distinct, so every order is a one-unit trader.
pub fn random_order_book<R: Rng>(rng: &mut R) -> (Vec<Order>, Vec<Order>) {
    let n_bids = rng.random_range(1..=10);
    let n_asks = rng.random_range(1..=10);
    let bids = (0..n_bids)
        .map(|i| Order {
            owner: 1000 + i,
            side: Side::Bid,
            unit_index: 1,
            value: rng.random_range(0.0..20.0),
            total_offload: false,
        })
        .collect();
    let asks = (0..n_asks)
        .map(|i| Order {
            owner: 2000 + i,
            side: Side::Ask,
            unit_index: 1,
            value: rng.random_range(0.0..20.0),
            total_offload: false,
        })
        .collect();
    (bids, asks)
}

/// Book as real operators would submit it: two to four operators on private
/// convex curves, each turning its load into an interior bid ladder and its
/// spare capacity into an ask ladder. Unlike [`random_order_book`], values
/// here inherit curve structure (descending bids, ascending asks per owner).
pub fn random_curve_book<R: Rng>(rng: &mut R) -> (Vec<Order>, Vec<Order>) {
    use crate::market::books::{ask_ladder, interior_bid_ladder};
    let n = rng.random_range(2..=4);
    let units = rng.random_range(3..=10);
    let mnos = random_market(rng, n, units);
    let mut bids = Vec::new();
    let mut asks = Vec::new();
    for m in &mnos {
        bids.extend(interior_bid_ladder(m));
        asks.extend(ask_ladder(m));
    }
    (bids, asks)
}

/// Random market round: `n` awake operators on private convex curves of
/// `units` grid steps, grid-aligned loads, transfer overheads in [0, 0.5) W.
pub fn random_market<R: Rng>(rng: &mut R, n: usize, units: usize) -> Vec<MnoState> {
    (0..n)
        .map(|id| {
            let curve = random_convex_curve(rng, units);
            let load_units = rng.random_range(0..=units);
            let load = load_units as f64 / units as f64;
            let e_tr = rng.random_range(0.0..0.5);
            MnoState::new(id, load, true, curve, e_tr).expect("grid-aligned load")
        })
        .collect()
}
