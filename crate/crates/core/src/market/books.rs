//! Order construction: an operator's cost curve becomes a ladder of one-unit
//! bids (pay to shed load) and asks (be paid to absorb load).
//!
//! With a convex curve the m-th shed unit is worth the m-th marginal energy
//! minus the transfer overhead, except the last one: shedding everything lets
//! the cell sleep, so that bid also carries the idle-to-sleep power drop and
//! is flagged, because honouring it requires the whole bundle to trade.

use crate::energy::CostCurve;
use crate::market::MarketError;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bid,
    Ask,
}

/// One-unit order. `value` is in watts: the most a bidder will pay, or the
/// least an asker will accept, to move one load unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Order {
    pub owner: usize,
    pub side: Side,
    /// 1-based position in the owner's ladder.
    pub unit_index: usize,
    pub value: f64,
    /// Set on the final bid of a full ladder: it absorbs the sleep jump and
    /// only makes sense if the owner sheds everything.
    pub total_offload: bool,
}

/// One operator's standing in a market round.
#[derive(Debug, Clone)]
pub struct MnoState {
    pub id: usize,
    /// Entering load, normalized to cell capacity; must sit on the unit grid.
    pub load: f64,
    pub awake: bool,
    pub curve: Arc<CostCurve>,
    /// Energy overhead each transferred unit costs this operator, watts.
    pub e_tr_w: f64,
}

impl MnoState {
    pub fn new(
        id: usize,
        load: f64,
        awake: bool,
        curve: Arc<CostCurve>,
        e_tr_w: f64,
    ) -> Result<Self, MarketError> {
        if !load.is_finite() || !(0.0..=1.0 + 1e-9).contains(&load) {
            return Err(MarketError::LoadOutOfRange { id, load });
        }
        if !e_tr_w.is_finite() || e_tr_w < 0.0 {
            return Err(MarketError::BadTransferEnergy { id, e_tr_w });
        }
        let delta = curve.delta_l;
        let units = (load / delta).round();
        if (units * delta - load).abs() > 1e-6 {
            return Err(MarketError::LoadOffGrid {
                id,
                load,
                delta_l: delta,
            });
        }
        Ok(Self {
            id,
            load,
            awake,
            curve,
            e_tr_w,
        })
    }

    /// Entering load in grid units.
    pub fn load_units(&self) -> usize {
        (self.load / self.curve.delta_l).round() as usize
    }

    /// Energy this operator burns if the round changes nothing.
    pub fn standalone_energy_w(&self) -> f64 {
        if self.awake {
            self.curve.energy_at(self.load_units())
        } else {
            self.curve.sleep_power_w
        }
    }
}

/// Bid ladder whose last unit carries the sleep jump. Unit m < M is worth the
/// (M-m+1)-th marginal minus transfer; unit M is worth dropping from one load
/// unit to sleep, minus transfer.
pub fn full_bid_ladder(state: &MnoState) -> Vec<Order> {
    let m_units = state.load_units();
    if !state.awake || m_units == 0 {
        return Vec::new();
    }
    let curve = &state.curve;
    (1..=m_units)
        .map(|m| {
            let (value, total_offload) = if m < m_units {
                (curve.marginal(m_units - m + 1) - state.e_tr_w, false)
            } else {
                (
                    curve.energy_at(1) - curve.sleep_power_w - state.e_tr_w,
                    true,
                )
            };
            Order {
                owner: state.id,
                side: Side::Bid,
                unit_index: m,
                value,
                total_offload,
            }
        })
        .collect()
}

/// Bid ladder for an operator that stays awake whatever happens: every unit,
/// the last included, is valued at its plain marginal energy.
pub fn interior_bid_ladder(state: &MnoState) -> Vec<Order> {
    let m_units = state.load_units();
    if !state.awake || m_units == 0 {
        return Vec::new();
    }
    (1..=m_units)
        .map(|m| Order {
            owner: state.id,
            side: Side::Bid,
            unit_index: m,
            value: state.curve.marginal(m_units - m + 1) - state.e_tr_w,
            total_offload: false,
        })
        .collect()
}

/// Ask ladder from the operator's entering load up to capacity.
pub fn ask_ladder(state: &MnoState) -> Vec<Order> {
    ask_ladder_from(state, state.load_units())
}

/// Ask ladder from an explicit base load (used after earlier-phase transfers
/// already raised it). The n-th ask costs the (base+n)-th marginal plus
/// transfer, so ladders rise strictly when the curve is strictly convex.
pub fn ask_ladder_from(state: &MnoState, base_units: usize) -> Vec<Order> {
    if !state.awake {
        return Vec::new();
    }
    let curve = &state.curve;
    (1..=curve.units().saturating_sub(base_units))
        .map(|n| Order {
            owner: state.id,
            side: Side::Ask,
            unit_index: n,
            value: curve.marginal(base_units + n) + state.e_tr_w,
            total_offload: false,
        })
        .collect()
}

const CSV_HEADER: &str = "owner,side,unit_index,value_watts,total_offload_marker";

/// Serializes orders with round-trippable float formatting.
pub fn orders_to_csv(orders: &[Order]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for o in orders {
        let side = match o.side {
            Side::Bid => "bid",
            Side::Ask => "ask",
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            o.owner,
            side,
            o.unit_index,
            o.value,
            u8::from(o.total_offload)
        ));
    }
    out
}

pub fn orders_from_csv(text: &str) -> Result<Vec<Order>, MarketError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => {
            return Err(MarketError::Csv(format!(
                "expected header '{CSV_HEADER}', got {other:?}"
            )))
        }
    }
    let mut orders = Vec::new();
    for (idx, line) in lines.enumerate() {
        let cols: Vec<&str> = line.trim().split(',').collect();
        if cols.len() != 5 {
            return Err(MarketError::Csv(format!(
                "row {}: expected 5 columns, got {}",
                idx + 2,
                cols.len()
            )));
        }
        let bad = |what: &str| MarketError::Csv(format!("row {}: bad {what}: {line}", idx + 2));
        let side = match cols[1] {
            "bid" => Side::Bid,
            "ask" => Side::Ask,
            _ => return Err(bad("side")),
        };
        orders.push(Order {
            owner: cols[0].parse().map_err(|_| bad("owner"))?,
            side,
            unit_index: cols[2].parse().map_err(|_| bad("unit_index"))?,
            value: cols[3].parse().map_err(|_| bad("value"))?,
            total_offload: match cols[4] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("marker")),
            },
        });
    }
    Ok(orders)
}
