//! Multi-unit energy market: order construction from cost curves, the
//! double-auction matching rule, the two-phase clearinghouse, and reference
//! oracles used to audit it.

pub mod books;
pub mod clearing;
pub mod oracle;
pub mod pmd;
pub mod probes;
pub mod synthetic;

use thiserror::Error;

pub use books::{
    ask_ladder, ask_ladder_from, full_bid_ladder, interior_bid_ladder, orders_from_csv,
    orders_to_csv, MnoState, Order, Side,
};
pub use clearing::{clearinghouse_round, MarketOutcome};
pub use oracle::{welfare_oracle, OracleOutcome};
pub use pmd::{pmd_match, sort_asks, sort_bids, MatchResult, TradePricing};

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("a market round needs at least two awake participants, got {0}")]
    NotEnoughParticipants(usize),
    #[error("duplicate MNO id {0}")]
    DuplicateId(usize),
    #[error("MNO {id} load {load} does not sit on the {delta_l} unit grid")]
    LoadOffGrid { id: usize, load: f64, delta_l: f64 },
    #[error("MNO {id} load {load} must lie in [0, 1]")]
    LoadOutOfRange { id: usize, load: f64 },
    #[error("MNO {id} transfer energy {e_tr_w} must be finite and non-negative")]
    BadTransferEnergy { id: usize, e_tr_w: f64 },
    #[error("participants must share one unit size, found {0} and {1}")]
    MixedUnitSize(f64, f64),
    #[error("oracle search space exceeds {limit} assignments")]
    OracleTooLarge { limit: usize },
    #[error("order book parse error: {0}")]
    Csv(String),
}
