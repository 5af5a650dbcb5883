//! One-shot multi-unit double auction with dominant-strategy pricing.
//!
//! Bids sort descending, asks ascending, and j is the last rank where they
//! still cross. The (j+1)-th pair's midpoint is tried as a uniform price; if
//! it falls outside the j-th pair the auction instead trades j-1 units with
//! buyers paying the j-th bid and sellers receiving the j-th ask, the gap
//! going to the auctioneer. Truth-telling is dominant for one-unit traders
//! because no order's report moves its own price while it trades.

use crate::market::books::{Order, Side};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TradePricing {
    /// No units trade.
    None,
    /// Everyone trades at one price; budget balanced.
    Uniform(f64),
    /// Buyers pay more than sellers receive; the difference is burnt.
    Split { buyer_pays: f64, seller_receives: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub trade_count: usize,
    pub pricing: TradePricing,
    /// The trading orders, in book order.
    pub winning_bids: Vec<Order>,
    pub winning_asks: Vec<Order>,
    pub auctioneer_surplus: f64,
}

impl MatchResult {
    pub fn zero() -> Self {
        Self {
            trade_count: 0,
            pricing: TradePricing::None,
            winning_bids: Vec::new(),
            winning_asks: Vec::new(),
            auctioneer_surplus: 0.0,
        }
    }

    /// Value created: winning bid values minus winning ask values.
    pub fn welfare(&self) -> f64 {
        let b: f64 = self.winning_bids.iter().map(|o| o.value).sum();
        let a: f64 = self.winning_asks.iter().map(|o| o.value).sum();
        b - a
    }

    /// What each trading buyer pays per unit, by book position.
    pub fn buyer_price(&self) -> f64 {
        match self.pricing {
            TradePricing::None => 0.0,
            TradePricing::Uniform(p) => p,
            TradePricing::Split { buyer_pays, .. } => buyer_pays,
        }
    }

    pub fn seller_price(&self) -> f64 {
        match self.pricing {
            TradePricing::None => 0.0,
            TradePricing::Uniform(p) => p,
            TradePricing::Split {
                seller_receives, ..
            } => seller_receives,
        }
    }
}

/// Canonical book order for bids: best value first, ties by owner then unit.
pub fn sort_bids(bids: &mut [Order]) {
    bids.sort_by(|x, y| {
        y.value
            .total_cmp(&x.value)
            .then(x.owner.cmp(&y.owner))
            .then(x.unit_index.cmp(&y.unit_index))
    });
}

/// Canonical book order for asks: cheapest first, ties by owner then unit.
pub fn sort_asks(asks: &mut [Order]) {
    asks.sort_by(|x, y| {
        x.value
            .total_cmp(&y.value)
            .then(x.owner.cmp(&y.owner))
            .then(x.unit_index.cmp(&y.unit_index))
    });
}

pub fn pmd_match(bids: &[Order], asks: &[Order]) -> MatchResult {
    debug_assert!(bids.iter().all(|o| o.side == Side::Bid));
    debug_assert!(asks.iter().all(|o| o.side == Side::Ask));
    let mut bids = bids.to_vec();
    let mut asks = asks.to_vec();
    sort_bids(&mut bids);
    sort_asks(&mut asks);

    let n = bids.len().min(asks.len());
    // Crossing depth: b_k - a_k falls with k, so the crossed ranks are a prefix.
    let mut j = 0;
    while j < n && bids[j].value >= asks[j].value {
        j += 1;
    }
    if j == 0 {
        return MatchResult::zero();
    }
    if j < n {
        let p = 0.5 * (bids[j].value + asks[j].value);
        if bids[j - 1].value >= p && p >= asks[j - 1].value {
            return MatchResult {
                trade_count: j,
                pricing: TradePricing::Uniform(p),
                winning_bids: bids[..j].to_vec(),
                winning_asks: asks[..j].to_vec(),
                auctioneer_surplus: 0.0,
            };
        }
    }
    // Either the midpoint is unusable or the book ran out at rank j: drop the
    // j-th pair and let it price the rest.
    let traded = j - 1;
    if traded == 0 {
        return MatchResult::zero();
    }
    let buyer_pays = bids[j - 1].value;
    let seller_receives = asks[j - 1].value;
    MatchResult {
        trade_count: traded,
        pricing: TradePricing::Split {
            buyer_pays,
            seller_receives,
        },
        winning_bids: bids[..traded].to_vec(),
        winning_asks: asks[..traded].to_vec(),
        auctioneer_surplus: traded as f64 * (buyer_pays - seller_receives),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn book(values: &[f64], side: Side) -> Vec<Order> {
        values
            .iter()
            .enumerate()
            .map(|(i, &value)| Order {
                owner: 100 + i,
                side,
                unit_index: 1,
                value,
                total_offload: false,
            })
            .collect()
    }

    #[test]
    fn midpoint_inside_pair_trades_at_uniform_price() {
        let bids = book(&[10.0, 8.0, 6.0, 4.0], Side::Bid);
        let asks = book(&[2.0, 3.0, 5.0, 7.0], Side::Ask);
        let r = pmd_match(&bids, &asks);
        assert_eq!(r.trade_count, 3);
        assert_eq!(r.pricing, TradePricing::Uniform(5.5));
        assert_eq!(r.auctioneer_surplus, 0.0);
        assert!((r.welfare() - ((10.0 + 8.0 + 6.0) - (2.0 + 3.0 + 5.0))).abs() < 1e-12);
    }

    #[test]
    fn midpoint_outside_pair_drops_marginal_trade() {
        let bids = book(&[10.0, 8.0, 6.0, 4.0], Side::Bid);
        let asks = book(&[2.0, 3.0, 5.0, 9.0], Side::Ask);
        // j = 3, midpoint (4 + 9) / 2 = 6.5 > b_3 = 6: reduce to 2 trades.
        let r = pmd_match(&bids, &asks);
        assert_eq!(r.trade_count, 2);
        assert_eq!(
            r.pricing,
            TradePricing::Split {
                buyer_pays: 6.0,
                seller_receives: 5.0
            }
        );
        assert!((r.auctioneer_surplus - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exhausted_book_falls_to_reduced_trade() {
        // All pairs cross, so no (j+1)-th pair exists to price from.
        let bids = book(&[10.0, 8.0], Side::Bid);
        let asks = book(&[2.0, 3.0], Side::Ask);
        let r = pmd_match(&bids, &asks);
        assert_eq!(r.trade_count, 1);
        assert_eq!(
            r.pricing,
            TradePricing::Split {
                buyer_pays: 8.0,
                seller_receives: 3.0
            }
        );
        assert!((r.auctioneer_surplus - 5.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_books_do_not_trade() {
        let bids = book(&[3.0, 2.0], Side::Bid);
        let asks = book(&[4.0, 5.0], Side::Ask);
        assert_eq!(pmd_match(&bids, &asks), MatchResult::zero());
        assert_eq!(pmd_match(&[], &asks), MatchResult::zero());
        assert_eq!(pmd_match(&bids, &[]), MatchResult::zero());
    }

    #[test]
    fn single_crossing_pair_cannot_trade() {
        // A lone crossed pair has no (j+1)-th pair to price from, and
        // dropping it leaves nothing to trade.
        let bids = book(&[10.0], Side::Bid);
        let asks = book(&[2.0], Side::Ask);
        let r = pmd_match(&bids, &asks);
        assert_eq!(r.trade_count, 0);
    }

    #[test]
    fn input_order_is_irrelevant() {
        let mut bids = book(&[4.0, 10.0, 6.0, 8.0], Side::Bid);
        let asks = book(&[5.0, 2.0, 7.0, 3.0], Side::Ask);
        let r1 = pmd_match(&bids, &asks);
        bids.reverse();
        let r2 = pmd_match(&bids, &asks);
        assert_eq!(r1.trade_count, r2.trade_count);
        assert_eq!(r1.pricing, r2.pricing);
        assert_eq!(r1.welfare(), r2.welfare());
    }

    #[test]
    fn boundary_midpoint_counts_as_inside() {
        // Midpoint lands exactly on b_j: uniform branch still applies.
        let bids = book(&[10.0, 6.0], Side::Bid);
        let asks = book(&[2.0, 2.0], Side::Ask);
        // j = 2? b_2 = 6 >= a_2 = 2, book exhausted: reduced branch.
        let r = pmd_match(&bids, &asks);
        assert_eq!(r.trade_count, 1);
        let bids = book(&[10.0, 6.0, 1.0], Side::Bid);
        let asks = book(&[2.0, 2.0, 10.0], Side::Ask);
        // j = 2, midpoint (1 + 10) / 2 = 5.5, inside [2, 6]: uniform.
        let r = pmd_match(&bids, &asks);
        assert_eq!(r.trade_count, 2);
        assert_eq!(r.pricing, TradePricing::Uniform(5.5));
    }
}
