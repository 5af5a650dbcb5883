//! Mechanism audits: per-order rationality, budget sanity, and misreport
//! probing. The pricing rule is dominant-strategy only for one-unit traders,
//! so probes perturb a single order at a time and score the utility of that
//! order against its true value.

use crate::market::books::{Order, Side};
use crate::market::pmd::{pmd_match, MatchResult, TradePricing};

/// Runs the match and checks the invariants every result must satisfy:
/// equal winner counts, non-negative welfare and surplus, surplus zero under
/// uniform pricing, and no winner trading at a loss against its own report.
pub fn audit_match(bids: &[Order], asks: &[Order]) -> Result<MatchResult, String> {
    let res = pmd_match(bids, asks);
    if res.winning_bids.len() != res.trade_count || res.winning_asks.len() != res.trade_count {
        return Err(format!(
            "winner counts {}/{} disagree with trade count {}",
            res.winning_bids.len(),
            res.winning_asks.len(),
            res.trade_count
        ));
    }
    if res.trade_count == 0 {
        if !matches!(res.pricing, TradePricing::None) || res.auctioneer_surplus != 0.0 {
            return Err("empty trade carries pricing or surplus".into());
        }
        return Ok(res);
    }
    if res.welfare() < -1e-12 {
        return Err(format!("negative welfare {}", res.welfare()));
    }
    if res.auctioneer_surplus < -1e-12 {
        return Err(format!("negative surplus {}", res.auctioneer_surplus));
    }
    if matches!(res.pricing, TradePricing::Uniform(_)) && res.auctioneer_surplus != 0.0 {
        return Err("uniform pricing must balance the budget".into());
    }
    let pay = res.buyer_price();
    let receive = res.seller_price();
    if pay < receive - 1e-12 {
        return Err(format!("buyers pay {pay} below sellers' {receive}"));
    }
    for o in &res.winning_bids {
        if o.value < pay - 1e-12 {
            return Err(format!("bid {} trades above its value at {}", o.value, pay));
        }
    }
    for o in &res.winning_asks {
        if o.value > receive + 1e-12 {
            return Err(format!(
                "ask {} trades below its value at {}",
                o.value, receive
            ));
        }
    }
    Ok(res)
}

fn order_key(o: &Order) -> (usize, usize, u8) {
    (o.owner, o.unit_index, matches!(o.side, Side::Ask) as u8)
}

/// Utility one order earns from a match result, scored at its true value.
fn utility(target: &Order, true_value: f64, res: &MatchResult) -> f64 {
    let winners = match target.side {
        Side::Bid => &res.winning_bids,
        Side::Ask => &res.winning_asks,
    };
    if !winners.iter().any(|w| order_key(w) == order_key(target)) {
        return 0.0;
    }
    match target.side {
        Side::Bid => true_value - res.buyer_price(),
        Side::Ask => res.seller_price() - true_value,
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ProbeSummary {
    pub trials: usize,
    pub strict_gains: usize,
    pub max_gain_w: f64,
}

impl ProbeSummary {
    pub fn merge(&mut self, other: ProbeSummary) {
        self.trials += other.trials;
        self.strict_gains += other.strict_gains;
        self.max_gain_w = self.max_gain_w.max(other.max_gain_w);
    }
}

/// Perturbs each order's reported value by up to three book-spread-scaled
/// steps in both directions and checks that no single order profits, at its
/// true value, from the lie. Gains above `tolerance` count as strict.
pub fn misreport_probe(bids: &[Order], asks: &[Order], tolerance: f64) -> ProbeSummary {
    let truthful = pmd_match(bids, asks);
    let values: Vec<f64> = bids.iter().chain(asks).map(|o| o.value).collect();
    if values.is_empty() {
        return ProbeSummary::default();
    }
    let spread = values.iter().cloned().fold(f64::MIN, f64::max)
        - values.iter().cloned().fold(f64::MAX, f64::min);
    let step = if spread > 0.0 { spread / 10.0 } else { 1.0 };

    let mut summary = ProbeSummary::default();
    let mut probe = |orders: &[Order], side_is_bid: bool| {
        for idx in 0..orders.len() {
            let target = orders[idx];
            let honest = utility(&target, target.value, &truthful);
            for k in [-3i32, -2, -1, 1, 2, 3] {
                let mut lied = target;
                lied.value = target.value + k as f64 * step;
                if lied.side == Side::Ask {
                    lied.value = lied.value.max(0.0);
                }
                let mut book: Vec<Order> = orders.to_vec();
                book[idx] = lied;
                let res = if side_is_bid {
                    pmd_match(&book, asks)
                } else {
                    pmd_match(bids, &book)
                };
                let lying = utility(&lied, target.value, &res);
                let gain = lying - honest;
                summary.trials += 1;
                if gain > tolerance {
                    summary.strict_gains += 1;
                    summary.max_gain_w = summary.max_gain_w.max(gain);
                }
            }
        }
    };
    probe(bids, true);
    probe(asks, false);
    summary
}
