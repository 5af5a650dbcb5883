//! Two-phase market clearing.
//!
//! A plain double auction can never empty a cell: the last load unit's true
//! value includes the idle-to-sleep power drop, which only pays off if the
//! whole bundle trades, and one-shot unit matching cannot express that. The
//! clearinghouse therefore enumerates every candidate set of operators to
//! shut down entirely (phase 1, bundle trades against the cheapest spare
//! capacity), then lets the remaining operators rebalance marginally through
//! the auction (phase 2). The candidate with the highest total welfare wins;
//! a no-shutdown plain auction and doing nothing are always candidates too.

use crate::market::books::{
    ask_ladder, ask_ladder_from, interior_bid_ladder, MnoState,
};
use crate::market::pmd::{pmd_match, sort_asks, MatchResult};
use crate::market::MarketError;
use std::collections::{BTreeMap, BTreeSet};

/// Settled result of one clearing round. Maps cover the round's participants
/// (operators awake at entry); ids absent from them sat the round out.
#[derive(Debug, Clone)]
pub struct MarketOutcome {
    /// Consumption if the round changed nothing, watts.
    pub baseline_w: f64,
    /// Consumption after the trade, transfer overheads included, watts.
    pub post_trade_w: f64,
    /// Value the trade created (baseline minus post), watts.
    pub welfare_w: f64,
    /// 100 * welfare / baseline.
    pub savings_pct: f64,
    /// Gross transferred units over both phases.
    pub traded_units: usize,
    /// Money burnt when the auction prices buyers above sellers, watts.
    pub auctioneer_surplus_w: f64,
    /// Volume-weighted mean price buyers paid per unit, watts.
    pub trade_price_mean_w: Option<f64>,
    /// Ids put to sleep by this round, ascending.
    pub sleeping: Vec<usize>,
    /// Net units shed (positive) or absorbed (negative) per id.
    pub allocation: BTreeMap<usize, i64>,
    /// Normalized post-round loads per id; sleeping ids read 0.
    pub post_loads: BTreeMap<usize, f64>,
    /// Net payment per id, watts; negative means the id was paid.
    pub payments_w: BTreeMap<usize, f64>,
}

struct Phase1 {
    /// Offloader id -> (units shed, bundle bid value).
    offloaders: BTreeMap<usize, (usize, f64)>,
    /// Seller id -> (units absorbed, summed taken-ask value).
    sellers: BTreeMap<usize, (usize, f64)>,
    /// Total bundle value minus total taken-ask value, strictly positive.
    gain_w: f64,
    need: usize,
}

struct Candidate {
    welfare_w: f64,
    sleeping: Vec<usize>,
    phase1: Option<Phase1>,
    phase2: MatchResult,
}

/// Welfare first, then fewer shutdowns, then the lexically smallest
/// shutdown set: deterministic under symmetric ties.
fn strictly_better(a: &Candidate, b: &Candidate) -> bool {
    if a.welfare_w != b.welfare_w {
        return a.welfare_w > b.welfare_w;
    }
    if a.sleeping.len() != b.sleeping.len() {
        return a.sleeping.len() < b.sleeping.len();
    }
    a.sleeping < b.sleeping
}

pub fn clearinghouse_round(mnos: &[MnoState]) -> Result<MarketOutcome, MarketError> {
    let mut seen = BTreeSet::new();
    for m in mnos {
        if !seen.insert(m.id) {
            return Err(MarketError::DuplicateId(m.id));
        }
    }
    let participants: Vec<&MnoState> = mnos.iter().filter(|m| m.awake).collect();
    if participants.len() < 2 {
        return Err(MarketError::NotEnoughParticipants(participants.len()));
    }
    let delta = participants[0].curve.delta_l;
    for p in &participants {
        if (p.curve.delta_l - delta).abs() > 1e-12 {
            return Err(MarketError::MixedUnitSize(delta, p.curve.delta_l));
        }
    }

    let mut best = Candidate {
        welfare_w: 0.0,
        sleeping: Vec::new(),
        phase1: None,
        phase2: MatchResult::zero(),
    };

    // No-shutdown candidate: everyone trades marginal units in one auction.
    {
        let mut bids = Vec::new();
        let mut asks = Vec::new();
        for p in &participants {
            bids.extend(interior_bid_ladder(p));
            asks.extend(ask_ladder(p));
        }
        let res = pmd_match(&bids, &asks);
        let cand = Candidate {
            welfare_w: res.welfare(),
            sleeping: Vec::new(),
            phase1: None,
            phase2: res,
        };
        if strictly_better(&cand, &best) {
            best = cand;
        }
    }

    // Shutdown candidates: each nonempty subset of loaded operators with a
    // nonempty complement to absorb them.
    let loaded: Vec<usize> = (0..participants.len())
        .filter(|&i| participants[i].load_units() > 0)
        .collect();
    for mask in 1u64..(1 << loaded.len()) {
        let in_t = |i: usize| {
            loaded
                .iter()
                .position(|&l| l == i)
                .is_some_and(|pos| mask >> pos & 1 == 1)
        };
        let offloaders: Vec<&MnoState> = (0..participants.len())
            .filter(|&i| in_t(i))
            .map(|i| participants[i])
            .collect();
        let complement: Vec<&MnoState> = (0..participants.len())
            .filter(|&i| !in_t(i))
            .map(|i| participants[i])
            .collect();
        if complement.is_empty() {
            continue;
        }
        let need: usize = offloaders.iter().map(|m| m.load_units()).sum();
        let capacity: usize = complement
            .iter()
            .map(|m| m.curve.units() - m.load_units())
            .sum();
        if capacity < need {
            continue;
        }

        let mut pool: Vec<_> = complement.iter().flat_map(|c| ask_ladder(c)).collect();
        sort_asks(&mut pool);
        let taken = &pool[..need];
        let a_val: f64 = taken.iter().map(|o| o.value).sum();
        let b_val: f64 = offloaders
            .iter()
            .map(|m| {
                m.curve.energy_at(m.load_units())
                    - m.curve.sleep_power_w
                    - m.load_units() as f64 * m.e_tr_w
            })
            .sum();
        if !(b_val > a_val) {
            continue;
        }

        let mut sellers: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
        for o in taken {
            let e = sellers.entry(o.owner).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += o.value;
        }

        // Phase 2: sellers are committed carriers and only offer further
        // capacity; untouched operators may both rebalance out and absorb.
        let mut bids2 = Vec::new();
        let mut asks2 = Vec::new();
        for c in &complement {
            let sold = sellers.get(&c.id).map_or(0, |e| e.0);
            if sold == 0 {
                bids2.extend(interior_bid_ladder(c));
            }
            asks2.extend(ask_ladder_from(c, c.load_units() + sold));
        }
        let res2 = pmd_match(&bids2, &asks2);

        let cand = Candidate {
            welfare_w: (b_val - a_val) + res2.welfare(),
            sleeping: offloaders.iter().map(|m| m.id).collect(),
            phase1: Some(Phase1 {
                offloaders: offloaders
                    .iter()
                    .map(|m| {
                        let units = m.load_units();
                        let bundle = m.curve.energy_at(units)
                            - m.curve.sleep_power_w
                            - units as f64 * m.e_tr_w;
                        (m.id, (units, bundle))
                    })
                    .collect(),
                sellers,
                gain_w: b_val - a_val,
                need,
            }),
            phase2: res2,
        };
        if strictly_better(&cand, &best) {
            best = cand;
        }
    }

    Ok(assemble(&participants, best))
}

fn assemble(participants: &[&MnoState], cand: Candidate) -> MarketOutcome {
    let baseline_w: f64 = participants.iter().map(|m| m.standalone_energy_w()).sum();
    let mut gross_bought: BTreeMap<usize, usize> =
        participants.iter().map(|m| (m.id, 0)).collect();
    let mut gross_sold = gross_bought.clone();
    let mut payments_w: BTreeMap<usize, f64> =
        participants.iter().map(|m| (m.id, 0.0)).collect();
    let mut buyer_outlay = 0.0;
    let mut phase1_units = 0;

    if let Some(p1) = &cand.phase1 {
        let half = 0.5 * p1.gain_w;
        for (&id, &(units, bundle)) in &p1.offloaders {
            gross_bought.insert(id, units);
            let pay = bundle - half * units as f64 / p1.need as f64;
            *payments_w.get_mut(&id).unwrap() += pay;
            buyer_outlay += pay;
        }
        for (&id, &(units, ask_sum)) in &p1.sellers {
            *gross_sold.get_mut(&id).unwrap() += units;
            *payments_w.get_mut(&id).unwrap() -= ask_sum + half * units as f64 / p1.need as f64;
        }
        phase1_units = p1.need;
    }
    for o in &cand.phase2.winning_bids {
        *gross_bought.get_mut(&o.owner).unwrap() += 1;
        *payments_w.get_mut(&o.owner).unwrap() += cand.phase2.buyer_price();
        buyer_outlay += cand.phase2.buyer_price();
    }
    for o in &cand.phase2.winning_asks {
        *gross_sold.get_mut(&o.owner).unwrap() += 1;
        *payments_w.get_mut(&o.owner).unwrap() -= cand.phase2.seller_price();
    }

    let mut allocation = BTreeMap::new();
    let mut post_loads = BTreeMap::new();
    let mut post_trade_w = 0.0;
    for m in participants {
        let net = gross_bought[&m.id] as i64 - gross_sold[&m.id] as i64;
        allocation.insert(m.id, net);
        let post_units = m.load_units() as i64 - net;
        debug_assert!(post_units >= 0 && post_units <= m.curve.units() as i64);
        let post_units = post_units as usize;
        let asleep = cand.sleeping.binary_search(&m.id).is_ok();
        debug_assert!(!asleep || post_units == 0);
        post_loads.insert(
            m.id,
            if asleep {
                0.0
            } else {
                post_units as f64 / m.curve.units() as f64
            },
        );
        post_trade_w += if asleep {
            m.curve.sleep_power_w
        } else {
            m.curve.energy_at(post_units)
        };
        post_trade_w += (gross_bought[&m.id] + gross_sold[&m.id]) as f64 * m.e_tr_w;
    }

    let traded_units = phase1_units + cand.phase2.trade_count;
    debug_assert!(
        (cand.welfare_w - (baseline_w - post_trade_w)).abs() <= 1e-6,
        "book welfare {} disagrees with energy accounting {}",
        cand.welfare_w,
        baseline_w - post_trade_w
    );
    MarketOutcome {
        baseline_w,
        post_trade_w,
        welfare_w: cand.welfare_w,
        savings_pct: if baseline_w > 0.0 {
            100.0 * (baseline_w - post_trade_w) / baseline_w
        } else {
            0.0
        },
        traded_units,
        auctioneer_surplus_w: cand.phase2.auctioneer_surplus,
        trade_price_mean_w: (traded_units > 0).then(|| buyer_outlay / traded_units as f64),
        sleeping: cand.sleeping,
        allocation,
        post_loads,
        payments_w,
    }
}
