//! Brute-force welfare reference. Enumerates every unit-conserving
//! reallocation directly from the cost curves, with no books, prices, or
//! phases in the way, so clearinghouse welfare can be audited against the
//! true optimum on small instances.

use crate::market::books::MnoState;
use crate::market::MarketError;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub welfare_w: f64,
    /// Ids shut down in the optimal plan, ascending.
    pub sleeping: Vec<usize>,
    /// Net units shed (positive) or absorbed (negative) per id.
    pub allocation: BTreeMap<usize, i64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Move {
    /// Shed this many units and stay awake (0 = do nothing).
    Shed(usize),
    /// Shed everything and power off.
    SleepAll,
    /// Take on this many units, 1-based.
    Absorb(usize),
}

fn move_net_units(m: &MnoState, mv: Move) -> i64 {
    match mv {
        Move::Shed(u) => u as i64,
        Move::SleepAll => m.load_units() as i64,
        Move::Absorb(u) => -(u as i64),
    }
}

fn move_gain_w(m: &MnoState, mv: Move) -> f64 {
    let units = m.load_units();
    let curve = &m.curve;
    match mv {
        Move::Shed(u) => curve.energy_at(units) - curve.energy_at(units - u) - u as f64 * m.e_tr_w,
        Move::SleepAll => {
            curve.energy_at(units) - curve.sleep_power_w - units as f64 * m.e_tr_w
        }
        Move::Absorb(u) => {
            curve.energy_at(units) - curve.energy_at(units + u) - u as f64 * m.e_tr_w
        }
    }
}

struct Search<'a> {
    mnos: Vec<&'a MnoState>,
    moves: Vec<Vec<Move>>,
    /// Suffix capacity to shed / absorb, for pruning.
    max_shed: Vec<i64>,
    max_absorb: Vec<i64>,
    visited: usize,
    limit: usize,
    chosen: Vec<Move>,
    best: Option<(f64, Vec<usize>, Vec<Move>)>,
}

impl Search<'_> {
    fn run(&mut self, depth: usize, net: i64, welfare: f64) -> Result<(), MarketError> {
        self.visited += 1;
        if self.visited > self.limit {
            return Err(MarketError::OracleTooLarge { limit: self.limit });
        }
        if depth == self.mnos.len() {
            if net == 0 {
                let sleeping: Vec<usize> = self
                    .chosen
                    .iter()
                    .zip(&self.mnos)
                    .filter(|(mv, _)| matches!(mv, Move::SleepAll))
                    .map(|(_, m)| m.id)
                    .collect();
                let better = match &self.best {
                    None => true,
                    Some((w, s, _)) => {
                        welfare > *w
                            || (welfare == *w
                                && (sleeping.len() < s.len()
                                    || (sleeping.len() == s.len() && sleeping < *s)))
                    }
                };
                if better {
                    self.best = Some((welfare, sleeping, self.chosen.clone()));
                }
            }
            return Ok(());
        }
        // Units already shed must still be absorbable downstream, and vice
        // versa, or the branch can never balance.
        if net > self.max_absorb[depth] || -net > self.max_shed[depth] {
            return Ok(());
        }
        let m = self.mnos[depth];
        for i in 0..self.moves[depth].len() {
            let mv = self.moves[depth][i];
            self.chosen.push(mv);
            self.run(depth + 1, net + move_net_units(m, mv), welfare + move_gain_w(m, mv))?;
            self.chosen.pop();
        }
        Ok(())
    }
}

/// Highest-welfare unit-conserving reallocation among awake operators,
/// ties broken toward fewer shutdowns then the lexically smallest shutdown
/// set. Errs once more than `max_nodes` search nodes are visited.
pub fn welfare_oracle(
    mnos: &[MnoState],
    max_nodes: usize,
) -> Result<OracleOutcome, MarketError> {
    let participants: Vec<&MnoState> = mnos.iter().filter(|m| m.awake).collect();
    if participants.len() < 2 {
        return Err(MarketError::NotEnoughParticipants(participants.len()));
    }
    let moves: Vec<Vec<Move>> = participants
        .iter()
        .map(|m| {
            let units = m.load_units();
            let spare = m.curve.units() - units;
            let mut v = Vec::with_capacity(units + spare + 2);
            // Shed(units) empties the cell but keeps it awake, distinct from
            // SleepAll in what the idle platform keeps burning. Shed(0) is
            // the do-nothing move every operator has, zero-loaded included.
            for u in 0..=units {
                v.push(Move::Shed(u));
            }
            if units > 0 {
                v.push(Move::SleepAll);
            }
            for u in 1..=spare {
                v.push(Move::Absorb(u));
            }
            v
        })
        .collect();
    let n = participants.len();
    let mut max_shed = vec![0i64; n + 1];
    let mut max_absorb = vec![0i64; n + 1];
    for i in (0..n).rev() {
        let units = participants[i].load_units() as i64;
        let spare = participants[i].curve.units() as i64 - units;
        max_shed[i] = max_shed[i + 1] + units;
        max_absorb[i] = max_absorb[i + 1] + spare;
    }
    let mut search = Search {
        mnos: participants,
        moves,
        max_shed,
        max_absorb,
        visited: 0,
        limit: max_nodes,
        chosen: Vec::with_capacity(n),
        best: None,
    };
    search.run(0, 0, 0.0)?;
    // The all-Shed(0) assignment always balances, so a best plan exists.
    let (welfare_w, sleeping, moves) = search.best.expect("do-nothing plan is always feasible");
    let allocation = moves
        .iter()
        .zip(&search.mnos)
        .map(|(mv, m)| (m.id, move_net_units(m, *mv)))
        .collect();
    Ok(OracleOutcome {
        welfare_w,
        sleeping,
        allocation,
    })
}
