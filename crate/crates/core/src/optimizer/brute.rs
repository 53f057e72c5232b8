use std::time::Instant;

use super::{ProfsetModel, Proof, Solution, SolveStats};
use crate::error::{Error, Result};

pub const BRUTE_FORCE_MAX_ITEMS: usize = 25;

/// Exhaustive oracle: scores every size-`item_max` selection.
///
/// Selections are visited in lexicographic order of their sorted item lists
/// and only a strictly better one replaces the incumbent, so the returned
/// optimum is the lexicographically smallest among ties.
pub fn solve_brute(model: &ProfsetModel) -> Result<Solution> {
    let n = model.items().len();
    if n > BRUTE_FORCE_MAX_ITEMS {
        return Err(Error::BruteGuard {
            items: n,
            max: BRUTE_FORCE_MAX_ITEMS,
        });
    }
    let start = Instant::now();
    let k = model.item_max();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut mask = vec![false; n];
    let mut best: Option<(i64, Vec<bool>)> = None;
    let mut visited = 0u64;
    loop {
        mask.iter_mut().for_each(|m| *m = false);
        for &i in &idx {
            mask[i] = true;
        }
        visited += 1;
        if model.mask_feasible(&mask) {
            let value = model.objective_of(&mask).0;
            if best.as_ref().is_none_or(|(b, _)| value > *b) {
                best = Some((value, mask.clone()));
            }
        }
        // next k-combination of 0..n
        let mut i = k;
        loop {
            if i == 0 {
                let (_, mask) = best.ok_or_else(|| {
                    Error::Infeasible("no selection satisfies the constraints".into())
                })?;
                let stats = SolveStats {
                    nodes: visited,
                    wall_time: start.elapsed(),
                };
                return Ok(model.solution(&mask, Proof::Optimal, stats));
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
