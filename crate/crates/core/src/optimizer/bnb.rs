//! Depth-first branch-and-bound over the item variables.
//!
//! Each node branches on one item, include before exclude: the top item of
//! the category whose top item leads its runner-up by the widest margin. At
//! every node the bound is the value already locked in plus the best
//! completion of a separable relaxation: each live, not yet complete set
//! spreads its margin evenly over its undecided members, and the
//! relaxation picks the best undecided items per category subject to the
//! remaining count constraints. Spreading over undecided members can only
//! over-credit a set (it pays out in full only when every member is picked),
//! so the bound is admissible. Shares are scaled by `lcm(1..=max set size)`
//! to keep all arithmetic integral.
//!
//! Each category's cap is tightened to `item_max` minus the minima of all
//! other categories. Sets that need more members of a category than its cap
//! allows are dead from the start, and a category that reaches its cap has
//! its remaining items excluded on the spot. When a category can hold a
//! single product, the sets of an item that run through it are grouped by
//! their member there and only the best group is credited, since at most
//! one of those members can be picked.
//!
//! A greedy selection improved by single swaps seeds the incumbent.

use std::time::Instant;

use super::{ProfsetModel, Proof, Solution, SolveStats};
use crate::error::{Error, Result};

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub node_budget: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

pub fn solve_exact(model: &ProfsetModel) -> Result<Solution> {
    solve_exact_with(model, SolveOptions::default())
}

/// Proves optimality or fails; it never returns an unproven incumbent.
pub fn solve_exact_with(model: &ProfsetModel, options: SolveOptions) -> Result<Solution> {
    let start = Instant::now();
    let mut search = Search::new(model, options.node_budget);
    search.best = local_search(&search);
    search.dfs()?;
    let (_, mask) = search
        .best
        .take()
        .ok_or_else(|| Error::Infeasible("no selection satisfies the constraints".into()))?;
    let stats = SolveStats {
        nodes: search.nodes,
        wall_time: start.elapsed(),
    };
    Ok(model.solution(&mask, Proof::Optimal, stats))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Open,
    In,
    Out,
}

/// A set seen from one of its members: `group` is the single-product
/// category and member it is grouped under, if any.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Link {
    group: Option<(usize, usize)>,
    set: usize,
}

struct Search<'a> {
    model: &'a ProfsetModel,
    budget: u64,
    nodes: u64,
    scale: i128,
    /// Items by category, then by root bound.
    order: Vec<usize>,
    item_sets: Vec<Vec<usize>>,
    links: Vec<Vec<Link>>,
    cat_items: Vec<Vec<usize>>,
    cap: Vec<usize>,
    scaled_margin: Vec<i128>,
    state: Vec<State>,
    /// Members of each set not yet selected.
    missing: Vec<usize>,
    /// Members of each set excluded, plus one if the set can never complete.
    dead: Vec<usize>,
    selected: usize,
    cat_selected: Vec<usize>,
    cat_open: Vec<usize>,
    value: i64,
    best: Option<(i64, Vec<bool>)>,
    /// Branching item chosen by the last bound evaluation.
    pick: Option<usize>,
    // scratch
    top: Vec<i128>,
    extra: Vec<i128>,
}

fn lcm_upto(n: usize) -> i128 {
    fn gcd(a: i128, b: i128) -> i128 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    (1..=n.max(1) as i128).fold(1, |acc, k| acc / gcd(acc, k) * k)
}

impl<'a> Search<'a> {
    fn new(model: &'a ProfsetModel, budget: u64) -> Search<'a> {
        let n = model.items().len();
        let ncat = model.categories.len();
        let mut item_sets = vec![Vec::new(); n];
        for (s, members) in model.set_members.iter().enumerate() {
            for &i in members {
                item_sets[i].push(s);
            }
        }
        let max_len = model.set_members.iter().map(Vec::len).max().unwrap_or(1);
        let scale = lcm_upto(max_len);
        let scaled_margin: Vec<i128> = (0..model.set_members.len())
            .map(|s| i128::from(model.margin(s)) * scale)
            .collect();

        let min_total: usize = model.categories.iter().map(|c| c.min).sum();
        let cap: Vec<usize> = model
            .categories
            .iter()
            .map(|c| {
                let others = min_total - c.min;
                c.cap.min(model.item_max().saturating_sub(others))
            })
            .collect();
        let dead: Vec<usize> = model
            .set_members
            .iter()
            .map(|members| {
                let mut per_cat = std::collections::BTreeMap::new();
                for &i in members {
                    *per_cat.entry(model.item_category[i]).or_insert(0usize) += 1;
                }
                usize::from(per_cat.iter().any(|(&c, &k)| k > cap[c]))
            })
            .collect();
        let missing: Vec<usize> = model.set_members.iter().map(Vec::len).collect();

        let links: Vec<Vec<Link>> = (0..n)
            .map(|i| {
                let mut v: Vec<Link> = item_sets[i]
                    .iter()
                    .map(|&s| Link {
                        group: model.set_members[s]
                            .iter()
                            .map(|&j| (model.item_category[j], j))
                            .find(|&(d, j)| j != i && cap[d] == 1),
                        set: s,
                    })
                    .collect();
                v.sort_unstable();
                v
            })
            .collect();

        let mut cat_items = vec![Vec::new(); ncat];
        for (i, &c) in model.item_category.iter().enumerate() {
            cat_items[c].push(i);
        }
        let cat_open = cat_items.iter().map(Vec::len).collect();
        let mut search = Search {
            model,
            budget,
            nodes: 0,
            scale,
            order: Vec::new(),
            item_sets,
            links,
            cat_items,
            cap,
            scaled_margin,
            state: vec![State::Open; n],
            missing,
            dead,
            selected: 0,
            cat_selected: vec![0; ncat],
            cat_open,
            value: 0,
            best: None,
            pick: None,
            top: Vec::new(),
            extra: Vec::new(),
        };
        let potential: Vec<i128> = (0..n).map(|i| search.item_bound(i)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            model.item_category[a]
                .cmp(&model.item_category[b])
                .then(potential[b].cmp(&potential[a]))
                .then(a.cmp(&b))
        });
        search.order = order;
        search
    }

    fn part(&self, s: usize) -> i128 {
        if self.dead[s] > 0 || self.missing[s] == 0 {
            0
        } else {
            self.scaled_margin[s] / self.missing[s] as i128
        }
    }

    /// Most that open item `i` can add if picked, scaled.
    fn item_bound(&self, i: usize) -> i128 {
        let links = &self.links[i];
        let mut total = -i128::from(self.model.cost(i)) * self.scale;
        let mut k = 0;
        while k < links.len() {
            let Some((d, _)) = links[k].group else {
                total += self.part(links[k].set);
                k += 1;
                continue;
            };
            let mut best = 0;
            while k < links.len() && links[k].group.is_some_and(|(e, _)| e == d) {
                let member = links[k].group;
                let mut sum = 0;
                while k < links.len() && links[k].group == member {
                    sum += self.part(links[k].set);
                    k += 1;
                }
                best = best.max(sum);
            }
            total += best;
        }
        total
    }

    fn include(&mut self, i: usize) {
        self.state[i] = State::In;
        self.selected += 1;
        let c = self.model.item_category[i];
        self.cat_selected[c] += 1;
        self.cat_open[c] -= 1;
        self.value -= self.model.cost(i);
        for &s in &self.item_sets[i] {
            self.missing[s] -= 1;
            if self.missing[s] == 0 && self.dead[s] == 0 {
                self.value += self.model.margin(s);
            }
        }
    }

    fn undo_include(&mut self, i: usize) {
        for &s in &self.item_sets[i] {
            if self.missing[s] == 0 && self.dead[s] == 0 {
                self.value -= self.model.margin(s);
            }
            self.missing[s] += 1;
        }
        self.value += self.model.cost(i);
        let c = self.model.item_category[i];
        self.cat_selected[c] -= 1;
        self.cat_open[c] += 1;
        self.selected -= 1;
        self.state[i] = State::Open;
    }

    fn exclude(&mut self, i: usize) {
        self.state[i] = State::Out;
        self.cat_open[self.model.item_category[i]] -= 1;
        for &s in &self.item_sets[i] {
            self.dead[s] += 1;
        }
    }

    fn undo_exclude(&mut self, i: usize) {
        for &s in &self.item_sets[i] {
            self.dead[s] -= 1;
        }
        self.cat_open[self.model.item_category[i]] += 1;
        self.state[i] = State::Open;
    }

    /// Upper bound on the objective reachable from this node, scaled by
    /// `self.scale`; `None` when no feasible completion exists.
    fn bound(&mut self) -> Option<i128> {
        let model = self.model;
        let remaining = model.item_max() - self.selected;
        let mut need_total = 0;
        let mut room_total = 0;
        for (c, cat) in model.categories.iter().enumerate() {
            if self.cat_selected[c] > self.cap[c] {
                return None;
            }
            let need = cat.min.saturating_sub(self.cat_selected[c]);
            let room = self.cat_open[c].min(self.cap[c] - self.cat_selected[c]);
            if need > room {
                return None;
            }
            need_total += need;
            room_total += room;
        }
        if need_total > remaining || remaining > room_total {
            return None;
        }
        let mut total = i128::from(self.value) * self.scale;
        if remaining == 0 {
            return Some(total);
        }

        let mut top = std::mem::take(&mut self.top);
        let mut extra = std::mem::take(&mut self.extra);
        extra.clear();
        self.pick = None;
        let mut pick_key = (i128::MIN, 0i128);
        for (c, cat) in model.categories.iter().enumerate() {
            let room = self.cat_open[c].min(self.cap[c] - self.cat_selected[c]);
            if room == 0 {
                continue;
            }
            let need = cat.min.saturating_sub(self.cat_selected[c]);
            top.clear();
            let mut first = (i128::MIN, 0usize);
            let mut second = i128::MIN;
            for &i in &self.cat_items[c] {
                if self.state[i] == State::Open {
                    let b = self.item_bound(i);
                    top.push(b);
                    if b > first.0 {
                        second = first.0;
                        first = (b, i);
                    } else if b > second {
                        second = b;
                    }
                }
            }
            let key = (first.0.saturating_sub(second), first.0);
            if self.pick.is_none() || key > pick_key {
                pick_key = key;
                self.pick = Some(first.1);
            }
            if room < top.len() {
                top.select_nth_unstable_by(room - 1, |a, b| b.cmp(a));
                top.truncate(room);
            }
            top.sort_unstable_by(|a, b| b.cmp(a));
            total += top[..need].iter().sum::<i128>();
            extra.extend_from_slice(&top[need..]);
        }
        let free = remaining - need_total;
        if free > 0 {
            extra.sort_unstable_by(|a, b| b.cmp(a));
            total += extra[..free].iter().sum::<i128>();
        }
        self.top = top;
        self.extra = extra;
        Some(total)
    }

    /// Whether some completion of this node is lexicographically smaller
    /// (as a sorted id list) than the incumbent `best`. Completions are
    /// not checked for feasibility, so `true` may be spurious.
    fn may_beat_on_ties(&self, best: &[bool]) -> bool {
        for (i, st) in self.state.iter().enumerate() {
            match (st, best[i]) {
                (State::Open, false) | (State::In, false) => return true,
                (State::Out, true) => return false,
                _ => {}
            }
        }
        false
    }

    fn record_leaf(&mut self) {
        let mask: Vec<bool> = self.state.iter().map(|s| *s == State::In).collect();
        let better = match &self.best {
            None => true,
            Some((v, m)) => self.value > *v || (self.value == *v && lex_smaller(&mask, m)),
        };
        if better {
            self.best = Some((self.value, mask));
        }
    }

    fn dfs(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::NodeBudget(self.budget));
        }
        let Some(bound) = self.bound() else {
            return Ok(());
        };
        if let Some((best, mask)) = &self.best {
            let best = i128::from(*best) * self.scale;
            if bound < best || (bound == best && !self.may_beat_on_ties(mask)) {
                return Ok(());
            }
        }
        if self.selected == self.model.item_max() {
            self.record_leaf();
            return Ok(());
        }
        let Some(i) = self.pick else {
            return Ok(());
        };

        self.include(i);
        let c = self.model.item_category[i];
        let mut closed = Vec::new();
        if self.cat_selected[c] == self.cap[c] {
            for k in 0..self.cat_items[c].len() {
                let j = self.cat_items[c][k];
                if self.state[j] == State::Open {
                    self.exclude(j);
                    closed.push(j);
                }
            }
        }
        let r = self.dfs();
        for &j in closed.iter().rev() {
            self.undo_exclude(j);
        }
        self.undo_include(i);
        r?;

        self.exclude(i);
        let r = self.dfs();
        self.undo_exclude(i);
        r
    }
}

/// Feasible starting selection: fill each category's minimum, then the
/// remaining count, by static potential; then apply improving single swaps
/// until none is left.
fn local_search(search: &Search<'_>) -> Option<(i64, Vec<bool>)> {
    let model = search.model;
    let n = model.items().len();
    let mut mask = vec![false; n];
    let mut counts = vec![0usize; model.categories.len()];
    for (c, cat) in model.categories.iter().enumerate() {
        for &i in search
            .order
            .iter()
            .filter(|&&i| model.item_category[i] == c)
            .take(cat.min)
        {
            mask[i] = true;
            counts[c] += 1;
        }
    }
    let mut total: usize = counts.iter().sum();
    for &i in &search.order {
        if total == model.item_max() {
            break;
        }
        let c = model.item_category[i];
        if !mask[i] && counts[c] < search.cap[c] {
            mask[i] = true;
            counts[c] += 1;
            total += 1;
        }
    }
    if !model.mask_feasible(&mask) {
        return None;
    }
    let complete = |mask: &[bool], s: usize| model.set_members[s].iter().all(|&j| mask[j]);
    let mut value = model.objective_of(&mask).0;
    loop {
        let mut improved = false;
        for out in 0..n {
            if !mask[out] {
                continue;
            }
            let lost: i64 = search.item_sets[out]
                .iter()
                .filter(|&&s| complete(&mask, s))
                .map(|&s| model.margin(s))
                .sum();
            mask[out] = false;
            let base = value - lost + model.cost(out);
            for inn in 0..n {
                let (co, ci) = (model.item_category[out], model.item_category[inn]);
                if mask[inn]
                    || inn == out
                    || (co != ci
                        && (counts[co] == model.categories[co].min || counts[ci] == search.cap[ci]))
                {
                    continue;
                }
                mask[inn] = true;
                let gained: i64 = search.item_sets[inn]
                    .iter()
                    .filter(|&&s| complete(&mask, s))
                    .map(|&s| model.margin(s))
                    .sum();
                let v = base + gained - model.cost(inn);
                if v > value {
                    value = v;
                    counts[co] -= 1;
                    counts[ci] += 1;
                    improved = true;
                    break;
                }
                mask[inn] = false;
            }
            if improved {
                break;
            }
            mask[out] = true;
        }
        if !improved {
            debug_assert_eq!(model.objective_of(&mask).0, value);
            return Some((value, mask));
        }
    }
}

/// Lexicographic comparison of the sorted index lists encoded by two masks
/// of equal popcount.
fn lex_smaller(a: &[bool], b: &[bool]) -> bool {
    match a.iter().zip(b).find(|(x, y)| x != y) {
        Some((&x, _)) => x,
        None => false,
    }
}
