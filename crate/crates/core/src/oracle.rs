//! Independent reference checkers for tests. None of these call into the
//! resolver or the runtime schedule they are used to check.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use crate::crafting_graph::{OperationKind, RecipeGraph, ResolvedPlan};
use crate::item::Inventory;

/// Per-item count ceiling inside the search. Far above any desk-scale demand.
const COUNT_CAP: u32 = 64;

/// Breadth-first feasibility search over (inventory, recipe application).
///
/// Items whose whole prerequisite closure avoids `given` items can be produced
/// without limit from the world, so they are dropped from the state; the search
/// runs over the remaining scarce items only.
pub fn bfs_feasible(graph: &RecipeGraph, goal: &str, count: u32, inventory: &Inventory) -> bool {
    if inventory.count(goal) >= count {
        return true;
    }
    if graph.recipe(goal).is_none() {
        return false;
    }

    let mut relevant: BTreeSet<String> = BTreeSet::new();
    let mut queue = VecDeque::from([goal.to_owned()]);
    while let Some(item) = queue.pop_front() {
        if !relevant.insert(item.clone()) {
            continue;
        }
        if let Some(r) = graph.recipe(&item) {
            queue.extend(r.prerequisites().map(|p| p.as_str().to_owned()));
        }
    }

    let mut unlimited: BTreeSet<String> = BTreeSet::new();
    loop {
        let before = unlimited.len();
        for item in &relevant {
            if unlimited.contains(item) {
                continue;
            }
            let Some(r) = graph.recipe(item) else { continue };
            if r.kind != OperationKind::Given
                && r.prerequisites().all(|p| unlimited.contains(p.as_str()))
            {
                unlimited.insert(item.clone());
            }
        }
        if unlimited.len() == before {
            break;
        }
    }
    if unlimited.contains(goal) {
        return true;
    }

    let scarce: Vec<&String> = relevant.iter().filter(|i| !unlimited.contains(*i)).collect();
    let index: BTreeMap<&str, usize> = scarce.iter().enumerate().map(|(k, i)| (i.as_str(), k)).collect();
    let goal_ix = index[goal];

    let start: Vec<u32> = scarce.iter().map(|i| inventory.count(i).min(COUNT_CAP)).collect();
    let mut seen: HashSet<Vec<u32>> = HashSet::from([start.clone()]);
    let mut frontier = VecDeque::from([start]);
    while let Some(state) = frontier.pop_front() {
        if state[goal_ix] >= count {
            return true;
        }
        for (k, item) in scarce.iter().enumerate() {
            let Some(r) = graph.recipe(item) else { continue };
            if r.kind == OperationKind::Given {
                continue;
            }
            let mut next = state.clone();
            let held_ok = r.held().all(|h| match index.get(h.as_str()) {
                Some(&j) => state[j] >= 1,
                None => true,
            });
            if !held_ok {
                continue;
            }
            let mut ok = true;
            for (input, need) in r.consumed() {
                if let Some(&j) = index.get(input.as_str()) {
                    if next[j] < need {
                        ok = false;
                        break;
                    }
                    next[j] -= need;
                }
            }
            if !ok {
                continue;
            }
            next[k] = (next[k] + r.n_out).min(COUNT_CAP);
            if seen.insert(next.clone()) {
                frontier.push_back(next);
            }
        }
    }
    false
}

/// Replays `plan` one recipe application at a time, checking every
/// prerequisite. Returns the final inventory or the first violation.
pub fn replay_plan(graph: &RecipeGraph, plan: &ResolvedPlan, inventory: &Inventory) -> Result<Inventory, String> {
    let mut inv = inventory.clone();
    for step in &plan.steps {
        let recipe = graph
            .recipe(step.task.item.as_str())
            .ok_or_else(|| format!("no recipe for {}", step.task.item))?;
        for _ in 0..step.operations {
            for h in recipe.held() {
                if inv.count(h.as_str()) == 0 {
                    return Err(format!("{} needs {} held", recipe.output, h));
                }
            }
            for (input, r) in recipe.consumed() {
                if !inv.remove(input.as_str(), r) {
                    return Err(format!("{} short of {}", recipe.output, input));
                }
            }
            inv.add(&recipe.output, recipe.n_out);
        }
    }
    Ok(inv)
}
