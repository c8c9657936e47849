//! Weighted recipe DAG and recursive task decomposition.
//!
//! Every obtainable item has exactly one [`Recipe`]. Edges run from each
//! prerequisite (input, fuel, tool, station) to the recipe output, weighted by
//! the exact conversion rate `r / n_out`. [`resolve`] expands an acquisition
//! goal into an ordered, prerequisite-closed [`ResolvedPlan`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::item::{Inventory, ItemId};

/// Deepest prerequisite chain the resolver will follow.
pub const MAX_RESOLVE_DEPTH: usize = 64;

/// The bundled desk-scale recipe corpus.
pub const DESK_CORPUS: &str = include_str!("../data/desk_corpus.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperationKind {
    Mine,
    Craft,
    Smelt,
    Collect,
    /// Obtainable only from the initial inventory.
    Given,
}

impl fmt::Display for OperationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OperationKind::Mine => "mine",
            OperationKind::Craft => "craft",
            OperationKind::Smelt => "smelt",
            OperationKind::Collect => "collect",
            OperationKind::Given => "given",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ingredient {
    pub item: ItemId,
    pub r: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipe {
    pub output: ItemId,
    pub n_out: u32,
    pub kind: OperationKind,
    #[serde(default)]
    pub inputs: Vec<Ingredient>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool: Option<ItemId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub station: Option<ItemId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuel: Option<ItemId>,
    /// Block mined or entity hunted; defaults to the output id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl Recipe {
    pub fn source(&self) -> &str {
        self.source.as_deref().unwrap_or(self.output.as_str())
    }

    /// Consumed prerequisites with their per-operation quantity. Fuel counts
    /// as one unit per operation.
    pub fn consumed(&self) -> impl Iterator<Item = (&ItemId, u32)> {
        self.inputs
            .iter()
            .map(|i| (&i.item, i.r))
            .chain(self.fuel.iter().map(|f| (f, 1)))
    }

    /// Prerequisites that must be held but are not consumed.
    pub fn held(&self) -> impl Iterator<Item = &ItemId> {
        self.tool.iter().chain(self.station.iter())
    }

    /// Every prerequisite item in a fixed order: inputs, fuel, tool, station.
    pub fn prerequisites(&self) -> impl Iterator<Item = &ItemId> {
        self.consumed().map(|(i, _)| i).chain(self.held())
    }

    fn check(&self) -> Result<(), String> {
        if self.output.as_str().is_empty() {
            return Err("empty output id".into());
        }
        if self.n_out == 0 {
            return Err("n_out must be at least 1".into());
        }
        if self.inputs.iter().any(|i| i.r == 0) {
            return Err("input quantities must be at least 1".into());
        }
        if matches!(self.kind, OperationKind::Craft | OperationKind::Smelt) && self.inputs.is_empty()
        {
            return Err(format!("{} recipe without inputs", self.kind));
        }
        if self.kind == OperationKind::Given && (!self.inputs.is_empty() || self.tool.is_some()) {
            return Err("given items take no prerequisites".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed corpus document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate recipe for `{0}`")]
    DuplicateRecipe(ItemId),
    #[error("invalid recipe for `{item}`: {reason}")]
    InvalidRecipe { item: ItemId, reason: String },
    #[error("recipe for `{item}` references unknown item `{missing}`")]
    UnknownPrerequisite { item: ItemId, missing: ItemId },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("`{0}` cannot be obtained: no recipe and not enough in inventory")]
    Unresolvable(ItemId),
    #[error("prerequisite chain below `{0}` exceeds depth {MAX_RESOLVE_DEPTH}")]
    DepthExceeded(ItemId),
    #[error("recipe cycle through {0:?}")]
    Cycle(Vec<ItemId>),
    #[error("goal count must be at least 1")]
    ZeroCount,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{input}` is not consumed by the recipe for `{output}`")]
pub struct NotAnInput {
    pub output: ItemId,
    pub input: ItemId,
}

/// Atomic acquisition task `(t, c, f)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskVertex {
    pub item: ItemId,
    pub count: u32,
    pub kind: OperationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub task: TaskVertex,
    /// Recipe applications needed; produces `operations * n_out` units.
    pub operations: u32,
}

/// Ordered plan; every step's prerequisites are produced by earlier steps or
/// already held. Empty when the goal is already satisfied.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedPlan {
    pub steps: Vec<PlanStep>,
}

impl ResolvedPlan {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_operations(&self) -> u64 {
        self.steps.iter().map(|s| u64::from(s.operations)).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecipeGraph {
    recipes: BTreeMap<ItemId, Recipe>,
}

impl RecipeGraph {
    pub fn from_recipes(recipes: Vec<Recipe>) -> Result<Self, CorpusError> {
        let mut map = BTreeMap::new();
        for recipe in recipes {
            recipe
                .check()
                .map_err(|reason| CorpusError::InvalidRecipe {
                    item: recipe.output.clone(),
                    reason,
                })?;
            let key = recipe.output.clone();
            if map.insert(key.clone(), recipe).is_some() {
                return Err(CorpusError::DuplicateRecipe(key));
            }
        }
        for recipe in map.values() {
            if let Some(missing) = recipe.prerequisites().find(|p| !map.contains_key(p.as_str())) {
                return Err(CorpusError::UnknownPrerequisite {
                    item: recipe.output.clone(),
                    missing: missing.clone(),
                });
            }
        }
        Ok(Self { recipes: map })
    }

    pub fn desk() -> Self {
        load_corpus(DESK_CORPUS).expect("bundled corpus is well formed")
    }

    pub fn recipe(&self, item: &str) -> Option<&Recipe> {
        self.recipes.get(item)
    }

    pub fn recipes(&self) -> impl Iterator<Item = &Recipe> {
        self.recipes.values()
    }

    pub fn items(&self) -> impl Iterator<Item = &ItemId> {
        self.recipes.keys()
    }

    pub fn len(&self) -> usize {
        self.recipes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recipes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.recipes.values().map(|r| r.prerequisites().count()).sum()
    }

    /// Recipe mining `block`, if any.
    pub fn mined_from(&self, block: &str) -> Option<&Recipe> {
        self.recipes
            .values()
            .find(|r| r.kind == OperationKind::Mine && r.source() == block)
    }

    /// Recipes whose drops come from killing an entity of `kind`.
    pub fn drops_of<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a Recipe> + 'a {
        self.recipes
            .values()
            .filter(move |r| r.kind == OperationKind::Collect && r.source() == kind)
    }

    /// Length of the longest prerequisite chain below `item`; raw items are 0.
    pub fn dependency_depth(&self, item: &str) -> Option<usize> {
        fn go(g: &RecipeGraph, item: &str, memo: &mut BTreeMap<String, usize>, depth: usize) -> Option<usize> {
            if depth > MAX_RESOLVE_DEPTH {
                return None;
            }
            if let Some(&d) = memo.get(item) {
                return Some(d);
            }
            let recipe = g.recipe(item)?;
            let mut best = None;
            for p in recipe.prerequisites() {
                let d = go(g, p.as_str(), memo, depth + 1)?;
                best = Some(best.map_or(d, |b: usize| b.max(d)));
            }
            let d = best.map_or(0, |b| b + 1);
            memo.insert(item.to_owned(), d);
            Some(d)
        }
        go(self, item, &mut BTreeMap::new(), 0)
    }
}

/// Parses a corpus document: a JSON list of recipe objects.
pub fn load_corpus(text: &str) -> Result<RecipeGraph, CorpusError> {
    let recipes: Vec<Recipe> = serde_json::from_str(text)?;
    RecipeGraph::from_recipes(recipes)
}

/// Checks that the prerequisite relation is acyclic. On failure returns one
/// witness cycle, first item repeated at the end.
pub fn validate_dag(graph: &RecipeGraph) -> Result<(), Vec<ItemId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: BTreeMap<&ItemId, Mark> = BTreeMap::new();
    for root in graph.items() {
        if marks.contains_key(root) {
            continue;
        }
        // Iterative DFS; each frame holds the item and its next child index.
        let mut stack: Vec<(&ItemId, usize)> = vec![(root, 0)];
        marks.insert(root, Mark::Open);
        while let Some(&mut (item, ref mut next)) = stack.last_mut() {
            let prereqs: Vec<&ItemId> = graph
                .recipe(item.as_str())
                .map(|r| r.prerequisites().collect())
                .unwrap_or_default();
            if *next < prereqs.len() {
                let child = prereqs[*next];
                *next += 1;
                match marks.get(child) {
                    Some(Mark::Open) => {
                        let start = stack.iter().position(|(i, _)| *i == child).unwrap_or(0);
                        let mut cycle: Vec<ItemId> =
                            stack[start..].iter().map(|(i, _)| (*i).clone()).collect();
                        cycle.push(child.clone());
                        return Err(cycle);
                    }
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(child, Mark::Open);
                        stack.push((child, 0));
                    }
                }
            } else {
                marks.insert(item, Mark::Done);
                stack.pop();
            }
        }
    }
    Ok(())
}

/// Exact material conversion rate `r / n_out` of `input` into the recipe output.
pub fn conversion_rate(recipe: &Recipe, input: &str) -> Result<Ratio<u32>, NotAnInput> {
    recipe
        .consumed()
        .find(|(item, _)| item.as_str() == input)
        .map(|(_, r)| Ratio::new(r, recipe.n_out))
        .ok_or_else(|| NotAnInput {
            output: recipe.output.clone(),
            input: ItemId::from(input),
        })
}

/// `ceil(rate * c)`.
pub fn required_quantity(rate: Ratio<u32>, c: u32) -> u32 {
    let scaled = Ratio::new(u64::from(*rate.numer()), u64::from(*rate.denom())) * u64::from(c);
    scaled.ceil().to_u32().unwrap_or(u32::MAX)
}

/// Expands `goal` into an ordered plan against `inventory`.
///
/// Demand is aggregated per item across all consumers before the item itself
/// is expanded, so a shared intermediate appears once with its summed count.
/// Tools and stations are demanded once and never consumed; fuel is consumed
/// once per smelt. Inputs are provisioned per whole operation.
pub fn resolve(
    graph: &RecipeGraph,
    goal: &TaskVertex,
    inventory: &Inventory,
) -> Result<ResolvedPlan, ResolveError> {
    if goal.count == 0 {
        return Err(ResolveError::ZeroCount);
    }
    if inventory.count(goal.item.as_str()) >= goal.count {
        return Ok(ResolvedPlan::default());
    }
    if graph.recipe(goal.item.as_str()).is_none() {
        return Err(ResolveError::Unresolvable(goal.item.clone()));
    }

    let order = topological_closure(graph, &goal.item)?;

    let mut consumed: BTreeMap<&ItemId, u64> = BTreeMap::new();
    let mut held: BTreeSet<&ItemId> = BTreeSet::new();
    consumed.insert(&goal.item, u64::from(goal.count));

    let mut steps = Vec::new();
    // Consumers come after their prerequisites in `order`; walk it backwards so
    // every item sees its full aggregated demand before being expanded.
    for item in order.iter().rev() {
        let demand = consumed.get(item).copied().unwrap_or(0) + u64::from(held.contains(item));
        let need = demand.saturating_sub(u64::from(inventory.count(item.as_str())));
        if need == 0 {
            continue;
        }
        let recipe = match graph.recipe(item.as_str()) {
            Some(r) if r.kind != OperationKind::Given => r,
            _ => return Err(ResolveError::Unresolvable((*item).clone())),
        };
        let ops = need.div_ceil(u64::from(recipe.n_out));
        for (input, r) in recipe.consumed() {
            *consumed.entry(input).or_insert(0) += ops * u64::from(r);
        }
        held.extend(recipe.held());
        steps.push(PlanStep {
            task: TaskVertex {
                item: (*item).clone(),
                count: u32::try_from(need).unwrap_or(u32::MAX),
                kind: recipe.kind,
            },
            operations: u32::try_from(ops).unwrap_or(u32::MAX),
        });
    }
    steps.reverse();
    Ok(ResolvedPlan { steps })
}

/// Goal closure in dependency order: every item appears after all of its
/// prerequisites.
fn topological_closure<'g>(graph: &'g RecipeGraph, goal: &ItemId) -> Result<Vec<&'g ItemId>, ResolveError> {
    fn visit<'g>(
        graph: &'g RecipeGraph,
        item: &'g ItemId,
        path: &mut Vec<&'g ItemId>,
        done: &mut BTreeSet<&'g ItemId>,
        order: &mut Vec<&'g ItemId>,
    ) -> Result<(), ResolveError> {
        if done.contains(item) {
            return Ok(());
        }
        if let Some(pos) = path.iter().position(|p| *p == item) {
            let mut cycle: Vec<ItemId> = path[pos..].iter().map(|i| (*i).clone()).collect();
            cycle.push(item.clone());
            return Err(ResolveError::Cycle(cycle));
        }
        if path.len() >= MAX_RESOLVE_DEPTH {
            return Err(ResolveError::DepthExceeded(item.clone()));
        }
        path.push(item);
        if let Some(recipe) = graph.recipe(item.as_str()) {
            for p in recipe.prerequisites() {
                visit(graph, p, path, done, order)?;
            }
        }
        path.pop();
        done.insert(item);
        order.push(item);
        Ok(())
    }
    let root = graph
        .recipes
        .get_key_value(goal.as_str())
        .map(|(k, _)| k)
        .ok_or_else(|| ResolveError::Unresolvable(goal.clone()))?;
    let mut order = Vec::new();
    visit(graph, root, &mut Vec::new(), &mut BTreeSet::new(), &mut order)?;
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recipe(output: &str, n_out: u32, kind: OperationKind, inputs: &[(&str, u32)]) -> Recipe {
        Recipe {
            output: output.into(),
            n_out,
            kind,
            inputs: inputs
                .iter()
                .map(|(i, r)| Ingredient { item: (*i).into(), r: *r })
                .collect(),
            tool: None,
            station: None,
            fuel: None,
            source: None,
        }
    }

    fn planks_graph() -> RecipeGraph {
        RecipeGraph::from_recipes(vec![
            recipe("log", 1, OperationKind::Mine, &[]),
            recipe("plank", 4, OperationKind::Craft, &[("log", 1)]),
        ])
        .unwrap()
    }

    fn goal(item: &str, count: u32, kind: OperationKind) -> TaskVertex {
        TaskVertex { item: item.into(), count, kind }
    }

    #[test]
    fn single_recipe_corpus() {
        let g = load_corpus(r#"[{"output":"log","n_out":1,"kind":"mine","inputs":[]}]"#).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn duplicate_recipe_rejected() {
        let text = r#"[{"output":"log","n_out":1,"kind":"mine"},
                       {"output":"log","n_out":2,"kind":"mine"}]"#;
        assert!(matches!(load_corpus(text), Err(CorpusError::DuplicateRecipe(i)) if i == "log"));
    }

    #[test]
    fn malformed_and_dangling_documents_rejected() {
        assert!(matches!(load_corpus("{"), Err(CorpusError::Parse(_))));
        let text = r#"[{"output":"plank","n_out":4,"kind":"craft","inputs":[{"item":"log","r":1}]}]"#;
        assert!(matches!(load_corpus(text), Err(CorpusError::UnknownPrerequisite { .. })));
        let text = r#"[{"output":"plank","n_out":0,"kind":"mine"}]"#;
        assert!(matches!(load_corpus(text), Err(CorpusError::InvalidRecipe { .. })));
    }

    #[test]
    fn validate_dag_reports_witness_cycle() {
        let ok = RecipeGraph::from_recipes(vec![
            recipe("a", 1, OperationKind::Craft, &[("b", 1)]),
            recipe("b", 1, OperationKind::Mine, &[]),
        ])
        .unwrap();
        assert_eq!(validate_dag(&ok), Ok(()));

        let cyclic = RecipeGraph::from_recipes(vec![
            recipe("a", 1, OperationKind::Craft, &[("b", 1)]),
            recipe("b", 1, OperationKind::Craft, &[("a", 1)]),
        ])
        .unwrap();
        let ids: Vec<ItemId> = ["a", "b", "a"].into_iter().map(ItemId::from).collect();
        assert_eq!(validate_dag(&cyclic), Err(ids));
    }

    #[test]
    fn conversion_rates_are_exact() {
        let r = recipe("plank", 4, OperationKind::Craft, &[("log", 1)]);
        assert_eq!(conversion_rate(&r, "log").unwrap(), Ratio::new(1, 4));
        let r = recipe("x", 1, OperationKind::Craft, &[("y", 3)]);
        assert_eq!(conversion_rate(&r, "y").unwrap(), Ratio::from_integer(3));
        let r = recipe("x", 4, OperationKind::Craft, &[("y", 2)]);
        assert_eq!(conversion_rate(&r, "y").unwrap(), Ratio::new(1, 2));
        assert!(conversion_rate(&r, "z").is_err());
    }

    #[test]
    fn required_quantity_rounds_up() {
        assert_eq!(required_quantity(Ratio::new(1, 4), 4), 1);
        assert_eq!(required_quantity(Ratio::new(1, 4), 2), 1);
        assert_eq!(required_quantity(Ratio::from_integer(3), 2), 6);
    }

    #[test]
    fn satisfied_goal_resolves_to_empty_plan() {
        let g = planks_graph();
        let inv: Inventory = [("plank", 5)].into_iter().collect();
        let plan = resolve(&g, &goal("plank", 3, OperationKind::Craft), &inv).unwrap();
        assert!(plan.is_empty());
    }

    #[test]
    fn planks_from_empty_inventory() {
        let g = planks_graph();
        let plan = resolve(&g, &goal("plank", 4, OperationKind::Craft), &Inventory::new()).unwrap();
        let shape: Vec<(&str, OperationKind, u32)> = plan
            .steps
            .iter()
            .map(|s| (s.task.item.as_str(), s.task.kind, s.operations))
            .collect();
        assert_eq!(
            shape,
            vec![("log", OperationKind::Mine, 1), ("plank", OperationKind::Craft, 1)]
        );
    }

    #[test]
    fn inputs_provisioned_per_whole_operation() {
        // 5 sticks need two operations, hence 4 planks, not ceil(2/4 * 5) = 3.
        let g = RecipeGraph::from_recipes(vec![
            recipe("plank", 1, OperationKind::Mine, &[]),
            recipe("stick", 4, OperationKind::Craft, &[("plank", 2)]),
        ])
        .unwrap();
        let plan = resolve(&g, &goal("stick", 5, OperationKind::Craft), &Inventory::new()).unwrap();
        assert_eq!(plan.steps[0].task.item, "plank");
        assert_eq!(plan.steps[0].task.count, 4);
    }

    #[test]
    fn shared_intermediates_are_aggregated() {
        let g = RecipeGraph::from_recipes(vec![
            recipe("a", 1, OperationKind::Mine, &[]),
            recipe("b", 1, OperationKind::Craft, &[("a", 2)]),
            recipe("c", 1, OperationKind::Craft, &[("a", 3), ("b", 1)]),
        ])
        .unwrap();
        let plan = resolve(&g, &goal("c", 1, OperationKind::Craft), &Inventory::new()).unwrap();
        let a_steps: Vec<_> = plan.steps.iter().filter(|s| s.task.item == "a").collect();
        assert_eq!(a_steps.len(), 1);
        assert_eq!(a_steps[0].task.count, 5);
    }

    #[test]
    fn station_precedes_tool_precedes_goal() {
        let g = RecipeGraph::desk();
        let plan = resolve(&g, &goal("stone_pickaxe", 1, OperationKind::Craft), &Inventory::new()).unwrap();
        let pos = |item: &str| plan.steps.iter().position(|s| s.task.item == item).unwrap();
        assert!(pos("crafting_table") < pos("wooden_pickaxe"));
        assert!(pos("wooden_pickaxe") < pos("cobblestone"));
        assert!(pos("cobblestone") < pos("stone_pickaxe"));
        assert_eq!(plan.steps.last().unwrap().task.item, "stone_pickaxe");
    }

    #[test]
    fn given_items_must_be_held() {
        let g = RecipeGraph::desk();
        let err = resolve(&g, &goal("ender_eye", 1, OperationKind::Craft), &Inventory::new()).unwrap_err();
        assert!(matches!(err, ResolveError::Unresolvable(_)));
        let inv: Inventory = [("ender_pearl", 1), ("blaze_rod", 1)].into_iter().collect();
        let plan = resolve(&g, &goal("ender_eye", 1, OperationKind::Craft), &inv).unwrap();
        assert_eq!(plan.steps.len(), 2);
    }

    #[test]
    fn unknown_goal_is_unresolvable() {
        let g = planks_graph();
        let err = resolve(&g, &goal("diamond", 1, OperationKind::Mine), &Inventory::new()).unwrap_err();
        assert_eq!(err, ResolveError::Unresolvable("diamond".into()));
    }

    #[test]
    fn cyclic_graph_fails_cleanly() {
        let g = RecipeGraph::from_recipes(vec![
            recipe("a", 1, OperationKind::Craft, &[("b", 1)]),
            recipe("b", 1, OperationKind::Craft, &[("a", 1)]),
        ])
        .unwrap();
        let err = resolve(&g, &goal("a", 1, OperationKind::Craft), &Inventory::new()).unwrap_err();
        assert!(matches!(err, ResolveError::Cycle(_)));
    }

    #[test]
    fn deep_chains_hit_the_depth_bound() {
        let mut recipes = vec![recipe("i0", 1, OperationKind::Mine, &[])];
        for k in 1..=70 {
            let prev = format!("i{}", k - 1);
            recipes.push(recipe(&format!("i{k}"), 1, OperationKind::Craft, &[(prev.as_str(), 1)]));
        }
        let g = RecipeGraph::from_recipes(recipes).unwrap();
        let err = resolve(&g, &goal("i70", 1, OperationKind::Craft), &Inventory::new()).unwrap_err();
        assert!(matches!(err, ResolveError::DepthExceeded(_)));
    }

    #[test]
    fn desk_corpus_shape() {
        let g = RecipeGraph::desk();
        assert!(g.len() >= 60);
        assert_eq!(validate_dag(&g), Ok(()));
        let max_depth = g.items().filter_map(|i| g.dependency_depth(i.as_str())).max().unwrap();
        assert!(max_depth >= 5);
        for kind in [OperationKind::Mine, OperationKind::Craft, OperationKind::Smelt, OperationKind::Collect] {
            assert!(g.recipes().any(|r| r.kind == kind));
        }
    }
}
