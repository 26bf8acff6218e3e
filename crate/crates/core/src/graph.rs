//! Feedback graphs derived from the variance matrix, observability classes,
//! and the combinatorial quantities that drive the minimax rates.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::GraphError;
use crate::lp::{LinearProgram, Relation};
use crate::model::VarianceMatrix;

/// Largest instance handled by the exact independence/domination searches.
pub const EXACT_LIMIT: usize = 24;

/// A set of action indices, stored as a bit mask (at most 64 actions).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionSet(u64);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);

    pub fn from_bits(bits: u64) -> Self {
        ActionSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(i: usize) -> Self {
        ActionSet(1 << i)
    }

    /// `{0, .., k-1}`.
    pub fn full(k: usize) -> Self {
        if k >= 64 {
            ActionSet(u64::MAX)
        } else {
            ActionSet((1u64 << k) - 1)
        }
    }

    pub fn contains(self, i: usize) -> bool {
        i < 64 && self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn remove(&mut self, i: usize) {
        self.0 &= !(1 << i);
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        ActionSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        ActionSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        ActionSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Lowest member, if any.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(i)
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl FromIterator<usize> for ActionSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = ActionSet::EMPTY;
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl fmt::Debug for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for ActionSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

/// Observation sets `S_i = { j : sigma_ij < inf }`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackGraph {
    obs: Vec<ActionSet>,
    /// `observers[j] = { i : j ∈ S_i }`.
    observers: Vec<ActionSet>,
}

impl FeedbackGraph {
    /// Builds the graph from observation sets. Every action must be observed
    /// by at least one action.
    pub fn new(obs: Vec<ActionSet>) -> Result<Self, GraphError> {
        let k = obs.len();
        let mut observers = vec![ActionSet::EMPTY; k];
        for (i, s) in obs.iter().enumerate() {
            for j in s.iter() {
                if j >= k {
                    return Err(GraphError::Unobservable(j));
                }
                observers[j].insert(i);
            }
        }
        if let Some(j) = observers.iter().position(|o| o.is_empty()) {
            return Err(GraphError::Unobservable(j));
        }
        Ok(Self { obs, observers })
    }

    /// Derives `S_i` from the finite/infinite pattern of `sigma`.
    pub fn from_sigma(sigma: &VarianceMatrix) -> Result<Self, GraphError> {
        if let Some(e) = sigma.issues().into_iter().next() {
            return Err(e.into());
        }
        let obs = sigma
            .rows()
            .iter()
            .map(|row| row.iter().enumerate().filter(|(_, s)| s.is_finite()).map(|(j, _)| j).collect())
            .collect();
        Self::new(obs)
    }

    /// Convenience for tests and examples: observation sets from index lists.
    pub fn from_lists(lists: &[&[usize]]) -> Result<Self, GraphError> {
        Self::new(lists.iter().map(|l| l.iter().copied().collect()).collect())
    }

    pub fn k(&self) -> usize {
        self.obs.len()
    }

    pub fn all(&self) -> ActionSet {
        ActionSet::full(self.k())
    }

    pub fn observation_set(&self, i: usize) -> ActionSet {
        self.obs[i]
    }

    pub fn observation_sets(&self) -> &[ActionSet] {
        &self.obs
    }

    /// Actions whose play reveals `j`.
    pub fn observers(&self, j: usize) -> ActionSet {
        self.observers[j]
    }

    pub fn is_full_information(&self) -> bool {
        self.obs.iter().all(|s| *s == self.all())
    }

    pub fn is_bandit(&self) -> bool {
        self.obs.iter().enumerate().all(|(i, s)| *s == ActionSet::singleton(i))
    }

    /// Strong observability: a self-loop, or observed by every other action.
    pub fn is_strongly_observable(&self, i: usize) -> bool {
        let others = self.all().difference(ActionSet::singleton(i));
        self.obs[i].contains(i) || others.is_subset(self.observers[i])
    }

    /// Independence in the directed sense: `S_i ∩ A ⊆ {i}` for all `i ∈ A`.
    pub fn is_independent(&self, set: ActionSet) -> bool {
        set.iter()
            .all(|i| self.obs[i].intersection(set).is_subset(ActionSet::singleton(i)))
    }

    /// Whether every member of `target` is observed by some member of `by`.
    pub fn dominates(&self, by: ActionSet, target: ActionSet) -> bool {
        target.iter().all(|j| !self.observers[j].intersection(by).is_empty())
    }

    /// Symmetrized conflict relation used by the independence search.
    fn conflicts(&self) -> Vec<u64> {
        (0..self.k())
            .map(|i| self.obs[i].union(self.observers[i]).difference(ActionSet::singleton(i)).bits())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    StronglyObservable,
    WeaklyObservable,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::StronglyObservable => "StronglyObservable",
            Regime::WeaklyObservable => "WeaklyObservable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphReport {
    pub strong_actions: ActionSet,
    pub weak_actions: ActionSet,
    pub independence_number: usize,
    pub independent_witness: ActionSet,
    /// Zero when there are no weakly observable actions.
    pub weak_domination_number: usize,
    pub dominating_witness: ActionSet,
    pub regime: Regime,
    /// False when the graph exceeded [`EXACT_LIMIT`] and greedy estimates were used.
    pub exact: bool,
}

/// Derives observability classes, `kappa` and `rho`.
pub fn classify(graph: &FeedbackGraph) -> GraphReport {
    let mut strong = ActionSet::EMPTY;
    for i in 0..graph.k() {
        if graph.is_strongly_observable(i) {
            strong.insert(i);
        }
    }
    let weak = graph.all().difference(strong);
    let exact = graph.k() <= EXACT_LIMIT;
    let (kappa, kappa_witness) = if exact {
        exact_independent(graph, graph.all())
    } else {
        greedy_independent(graph, graph.all())
    };
    let (rho, rho_witness) = if weak.is_empty() {
        (0, ActionSet::EMPTY)
    } else if exact {
        exact_dominating(graph, weak)
    } else {
        greedy_dominating(graph, weak)
    };
    GraphReport {
        strong_actions: strong,
        weak_actions: weak,
        independence_number: kappa,
        independent_witness: kappa_witness,
        weak_domination_number: rho,
        dominating_witness: rho_witness,
        regime: if weak.is_empty() {
            Regime::StronglyObservable
        } else {
            Regime::WeaklyObservable
        },
        exact,
    }
}

/// Exact `kappa` and a maximum independent set.
pub fn independence_number(graph: &FeedbackGraph) -> Result<(usize, ActionSet), GraphError> {
    guard(graph.k())?;
    Ok(exact_independent(graph, graph.all()))
}

/// Exact `rho` and a minimum set dominating the weakly observable actions.
pub fn weak_domination_number(graph: &FeedbackGraph) -> Result<(usize, ActionSet), GraphError> {
    guard(graph.k())?;
    let weak: ActionSet = (0..graph.k()).filter(|&i| !graph.is_strongly_observable(i)).collect();
    if weak.is_empty() {
        return Ok((0, ActionSet::EMPTY));
    }
    Ok(exact_dominating(graph, weak))
}

/// A maximum independent subset of `within`.
pub fn max_independent_subset(graph: &FeedbackGraph, within: ActionSet) -> Result<ActionSet, GraphError> {
    guard(within.len())?;
    Ok(exact_independent(graph, within).1)
}

/// Greedy independent subset of `within` (minimum remaining degree first).
pub fn greedy_independent_subset(graph: &FeedbackGraph, within: ActionSet) -> ActionSet {
    greedy_independent(graph, within).1
}

fn guard(size: usize) -> Result<(), GraphError> {
    if size > EXACT_LIMIT {
        Err(GraphError::SizeLimit {
            size,
            limit: EXACT_LIMIT,
        })
    } else {
        Ok(())
    }
}

fn exact_independent(graph: &FeedbackGraph, within: ActionSet) -> (usize, ActionSet) {
    fn search(cand: u64, adj: &[u64], current: u64, best: &mut u64) {
        if cand == 0 {
            if current.count_ones() > best.count_ones() {
                *best = current;
            }
            return;
        }
        if current.count_ones() + cand.count_ones() <= best.count_ones() {
            return;
        }
        let mut v = usize::MAX;
        let mut v_deg = u32::MAX;
        for u in ActionSet(cand).iter() {
            let d = (adj[u] & cand).count_ones();
            if d < v_deg {
                v = u;
                v_deg = d;
            }
        }
        let bit = 1u64 << v;
        // A vertex of degree at most one always belongs to some maximum set.
        search(cand & !(adj[v] | bit), adj, current | bit, best);
        if v_deg >= 2 {
            search(cand & !bit, adj, current, best);
        }
    }

    let adj = graph.conflicts();
    let mut best = greedy_independent(graph, within).1.bits();
    search(within.bits(), &adj, 0, &mut best);
    (best.count_ones() as usize, ActionSet(best))
}

fn greedy_independent(graph: &FeedbackGraph, within: ActionSet) -> (usize, ActionSet) {
    let adj = graph.conflicts();
    let mut cand = within.bits();
    let mut chosen = 0u64;
    while cand != 0 {
        let v = ActionSet(cand)
            .iter()
            .min_by_key(|&u| (adj[u] & cand).count_ones())
            .expect("nonempty candidate set");
        chosen |= 1 << v;
        cand &= !(adj[v] | 1 << v);
    }
    (chosen.count_ones() as usize, ActionSet(chosen))
}

fn exact_dominating(graph: &FeedbackGraph, target: ActionSet) -> (usize, ActionSet) {
    struct Search<'a> {
        covers: &'a [u64],
        observers: &'a [ActionSet],
        best: u64,
    }

    impl Search<'_> {
        fn run(&mut self, uncovered: u64, chosen: u64) {
            if uncovered == 0 {
                if chosen.count_ones() < self.best.count_ones() {
                    self.best = chosen;
                }
                return;
            }
            let max_cover = self.covers.iter().map(|c| (c & uncovered).count_ones()).max().unwrap_or(0);
            if max_cover == 0 {
                return;
            }
            let lower = uncovered.count_ones().div_ceil(max_cover);
            if chosen.count_ones() + lower >= self.best.count_ones() {
                return;
            }
            // Branch on the uncovered element with the fewest observers.
            let e = ActionSet(uncovered)
                .iter()
                .min_by_key(|&j| self.observers[j].len())
                .expect("nonempty");
            for i in self.observers[e].iter() {
                self.run(uncovered & !self.covers[i], chosen | 1 << i);
            }
        }
    }

    let covers: Vec<u64> = graph.obs.iter().map(|s| s.bits() & target.bits()).collect();
    let (_, greedy) = greedy_dominating(graph, target);
    let mut search = Search {
        covers: &covers,
        observers: &graph.observers,
        best: greedy.bits(),
    };
    search.run(target.bits(), 0);
    (search.best.count_ones() as usize, ActionSet(search.best))
}

fn greedy_dominating(graph: &FeedbackGraph, target: ActionSet) -> (usize, ActionSet) {
    let mut uncovered = target;
    let mut chosen = ActionSet::EMPTY;
    while !uncovered.is_empty() {
        let (i, _) = graph
            .obs
            .iter()
            .enumerate()
            .max_by(|(a, sa), (b, sb)| {
                sa.intersection(uncovered)
                    .len()
                    .cmp(&sb.intersection(uncovered).len())
                    .then(b.cmp(a))
            })
            .expect("nonempty graph");
        chosen.insert(i);
        uncovered = uncovered.difference(graph.obs[i]);
    }
    (chosen.len(), chosen)
}

/// Maximin exploration allocation over `a_set` covering `a_prime`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximinAllocation {
    /// K-vector supported on the allocating set, summing to one.
    pub allocation: Vec<f64>,
    /// Smallest coverage `sum_{j: i ∈ S_j} c_j` over the covered set; `+inf` for an empty target.
    pub value: f64,
}

const SUPPORT_TOL: f64 = 1e-12;

/// Minimum over `target` of the coverage the allocation provides.
pub fn coverage(graph: &FeedbackGraph, allocation: &[f64], target: ActionSet) -> f64 {
    target
        .iter()
        .map(|i| graph.observers(i).iter().map(|j| allocation[j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Solves `max_{c ∈ simplex(a_set)} min_{i ∈ a_prime} sum_{j ∈ a_set : i ∈ S_j} c_j`.
///
/// An empty `a_prime` yields the uniform allocation with value `+inf`; a target
/// that `a_set` cannot observe yields the uniform allocation with value 0.
pub fn maximin_allocation(
    graph: &FeedbackGraph,
    a_set: ActionSet,
    a_prime: ActionSet,
) -> Result<MaximinAllocation, GraphError> {
    if a_set.is_empty() {
        return Err(GraphError::EmptySet);
    }
    let k = graph.k();
    let uniform = || {
        let mut c = vec![0.0; k];
        let w = 1.0 / a_set.len() as f64;
        for j in a_set.iter() {
            c[j] = w;
        }
        c
    };
    if a_prime.is_empty() {
        return Ok(MaximinAllocation {
            allocation: uniform(),
            value: f64::INFINITY,
        });
    }
    if a_prime.iter().any(|i| graph.observers(i).intersection(a_set).is_empty()) {
        return Ok(MaximinAllocation {
            allocation: uniform(),
            value: 0.0,
        });
    }

    let members = a_set.to_vec();
    let n = members.len() + 1;
    let mut objective = vec![0.0; n];
    objective[n - 1] = 1.0;
    let mut lp = LinearProgram::maximize(objective);
    let mut simplex = vec![1.0; n];
    simplex[n - 1] = 0.0;
    lp.constrain(simplex, Relation::Eq, 1.0);
    for i in a_prime.iter() {
        let mut row: Vec<f64> = members
            .iter()
            .map(|&j| if graph.observation_set(j).contains(i) { 1.0 } else { 0.0 })
            .collect();
        row.push(-1.0);
        lp.constrain(row, Relation::Ge, 0.0);
    }
    let sol = lp.solve()?;
    if !sol.is_optimal() {
        return Err(GraphError::Lp(crate::lp::LpError::NonFinite));
    }
    let mut allocation = vec![0.0; k];
    for (idx, &j) in members.iter().enumerate() {
        let v = sol.primal[idx];
        allocation[j] = if v < SUPPORT_TOL { 0.0 } else { v };
    }
    let total: f64 = allocation.iter().sum();
    for v in allocation.iter_mut() {
        *v /= total;
    }
    let value = coverage(graph, &allocation, a_prime);
    Ok(MaximinAllocation { allocation, value })
}

/// Fractional domination number: `min sum_{i ∈ a_set} b_i` subject to every
/// `j ∈ a_prime` receiving total weight at least one from its observers in `a_set`.
pub fn fractional_domination(graph: &FeedbackGraph, a_set: ActionSet, a_prime: ActionSet) -> Result<f64, GraphError> {
    if a_set.is_empty() {
        return Err(GraphError::EmptySet);
    }
    if let Some(j) = a_prime.iter().find(|&j| graph.observers(j).intersection(a_set).is_empty()) {
        return Err(GraphError::Unobservable(j));
    }
    if a_prime.is_empty() {
        return Ok(0.0);
    }
    let members = a_set.to_vec();
    let mut lp = LinearProgram::minimize(vec![1.0; members.len()]);
    for j in a_prime.iter() {
        let row = members
            .iter()
            .map(|&i| if graph.observation_set(i).contains(j) { 1.0 } else { 0.0 })
            .collect();
        lp.constrain(row, Relation::Ge, 1.0);
    }
    let sol = lp.solve()?;
    if !sol.is_optimal() {
        return Err(GraphError::Lp(crate::lp::LpError::NonFinite));
    }
    Ok(sol.value)
}
