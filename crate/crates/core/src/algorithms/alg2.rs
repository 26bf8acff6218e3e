//! Minimax successive elimination with weak-action exploration budgeting.

use std::collections::{HashMap, VecDeque};

use rand::Rng;

use crate::error::AlgorithmError;
use crate::graph::{maximin_allocation, ActionSet, FeedbackGraph, MaximinAllocation};
use crate::model::{Environment, ObservationSample};

use super::{Estimates, Policy};

const SUPPORT_TOL: f64 = 1e-12;
const CEIL_TOL: f64 = 1e-9;

/// Number of plays per action in one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlayBatch {
    pub counts: Vec<u64>,
}

impl PlayBatch {
    /// `ceil(c_j * ||c||_0)` coordinate-wise.
    pub fn from_allocation(c: &[f64]) -> Self {
        let support = c.iter().filter(|&&v| v > SUPPORT_TOL).count() as f64;
        let counts = c
            .iter()
            .map(|&v| if v > SUPPORT_TOL { (v * support - CEIL_TOL).ceil().max(1.0) as u64 } else { 0 })
            .collect();
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Plays in index order, each action repeated by its count.
    pub fn sequence(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| std::iter::repeat_n(i, n as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Alg2Branch {
    /// Explore the weakly observable active actions from all of `[K]`.
    Weak,
    /// Explore the active actions from the active set itself.
    Strong,
    /// No active action is observed from inside the active set and the weak
    /// budget is spent; the weak allocation is used anyway.
    WeakFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundPlan {
    pub round: u64,
    pub branch: Alg2Branch,
    pub strong: ActionSet,
    pub weak: ActionSet,
    pub alpha_run: f64,
    pub gamma: f64,
    pub allocation: Vec<f64>,
    /// Maximin value of `allocation` over the set it targets.
    pub coverage: f64,
    pub batch: PlayBatch,
}

/// `sigma * sqrt(2 ln(8 K^2 r^3 / delta) / n)`, infinite for `n = 0`.
pub fn confidence_radius(sigma: f64, k: usize, round: u64, delta: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let k = k as f64;
    let r = round as f64;
    sigma * (2.0 * (8.0 * k * k * r * r * r / delta).ln() / n as f64).sqrt()
}

/// Round-level state; `round` is the index of the next round to plan.
#[derive(Debug, Clone)]
pub struct Alg2State {
    graph: FeedbackGraph,
    sigma: f64,
    d_cap: f64,
    delta: f64,
    active: ActionSet,
    estimates: Estimates,
    round: u64,
    t_elapsed: u64,
    alpha_run: f64,
    cache: HashMap<(ActionSet, ActionSet), MaximinAllocation>,
}

impl Alg2State {
    pub fn new(graph: FeedbackGraph, sigma: f64, d_cap: f64, delta: f64) -> Result<Self, AlgorithmError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(AlgorithmError::Parameter {
                name: "delta",
                reason: format!("must lie in (0, 1), got {delta}"),
            });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(AlgorithmError::Parameter {
                name: "sigma",
                reason: format!("must be positive and finite, got {sigma}"),
            });
        }
        if !(d_cap > 0.0 && d_cap.is_finite()) {
            return Err(AlgorithmError::Parameter {
                name: "D",
                reason: format!("must be positive and finite, got {d_cap}"),
            });
        }
        let k = graph.k();
        Ok(Self {
            active: graph.all(),
            graph,
            sigma,
            d_cap,
            delta,
            estimates: Estimates::new(k),
            round: 1,
            t_elapsed: 0,
            alpha_run: 1.0,
            cache: HashMap::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.graph.k()
    }

    pub fn active(&self) -> ActionSet {
        self.active
    }

    pub fn n_obs(&self) -> &[u64] {
        &self.estimates.n_obs
    }

    pub fn theta_hat(&self) -> Vec<f64> {
        self.estimates.means()
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn t_elapsed(&self) -> u64 {
        self.t_elapsed
    }

    pub fn alpha_run(&self) -> f64 {
        self.alpha_run
    }

    /// The remaining action once elimination has left exactly one.
    pub fn survivor(&self) -> Option<usize> {
        (self.active.len() == 1).then(|| self.active.first().expect("nonempty"))
    }

    /// Splits `set` into actions observed from inside it and the rest.
    pub fn split(&self, set: ActionSet) -> (ActionSet, ActionSet) {
        let seen = set
            .iter()
            .fold(ActionSet::EMPTY, |acc, j| acc.union(self.graph.observation_set(j)));
        let strong = set.intersection(seen);
        (strong, set.difference(strong))
    }

    fn maximin(&mut self, a_set: ActionSet, a_prime: ActionSet) -> Result<MaximinAllocation, AlgorithmError> {
        if let Some(hit) = self.cache.get(&(a_set, a_prime)) {
            return Ok(hit.clone());
        }
        let result = maximin_allocation(&self.graph, a_set, a_prime)?;
        self.cache.insert((a_set, a_prime), result.clone());
        Ok(result)
    }

    fn min_count(&self, set: ActionSet) -> f64 {
        set.iter()
            .map(|i| self.estimates.n_obs[i] as f64)
            .fold(f64::INFINITY, f64::min)
    }

    /// Chooses the allocation and batch for the current round and updates the
    /// running weak-coverage minimum.
    pub fn plan_round(&mut self) -> Result<RoundPlan, AlgorithmError> {
        if self.active.len() < 2 {
            return Err(AlgorithmError::InternalInvariant(format!(
                "round planned with {} active actions",
                self.active.len()
            )));
        }
        let all = self.graph.all();
        let (strong, weak) = self.split(self.active);
        if !weak.is_empty() {
            let m = self.maximin(all, weak)?.value;
            self.alpha_run = self.alpha_run.min(m);
        }
        let gamma = (self.sigma * self.alpha_run * self.t_elapsed as f64 / self.d_cap).powf(2.0 / 3.0);
        let min_weak = self.min_count(weak);
        let branch = if !weak.is_empty() && min_weak < self.min_count(strong) && min_weak < gamma {
            Alg2Branch::Weak
        } else if strong.is_empty() {
            Alg2Branch::WeakFallback
        } else {
            Alg2Branch::Strong
        };
        let MaximinAllocation { allocation, value } = match branch {
            Alg2Branch::Weak | Alg2Branch::WeakFallback => self.maximin(all, weak)?,
            Alg2Branch::Strong => self.maximin(self.active, strong)?,
        };
        let batch = PlayBatch::from_allocation(&allocation);
        if batch.total() == 0 {
            return Err(AlgorithmError::InternalInvariant("empty play batch".into()));
        }
        Ok(RoundPlan {
            round: self.round,
            branch,
            strong,
            weak,
            alpha_run: self.alpha_run,
            gamma,
            allocation,
            coverage: value,
            batch,
        })
    }

    /// Credits the round's observations, advances time by the batch size and
    /// runs the elimination test. Returns the eliminated actions.
    pub fn complete_round(&mut self, plan: &RoundPlan, samples: &[ObservationSample]) -> Result<ActionSet, AlgorithmError> {
        for s in samples {
            self.estimates.record(s);
        }
        self.t_elapsed += plan.batch.total();
        self.round += 1;
        let (sigma, k, round, delta) = (self.sigma, self.k(), self.round, self.delta);
        self.eliminate_with(|n| confidence_radius(sigma, k, round, delta, n))
    }

    /// Keeps `i` iff `theta_hat_i + g_i >= max_j (theta_hat_j - g_j)` over the
    /// active set, with `g` given as a function of the observation count.
    pub fn eliminate_with(&mut self, radius: impl Fn(u64) -> f64) -> Result<ActionSet, AlgorithmError> {
        let theta = self.theta_hat();
        let g: Vec<f64> = self.estimates.n_obs.iter().map(|&n| radius(n)).collect();
        let lower = self
            .active
            .iter()
            .map(|j| theta[j] - g[j])
            .fold(f64::NEG_INFINITY, f64::max);
        let kept: ActionSet = self.active.iter().filter(|&i| theta[i] + g[i] >= lower).collect();
        if kept.is_empty() {
            return Err(AlgorithmError::InternalInvariant("elimination emptied the active set".into()));
        }
        let removed = self.active.difference(kept);
        self.active = kept;
        Ok(removed)
    }

    /// Plans one round, samples its batch from `env` in index order and
    /// completes it.
    pub fn play_round<R: Rng + ?Sized>(
        &mut self,
        env: &Environment,
        rng: &mut R,
    ) -> Result<(RoundPlan, Vec<ObservationSample>), AlgorithmError> {
        let plan = self.plan_round()?;
        let samples: Vec<_> = plan.batch.sequence().map(|a| env.sample_observation(a, rng)).collect();
        self.complete_round(&plan, &samples)?;
        Ok((plan, samples))
    }
}

/// Step-level driver around [`Alg2State`]: plays each batch one action at a
/// time and completes the round once the batch is exhausted.
#[derive(Debug, Clone)]
pub struct Alg2 {
    state: Alg2State,
    plan: Option<RoundPlan>,
    queue: VecDeque<usize>,
    pending: Vec<ObservationSample>,
}

impl Alg2 {
    pub fn new(graph: FeedbackGraph, sigma: f64, d_cap: f64, delta: f64) -> Result<Self, AlgorithmError> {
        Ok(Self {
            state: Alg2State::new(graph, sigma, d_cap, delta)?,
            plan: None,
            queue: VecDeque::new(),
            pending: Vec::new(),
        })
    }

    pub fn state(&self) -> &Alg2State {
        &self.state
    }
}

impl Policy for Alg2 {
    fn name(&self) -> &'static str {
        "alg2"
    }

    fn select(&mut self) -> Result<usize, AlgorithmError> {
        if let Some(i) = self.state.survivor() {
            return Ok(i);
        }
        if self.queue.is_empty() {
            let plan = self.state.plan_round()?;
            self.queue.extend(plan.batch.sequence());
            self.plan = Some(plan);
        }
        Ok(*self.queue.front().expect("batch is nonempty"))
    }

    fn update(&mut self, sample: &ObservationSample) {
        if self.plan.is_none() {
            return;
        }
        self.queue.pop_front();
        self.pending.push(sample.clone());
        if self.queue.is_empty() {
            let plan = self.plan.take().expect("checked above");
            let samples = std::mem::take(&mut self.pending);
            // elimination keeps the empirical leader, so this cannot fail
            self.state
                .complete_round(&plan, &samples)
                .expect("active set stays nonempty");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::coverage;
    use crate::model::VarianceMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bandit_graph(k: usize) -> FeedbackGraph {
        FeedbackGraph::new((0..k).map(ActionSet::singleton).collect()).unwrap()
    }

    #[test]
    fn batch_rounding() {
        assert_eq!(PlayBatch::from_allocation(&[0.5, 0.5, 0.0]).counts, vec![1, 1, 0]);
        let b = PlayBatch::from_allocation(&[0.6, 0.4]);
        assert_eq!(b.counts, vec![2, 1]);
        assert_eq!(b.total(), 3);
        assert_eq!(b.sequence().collect::<Vec<_>>(), vec![0, 0, 1]);
        // float noise must not push an exact integer up
        assert_eq!(PlayBatch::from_allocation(&[1.0 / 3.0; 3]).counts, vec![1, 1, 1]);
    }

    #[test]
    fn radius_formula() {
        // sqrt(2 ln(2560) / 8), evaluated independently
        let g = confidence_radius(1.0, 2, 2, 0.1, 8);
        assert!((g - 1.400_692_912_228_944_7).abs() < 1e-12, "{g}");
        assert!((g - 1.4009).abs() < 1e-3);
        assert!(confidence_radius(1.0, 2, 2, 0.1, 0).is_infinite());
    }

    #[test]
    fn first_round_is_strong_over_everything() {
        let mut st = Alg2State::new(bandit_graph(3), 1.0, 1.0, 0.1).unwrap();
        let plan = st.plan_round().unwrap();
        assert_eq!(plan.branch, Alg2Branch::Strong);
        assert_eq!(plan.strong, ActionSet::full(3));
        assert_eq!(plan.gamma, 0.0);
        assert_eq!(plan.batch.counts, vec![1, 1, 1]);
    }

    #[test]
    fn weak_split() {
        // 0 observes {1, 2}, 1 observes {0, 1}, 2 observes nothing
        let g = FeedbackGraph::from_lists(&[&[1, 2], &[0, 1], &[]]).unwrap();
        let st = Alg2State::new(g, 1.0, 1.0, 0.1).unwrap();
        let (s, w) = st.split(ActionSet::full(3));
        assert_eq!(s, ActionSet::full(3));
        assert!(w.is_empty());
        let (s, w) = st.split([0usize, 2].into_iter().collect());
        assert_eq!(s, ActionSet::singleton(2));
        assert_eq!(w, ActionSet::singleton(0));
    }

    #[test]
    fn zero_radius_keeps_only_leader() {
        let mut st = Alg2State::new(bandit_graph(3), 1.0, 1.0, 0.1).unwrap();
        let plan = st.plan_round().unwrap();
        let samples = vec![
            ObservationSample { action: 0, values: vec![Some(0.2), None, None] },
            ObservationSample { action: 1, values: vec![None, Some(0.9), None] },
            ObservationSample { action: 2, values: vec![None, None, Some(0.5)] },
        ];
        for s in &samples {
            st.estimates.record(s);
        }
        st.t_elapsed += plan.batch.total();
        let removed = st.eliminate_with(|_| 0.0).unwrap();
        assert_eq!(st.active(), ActionSet::singleton(1));
        assert_eq!(removed, [0usize, 2].into_iter().collect());
        assert_eq!(st.survivor(), Some(1));
    }

    #[test]
    fn symmetric_means_keep_both() {
        let sigma = VarianceMatrix::bandit(2, 1.0).unwrap();
        let env = Environment::new(vec![0.5, 0.5], 1.0, sigma).unwrap();
        let mut st = Alg2State::new(bandit_graph(2), 1.0, 1.0, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            st.play_round(&env, &mut rng).unwrap();
        }
        assert_eq!(st.active().len(), 2);
    }

    #[test]
    fn round_invariants_on_weak_instance() {
        let g = FeedbackGraph::from_lists(&[&[1, 2], &[0, 1], &[]]).unwrap();
        let sigma = VarianceMatrix::from_observation_sets(g.observation_sets(), 0.5).unwrap();
        let env = Environment::new(vec![0.3, 0.8, 0.2], 1.0, sigma).unwrap();
        let mut st = Alg2State::new(g.clone(), 0.5, 1.0, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut last_alpha = st.alpha_run();
        let mut branches = std::collections::HashSet::new();
        while st.survivor().is_none() && st.t_elapsed() < 200_000 {
            let before_active = st.active();
            let before_t = st.t_elapsed();
            let before_obs = st.n_obs().to_vec();
            let (plan, _) = st.play_round(&env, &mut rng).unwrap();
            branches.insert(plan.branch);
            assert_eq!(st.t_elapsed() - before_t, plan.batch.total());
            assert!(st.active().is_subset(before_active));
            assert!(!st.active().is_empty());
            assert!(st.alpha_run() <= last_alpha && st.alpha_run() <= 1.0);
            last_alpha = st.alpha_run();
            if plan.branch == Alg2Branch::Strong {
                let floor = (plan.allocation.iter().filter(|&&v| v > 1e-12).count() as f64 * plan.coverage + 1e-9).floor();
                for i in plan.strong.iter() {
                    assert!((st.n_obs()[i] - before_obs[i]) as f64 >= floor);
                }
                assert!(coverage(&g, &plan.allocation, plan.strong) >= plan.coverage - 1e-12);
            }
        }
        assert_eq!(st.survivor(), Some(1));
        assert!(branches.contains(&Alg2Branch::Strong));
    }

    #[test]
    fn leader_is_never_eliminated() {
        let sigma = VarianceMatrix::bandit(4, 1.0).unwrap();
        let env = Environment::new(vec![0.1, 0.2, 0.3, 0.4], 1.0, sigma).unwrap();
        let mut st = Alg2State::new(bandit_graph(4), 1.0, 1.0, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            if st.survivor().is_some() {
                break;
            }
            st.play_round(&env, &mut rng).unwrap();
            let theta = st.theta_hat();
            let leader = st.active().iter().max_by(|&a, &b| theta[a].total_cmp(&theta[b])).unwrap();
            let global = (0..4).filter(|&i| st.n_obs()[i] > 0).max_by(|&a, &b| theta[a].total_cmp(&theta[b])).unwrap();
            assert!(st.active().contains(leader));
            if st.active().contains(global) {
                assert_eq!(theta[global], theta[leader]);
            }
        }
    }

    #[test]
    fn policy_plays_batches_then_survivor() {
        let sigma = VarianceMatrix::bandit(2, 0.01).unwrap();
        let env = Environment::new(vec![0.9, 0.1], 1.0, sigma).unwrap();
        let mut alg = Alg2::new(bandit_graph(2), 0.01, 1.0, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut plays = Vec::new();
        for _ in 0..20 {
            let a = alg.select().unwrap();
            plays.push(a);
            alg.update(&env.sample_observation(a, &mut rng));
        }
        assert_eq!(&plays[..2], &[0, 1]);
        assert!(plays[4..].iter().all(|&a| a == 0));
        assert_eq!(alg.state().survivor(), Some(0));
    }
}
