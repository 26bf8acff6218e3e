//! Problem-dependent lower bounds: the finite-time relaxation built from
//! single-coordinate perturbations, the asymptotic allocation program, and the
//! worst-case instances that turn the relaxation into minimax rates.

use std::f64::consts::E;

use serde::Serialize;

use crate::error::BoundError;
use crate::graph::{self, classify, ActionSet, FeedbackGraph, GraphReport, Regime};
use crate::lambert::lambert_w0;
use crate::lp::{LinearProgram, LpStatus, Relation};
use crate::model::{gaps, Environment, Sigma, VarianceMatrix};

/// Worst-case regret budget `B` over a horizon `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundBudget {
    pub b: f64,
    pub t: u64,
}

impl BoundBudget {
    pub fn new(b: f64, t: u64) -> Result<Self, BoundError> {
        if !(b.is_finite() && b > 0.0) || t == 0 {
            return Err(BoundError::InvalidBudget { b, t });
        }
        Ok(Self { b, t })
    }

    /// `T / (8B)`, the scale inside every perturbation objective.
    fn scale(&self) -> f64 {
        self.t as f64 / (8.0 * self.b)
    }

    /// Gap threshold `4B/T` separating the one- and two-sided cases.
    pub fn gap_threshold(&self) -> f64 {
        4.0 * self.b / self.t as f64
    }
}

/// A maximizer of one perturbation objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximizer {
    pub eps: f64,
    pub value: f64,
}

/// `ln((eps - a) b) / eps^2`: the cost of moving a coordinate past the leader.
pub fn away_objective(eps: f64, a: f64, b: f64) -> f64 {
    ((eps - a) * b).ln() / (eps * eps)
}

/// `ln((eps + a) b) / eps^2`: the cost of moving a coordinate further behind.
pub fn toward_objective(eps: f64, a: f64, b: f64) -> f64 {
    ((eps + a) * b).ln() / (eps * eps)
}

/// Picks the better of the unconstrained stationary point (when it lies in
/// `(lo, hi]`) and the right end of the box.
fn best_in_box(stationary: f64, lo: f64, hi: f64, objective: impl Fn(f64) -> f64) -> Maximizer {
    let boundary = Maximizer {
        eps: hi,
        value: objective(hi),
    };
    if stationary > lo && stationary <= hi {
        let interior = Maximizer {
            eps: stationary,
            value: objective(stationary),
        };
        if interior.value >= boundary.value {
            return interior;
        }
    }
    boundary
}

/// Maximizes [`away_objective`] over `eps ∈ (a, hi]`. `None` when the box is empty.
///
/// The unconstrained maximizer is `(sqrt(e)/b) exp(W(ab / (2 sqrt(e)))) + a`.
pub fn maximize_away(a: f64, b: f64, hi: f64) -> Result<Option<Maximizer>, BoundError> {
    if hi <= a {
        return Ok(None);
    }
    let root_e = E.sqrt();
    let w = lambert_w0(a * b / (2.0 * root_e))?;
    let stationary = root_e / b * w.exp() + a;
    Ok(Some(best_in_box(stationary, a, hi, |x| away_objective(x, a, b))))
}

/// Maximizes [`toward_objective`] over `eps ∈ (0, hi]`. `None` when the box is
/// empty or when `ab >= 1`, where the objective is unbounded near zero.
///
/// The unconstrained maximizer is `(sqrt(e)/b) exp(W(-ab / (2 sqrt(e)))) - a`.
pub fn maximize_toward(a: f64, b: f64, hi: f64) -> Result<Option<Maximizer>, BoundError> {
    let root_e = E.sqrt();
    let w = lambert_w0(-a * b / (2.0 * root_e))?;
    if hi <= 0.0 || a * b >= 1.0 {
        return Ok(None);
    }
    let stationary = root_e / b * w.exp() - a;
    Ok(Some(best_in_box(stationary, 0.0, hi, |x| toward_objective(x, a, b))))
}

/// Perturbation sizes and minimum sample sizes for one action.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationQuantities {
    pub action: usize,
    pub eps_plus: Option<f64>,
    pub eps_minus: Option<f64>,
    pub m_plus: Option<f64>,
    pub m_minus: Option<f64>,
    /// Required number of effective observations, clamped at zero.
    pub m: f64,
}

/// Geometry of the two perturbation directions for action `i`: the gap that
/// enters the objectives and the room available in each direction.
struct Directions {
    gap: f64,
    /// Right end of the box for the perturbation that changes the leader.
    away_hi: f64,
    /// Right end of the box for the perturbation that widens the gap.
    toward_hi: f64,
    is_best: bool,
}

/// `None` when the minimum sample size is zero by definition (the leader sits
/// on the upper edge of the box, or the runner-up on the lower edge).
fn directions(i: usize, env: &Environment) -> Option<Directions> {
    let g = env.gaps();
    let theta = &env.theta;
    let d_cap = env.d_cap;
    if i == g.best {
        if theta[g.second] == 0.0 {
            return None;
        }
        Some(Directions {
            gap: g.second_gap,
            away_hi: theta[i],
            toward_hi: d_cap - theta[i],
            is_best: true,
        })
    } else {
        if theta[g.best] >= d_cap {
            return None;
        }
        Some(Directions {
            gap: g.gaps[i],
            away_hi: d_cap - theta[i],
            toward_hi: theta[i],
            is_best: false,
        })
    }
}

/// Closed-form perturbation sizes `(eps_plus, eps_minus)` for action `i`.
///
/// For the best action the roles of the two directions are swapped: `eps_minus`
/// lowers the leader below the runner-up. The gap-widening direction is only
/// evaluated when the gap is below `4B/T`, the only case that uses it. `None`
/// marks a direction that was not evaluated, has an empty box, or is unbounded.
pub fn epsilon_pm(i: usize, env: &Environment, budget: &BoundBudget) -> Result<(Option<f64>, Option<f64>), BoundError> {
    let q = min_sample_size(i, env, budget)?;
    Ok((q.eps_plus, q.eps_minus))
}

/// Minimum effective sample size `m_i(theta, B)` with its ingredients.
pub fn min_sample_size(i: usize, env: &Environment, budget: &BoundBudget) -> Result<PerturbationQuantities, BoundError> {
    let mut q = PerturbationQuantities {
        action: i,
        eps_plus: None,
        eps_minus: None,
        m_plus: None,
        m_minus: None,
        m: 0.0,
    };
    let Some(dir) = directions(i, env) else {
        return Ok(q);
    };
    let b = budget.scale();
    let away = maximize_away(dir.gap, b, dir.away_hi)?;
    let mut m = away.map_or(f64::NEG_INFINITY, |a| a.value);
    let mut toward = None;
    if dir.gap < budget.gap_threshold() {
        toward = maximize_toward(dir.gap, b, dir.toward_hi)?;
        // An empty box offers no perturbation, so the two-sided case gives no constraint.
        m = m.min(toward.map_or(f64::NEG_INFINITY, |t| t.value));
    }
    let (plus, minus) = if dir.is_best { (toward, away) } else { (away, toward) };
    q.eps_plus = plus.map(|x| x.eps);
    q.m_plus = plus.map(|x| x.value);
    q.eps_minus = minus.map(|x| x.eps);
    q.m_minus = minus.map(|x| x.value);
    q.m = m.max(0.0);
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    /// Optimal objective; NaN when infeasible.
    pub value: f64,
    pub allocation: Vec<f64>,
    pub status: BoundStatus,
    pub per_action: Vec<PerturbationQuantities>,
    pub note: Option<String>,
}

fn reject_zero_variance(sigma: &VarianceMatrix) -> Result<(), BoundError> {
    for (i, row) in sigma.rows().iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            if *s == Sigma::Finite(0.0) {
                return Err(BoundError::ZeroVariance(i, j));
            }
        }
    }
    Ok(())
}

/// Finite-time relaxed lower bound: `min <c, d(theta)>` over allocations with
/// `sum_j c_j / sigma_ji^2 >= m_i` for every `i` and `sum_j c_j = T`.
pub fn relaxed_bound(env: &Environment, budget: &BoundBudget) -> Result<BoundReport, BoundError> {
    env.validate().into_result()?;
    reject_zero_variance(&env.sigma)?;
    let k = env.k();
    let per_action = (0..k)
        .map(|i| min_sample_size(i, env, budget))
        .collect::<Result<Vec<_>, _>>()?;
    let g = env.gaps();

    let mut lp = LinearProgram::minimize(g.gaps.clone());
    lp.constrain(vec![1.0; k], Relation::Eq, budget.t as f64);
    for q in &per_action {
        if q.m <= 0.0 {
            continue;
        }
        let row = (0..k)
            .map(|j| match env.sigma.get(j, q.action) {
                Sigma::Finite(s) => 1.0 / (s * s),
                Sigma::Infinite => 0.0,
            })
            .collect();
        lp.constrain(row, Relation::Ge, q.m);
    }
    let sol = lp.solve()?;
    Ok(match sol.status {
        LpStatus::Optimal => BoundReport {
            value: sol.value,
            allocation: sol.primal,
            status: BoundStatus::Optimal,
            per_action,
            note: None,
        },
        _ => BoundReport {
            value: f64::NAN,
            allocation: vec![0.0; k],
            status: BoundStatus::Infeasible,
            per_action,
            note: Some(format!(
                "budget B = {} is unattainable at horizon T = {}: required samples exceed the horizon",
                budget.b, budget.t
            )),
        },
    })
}

/// Asymptotic allocation program `inf_{c ∈ C_theta} <c, d(theta)>` for
/// uniform-variance graph feedback, on raw means (they need not lie in a box).
///
/// Among optimal allocations the one with the smallest weight on the best
/// action is returned.
pub fn asymptotic_allocation(graph: &FeedbackGraph, theta: &[f64], sigma: f64) -> Result<BoundReport, BoundError> {
    let k = graph.k();
    let g = gaps(theta);
    if g.second_gap <= 0.0 {
        return Err(BoundError::TiedOptimum);
    }
    let two_var = 2.0 * sigma * sigma;
    let mut lp = LinearProgram::minimize(g.gaps.clone());
    for j in 0..k {
        let gap = if j == g.best { g.second_gap } else { g.gaps[j] };
        let row = (0..k)
            .map(|i| if graph.observation_set(i).contains(j) { 1.0 } else { 0.0 })
            .collect();
        lp.constrain(row, Relation::Ge, two_var / (gap * gap));
    }
    let first = lp.solve()?;
    if !first.is_optimal() {
        return Err(BoundError::Lp(crate::lp::LpError::NonFinite));
    }
    let value = first.value;

    // Second stage: least weight on the leader without losing optimality.
    let mut lexi = lp.clone();
    lexi.objective = (0..k).map(|i| if i == g.best { 1.0 } else { 0.0 }).collect();
    lexi.constrain(g.gaps.clone(), Relation::Le, value + 1e-9 * value.abs().max(1.0));
    let second = lexi.solve()?;
    let allocation = if second.is_optimal() { second.primal } else { first.primal };

    let note = graph
        .is_full_information()
        .then(|| "generalized full information: the asymptotic bound is zero".to_string());
    Ok(BoundReport {
        value,
        allocation,
        status: BoundStatus::Optimal,
        per_action: Vec::new(),
        note,
    })
}

/// Asymptotic lower bound on `liminf R_T / log T` for a valid environment with
/// uniform variance `sigma_uniform`.
pub fn asymptotic_bound(env: &Environment, sigma_uniform: f64) -> Result<BoundReport, BoundError> {
    env.validate().into_result()?;
    if env.sigma.uniform_sigma().is_none() {
        return Err(BoundError::NonUniformVariance);
    }
    let graph = FeedbackGraph::from_sigma(&env.sigma)?;
    asymptotic_allocation(&graph, &env.theta, sigma_uniform)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeChoice {
    Auto,
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Construction {
    /// Independent set at `D/2 - eps` with one member raised to `D/2`.
    IndependentSet,
    /// One leader at `D/2`, every other action at `D/2 - eps`.
    LeaderVsRest,
    /// One leader at `D/2`, one weakly observable runner-up at `D/2 - eps`.
    WeakPair,
}

/// A worst-case environment for the relaxed bound at horizon `T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversarialInstance {
    pub env: Environment,
    pub regime: Regime,
    pub construction: Construction,
    pub budget: f64,
    pub epsilon: f64,
    pub best: usize,
    /// Actions lowered by exactly `epsilon`.
    pub runners_up: ActionSet,
    pub kappa: usize,
    pub rho: usize,
}

fn resolve_regime(report: &GraphReport, choice: RegimeChoice) -> Result<Regime, BoundError> {
    let actual = report.regime;
    let requested = match choice {
        RegimeChoice::Auto => return Ok(actual),
        RegimeChoice::Strong => Regime::StronglyObservable,
        RegimeChoice::Weak => Regime::WeaklyObservable,
    };
    if requested != actual {
        return Err(BoundError::RegimeMismatch {
            requested: requested.name(),
            actual: actual.name(),
        });
    }
    Ok(actual)
}

/// Regret budget used by the minimax constructions.
pub fn minimax_budget(report: &GraphReport, d_cap: f64, sigma: f64, t: u64, alpha: f64) -> f64 {
    let t = t as f64;
    match report.regime {
        Regime::StronglyObservable => alpha * sigma * (report.independence_number as f64 * t).sqrt(),
        Regime::WeaklyObservable => {
            let k = (report.strong_actions.len() + report.weak_actions.len()) as f64;
            alpha * (report.weak_domination_number as f64 * d_cap).cbrt() * (sigma * t).powf(2.0 / 3.0)
                / k.ln().powf(2.0 / 3.0)
        }
    }
}

/// Builds the worst-case mean vector for the observation structure of `graph`.
pub fn adversarial_instance(
    graph: &FeedbackGraph,
    d_cap: f64,
    sigma: f64,
    t: u64,
    alpha: f64,
    choice: RegimeChoice,
) -> Result<AdversarialInstance, BoundError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(BoundError::InvalidAlpha(alpha));
    }
    if graph.is_full_information() {
        return Err(BoundError::FullInformation);
    }
    let report = classify(graph);
    let regime = resolve_regime(&report, choice)?;
    let budget = minimax_budget(&report, d_cap, sigma, t, alpha);
    let epsilon = 8.0 * E * budget / t as f64;
    let half = d_cap / 2.0;
    if !(epsilon < half) {
        return Err(BoundError::HorizonTooSmall { eps: epsilon, half });
    }
    let k = graph.k();

    let (construction, best, runners_up) = match regime {
        Regime::StronglyObservable if report.independence_number >= 2 => {
            let set = report.independent_witness;
            let best = set.first().expect("independent set of size >= 2");
            (Construction::IndependentSet, best, set.difference(ActionSet::singleton(best)))
        }
        Regime::StronglyObservable => {
            let (i1, _) = unobserved_pair(graph).ok_or(BoundError::FullInformation)?;
            (
                Construction::LeaderVsRest,
                i1,
                graph.all().difference(ActionSet::singleton(i1)),
            )
        }
        Regime::WeaklyObservable => {
            let rho = report.weak_domination_number as f64;
            let spread = if rho >= 100.0 * (k as f64).ln() {
                let weak = report.weak_actions;
                let set = if weak.len() <= graph::EXACT_LIMIT {
                    graph::max_independent_subset(graph, weak)?
                } else {
                    graph::greedy_independent_subset(graph, weak)
                };
                (set.len() >= 2).then_some(set)
            } else {
                None
            };
            match spread {
                Some(set) => {
                    let best = set.first().expect("nonempty");
                    (Construction::IndependentSet, best, set.difference(ActionSet::singleton(best)))
                }
                None => {
                    let (i1, i2) = weak_pair(graph, report.weak_actions).ok_or(BoundError::FullInformation)?;
                    (Construction::WeakPair, i1, ActionSet::singleton(i2))
                }
            }
        }
    };

    let mut theta = vec![0.0; k];
    if construction == Construction::LeaderVsRest {
        theta.iter_mut().for_each(|v| *v = half - epsilon);
    }
    for i in runners_up.iter() {
        theta[i] = half - epsilon;
    }
    theta[best] = half;
    let matrix = VarianceMatrix::from_observation_sets(graph.observation_sets(), sigma)?;
    let env = Environment::new(theta, d_cap, matrix)?;
    Ok(AdversarialInstance {
        env,
        regime,
        construction,
        budget,
        epsilon,
        best,
        runners_up,
        kappa: report.independence_number,
        rho: report.weak_domination_number,
    })
}

/// Lowest `(i1, i2)` in lexicographic order with `i2 ∉ S_{i1}`.
fn unobserved_pair(graph: &FeedbackGraph) -> Option<(usize, usize)> {
    let k = graph.k();
    (0..k).find_map(|i1| (0..k).find(|&i2| !graph.observation_set(i1).contains(i2)).map(|i2| (i1, i2)))
}

/// Lowest weakly observable `i2` together with the lowest `i1 != i2` that cannot see it.
fn weak_pair(graph: &FeedbackGraph, weak: ActionSet) -> Option<(usize, usize)> {
    let i2 = weak.first()?;
    let i1 = (0..graph.k()).find(|&i| i != i2 && !graph.observation_set(i).contains(i2))?;
    Some((i1, i2))
}

/// Minimax lower bound values for a feedback structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimaxBound {
    pub regime: Regime,
    /// Budget `B` the construction is tuned for.
    pub budget: f64,
    /// Lower bound on `sup_theta b'(theta, B)`.
    pub value: f64,
    /// Lower bound on the worst-case regret of any algorithm: `min(B, value)`.
    pub regret_bound: f64,
    /// Horizon condition of the strongly observable case; always true otherwise.
    pub valid: bool,
}

pub fn minimax_bound_value(graph: &FeedbackGraph, d_cap: f64, sigma: f64, t: u64, alpha: f64) -> Result<MinimaxBound, BoundError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(BoundError::InvalidAlpha(alpha));
    }
    if graph.is_full_information() {
        return Err(BoundError::FullInformation);
    }
    let report = classify(graph);
    let budget = minimax_budget(&report, d_cap, sigma, t, alpha);
    let tf = t as f64;
    let (value, valid) = match report.regime {
        Regime::StronglyObservable => {
            let kappa = report.independence_number as f64;
            let value = sigma * (kappa * tf).sqrt() / (64.0 * E * alpha);
            let threshold = 64.0 * E * E * alpha * alpha * sigma * sigma * kappa.powi(3) / (d_cap * d_cap);
            (value, tf >= threshold)
        }
        Regime::WeaklyObservable => {
            let k = graph.k() as f64;
            let scale = (report.weak_domination_number as f64 * d_cap).cbrt() * (sigma * tf).powf(2.0 / 3.0)
                / k.ln().powf(2.0 / 3.0);
            (scale / (51200.0 * E * E * alpha * alpha), true)
        }
    };
    Ok(MinimaxBound {
        regime: report.regime,
        budget,
        value,
        regret_bound: budget.min(value),
        valid,
    })
}
