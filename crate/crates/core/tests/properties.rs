mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{grid_max, random_graph, random_subset};
use sideobs::algorithms::{Alg2State, Policy, Ucb, Uniform};
use sideobs::bounds::{
    asymptotic_allocation, away_objective, maximize_away, maximize_toward, relaxed_bound, toward_objective,
    BoundBudget, BoundStatus,
};
use sideobs::graph::{fractional_domination, independence_number, maximin_allocation};
use sideobs::harness::run_policy;
use sideobs::lp::{LinearProgram, LpStatus, Relation};
use sideobs::model::gaps;
use sideobs::{ActionSet, Environment, FeedbackGraph, VarianceMatrix};

fn graph_strategy(max_k: usize) -> impl Strategy<Value = FeedbackGraph> {
    (2..=max_k, any::<u64>(), 0.1f64..0.7).prop_map(|(k, seed, p)| random_graph(&mut ChaCha8Rng::seed_from_u64(seed), k, p))
}

fn disjoint_union(a: &FeedbackGraph, b: &FeedbackGraph) -> FeedbackGraph {
    let shift = a.k();
    let mut obs: Vec<ActionSet> = a.observation_sets().to_vec();
    obs.extend(b.observation_sets().iter().map(|s| s.iter().map(|j| j + shift).collect::<ActionSet>()));
    FeedbackGraph::new(obs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// min c.x s.t. Ax >= b, x >= 0 against its dual max b.y s.t. A^T y <= c, y >= 0.
    #[test]
    fn lp_strong_duality_and_slackness(
        a in prop::collection::vec(prop::collection::vec(0.0f64..3.0, 4), 3),
        b in prop::collection::vec(0.1f64..5.0, 3),
        c in prop::collection::vec(0.5f64..4.0, 4),
    ) {
        // one positive entry per row keeps the primal feasible
        let a: Vec<Vec<f64>> = a.into_iter().map(|mut r| { r[0] += 0.5; r }).collect();
        let mut primal = LinearProgram::minimize(c.clone());
        for (row, &rhs) in a.iter().zip(&b) {
            primal.constrain(row.clone(), Relation::Ge, rhs);
        }
        let mut dual = LinearProgram::maximize(b.clone());
        for j in 0..4 {
            dual.constrain(a.iter().map(|r| r[j]).collect(), Relation::Le, c[j]);
        }
        let p = primal.solve().unwrap();
        let d = dual.solve().unwrap();
        prop_assert_eq!(p.status, LpStatus::Optimal);
        prop_assert_eq!(d.status, LpStatus::Optimal);
        prop_assert!((p.value - d.value).abs() <= 1e-8 * p.value.abs().max(1.0));
        for (i, row) in a.iter().enumerate() {
            let slack: f64 = row.iter().zip(&p.primal).map(|(x, y)| x * y).sum::<f64>() - b[i];
            prop_assert!(slack >= -1e-9);
            prop_assert!((slack * d.primal[i]).abs() <= 1e-7);
        }
        for j in 0..4 {
            let reduced = c[j] - a.iter().zip(&d.primal).map(|(r, y)| r[j] * y).sum::<f64>();
            prop_assert!(reduced >= -1e-9);
            prop_assert!((reduced * p.primal[j]).abs() <= 1e-7);
        }
    }

    #[test]
    fn maximin_is_reciprocal_of_fractional_domination(graph in graph_strategy(7), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_subset(&mut rng, graph.all());
        let reach = a.iter().fold(ActionSet::EMPTY, |acc, j| acc.union(graph.observation_set(j)));
        prop_assume!(!reach.is_empty());
        let target = random_subset(&mut rng, reach);
        let m = maximin_allocation(&graph, a, target).unwrap();
        let dom = fractional_domination(&graph, a, target).unwrap();
        prop_assert!((m.value * dom - 1.0).abs() <= 1e-8);
        prop_assert!((m.allocation.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(m.allocation.iter().enumerate().all(|(i, &c)| c >= 0.0 && (a.contains(i) || c == 0.0)));
    }

    #[test]
    fn independence_adds_over_disjoint_unions(g1 in graph_strategy(6), g2 in graph_strategy(6)) {
        let k1 = independence_number(&g1).unwrap().0;
        let k2 = independence_number(&g2).unwrap().0;
        let (k, witness) = independence_number(&disjoint_union(&g1, &g2)).unwrap();
        prop_assert_eq!(k, k1 + k2);
        prop_assert_eq!(witness.len(), k);
    }

    #[test]
    fn gaps_and_asymptotic_value_ignore_shifts(
        theta in prop::collection::vec(0.0f64..1.0, 2..6),
        shift in -5.0f64..5.0,
        seed in any::<u64>(),
    ) {
        let g = gaps(&theta);
        prop_assume!(g.second_gap > 1e-3);
        let shifted: Vec<f64> = theta.iter().map(|t| t + shift).collect();
        let h = gaps(&shifted);
        prop_assert_eq!(g.best, h.best);
        for (x, y) in g.gaps.iter().zip(&h.gaps) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let graph = random_graph(&mut ChaCha8Rng::seed_from_u64(seed), theta.len(), 0.4);
        let v1 = asymptotic_allocation(&graph, &theta, 0.5).unwrap().value;
        let v2 = asymptotic_allocation(&graph, &shifted, 0.5).unwrap().value;
        prop_assert!((v1 - v2).abs() <= 1e-6 * v1.abs().max(1.0));
    }

    #[test]
    fn relaxed_bound_shrinks_as_budget_grows(
        theta in prop::collection::vec(0.05f64..0.95, 2..5),
        b1 in 1.0f64..200.0,
        factor in 1.0f64..10.0,
    ) {
        let k = theta.len();
        let env = Environment::new(theta, 1.0, VarianceMatrix::bandit(k, 1.0).unwrap()).unwrap();
        let t = 100_000;
        let lo = relaxed_bound(&env, &BoundBudget::new(b1, t).unwrap()).unwrap();
        let hi = relaxed_bound(&env, &BoundBudget::new(b1 * factor, t).unwrap()).unwrap();
        prop_assume!(lo.status == BoundStatus::Optimal);
        prop_assert_eq!(hi.status, BoundStatus::Optimal);
        prop_assert!(hi.value <= lo.value + 1e-7 * lo.value.abs().max(1.0));
        for (p, q) in lo.per_action.iter().zip(&hi.per_action) {
            prop_assert!(q.m <= p.m + 1e-9);
        }
    }

    #[test]
    fn maximizers_beat_a_coarse_grid(a in 0.01f64..0.5, b in 2.0f64..300.0, width in 0.05f64..1.0, frac in 0.05f64..0.99) {
        let away = maximize_away(a, b, a + width).unwrap().unwrap();
        prop_assert!(away.value >= grid_max(a, a + width, 1e-4, |x| away_objective(x, a, b)) - 1e-8);
        let bt = frac / a;
        let toward = maximize_toward(a, bt, width).unwrap().unwrap();
        prop_assert!(toward.value >= grid_max(0.0, width, 1e-4, |x| toward_objective(x, a, bt)) - 1e-8);
        prop_assert!(toward.eps > 0.0 && toward.eps <= width);
    }

    #[test]
    fn elimination_keeps_the_empirical_leader(graph in graph_strategy(5), seed in any::<u64>()) {
        let k = graph.k();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta: Vec<f64> = (0..k).map(|i| (i as f64 * 0.37 + seed as f64 * 1e-3).fract()).collect();
        let sigma = VarianceMatrix::from_observation_sets(graph.observation_sets(), 0.4).unwrap();
        let env = Environment::new(theta, 1.0, sigma).unwrap();
        let mut st = Alg2State::new(graph, 0.4, 1.0, 0.1).unwrap();
        for _ in 0..40 {
            if st.survivor().is_some() {
                break;
            }
            let before = st.active();
            st.play_round(&env, &mut rng).unwrap();
            let th = st.theta_hat();
            let leader = before
                .iter()
                .filter(|&i| st.n_obs()[i] > 0)
                .max_by(|&x, &y| th[x].total_cmp(&th[y]));
            if let Some(l) = leader {
                prop_assert!(st.active().contains(l) || before.iter().any(|j| j != l && th[j] == th[l] && st.active().contains(j)));
            }
            prop_assert!(st.active().is_subset(before));
        }
    }

    #[test]
    fn traces_are_monotone_and_bounded(theta in prop::collection::vec(0.0f64..1.0, 2..5), seed in any::<u64>(), horizon in 10u64..400) {
        let k = theta.len();
        let env = Environment::new(theta, 1.0, VarianceMatrix::bandit(k, 0.5).unwrap()).unwrap();
        let checkpoints: Vec<u64> = (1..=horizon).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d_max = env.gaps().max_gap();
        let mut ucb = Ucb::new(&env.sigma).unwrap();
        let mut uni = Uniform::new(k);
        for policy in [&mut ucb as &mut dyn Policy, &mut uni] {
            let pts = run_policy(policy, &env, horizon, &checkpoints, &mut rng).unwrap();
            prop_assert_eq!(pts.len() as u64, horizon);
            for w in pts.windows(2) {
                prop_assert!(w[1].1 >= w[0].1);
            }
            for &(t, r) in &pts {
                prop_assert!(r >= 0.0 && r <= t as f64 * d_max + 1e-9);
            }
        }
    }
}
