use dsg_core::abstraction::{build_abstract_with, project, StateMerge};
use dsg_core::belief::{belief_update, exact_nstage_value, signal_probability};
use dsg_core::fixtures::random_spec;
use dsg_core::format::{game_to_json, parse_game, GameFile};
use dsg_core::matrix::Matrix;
use dsg_core::pipeline::compute_parameters;
use dsg_core::solver::matrix_game::{matrix_game_value, MatrixGame};
use dsg_core::solver::{shapley_nstage, shapley_operator};
use dsg_core::stochastic::StochasticGame;
use dsg_core::structure::{birkhoff_coefficient, ergodicity_coefficient};
use dsg_core::{Belief, GameSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec_from_seed(seed: u64, k: usize, ns: usize, zero_prob: f64) -> GameSpec<f64> {
    random_spec(&mut ChaCha8Rng::seed_from_u64(seed), k, 2, 2, ns, zero_prob)
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0], n)
        .prop_filter("some mass", |w| w.iter().sum::<f64>() > 0.0)
}

fn stochastic(n: usize) -> impl Strategy<Value = Matrix<f64>> {
    prop::collection::vec(weights(n), n).prop_map(|rows| {
        let rows: Vec<Vec<f64>> = rows
            .into_iter()
            .map(|r| {
                let t: f64 = r.iter().sum();
                r.into_iter().map(|x| x / t).collect()
            })
            .collect();
        Matrix::from_rows(&rows)
    })
}

fn positive(n: usize) -> impl Strategy<Value = Matrix<f64>> {
    prop::collection::vec(prop::collection::vec(0.05f64..3.0, n), n).prop_map(|r| Matrix::from_rows(&r))
}

fn random_game(seed: u64, nx: usize) -> StochasticGame<f64> {
    use rand::Rng;
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let q: Vec<f64> = (0..nx * 4 * nx).map(|_| r.gen::<f64>()).collect();
    let g: Vec<f64> = (0..nx * 4).map(|_| r.gen::<f64>()).collect();
    let labels = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    StochasticGame::from_dense(
        labels("x", nx),
        labels("i", 2),
        labels("j", 2),
        |x, i, j, y| {
            let row = &q[((x * 2 + i) * 2 + j) * nx..][..nx];
            row[y] / row.iter().sum::<f64>()
        },
        |x, i, j| g[(x * 2 + i) * 2 + j],
        0,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn updated_beliefs_are_distributions(seed in any::<u64>(), w in weights(3), ns in 1usize..3) {
        let spec = spec_from_seed(seed, 3, ns, 0.3);
        let b = Belief::normalized(w).unwrap();
        for (i, j, s) in spec.letters().collect::<Vec<_>>() {
            if signal_probability(&spec, &b, i, j, s) <= 1e-15 {
                prop_assert!(belief_update(&spec, &b, i, j, s).is_err());
                continue;
            }
            let next = belief_update(&spec, &b, i, j, s).unwrap();
            prop_assert!((next.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(next.probs().iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn coefficients_in_unit_interval(p in (2usize..5).prop_flat_map(stochastic)) {
        let te = ergodicity_coefficient(&p).unwrap();
        let tp = birkhoff_coefficient(&p);
        prop_assert!((0.0..=1.0).contains(&te));
        prop_assert!((0.0..=1.0).contains(&tp));
        if p.min_entry() == 0.0 {
            prop_assert_eq!(tp, 1.0);
        }
    }

    #[test]
    fn coefficients_submultiplicative((a, b) in (2usize..4).prop_flat_map(|n| (stochastic(n), stochastic(n)))) {
        let e = |m: &Matrix<f64>| ergodicity_coefficient(m).unwrap();
        prop_assert!(e(&a.mul(&b)) <= e(&a) * e(&b) + 1e-10);
    }

    #[test]
    fn birkhoff_submultiplicative((a, b) in (2usize..4).prop_flat_map(|n| (positive(n), positive(n)))) {
        let t = birkhoff_coefficient(&a.mul(&b));
        prop_assert!(t <= birkhoff_coefficient(&a) * birkhoff_coefficient(&b) + 1e-10);
    }

    #[test]
    fn projection_bound(w in (2usize..5).prop_flat_map(weights), double in any::<bool>()) {
        let b = Belief::normalized(w).unwrap();
        let k = b.len();
        let eta = if double { 2 * k * k } else { k * k };
        let g = project(&b, eta).unwrap();
        prop_assert_eq!(g.numerators.iter().map(|&n| n as usize).sum::<usize>(), eta);
        let pb: Belief<f64> = g.to_belief();
        prop_assert_eq!(pb.support(), b.support());
        prop_assert!(b.l1_distance(&pb) <= (k * k) as f64 / eta as f64 + 1e-12);
    }

    #[test]
    fn projection_is_idempotent(w in (2usize..5).prop_flat_map(weights), eta in 4usize..40) {
        let b = Belief::normalized(w).unwrap();
        prop_assume!(eta >= b.support().len());
        let g = project(&b, eta).unwrap();
        let again = project(&g.to_belief::<f64>(), eta).unwrap();
        prop_assert_eq!(g, again);
    }

    #[test]
    fn shapley_monotone_and_nonexpansive(
        seed in any::<u64>(),
        w in prop::collection::vec(-2.0f64..2.0, 3),
        shift in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let game = random_game(seed, 3);
        let bigger: Vec<f64> = w.iter().zip(&shift).map(|(a, s)| a + s).collect();
        let tw = shapley_operator(&game, &w, None).unwrap();
        let tb = shapley_operator(&game, &bigger, None).unwrap();
        let sup = shift.iter().copied().fold(0.0, f64::max);
        for (a, b) in tw.iter().zip(&tb) {
            prop_assert!(b + 1e-9 >= *a);
            prop_assert!(b - a <= sup + 1e-9);
        }
    }

    #[test]
    fn matrix_game_between_pure_values(rows in (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, c), r)
    })) {
        let game = MatrixGame::new(Matrix::from_rows(&rows));
        let sol = matrix_game_value(&game, 1e-9).unwrap();
        prop_assert!(sol.value >= game.pure_maxmin() - 1e-9);
        prop_assert!(sol.value <= game.pure_minmax() + 1e-9);
        // The returned strategies guarantee the value.
        let m = &game.payoff;
        for c in 0..m.cols() {
            let v: f64 = (0..m.rows()).map(|r| sol.row[r] * m[(r, c)]).sum();
            prop_assert!(v >= sol.value - 1e-7);
        }
        for r in 0..m.rows() {
            let v: f64 = (0..m.cols()).map(|c| sol.col[c] * m[(r, c)]).sum();
            prop_assert!(v <= sol.value + 1e-7);
        }
    }

    #[test]
    fn game_file_round_trip(seed in any::<u64>(), k in 1usize..4, ns in 1usize..3) {
        let spec = spec_from_seed(seed, k, ns, 0.4);
        let back: GameSpec<f64> = parse_game(&game_to_json(&spec)).unwrap();
        prop_assert_eq!(GameFile::from_spec(&back), GameFile::from_spec(&spec));
    }

    #[test]
    fn eta_grows_as_epsilon_shrinks(
        eps in 0.01f64..0.9,
        factor in 0.1f64..0.99,
        m in 1u64..6,
        delta in 0.01f64..1.0,
        k in 1usize..5,
    ) {
        let coarse = compute_parameters(eps, m, delta, k).unwrap();
        let fine = compute_parameters(eps * factor, m, delta, k).unwrap();
        prop_assert!(fine.eta_eps >= coarse.eta_eps);
        prop_assert!(fine.omega_eps >= coarse.omega_eps);
        prop_assert_eq!(coarse.eta_eps % (m as f64), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn within_block_values_are_exact(seed in any::<u64>(), k in 1usize..4, ns in 1usize..3, eta in 3usize..5) {
        let spec = spec_from_seed(seed, k, ns, 0.3);
        let b1 = spec.initial_belief().clone();
        for merge in [StateMerge::Structural, StateMerge::Belief] {
            let ag = build_abstract_with(&spec, &b1, eta, 200_000, merge).unwrap();
            for n in 1..=eta {
                let abs = shapley_nstage(&ag.game, n).unwrap().values[ag.initial()];
                let exact = exact_nstage_value(&spec, &b1, n, 1_000_000).unwrap();
                prop_assert!((abs - exact).abs() <= 1e-9, "{merge:?} n={n}: {abs} vs {exact}");
            }
        }
    }
}
