//! End-to-end paths through graph generation, simulation and estimation.

use netwhittle::eval::{fit_with_policy, recovery_metrics, LambdaPolicy};
use netwhittle::graphs::{gen_graph, Benchmark, GraphKind};
use netwhittle::procgen::{observe_potentials, simulate_injections, NoiseFamily, ProcessModel};
use netwhittle::spectra::{default_bandwidth, theta_y_true};
use netwhittle::whittle::{solve, SolverOptions, WhittleProblem};
use netwhittle::TimeSeriesPanel;

fn tight() -> SolverOptions {
    SolverOptions { max_iters: 100_000, grad_tol: 1e-10, ..SolverOptions::default() }
}

#[test]
fn population_spectrum_recovers_truth_without_penalty() {
    let truth = gen_graph(&GraphKind::ErdosRenyi { p: 12, target_degree: 3 }, 5).unwrap();
    // Away from zero frequency the spectrum is complex, so both trace terms are exercised.
    let model = ProcessModel::var1_scaled_identity(12, 0.6, NoiseFamily::Gaussian);
    let theta_x = model.psd(12, 0.3).unwrap().inverse().unwrap();
    let spectrum_y = theta_y_true(&truth.matrix, &theta_x).unwrap().inverse().unwrap();
    let prob = WhittleProblem::new(spectrum_y, &theta_x, 0.0, 0).unwrap();
    let rep = solve(&prob, &tight()).unwrap();
    let gap = (rep.l_hat.as_matrix() - truth.matrix.as_matrix()).norm();
    assert!(gap < 1e-6, "gap {gap}");
}

#[test]
fn large_penalty_gives_diagonal_fit_and_small_penalty_keeps_true_edges() {
    let truth = gen_graph(&GraphKind::Chain { p: 6 }, 0).unwrap();
    let model = ProcessModel::var1_scaled_identity(6, 0.5, NoiseFamily::Gaussian);
    let n = 8000;
    let x = simulate_injections(&model, n, 6, 21).unwrap();
    let y = observe_potentials(&truth.matrix, &x).unwrap();
    let theta_x = model.psd(6, 0.0).unwrap().inverse().unwrap();
    let base = WhittleProblem::from_panel(&y, &theta_x, 0, default_bandwidth(n), 0.0).unwrap();
    let opts = SolverOptions::default();

    let lmax = base.lambda_max(&opts).unwrap();
    let empty = solve(&base.with_lambda(lmax * 1.01), &opts).unwrap();
    assert!(empty.support.is_empty());

    let fit = fit_with_policy(&base, n, default_bandwidth(n), 0.0, &LambdaPolicy::default(), &opts, None).unwrap();
    let m = recovery_metrics(&fit.report.l_hat, &truth.matrix, None).unwrap();
    assert_eq!(m.fn_, 0, "{m:?}");
    assert!(m.sign_consistent);
    assert_eq!(fit.ebic_table.unwrap().len(), 20);
}

#[test]
fn theorem1_policy_requires_truth() {
    let truth = gen_graph(&GraphKind::Chain { p: 4 }, 0).unwrap();
    let model = ProcessModel::iid(NoiseFamily::Gaussian);
    let x = simulate_injections(&model, 500, 4, 1).unwrap();
    let y = observe_potentials(&truth.matrix, &x).unwrap();
    let theta_x = model.psd(4, 0.0).unwrap().inverse().unwrap();
    let base = WhittleProblem::from_panel(&y, &theta_x, 0, 22, 0.0).unwrap();
    let policy = LambdaPolicy::Theorem1 { tau: 3.0 };
    assert!(fit_with_policy(&base, 500, 22, 0.0, &policy, &SolverOptions::default(), None).is_err());
    // The 4-node path with a 0.1 shift is not incoherent, so the recipe is undefined.
    let err = fit_with_policy(&base, 500, 22, 0.0, &policy, &SolverOptions::default(), Some((&truth, &model)));
    assert!(err.unwrap_err().to_string().contains("alpha"));
}

#[test]
fn panel_csv_round_trip_preserves_fit() {
    let truth = gen_graph(&GraphKind::GridChain { p: 10 }, 0).unwrap();
    let model = ProcessModel::var1_scaled_identity(10, 0.3, NoiseFamily::Laplace);
    let x = simulate_injections(&model, 1000, 10, 3).unwrap();
    let y = observe_potentials(&truth.matrix, &x).unwrap();
    let mut buf = Vec::new();
    y.write_csv(&mut buf, "y").unwrap();
    let back = TimeSeriesPanel::read_csv(buf.as_slice(), "y").unwrap();
    assert_eq!(back.data(), y.data());
}

#[test]
fn bundled_power_network_has_published_shape() {
    let spec = Benchmark::Power.load(None).unwrap();
    let (p, e, d) = Benchmark::Power.expected_shape();
    assert_eq!((spec.p(), spec.edges.len(), spec.max_degree), (p, e, d));
    assert!(spec.matrix.is_positive_definite());
}

#[test]
fn synthetic_families_hit_their_degrees() {
    for (name, lo, hi) in [("erdos_renyi", 3, 5), ("small_world", 3, 3), ("scale_free", 8, 10), ("grid_chain", 4, 4)] {
        let kind = GraphKind::standard(name, 30).unwrap();
        for seed in 0..3 {
            let g = gen_graph(&kind, seed).unwrap();
            assert!((lo..=hi).contains(&g.max_degree), "{name} seed {seed}: degree {}", g.max_degree);
        }
    }
}
