//! Data-driven oracle crosschecks on reference-scale datasets.

use std::sync::OnceLock;

use cvkit::losses::EigenLossConfig;
use cvkit::oracle::{
    fd_generator, ulam_spectrum, ulam_transfer, BinSpec, EigenResult, Grid2D, GridCv, ScalarCv,
};
use cvkit::potentials::{Potential, Thermo};
use cvkit::sampler::{lagged_pairs, simulate, subsample, Dataset};
use cvkit::experiment::eigenvalue_estimate;

fn example1() -> (Potential, Thermo) {
    (Potential::example1(), Thermo::new(4.0))
}

/// Reference dataset: 1e5 steps at dt 0.005 recorded every 2 steps.
fn example1_data() -> &'static Dataset {
    static DATA: OnceLock<Dataset> = OnceLock::new();
    DATA.get_or_init(|| {
        let (p, th) = example1();
        let traj = simulate(p, th, [1.0, 0.0], 0.005, 100_000, 1).unwrap();
        subsample(&traj, 2)
    })
}

fn example1_oracle() -> &'static (Grid2D, EigenResult) {
    static ORACLE: OnceLock<(Grid2D, EigenResult)> = OnceLock::new();
    ORACLE.get_or_init(|| {
        let (p, th) = example1();
        let grid = Grid2D::default_for(p, th, 161, 161);
        let eig = fd_generator(&grid).leading_eigs(2).unwrap();
        (grid, eig)
    })
}

#[test]
fn reference_dataset_sizes() {
    // 1e5 steps recorded every 2 -> exactly 5e4 states.
    let data = example1_data();
    assert_eq!(data.points.len(), 50_000);
    assert_eq!(data.effective_dt, 0.01);
    // Lag time 1.0 at effective step 0.01 -> 100 steps, 5e4 - 100 pairs.
    let pairs = lagged_pairs(data, 100).unwrap();
    assert_eq!(pairs.tau, 1.0);
    assert_eq!(pairs.pairs.len(), 50_000 - 100);

    // Second system: 5e5 steps every 2 -> 2.5e5 states.
    let traj = simulate(
        Potential::Example2,
        Thermo::new(1.5),
        [2.0, 0.0],
        0.005,
        500_000,
        1,
    )
    .unwrap();
    assert_eq!(subsample(&traj, 2).points.len(), 250_000);
}

#[test]
fn trajectory_visits_both_wells() {
    let data = example1_data();
    let left = data.points.iter().filter(|x| x[0] < 0.0).count() as f64;
    let frac = left / data.points.len() as f64;
    assert!(
        (0.05..=0.95).contains(&frac),
        "left-well fraction {frac:.3}"
    );
}

#[test]
fn ulam_nu1_matches_semigroup_of_fd_lambda1() {
    let data = example1_data();
    let (_, eig) = example1_oracle();
    let lambda1 = eig.eigenvalues[1];
    let pairs = lagged_pairs(data, 100).unwrap();
    let bins = BinSpec::new(Potential::example1().default_domain(), 30, 30);
    let model = ulam_transfer(&pairs.pairs, &bins).unwrap();
    let spectrum = ulam_spectrum(&model, 2).unwrap();
    let nu1 = spectrum.eigenvalues[1];
    let target = (-pairs.tau * lambda1).exp();
    assert!(
        (nu1 - target).abs() <= 0.1,
        "nu1 = {nu1:.4}, exp(-tau lambda1) = {target:.4}"
    );
    // Symmetrized spectrum stays in [-1, 1] with a simple top eigenvalue.
    assert!((spectrum.eigenvalues[0] - 1.0).abs() <= 1e-10);
    assert!(spectrum.eigenvalues.iter().all(|&v| (-1.0 - 1e-10..=1.0 + 1e-10).contains(&v)));
}

#[test]
fn interpolated_eigenfunction_estimates_lambda1_from_data() {
    // Long fixture: the estimate's noise floor is set by the number of
    // well transitions, so this uses 1.6e6 steps.
    let (p, th) = example1();
    let (grid, eig) = example1_oracle();
    let lambda1 = eig.eigenvalues[1];
    let traj = simulate(p, th, [1.0, 0.0], 0.005, 1_600_000, 7).unwrap();
    let data = subsample(&traj, 4);
    let pairs = lagged_pairs(&data, 50).unwrap();
    let cv = GridCv::new(grid, &eig.functions[1]);
    let cfg = EigenLossConfig {
        k: 1,
        omegas: vec![1.0],
        alpha: 0.0,
        beta: th.beta,
        tau: pairs.tau,
        var_guard: 1e-6,
    };
    let fns: [&dyn ScalarCv; 1] = [&cv];
    let with_pairs = eigenvalue_estimate(&fns, &data.points, Some(&pairs), &cfg).unwrap();
    assert!(
        (with_pairs[0].lambda - lambda1).abs() <= 0.15 * lambda1,
        "transfer-form estimate {:.5} vs oracle {lambda1:.5}",
        with_pairs[0].lambda
    );
    let gradient_form = eigenvalue_estimate(&fns, &data.points, None, &cfg).unwrap();
    assert!(
        (gradient_form[0].lambda - lambda1).abs() <= 0.15 * lambda1,
        "gradient-form estimate {:.5} vs oracle {lambda1:.5}",
        gradient_form[0].lambda
    );
}

#[test]
fn example2_grid_spectrum_is_well_behaved() {
    let grid = Grid2D::default_for(Potential::Example2, Thermo::new(1.5), 141, 101);
    let eig = fd_generator(&grid).leading_eigs(3).unwrap();
    assert!(eig.eigenvalues[0].abs() <= 1e-8);
    assert!(eig.eigenvalues[1] > 0.0 && eig.eigenvalues[1] < eig.eigenvalues[2]);
    assert!(eig.orthonormality_defect() <= 1e-8);
    // The slow mode separates the two metastable regions.
    let f1 = &eig.functions[1];
    let left = f1[grid.nearest_node([-2.0, 0.0])];
    let right = f1[grid.nearest_node([2.0, 0.0])];
    assert!(
        left * right < 0.0,
        "phi1 does not change sign between wells ({left:.3} vs {right:.3})"
    );
}
