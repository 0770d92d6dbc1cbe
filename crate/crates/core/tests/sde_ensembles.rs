use proptest::prelude::*;
use stostab::circle_fpe::{solve_stationary_quadrature, unperturbed_density, Density};
use stostab::fields::{DiffusionCoeff1D, FlowField1D, Grid1D, PeriodicField1D, Rule1D};
use stostab::sde::{
    bin_integrals, decays_monotonically, default_test_functions, occupation_measure, occupation_measure_with,
    weak_convergence_probe, Measure, Scheme, SdeConfig,
};

const SEED: u64 = 7;

fn grid() -> Grid1D {
    Grid1D::new(512).unwrap()
}

fn sine_drift() -> PeriodicField1D {
    PeriodicField1D::from_rule(
        grid(),
        Rule1D::Sin {
            offset: 2.0,
            amplitude: 1.0,
            k: 1,
        },
    )
    .unwrap()
}

fn unit_gamma() -> DiffusionCoeff1D {
    DiffusionCoeff1D::constant(grid(), 1.0).unwrap()
}

fn cos_gamma() -> DiffusionCoeff1D {
    DiffusionCoeff1D::new(
        PeriodicField1D::from_rule(
            grid(),
            Rule1D::Cos {
                offset: 1.0,
                amplitude: 0.5,
                k: 1,
            },
        )
        .unwrap(),
    )
    .unwrap()
}

fn power_of_gamma(p: f64) -> Density {
    Density::normalized(cos_gamma().gamma_sq().map(|g| g.powf(-p))).unwrap()
}

fn cfg(dt: f64, n_steps: u64) -> SdeConfig {
    SdeConfig::new(dt, n_steps, 8, SEED, 64).unwrap()
}

#[test]
fn pure_diffusion_fills_the_circle() {
    let zero = PeriodicField1D::constant(grid(), 0.0).unwrap();
    // without drift the circle is crossed slowly, so use few bins
    let c = SdeConfig::new(1e-3, 400_000, 8, SEED, 16).unwrap();
    let occ = occupation_measure(&zero, &unit_gamma(), 0.5, &c).unwrap();
    let l1 = occ.l1_distance(&Density::uniform(grid()));
    assert!(l1 < 0.03, "L1 {l1}");
}

#[test]
fn heun_ensemble_is_reproducible() {
    let c = cfg(1e-3, 20_000);
    let a = occupation_measure(&sine_drift(), &unit_gamma(), 0.1, &c).unwrap();
    let b = occupation_measure(&sine_drift(), &unit_gamma(), 0.1, &c).unwrap();
    assert_eq!(a.counts, b.counts);
    assert_eq!(a.counts.iter().sum::<u64>(), a.samples);
    assert_eq!(a.samples, c.kept_steps() * c.n_trajectories as u64);
}

#[test]
fn step_refinement_keeps_agreement() {
    let reference = solve_stationary_quadrature(&FlowField1D::new(sine_drift()).unwrap(), &unit_gamma(), 0.1)
        .unwrap()
        .density;
    let coarse = occupation_measure(&sine_drift(), &unit_gamma(), 0.1, &cfg(2e-3, 100_000)).unwrap();
    let fine = occupation_measure(&sine_drift(), &unit_gamma(), 0.1, &cfg(1e-3, 200_000)).unwrap();
    let (lc, lf) = (coarse.l1_distance(&reference), fine.l1_distance(&reference));
    assert!(lc < 0.03 && lf < 0.03, "coarse {lc}, fine {lf}");
    let between: f64 = coarse.masses.iter().zip(&fine.masses).map(|(a, b)| (a - b).abs()).sum();
    assert!(between < 0.04, "{between}");
}

#[test]
fn ito_corrected_euler_targets_the_stratonovich_density() {
    let zero = PeriodicField1D::constant(grid(), 0.0).unwrap();
    let occ = occupation_measure_with(&zero, &cos_gamma(), 0.2, &cfg(1e-3, 200_000), Scheme::ItoCorrectedEuler)
        .unwrap();
    let (ds, di) = (occ.l1_distance(&power_of_gamma(0.5)), occ.l1_distance(&power_of_gamma(1.0)));
    assert!(di > 3.0 * ds, "strat {ds}, ito {di}");
}

#[test]
fn euler_maruyama_targets_the_ito_density() {
    let zero = PeriodicField1D::constant(grid(), 0.0).unwrap();
    let occ =
        occupation_measure_with(&zero, &cos_gamma(), 0.2, &cfg(1e-3, 200_000), Scheme::EulerMaruyama).unwrap();
    let (ds, di) = (occ.l1_distance(&power_of_gamma(0.5)), occ.l1_distance(&power_of_gamma(1.0)));
    assert!(ds > 3.0 * di, "strat {ds}, ito {di}");
}

#[test]
fn zero_noise_ensemble_follows_the_flow_density() {
    let h = FlowField1D::new(sine_drift()).unwrap();
    let occ = occupation_measure(&sine_drift(), &unit_gamma(), 0.0, &cfg(1e-3, 100_000)).unwrap();
    let l1 = occ.l1_distance(&unperturbed_density(&h).unwrap());
    assert!(l1 < 0.02, "L1 {l1}");
}

#[test]
fn weak_gaps_shrink_with_eps() {
    let h = FlowField1D::new(sine_drift()).unwrap();
    let rho0 = unperturbed_density(&h).unwrap();
    let dens: Vec<Density> = [0.2, 0.1, 0.05, 0.02]
        .iter()
        .map(|&e| solve_stationary_quadrature(&h, &unit_gamma(), e).unwrap().density)
        .collect();
    let measures: Vec<&dyn Measure> = dens.iter().map(|d| d as &dyn Measure).collect();
    let gaps = weak_convergence_probe(&measures, &rho0, &default_test_functions(grid()));
    assert!(decays_monotonically(&gaps, 0.0), "{gaps:?}");
    assert!(gaps[3] < gaps[0] / 5.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bin_integrals_conserve_mass(a in -0.9..0.9f64, b in -0.9..0.9f64, bins in 4usize..100) {
        let f = PeriodicField1D::from_fn(grid(), |x| {
            1.0 + 0.5 * a * (2.0 * std::f64::consts::PI * x).cos() + 0.5 * b * (6.0 * std::f64::consts::PI * x).sin()
        })
        .unwrap();
        let masses = bin_integrals(&f, bins);
        prop_assert_eq!(masses.len(), bins);
        prop_assert!((masses.iter().sum::<f64>() - f.integrate()).abs() < 1e-12);
        prop_assert!(masses.iter().all(|m| *m > 0.0));
    }
}
