use proptest::prelude::*;
use stostab::fields::{Grid1D, PeriodicField1D, Rule1D};
use stostab::gradient::{concentration_study, gibbs_density, well_masses, PotentialField};

fn potential(n: usize, rule: Rule1D) -> PotentialField {
    PotentialField::new(PeriodicField1D::from_rule(Grid1D::new(n).unwrap(), rule).unwrap())
}

#[test]
fn symmetric_double_well_splits_evenly() {
    let h = potential(
        1024,
        Rule1D::Cos {
            offset: 1.0,
            amplitude: 1.0,
            k: 2,
        },
    );
    assert_eq!(h.global_minima().len(), 2);
    for eps in [0.4, 0.1, 0.05] {
        let wells = well_masses(&h, eps).unwrap();
        assert_eq!(wells.len(), 2);
        assert!((wells[0].mass - 0.5).abs() < 1e-10 && (wells[1].mass - 0.5).abs() < 1e-10);
    }
}

#[test]
fn flat_potential_is_uniform() {
    let h = potential(256, Rule1D::Constant { value: 3.0 });
    assert!(h.is_flat());
    let g = gibbs_density(&h, 0.05).unwrap();
    assert!(g.density.samples().iter().all(|v| (v - 1.0).abs() < 1e-12));
    let t = concentration_study(&h, &[0.2, 0.1], 0.25).unwrap();
    assert!(t.log_rate_ok.is_none());
}

#[test]
fn shallower_well_loses_mass_as_eps_shrinks() {
    // minima of unequal depth: the deeper one takes everything in the limit
    let h = potential(
        1024,
        Rule1D::Trig {
            offset: 2.0,
            cos: vec![0.0, 1.0],
            sin: vec![0.3],
        },
    );
    let masses: Vec<f64> = [0.4, 0.2, 0.1]
        .iter()
        .map(|&eps| {
            let w = well_masses(&h, eps).unwrap();
            w.iter().map(|m| m.mass).fold(f64::INFINITY, f64::min)
        })
        .collect();
    assert!(masses.windows(2).all(|p| p[1] < p[0]), "{masses:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gibbs_matches_the_closed_form(
        c1 in -1.0..1.0f64,
        s1 in -1.0..1.0f64,
        c2 in -0.5..0.5f64,
        eps in 0.2..1.0f64,
    ) {
        let n = 512;
        let h = potential(n, Rule1D::Trig { offset: 0.0, cos: vec![c1, c2], sin: vec![s1] });
        let g = gibbs_density(&h, eps).unwrap();
        let raw: Vec<f64> = h.field().samples().iter().map(|v| (-2.0 * v / eps).exp()).collect();
        let z = raw.iter().sum::<f64>() / n as f64;
        for (got, r) in g.density.samples().iter().zip(&raw) {
            prop_assert!((got - r / z).abs() <= 1e-10 * (r / z).max(1.0));
        }
    }
}
