//! End-to-end checks across modules through the public API.

use bmstab::experiments::{generate_scenario, Family, ScenarioSpec};
use bmstab::geometry::{bm_deficit, hull_gap, sym_diff_min_translation};
use bmstab::reduction::{balancing_translation, cone_split_deficits, ConeFamily};

fn dented(rho: f64) -> ScenarioSpec {
    ScenarioSpec { family: Family::DentedConvex, dim: 2, t: 0.5, perturbation: rho, h: 0.02, seed: 4 }
}

#[test]
fn dented_pair_balances_and_splits() {
    let sc = generate_scenario(&dented(0.05)).unwrap();
    let family = ConeFamily::for_dim(2).unwrap();
    let bal = balancing_translation(&sc.a, &sc.b, &family, 1).unwrap();
    assert!(bal.residual <= 1e-3 * sc.a.volume(), "residual {}", bal.residual);

    let b = sc.b.translate(&bal.translation);
    let split = cone_split_deficits(&sc.a, &b, &family, 0.5).unwrap();
    assert_eq!(split.rows.len(), 3);
    assert!(split.superadditive());
    let mass: f64 = split.rows.iter().map(|r| r.volume_a).sum();
    assert!((mass - sc.a.volume()).abs() <= 1e-9 * mass);
}

#[test]
fn deeper_dent_means_larger_hull_gap_and_distance() {
    let mut last = (0.0, 0.0);
    for rho in [0.02, 0.08, 0.2] {
        let sc = generate_scenario(&dented(rho)).unwrap();
        let gap = hull_gap(&sc.a).unwrap().value;
        let sd = sym_diff_min_translation(&sc.a, &sc.b).unwrap().value / sc.a.volume();
        assert!(gap > last.0 && sd > last.1, "rho {rho}: gap {gap}, sd {sd}");
        // the bm deficit is nonnegative within grid error
        let d = bm_deficit(&sc.a, &sc.b, 0.5).unwrap();
        assert!(d.upper() >= 0.0);
        last = (gap, sd);
    }
}
