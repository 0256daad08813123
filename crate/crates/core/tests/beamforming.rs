use ris_dm_lab::beamforming::{
    el_an_vector, el_precoder, el_ris_phase, matched_filter_baseline, mnpl_solve, power_split, Algorithm,
};
use ris_dm_lab::geometry::Orientation;
use ris_dm_lab::harness::{Scenario, ScenarioConfig};
use ris_dm_lab::numerics::RngStream;

#[test]
fn finer_power_split_grid_changes_little() {
    let s = Scenario::from_config(&ScenarioConfig::default()).unwrap();
    let ch = s.channels(&s.eve_aligned(0), 0, &s.draw_multipath(&mut RngStream::new(3))).unwrap();
    let c = &s.consts;
    let upsilon = el_ris_phase(&ch, c).unwrap();
    let w0 = ch.composite_bob(upsilon.values()).conjugate().normalize();
    let v = el_an_vector(&ch, &w0, &upsilon, c).unwrap();
    let w = el_precoder(&ch, &v, &upsilon, c).unwrap();
    let (_, coarse) = power_split(&ch, &w, &v, &upsilon, c, 1001);
    let (_, fine) = power_split(&ch, &w, &v, &upsilon, c, 10_001);
    assert!(fine >= coarse && fine - coarse < 1e-4, "{coarse} vs {fine}");
}

#[test]
fn designs_beat_random_phase_matched_filter() {
    let s = Scenario::from_config(&ScenarioConfig::desk()).unwrap();
    let b = &s.rotation;
    for seed in 0..20 {
        let mut rng = RngStream::new(seed);
        let o = Orientation {
            alpha: rng.uniform_in(b.alpha_min, b.alpha_max),
            beta: rng.uniform_in(b.beta_min, b.beta_max),
        };
        let ch = s.channels(&o, rng.below(s.slots()), &s.draw_multipath(&mut rng)).unwrap();
        let base = matched_filter_baseline(&ch, &s.consts, &mut rng).unwrap();
        for algo in [Algorithm::Mnpl, Algorithm::El] {
            let sol = algo.solve(&ch, &s.consts).unwrap();
            sol.check(&s.consts).unwrap();
            assert!(sol.sr >= base.sr, "seed {seed} {}: {} < {}", algo.id(), sol.sr, base.sr);
        }
    }
}

#[test]
fn default_scenario_nulls_eve() {
    let s = Scenario::from_config(&ScenarioConfig::default()).unwrap();
    let ch = s.channels(&s.eve_aligned(0), 0, &s.no_multipath()).unwrap();
    let sol = mnpl_solve(&ch, &s.consts).unwrap();
    let leak = (ch.h_ae.transpose() * &sol.w)[0].norm();
    assert!(leak < 1e-9 * s.consts.tx_power.sqrt() * ch.h_ae.norm());
    assert!((sol.w.norm_squared() - s.consts.tx_power).abs() < 1e-9 * s.consts.tx_power);
}
