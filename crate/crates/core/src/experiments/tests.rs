use super::*;
use crate::events::{EventKind, MarkedPoints};
use crate::lattice::{SiteId, SiteSet};
use crate::percolation::EventPredicate;
use crate::theory::{k_f, lemma22_prediction, psi_factor};
use num_complex::Complex64;

/// The bundled 12-site demo region.
fn demo_region() -> RegionParams {
    RegionParams { mesh: 1.0, halfwidth: 2.0, anchor: [0.25, 0.0] }
}

fn demo_marks() -> MarkedPoints {
    MarkedPoints::new(-1.0, 2.0, Complex64::new(0.5, 0.87)).with_scales(0.25, 0.25, 0.25).with_s(0.25)
}

fn all_kinds(m: MarkedPoints) -> Vec<EventSpec> {
    EventKind::ALL.iter().map(|&k| EventSpec::new(k, m)).collect()
}

#[test]
fn demo_region_has_twelve_sites() {
    assert_eq!(demo_region().build().unwrap().len(), 12);
}

#[test]
fn site_open_is_half_and_always_is_one() {
    let m = MarkedPoints::new(-0.5, 0.5, Complex64::new(0.0, 0.5));
    let r = RegionParams { mesh: 0.25, halfwidth: 1.0, anchor: [0.0, 0.0] };
    let plan =
        EstimatePlan::new(r, vec![EventSpec::new(EventKind::SiteOpen, m), EventSpec::new(EventKind::Always, m)], 20_000, Seed(5));
    let run = &run_estimates(&plan, 2).unwrap()[0];
    let recs = run.records();
    assert!((recs[0].mean - 0.5).abs() < 5.0 * (0.25f64 / 20_000.0).sqrt(), "{}", recs[0].mean);
    assert_eq!((recs[1].mean, recs[1].ci95, recs[1].count), (1.0, 0.0, 20_000));
}

#[test]
fn tiny_region_matches_enumeration() {
    let plan = EstimatePlan::new(demo_region(), all_kinds(demo_marks()), 40_000, Seed(11));
    let rows = enumeration_agreement(&plan, 2).unwrap();
    assert_eq!(rows.len(), EventKind::ALL.len() + 7);
    for r in &rows {
        assert!(r.within(5.0), "{r:?}");
    }
    assert!(rows.iter().any(|r| r.exact > 0.0 && r.exact < 1.0));
}

#[test]
fn worker_count_does_not_change_results() {
    let plan = EstimatePlan::new(demo_region(), all_kinds(demo_marks()), 3_001, Seed(0xfeed));
    let a = &run_estimates(&plan, 1).unwrap()[0];
    let b = &run_estimates(&plan, 4).unwrap()[0];
    assert_eq!(a.patterns, b.patterns);
    assert_eq!(a.counts, b.counts);
    let dir = tempfile::tempdir().unwrap();
    write_estimates(&dir.path().join("a"), &plan, &a.records()).unwrap();
    write_estimates(&dir.path().join("b"), &plan, &b.records()).unwrap();
    for f in ["estimates.csv", "manifest.json"] {
        let x = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn margin_violation_fails_before_sampling() {
    let far = MarkedPoints::new(-1.9, 2.0, Complex64::new(0.5, 0.87)).with_scales(0.5, 0.25, 0.5);
    let plan = EstimatePlan::new(demo_region(), vec![EventSpec::new(EventKind::E_II, far)], u64::MAX, Seed(1));
    let t = std::time::Instant::now();
    assert!(matches!(run_estimates(&plan, 1), Err(Error::EventSpec(_))));
    assert!(t.elapsed().as_secs() < 5);
}

#[test]
fn plan_validation_collects_problems() {
    let m = demo_marks();
    let mut plan = EstimatePlan::new(demo_region(), vec![EventSpec::new(EventKind::E_IR, m).with_id("x"), EventSpec::new(EventKind::TwoPointBB, m).with_id("x/bracket-lower")], 0, Seed(1));
    plan.meshes = vec![-1.0];
    let p = plan.problems();
    assert!(p.iter().any(|e| e.contains("n must")), "{p:?}");
    assert!(p.iter().any(|e| e.contains("duplicate")), "{p:?}");
    assert!(p.iter().any(|e| e.contains("mesh -1")), "{p:?}");
    let e = EventSpec::new(EventKind::E_IR, m).with_method(RadiusMethod::Green);
    let plan = EstimatePlan::new(demo_region(), vec![e], 1, Seed(1));
    assert!(plan.problems().iter().any(|e| e.contains("green")));
}

#[test]
fn plan_json_roundtrip_and_expansion() {
    let plan = EstimatePlan::new(demo_region(), all_kinds(demo_marks()), 10, Seed(3));
    let json = serde_json::to_string(&plan).unwrap();
    let back: EstimatePlan = serde_json::from_str(&json).unwrap();
    assert_eq!(back, plan);
    let labels: Vec<String> = plan.expanded_events().iter().map(EventSpec::label).collect();
    assert!(labels.contains(&"E_IR/bracket-lower".to_string()));
    assert!(labels.contains(&"E_IR/bracket-upper".to_string()));
    assert!(labels.contains(&"TwoPointBB".to_string()));
}

#[test]
fn samplewise_containments_on_shared_stream() {
    let m = MarkedPoints::new(0.0, 1.0, Complex64::new(0.5, 0.5)).with_scales(0.25, 0.25, 0.25);
    let events = vec![
        EventSpec::new(EventKind::ThreePoint, m),
        EventSpec::new(EventKind::TwoPointBB, m),
        EventSpec::new(EventKind::E_II, m),
        EventSpec::new(EventKind::E_IR, m).with_method(RadiusMethod::BracketLower),
        EventSpec::new(EventKind::E_IR, m).with_method(RadiusMethod::BracketUpper),
    ];
    let r = RegionParams { mesh: 1.0 / 8.0, halfwidth: 2.0, anchor: [0.5, 0.0] };
    let run = run_on_region(&EstimatePlan::new(r, events, 4_000, Seed(9)), r, 2).unwrap();
    for &pat in run.patterns.keys() {
        let bit = |k: usize| pat >> k & 1 == 1;
        assert!(!bit(0) || bit(1), "ThreePoint without TwoPointBB");
        assert!(!bit(1) || bit(2), "TwoPointBB without E_II");
        assert!(!bit(3) || bit(4), "bracket-lower without bracket-upper");
    }
    let c = &run.counts.counts;
    assert!(c[0] <= c[1] && c[1] <= c[2] && c[3] <= c[4]);
    assert!(c[0] > 0);
}

fn unit_cfg(meshes: Vec<f64>, n: u64) -> SweepConfig {
    SweepConfig::new(0.5, 2.0, meshes, n, Seed(21))
}

#[test]
fn thm1_all_open_and_swap_symmetry() {
    let w = Complex64::new(0.5, 0.5);
    let mut cfg = unit_cfg(vec![0.25], 50);
    cfg.law = Law::AllOpen;
    let t = thm1_ratio(MarkedPoints::new(0.0, 1.0, w), &cfg).unwrap();
    assert_eq!(t.rows[0].value, Some(1.0));
    assert_eq!(t.rows[0].ci95, Some(0.0));
    assert_eq!(t.rows[0].theory, k_f());

    let cfg = unit_cfg(vec![0.25, 0.125], 3_000);
    let a = thm1_ratio(MarkedPoints::new(0.0, 1.0, w), &cfg).unwrap();
    let b = thm1_ratio(MarkedPoints::new(1.0, 0.0, w), &cfg).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        let (xv, yv) = (x.value.unwrap(), y.value.unwrap());
        assert!((xv - yv).abs() <= 1e-12 * xv, "{xv} vs {yv}");
        assert!((x.ci95.unwrap() - y.ci95.unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn thm1_interval_companions_report_both_brackets() {
    let m = MarkedPoints::new(0.0, 1.0, Complex64::new(0.5, 0.5)).with_scales(0.25, 0.25, 0.25);
    let t = thm1_ratio(m, &unit_cfg(vec![0.25], 500)).unwrap();
    assert_eq!(t.variants(), vec!["point", "interval/bracket-lower", "interval/bracket-upper"]);
}

#[test]
fn thm2_all_open_and_translation() {
    let m = MarkedPoints::new(0.0, 1.5, Complex64::new(1.5, 0.5)).with_s(0.5);
    let mut cfg = SweepConfig::new(0.75, 2.5, vec![0.25], 50, Seed(4));
    cfg.law = Law::AllOpen;
    let t = thm2_ratio(m, &cfg).unwrap();
    assert_eq!(t.rows[0].value, Some(1.0));
    assert_eq!(t.rows[0].theory, psi_factor(0.0, 0.5, 1.5, m.w()).unwrap());

    // A lattice translation sees fresh bits but the same law.
    let cfg = SweepConfig::new(0.75, 2.5, vec![0.125], 20_000, Seed(4));
    let a = &thm2_ratio(m, &cfg).unwrap().rows[0];
    let moved = MarkedPoints::new(3.0, 4.5, Complex64::new(4.5, 0.5)).with_s(0.5);
    let b = &thm2_ratio(moved, &SweepConfig { center: 3.75, ..cfg }).unwrap().rows[0];
    assert!((a.theory - b.theory).abs() < 1e-12);
    let (va, vb) = (a.value.unwrap(), b.value.unwrap());
    let sd = ((a.ci95.unwrap().powi(2) + b.ci95.unwrap().powi(2)).sqrt()) / 1.96;
    assert!((va - vb).abs() < 5.0 * sd, "{va} vs {vb}");
}

#[test]
fn lemma22_prediction_column_and_bracket_order() {
    let w = Complex64::new(0.5, 0.75);
    let s3 = [0.5, 0.25];
    let rows = lemma22_check(0.0, 0.5, w, &s3, &SweepConfig::new(0.5, 2.5, vec![0.125], 2_000, Seed(8))).unwrap();
    assert_eq!(rows.len(), 4);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0].method, "bracket-lower");
        assert!(pair[0].rescaled <= pair[1].rescaled);
        let want = lemma22_prediction(0.0, 0.5, w, pair[0].s3).unwrap() / pair[0].s3.powf(5.0 / 48.0);
        assert_eq!(pair[0].prediction, want);
    }
}

#[test]
fn bi_check_reports_both_brackets_and_cardy() {
    let w = Complex64::new(1.0, 0.6);
    let rows = bi_check(0.0, 0.5, 2.0, 0.25, w, 0.5, &SweepConfig::new(1.0, 3.0, vec![0.125], 2_000, Seed(6))).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].cardy, cardy_edges(0.125, 0.0, 0.5, 1.75, 2.25).unwrap());
    assert!(rows[0].rescaled.unwrap() <= rows[1].rescaled.unwrap());
}

#[test]
fn identical_coupling_pair_is_exactly_one() {
    let pair = CouplingPair { v: EventKind::E_II, v_pt: EventKind::E_pt_II, w: EventKind::E_II, w_pt: EventKind::E_pt_II };
    let m = MarkedPoints::new(0.0, 1.0, Complex64::new(0.5, 0.5)).with_scales(0.25, 0.25, 0.25);
    let t = coupling_ratio(pair, m, &[0.25, 0.125], &SweepConfig::new(0.5, 2.0, vec![0.125], 500, Seed(2))).unwrap();
    for r in &t.rows {
        assert_eq!((r.value, r.ci95), (Some(1.0), Some(0.0)));
    }
}

#[test]
fn coupling_ratio_matches_enumeration_on_small_region() {
    let m = MarkedPoints::new(0.0, 1.0, Complex64::new(0.5, 0.5)).with_scales(0.5, 0.5, 0.5);
    let pair = CouplingPair::COMBINED_VS_CROSSING;
    let params = RegionParams { mesh: 0.5, halfwidth: 1.0, anchor: [0.5, 0.0] };
    let region = params.build().unwrap();
    assert!(region.len() <= 20, "{}", region.len());
    let s = 0.5;
    for method in [RadiusMethod::BracketLower, RadiusMethod::BracketUpper] {
        let specs: Vec<EventSpec> = [pair.v, pair.v_pt, pair.w, pair.w_pt]
            .iter()
            .map(|&k| EventSpec::new(k, MarkedPoints { s2: Some(s), ..m }).with_method(method))
            .collect();
        let p = exact_probabilities(&region, &specs).unwrap();
        let exact = p[1] * p[2] / (p[0] * p[3]);
        let t = coupling_ratio(pair, m, &[s], &SweepConfig::new(0.5, 1.0, vec![0.5], 100_000, Seed(13))).unwrap();
        let row = t.rows.iter().find(|r| r.variant.ends_with(method.name())).unwrap();
        let sd = row.ci95.unwrap() / 1.96;
        assert!((row.value.unwrap() - exact).abs() <= 5.0 * sd + 1e-12, "{:?} vs {exact}", row.value);
    }
}

#[test]
fn doubling_control_is_flagged_and_roomy_window_is_not() {
    let m = MarkedPoints::new(0.0, 1.0, Complex64::new(0.5, 0.5));
    let events = vec![EventSpec::new(EventKind::TwoPointBB, m)];
    let tight = RegionParams { mesh: 0.125, halfwidth: 0.6, anchor: [0.5, 0.0] };
    let rows = doubling_test(&EstimatePlan::new(tight, events.clone(), 20_000, Seed(1)), 2).unwrap();
    assert!(rows[0].flagged, "{rows:?}");
    let roomy = RegionParams { mesh: 0.125, halfwidth: 6.0, anchor: [0.5, 0.0] };
    let rows = doubling_test(&EstimatePlan::new(roomy, events, 20_000, Seed(1)), 2).unwrap();
    assert!(!rows[0].flagged, "{rows:?}");
}

#[test]
fn fkg_trivial_and_standard_instances() {
    let region = demo_region().build().unwrap();
    let sites: Vec<SiteId> = region.sites().collect();
    let (p, q) = (sites[0], sites[1]);
    let e = EventPredicate::new(SiteSet::new(vec![p, q]), move |c| c.is_open(p) || c.is_open(q));
    let a = SiteSet::singleton(sites[2]);
    let v = fkg_check(&region, &EventPredicate::always(true), &e, &a, &[true]).unwrap();
    assert!(v.holds && v.tight);
    // Two increasing crossing-type events sharing sites: strict.
    let (x, y, z) = (sites[3], sites[4], sites[5]);
    let b = EventPredicate::new(SiteSet::new(vec![x, y]), move |c| c.is_open(x) && c.is_open(y));
    let e = EventPredicate::new(SiteSet::new(vec![y, z]), move |c| c.is_open(y) || c.is_open(z));
    let v = fkg_check(&region, &b, &e, &SiteSet::empty(), &[]).unwrap();
    assert!(v.holds && !v.tight, "{v:?}");
    // Supports that touch A are rejected.
    assert!(fkg_check(&region, &b, &e, &SiteSet::singleton(x), &[true]).is_err());
    // Decreasing events are rejected.
    let dec = EventPredicate::new(SiteSet::singleton(x), move |c| !c.is_open(x));
    assert!(fkg_check(&region, &dec, &e, &SiteSet::empty(), &[]).is_err());
}

#[test]
fn random_fkg_instances_hold() {
    let region = demo_region().build().unwrap();
    for k in 0..50 {
        let inst = random_fkg_instance(&region, Seed(99), k);
        assert!(fkg_check(&region, &inst.b, &inst.e, &inst.a, &inst.nu).unwrap().holds, "instance {k}");
    }
}
