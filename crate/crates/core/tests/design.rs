use stap_slp::designer::DesignResult;
use stap_slp::experiments::{preset, sweep, CommMode, Scenario, ScenarioConfig, SweepAxis, VariantKind};

fn one_user() -> ScenarioConfig {
    let mut c = preset("desk").unwrap();
    c.comm.n_users = 1;
    c
}

#[test]
fn zf_design_is_ci_feasible_with_binding_margins() {
    let sc = Scenario::build(&one_user()).unwrap();
    let r = sc.design(VariantKind::Papr, CommMode::Zf, None).unwrap();
    let zf = sc.zf().unwrap();
    assert!(zf.max_residual(&r.waveform) <= 1e-6);
    // the zero-forcing point sits on the corner of every CI sector
    let m = sc.ci.margins(&r.waveform);
    let lo = m.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(lo >= -1e-6, "{lo}");
    assert!(hi <= 1e-5, "{hi}");
    assert_eq!(r.comm, "zf");
}

#[test]
fn papr_with_zero_eps_matches_cm() {
    let mut c = one_user();
    c.variant.papr_eps = 0.0;
    let sc = Scenario::build(&c).unwrap();
    let cm = sc.design(VariantKind::Cm, CommMode::Ci, None).unwrap();
    let papr = sc.design(VariantKind::Papr, CommMode::Ci, None).unwrap();
    assert!((cm.sinr_db - papr.sinr_db).abs() < 0.05, "{} vs {}", cm.sinr_db, papr.sinr_db);
    assert!((papr.feasibility.papr - 1.0).abs() < 1e-9);
}

#[test]
fn design_is_deterministic_and_round_trips() {
    let sc = Scenario::build(&one_user()).unwrap();
    let a = sc.design(VariantKind::Cm, CommMode::Ci, None).unwrap();
    let b = sc.design(VariantKind::Cm, CommMode::Ci, None).unwrap();
    assert_eq!(a.waveform, b.waveform);
    assert_eq!(a.trace_csv(), b.trace_csv());

    let back = DesignResult::from_json(&a.to_json().unwrap()).unwrap();
    assert_eq!(back.waveform, a.waveform);
    assert_eq!(back.filter, a.filter);
    assert_eq!(back.variant, a.variant);
    assert_eq!(back.sinr_db, a.sinr_db);

    assert!(a.trace.windows(2).all(|w| w[1].sinr_db >= w[0].sinr_db - 1e-6));
    assert!(a.feasibility.snapped && a.feasibility.warning.is_none());
    assert!(a.init_maximin.unwrap() > 0.0);
}

#[test]
fn radar_only_from_the_ci_waveform_does_not_lose() {
    let sc = Scenario::build(&one_user()).unwrap();
    let ci = sc.design(VariantKind::Cm, CommMode::Ci, None).unwrap();
    let radar = sc.design(VariantKind::Cm, CommMode::RadarOnly, Some(&ci.waveform)).unwrap();
    assert!(radar.sinr_db >= ci.sinr_db - 1e-6);
    assert!(radar.feasibility.min_ci_margin.is_none());
}

#[test]
fn sweep_keeps_going_past_failed_points() {
    let rows = sweep(&one_user(), SweepAxis::NUsers, &[1.0, 0.5], &[VariantKind::Cm], &[CommMode::Ci]);
    assert_eq!(rows.len(), 2);
    assert!(rows[0].sinr_db.is_some() && rows[0].error.is_none());
    assert!(rows[1].sinr_db.is_none() && rows[1].error.is_some());
}
