use dualgfm::engine::{DeviceModel, EventKind};
use dualgfm::scenario::*;

fn shipped(name: &str) -> String {
    let path = format!("{}/cases/{name}.case", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

#[test]
fn every_builtin_initializes() {
    for v in Wscc9Variant::ALL {
        let init = builtin_wscc9(v).initialize().unwrap_or_else(|e| panic!("{}: {e}", v.name()));
        assert!(init.equilibrium.residual < 1e-8, "{}: {:e}", v.name(), init.equilibrium.residual);
        assert_eq!(init.system.n_y(), 18);
    }
}

#[test]
fn shipped_case_files_match_the_builtins() {
    for v in Wscc9Variant::ALL {
        let case = parse_case(&shipped(v.name())).unwrap();
        assert_eq!(case, builtin_wscc9(v), "{}", v.name());
        assert_eq!((case.network.buses.len(), case.network.branches.len(), case.devices.len()), (9, 9, 3));
    }
}

#[test]
fn variants_place_the_expected_devices() {
    let kinds = |v| builtin_wscc9(v).devices.iter().map(|d| d.model.kind()).collect::<Vec<_>>();
    assert_eq!(kinds(Wscc9Variant::Machines), ["machine"; 3]);
    assert_eq!(kinds(Wscc9Variant::DualGfm), ["dualgfm"; 3]);
    assert_eq!(kinds(Wscc9Variant::Mixed), ["dualgfm", "machine", "machine"]);
    let irish = builtin_wscc9(Wscc9Variant::Irish);
    for d in &irish.devices {
        let DeviceModel::DualGfm(g) = d.model else { panic!() };
        assert_eq!((g.params.k, g.params.m_t, g.params.d_t), (1.0, 15.0, 0.5));
    }
    let p = dual_gfm_params();
    assert_eq!(
        [p.k, p.m_t, p.d_t, p.t_m_t, p.r_t, p.k_q, p.t_q, p.k_r_t, p.t_r_t],
        [0.1, 30.0, 20.0, 2.0, 0.05, 10.0, 5.0, 40.0, 1.0]
    );
}

#[test]
fn disturbance_schedules() {
    let fig3 = paper_events(PaperScenario::Fig3);
    assert_eq!(fig3.len(), 1);
    assert_eq!(fig3[0].t, 1.0);
    assert_eq!(fig3[0].kind, EventKind::LoadScale { bus: 5, factor: 0.8 });

    let fig4 = paper_events(PaperScenario::Fig4);
    assert!(matches!(fig4[0].kind, EventKind::FaultApply { bus: 7, .. }));
    assert_eq!(fig4[1].kind, EventKind::FaultClear { bus: 7 });
    // three cycles at the 50 Hz base
    let base_hz = wscc9_network().base_hz;
    assert!((fig4[1].t - fig4[0].t - 3.0 / base_hz).abs() < 1e-12);

    for s in [PaperScenario::Fig3, PaperScenario::Fig4] {
        assert_eq!(PaperScenario::from_name(s.name()), Some(s));
    }
    assert_eq!(PaperScenario::from_name("fig5"), None);
}

#[test]
fn powerflow_of_the_standard_case() {
    let pf = builtin_wscc9(Wscc9Variant::Machines).powerflow().unwrap();
    // slack output of the standard solution
    assert!((pf.injections[0].re - 0.716_41).abs() < 1e-4, "{}", pf.injections[0].re);
    assert!((pf.injections[0].im - 0.270_46).abs() < 1e-4, "{}", pf.injections[0].im);
}

#[test]
fn case_file_errors_carry_positions() {
    let text = shipped("wscc9-dualgfm").replacen("rating=4000", "rating=4000 colour=blue", 1);
    let err = parse_case(&text).unwrap_err();
    assert!(matches!(err.kind, CaseErrorKind::UnknownKey { .. }), "{err}");
    assert!(err.to_string().starts_with(&format!("line {}, column", err.line)));

    let text = shipped("wscc9-dualgfm").replacen("bus=2", "bus=42", 1);
    assert!(matches!(parse_case(&text).unwrap_err().kind, CaseErrorKind::DanglingBus(42)));
}
