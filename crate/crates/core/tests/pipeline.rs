use spopt_core::applications::{spsd_test_matrix, symplectic_eigenpairs};
use spopt_core::geometry::Metric;
use spopt_core::models::{
    build_rom, relative_errors, simulate_full, sine_gordon_system, wave_system, Centering, IntegratorOptions,
    NonlinearTreatment, Reduction, SineGordonParams, WaveParams,
};
use spopt_core::optimizer::SolverOptions;
use spopt_core::retraction::RetractionKind;

#[test]
fn eigenvalues_of_a_small_test_matrix() {
    let (a, truth) = spsd_test_matrix(30, 2, 11).unwrap();
    for retraction in [RetractionKind::CayleyEconomical, RetractionKind::SR] {
        let opts = SolverOptions {
            retraction,
            metric: Metric::Euclidean,
            gtol: 1e-12,
            niter: 5000,
            gamma_max: 1.0,
            ..SolverOptions::default()
        };
        let s = symplectic_eigenpairs(&a, 4, &opts).unwrap();
        for (d, t) in s.values.iter().zip(&truth) {
            assert!((d - t).abs() < 1e-9, "{d} vs {t}");
        }
    }
}

#[test]
fn optimized_wave_rom_conserves_energy() {
    let sys = wave_system(60, WaveParams::default()).unwrap();
    let integ = IntegratorOptions::new(0.02, 2.0);
    let full = simulate_full(&sys, &integ).unwrap();
    let snaps = full.snapshots(51).unwrap();
    let opts = SolverOptions {
        retraction: RetractionKind::SR,
        metric: Metric::Euclidean,
        niter: 200,
        ..Reduction::default_options()
    };
    let rom = build_rom(
        &sys,
        &snaps,
        6,
        &Reduction::Optimized(opts),
        NonlinearTreatment::Exact,
        Centering::InitialState,
    )
    .unwrap();
    let traj = rom.simulate(&sys, &integ).unwrap();
    let err = relative_errors(&sys, &full, &rom, &traj).unwrap();
    assert!(err.re_h < 1e-10, "{}", err.re_h);
    assert!(err.re_x < 0.2, "{}", err.re_x);
}

#[test]
fn deim_rom_tracks_sine_gordon() {
    let sys = sine_gordon_system(80, SineGordonParams::default()).unwrap();
    let integ = IntegratorOptions::new(0.05, 4.0);
    let full = simulate_full(&sys, &integ).unwrap();
    let snaps = full.snapshots(81).unwrap();
    let exact = build_rom(&sys, &snaps, 10, &Reduction::CotLift, NonlinearTreatment::Exact, Centering::InitialState)
        .unwrap();
    let deim = build_rom(&sys, &snaps, 10, &Reduction::CotLift, NonlinearTreatment::PsdDeim, Centering::InitialState)
        .unwrap();
    let e_exact = relative_errors(&sys, &full, &exact, &exact.simulate(&sys, &integ).unwrap()).unwrap();
    let e_deim = relative_errors(&sys, &full, &deim, &deim.simulate(&sys, &integ).unwrap()).unwrap();
    assert!(e_exact.re_x < 0.05, "{}", e_exact.re_x);
    assert!(e_deim.re_x < 0.1, "{}", e_deim.re_x);
}
