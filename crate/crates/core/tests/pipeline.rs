//! End-to-end paths through the public API, from the bundled cell to exported
//! artifacts.

use cpwqed::circuitqed::{bound_states, transmon_frequency, LatticeModes, QubitPlacement, TransmonSpec};
use cpwqed::fluxcal::{calibrate, simulate_measurements, CrosstalkModel, Protocol};
use cpwqed::lattice::{build_chain, paper_lattice, validate, Boundary, CellDocument};
use cpwqed::spectra::{
    export, flux_map, linear_grid, synth_transmission, Artifact, EigenSystem, Format, PortCoupling,
    SvgOptions,
};
use cpwqed::tightbinding::{
    bloch_bands, density_of_states, finite_spectrum, hopping_from_circuit, uniform_k_grid, ModeFamily,
};

#[test]
fn circuit_parameters_to_exported_dos() {
    let t = hopping_from_circuit(4.8957, 2, 19.5, 50.0).unwrap();
    let fam = ModeFamily::full_wave(2.0 * 4.8957, t).unwrap();
    let bands = bloch_bands(&paper_lattice(), &fam, &uniform_k_grid(64)).unwrap();
    let dos = density_of_states(&bands, 2e-3, true).unwrap();
    assert!((dos.total_states() - 6.0).abs() < 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let opts = SvgOptions::default();
    for fmt in [Format::Csv, Format::Json, Format::Svg] {
        let path = dir.path().join(format!("dos.{}", fmt.extension()));
        let sidecar = export(Artifact::Dos(&dos), fmt, &path, &opts, None).unwrap();
        assert!(path.exists() && sidecar.exists());
    }
}

#[test]
fn cell_document_round_trip_preserves_spectra() {
    let cell = paper_lattice();
    let json = CellDocument::from_cell(&cell, Some("copy".into())).to_json();
    let copy = CellDocument::parse(&json).unwrap().into_cell().unwrap();
    let fam = ModeFamily::half_wave(4.889, -0.040).unwrap();
    let a = finite_spectrum(&build_chain(&cell, 4, Boundary::Hardwall).unwrap(), &fam, true).unwrap();
    let b = finite_spectrum(&build_chain(&copy, 4, Boundary::Hardwall).unwrap(), &fam, true).unwrap();
    assert_eq!(a.frequencies, b.frequencies);
}

#[test]
fn bound_state_sweep_feeds_the_transmission_map() {
    let lat = build_chain(&paper_lattice(), 5, Boundary::Hardwall).unwrap();
    assert!(validate(&lat).is_empty());
    let fam = ModeFamily::full_wave(9.726, -0.082).unwrap();
    let modes = LatticeModes::of_lattice(&lat, &fam).unwrap();
    let spec = TransmonSpec { ec: 0.122, ej_sum: 103.0, ej_diff: 0.0 };
    let placement = QubitPlacement { qubit: 0, site: 15, g0: 0.165 };
    let flux = linear_grid(0.0, 0.2, 5);
    let pts = bound_states(&lat, &fam, &[placement], &[spec], &flux).unwrap();
    assert_eq!(pts.len(), 5);
    for p in &pts {
        assert_eq!(p.result.eigenfrequencies.len(), lat.n_sites() + 1);
        assert!((p.qubit_freqs[0] - transmon_frequency(&spec, p.flux).unwrap()).abs() < 1e-15);
    }

    let ports = PortCoupling::new(0, lat.n_sites() - 1, 0.01);
    let grid = linear_grid(9.4, 10.2, 200);
    let scan: Vec<(f64, EigenSystem)> = pts
        .iter()
        .map(|p| (p.flux, EigenSystem::dressed(&modes, &[placement], &p.qubit_freqs).unwrap()))
        .collect();
    let map = flux_map(&scan, &ports, &grid).unwrap();
    assert_eq!(map.magnitude.len(), 5);
    assert!(map.magnitude.iter().flatten().all(|v| v.is_finite()));

    let bare = synth_transmission(&EigenSystem::from(&modes), &ports, &grid).unwrap();
    assert_eq!(bare.freq.len(), 200);
}

#[test]
fn noisy_calibration_stays_close_to_truth() {
    let truth = CrosstalkModel::new(
        vec![vec![0.42, 0.031, -0.012], vec![0.025, -0.38, 0.04], vec![-0.018, 0.022, 0.45]],
        vec![0.07, -0.12, 0.21],
    )
    .unwrap();
    let specs = [
        TransmonSpec { ec: 0.125, ej_sum: 100.0, ej_diff: 0.0 },
        TransmonSpec { ec: 0.113, ej_sum: 104.0, ej_diff: 0.0 },
        TransmonSpec { ec: 0.122, ej_sum: 103.0, ej_diff: 0.0 },
    ];
    let protocol = Protocol { crossing_noise: 1e-4, slope_noise: 1e-3, seed: 7, ..Protocol::default() };
    let cal = calibrate(&simulate_measurements(&truth, &specs, &protocol).unwrap()).unwrap();
    for (a, b) in truth.m.iter().flatten().zip(cal.model.m.iter().flatten()) {
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
    let json = serde_json::to_string(&cal.model).unwrap();
    assert!(json.starts_with("{\"M\":"));
}
