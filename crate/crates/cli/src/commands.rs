//! One function per subcommand. Summaries go to stdout, artifacts to the
//! output directory, advisories to stderr.

use std::path::{Path, PathBuf};

use cpwqed::circuitqed::{
    avoided_crossing_scan, bound_states, exchange_coupling_perturbative, flux_for_frequency, LatticeModes,
    QubitPlacement, TransmonSpec,
};
use cpwqed::fluxcal::{calibrate, flux_from_voltage, simulate_measurements, voltages_for_flux};
use cpwqed::lattice::{self, LatticeGraph, UnitCellSpec};
use cpwqed::spectra::{export, input_hash, linear_grid, Artifact, Format, ModeTable, Provenance, SvgOptions};
use cpwqed::tightbinding::{
    bloch_bands, density_of_states, finite_spectrum, flat_band_multiplicity, frequency_correction,
    uniform_k_grid, BandResult, ModeFamily, FLAT_BAND_TOL,
};
use serde::Serialize;

use crate::config::LoadedConfig;
use crate::error::CliError;

/// Where and how artifacts are written.
pub struct Output {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
    pub svg: SvgOptions,
    /// Raw configuration bytes, hashed into every provenance sidecar.
    pub input: Vec<u8>,
}

impl Output {
    fn ensure_dir(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", self.dir.display())))
    }

    fn write(&self, artifact: Artifact<'_>, stem: &str) -> Result<(), CliError> {
        self.ensure_dir()?;
        for &fmt in &self.formats {
            let path = self.dir.join(format!("{stem}.{}", fmt.extension()));
            export(artifact, fmt, &path, &self.svg, Some(&self.input))?;
        }
        Ok(())
    }

    fn write_json<T: Serialize>(&self, value: &T, stem: &str) -> Result<PathBuf, CliError> {
        self.ensure_dir()?;
        let body = serde_json::to_string_pretty(value).map_err(CliError::numeric)? + "\n";
        let path = self.dir.join(format!("{stem}.json"));
        write_file(&path, &body)?;
        let prov = Provenance {
            tool: "cpwqed".into(),
            version: cpwqed::VERSION.into(),
            artifact: stem.into(),
            format: Format::Json,
            input_sha256: input_hash(&self.input),
            output_sha256: input_hash(body.as_bytes()),
        };
        let sidecar = self.dir.join(format!("{stem}.json.provenance.json"));
        write_file(&sidecar, &(serde_json::to_string_pretty(&prov).map_err(CliError::numeric)? + "\n"))?;
        Ok(path)
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn family_label(fam: &ModeFamily) -> String {
    let name = match fam.mu {
        1 => "half-wave",
        2 => "full-wave",
        _ => "harmonic",
    };
    format!("μ = {} ({name}), ω = {} GHz, t0 = {:.2} MHz", fam.mu, fam.omega, fam.t0 * 1e3)
}

fn warn_regime(specs: &[TransmonSpec]) {
    for (i, s) in specs.iter().enumerate() {
        if let Some(w) = s.regime_warning() {
            eprintln!("warning: qubit {i}: {w}");
        }
    }
}

fn check_sites(lat: &LatticeGraph, placements: &[QubitPlacement]) -> Result<(), CliError> {
    match placements.iter().find(|p| p.site >= lat.n_sites()) {
        Some(p) => {
            Err(CliError::Config(format!("qubit site {} outside the {}-site lattice", p.site, lat.n_sites())))
        }
        None => Ok(()),
    }
}

/// Corrected band ranges merged into disjoint intervals, ascending.
pub fn band_intervals(bands: &BandResult) -> Vec<(f64, f64)> {
    let mut ranges: Vec<(f64, f64)> = (0..bands.n_bands()).map(|b| bands.band_range(b, true)).collect();
    ranges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in ranges {
        match merged.last_mut() {
            Some(last) if lo <= last.1 + FLAT_BAND_TOL => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

fn bands_for(cfg: &LoadedConfig, cell: &UnitCellSpec, fam: &ModeFamily) -> Result<BandResult, CliError> {
    let n = cfg.config.bands.k_points;
    if n == 0 {
        return Err(CliError::Config("bands.k_points must be positive".into()));
    }
    bloch_bands(cell, fam, &uniform_k_grid(n)).map_err(CliError::numeric)
}

fn print_band_summary(fam: &ModeFamily, bands: &BandResult) -> Result<(), CliError> {
    println!("{}", family_label(fam));
    let intervals = band_intervals(bands);
    for (i, &(lo, hi)) in intervals.iter().enumerate() {
        if i > 0 {
            println!("  gap   {:.2} MHz", (lo - intervals[i - 1].1) * 1e3);
        }
        println!("  band  {lo:.5} – {hi:.5} GHz");
    }
    let flat = fam.omega + 2.0 * fam.t0;
    let mult = flat_band_multiplicity(bands.values(false), flat, FLAT_BAND_TOL);
    if fam.t0 != 0.0 && mult.iter().all(|&m| m > 0) {
        let corrected = frequency_correction(flat, fam).map_err(CliError::numeric)?;
        let lo = mult.iter().min().copied().unwrap_or(0);
        let hi = mult.iter().max().copied().unwrap_or(0);
        let mult = if lo == hi { lo.to_string() } else { format!("{lo}–{hi}") };
        println!("  flat  {corrected:.5} GHz (multiplicity {mult})");
    }
    Ok(())
}

pub fn bands(cfg: &LoadedConfig, out: &Output, with_bands: bool) -> Result<(), CliError> {
    let cell = cfg.cell()?;
    for fam in cfg.families()? {
        let b = bands_for(cfg, &cell, &fam)?;
        if with_bands {
            out.write(Artifact::Bands(&b), &format!("bands_mu{}", fam.mu))?;
        }
        let d = density_of_states(&b, cfg.config.bands.bin_width, true).map_err(CliError::numeric)?;
        out.write(Artifact::Dos(&d), &format!("dos_mu{}", fam.mu))?;
        print_band_summary(&fam, &b)?;
    }
    Ok(())
}

pub fn finite(cfg: &LoadedConfig, out: &Output) -> Result<(), CliError> {
    let cell = cfg.cell()?;
    let lat = cfg.chain(&cell)?;
    let last = lat.n_cells().saturating_sub(1);
    let edge: Vec<usize> =
        (0..lat.n_sites()).filter(|&s| lat.cell_index[s] == 0 || lat.cell_index[s] == last).collect();
    for fam in cfg.families()? {
        let spectrum = finite_spectrum(&lat, &fam, true).map_err(CliError::numeric)?;
        let table = ModeTable::new(&spectrum, &edge);
        out.write(Artifact::Modes(&table), &format!("modes_mu{}", fam.mu))?;
        let intervals = band_intervals(&bands_for(cfg, &cell, &fam)?);
        println!("{} — {} modes on {} cells", family_label(&fam), table.corrected.len(), lat.n_cells());
        for (i, (&f, &w)) in table.corrected.iter().zip(&table.edge_weight).enumerate() {
            if !intervals.iter().any(|&(lo, hi)| f >= lo - 1e-6 && f <= hi + 1e-6) {
                println!("  in-gap mode {i}: {f:.5} GHz, outer-cell weight {w:.3}");
            }
        }
    }
    Ok(())
}

pub fn boundstates(cfg: &LoadedConfig, out: &Output) -> Result<(), CliError> {
    let bs = cfg
        .config
        .boundstates
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no 'boundstates' section".into()))?;
    let fam = cfg.family(bs.family)?;
    let cell = cfg.cell()?;
    let lat = cfg.chain(&cell)?;
    let (placements, specs) = cfg.qubits(&bs.qubits, bs.family)?;
    check_sites(&lat, &placements)?;
    warn_regime(&specs);
    let points =
        bound_states(&lat, &fam, &placements, &specs, &bs.flux.values()).map_err(CliError::numeric)?;
    out.write(Artifact::BoundStates(&points), &format!("boundstates_mu{}", fam.mu))?;

    let intervals = band_intervals(&bands_for(cfg, &cell, &fam)?);
    let mut edges = vec![f64::NEG_INFINITY];
    for &(lo, hi) in &intervals {
        edges.extend([lo, hi]);
    }
    edges.push(f64::INFINITY);
    println!("{} — {} flux points, qubit-like threshold {}", family_label(&fam), points.len(), bs.threshold);
    for region in edges.chunks(2) {
        let (lo, hi) = (region[0], region[1]);
        let found: Vec<f64> = points
            .iter()
            .flat_map(|p| {
                p.result
                    .in_gap_states(&intervals, bs.threshold)
                    .into_iter()
                    .map(|s| p.result.eigenfrequencies[s])
                    .filter(|f| *f > lo && *f < hi)
                    .collect::<Vec<_>>()
            })
            .collect();
        if found.is_empty() {
            continue;
        }
        let fmin = found.iter().copied().fold(f64::INFINITY, f64::min);
        let fmax = found.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let name = match (lo.is_finite(), hi.is_finite()) {
            (false, _) => "below the bands".to_string(),
            (_, false) => "above the bands".to_string(),
            _ => format!("gap {lo:.4}–{hi:.4} GHz"),
        };
        println!("  {name}: {} qubit-like states, {fmin:.4} – {fmax:.4} GHz", found.len());
    }
    Ok(())
}

pub fn crossing(cfg: &LoadedConfig, out: &Output) -> Result<(), CliError> {
    let x = cfg
        .config
        .crossing
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no 'crossing' section".into()))?;
    let fam = cfg.family(x.family)?;
    let cell = cfg.cell()?;
    let lat = cfg.chain(&cell)?;
    let (placements, specs) = cfg.qubits(&x.pair, x.family)?;
    check_sites(&lat, &placements)?;
    warn_regime(&specs);
    let modes = LatticeModes::of_lattice(&lat, &fam).map_err(CliError::numeric)?;
    let band_bottom = band_intervals(&bands_for(cfg, &cell, &fam)?)[0].0;
    println!("{} — lowest band edge {band_bottom:.5} GHz", family_label(&fam));
    println!("  detuning_GHz  parked_GHz  min_gap_MHz  2J_MHz");
    let mut gaps = Vec::with_capacity(x.detunings.len());
    for (i, &d) in x.detunings.iter().enumerate() {
        let f2 = band_bottom - d;
        let flux_2 = flux_for_frequency(&specs[1], f2).map_err(CliError::numeric)?;
        let centre = flux_for_frequency(&specs[0], f2).map_err(CliError::numeric)?;
        let grid = linear_grid(centre - x.flux_half_span, centre + x.flux_half_span, x.points);
        let scan = avoided_crossing_scan(
            &modes,
            &placements[0],
            &placements[1],
            &specs[0],
            &specs[1],
            &grid,
            flux_2,
        )
        .map_err(CliError::numeric)?;
        let j = exchange_coupling_perturbative(&modes, &placements[0], &placements[1], f2)
            .map_err(CliError::numeric)?;
        out.write(Artifact::Crossing(&scan), &format!("crossing_mu{}_{i}", fam.mu))?;
        println!("  {d:>12.4}  {f2:>10.4}  {:>11.4}  {:>6.4}", scan.min_gap * 1e3, 2.0 * j.abs() * 1e3);
        gaps.push((d, scan.min_gap));
    }
    let mut by_detuning = gaps.clone();
    by_detuning.sort_by(|a, b| b.0.total_cmp(&a.0));
    let monotone = by_detuning.windows(2).all(|w| w[1].1 > w[0].1);
    println!("  gap grows as detuning shrinks: {}", if monotone { "yes" } else { "no" });
    Ok(())
}

#[derive(Serialize)]
struct InversionDemo {
    target_flux: Vec<f64>,
    voltages: Vec<f64>,
    recovered_flux: Vec<f64>,
}

pub fn fluxcal(cfg: &LoadedConfig, out: &Output, seed: Option<u64>) -> Result<(), CliError> {
    let fc = cfg
        .config
        .fluxcal
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no 'fluxcal' section".into()))?;
    let specs: Vec<TransmonSpec> = fc.qubits.iter().map(|&i| cfg.config.qubits[i].transmon).collect();
    warn_regime(&specs);
    let meas = match (&fc.truth, cfg.measurements()?) {
        (Some(truth), None) => {
            let mut protocol = fc.protocol.clone();
            if let Some(s) = seed {
                protocol.seed = s;
            }
            let meas = simulate_measurements(truth, &specs, &protocol).map_err(CliError::numeric)?;
            out.write_json(&meas, "measurements")?;
            meas
        }
        (None, Some(meas)) => meas,
        _ => return Err(CliError::Config("fluxcal needs exactly one of 'truth' or 'measurements'".into())),
    };
    let cal = calibrate(&meas).map_err(CliError::numeric)?;
    let path = out.write_json(&cal.model, "crosstalk_model")?;
    out.write_json(&cal, "calibration")?;
    println!("calibrated {} lines, condition number {:.3}", cal.model.n(), cal.condition_number);
    for (i, row) in cal.model.m.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>10.6}")).collect();
        println!("  M[{i}] = {}   φ* = {:.6}", cells.join(" "), cal.model.phi_offsets[i]);
    }
    if let Some(truth) = &fc.truth {
        let dm = truth.m.iter().flatten().zip(cal.model.m.iter().flatten()).map(|(a, b)| (a - b).abs());
        let dphi = truth.phi_offsets.iter().zip(&cal.model.phi_offsets).map(|(a, b)| (a - b).abs());
        println!(
            "  max |ΔM| = {:.3e} Φ₀/V, max |Δφ*| = {:.3e} Φ₀",
            dm.fold(0.0, f64::max),
            dphi.fold(0.0, f64::max)
        );
    }
    if let Some(target) = &fc.target_flux {
        let voltages = voltages_for_flux(&cal.model, target).map_err(CliError::numeric)?;
        let recovered_flux = flux_from_voltage(&cal.model, &voltages).map_err(CliError::numeric)?;
        let err = target.iter().zip(&recovered_flux).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("  voltages for target flux: {voltages:.6?} V (round-trip error {err:.1e} Φ₀)");
        out.write_json(
            &InversionDemo { target_flux: target.clone(), voltages, recovered_flux },
            "inversion",
        )?;
    }
    println!("model written to {}", path.display());
    Ok(())
}

/// Prints diagnostics; any finding is a configuration error.
pub fn validate(cfg: &LoadedConfig) -> Result<(), CliError> {
    let cell = cfg.cell()?;
    let lat = cfg.chain(&cell)?;
    if let Some(name) = &cfg.config.name {
        println!("config: {name}");
    }
    let mut findings: Vec<String> = lattice::validate(&lat).iter().map(ToString::to_string).collect();
    if !lat.is_connected() {
        findings.push("lattice is not connected".into());
    }
    println!(
        "lattice: {} sites in {} cells, {} couplers ({:?})",
        lat.n_sites(),
        lat.n_cells(),
        lat.couplers.len(),
        lat.boundary
    );
    for fam in cfg.families()? {
        println!("family: {}", family_label(&fam));
    }
    for (i, q) in cfg.config.qubits.iter().enumerate() {
        if q.site >= lat.n_sites() {
            findings.push(format!("qubit {i} sits on missing site {}", q.site));
        }
        if let Some(w) = q.transmon.regime_warning() {
            eprintln!("warning: qubit {i}: {w}");
        }
        for mu in q.g0.keys() {
            if !cfg.config.families.iter().any(|f| f.mu == *mu) {
                findings.push(format!("qubit {i} couples to undefined family μ = {mu}"));
            }
        }
    }
    if findings.is_empty() {
        println!("diagnostics: none");
        Ok(())
    } else {
        for f in &findings {
            println!("diagnostic: {f}");
        }
        Err(CliError::Config(format!("{} diagnostic(s)", findings.len())))
    }
}
