//! CSV / JSON / SVG writers with a provenance sidecar.
//!
//! Output is a pure function of the artifact, so identical inputs give
//! byte-identical files. Every file `X` is accompanied by
//! `X.provenance.json` recording the tool version and SHA-256 hashes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::svg::{colormap, line_color, Plot, SvgOptions};
use super::{ExportError, FluxMap, ModeTable, TransmissionTrace};
use crate::circuitqed::{BoundStatePoint, CrossingScan};
use crate::tightbinding::{BandResult, DosHistogram};

pub const BANDS_CSV_HEADER: &str = "k,band_index,freq_uncorrected_GHz,freq_corrected_GHz";
pub const DOS_CSV_HEADER: &str = "bin_center_GHz,dos";
/// Followed by one `qubit_weight_<i>` column per qubit.
pub const BOUNDSTATES_CSV_HEADER: &str = "flux,eigenfreq_GHz";
pub const CROSSING_CSV_HEADER: &str = "flux_offset,branch_index,freq_GHz,gap_GHz";
pub const TRACE_CSV_HEADER: &str = "freq_GHz,re,im,magnitude";
pub const MAP_CSV_HEADER: &str = "flux,freq_GHz,magnitude";
pub const MODES_CSV_HEADER: &str = "mode_index,freq_uncorrected_GHz,freq_corrected_GHz,edge_weight";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

impl FromStr for Format {
    type Err = ExportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            _ => Err(ExportError::UnknownFormat(s.into())),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Artifact<'a> {
    Bands(&'a BandResult),
    Dos(&'a DosHistogram),
    BoundStates(&'a [BoundStatePoint]),
    Crossing(&'a CrossingScan),
    Trace(&'a TransmissionTrace),
    Map(&'a FluxMap),
    Modes(&'a ModeTable),
}

impl Artifact<'_> {
    pub fn kind(&self) -> &'static str {
        match self {
            Artifact::Bands(_) => "bands",
            Artifact::Dos(_) => "dos",
            Artifact::BoundStates(_) => "boundstates",
            Artifact::Crossing(_) => "crossing",
            Artifact::Trace(_) => "trace",
            Artifact::Map(_) => "map",
            Artifact::Modes(_) => "modes",
        }
    }

    pub fn render(&self, format: Format, opts: &SvgOptions) -> Result<String, ExportError> {
        match format {
            Format::Csv => Ok(self.csv()),
            Format::Json => self.json(),
            Format::Svg => Ok(self.svg(opts)),
        }
    }

    fn json(&self) -> Result<String, ExportError> {
        let r = match self {
            Artifact::Bands(x) => serde_json::to_string_pretty(x),
            Artifact::Dos(x) => serde_json::to_string_pretty(x),
            Artifact::BoundStates(x) => serde_json::to_string_pretty(x),
            Artifact::Crossing(x) => serde_json::to_string_pretty(x),
            Artifact::Trace(x) => serde_json::to_string_pretty(x),
            Artifact::Map(x) => serde_json::to_string_pretty(x),
            Artifact::Modes(x) => serde_json::to_string_pretty(x),
        };
        r.map(|s| s + "\n").map_err(|e| ExportError::Serialize(e.to_string()))
    }

    fn csv(&self) -> String {
        let mut s = String::new();
        match self {
            Artifact::Bands(b) => {
                s.push_str(BANDS_CSV_HEADER);
                s.push('\n');
                for (i, k) in b.k.iter().enumerate() {
                    for band in 0..b.n_bands() {
                        let _ = writeln!(s, "{k},{band},{},{}", b.uncorrected[i][band], b.corrected[i][band]);
                    }
                }
            }
            Artifact::Dos(d) => {
                s.push_str(DOS_CSV_HEADER);
                s.push('\n');
                for (c, v) in d.centers().iter().zip(&d.density) {
                    let _ = writeln!(s, "{c},{v}");
                }
            }
            Artifact::BoundStates(points) => {
                s.push_str(BOUNDSTATES_CSV_HEADER);
                let n_q = points.first().map_or(0, |p| p.qubit_freqs.len());
                for q in 0..n_q {
                    let _ = write!(s, ",qubit_weight_{q}");
                }
                s.push('\n');
                for p in points.iter() {
                    for (st, f) in p.result.eigenfrequencies.iter().enumerate() {
                        let _ = write!(s, "{},{f}", p.flux);
                        for w in &p.result.qubit_weight[st] {
                            let _ = write!(s, ",{w}");
                        }
                        s.push('\n');
                    }
                }
            }
            Artifact::Crossing(c) => {
                s.push_str(CROSSING_CSV_HEADER);
                s.push('\n');
                for (i, phi) in c.flux.iter().enumerate() {
                    let off = phi - c.min_gap_flux;
                    let (lo, hi) = c.branches[i];
                    let _ = writeln!(s, "{off},0,{lo},{}", c.gaps[i]);
                    let _ = writeln!(s, "{off},1,{hi},{}", c.gaps[i]);
                }
            }
            Artifact::Trace(t) => {
                s.push_str(TRACE_CSV_HEADER);
                s.push('\n');
                for (i, f) in t.freq.iter().enumerate() {
                    let _ = writeln!(s, "{f},{},{},{}", t.re[i], t.im[i], t.re[i].hypot(t.im[i]));
                }
            }
            Artifact::Map(m) => {
                s.push_str(MAP_CSV_HEADER);
                s.push('\n');
                for (i, phi) in m.flux.iter().enumerate() {
                    for (j, f) in m.freq.iter().enumerate() {
                        let _ = writeln!(s, "{phi},{f},{}", m.magnitude[i][j]);
                    }
                }
            }
            Artifact::Modes(m) => {
                s.push_str(MODES_CSV_HEADER);
                s.push('\n');
                for i in 0..m.uncorrected.len() {
                    let _ = writeln!(s, "{i},{},{},{}", m.uncorrected[i], m.corrected[i], m.edge_weight[i]);
                }
            }
        }
        s
    }

    fn svg(&self, opts: &SvgOptions) -> String {
        match self {
            Artifact::Bands(b) => {
                let ys = b.corrected.iter().flatten().copied();
                let mut plot =
                    Plot::new(*opts, span(b.k.iter().copied()), span(ys), "k (1/cell)", "frequency (GHz)");
                for band in 0..b.n_bands() {
                    let y: Vec<f64> = b.corrected.iter().map(|r| r[band]).collect();
                    plot.polyline(&b.k, &y, line_color(band));
                }
                plot.finish()
            }
            Artifact::Dos(d) => {
                let c = d.centers();
                let mut plot = Plot::new(
                    *opts,
                    span(c.iter().copied()),
                    span(d.density.iter().copied().chain([0.0])),
                    "frequency (GHz)",
                    "DOS (states / cell / GHz)",
                );
                plot.polyline(&c, &d.density, line_color(0));
                plot.finish()
            }
            Artifact::BoundStates(points) => {
                let ys = points.iter().flat_map(|p| p.result.eigenfrequencies.iter().copied());
                let mut plot = Plot::new(
                    *opts,
                    span(points.iter().map(|p| p.flux)),
                    span(ys),
                    "flux (Φ₀)",
                    "frequency (GHz)",
                );
                for p in points.iter() {
                    for (st, &f) in p.result.eigenfrequencies.iter().enumerate() {
                        let w = p.result.total_qubit_weight(st);
                        plot.marker(p.flux, f, 0.8 + 4.0 * w, &colormap(w));
                    }
                }
                plot.finish()
            }
            Artifact::Crossing(c) => {
                let ys = c.branches.iter().flat_map(|&(a, b)| [a, b]);
                let mut plot =
                    Plot::new(*opts, span(c.flux.iter().copied()), span(ys), "flux (Φ₀)", "frequency (GHz)");
                let lo: Vec<f64> = c.branches.iter().map(|b| b.0).collect();
                let hi: Vec<f64> = c.branches.iter().map(|b| b.1).collect();
                plot.polyline(&c.flux, &lo, line_color(0));
                plot.polyline(&c.flux, &hi, line_color(1));
                plot.finish()
            }
            Artifact::Trace(t) => {
                let m = t.magnitude();
                let mut plot = Plot::new(
                    *opts,
                    span(t.freq.iter().copied()),
                    span(m.iter().copied().chain([0.0])),
                    "frequency (GHz)",
                    "|A| (arb.)",
                );
                plot.polyline(&t.freq, &m, line_color(0));
                plot.finish()
            }
            Artifact::Map(m) => {
                let mut plot = Plot::new(
                    *opts,
                    span(m.flux.iter().copied()),
                    span(m.freq.iter().copied()),
                    "flux (Φ₀)",
                    "frequency (GHz)",
                );
                let max = m.magnitude.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
                let xe = cell_edges(&m.flux);
                let ye = cell_edges(&m.freq);
                for (i, row) in m.magnitude.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        let t = if max > 0.0 { v / max } else { 0.0 };
                        plot.cell(xe[i], xe[i + 1], ye[j], ye[j + 1], &colormap(t));
                    }
                }
                plot.finish()
            }
            Artifact::Modes(m) => {
                let n = m.corrected.len();
                let mut plot = Plot::new(
                    *opts,
                    (0.0, n.saturating_sub(1) as f64),
                    span(m.corrected.iter().copied()),
                    "mode index",
                    "frequency (GHz)",
                );
                for (i, (&f, &w)) in m.corrected.iter().zip(&m.edge_weight).enumerate() {
                    plot.marker(i as f64, f, 1.0 + 3.0 * w, &colormap(w));
                }
                plot.finish()
            }
        }
    }
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

/// Cell boundaries halfway between grid points.
fn cell_edges(x: &[f64]) -> Vec<f64> {
    match x.len() {
        0 => vec![],
        1 => vec![x[0] - 0.5, x[0] + 0.5],
        n => {
            let mut e = Vec::with_capacity(n + 1);
            e.push(x[0] - 0.5 * (x[1] - x[0]));
            for w in x.windows(2) {
                e.push(0.5 * (w[0] + w[1]));
            }
            e.push(x[n - 1] + 0.5 * (x[n - 1] - x[n - 2]));
            e
        }
    }
}

/// Lowercase hex SHA-256.
pub fn input_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub artifact: String,
    pub format: Format,
    /// Hash of the run input (configuration), or of the artifact's JSON form
    /// when no input is supplied.
    pub input_sha256: String,
    pub output_sha256: String,
}

fn io_err(path: &Path, e: std::io::Error) -> ExportError {
    ExportError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Writes the artifact to `path` plus its provenance sidecar; returns the
/// sidecar path.
pub fn export(
    artifact: Artifact<'_>,
    format: Format,
    path: &Path,
    opts: &SvgOptions,
    input: Option<&[u8]>,
) -> Result<PathBuf, ExportError> {
    let body = artifact.render(format, opts)?;
    let input_sha256 = match input {
        Some(bytes) => input_hash(bytes),
        None => input_hash(artifact.json()?.as_bytes()),
    };
    let prov = Provenance {
        tool: "cpwqed".into(),
        version: crate::VERSION.into(),
        artifact: artifact.kind().into(),
        format,
        input_sha256,
        output_sha256: input_hash(body.as_bytes()),
    };
    std::fs::write(path, &body).map_err(|e| io_err(path, e))?;
    let mut sidecar = path.as_os_str().to_owned();
    sidecar.push(".provenance.json");
    let sidecar = PathBuf::from(sidecar);
    let text = serde_json::to_string_pretty(&prov).map_err(|e| ExportError::Serialize(e.to_string()))? + "\n";
    std::fs::write(&sidecar, text).map_err(|e| io_err(&sidecar, e))?;
    Ok(sidecar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::paper_lattice;
    use crate::tightbinding::{bloch_bands, density_of_states, uniform_k_grid, ModeFamily};

    fn bands() -> BandResult {
        let fam = ModeFamily::half_wave(4.889, -0.040).unwrap();
        bloch_bands(&paper_lattice(), &fam, &uniform_k_grid(16)).unwrap()
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(input_hash(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn csv_headers() {
        let b = bands();
        let csv = Artifact::Bands(&b).render(Format::Csv, &SvgOptions::default()).unwrap();
        assert_eq!(csv.lines().next(), Some(BANDS_CSV_HEADER));
        assert_eq!(csv.lines().count(), 1 + 16 * 6);
        let d = density_of_states(&b, 1e-3, true).unwrap();
        let csv = Artifact::Dos(&d).render(Format::Csv, &SvgOptions::default()).unwrap();
        assert_eq!(csv.lines().next(), Some(DOS_CSV_HEADER));
    }

    #[test]
    fn json_round_trip_re_exports_identically() {
        let b = bands();
        let opts = SvgOptions::default();
        let json = Artifact::Bands(&b).render(Format::Json, &opts).unwrap();
        let back: BandResult = serde_json::from_str(&json).unwrap();
        assert_eq!(Artifact::Bands(&back).render(Format::Json, &opts).unwrap(), json);
        let d = density_of_states(&b, 1e-3, true).unwrap();
        let json = Artifact::Dos(&d).render(Format::Json, &opts).unwrap();
        let back: DosHistogram = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn export_is_byte_stable_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let b = bands();
        let opts = SvgOptions::default();
        for fmt in [Format::Csv, Format::Json, Format::Svg] {
            let p1 = dir.path().join(format!("a.{}", fmt.extension()));
            let p2 = dir.path().join(format!("b.{}", fmt.extension()));
            let s1 = export(Artifact::Bands(&b), fmt, &p1, &opts, Some(b"cfg")).unwrap();
            let s2 = export(Artifact::Bands(&b), fmt, &p2, &opts, Some(b"cfg")).unwrap();
            assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
            assert_eq!(std::fs::read(&s1).unwrap(), std::fs::read(&s2).unwrap());
            let prov: Provenance = serde_json::from_slice(&std::fs::read(&s1).unwrap()).unwrap();
            assert_eq!(prov.input_sha256, input_hash(b"cfg"));
            assert_eq!(prov.version, crate::VERSION);
        }
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let b = bands();
        let r = export(
            Artifact::Bands(&b),
            Format::Csv,
            Path::new("/nonexistent-dir/x.csv"),
            &SvgOptions::default(),
            None,
        );
        assert!(matches!(r, Err(ExportError::Io { .. })));
    }

    #[test]
    fn mode_table_export() {
        use crate::lattice::{build_chain, Boundary};
        use crate::tightbinding::finite_spectrum;
        let lat = build_chain(&paper_lattice(), 2, Boundary::Hardwall).unwrap();
        let fam = ModeFamily::full_wave(9.726, -0.082).unwrap();
        let spec = finite_spectrum(&lat, &fam, false).unwrap();
        let all: Vec<usize> = (0..lat.n_sites()).collect();
        let table = ModeTable::new(&spec, &all);
        assert!(table.edge_weight.iter().all(|w| (w - 1.0).abs() < 1e-12));
        let csv = Artifact::Modes(&table).render(Format::Csv, &SvgOptions::default()).unwrap();
        assert_eq!(csv.lines().next(), Some(MODES_CSV_HEADER));
        assert_eq!(csv.lines().count(), 1 + lat.n_sites());
        let svg = Artifact::Modes(&table).render(Format::Svg, &SvgOptions::default()).unwrap();
        assert_eq!(svg.matches("<circle").count(), lat.n_sites());
    }

    #[test]
    fn format_parsing() {
        assert_eq!("SVG".parse::<Format>().unwrap(), Format::Svg);
        assert!("png".parse::<Format>().is_err());
    }
}
