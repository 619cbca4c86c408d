use serde::{Deserialize, Serialize};

use super::{BandResult, TightBindingError};

/// Histogrammed density of states per unit cell. `density[i]` covers
/// `[edges[i], edges[i + 1])` and integrates to the number of bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DosHistogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub bin_width: f64,
    pub bands_per_cell: usize,
}

impl DosHistogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Integral of the density, i.e. states per cell.
    pub fn total_states(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width
    }

    /// States per cell in bins whose centers fall inside `[lo, hi]`.
    pub fn states_between(&self, lo: f64, hi: f64) -> f64 {
        self.centers()
            .iter()
            .zip(&self.density)
            .filter(|(c, _)| (lo..=hi).contains(*c))
            .map(|(_, d)| d * self.bin_width)
            .sum()
    }

    /// Frequency intervals with non-zero density. Empty stretches no wider
    /// than `merge_gap` are bridged.
    pub fn support_intervals(&self, merge_gap: f64) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &d) in self.density.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            let (lo, hi) = (self.edges[i], self.edges[i + 1]);
            match out.last_mut() {
                Some(last) if lo - last.1 <= merge_gap + 1e-12 => last.1 = hi,
                _ => out.push((lo, hi)),
            }
        }
        out
    }
}

/// Histograms the corrected (or uncorrected) band frequencies in bins of
/// `bin_width` GHz, normalized per k point and per GHz.
pub fn density_of_states(
    bands: &BandResult,
    bin_width: f64,
    corrected: bool,
) -> Result<DosHistogram, TightBindingError> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(TightBindingError::InvalidBinWidth);
    }
    let values = bands.values(corrected);
    let n_k = values.len();
    let all = values.iter().flatten().copied();
    let (min, max) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if n_k == 0 || !min.is_finite() {
        return Ok(DosHistogram {
            edges: vec![],
            density: vec![],
            bin_width,
            bands_per_cell: bands.n_bands(),
        });
    }
    let origin = (min / bin_width).floor() * bin_width;
    let n_bins = ((max - origin) / bin_width).floor() as usize + 1;
    let mut counts = vec![0usize; n_bins];
    for &x in values.iter().flatten() {
        let i = (((x - origin) / bin_width).floor() as usize).min(n_bins - 1);
        counts[i] += 1;
    }
    let norm = 1.0 / (n_k as f64 * bin_width);
    Ok(DosHistogram {
        edges: (0..=n_bins).map(|i| origin + i as f64 * bin_width).collect(),
        density: counts.into_iter().map(|c| c as f64 * norm).collect(),
        bin_width,
        bands_per_cell: bands.n_bands(),
    })
}
