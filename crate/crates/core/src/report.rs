//! The two-tier diagnostic for one embedding table: normalized spectrum with spike
//! statistics (spectral tier), probe κ per period (geometric tier), and the noise
//! anatomy that explains any gap between the two.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::embedding_io::{count_number_tokens, frequency_embedding, implied_number_range, EmbeddingTable, TokenCorpus};
use crate::error::{Error, Result};
use crate::geometry::{noise_anatomy, NoiseAnatomy};
use crate::output::{self, CsvTable};
use crate::probes::{probe_sweep, ProbeConfig, ProbeKind, SweepCell};
use crate::spectral::{dft_with, spike_report, SpectrumOptions, SpikeRow, Spectrum};
use crate::svg;

pub const REPORT_SCHEMA: &str = "twotier.report/1";

#[derive(Debug, Clone, Serialize)]
pub struct ReportOptions {
    pub periods: Vec<usize>,
    pub kinds: Vec<ProbeKind>,
    /// Seeds, folds and optimizer settings shared by every probe cell.
    pub probe: ProbeConfig,
    pub spectrum: SpectrumOptions,
    /// A period counts as spiked when `norm_mag` at `ν = 1/T` reaches this.
    pub spike_threshold: f64,
    /// A period counts as geometrically decodable when the best κ reaches this.
    pub kappa_threshold: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            periods: vec![2, 5, 10],
            kinds: vec![ProbeKind::Linear],
            probe: ProbeConfig::new(ProbeKind::Linear, 2),
            spectrum: SpectrumOptions::default(),
            spike_threshold: 10.0,
            kappa_threshold: 50.0,
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Cell<T> {
    Ok(T),
    Error(String),
}

impl<T> Cell<T> {
    fn from_result(r: Result<T>) -> Self {
        r.map_or_else(|e| Cell::Error(e.to_string()), Cell::Ok)
    }

    pub fn ok(&self) -> Option<&T> {
        match self {
            Cell::Ok(v) => Some(v),
            Cell::Error(_) => None,
        }
    }
}

/// Both tiers side by side for one period.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodVerdict {
    pub period: usize,
    pub phi: Option<f64>,
    pub peak_norm_mag: Option<f64>,
    pub prominence: Option<f64>,
    pub fisher: Option<f64>,
    pub best_kappa: Option<f64>,
    pub best_kind: Option<ProbeKind>,
    pub spike: bool,
    pub decodable: bool,
}

#[derive(Debug, Serialize)]
pub struct ReportBundle {
    pub label: String,
    pub n_tokens: usize,
    pub dim: usize,
    pub options: ReportOptions,
    #[serde(skip)]
    pub spectrum: Spectrum,
    pub spikes: Vec<(usize, Cell<SpikeRow>)>,
    pub anatomy: Vec<(usize, Cell<NoiseAnatomy>)>,
    pub probes: Vec<SweepCell>,
    pub summary: Vec<PeriodVerdict>,
}

pub fn build_report(table: &EmbeddingTable, options: &ReportOptions) -> Result<ReportBundle> {
    if options.periods.is_empty() {
        return Err(Error::InvalidArgument("report needs at least one period".into()));
    }
    let spectrum = dft_with(table, options.spectrum);
    let spikes: Vec<(usize, Cell<SpikeRow>)> = options
        .periods
        .iter()
        .map(|&t| (t, Cell::from_result(spike_report(&spectrum, &[t]).map(|mut v| v.remove(0)))))
        .collect();
    let anatomy: Vec<(usize, Cell<NoiseAnatomy>)> = options
        .periods
        .iter()
        .map(|&t| (t, Cell::from_result(noise_anatomy(table, t))))
        .collect();
    let probes = probe_sweep(table, &options.periods, &options.kinds, &options.probe);

    let summary = options
        .periods
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let spike = spikes[i].1.ok();
            let anat = anatomy[i].1.ok();
            let best = probes
                .iter()
                .filter(|c| c.period == t)
                .filter_map(|c| c.result().map(|r| (r.kappa, c.kind)))
                .fold(None, |acc: Option<(f64, ProbeKind)>, x| match acc {
                    Some(a) if a.0 >= x.0 => Some(a),
                    _ => Some(x),
                });
            PeriodVerdict {
                period: t,
                phi: spike.map(|s| s.phi).or(anat.map(|a| a.phi)),
                peak_norm_mag: spike.map(|s| s.peak_norm_mag),
                prominence: spike.map(|s| s.prominence),
                fisher: anat.map(|a| a.fisher),
                best_kappa: best.map(|b| b.0),
                best_kind: best.map(|b| b.1),
                spike: spike.is_some_and(|s| s.peak_norm_mag >= options.spike_threshold),
                decodable: best.is_some_and(|b| b.0 >= options.kappa_threshold),
            }
        })
        .collect();

    Ok(ReportBundle {
        label: table.label().to_string(),
        n_tokens: table.n_tokens(),
        dim: table.dim(),
        options: options.clone(),
        spectrum,
        spikes,
        anatomy,
        probes,
        summary,
    })
}

/// Count number tokens in `corpus`, treat the normalized counts as a 1-D embedding
/// indexed by number value, and report on it. `n_values` defaults to one past the
/// largest value in the number vocabulary.
pub fn freq_baseline(corpus: &TokenCorpus, n_values: Option<usize>, options: &ReportOptions) -> Result<ReportBundle> {
    let n_values = n_values.unwrap_or_else(|| implied_number_range(corpus.number_vocab()));
    let freq = count_number_tokens(corpus, n_values)?;
    build_report(&frequency_embedding(&freq)?, options)
}

impl ReportBundle {
    /// Every component failure, as `"<component> T=<period>: <message>"`.
    pub fn errors(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (t, c) in &self.spikes {
            if let Cell::Error(e) = c {
                out.push(format!("spectrum T={t}: {e}"));
            }
        }
        for (t, c) in &self.anatomy {
            if let Cell::Error(e) = c {
                out.push(format!("scatter T={t}: {e}"));
            }
        }
        for c in &self.probes {
            if let crate::probes::SweepOutcome::Error(e) = &c.outcome {
                out.push(format!("probe {} T={}: {e}", c.kind, c.period));
            }
        }
        out
    }

    pub fn summary_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(
            output::SUMMARY_SCHEMA,
            vec!["period", "phi", "peak_norm_mag", "prominence", "fisher", "best_kappa", "best_kind", "spike", "decodable"],
        );
        let o = |x: Option<f64>| x.map(output::num).unwrap_or_default();
        for v in &self.summary {
            t.push(vec![
                v.period.to_string(),
                o(v.phi),
                o(v.peak_norm_mag),
                o(v.prominence),
                o(v.fisher),
                o(v.best_kappa),
                v.best_kind.map(|k| k.to_string()).unwrap_or_default(),
                v.spike.to_string(),
                v.decodable.to_string(),
            ]);
        }
        t
    }

    pub fn spectrum_svg(&self) -> String {
        let n = self.spectrum.n_tokens();
        // ν in (0, 1/2]; the rest mirrors it for real tables
        let points: Vec<(f64, f64)> = (1..=n / 2)
            .map(|k| (self.spectrum.frequency(k), self.spectrum.norm_mag()[k]))
            .collect();
        let markers: Vec<f64> = self.options.periods.iter().map(|&t| 1.0 / t as f64).collect();
        svg::line_chart(
            &format!("{}: normalized spectrum", self.label),
            "frequency ν",
            "norm_mag (log10)",
            &points,
            &markers,
            true,
        )
    }

    pub fn probes_svg(&self) -> String {
        let bars: Vec<(String, f64)> = self
            .probes
            .iter()
            .filter_map(|c| c.result().map(|r| (format!("{} T={}", c.kind, c.period), r.kappa)))
            .collect();
        svg::bar_chart(&format!("{}: probe κ", self.label), "κ (%)", &bars, (-20.0, 100.0))
    }

    /// Write the bundle's files into `dir`, creating it if needed. Returns the paths written.
    pub fn write_dir(&self, dir: &Path, manifest: Option<&str>) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let spikes: Vec<SpikeRow> = self.spikes.iter().filter_map(|(_, c)| c.ok().cloned()).collect();
        let anatomy: Vec<NoiseAnatomy> = self.anatomy.iter().filter_map(|(_, c)| c.ok().cloned()).collect();
        let files: Vec<(&str, String)> = vec![
            ("spectrum.csv", output::spectrum_csv(&self.spectrum).to_string_with(manifest)),
            ("spikes.csv", output::spikes_csv(&spikes).to_string_with(manifest)),
            ("probes.csv", output::probes_csv(&self.probes).to_string_with(manifest)),
            ("probe_runs.csv", output::probe_runs_csv(&self.probes).to_string_with(manifest)),
            ("anatomy.csv", output::anatomy_csv(&anatomy).to_string_with(manifest)),
            ("summary.csv", self.summary_csv().to_string_with(manifest)),
            ("report.json", output::json_document(REPORT_SCHEMA, manifest, self)?),
            ("spectrum.svg", self.spectrum_svg()),
            ("probes.svg", self.probes_svg()),
        ];
        let mut written = Vec::with_capacity(files.len());
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn quick(periods: Vec<usize>) -> ReportOptions {
        let mut probe = ProbeConfig::new(ProbeKind::Linear, 2);
        probe.n_seeds = 1;
        probe.n_folds = 3;
        ReportOptions {
            periods,
            probe,
            ..ReportOptions::default()
        }
    }

    #[test]
    fn non_divisor_period_is_reported_not_fatal() {
        let t = crate::synth::ideal_circle(10, 100, 2, None).unwrap();
        let b = build_report(&t, &quick(vec![3, 10])).unwrap();
        let errs = b.errors();
        assert!(errs.iter().any(|e| e.starts_with("spectrum T=3")), "{errs:?}");
        let v10 = &b.summary[1];
        assert!(v10.spike && v10.decodable);
    }

    #[test]
    fn frequency_baseline_of_uniform_corpus_is_flat() {
        let vocab: BTreeMap<u32, u32> = (0..20).map(|v| (v, v)).collect();
        let seqs = vec![(0..20).collect::<Vec<u32>>(); 3];
        let corpus = TokenCorpus::new(seqs, 20, vocab).unwrap();
        let b = freq_baseline(&corpus, None, &quick(vec![2, 10])).unwrap();
        assert!(b.spectrum.power()[1..].iter().all(|&p| p < 1e-25));
        assert!(b.summary.iter().all(|v| !v.spike));
    }

    #[test]
    fn empty_number_set_is_an_error() {
        let corpus = TokenCorpus::new(vec![vec![0, 1]], 5, BTreeMap::new()).unwrap();
        assert!(freq_baseline(&corpus, Some(10), &quick(vec![2])).is_err());
    }

    #[test]
    fn bundle_writes_all_files() {
        let t = crate::synth::ideal_circle(5, 50, 2, None).unwrap();
        let b = build_report(&t, &quick(vec![5])).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = b.write_dir(dir.path(), Some("manifest.json")).unwrap();
        assert_eq!(files.len(), 9);
        let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(csv.starts_with("# schema: twotier.summary/1\n# manifest: manifest.json\n"));
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(json["schema"], REPORT_SCHEMA);
    }
}
