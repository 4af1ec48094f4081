use anyhow::{Context, Result};
use serde::Serialize;

use twotier::embedding_io::load_corpus;
use twotier::geometry::{self, NoiseAnatomy, ScatterSummary};
use twotier::output::{self, json_document};
use twotier::probes::{self, ProbeConfig, ProbeKind, SweepCell, SweepOutcome};
use twotier::report::{self, ReportBundle};
use twotier::spectral::{self, SpikeRow};
use twotier::svg;

use super::{load_table, prepare_out};
use crate::args::{FreqBaselineArgs, ProbeArgs, ReportArgs, ScatterArgs, SpectrumArgs};
use crate::manifest::{RunManifest, MANIFEST_FILE};

const SCATTER_SCHEMA: &str = "twotier.scatter/1";
const M: Option<&str> = Some(MANIFEST_FILE);

pub fn spectrum(args: &SpectrumArgs) -> Result<RunManifest> {
    let mut manifest = RunManifest::start("spectrum", args)?;
    let table = load_table(&args.table, &mut manifest)?;
    let dir = &args.out.out;
    prepare_out(dir)?;
    let spec = spectral::dft_with(&table, args.spectrum.options());
    let mut rows: Vec<SpikeRow> = Vec::new();
    for &t in &args.periods {
        match spectral::spike_report(&spec, &[t]) {
            Ok(mut r) => rows.append(&mut r),
            Err(e) => manifest.errors.push(format!("spectrum T={t}: {e}")),
        }
    }
    manifest.emit(dir, "spectrum.csv", output::spectrum_csv(&spec).to_string_with(M))?;
    manifest.emit(dir, "spikes.csv", output::spikes_csv(&rows).to_string_with(M))?;
    if args.svg {
        let points: Vec<(f64, f64)> = (1..=spec.n_tokens() / 2)
            .map(|k| (spec.frequency(k), spec.norm_mag()[k]))
            .collect();
        let markers: Vec<f64> = args.periods.iter().map(|&t| 1.0 / t as f64).collect();
        let chart = svg::line_chart(table.label(), "frequency ν", "norm_mag (log10)", &points, &markers, true);
        manifest.emit(dir, "spectrum.svg", chart)?;
    }
    for r in &rows {
        println!(
            "T={:<4} phi={:<14.6e} peak_norm_mag={:<12.4} prominence={:.4}",
            r.period, r.phi, r.peak_norm_mag, r.prominence
        );
    }
    manifest.finish(dir)
}

#[derive(Serialize)]
struct ScatterDoc {
    label: String,
    n_tokens: usize,
    dim: usize,
    periods: Vec<ScatterSummary>,
}

pub fn scatter(args: &ScatterArgs) -> Result<RunManifest> {
    let mut manifest = RunManifest::start("scatter", args)?;
    let table = load_table(&args.table, &mut manifest)?;
    let dir = &args.out.out;
    prepare_out(dir)?;
    let mut summaries = Vec::new();
    for &t in &args.periods {
        match geometry::scatter(&table, t) {
            Ok(s) => summaries.push(if args.matrices { s } else { s.elide_matrices() }),
            Err(e) => manifest.errors.push(format!("scatter T={t}: {e}")),
        }
    }
    let anatomy: Vec<NoiseAnatomy> = summaries.iter().map(NoiseAnatomy::from).collect();
    manifest.emit(dir, "anatomy.csv", output::anatomy_csv(&anatomy).to_string_with(M))?;
    for a in &anatomy {
        println!(
            "T={:<4} phi={:<14.6e} fisher={:<14.6e} cond_within={:.4e}",
            a.period, a.phi, a.fisher, a.cond_within
        );
    }
    let doc = ScatterDoc {
        label: table.label().to_string(),
        n_tokens: table.n_tokens(),
        dim: table.dim(),
        periods: summaries,
    };
    manifest.emit(dir, "scatter.json", json_document(SCATTER_SCHEMA, M, &doc)?)?;
    manifest.finish(dir)
}

pub fn probe(args: &ProbeArgs) -> Result<RunManifest> {
    let mut manifest = RunManifest::start("probe", args)?;
    let table = load_table(&args.table, &mut manifest)?;
    let dir = &args.out.out;
    prepare_out(dir)?;
    let base = args.probe.config();
    manifest.seeds = base.seeds().collect();

    let mut cells = Vec::new();
    for &period in &args.periods {
        for &kind in &args.probe.kinds {
            let config = ProbeConfig {
                kind,
                period,
                ..base.clone()
            };
            let outcome = if kind == ProbeKind::Circular && args.dump_projection {
                probes::circular_probe(&table, &config).and_then(|o| {
                    let csv = output::projection_csv(&o.projections, period).to_string_with(M);
                    std::fs::write(dir.join(format!("projection_T{period}.csv")), csv)
                        .map_err(|e| twotier::Error::InvalidArgument(format!("writing projection: {e}")))?;
                    manifest.outputs.push(format!("projection_T{period}.csv"));
                    if args.svg {
                        let pts: Vec<(f64, f64, usize)> = o
                            .projections
                            .iter()
                            .enumerate()
                            .filter_map(|(n, p)| p.map(|[x, y]| (x, y, n % period)))
                            .collect();
                        let chart = svg::scatter_chart(&format!("circular probe T={period}"), &pts);
                        std::fs::write(dir.join(format!("projection_T{period}.svg")), chart)
                            .map_err(|e| twotier::Error::InvalidArgument(format!("writing projection: {e}")))?;
                        manifest.outputs.push(format!("projection_T{period}.svg"));
                    }
                    Ok(o.result)
                })
            } else {
                probes::run_probe(&table, &config)
            };
            let outcome = match outcome {
                Ok(r) => SweepOutcome::Ok(r),
                Err(e) => {
                    manifest.errors.push(format!("probe {kind} T={period}: {e}"));
                    SweepOutcome::Error(e.to_string())
                }
            };
            cells.push(SweepCell { period, kind, outcome });
        }
    }
    print_cells(&cells);
    manifest.emit(dir, "probes.csv", output::probes_csv(&cells).to_string_with(M))?;
    manifest.emit(dir, "probe_runs.csv", output::probe_runs_csv(&cells).to_string_with(M))?;
    if args.svg {
        let bars: Vec<(String, f64)> = cells
            .iter()
            .filter_map(|c| c.result().map(|r| (format!("{} T={}", c.kind, c.period), r.kappa)))
            .collect();
        manifest.emit(dir, "probes.svg", svg::bar_chart(table.label(), "κ (%)", &bars, (-20.0, 100.0)))?;
    }
    manifest.finish(dir)
}

fn print_cells(cells: &[SweepCell]) {
    for c in cells {
        match &c.outcome {
            SweepOutcome::Ok(r) => println!(
                "T={:<4} {:<9} accuracy={:.4} kappa={:.2} runs={}",
                c.period,
                c.kind.as_str(),
                r.accuracy,
                r.kappa,
                r.per_run.len()
            ),
            SweepOutcome::Error(e) => println!("T={:<4} {:<9} error: {e}", c.period, c.kind.as_str()),
        }
    }
}

fn finish_report(bundle: &ReportBundle, mut manifest: RunManifest, dir: &std::path::Path) -> Result<RunManifest> {
    let written = bundle.write_dir(dir, M)?;
    manifest.record(dir, &written);
    manifest.errors.extend(bundle.errors());
    for v in &bundle.summary {
        let f = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4e}"));
        println!(
            "T={:<4} phi={:<12} peak_norm_mag={:<12} fisher={:<12} best_kappa={:<12} spike={} decodable={}",
            v.period,
            f(v.phi),
            f(v.peak_norm_mag),
            f(v.fisher),
            f(v.best_kappa),
            v.spike,
            v.decodable
        );
    }
    manifest.finish(dir)
}

pub fn report(args: &ReportArgs) -> Result<RunManifest> {
    let mut manifest = RunManifest::start("report", args)?;
    let table = load_table(&args.table, &mut manifest)?;
    let options = args.report.options();
    manifest.seeds = options.probe.seeds().collect();
    let bundle = report::build_report(&table, &options)?;
    finish_report(&bundle, manifest, &args.out.out)
}

pub fn freq_baseline(args: &FreqBaselineArgs) -> Result<RunManifest> {
    let mut manifest = RunManifest::start("freq-baseline", args)?;
    manifest.input(&args.corpus.corpus)?;
    manifest.input(&args.corpus.number_vocab)?;
    let corpus = load_corpus(&args.corpus.corpus, &args.corpus.number_vocab, args.corpus.vocab_size)
        .context("loading corpus")?;
    let options = args.report.options();
    manifest.seeds = options.probe.seeds().collect();
    let bundle = report::freq_baseline(&corpus, args.n_values, &options)?;
    finish_report(&bundle, manifest, &args.out.out)
}
