use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context as _, Result};
use serde::Serialize;
use spsource::analysis::{write_summary, CentralPeakRatio, ChiSquareTest, EmissionFit, EnvelopeFit, HomVisibility};
use spsource::fountain::write_transit_table;
use spsource::photostream::{
    read_stream, write_stream, ClickRecord, HomStats, InterferometerKind, Polarization, StreamFormat, StreamHeader,
};
use spsource::pulse::catalog_shape;
use spsource::qsim::SPEED_OF_LIGHT;
use spsource::scenario::{self, AnalysisBundle, ScenarioConfig, ShotTally, SimulationOutput};
use spsource::Error;

use crate::output::{num, write_json, Table, SCHEMA_VERSION};
use crate::Context;

/// Trajectory export step.
const TRAJECTORY_DT: f64 = 5e-6;

#[derive(Serialize)]
struct PulseReport {
    shape: String,
    duration: f64,
    p_target: f64,
    band_limit_hz: Option<f64>,
    p_emit: f64,
    p_spontaneous: f64,
    c_e_floor: f64,
    omega_max: f64,
}

pub fn design_pulse(ctx: &Context) -> Result<()> {
    let c = &ctx.config;
    let hash = c.hash();
    let d = scenario::design_pulse(c)?;
    let path = ctx.out.join("pulse.tsv");
    let cols = ["t_s", "omega_rad_s", "omega_unfiltered_rad_s", "target_intensity_1_s", "intensity_1_s", "fiber_position_m"];
    let mut t = Table::create(&path, "pulse", &hash, &cols)?;
    let target = d.target.envelope.values();
    let s = &d.drive.series;
    for i in 0..s.len() {
        let time = s.t(i) - s.t0();
        let phi = target.get(i).copied().unwrap_or(0.0);
        t.row(&[
            num(time),
            num(s.values()[i]),
            num(d.ideal_drive.values()[i]),
            num(phi * phi),
            num(d.intensity.values()[i]),
            num(SPEED_OF_LIGHT * time / c.pulse.fiber_index),
        ])?;
    }
    t.finish()?;
    let report = PulseReport {
        shape: c.pulse.shape.clone(),
        duration: c.pulse.duration,
        p_target: c.pulse.p_target,
        band_limit_hz: c.pulse.band_limit_hz,
        p_emit: d.p_emit,
        p_spontaneous: d.p_spont,
        c_e_floor: d.c_e_floor,
        omega_max: d.drive.max_abs(),
    };
    write_json(&ctx.out.join("pulse.json"), &hash, &report)?;
    println!(
        "feasible: P_emit = {:.4} (target {:.4}), min |c_e|^2 = {:.3e}, Omega_max/2pi = {:.3} MHz -> {}",
        d.p_emit,
        c.pulse.p_target,
        d.c_e_floor,
        report.omega_max / std::f64::consts::TAU / 1e6,
        path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct TruthSidecar<'a> {
    seed: u64,
    n_shots: u64,
    tally: &'a ShotTally,
    hom: &'a HomStats,
    p_emit_at_g0: f64,
    transits: &'a [spsource::fountain::AtomTransit],
}

fn stream_name(format: StreamFormat, tag: &str) -> String {
    match format {
        StreamFormat::Text => format!("clicks{tag}.txt"),
        StreamFormat::Binary => format!("clicks{tag}.bin"),
    }
}

fn write_run(out: &Path, config: &ScenarioConfig, sim: &SimulationOutput, format: StreamFormat, tag: &str) -> Result<()> {
    let hash = &sim.config_hash;
    let path = out.join(stream_name(format, tag));
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write_stream(&mut w, &StreamHeader::new(hash.clone()), &sim.clicks.records, format)?;
    w.flush()?;

    std::fs::write(
        out.join(format!("config{tag}.toml")),
        format!("# spsource-config schema={SCHEMA_VERSION} config={hash}\n{}", config.to_toml()),
    )?;
    let truth = &sim.truth;
    write_json(
        &out.join(format!("truth{tag}.json")),
        hash,
        &TruthSidecar {
            seed: config.run.seed,
            n_shots: config.run.n_shots,
            tally: &truth.tally,
            hom: &truth.hom,
            p_emit_at_g0: sim.pulse.p_emit,
            transits: &truth.transits,
        },
    )?;

    let mut t = Table::create(&out.join(format!("emissions{tag}.tsv")), "emissions", hash, &["shot", "pulse", "atom", "t_emit_s", "g_rad_s"])?;
    for p in &truth.photons {
        t.row(&[p.shot.to_string(), p.pulse.to_string(), p.atom.to_string(), num(p.t_emit), num(p.coupling)])?;
    }
    t.finish()?;

    if !truth.transits.is_empty() {
        let cols = ["shot", "atom", "t_enter_s", "t_exit_s", "t_peak_s", "waist_duration_s", "peak_g_rad_s"];
        let mut t = Table::create(&out.join(format!("transits{tag}.tsv")), "transits", hash, &cols)?;
        for tr in &truth.transits {
            t.row(&[
                tr.shot.to_string(),
                tr.atom.to_string(),
                num(tr.t_enter),
                num(tr.t_exit),
                num(tr.t_peak),
                num(tr.duration()),
                num(tr.peak_coupling()),
            ])?;
        }
        t.finish()?;
        let path = out.join(format!("trajectories{tag}.tsv"));
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "# spsource-trajectories schema={SCHEMA_VERSION} config={hash}")?;
        write_transit_table(&truth.transits, TRAJECTORY_DT, &mut w)?;
        w.flush()?;
    }
    println!(
        "{} clicks from {} photons ({} transits, {} driven pulses) -> {}",
        sim.clicks.len(),
        truth.tally.photons,
        truth.transits.len(),
        truth.tally.driven_pulses,
        path.display()
    );
    Ok(())
}

pub fn simulate(ctx: &Context, format: StreamFormat) -> Result<()> {
    let sim = scenario::simulate(&ctx.config)?;
    write_run(&ctx.out, &ctx.config, &sim, format, "")
}

fn load_stream(path: &Path, expected_hash: &str) -> Result<Vec<ClickRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (header, records) = read_stream(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    if header.config_hash != expected_hash {
        eprintln!(
            "warning: {} was produced by config {}, analysing with config {}",
            path.display(),
            header.config_hash,
            expected_hash
        );
    }
    Ok(records)
}

#[derive(Serialize)]
struct ShapeSummary {
    threshold: Option<u32>,
    selected_bins: usize,
    counts: u64,
    chi2: Option<ChiSquareTest>,
}

#[derive(Serialize)]
struct AnalysisSummary<'a> {
    n_clicks: usize,
    g2_central: Option<&'a CentralPeakRatio>,
    g2_envelope: Option<&'a EnvelopeFit>,
    shapes: Vec<ShapeSummary>,
    emission_selected: Option<&'a EmissionFit>,
    emission_unselected: Option<&'a EmissionFit>,
    hom: Option<&'a HomVisibility>,
    skipped: &'a [String],
}

fn write_bundle(out: &Path, config: &ScenarioConfig, b: &AnalysisBundle) -> Result<()> {
    let hash = &b.config_hash;
    if let Some(g2) = &b.g2 {
        let h = &g2.histogram;
        let norm = h.normalized();
        let mut t = Table::create(&out.join("g2.tsv"), "g2", hash, &["tau_s", "counts", "accidental", "normalized"])?;
        for i in 0..h.n_bins() {
            t.row(&[num(h.bin_center(i)), h.counts[i].to_string(), num(h.accidental[i]), num(norm[i])])?;
        }
        t.finish()?;
        let mut t = Table::create(&out.join("g2_peaks.tsv"), "g2-peaks", hash, &["k", "tau_s", "area", "accidental", "excess"])?;
        for &(k, raw, acc) in &g2.peaks.peaks {
            t.row(&[k.to_string(), num(k as f64 * g2.peaks.period), num(raw), num(acc), num(raw - acc)])?;
        }
        t.finish()?;
    }

    let mut cols = vec!["t_s".to_string(), "model".to_string()];
    cols.extend(b.shapes.iter().map(|s| match s.threshold {
        Some(t) => format!("threshold_{t}"),
        None => "all".into(),
    }));
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::create(&out.join("shape.tsv"), "shape", hash, &col_refs)?;
    if let Some(first) = b.shapes.first() {
        let norm: f64 = first.model.iter().sum();
        for i in 0..first.histogram.counts.len() {
            let mut row = vec![num(first.histogram.bin_center(i)), num(first.model[i] / norm)];
            row.extend(b.shapes.iter().map(|s| s.histogram.counts[i].to_string()));
            t.row(&row)?;
        }
    }
    t.finish()?;

    for (name, fit) in [("selected", &b.emission_selected), ("unselected", &b.emission_unselected)] {
        if let Some(f) = fit {
            let path = out.join(format!("emission_{name}.tsv"));
            let mut t = Table::create(&path, "emission", hash, &["k", "p_click", "error", "trials", "model"])?;
            let (a, _, w) = f.gaussian_fit;
            for c in &f.conditional_probs {
                let model = f.background + a * (-0.5 * (c.k as f64 / w).powi(2)).exp();
                t.row(&[c.k.to_string(), num(c.p), num(c.error), c.trials.to_string(), num(model)])?;
            }
            t.finish()?;
        }
    }

    if let Some(hom) = &b.hom {
        let par = &hom.parallel;
        let mut t = Table::create(&out.join("hom.tsv"), "hom", hash, &["tau_s", "parallel", "perpendicular"])?;
        for i in 0..par.n_bins() {
            let perp = hom.perpendicular.as_ref().map(|p| p.counts[i].to_string()).unwrap_or_default();
            t.row(&[num(par.bin_center(i)), par.counts[i].to_string(), perp])?;
        }
        t.finish()?;
    }

    let records = b.summary();
    let mut w = BufWriter::new(File::create(out.join("summary.tsv"))?);
    write_summary(&mut w, SCHEMA_VERSION, hash, &records)?;
    w.flush()?;

    let summary = AnalysisSummary {
        n_clicks: b.n_clicks,
        g2_central: b.g2.as_ref().and_then(|g| g.central.as_ref()),
        g2_envelope: b.g2.as_ref().and_then(|g| g.envelope.as_ref()),
        shapes: b
            .shapes
            .iter()
            .map(|s| ShapeSummary {
                threshold: s.threshold,
                selected_bins: s.selected_bins,
                counts: s.histogram.total(),
                chi2: s.chi2,
            })
            .collect(),
        emission_selected: b.emission_selected.as_ref(),
        emission_unselected: b.emission_unselected.as_ref(),
        hom: b.hom.as_ref().and_then(|h| h.visibility.as_ref()),
        skipped: &b.skipped,
    };
    write_json(&out.join("analysis.json"), hash, &summary)?;

    for r in &records {
        println!("{:<28} {:>14.6e} +- {:<10.3e} (n = {})", r.statistic, r.value, r.uncertainty, r.n_events);
    }
    for s in &b.skipped {
        eprintln!("skipped: {s}");
    }

    let hom_pair = b.hom.as_ref().is_some_and(|h| h.perpendicular.is_some());
    let missing = match config.interferometer.kind {
        InterferometerKind::Hbt => b.g2.as_ref().is_none_or(|g| g.central.is_none() && g.envelope.is_none()),
        InterferometerKind::Hom => hom_pair && b.hom.as_ref().is_none_or(|h| h.visibility.is_none()),
    };
    if missing {
        return Err(Error::InsufficientStatistics(b.skipped.join("; ")).into());
    }
    Ok(())
}

fn target_series(config: &ScenarioConfig) -> Result<spsource::series::TimeSeries> {
    let p = &config.pulse;
    Ok(catalog_shape(&p.shape_name()?, p.duration, p.p_target, p.target_dt)?.envelope.series)
}

pub fn analyze(ctx: &Context, stream: &Path, perpendicular: Option<&Path>) -> Result<()> {
    let c = &ctx.config;
    let records = load_stream(stream, &c.hash())?;
    let perp = match perpendicular {
        Some(path) => {
            let mut pc = c.clone();
            pc.interferometer.polarization = Polarization::Perpendicular;
            Some(load_stream(path, &pc.hash())?)
        }
        None => None,
    };
    let bundle = scenario::analyze(c, &target_series(c)?, &records, perp.as_deref())?;
    write_bundle(&ctx.out, c, &bundle)
}

pub fn report(ctx: &Context, format: StreamFormat) -> Result<()> {
    let c = &ctx.config;
    let pulse = scenario::design_pulse(c)?;
    let target = pulse.target.envelope.series.clone();
    let bundle = if c.interferometer.kind == InterferometerKind::Hom {
        let mut par = c.clone();
        par.interferometer.polarization = Polarization::Parallel;
        let mut perp = c.clone();
        perp.interferometer.polarization = Polarization::Perpendicular;
        let sim_par = scenario::simulate_with(&par, pulse.clone())?;
        write_run(&ctx.out, &par, &sim_par, format, "_parallel")?;
        let sim_perp = scenario::simulate_with(&perp, pulse)?;
        write_run(&ctx.out, &perp, &sim_perp, format, "_perpendicular")?;
        scenario::analyze(&par, &target, &sim_par.clicks.records, Some(&sim_perp.clicks.records))?
    } else {
        let sim = scenario::simulate_with(c, pulse)?;
        write_run(&ctx.out, c, &sim, format, "")?;
        scenario::analyze(c, &target, &sim.clicks.records, None)?
    };
    write_bundle(&ctx.out, c, &bundle)
}
