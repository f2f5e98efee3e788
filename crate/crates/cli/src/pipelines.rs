//! One function per command: compute, write CSVs, return derived values.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};

use anyhow::Context;
use keplerstat_core::classical::{admissible_orbits, PotentialParams};
use keplerstat_core::csv::{fmt_f64, read_curve, write_curve, write_histogram, write_unfolded};
use keplerstat_core::ensemble::{linspace, spacing_scan};
use keplerstat_core::spectrum::unfolded_energy;
use keplerstat_core::stats::{fit_step, StatCurve};
use keplerstat_core::theory::{k_inf_sinc, k_inf_smooth, sigma_inf_curve};
use keplerstat_core::{
    delta3_saturation, ensemble_rigidity_scan, ensemble_sigma_scan, generate_model_spectrum,
    jump_energies, k_inf, make_ensemble, BetaEnsemble, EnergyBand, ScanOptions, SpectrumParams,
    SumOptions, TheoryPoint,
};
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::output::OutputDir;
use crate::plot;

/// Resolution of the pooled spacing distribution used for the KS distance.
pub const KS_RESOLUTION: f64 = 1.0e-4;

/// What a pipeline reports back for the manifest.
#[derive(Debug, Default)]
pub struct RunReport {
    pub member_betas: Vec<f64>,
    pub operating_points: Vec<TheoryPoint>,
    pub derived: BTreeMap<String, Value>,
}

pub fn dispatch(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<RunReport> {
    match cfg.command {
        Command::Spectrum => run_spectrum(cfg, out),
        Command::Spacings => run_spacings(cfg, out),
        Command::Rigidity => run_rigidity(cfg, out),
        Command::Variance => run_variance(cfg, out),
        Command::Correlation => run_correlation(cfg, out),
        Command::Theory => run_theory(cfg, out),
        Command::Orbits => run_orbits(cfg, out),
        Command::Compare => run_compare(cfg, out),
    }
}

fn scan_options(cfg: &RunConfig) -> ScanOptions {
    ScanOptions {
        window_fraction: cfg.window.window_fraction,
        workers: cfg.workers,
    }
}

fn sum_options(cfg: &RunConfig, correction: bool) -> SumOptions {
    SumOptions {
        m_cut_max: cfg.grids.max_terms,
        ..SumOptions::with_correction(correction)
    }
}

fn curve_csv(c: &StatCurve) -> impl FnOnce(&mut Vec<u8>) -> std::io::Result<()> + '_ {
    move |w| write_curve(w, c)
}

/// File-name tag for a center, e.g. `5e5`.
fn tag(x: f64) -> String {
    format!("{x:e}").replace('+', "")
}

/// Linear interpolation of `c` at `x`, clamped to the grid ends.
fn interpolate(c: &StatCurve, x: f64) -> f64 {
    let xs = c.abscissa();
    let ys = c.mean();
    let i = xs.partition_point(|&v| v < x);
    if i == 0 {
        return ys[0];
    }
    if i == xs.len() {
        return ys[xs.len() - 1];
    }
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

pub fn run_spectrum(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<RunReport> {
    let params = SpectrumParams::with_window_fraction(
        cfg.ensemble.beta_central,
        cfg.window.eps_max,
        cfg.window.window_fraction,
    )?;
    let s = generate_model_spectrum(&params)?;
    out.write("spectrum.csv", |w| write_unfolded(w, &s))?;
    out.write("plot.py", |w| w.write_all(plot::spectrum().as_bytes()))?;
    let mut report = RunReport {
        member_betas: vec![params.beta],
        ..RunReport::default()
    };
    let expected = params.unfolded_upper();
    report.derived.insert("level_count".into(), json!(s.len()));
    report.derived.insert("mean_count".into(), json!(expected));
    Ok(report)
}

pub fn run_spacings(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<RunReport> {
    let betas = make_ensemble(&cfg.ensemble)?;
    let beta_min = betas.iter().copied().fold(f64::INFINITY, f64::min);
    let default_hi = unfolded_energy(
        0.95 * cfg.window.window_fraction * 2.0 * beta_min,
        (2.0 * beta_min).sqrt(),
    );
    let hi = cfg.window.unfolded_max.unwrap_or(default_hi);
    let lo = cfg.window.unfolded_min.unwrap_or(hi / 6.0);
    let ensemble = BetaEnsemble::from_betas(betas.clone(), cfg.window.window_fraction, hi)?;
    let acc = spacing_scan(&ensemble, lo, hi, KS_RESOLUTION, cfg.workers)?;
    let hist = acc.histogram(cfg.grids.bins)?;
    out.write("spacings.csv", |w| write_histogram(w, &hist, true))?;
    out.write("plot.py", |w| w.write_all(plot::spacings().as_bytes()))?;
    let mut report = RunReport {
        member_betas: betas,
        ..RunReport::default()
    };
    let d = &mut report.derived;
    d.insert("window".into(), json!([lo, hi]));
    d.insert("spacing_count".into(), json!(acc.total()));
    d.insert("ks_distance".into(), json!(acc.ks_distance_at_edges()));
    d.insert("ks_distance_bound".into(), json!(acc.ks_distance_bound()));
    d.insert("ks_resolution".into(), json!(acc.resolution()));
    Ok(report)
}

pub fn run_rigidity(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<RunReport> {
    let g = &cfg.grids;
    let beta = cfg.ensemble.beta_central;
    let centers = linspace(g.centers_min, g.centers_max, g.centers_steps);
    let points = centers
        .iter()
        .map(|&c| keplerstat_core::theory_point(c, beta))
        .collect::<keplerstat_core::Result<Vec<_>>>()?;

    let measured = ensemble_rigidity_scan(
        &cfg.ensemble,
        &centers,
        &EnergyBand::default(),
        &scan_options(cfg),
    )?;
    let theory_curve = |correction: bool| -> anyhow::Result<StatCurve> {
        let opts = sum_options(cfg, correction);
        let values = points
            .iter()
            .map(|tp| delta3_saturation(tp, &opts))
            .collect::<keplerstat_core::Result<Vec<_>>>()?;
        Ok(StatCurve::new(centers.clone(), values, None)?)
    };
    let plain = theory_curve(false)?;
    let corrected = theory_curve(true)?;

    let g_hi = points
        .iter()
        .map(|p| p.gamma_cir)
        .fold(f64::INFINITY, f64::min);
    let g_lo = points.iter().map(|p| p.gamma_cir).fold(0.0, f64::max);
    let k_first = (g_hi.floor() as u64).max(2);
    let k_last = (g_lo.ceil() as u64).max(k_first);
    let markers = jump_energies(beta, k_first..=k_last)?;

    out.write("measured.csv", curve_csv(&measured))?;
    out.write("theory.csv", curve_csv(&plain))?;
    out.write("theory_corrected.csv", curve_csv(&corrected))?;
    out.write("markers.csv", |w| {
        writeln!(w, "k,eps")?;
        for (k, e) in &markers {
            writeln!(w, "{k},{}", fmt_f64(*e))?;
        }
        Ok(())
    })?;
    out.write("plot.py", |w| w.write_all(plot::rigidity().as_bytes()))?;

    let mut report = RunReport {
        member_betas: make_ensemble(&cfg.ensemble)?,
        operating_points: points,
        ..RunReport::default()
    };
    let d = &mut report.derived;
    d.insert(
        "jump_energies".into(),
        json!(markers
            .iter()
            .map(|(k, e)| json!({"k": k, "eps": e}))
            .collect::<Vec<_>>()),
    );
    if measured.len() >= 2 {
        let fit = fit_step(&measured)?;
        let at = |c: &StatCurve, range: std::ops::Range<usize>| {
            let ys = &c.mean()[range];
            ys.iter().sum::<f64>() / ys.len() as f64
        };
        let n = measured.len();
        d.insert(
            "step".into(),
            json!({
                "location": fit.location,
                "lower_side": fit.left_level,
                "upper_side": fit.right_level,
                "theory_lower_side": at(&plain, 0..fit.split),
                "theory_upper_side": at(&plain, fit.split..n),
                "theory_corrected_lower_side": at(&corrected, 0..fit.split),
                "theory_corrected_upper_side": at(&corrected, fit.split..n),
            }),
        );
    }
    Ok(report)
}

/// Widths for one center: `(0, e_max]` in `e_steps` equal steps unless an
/// explicit lower edge is configured.
fn width_grid(cfg: &RunConfig, tp: &TheoryPoint) -> Vec<f64> {
    let g = &cfg.grids;
    let hi = g.e_max.unwrap_or(3.0 * tp.omega_r);
    match g.e_min {
        Some(lo) => linspace(lo, hi, g.e_steps),
        None => (1..=g.e_steps)
            .map(|i| hi * i as f64 / g.e_steps as f64)
            .collect(),
    }
}

pub fn run_variance(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<RunReport> {
    let beta = cfg.ensemble.beta_central;
    let opts = sum_options(cfg, cfg.correction_enabled);
    let mut report = RunReport {
        member_betas: make_ensemble(&cfg.ensemble)?,
        ..RunReport::default()
    };
    let mut per_center = Vec::new();
    for &eps in &cfg.grids.eps_centers {
        let tp = keplerstat_core::theory_point(eps, beta)?;
        let widths = width_grid(cfg, &tp);
        let measured = ensemble_sigma_scan(&cfg.ensemble, eps, &widths, &scan_options(cfg))?;
        let theory = StatCurve::new(widths.clone(), sigma_inf_curve(&tp, &widths, &opts)?, None)?;
        let e_hi = widths[widths.len() - 1];
        let zeros: Vec<u64> = (1..)
            .take_while(|&n| n as f64 * tp.omega_r <= e_hi)
            .collect();
        let zero_widths: Vec<f64> = zeros.iter().map(|&n| n as f64 * tp.omega_r).collect();
        let zero_theory = sigma_inf_curve(&tp, &zero_widths, &opts)?;

        let t = tag(eps);
        out.write(&format!("measured_eps{t}.csv"), curve_csv(&measured))?;
        out.write(&format!("theory_eps{t}.csv"), curve_csv(&theory))?;
        out.write(&format!("zeros_eps{t}.csv"), |w| {
            writeln!(w, "n,x,theory,measured")?;
            for ((n, x), th) in zeros.iter().zip(&zero_widths).zip(&zero_theory) {
                writeln!(
                    w,
                    "{n},{},{},{}",
                    fmt_f64(*x),
                    fmt_f64(*th),
                    fmt_f64(interpolate(&measured, *x))
                )?;
            }
            Ok(())
        })?;

        let saturation = delta3_saturation(&tp, &opts)?;
        let tail: Vec<f64> = measured
            .points()
            .filter(|&(x, _)| x >= tp.omega_r)
            .map(|(_, y)| y)
            .collect();
        let measured_mean =
            (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64);
        per_center.push(json!({
            "eps": eps,
            "delta3_saturation": saturation,
            "sigma_saturation": 2.0 * saturation,
            "measured_sigma_mean_beyond_omega_r": measured_mean,
            "zeros": zeros.iter().zip(&zero_widths).map(|(n, x)| json!({
                "n": n, "x": x, "measured": interpolate(&measured, *x),
            })).collect::<Vec<_>>(),
        }));
        report.operating_points.push(tp);
    }
    report
        .derived
        .insert("centers".into(), Value::Array(per_center));
    out.write("plot.py", |w| {
        w.write_all(plot::variance(&cfg.grids.eps_centers).as_bytes())
    })?;
    Ok(report)
}

pub fn run_correlation(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<RunReport> {
    let beta = cfg.ensemble.beta_central;
    let mut report = RunReport::default();
    let mut per_center = Vec::new();
    for &eps in &cfg.grids.eps_centers {
        let tp = keplerstat_core::theory_point(eps, beta)?;
        let hi = cfg.grids.e_max.unwrap_or(3.0 * tp.omega_r);
        let lo = cfg.grids.e_min.unwrap_or(0.0);
        let omegas = linspace(lo, hi, cfg.grids.e_steps);
        let rows = omegas
            .iter()
            .map(|&w| {
                // Both orbit orientations, as in the smooth references.
                let k = 2.0 * k_inf(&tp, w, cfg.grids.cutoff)?;
                Ok([w, k, k_inf_smooth(&tp, w), k_inf_sinc(&tp, w)])
            })
            .collect::<keplerstat_core::Result<Vec<_>>>()?;
        out.write(&format!("correlation_eps{}.csv", tag(eps)), |w| {
            writeln!(w, "omega,k_inf,k_smooth,k_sinc")?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{},{},{}",
                    fmt_f64(r[0]),
                    fmt_f64(r[1]),
                    fmt_f64(r[2]),
                    fmt_f64(r[3])
                )?;
            }
            Ok(())
        })?;
        let m = tp.mr_min as f64;
        per_center.push(json!({
            "eps": eps,
            "energy_scale": tp.energy_scale(),
            "smooth_over_sinc_at_zero": (2.0 * m - 1.0) / (2.0 * m),
            "cutoff": cfg.grids.cutoff,
        }));
        report.operating_points.push(tp);
    }
    report
        .derived
        .insert("centers".into(), Value::Array(per_center));
    out.write("plot.py", |w| {
        w.write_all(plot::correlation(&cfg.grids.eps_centers).as_bytes())
    })?;
    Ok(report)
}

pub fn run_theory(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<RunReport> {
    let mut report = RunReport::default();
    let mut rows = Vec::new();
    for &beta in &cfg.grids.theory_betas {
        for &eps in &cfg.grids.eps_centers {
            let tp = match keplerstat_core::theory_point(eps, beta) {
                Ok(tp) => tp,
                Err(e) => {
                    log::warn!("skipping beta = {beta}, eps = {eps}: {e}");
                    continue;
                }
            };
            let plain = delta3_saturation(&tp, &sum_options(cfg, false))?;
            let corrected = delta3_saturation(&tp, &sum_options(cfg, true))?;
            rows.push((tp, plain, corrected));
        }
    }
    out.write("theory.csv", |w| {
        writeln!(
            w,
            "beta,eps,omega_r,gamma_cir,mr_min,energy_scale,delta3_saturation,delta3_saturation_corrected"
        )?;
        for (tp, a, b) in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                fmt_f64(tp.beta),
                fmt_f64(tp.eps),
                fmt_f64(tp.omega_r),
                fmt_f64(tp.gamma_cir),
                tp.mr_min,
                fmt_f64(tp.energy_scale()),
                fmt_f64(*a),
                fmt_f64(*b)
            )?;
        }
        Ok(())
    })?;
    report.operating_points = rows.iter().map(|r| r.0).collect();
    report.derived.insert("points".into(), json!(rows.len()));
    Ok(report)
}

pub fn run_orbits(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<RunReport> {
    let c = &cfg.classical;
    let pp = PotentialParams::new(c.alpha, c.beta_raw, c.mass)?;
    let orbits = admissible_orbits(&pp, c.energy, c.mr_max)?;
    let mut text = Vec::new();
    writeln!(text, "m_r,m_theta,gamma,l,period")?;
    for o in &orbits {
        writeln!(
            text,
            "{},{},{},{},{}",
            o.m_r,
            o.m_theta,
            fmt_f64(o.m_r as f64 / o.m_theta as f64),
            fmt_f64(o.l),
            fmt_f64(o.period)
        )?;
    }
    print!("{}", String::from_utf8_lossy(&text));
    out.write("orbits.csv", |w| w.write_all(&text))?;
    let mut report = RunReport::default();
    report
        .derived
        .insert("orbit_count".into(), json!(orbits.len()));
    report.derived.insert(
        "well_depth".into(),
        json!(pp.well_depth().is_finite().then(|| pp.well_depth())),
    );
    Ok(report)
}

pub fn run_compare(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<RunReport> {
    let load = |p: &std::path::Path| -> anyhow::Result<StatCurve> {
        let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        read_curve(BufReader::new(f)).with_context(|| format!("reading {}", p.display()))
    };
    let a = load(&cfg.inputs[0])?;
    let b = load(&cfg.inputs[1])?;
    let (mut xs, mut ds) = (Vec::new(), Vec::new());
    for (x, ya) in a.points() {
        let bx = b.abscissa();
        if let Ok(j) = bx.binary_search_by(|v| v.total_cmp(&x)) {
            xs.push(x);
            ds.push(ya - b.mean()[j]);
        }
    }
    if xs.is_empty() {
        return Err(keplerstat_core::Error::InvalidParameter(
            "the two curves share no abscissa".into(),
        )
        .into());
    }
    let deviation = StatCurve::new(xs, ds, None)?;
    out.write("deviation.csv", curve_csv(&deviation))?;
    let n = deviation.len() as f64;
    let max = deviation.mean().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let rms = (deviation.mean().iter().map(|d| d * d).sum::<f64>() / n).sqrt();
    let mut report = RunReport::default();
    let d = &mut report.derived;
    d.insert("common_points".into(), json!(deviation.len()));
    d.insert("max_abs_deviation".into(), json!(max));
    d.insert("rms_deviation".into(), json!(rms));
    Ok(report)
}
