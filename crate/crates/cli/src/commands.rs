use std::io::Write;
use std::path::Path;

use pef_core::dataset::truncate;
use pef_core::inference::default_init;
use pef_core::raster::MergeMap;
use pef_core::{
    classify_regions, compare_models, evaluate_model, fit_ml, fit_ml_logdist, gen_synthetic,
    heatmap as render_heatmap, load_measurements, load_raster, load_region_grid,
    ls_fit_logdist, predict_logdist, predict_pef, sample_shadowed, save_measurements,
    save_region_grid, trace_path, Error, FitOptions, LogDistParams, MeasurementSet, PefParams,
    StepRule, Winner,
};

use crate::config::{Config, DEFAULT_D0, DEFAULT_L};
use crate::report::{self, db, FitSummary};
use crate::{
    ClassifyArgs, CliError, EvaluateArgs, FitArgs, FitLogdistArgs, GenSynthArgs, HeatmapArgs,
    OptimizerArgs, PredictArgs, TraceArgs,
};

type CmdResult = Result<(), CliError>;

fn stdout_error(e: std::io::Error) -> CliError {
    CliError::Core(Error::Io {
        path: "<stdout>".into(),
        source: e,
    })
}

fn emit(out: &mut impl Write, text: &str) -> CmdResult {
    out.write_all(text.as_bytes()).map_err(stdout_error)
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(|source| {
        CliError::Core(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn note(message: &str) {
    eprintln!("note: {message}");
}

/// Flag or config value, else the params file's d0, else the default.
fn close_in(config: &Config, flag: Option<f64>, from_params: Option<f64>) -> Result<f64, CliError> {
    Ok(config.value(flag, "d0")?.or(from_params).unwrap_or(DEFAULT_D0))
}

/// `None` with `--no-trunc`, else the given level or the default.
fn truncation_level(config: &Config, flag: Option<f64>, no_trunc: bool) -> Result<Option<f64>, CliError> {
    let level = config.value(flag, "L")?;
    if config.switch(no_trunc, "no-trunc")? {
        if level.is_some() {
            return Err(CliError::Usage("--L and --no-trunc are mutually exclusive".into()));
        }
        return Ok(None);
    }
    Ok(Some(level.unwrap_or(DEFAULT_L)))
}

fn fit_options(config: &Config, a: &OptimizerArgs) -> Result<FitOptions, CliError> {
    let base = if config.switch(a.plain, "plain")? {
        FitOptions::plain()
    } else {
        FitOptions::default()
    };
    Ok(FitOptions {
        step: config.value(a.step, "step")?.unwrap_or(base.step),
        rule: if config.switch(a.fixed_step, "fixed-step")? {
            StepRule::Fixed
        } else {
            base.rule
        },
        max_iterations: config.value(a.max_iter, "max-iter")?.unwrap_or(base.max_iterations),
        gradient_tolerance: config.value(a.tol, "tol")?.unwrap_or(base.gradient_tolerance),
        ..base
    })
}

pub fn classify(config: &Config, a: ClassifyArgs, out: &mut impl Write) -> CmdResult {
    let input = config.required_path(a.input, "in")?;
    let k = config.required(a.k, "k")?;
    let seed = config.required(a.seed, "seed")?;
    let mpp = config.required(a.mpp, "mpp")?;
    let output = config.required_path(a.out, "out")?;
    let merge: Option<MergeMap> = config.value(a.merge, "merge")?.map(|m: String| m.parse()).transpose()?;
    let names: Option<String> = config.value(a.names, "names")?;

    let raster = load_raster(&input)?;
    let mut grid = classify_regions(&raster, k, seed, mpp)?;
    if let Some(merge) = merge.filter(|m| !m.is_empty()) {
        grid = grid.merge_types(&merge)?;
    }
    if let Some(names) = names {
        grid = grid.with_type_names(names.split(',').map(|n| n.trim().to_owned()).collect())?;
    }
    save_region_grid(&grid, &output)?;

    let hist = grid.type_histogram();
    let total = grid.labels().len() as f64;
    let mut text = String::from("type_id,name,color,cells,fraction\n");
    for (t, &count) in hist.iter().enumerate() {
        let name = grid.type_names().map_or("", |n| n[t].as_str());
        let color = grid
            .type_colors()
            .map(|c| format!("#{:02x}{:02x}{:02x}", c[t][0], c[t][1], c[t][2]))
            .unwrap_or_default();
        text.push_str(&format!("{t},{name},{color},{count},{:.4}\n", count as f64 / total));
    }
    emit(out, &text)
}

pub fn trace(config: &Config, a: TraceArgs, out: &mut impl Write) -> CmdResult {
    let grid = load_region_grid(&config.required_path(a.grid, "grid")?)?;
    let tx = config.required(a.tx, "tx")?;
    let rx = config.required(a.rx, "rx")?;
    let d0 = close_in(config, a.d0, None)?;
    let path = trace_path(&grid, tx, rx, d0)?;
    let mut text = format!("d0,total\n{:.3},{:.3}\ntype_id,length_m\n", path.d0, path.total_distance);
    for s in &path.segments {
        text.push_str(&format!("{},{:.3}\n", s.type_id, s.length));
    }
    emit(out, &text)
}

pub fn predict(config: &Config, a: PredictArgs, out: &mut impl Write) -> CmdResult {
    let grid = load_region_grid(&config.required_path(a.grid, "grid")?)?;
    let (params, file_d0) = PefParams::load(&config.required_path(a.params, "params")?)?;
    let tx = config.required(a.tx, "tx")?;
    let rx = config.required(a.rx, "rx")?;
    let d0 = close_in(config, a.d0, file_d0)?;
    let mean = predict_pef(&grid, tx, rx, d0, &params)?;
    let mut text = format!("pathloss_db: {}\n", db(mean));
    if config.switch(a.shadowed, "shadowed")? {
        let seed = config.required(a.seed, "seed")?;
        text.push_str(&format!(
            "shadowed_db: {}\n",
            db(sample_shadowed(mean, params.sigma, seed)?)
        ));
    }
    emit(out, &text)
}

pub fn heatmap(config: &Config, a: HeatmapArgs, out: &mut impl Write) -> CmdResult {
    let grid = load_region_grid(&config.required_path(a.grid, "grid")?)?;
    let (params, file_d0) = PefParams::load(&config.required_path(a.params, "params")?)?;
    let tx = config.required(a.tx, "tx")?;
    let d0 = close_in(config, a.d0, file_d0)?;
    let csv = config.required_path(a.out, "out")?;
    let pgm = config.path(a.pgm, "pgm")?;
    let stride = config.value(a.stride, "stride")?.unwrap_or(1);

    let map = render_heatmap(&grid, tx, d0, &params, stride)?;
    map.save_csv(&csv)?;
    if let Some(pgm) = pgm {
        map.save_pgm(&pgm)?;
    }
    let lo = map.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = map.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    emit(
        out,
        &format!(
            "cells: {}x{}\nstride: {stride}\nmin_db: {}\nmax_db: {}\n",
            map.cols,
            map.rows,
            db(lo),
            db(hi)
        ),
    )
}

pub fn gen_synth(config: &Config, a: GenSynthArgs, out: &mut impl Write) -> CmdResult {
    let grid = load_region_grid(&config.required_path(a.grid, "grid")?)?;
    let (params, file_d0) = PefParams::load(&config.required_path(a.params, "params")?)?;
    let tx = config.required(a.tx, "tx")?;
    let d0 = close_in(config, a.d0, file_d0)?;
    let count = config.required(a.k, "k")?;
    let truncation = config.value(a.truncation, "L")?;
    let seed = config.required(a.seed, "seed")?;
    let output = config.required_path(a.out, "out")?;

    let set = gen_synthetic(&grid, tx, &params, d0, count, truncation, seed)?;
    save_measurements(&set, &output)?;
    emit(
        out,
        &format!("records: {}\nL_db: {}\nseed: {seed}\n", set.len(), report::opt_db(truncation)),
    )
}

fn load_set(config: &Config, flag: Option<std::path::PathBuf>) -> Result<MeasurementSet, CliError> {
    Ok(load_measurements(&config.required_path(flag, "meas")?)?)
}

pub fn fit(config: &Config, a: FitArgs, out: &mut impl Write) -> CmdResult {
    let grid = load_region_grid(&config.required_path(a.grid, "grid")?)?;
    let set = load_set(config, a.meas)?;
    let init_path = config.path(a.init, "init")?;
    let init = init_path.as_deref().map(PefParams::load).transpose()?;
    let d0 = close_in(config, a.d0, init.as_ref().and_then(|(_, d)| *d))?;
    let truncation = truncation_level(config, a.truncation, a.no_trunc)?;
    let options = fit_options(config, &a.optimizer)?;
    let output = config.path(a.out, "out")?;
    let report_path = config.path(a.report, "report")?;

    set.check_within(&grid)?;
    let design = set.design(&grid, d0, truncation)?;
    if design.rejected() > 0 {
        note(&format!(
            "{} of {} records at or above L dropped",
            design.rejected(),
            set.len()
        ));
    }
    let start = match init {
        Some((p, _)) => p,
        None => default_init(&design)?,
    };
    let fit = fit_ml(&design, &start, &options)?;
    if !fit.converged {
        note(&format!("not converged after {} iterations", fit.iterations));
    }

    let summary = FitSummary {
        records: design.len(),
        rejected: design.rejected(),
        truncation,
        d0,
    };
    let text = report::fit_report(&summary, &fit, &grid);
    if let Some(path) = output {
        fit.params.save(Some(d0), &path)?;
    }
    if let Some(path) = report_path {
        write_text(&path, &text)?;
    }
    emit(out, &text)
}

pub fn fit_logdist(config: &Config, a: FitLogdistArgs, out: &mut impl Write) -> CmdResult {
    let set = load_set(config, a.meas)?;
    let d0 = close_in(config, a.d0, None)?;
    let truncation = truncation_level(config, a.truncation, a.no_trunc)?;
    let ls_only = config.switch(a.ls_only, "ls-only")?;
    let options = fit_options(config, &a.optimizer)?;
    let output = config.path(a.out, "out")?;
    let report_path = config.path(a.report, "report")?;

    let kept = match truncation {
        Some(level) => truncate(&set, level)?,
        None => set.clone(),
    };
    let rejected = set.len() - kept.len();
    if rejected > 0 {
        note(&format!("{rejected} of {} records at or above L dropped", set.len()));
    }
    let data = kept.distance_pairs();
    let ls = ls_fit_logdist(&data, d0)?;
    let ml = if ls_only {
        None
    } else {
        Some(fit_ml_logdist(&data, d0, truncation, Some(ls), &options)?)
    };

    let summary = FitSummary {
        records: data.len(),
        rejected,
        truncation,
        d0,
    };
    let text = report::logdist_report(&summary, &ls, ml.as_ref());
    if let Some(path) = output {
        ml.as_ref().map_or(ls, |m| m.params).save(&path)?;
    }
    if let Some(path) = report_path {
        write_text(&path, &text)?;
    }
    emit(out, &text)
}

pub fn evaluate(config: &Config, a: EvaluateArgs, out: &mut impl Write) -> CmdResult {
    let pef_path = config.path(a.pef, "pef")?;
    let logdist_path = config.path(a.logdist, "logdist")?;
    if pef_path.is_none() && logdist_path.is_none() {
        return Err(CliError::Usage("give --pef, --logdist, or both".into()));
    }
    let report_path = config.path(a.out, "out")?;
    let cdf = config.path(a.cdf, "cdf")?;
    let cdf_logdist = config.path(a.cdf_logdist, "cdf-logdist")?;
    if cdf.is_some() && pef_path.is_none() {
        return Err(CliError::Usage("--cdf needs --pef".into()));
    }
    if cdf_logdist.is_some() && logdist_path.is_none() {
        return Err(CliError::Usage("--cdf-logdist needs --logdist".into()));
    }
    let set = load_set(config, a.meas)?;
    let pef = pef_path.map(|p| PefParams::load(&p)).transpose()?;
    let logdist = logdist_path.map(|p| LogDistParams::load(&p)).transpose()?;

    let mut text = format!("# evaluation\nrecords: {}\n", set.len());
    if let Some(level) = set.truncation {
        text.push_str(&format!("L_db: {}\n", db(level)));
    }
    let (pef_report, ld_report) = match (&pef, &logdist) {
        (Some((params, file_d0)), Some(ld)) => {
            let grid = load_region_grid(&config.required_path(a.grid, "grid")?)?;
            let d0 = close_in(config, a.d0, *file_d0)?;
            let cmp = compare_models(&set, &grid, params, ld, d0)?;
            let winner = match cmp.winner {
                Winner::Pef => "pef",
                Winner::LogDistance => "logdist",
                Winner::Tie => "tie",
            };
            text.push_str(&format!(
                "d0_m: {d0}\nwinner: {winner}\nrmse_delta_db: {}\n",
                db(cmp.rmse_delta)
            ));
            (Some(cmp.pef), Some(cmp.logdist))
        }
        (Some((params, file_d0)), None) => {
            let grid = load_region_grid(&config.required_path(a.grid, "grid")?)?;
            let d0 = close_in(config, a.d0, *file_d0)?;
            text.push_str(&format!("d0_m: {d0}\n"));
            let r = evaluate_model(&set, |r| predict_pef(&grid, set.tx, r.rx, d0, params))?;
            (Some(r), None)
        }
        (None, Some(ld)) => {
            let r = evaluate_model(&set, |r| predict_logdist(set.tx.distance(&r.rx), ld))?;
            (None, Some(r))
        }
        (None, None) => unreachable!("checked above"),
    };
    if let Some(r) = &pef_report {
        text.push('\n');
        text.push_str(&report::eval_section("multi-exponent", r));
    }
    if let Some(r) = &ld_report {
        text.push('\n');
        text.push_str(&report::eval_section("log-distance", r));
    }
    if let (Some(path), Some(r)) = (cdf, &pef_report) {
        r.save_cdf_csv(&path)?;
    }
    if let (Some(path), Some(r)) = (cdf_logdist, &ld_report) {
        r.save_cdf_csv(&path)?;
    }
    if let Some(path) = report_path {
        write_text(&path, &text)?;
    }
    emit(out, &text)
}
