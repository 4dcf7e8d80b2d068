//! Subcommand implementations. Each writes its artifacts and a
//! `manifest.json` into the output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dealer_core::analytic::{
    boundary_layer_width, com_diffusion_constant_n2, mean_transaction_interval, AnalyticProfile,
};
use dealer_core::grid::GridSpec;
use dealer_core::io::{write_table, Cell};
use dealer_core::lattice::{diffusive_limit_check, lattice_steady_state, LatticeParams};
use dealer_core::mlsolver::{
    boundary_condition_check, cell_average_error, ml_steady, write_field_csv, MlField,
    SteadyOptions,
};
use dealer_core::simulator::{run, RunConfig, RunResult};
use dealer_core::stats::{
    l1_distance, l1_distance_where, msd_slope, pooled_interval_stats, two_sided_tail_mass,
    two_sided_window_mass, SampledDensity,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::Config;
use crate::error::{CliError, CliResult};

/// Largest pairwise L1 distance accepted by `compare`.
pub const COMPARE_L1_TOLERANCE: f64 = 0.03;

/// Refinement levels written by the `lattice` subcommand.
pub const LATTICE_LEVELS: [usize; 4] = [4, 8, 16, 32];

/// Trader counts used by `sweep-n` when none are given.
pub const DEFAULT_N_LIST: [usize; 3] = [2, 7, 100];

/// COM sampling interval and longest MSD lag, in time units.
const COM_SAMPLE_TIME: f64 = 0.01;
const MSD_MAX_LAG: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    Lattice,
    MlSolve,
    Analytic,
    Compare,
    SweepN,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Lattice => "lattice",
            Subcommand::MlSolve => "ml-solve",
            Subcommand::Analytic => "analytic",
            Subcommand::Compare => "compare",
            Subcommand::SweepN => "sweep-n",
        }
    }
}

/// Human-readable outcome lines for the terminal.
#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
}

impl Report {
    fn note(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }
}

struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write<F>(&mut self, name: &str, body: F) -> CliResult<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let mut out = BufWriter::new(File::create(self.dir.join(name))?);
        body(&mut out)?;
        out.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_jsonl(&mut self, name: &str, records: &[Value]) -> CliResult<()> {
        self.write(name, |out| {
            for r in records {
                writeln!(out, "{r}")?;
            }
            Ok(())
        })
    }

    fn finish(
        self,
        subcommand: Subcommand,
        cfg: &Config,
        extra: Map<String, Value>,
    ) -> CliResult<()> {
        self.finish_with(subcommand, cfg, cfg.to_json(), extra)
    }

    fn finish_with(
        mut self,
        subcommand: Subcommand,
        cfg: &Config,
        echoed: Value,
        extra: Map<String, Value>,
    ) -> CliResult<()> {
        let mut manifest = Map::new();
        manifest.insert("subcommand".into(), json!(subcommand.name()));
        manifest.insert("config".into(), echoed);
        let mut predictions = Map::new();
        predictions.insert(
            "mean_transaction_interval".into(),
            json!(mean_transaction_interval(cfg.spread, cfg.sigma2)?),
        );
        predictions.insert(
            "com_diffusion_constant".into(),
            json!(cfg.sigma2 / (2.0 * cfg.n as f64)),
        );
        predictions.insert(
            "boundary_layer_width".into(),
            json!(boundary_layer_width(cfg.spread, cfg.n)),
        );
        manifest.insert("predictions".into(), Value::Object(predictions));
        manifest.extend(extra);
        self.files.push("manifest.json".into());
        manifest.insert("outputs".into(), json!(self.files));
        let text =
            serde_json::to_string_pretty(&Value::Object(manifest)).expect("manifest serializes");
        fs::write(self.dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

fn require_two_traders(cfg: &Config, what: Subcommand) -> CliResult<()> {
    if cfg.n != 2 {
        return Err(CliError::Usage(format!(
            "{} describes the two-trader relative coordinate; set N=2 (got N={})",
            what.name(),
            cfg.n
        )));
    }
    Ok(())
}

/// Closed form the simulated density should approach, if there is one.
fn reference_profile(cfg: &Config) -> CliResult<Option<AnalyticProfile<f64>>> {
    if cfg.n == 2 {
        Ok(Some(AnalyticProfile::two_body(
            cfg.spread, cfg.sigma2, cfg.u2,
        )?))
    } else if cfg.u2 == 0.0 {
        Ok(Some(AnalyticProfile::mean_field_nlo(cfg.spread, cfg.n)?))
    } else {
        Ok(None)
    }
}

struct Ensemble {
    config: RunConfig<f64>,
    runs: Vec<RunResult<f64>>,
    merged: RunResult<f64>,
}

fn simulate_ensemble(cfg: &Config, record_events: bool, record_com: bool) -> CliResult<Ensemble> {
    let mut config = RunConfig::new(cfg.params()?, cfg.schedule()?, cfg.grid()?)?;
    config.record_events = record_events;
    if record_com {
        config.com_sample_every = ((COM_SAMPLE_TIME / cfg.dt()).round() as u64).max(1);
    }
    let runs: Vec<RunResult<f64>> = (0..cfg.runs)
        .into_par_iter()
        .map(|i| run(&config, i))
        .collect::<dealer_core::Result<_>>()?;
    let mut merged = runs[0].clone();
    for r in &runs[1..] {
        merged.merge(r)?;
    }
    Ok(Ensemble {
        config,
        runs,
        merged,
    })
}

/// L1 distances and tail masses of a sampled density.
fn density_metrics(
    density: &SampledDensity<f64>,
    cfg: &Config,
    reference: Option<&SampledDensity<f64>>,
) -> CliResult<Map<String, Value>> {
    let tent = SampledDensity::from_profile(&AnalyticProfile::tent(cfg.spread)?, density.grid())?;
    let mut m = Map::new();
    m.insert("l1_tent".into(), json!(l1_distance(density, &tent)?));
    m.insert(
        "l1_reference".into(),
        match reference {
            Some(r) => json!(l1_distance(density, r)?),
            None => Value::Null,
        },
    );
    m.insert(
        "tail_mass_beyond_half_spread".into(),
        json!(two_sided_tail_mass(density, cfg.spread / 2.0)?),
    );
    m.insert(
        "tail_mass_window".into(),
        json!(two_sided_window_mass(
            density,
            0.9 * cfg.spread,
            1.1 * cfg.spread
        )?),
    );
    Ok(m)
}

fn params_json(cfg: &Config) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("N".into(), json!(cfg.n));
    m.insert("L".into(), json!(cfg.spread));
    m.insert("sigma2".into(), json!(cfg.sigma2));
    m.insert("u2".into(), json!(cfg.u2));
    m.insert("dt".into(), json!(cfg.dt()));
    m
}

fn optional(v: dealer_core::Result<f64>) -> Value {
    v.map(|x| json!(x)).unwrap_or(Value::Null)
}

pub fn cmd_simulate(cfg: &Config, out_dir: &Path) -> CliResult<Report> {
    let mut out = Output::create(out_dir)?;
    let ens = simulate_ensemble(cfg, true, true)?;
    let reference = reference_profile(cfg)?
        .map(|p| SampledDensity::from_profile(&p, &ens.config.grid))
        .transpose()?;

    let mut records = Vec::new();
    let mut all_times = Vec::new();
    for r in &ens.runs {
        for (id, trace) in &r.runs {
            let times: Vec<f64> = trace.events.iter().map(|e| e.time).collect();
            let mut rec = params_json(cfg);
            rec.insert("run".into(), json!(id));
            rec.insert("n_events".into(), json!(trace.n_events));
            rec.insert("mean_interval".into(), optional(r.mean_interval()));
            let slope = if trace.com_series.len() >= 10 * MSD_MAX_LAG {
                optional(msd_slope(&trace.com_series, trace.com_dt, MSD_MAX_LAG))
            } else {
                Value::Null
            };
            rec.insert("com_msd_slope".into(), slope);
            rec.extend(density_metrics(
                &r.pdf_r.sampled()?,
                cfg,
                reference.as_ref(),
            )?);
            records.push(Value::Object(rec));
            all_times.push(times);
        }
    }
    let pooled = ens.merged.pdf_r.sampled()?;
    let mut rec = params_json(cfg);
    rec.insert("run".into(), json!("ensemble"));
    rec.insert("n_events".into(), json!(ens.merged.n_events()));
    rec.insert("mean_interval".into(), optional(ens.merged.mean_interval()));
    rec.insert("taker_counts".into(), json!(ens.merged.taker_counts()));
    rec.extend(density_metrics(&pooled, cfg, reference.as_ref())?);
    records.push(Value::Object(rec));

    out.write("pdf_r.csv", |w| ens.merged.pdf_r.write_csv(w))?;
    let mut report = Report::default();
    match pooled_interval_stats(&all_times) {
        Ok(st) => {
            out.write("intervals_cdf.csv", |w| st.write_cdf_csv(w))?;
            report.note(format!(
                "{} events, mean interval {:.6} (two-trader prediction {:.6})",
                ens.merged.n_events(),
                st.mean,
                mean_transaction_interval(cfg.spread, cfg.sigma2)?
            ));
        }
        Err(_) => report.note("fewer than two events; no interval statistics"),
    }
    out.write_jsonl("summary.jsonl", &records)?;
    out.finish(Subcommand::Simulate, cfg, Map::new())?;
    Ok(report)
}

/// Lattice with spacing `dr`, so that sites fall on the grid nodes.
fn matched_lattice(cfg: &Config) -> CliResult<LatticeParams<f64>> {
    let ratio = cfg.spread / (2.0 * cfg.dr);
    let n_bar = ratio.round();
    if n_bar < 2.0 || (ratio - n_bar).abs() > 1e-9 * ratio {
        return Err(CliError::Usage(format!(
            "lattice needs L/(2·dr) to be an integer ≥ 2, got {ratio}"
        )));
    }
    Ok(LatticeParams::diffusive(
        cfg.sigma2 / 2.0,
        cfg.spread,
        n_bar as usize,
    )?)
}

/// Lattice steady density as bin averages of its site values on `grid`.
fn lattice_bins(lattice: &LatticeParams<f64>, grid: &GridSpec<f64>) -> CliResult<Vec<f64>> {
    let steady = lattice_steady_state(lattice)?;
    let mut nodes = vec![0.0; grid.n_nodes()];
    for (i, d) in steady.density(lattice).into_iter().enumerate() {
        let r = lattice.position(lattice.site(i));
        nodes[grid.require_node(r, "lattice site")?] = d;
    }
    Ok(MlField::new(*grid, nodes, 0.0)?.to_bins())
}

pub fn cmd_lattice(cfg: &Config, out_dir: &Path) -> CliResult<Report> {
    require_two_traders(cfg, Subcommand::Lattice)?;
    if cfg.u2 != 0.0 {
        return Err(CliError::Usage(
            "the lattice model has no potential; set u2=0".into(),
        ));
    }
    let mut out = Output::create(out_dir)?;
    let lattice = matched_lattice(cfg)?;
    let steady = lattice_steady_state(&lattice)?;
    out.write("lattice_steady.csv", |w| steady.write_csv(&lattice, w))?;
    let table = diffusive_limit_check(cfg.sigma2 / 2.0, cfg.spread, &LATTICE_LEVELS)?;
    out.write("diffusive_limit.csv", |w| {
        let rows = table.rows.iter().map(|r| {
            [
                Cell::from(r.n_bar),
                Cell::from(r.l),
                Cell::from(r.lambda),
                Cell::from(r.site_error),
                Cell::from(r.histogram_error),
                Cell::from(r.scaled_error()),
            ]
        });
        write_table(
            w,
            &[
                "n_bar",
                "l",
                "lambda",
                "site_error",
                "histogram_error",
                "scaled_error",
            ],
            rows,
        )
    })?;
    let record = json!({
        "n_bar": lattice.n_bar(),
        "l": lattice.l(),
        "lambda": lattice.lambda(),
        "diffusive_limit_monotone": table.is_monotone(),
        "max_scaled_error": table.max_scaled_error(),
        "max_site_error": table.max_site_error(),
    });
    out.write_jsonl("summary.jsonl", &[record])?;
    out.finish(Subcommand::Lattice, cfg, Map::new())?;
    let mut report = Report::default();
    report.note(format!(
        "n̄ = {}, diffusive-limit errors monotone: {}, max e·n̄ = {:.3e}",
        lattice.n_bar(),
        table.is_monotone(),
        table.max_scaled_error()
    ));
    Ok(report)
}

pub fn cmd_ml_solve(cfg: &Config, out_dir: &Path) -> CliResult<Report> {
    require_two_traders(cfg, Subcommand::MlSolve)?;
    let mut out = Output::create(out_dir)?;
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let (field, diag) = ml_steady(&params, &grid, SteadyOptions::default())?;
    let profile = AnalyticProfile::two_body(cfg.spread, cfg.sigma2, cfg.u2)?;
    let bins = SampledDensity::new(grid, field.to_bins())?;
    let exact = SampledDensity::from_profile(&profile, &grid)?;
    let residuals = boundary_condition_check(&field, &params)?;
    out.write("ml_field.csv", |w| write_field_csv(&field, &diag, w))?;
    out.write("ml_flux.csv", |w| diag.write_summary(w))?;
    let free_rate = if cfg.u2 == 0.0 {
        json!(1.0 / mean_transaction_interval(cfg.spread, cfg.sigma2)?)
    } else {
        Value::Null
    };
    let record = json!({
        "implied_rate": diag.implied_rate,
        "predicted_rate": free_rate,
        "mean_interval_from_flux": 1.0 / diag.implied_rate,
        "mass": field.mass(),
        "l1_analytic": l1_distance(&bins, &exact)?,
        "cell_average_error": cell_average_error(&field, &profile)?,
        "kink_residual": residuals.kink,
        "outer_residual": residuals.outer,
    });
    out.write_jsonl("summary.jsonl", &[record])?;
    out.finish(Subcommand::MlSolve, cfg, Map::new())?;
    let mut report = Report::default();
    report.note(format!(
        "implied transaction rate {:.6}, mean interval {:.6}",
        diag.implied_rate,
        1.0 / diag.implied_rate
    ));
    Ok(report)
}

pub fn cmd_analytic(cfg: &Config, out_dir: &Path) -> CliResult<Report> {
    let mut out = Output::create(out_dir)?;
    let grid = cfg.grid()?;
    let mut columns = vec![
        ("tent", AnalyticProfile::tent(cfg.spread)?),
        ("order_book", AnalyticProfile::order_book(cfg.spread)?),
        ("nlo", AnalyticProfile::mean_field_nlo(cfg.spread, cfg.n)?),
    ];
    let mut record = params_json(cfg);
    record.insert(
        "mean_transaction_interval".into(),
        json!(mean_transaction_interval(cfg.spread, cfg.sigma2)?),
    );
    record.insert(
        "com_diffusion_constant_two_traders".into(),
        json!(com_diffusion_constant_n2(cfg.sigma2)?),
    );
    record.insert(
        "boundary_layer_width".into(),
        json!(boundary_layer_width(cfg.spread, cfg.n)),
    );
    if cfg.u2 > 0.0 {
        let h = AnalyticProfile::harmonic(cfg.spread, cfg.sigma2 / 2.0, cfg.u2)?;
        if let AnalyticProfile::HarmonicPotential(p) = &h {
            let closed = p.closed_form_normalization()?;
            let quad = p.quadrature_normalization()?;
            record.insert("harmonic_normalization".into(), json!(closed));
            record.insert("harmonic_normalization_quadrature".into(), json!(quad));
            record.insert(
                "harmonic_normalization_rel_diff".into(),
                json!(((closed - quad) / quad).abs()),
            );
        }
        columns.push(("harmonic", h));
    }
    let values: Vec<Vec<f64>> = columns
        .iter()
        .map(|(_, p)| p.on_grid(&grid))
        .collect::<dealer_core::Result<_>>()?;
    let mut header = vec!["r"];
    header.extend(columns.iter().map(|(name, _)| *name));
    out.write("analytic.csv", |w| {
        let rows = (0..grid.n_bins()).map(|k| {
            let mut row = vec![Cell::from(grid.center(k))];
            row.extend(values.iter().map(|v| Cell::from(v[k])));
            row
        });
        write_table(w, &header, rows)
    })?;
    out.write_jsonl("summary.jsonl", &[Value::Object(record)])?;
    out.finish(Subcommand::Analytic, cfg, Map::new())?;
    let mut report = Report::default();
    report.note(format!(
        "profiles {} on {} bins",
        header[1..].join(", "),
        grid.n_bins()
    ));
    Ok(report)
}

pub fn cmd_compare(cfg: &Config, out_dir: &Path) -> CliResult<Report> {
    require_two_traders(cfg, Subcommand::Compare)?;
    // Validate the simulation set-up before any expensive work.
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    RunConfig::new(params, cfg.schedule()?, grid)?;
    let lattice = if cfg.u2 == 0.0 {
        Some(matched_lattice(cfg)?)
    } else {
        None
    };
    let mut out = Output::create(out_dir)?;

    let ens = simulate_ensemble(cfg, false, false)?;
    let (field, _) = ml_steady(&params, &grid, SteadyOptions::default())?;
    let profile = AnalyticProfile::two_body(cfg.spread, cfg.sigma2, cfg.u2)?;

    let mut methods: Vec<(&'static str, SampledDensity<f64>)> = vec![
        ("simulation", ens.merged.pdf_r.sampled()?),
        ("ml", SampledDensity::new(grid, field.to_bins())?),
    ];
    if let Some(lat) = &lattice {
        methods.push((
            "lattice",
            SampledDensity::new(grid, lattice_bins(lat, &grid)?)?,
        ));
    }
    methods.push(("analytic", SampledDensity::from_profile(&profile, &grid)?));

    let mut header = vec!["r"];
    header.extend(methods.iter().map(|(name, _)| *name));
    out.write("compare.csv", |w| {
        let rows = (0..grid.n_bins()).map(|k| {
            let mut row = vec![Cell::from(grid.center(k))];
            row.extend(methods.iter().map(|(_, d)| Cell::from(d.values()[k])));
            row
        });
        write_table(w, &header, rows)
    })?;

    let mut pairs = Vec::new();
    for i in 0..methods.len() {
        for j in i + 1..methods.len() {
            let d = l1_distance(&methods[i].1, &methods[j].1)?;
            pairs.push((methods[i].0, methods[j].0, d));
        }
    }
    out.write("compare_l1.csv", |w| {
        let rows = pairs.iter().map(|&(a, b, d)| {
            [
                Cell::Text(a),
                Cell::Text(b),
                Cell::from(d),
                Cell::from(COMPARE_L1_TOLERANCE),
                Cell::Int((d < COMPARE_L1_TOLERANCE) as i64),
            ]
        });
        write_table(
            w,
            &["method_a", "method_b", "l1", "tolerance", "pass"],
            rows,
        )
    })?;
    let records: Vec<Value> = pairs
        .iter()
        .map(|&(a, b, d)| {
            json!({ "method_a": a, "method_b": b, "l1": d, "tolerance": COMPARE_L1_TOLERANCE,
                    "pass": d < COMPARE_L1_TOLERANCE })
        })
        .collect();
    out.write_jsonl("summary.jsonl", &records)?;
    out.finish(Subcommand::Compare, cfg, Map::new())?;

    let mut report = Report::default();
    for &(a, b, d) in &pairs {
        report.note(format!("L1({a}, {b}) = {d:.5}"));
    }
    let failed: Vec<String> = pairs
        .iter()
        .filter(|p| p.2.partial_cmp(&COMPARE_L1_TOLERANCE) != Some(std::cmp::Ordering::Less))
        .map(|(a, b, d)| format!("L1({a}, {b}) = {d:.5}"))
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Tolerance(format!(
            "exceeds tolerance {COMPARE_L1_TOLERANCE}: {}",
            failed.join(", ")
        )));
    }
    Ok(report)
}

/// One row of the `sweep-n` table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub dt: f64,
    pub n_events: u64,
    pub tail_beyond_half_spread: f64,
    pub tail_window: f64,
    pub l1_tent: f64,
    pub l1_nlo: f64,
    /// Restricted to the boundary layers `||r| − L/2| < 3ε`.
    pub l1_tent_layer: f64,
    pub l1_nlo_layer: f64,
}

/// Index of the largest value; the first one on ties.
fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

pub fn sweep_row(cfg: &Config, density: &SampledDensity<f64>) -> CliResult<SweepRow> {
    let grid = density.grid();
    let tent = SampledDensity::from_profile(&AnalyticProfile::tent(cfg.spread)?, grid)?;
    let nlo =
        SampledDensity::from_profile(&AnalyticProfile::mean_field_nlo(cfg.spread, cfg.n)?, grid)?;
    let half = cfg.spread / 2.0;
    let eps = boundary_layer_width(cfg.spread, cfg.n);
    let in_layer = |r: f64| (r.abs() - half).abs() < 3.0 * eps;
    Ok(SweepRow {
        n: cfg.n,
        dt: cfg.dt(),
        n_events: 0,
        tail_beyond_half_spread: two_sided_tail_mass(density, half)?,
        tail_window: two_sided_window_mass(density, 0.9 * cfg.spread, 1.1 * cfg.spread)?,
        l1_tent: l1_distance(density, &tent)?,
        l1_nlo: l1_distance(density, &nlo)?,
        l1_tent_layer: l1_distance_where(density, &tent, in_layer)?,
        l1_nlo_layer: l1_distance_where(density, &nlo, in_layer)?,
    })
}

pub fn cmd_sweep_n(cfg: &Config, n_list: &[usize], out_dir: &Path) -> CliResult<Report> {
    if n_list.is_empty() {
        return Err(CliError::Usage("--n-list must name at least one N".into()));
    }
    for &n in n_list {
        let c = cfg.with_n(n);
        RunConfig::new(c.params()?, c.schedule()?, c.grid()?)?;
    }
    let mut out = Output::create(out_dir)?;
    let mut rows = Vec::new();
    for &n in n_list {
        let c = cfg.with_n(n);
        let ens = simulate_ensemble(&c, false, false)?;
        let density = ens.merged.pdf_r.sampled()?;
        let mut row = sweep_row(&c, &density)?;
        row.n_events = ens.merged.n_events();
        let tent = AnalyticProfile::tent(c.spread)?.on_grid(density.grid())?;
        let nlo = AnalyticProfile::mean_field_nlo(c.spread, n)?.on_grid(density.grid())?;
        out.write(&format!("pdf_N{n}.csv"), |w| {
            let g = density.grid();
            let rows = (0..g.n_bins()).map(|k| {
                [
                    Cell::from(g.center(k)),
                    Cell::from(density.values()[k]),
                    Cell::from(tent[k]),
                    Cell::from(nlo[k]),
                ]
            });
            write_table(w, &["r", "phi_hat", "tent", "nlo"], rows)
        })?;
        rows.push(row);
    }
    let best_tail = argmax(rows.iter().map(|r| r.tail_beyond_half_spread));
    let best_window = argmax(rows.iter().map(|r| r.tail_window));
    out.write("sweep.csv", |w| {
        let table = rows.iter().enumerate().map(|(i, r)| {
            [
                Cell::from(r.n),
                Cell::from(r.dt),
                Cell::from(r.n_events),
                Cell::from(r.tail_beyond_half_spread),
                Cell::from(r.tail_window),
                Cell::from(r.l1_tent),
                Cell::from(r.l1_nlo),
                Cell::from(r.l1_tent_layer),
                Cell::from(r.l1_nlo_layer),
                Cell::Int((best_tail == Some(i)) as i64),
                Cell::Int((best_window == Some(i)) as i64),
            ]
        });
        write_table(
            w,
            &[
                "N",
                "dt",
                "n_events",
                "tail_beyond_half_spread",
                "tail_window",
                "l1_tent",
                "l1_nlo",
                "l1_tent_layer",
                "l1_nlo_layer",
                "argmax_tail",
                "argmax_window",
            ],
            table,
        )
    })?;
    let records: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "N": r.n, "dt": r.dt, "n_events": r.n_events,
                "tail_beyond_half_spread": r.tail_beyond_half_spread,
                "tail_window": r.tail_window,
                "l1_tent": r.l1_tent, "l1_nlo": r.l1_nlo,
                "l1_tent_layer": r.l1_tent_layer, "l1_nlo_layer": r.l1_nlo_layer,
            })
        })
        .collect();
    out.write_jsonl("summary.jsonl", &records)?;
    let mut extra = Map::new();
    extra.insert("n_list".into(), json!(n_list));
    extra.insert(
        "dt_per_n".into(),
        json!(rows.iter().map(|r| r.dt).collect::<Vec<_>>()),
    );
    // An unset dt follows each N, so it is echoed unset.
    let echoed = serde_json::to_value(cfg).expect("config serializes");
    out.finish_with(Subcommand::SweepN, cfg, echoed, extra)?;

    let mut report = Report::default();
    for r in &rows {
        report.note(format!(
            "N = {:>4}: tail beyond L/2 {:.5}, window {:.3e}, L1 tent {:.4}, L1 NLO {:.4}",
            r.n, r.tail_beyond_half_spread, r.tail_window, r.l1_tent, r.l1_nlo
        ));
    }
    if let Some(i) = best_tail {
        report.note(format!("widest tail at N = {}", rows[i].n));
    }
    Ok(report)
}
