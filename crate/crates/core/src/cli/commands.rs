use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{load_input, sha256_hex, write_atomic, Outcome, Provenance, ResultRecord, RunConfig};
use crate::error::{Result, ShapeError};
use crate::functionals::{
    evaluate_all_with, necklace_bounds, necklace_flip_point, FlipPoint, FunctionalReport,
    NecklaceBounds, NecklaceOptions, PenaltyParams, penalty_eta0,
};
use crate::geometry::io::{read_document, write_domain, write_star, Document};
use crate::geometry::{GridSpec, StarBoundary};
use crate::shapeopt::{
    descend, seeded_start, write_trace_csv, DescentConfig, DescentStatus, Functional, VolumeMode,
};
use crate::surgery::{
    c4_sensitivity, surgery_sweep_along, write_sweep_csv, Direction, PassLog, Sensitivity, SurgeryParams,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalArgs {
    pub alpha: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub container_radius: f64,
    pub eigen: bool,
}

impl Default for EvalArgs {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            epsilon: 0.0,
            eta: 0.5,
            container_radius: f64::INFINITY,
            eigen: true,
        }
    }
}

/// Evaluates every functional on one domain or star document.
pub fn cmd_eval(path: &Path, args: &EvalArgs, cfg: &RunConfig) -> Result<(ResultRecord<FunctionalReport>, Outcome)> {
    cfg.validate()?;
    let params = PenaltyParams::new(args.eta, args.epsilon, args.alpha, args.container_radius)?;
    let input = load_input(path, cfg.cells_or(128))?;
    if input.domain.is_empty() {
        return Err(ShapeError::Domain(format!("{} holds an empty domain", path.display())));
    }
    let report = evaluate_all_with(&input.domain, &params, args.eigen, &cfg.solver())?;
    let record = ResultRecord {
        experiment: "eval".into(),
        input_hash: input.hash,
        payload: report,
        provenance: Provenance::new(input.domain.spec(), cfg, Some(args.alpha)),
    };
    let json = cfg.output("eval.json")?;
    record.write(&json)?;
    let mut files = vec![json];
    if cfg.format == super::OutputFormat::Csv {
        let r = &record.payload;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["measure", "energy", "lambda1", "riesz", "f", "f_tilde", "g", "asymmetry"])?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.12e}"));
        w.write_record([
            format!("{:.12e}", r.measure),
            format!("{:.12e}", r.energy),
            opt(r.lambda1),
            format!("{:.12e}", r.riesz),
            format!("{:.12e}", r.f),
            opt(r.f_tilde),
            format!("{:.12e}", r.g),
            format!("{:.6e}", r.asymmetry),
        ])?;
        let bytes = w.into_inner().map_err(|e| ShapeError::Io(std::io::Error::other(e.to_string())))?;
        let p = cfg.output("eval.csv")?;
        write_atomic(&p, &bytes)?;
        files.push(p);
    }
    let summary = format!(
        "E = {:.8}, V = {:.8}, F = {:.8}, A = {:.4}",
        record.payload.energy, record.payload.riesz, record.payload.f, record.payload.asymmetry
    );
    Ok((
        record,
        Outcome {
            checks_ok: true,
            files,
            summary,
        },
    ))
}

/// Starting boundary for a descent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StartShape {
    File(std::path::PathBuf),
    /// Unit-area circle with one cosine (`a_k`) or sine (`b_k`) coefficient set.
    Mode { cosine: bool, mode: usize, value: f64 },
    /// Mode-2 amplitude at a seeded random phase plus small modes 3..K.
    Seeded { amplitude: f64 },
}

/// Parses `a2=0.15` or `b3=-0.05`.
pub fn parse_mode_spec(s: &str) -> Result<StartShape> {
    let bad = || ShapeError::parse("mode", format!("expected aK=value or bK=value, got `{s}`"));
    let (lhs, rhs) = s.split_once('=').ok_or_else(bad)?;
    let cosine = match lhs.chars().next() {
        Some('a') => true,
        Some('b') => false,
        _ => return Err(bad()),
    };
    let mode: usize = lhs[1..].parse().map_err(|_| bad())?;
    let value: f64 = rhs.trim().parse().map_err(|_| bad())?;
    if mode == 0 || !value.is_finite() {
        return Err(bad());
    }
    Ok(StartShape::Mode { cosine, mode, value })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeArgs {
    pub start: StartShape,
    pub functional: Functional,
    pub volume: VolumeMode,
    pub epsilon: f64,
    pub alpha: f64,
    pub eta: f64,
    pub max_mode: usize,
}

impl Default for OptimizeArgs {
    fn default() -> Self {
        Self {
            start: StartShape::Mode {
                cosine: true,
                mode: 2,
                value: 0.15,
            },
            functional: Functional::F,
            volume: VolumeMode::Projection,
            epsilon: 1e-3,
            alpha: 1.5,
            eta: crate::functionals::penalty_eta0(2),
            max_mode: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSummary {
    pub status: DescentStatus,
    pub iterations: usize,
    pub final_objective: f64,
    pub final_area: f64,
    pub final_asymmetry: f64,
    /// Optimality residual `std/|Λ|` and `Λ` on the final shape.
    pub residual_relative_std: Option<f64>,
    pub lambda: Option<f64>,
    /// Scale-free `E|Ω|^{−2}` of the final shape and whether it is at most
    /// `E(B)/4` for the unit-measure ball.
    pub normalized_energy: f64,
    pub quarter_ball_bound: bool,
    pub final_boundary: StarBoundary,
}

fn start_boundary(start: &StartShape, max_mode: usize, seed: u64) -> Result<(StarBoundary, String)> {
    match start {
        StartShape::File(p) => match read_document(p)? {
            Document::Star(s) => Ok((s, sha256_hex(&std::fs::read(p)?))),
            Document::Domain(_) => Err(ShapeError::parse("format", "descent needs a star document")),
        },
        StartShape::Mode { cosine, mode, value } => {
            let mut b = StarBoundary::circle(1.0, [0.0, 0.0], max_mode.max(*mode));
            if *cosine {
                b.fourier_cos[*mode] = *value;
            } else {
                b.fourier_sin[*mode] = *value;
            }
            b.validate()?;
            let tag = format!("{}{}={}", if *cosine { 'a' } else { 'b' }, mode, value);
            Ok((b.with_area(1.0), sha256_hex(tag.as_bytes())))
        }
        StartShape::Seeded { amplitude } => {
            let b = seeded_start(seed, *amplitude, max_mode);
            Ok((b, sha256_hex(format!("seeded:{seed}:{amplitude}").as_bytes())))
        }
    }
}

fn descent_config(
    functional: Functional,
    volume: VolumeMode,
    params: PenaltyParams,
    max_mode: usize,
    cfg: &RunConfig,
) -> Result<DescentConfig> {
    let mut dc = DescentConfig::new(params, cfg.cells_or(128))?;
    dc.functional = functional;
    dc.volume = volume;
    dc.max_mode = max_mode;
    dc.solver = cfg.solver();
    if let Some(n) = cfg.max_iter {
        dc.max_iter = n;
    }
    dc.validate()?;
    Ok(dc)
}

/// Shape descent from one start; writes the trace and the final star.
pub fn cmd_optimize(args: &OptimizeArgs, cfg: &RunConfig) -> Result<(ResultRecord<OptimizeSummary>, Outcome)> {
    cfg.validate()?;
    let params = PenaltyParams::new(args.eta, args.epsilon, args.alpha, f64::INFINITY)?;
    let dc = descent_config(args.functional, args.volume, params, args.max_mode, cfg)?;
    let (start, hash) = start_boundary(&args.start, args.max_mode, cfg.seed)?;
    let res = descend(&start, &dc)?;
    let last = res.trace.last().expect("descent records the start");
    let summary = OptimizeSummary {
        status: res.status.clone(),
        iterations: last.iteration,
        final_objective: last.objective,
        final_area: res.final_boundary.area(),
        final_asymmetry: res.final_asymmetry,
        residual_relative_std: res.optimality.as_ref().map(|o| o.relative_std),
        lambda: res.optimality.as_ref().map(|o| o.lambda),
        normalized_energy: last.energy / (last.measure * last.measure),
        quarter_ball_bound: last.energy / (last.measure * last.measure) <= -penalty_eta0(2),
        final_boundary: res.final_boundary.clone(),
    };
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, &res.trace)?;
    let trace = cfg.output("trace.csv")?;
    write_atomic(&trace, &buf)?;
    let star = cfg.output("final_star.json")?;
    write_star(&star, &res.final_boundary)?;
    let record = ResultRecord {
        experiment: "optimize".into(),
        input_hash: hash,
        payload: summary,
        provenance: Provenance::new(&dc.grid, cfg, Some(args.alpha)),
    };
    let json = cfg.output("optimize.json")?;
    record.write(&json)?;
    let text = format!(
        "{:?} after {} iterations, asymmetry {:.4}",
        record.payload.status, record.payload.iterations, record.payload.final_asymmetry
    );
    Ok((
        record,
        Outcome {
            checks_ok: true,
            files: vec![trace, star, json],
            summary: text,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepArgs {
    pub epsilons: Vec<f64>,
    pub runs: usize,
    pub amplitude: f64,
    pub alpha: f64,
    pub delta: f64,
    /// Final asymmetry below which a run counts as round.
    pub round_below: f64,
    pub max_mode: usize,
}

impl Default for SweepArgs {
    fn default() -> Self {
        Self {
            epsilons: vec![1e-3, 1e-2, 0.05, 0.2, 1.0],
            runs: 10,
            amplitude: 0.15,
            alpha: 1.5,
            delta: 0.4,
            round_below: 0.03,
            max_mode: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub run: usize,
    pub seed: u64,
    pub status: String,
    /// Absent when the shape left the box.
    pub final_asymmetry: Option<f64>,
    pub round: bool,
    pub escaped: bool,
    pub necklace_wins: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    /// `(ε, fraction of round runs)`.
    pub round_fraction: Vec<(f64, f64)>,
    /// Largest ε of the leading run of grid values with at least 90% round runs.
    pub threshold_low: Option<f64>,
    /// The next grid value.
    pub threshold_high: Option<f64>,
    pub flip: Option<FlipPoint>,
}

fn escaped(e: &ShapeError) -> bool {
    match e {
        ShapeError::Bounds(_) | ShapeError::Precondition(_) => true,
        ShapeError::Coefficient { source, .. } => escaped(source),
        _ => false,
    }
}

/// Descents from seeded starts across an ε grid, with the necklace comparison
/// at each ε and the measured threshold bracket.
pub fn cmd_sweep(args: &SweepArgs, cfg: &RunConfig) -> Result<(ResultRecord<SweepSummary>, Outcome)> {
    cfg.validate()?;
    if args.epsilons.is_empty() {
        return Err(ShapeError::Domain("the epsilon grid is empty".into()));
    }
    if args.runs == 0 {
        return Err(ShapeError::Domain("need at least one run per epsilon".into()));
    }
    let mut eps = args.epsilons.clone();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let mut nopts = NecklaceOptions::for_dim(2);
    nopts.solver = cfg.solver();
    let base = necklace_bounds(args.delta, 0.0, 2, args.alpha, &nopts)?;
    let flip = match necklace_flip_point(args.delta, 2, args.alpha, &nopts) {
        Ok(f) => Some(f),
        Err(e) => {
            log::warn!("no necklace flip point: {e}");
            None
        }
    };
    let mut rows = Vec::new();
    let mut spec: Option<GridSpec> = None;
    for &e in &eps {
        let params = PenaltyParams::unconstrained(e, args.alpha)?;
        let dc = descent_config(Functional::F, VolumeMode::Projection, params, args.max_mode, cfg)?;
        spec.get_or_insert(dc.grid.clone());
        let wins = base.at_epsilon(e).necklace_wins;
        for run in 0..args.runs {
            let seed = cfg.seed.wrapping_add(run as u64);
            let start = seeded_start(seed, args.amplitude, args.max_mode);
            let row = match descend(&start, &dc) {
                Ok(r) => SweepRow {
                    epsilon: e,
                    run,
                    seed,
                    status: format!("{:?}", r.status),
                    final_asymmetry: Some(r.final_asymmetry),
                    round: r.final_asymmetry < args.round_below,
                    escaped: false,
                    necklace_wins: wins,
                },
                Err(err) if escaped(&err) => {
                    log::info!("eps = {e}, run {run}: shape escaped ({err})");
                    SweepRow {
                        epsilon: e,
                        run,
                        seed,
                        status: "Escaped".into(),
                        final_asymmetry: None,
                        round: false,
                        escaped: true,
                        necklace_wins: wins,
                    }
                }
                Err(err) => return Err(err),
            };
            log::info!("eps = {e}, run {run}: {} A = {:?}", row.status, row.final_asymmetry);
            rows.push(row);
        }
    }
    let round_fraction: Vec<(f64, f64)> = eps
        .iter()
        .map(|&e| {
            let sel: Vec<_> = rows.iter().filter(|r| r.epsilon == e).collect();
            (e, sel.iter().filter(|r| r.round).count() as f64 / sel.len() as f64)
        })
        .collect();
    let lead = round_fraction.iter().take_while(|(_, f)| *f >= 0.9).count();
    let threshold_low = (lead > 0).then(|| round_fraction[lead - 1].0);
    let threshold_high = round_fraction.get(lead).map(|(e, _)| *e);
    let summary = SweepSummary {
        rows,
        round_fraction,
        threshold_low,
        threshold_high,
        flip,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epsilon", "run", "seed", "status", "final_asymmetry", "round", "escaped", "necklace_wins"])?;
    for r in &summary.rows {
        w.write_record([
            format!("{:e}", r.epsilon),
            r.run.to_string(),
            r.seed.to_string(),
            r.status.clone(),
            r.final_asymmetry.map_or(String::new(), |a| format!("{a:.6e}")),
            r.round.to_string(),
            r.escaped.to_string(),
            r.necklace_wins.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| ShapeError::Io(std::io::Error::other(e.to_string())))?;
    let csv_path = cfg.output("sweep.csv")?;
    write_atomic(&csv_path, &bytes)?;
    let record = ResultRecord {
        experiment: "sweep".into(),
        input_hash: sha256_hex(serde_json::to_string(args).expect("args serialize").as_bytes()),
        payload: summary,
        provenance: Provenance::new(spec.as_ref().expect("non-empty grid"), cfg, Some(args.alpha)),
    };
    let json = cfg.output("sweep.json")?;
    record.write(&json)?;
    let text = format!(
        "threshold bracket ({:?}, {:?}), necklace flip at {:?}",
        record.payload.threshold_low,
        record.payload.threshold_high,
        record.payload.flip.as_ref().map(|f| f.epsilon_numeric)
    );
    Ok((
        record,
        Outcome {
            checks_ok: true,
            files: vec![csv_path, json],
            summary: text,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NecklaceArgs {
    pub delta: f64,
    /// Single ε; ignored when `scan` is set.
    pub epsilon: f64,
    pub scan: bool,
    pub dim: usize,
    pub alpha: f64,
}

impl Default for NecklaceArgs {
    fn default() -> Self {
        Self {
            delta: 0.4,
            epsilon: 0.0,
            scan: false,
            dim: 2,
            alpha: 1.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NecklaceOutput {
    Bounds(NecklaceBounds),
    Flip(FlipPoint),
}

pub fn cmd_necklace(args: &NecklaceArgs, cfg: &RunConfig) -> Result<(ResultRecord<NecklaceOutput>, Outcome)> {
    cfg.validate()?;
    let mut opts = NecklaceOptions::for_dim(args.dim);
    opts.cells_per_axis = cfg.cells_or(opts.cells_per_axis);
    opts.solver = cfg.solver();
    let payload = if args.scan {
        NecklaceOutput::Flip(necklace_flip_point(args.delta, args.dim, args.alpha, &opts)?)
    } else {
        NecklaceOutput::Bounds(necklace_bounds(args.delta, args.epsilon, args.dim, args.alpha, &opts)?)
    };
    let text = match &payload {
        NecklaceOutput::Flip(f) => format!(
            "flip at eps = {:.6e} (analytic {:.6e})",
            f.epsilon_numeric, f.epsilon_analytic
        ),
        NecklaceOutput::Bounds(b) => format!(
            "k = {}: F(ball) = {:.6e}, F(necklace) = {:.6e}, necklace wins: {}",
            b.ball_count, b.lower_ball_side, b.upper_necklace_side, b.necklace_wins
        ),
    };
    let spec = GridSpec::centered(args.dim, opts.cells_per_axis, opts.side)?;
    let record = ResultRecord {
        experiment: "necklace".into(),
        input_hash: sha256_hex(serde_json::to_string(args).expect("args serialize").as_bytes()),
        payload,
        provenance: Provenance::new(&spec, cfg, Some(args.alpha)),
    };
    let json = cfg.output("necklace.json")?;
    record.write(&json)?;
    Ok((
        record,
        Outcome {
            checks_ok: true,
            files: vec![json],
            summary: text,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurgeryArgs {
    pub c4: f64,
    /// Defaults to `−e₁, +e₁, …, +e_N`.
    pub directions: Option<Vec<Direction>>,
    pub epsilon: f64,
    pub alpha: f64,
    /// Also sweep at `C₄ ∈ {5, 10, 20}`.
    pub sensitivity: bool,
}

impl Default for SurgeryArgs {
    fn default() -> Self {
        Self {
            c4: crate::surgery::DEFAULT_C4,
            directions: None,
            epsilon: 0.01,
            alpha: 1.5,
            sensitivity: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurgerySummary {
    pub passes: Vec<PassLog>,
    pub initial_diameter: f64,
    pub final_diameter: f64,
    pub initial_f_tilde: f64,
    pub final_f_tilde: f64,
    pub monotone: bool,
    pub variational_ok: bool,
    pub sensitivity: Vec<Sensitivity>,
}

pub fn cmd_surgery(path: &Path, args: &SurgeryArgs, cfg: &RunConfig) -> Result<(ResultRecord<SurgerySummary>, Outcome)> {
    cfg.validate()?;
    let input = load_input(path, cfg.cells_or(256))?;
    let dom = input.domain;
    let dirs = args
        .directions
        .clone()
        .unwrap_or_else(|| Direction::sweep_order(dom.dim()));
    if let Some(d) = dirs.iter().find(|d| d.axis >= dom.dim()) {
        return Err(ShapeError::Domain(format!("direction {d} in dimension {}", dom.dim())));
    }
    let params = SurgeryParams {
        epsilon: args.epsilon,
        alpha: args.alpha,
        c4: args.c4,
        solver: cfg.solver(),
    };
    let sweep = surgery_sweep_along(&dom, &params, &dirs)?;
    let sensitivity = if args.sensitivity {
        c4_sensitivity(&dom, &params, &[5.0, 10.0, 20.0])?
    } else {
        Vec::new()
    };
    let variational_ok = sweep.passes.iter().all(|p| p.variational_ok);
    let summary = SurgerySummary {
        passes: sweep.passes.clone(),
        initial_diameter: sweep.initial_diameter,
        final_diameter: sweep.final_diameter,
        initial_f_tilde: sweep.initial_f_tilde,
        final_f_tilde: sweep.final_f_tilde,
        monotone: sweep.monotone,
        variational_ok,
        sensitivity,
    };
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &sweep.passes)?;
    let csv_path = cfg.output("surgery.csv")?;
    write_atomic(&csv_path, &buf)?;
    let dom_path = cfg.output("surgery_result.dom")?;
    write_domain(&dom_path, &sweep.domain, &BTreeMap::new())?;
    let record = ResultRecord {
        experiment: "surgery".into(),
        input_hash: input.hash,
        payload: summary,
        provenance: Provenance::new(dom.spec(), cfg, Some(args.alpha)),
    };
    let json = cfg.output("surgery.json")?;
    record.write(&json)?;
    let lambda_drop: Vec<String> = record
        .payload
        .passes
        .iter()
        .map(|p| format!("{}: λ₁ {:.6} -> {:.6}", p.direction, p.lambda_before, p.lambda_after))
        .collect();
    let text = format!(
        "{}; diameter {:.4} -> {:.4}",
        lambda_drop.join(", "),
        record.payload.initial_diameter,
        record.payload.final_diameter
    );
    Ok((
        record.clone(),
        Outcome {
            checks_ok: record.payload.monotone && record.payload.variational_ok,
            files: vec![csv_path, dom_path, json],
            summary: text,
        },
    ))
}
