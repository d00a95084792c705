//! The hybrid forward-backward / halfspace-projection method and a
//! fixed-step forward-backward baseline.
//!
//! One outer iteration (a *sweep*) starts at `z₁ = xᵏ` and visits the
//! components `i = 1..m` in order. For component `i`:
//!
//! 1. `J = (I + βₖBᵢ)⁻¹(z − βₖAᵢ(z))`. If `‖z − J‖ ≤ ε` the component is
//!    solved at `z` and `z` is passed on unchanged.
//! 2. Otherwise backtrack over `j = 0, 1, …` on the probes
//!    `yⱼ = θʲJ + (1 − θʲ)z` with `uⱼ ∈ Bᵢ(yⱼ)`, `‖uⱼ‖ ≤ R`, until
//!    `⟨Aᵢ(yⱼ) + uⱼ, z − J⟩ ≥ (δ/βₖ)‖z − J‖²`. `J` is not recomputed.
//! 3. With `w = Aᵢ(x̄) + ū` at the accepted probe `x̄`, the next point is
//!    `P_X(P_H(z))` for the halfspace `H = {y : ⟨w, y − x̄⟩ ≤ 0}`, which
//!    contains every solution of component `i`.
//!
//! The sweep result becomes `xᵏ⁺¹`. The run stops when every component is
//! solved at the same point within one sweep, when the natural residual
//! drops below `tol_outer`, or at `max_outer`.

use std::ops::ControlFlow;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::geometry::{ConvexSet, Halfspace};
use crate::harness::ProblemInstance;
use crate::operators::{forward_backward_map, ForwardOperator, SetValuedOperator};
use crate::{check_dim, Error, Result, Vector};

/// Rule producing the step `βₖ ∈ [β̌, β̂]` for outer iteration `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BetaSchedule {
    Midpoint,
    Constant { beta: f64 },
    /// Geometric sweep from `β̌` up to `β̂` over `period` iterations, repeated.
    Geometric { period: usize },
}

impl BetaSchedule {
    pub fn beta(&self, k: usize, lo: f64, hi: f64) -> f64 {
        match *self {
            BetaSchedule::Midpoint => 0.5 * (lo + hi),
            BetaSchedule::Constant { beta } => beta,
            BetaSchedule::Geometric { period } => {
                if period < 2 {
                    return lo;
                }
                let t = (k % period) as f64 / (period - 1) as f64;
                (lo * (hi / lo).powf(t)).clamp(lo, hi)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoParams {
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub beta_schedule: BetaSchedule,
    pub theta: f64,
    pub delta: f64,
    /// Selection radius; `None` uses the instance's value.
    pub radius: Option<f64>,
    /// `ε` of the per-component fixed-point test.
    pub tol_component: f64,
    pub tol_outer: f64,
    pub max_outer: usize,
    pub max_linesearch: usize,
}

impl Default for AlgoParams {
    fn default() -> Self {
        AlgoParams {
            beta_lo: 0.1,
            beta_hi: 1.0,
            beta_schedule: BetaSchedule::Midpoint,
            theta: 0.5,
            delta: 0.5,
            radius: None,
            tol_component: 1e-9,
            tol_outer: 1e-6,
            max_outer: 100_000,
            max_linesearch: 60,
        }
    }
}

impl AlgoParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.beta_lo > 0.0 && self.beta_lo <= self.beta_hi && self.beta_hi.is_finite()) {
            return bad(format!(
                "need 0 < beta_lo <= beta_hi < inf, got [{}, {}]",
                self.beta_lo, self.beta_hi
            ));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad(format!("theta must lie in (0,1), got {}", self.theta));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0,1), got {}", self.delta));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("radius must be positive, got {r}"));
            }
        }
        if !(self.tol_component > 0.0 && self.tol_outer > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.max_outer == 0 || self.max_linesearch == 0 {
            return bad("iteration limits must be positive".into());
        }
        if let BetaSchedule::Constant { beta } = self.beta_schedule {
            if !(beta >= self.beta_lo && beta <= self.beta_hi) {
                return bad(format!(
                    "constant beta {beta} outside [{}, {}]",
                    self.beta_lo, self.beta_hi
                ));
            }
        }
        Ok(())
    }

    pub fn beta(&self, k: usize) -> f64 {
        self.beta_schedule.beta(k, self.beta_lo, self.beta_hi)
    }

    pub fn beta_mid(&self) -> f64 {
        0.5 * (self.beta_lo + self.beta_hi)
    }
}

/// Accepted backtracking step.
#[derive(Debug, Clone, PartialEq)]
pub struct LinesearchResult {
    /// Accepted exponent.
    pub j: usize,
    /// `θʲ`.
    pub alpha: f64,
    pub x_bar: Vector,
    pub u_bar: Vector,
    /// `A(x̄) + ū`, the normal of the separating halfspace.
    pub normal: Vector,
}

/// Backtracking search along the segment `[z, fb_point]`.
///
/// `fb_point` is the forward-backward point of `z` and is never recomputed.
/// Probes at which the selection oracle reports a domain error are skipped.
pub fn linesearch(
    a: &dyn ForwardOperator,
    b: &dyn SetValuedOperator,
    z: &Vector,
    fb_point: &Vector,
    beta: f64,
    params: &AlgoParams,
    radius: f64,
) -> Result<LinesearchResult> {
    check_dim(z.len(), fb_point.len())?;
    let d = z - fb_point;
    let d2 = d.norm_squared();
    if d2.sqrt() <= params.tol_component {
        return Err(Error::Config(
            "linesearch called on a component that is already solved".into(),
        ));
    }
    let target = params.delta / beta * d2;
    let mut domain_misses = 0;
    let mut alpha = 1.0;
    for j in 0..params.max_linesearch {
        if j > 0 {
            alpha *= params.theta;
        }
        let y = fb_point * alpha + z * (1.0 - alpha);
        let u = match b.selection(&y, radius) {
            Ok(u) => u,
            Err(Error::Domain { .. }) => {
                domain_misses += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let w = a.eval(&y)? + &u;
        if w.dot(&d) >= target {
            return Ok(LinesearchResult {
                j,
                alpha,
                x_bar: y,
                u_bar: u,
                normal: w,
            });
        }
    }
    let reason = if domain_misses > 0 {
        format!("{domain_misses} probes left the operator domain")
    } else {
        "acceptance inequality never held".to_string()
    };
    Err(Error::LinesearchFailure {
        component: 0,
        iteration: 0,
        tried: params.max_linesearch,
        reason,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    /// `‖z − J‖ ≤ ε`: the component is solved at `z`.
    Fixed,
    /// The halfspace normal vanished at `x̄`, so `x̄` solves the component;
    /// `z` is left unchanged.
    Degenerate(LinesearchResult),
    Moved(LinesearchResult),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentStep {
    pub z_next: Vector,
    pub fb_point: Vector,
    /// `‖z − J‖`.
    pub fb_residual: f64,
    pub outcome: StepOutcome,
}

impl ComponentStep {
    pub fn solved(&self) -> bool {
        !matches!(self.outcome, StepOutcome::Moved(_))
    }

    pub fn linesearch(&self) -> Option<&LinesearchResult> {
        match &self.outcome {
            StepOutcome::Fixed => None,
            StepOutcome::Degenerate(ls) | StepOutcome::Moved(ls) => Some(ls),
        }
    }

    pub fn j_count(&self) -> Option<usize> {
        self.linesearch().map(|ls| ls.j)
    }
}

/// One component update of a sweep.
pub fn component_step(
    a: &dyn ForwardOperator,
    b: &dyn SetValuedOperator,
    x_set: &ConvexSet,
    z: &Vector,
    beta: f64,
    params: &AlgoParams,
    radius: f64,
) -> Result<ComponentStep> {
    let fb_point = forward_backward_map(a, b, beta, z)?;
    let fb_residual = (z - &fb_point).norm();
    if fb_residual <= params.tol_component {
        return Ok(ComponentStep {
            z_next: z.clone(),
            fb_point,
            fb_residual,
            outcome: StepOutcome::Fixed,
        });
    }
    let ls = linesearch(a, b, z, &fb_point, beta, params, radius)?;
    let h = Halfspace::new(ls.normal.clone(), ls.x_bar.clone())?;
    if h.is_degenerate() {
        return Ok(ComponentStep {
            z_next: z.clone(),
            fb_point,
            fb_residual,
            outcome: StepOutcome::Degenerate(ls),
        });
    }
    let z_next = x_set.project(&h.project(z)?)?;
    Ok(ComponentStep {
        z_next,
        fb_point,
        fb_residual,
        outcome: StepOutcome::Moved(ls),
    })
}

/// Natural residual `maxᵢ ‖x − (I + βBᵢ)⁻¹(x − βAᵢ(x))‖`; zero exactly at
/// common solutions.
pub fn residual(instance: &ProblemInstance, beta: f64, x: &Vector) -> Result<f64> {
    let mut worst = 0.0f64;
    for c in &instance.components {
        let fb = forward_backward_map(&c.a, &c.b, beta, x)?;
        worst = worst.max((x - fb).norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Solved,
    MaxIterations,
    LinesearchFailure,
    /// A monitor stopped the run.
    Interrupted,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Solved => "solved",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::LinesearchFailure => "linesearch_failure",
            SolveStatus::Interrupted => "interrupted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Every component passed the fixed-point test in one sweep.
    StoppingSet,
    /// Natural residual at or below `tol_outer`.
    Residual,
}

/// State of the run at the start of outer iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vector,
    /// Natural residual of `x` at step `beta`.
    pub residual: f64,
    pub beta: f64,
    /// `‖zᵢ − Jᵢ‖` per component; empty when no sweep ran from this point.
    pub component_residuals: Vec<f64>,
    /// Accepted exponent per component, `None` when no linesearch ran.
    pub linesearch_j: Vec<Option<usize>>,
    pub dist_to_star: Option<f64>,
    /// Volatile.
    pub elapsed_ms: f64,
}

impl IterationRecord {
    pub fn linesearch_total(&self) -> usize {
        self.linesearch_j.iter().flatten().sum()
    }
}

/// Append-only per-iteration log of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
}

#[derive(Serialize)]
struct CsvRow {
    k: usize,
    residual: f64,
    dist_to_star: Option<f64>,
    beta: f64,
    linesearch_total: usize,
    time_ms: f64,
}

impl SolveTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Writes `k,residual,dist_to_star,beta,linesearch_total,time_ms`, one row
    /// per record.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.records {
            out.serialize(CsvRow {
                k: r.k,
                residual: r.residual,
                dist_to_star: r.dist_to_star,
                beta: r.beta,
                linesearch_total: r.linesearch_total(),
                time_ms: r.elapsed_ms,
            })?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// `‖xᵏ⁺¹ − xᵏ‖` for consecutive records.
    pub fn displacements(&self) -> Vec<f64> {
        self.records
            .windows(2)
            .map(|w| (&w[1].x - &w[0].x).norm())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub stop_reason: Option<StopReason>,
    pub x_final: Vector,
    pub trace: SolveTrace,
    /// Diagnostic for `LinesearchFailure` and `Interrupted`.
    pub message: Option<String>,
}

impl SolveOutcome {
    /// Number of completed outer iterations.
    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }

    pub fn final_residual(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.residual)
    }
}

/// Observation point passed to a [`Monitor`] after each component update.
pub struct ComponentEvent<'a> {
    pub iteration: usize,
    /// Zero-based component index.
    pub component: usize,
    pub beta: f64,
    pub z: &'a Vector,
    pub step: &'a ComponentStep,
}

/// Hooks for per-iteration checks. Returning `Break` interrupts the run.
pub trait Monitor {
    fn on_component(&mut self, _event: &ComponentEvent<'_>) -> ControlFlow<String> {
        ControlFlow::Continue(())
    }

    fn on_sweep(&mut self, _k: usize, _x: &Vector, _x_next: &Vector) -> ControlFlow<String> {
        ControlFlow::Continue(())
    }
}

impl Monitor for () {}

pub fn solve(instance: &ProblemInstance, params: &AlgoParams, x0: &Vector) -> Result<SolveOutcome> {
    solve_with_monitor(instance, params, x0, &mut ())
}

pub fn solve_with_monitor(
    instance: &ProblemInstance,
    params: &AlgoParams,
    x0: &Vector,
    monitor: &mut dyn Monitor,
) -> Result<SolveOutcome> {
    params.validate()?;
    check_dim(instance.n, x0.len())?;
    crate::check_finite("x0", x0)?;
    let radius = params.radius.unwrap_or(instance.radius);
    let started = Instant::now();
    let dist = |x: &Vector| instance.known_solution.as_ref().map(|s| (x - s).norm());

    let mut x = instance.x_set.project(x0)?;
    if (&x - x0).norm() > 1e-12 {
        log::warn!("x0 lies outside X; starting from its projection");
    }
    let mut trace = SolveTrace::default();
    let m = instance.components.len();

    for k in 0..params.max_outer {
        let beta = params.beta(k);
        let res = residual(instance, beta, &x)?;
        let mut record = IterationRecord {
            k,
            x: x.clone(),
            residual: res,
            beta,
            component_residuals: Vec::with_capacity(m),
            linesearch_j: Vec::with_capacity(m),
            dist_to_star: dist(&x),
            elapsed_ms: 0.0,
        };

        let mut z = x.clone();
        let mut all_fixed = true;
        let mut failure = None;
        for (i, c) in instance.components.iter().enumerate() {
            let step = match component_step(&c.a, &c.b, &instance.x_set, &z, beta, params, radius) {
                Ok(step) => step,
                Err(Error::LinesearchFailure { tried, reason, .. }) => {
                    failure = Some(format!(
                        "linesearch failed for component {} at iteration {k} after {tried} trials: {reason}",
                        i + 1
                    ));
                    break;
                }
                Err(e) => return Err(e),
            };
            record.component_residuals.push(step.fb_residual);
            record.linesearch_j.push(step.j_count());
            all_fixed &= matches!(step.outcome, StepOutcome::Fixed);
            let event = ComponentEvent {
                iteration: k,
                component: i,
                beta,
                z: &z,
                step: &step,
            };
            if let ControlFlow::Break(msg) = monitor.on_component(&event) {
                record.elapsed_ms = elapsed_ms(started);
                trace.records.push(record);
                return Ok(SolveOutcome {
                    status: SolveStatus::Interrupted,
                    stop_reason: None,
                    x_final: x,
                    trace,
                    message: Some(msg),
                });
            }
            z = step.z_next;
        }
        record.elapsed_ms = elapsed_ms(started);
        trace.records.push(record);

        if let Some(msg) = failure {
            return Ok(SolveOutcome {
                status: SolveStatus::LinesearchFailure,
                stop_reason: None,
                x_final: x,
                trace,
                message: Some(msg),
            });
        }
        if all_fixed {
            return Ok(SolveOutcome {
                status: SolveStatus::Solved,
                stop_reason: Some(StopReason::StoppingSet),
                x_final: x,
                trace,
                message: None,
            });
        }
        if res <= params.tol_outer {
            return Ok(SolveOutcome {
                status: SolveStatus::Solved,
                stop_reason: Some(StopReason::Residual),
                x_final: x,
                trace,
                message: None,
            });
        }
        if let ControlFlow::Break(msg) = monitor.on_sweep(k, &x, &z) {
            return Ok(SolveOutcome {
                status: SolveStatus::Interrupted,
                stop_reason: None,
                x_final: x,
                trace,
                message: Some(msg),
            });
        }
        x = z;
    }

    let k = params.max_outer;
    let beta = params.beta(k);
    let res = residual(instance, beta, &x)?;
    trace.records.push(IterationRecord {
        k,
        x: x.clone(),
        residual: res,
        beta,
        component_residuals: Vec::new(),
        linesearch_j: Vec::new(),
        dist_to_star: dist(&x),
        elapsed_ms: elapsed_ms(started),
    });
    let status = if res <= params.tol_outer {
        SolveStatus::Solved
    } else {
        SolveStatus::MaxIterations
    };
    Ok(SolveOutcome {
        status,
        stop_reason: (status == SolveStatus::Solved).then_some(StopReason::Residual),
        x_final: x,
        trace,
        message: None,
    })
}

/// Plain forward-backward iteration `x ← (I + sB)⁻¹(x − sA(x))` with a fixed
/// step `s`, for single-component instances.
pub fn solve_baseline_fb(
    instance: &ProblemInstance,
    x0: &Vector,
    step: f64,
    max_iter: usize,
    tol: f64,
) -> Result<SolveOutcome> {
    if instance.components.len() != 1 {
        return Err(Error::Config(format!(
            "baseline needs exactly one component, instance has {}",
            instance.components.len()
        )));
    }
    if !(step > 0.0 && tol > 0.0) {
        return Err(Error::Config("baseline step and tolerance must be positive".into()));
    }
    check_dim(instance.n, x0.len())?;
    let c = &instance.components[0];
    let started = Instant::now();
    let mut trace = SolveTrace::default();
    let mut x = x0.clone();
    for k in 0..=max_iter {
        let fb = forward_backward_map(&c.a, &c.b, step, &x)?;
        let res = (&x - &fb).norm();
        trace.records.push(IterationRecord {
            k,
            x: x.clone(),
            residual: res,
            beta: step,
            component_residuals: vec![res],
            linesearch_j: vec![None],
            dist_to_star: instance.known_solution.as_ref().map(|s| (&x - s).norm()),
            elapsed_ms: elapsed_ms(started),
        });
        if res <= tol {
            return Ok(SolveOutcome {
                status: SolveStatus::Solved,
                stop_reason: Some(StopReason::Residual),
                x_final: x,
                trace,
                message: None,
            });
        }
        if k == max_iter || !res.is_finite() {
            break;
        }
        x = fb;
    }
    Ok(SolveOutcome {
        status: SolveStatus::MaxIterations,
        stop_reason: None,
        x_final: x,
        trace,
        message: None,
    })
}

fn elapsed_ms(started: Instant) -> f64 {
    started.elapsed().as_secs_f64() * 1e3
}
