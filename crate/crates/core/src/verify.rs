//! Sampled property checks for operators and projections, and a solver
//! monitor that asserts the per-iteration guarantees of the method.

use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::geometry::{ConvexSet, Halfspace};
use crate::harness::{ProblemInstance, FEJER_SLACK};
use crate::operators::{forward_backward_map, ForwardOp, ForwardOperator, SetValuedOp, SetValuedOperator};
use crate::solver::{AlgoParams, ComponentEvent, Monitor, StepOutcome};
use crate::{Result, Vector};

pub const MONOTONE_SLACK: f64 = 1e-10;
pub const FIRM_NONEXPANSIVE_SLACK: f64 = 1e-9;
pub const PROJECTION_SLACK: f64 = 1e-9;
pub const OBTUSE_SLACK: f64 = 1e-10;
pub const IDEMPOTENT_TOL: f64 = 1e-12;
pub const BETA_INDEPENDENCE_TOL: f64 = 1e-12;
pub const FIXED_POINT_TOL: f64 = 1e-9;
pub const SELECTION_SLACK: f64 = 1e-12;
pub const CONTAINMENT_SLACK: f64 = 1e-9;
pub const ACCEPTED_STEP_SLACK: f64 = 1e-10;
pub const IN_X_TOL: f64 = 1e-10;

/// Outcome of one sampled property check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub checked: usize,
    pub failures: usize,
    /// Worst observed slack usage (positive means violated).
    pub worst: f64,
    pub counterexample: Option<serde_json::Value>,
}

impl CheckResult {
    fn new(name: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            checked: 0,
            failures: 0,
            worst: f64::NEG_INFINITY,
            counterexample: None,
        }
    }

    /// Records `excess = lhs − rhs − slack`; positive means a violation.
    fn record(&mut self, excess: f64, witness: impl FnOnce() -> serde_json::Value) {
        self.checked += 1;
        self.worst = self.worst.max(excess);
        if excess > 0.0 || excess.is_nan() {
            self.failures += 1;
            if self.counterexample.is_none() {
                self.counterexample = Some(witness());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone)]
pub struct SampleConfig {
    pub pairs: usize,
    pub betas: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            pairs: 1000,
            betas: 100,
            seed: 0,
        }
    }
}

fn uniform_in(rng: &mut ChaCha8Rng, lo: &Vector, hi: &Vector) -> Vector {
    Vector::from_fn(lo.len(), |j, _| {
        if lo[j] < hi[j] {
            rng.random_range(lo[j]..hi[j])
        } else {
            lo[j]
        }
    })
}

fn v(x: &Vector) -> serde_json::Value {
    json!(x.as_slice())
}

/// `⟨A(x) − A(y), x − y⟩ ≥ −slack` on random pairs, plus a pair along the
/// least-monotone eigendirection of an affine map.
pub fn check_monotone(
    name: &str,
    a: &ForwardOp,
    lo: &Vector,
    hi: &Vector,
    cfg: &SampleConfig,
    rng: &mut ChaCha8Rng,
) -> Result<CheckResult> {
    let mut res = CheckResult::new(name);
    let probe = |x: Vector, y: Vector, res: &mut CheckResult| -> Result<()> {
        let val = (a.eval(&x)? - a.eval(&y)?).dot(&(&x - &y));
        res.record(-val - MONOTONE_SLACK, || json!({"x": v(&x), "y": v(&y), "inner_product": val}));
        Ok(())
    };
    for _ in 0..cfg.pairs {
        let x = uniform_in(rng, lo, hi);
        let y = uniform_in(rng, lo, hi);
        probe(x, y, &mut res)?;
    }
    let (_, dir) = a.min_symmetric_eigenpair();
    let x = (lo + hi) * 0.5;
    let scale = (hi - lo).amax().max(1.0) * 0.25;
    let y = &x + dir * scale;
    probe(x, y, &mut res)?;
    Ok(res)
}

/// Firm nonexpansiveness of the resolvent and monotonicity of the graph
/// points `(res(β,x), (x − res(β,x))/β)` it produces.
pub fn check_resolvent(
    name: &str,
    b: &SetValuedOp,
    lo: &Vector,
    hi: &Vector,
    cfg: &SampleConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(CheckResult, CheckResult)> {
    let mut firm = CheckResult::new(format!("{name}: resolvent firmly nonexpansive"));
    let mut graph = CheckResult::new(format!("{name}: resolvent graph points monotone"));
    // sample outside the working box too, where projections are active
    let spread = (hi - lo).map(|d| d.max(1.0));
    let wlo = lo - &spread;
    let whi = hi + &spread;
    for _ in 0..cfg.pairs {
        let beta = rng.random_range(0.01..10.0);
        let x = uniform_in(rng, &wlo, &whi);
        let y = uniform_in(rng, &wlo, &whi);
        let rx = b.resolvent(beta, &x)?;
        let ry = b.resolvent(beta, &y)?;
        let dr = &rx - &ry;
        let excess = dr.norm_squared() - dr.dot(&(&x - &y)) - FIRM_NONEXPANSIVE_SLACK;
        firm.record(excess, || json!({"beta": beta, "x": v(&x), "y": v(&y)}));

        let ux = (&x - &rx) / beta;
        let uy = (&y - &ry) / beta;
        let in_graph = b.in_graph(&rx, &ux, 1e-9)? && b.in_graph(&ry, &uy, 1e-9)?;
        let val = (&ux - &uy).dot(&dr);
        let excess = if in_graph { -val - FIRM_NONEXPANSIVE_SLACK } else { f64::INFINITY };
        graph.record(excess, || json!({"beta": beta, "x": v(&x), "y": v(&y), "in_graph": in_graph}));
    }
    Ok((firm, graph))
}

/// Normal-cone resolvents do not depend on the step.
pub fn check_beta_independence(
    name: &str,
    set: &ConvexSet,
    lo: &Vector,
    hi: &Vector,
    cfg: &SampleConfig,
    rng: &mut ChaCha8Rng,
) -> Result<CheckResult> {
    let b = SetValuedOp::normal_cone(set.clone());
    let mut res = CheckResult::new(name);
    let spread = (hi - lo).map(|d| d.max(1.0));
    let wlo = lo - &spread;
    let whi = hi + &spread;
    for _ in 0..cfg.betas {
        let b1 = 10f64.powf(rng.random_range(-3.0..3.0));
        let b2 = 10f64.powf(rng.random_range(-3.0..3.0));
        let x = uniform_in(rng, &wlo, &whi);
        let d = (b.resolvent(b1, &x)? - b.resolvent(b2, &x)?).amax();
        let p = (b.resolvent(b1, &x)? - set.project(&x)?).amax();
        res.record(d.max(p) - BETA_INDEPENDENCE_TOL, || json!({"beta1": b1, "beta2": b2, "x": v(&x)}));
    }
    Ok(res)
}

/// Nonexpansiveness with displacement, the obtuse-angle property and
/// idempotence of the projection onto `set`.
pub fn check_projection(
    name: &str,
    set: &ConvexSet,
    lo: &Vector,
    hi: &Vector,
    cfg: &SampleConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CheckResult>> {
    let mut nonexp = CheckResult::new(format!("{name}: projection nonexpansive with displacement"));
    let mut obtuse = CheckResult::new(format!("{name}: projection obtuse angle"));
    let mut idem = CheckResult::new(format!("{name}: projection idempotent"));
    let spread = (hi - lo).map(|d| d.max(1.0));
    let wlo = lo - &spread * 2.0;
    let whi = hi + &spread * 2.0;
    for _ in 0..cfg.pairs {
        let x = uniform_in(rng, &wlo, &whi);
        let y = uniform_in(rng, &wlo, &whi);
        let px = set.project(&x)?;
        let py = set.project(&y)?;
        let lhs = (&px - &py).norm_squared();
        let rhs = (&x - &y).norm_squared() - ((&px - &x) - (&py - &y)).norm_squared();
        nonexp.record(lhs - rhs - PROJECTION_SLACK, || json!({"x": v(&x), "y": v(&y)}));

        let member = set.project(&uniform_in(rng, &wlo, &whi))?;
        let val = (&x - &px).dot(&(&member - &px));
        obtuse.record(val - OBTUSE_SLACK, || json!({"x": v(&x), "z": v(&member)}));

        let again = set.project(&px)?;
        idem.record((&again - &px).amax() - IDEMPOTENT_TOL, || json!({"x": v(&x)}));
    }
    Ok(vec![nonexp, obtuse, idem])
}

/// Halfspace projection formula agrees with the set projection.
pub fn check_halfspace_agreement(n: usize, cfg: &SampleConfig, rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut res = CheckResult::new("halfspace projection matches set projection");
    let lo = Vector::from_element(n, -5.0);
    let hi = Vector::from_element(n, 5.0);
    for _ in 0..cfg.pairs {
        let h = Halfspace::new(uniform_in(rng, &lo, &hi), uniform_in(rng, &lo, &hi))?;
        let z = uniform_in(rng, &lo, &hi);
        let d = (h.project(&z)? - h.to_set().project(&z)?).amax();
        res.record(d - IDEMPOTENT_TOL, || json!({"normal": v(&h.normal), "anchor": v(&h.anchor), "z": v(&z)}));
    }
    Ok(res)
}

/// Known solutions are fixed points of every forward-backward map for
/// `β ∈ [β̌, β̂]`.
pub fn check_fixed_point(inst: &ProblemInstance, params: &AlgoParams, steps: usize) -> Result<CheckResult> {
    let mut res = CheckResult::new("known solution is a forward-backward fixed point");
    let Some(star) = &inst.known_solution else {
        return Ok(res);
    };
    for s in 0..=steps {
        let beta = params.beta_lo + (params.beta_hi - params.beta_lo) * s as f64 / steps.max(1) as f64;
        for (i, c) in inst.components.iter().enumerate() {
            let fb = forward_backward_map(&c.a, &c.b, beta, star)?;
            res.record((fb - star).norm() - FIXED_POINT_TOL, || json!({"component": i + 1, "beta": beta}));
        }
    }
    Ok(res)
}

/// `‖selection(x, R)‖ ≤ R` and `selection(x, R) ∈ B(x)` at sampled points of `X`.
pub fn check_selection(
    inst: &ProblemInstance,
    cfg: &SampleConfig,
    rng: &mut ChaCha8Rng,
) -> Result<CheckResult> {
    let mut res = CheckResult::new("selections bounded and in graph");
    let (lo, hi) = inst.working_box();
    for _ in 0..cfg.pairs {
        let x = inst.x_set.project(&uniform_in(rng, &lo, &hi))?;
        for (i, c) in inst.components.iter().enumerate() {
            let x = c.b.domain(inst.n).project(&x)?;
            let u = c.b.selection(&x, inst.radius)?;
            let excess = if c.b.in_graph(&x, &u, 1e-12)? {
                u.norm() - inst.radius - SELECTION_SLACK
            } else {
                f64::INFINITY
            };
            res.record(excess, || json!({"component": i + 1, "x": v(&x), "u": v(&u)}));
        }
    }
    Ok(res)
}

/// Standard catalog of sets of dimension `n` for geometry checks.
pub fn catalog_sets(n: usize, rng: &mut ChaCha8Rng) -> Vec<(String, ConvexSet)> {
    let lo = Vector::from_element(n, -2.0);
    let hi = Vector::from_element(n, 2.0);
    let a = uniform_in(rng, &lo, &hi);
    let b = uniform_in(rng, &lo, &hi);
    vec![
        ("whole_space".into(), ConvexSet::whole_space(n)),
        ("box".into(), ConvexSet::Box { lo: a.inf(&b), hi: a.sup(&b) }),
        ("ball".into(), ConvexSet::ball(uniform_in(rng, &lo, &hi), rng.random_range(0.1..3.0))),
        ("halfspace".into(), ConvexSet::Halfspace { normal: uniform_in(rng, &lo, &hi), anchor: a.clone() }),
        ("affine_hyperplane".into(), ConvexSet::AffineHyperplane {
            normal: uniform_in(rng, &lo, &hi).add_scalar(0.1),
            offset: rng.random_range(-1.0..1.0),
        }),
    ]
}

/// Every sampled operator and geometry check for an instance.
pub fn run_property_suite(inst: &ProblemInstance, params: &AlgoParams, cfg: &SampleConfig) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = inst.working_box();
    let mut out = Vec::new();

    for (i, c) in inst.components.iter().enumerate() {
        let tag = format!("component {}", i + 1);
        out.push(check_monotone(&format!("{tag}: forward operator monotone"), &c.a, &lo, &hi, cfg, &mut rng)?);
        let (firm, graph) = check_resolvent(&tag, &c.b, &lo, &hi, cfg, &mut rng)?;
        out.push(firm);
        out.push(graph);
        if let SetValuedOp::NormalCone { set } = &c.b {
            out.push(check_beta_independence(
                &format!("{tag}: normal-cone resolvent independent of beta"),
                set,
                &lo,
                &hi,
                cfg,
                &mut rng,
            )?);
            out.extend(check_projection(&format!("{tag} set"), set, &lo, &hi, cfg, &mut rng)?);
        }
    }
    out.extend(check_projection("X", &inst.x_set, &lo, &hi, cfg, &mut rng)?);
    for (name, set) in catalog_sets(inst.n, &mut rng) {
        out.extend(check_projection(&format!("catalog {name}"), &set, &lo, &hi, cfg, &mut rng)?);
        out.push(check_beta_independence(
            &format!("catalog {name}: normal-cone resolvent independent of beta"),
            &set,
            &lo,
            &hi,
            cfg,
            &mut rng,
        )?);
    }
    out.push(check_halfspace_agreement(inst.n, cfg, &mut rng)?);
    out.push(check_selection(inst, cfg, &mut rng)?);
    out.push(check_fixed_point(inst, params, 10)?);
    Ok(out)
}

/// Counters kept by [`InvariantChecker`].
#[derive(Debug, Clone, Default, Serialize)]
pub struct InvariantCounts {
    pub sweeps: usize,
    pub component_steps: usize,
    pub accepted_linesearches: usize,
    pub fejer_outer_violations: usize,
    pub fejer_chain_violations: usize,
    pub containment_violations: usize,
    pub accepted_step_violations: usize,
    pub outside_x_violations: usize,
    pub max_j: usize,
    /// Largest `⟨A(x̄)+ū, x*−x̄⟩` seen.
    pub worst_containment: f64,
    /// Smallest `⟨A(x̄)+ū, z−x̄⟩ − (αδ/β̂)‖z−J‖²` seen.
    pub worst_accepted_step: f64,
}

impl InvariantCounts {
    pub fn total_violations(&self) -> usize {
        self.fejer_outer_violations
            + self.fejer_chain_violations
            + self.containment_violations
            + self.accepted_step_violations
            + self.outside_x_violations
    }
}

/// Solver monitor asserting, at every step: Fejér monotonicity of the outer
/// iterates and of the intra-sweep chain, containment of the known solutions
/// in each separating halfspace, the accepted-step inequality, and that
/// iterates stay in `X`.
pub struct InvariantChecker {
    solutions: Vec<Vector>,
    x_set: ConvexSet,
    beta_hi: f64,
    delta: f64,
    fail_fast: bool,
    pub counts: InvariantCounts,
    pub first_violation: Option<String>,
}

impl InvariantChecker {
    pub fn new(inst: &ProblemInstance, params: &AlgoParams, fail_fast: bool) -> Self {
        InvariantChecker {
            solutions: inst.known_solution.iter().cloned().collect(),
            x_set: inst.x_set.clone(),
            beta_hi: params.beta_hi,
            delta: params.delta,
            fail_fast,
            counts: InvariantCounts {
                worst_containment: f64::NEG_INFINITY,
                worst_accepted_step: f64::INFINITY,
                ..InvariantCounts::default()
            },
            first_violation: None,
        }
    }

    fn violation(&mut self, msg: String) -> ControlFlow<String> {
        if self.first_violation.is_none() {
            self.first_violation = Some(msg.clone());
        }
        if self.fail_fast {
            ControlFlow::Break(msg)
        } else {
            ControlFlow::Continue(())
        }
    }
}

impl Monitor for InvariantChecker {
    fn on_component(&mut self, ev: &ComponentEvent<'_>) -> ControlFlow<String> {
        let (k, i) = (ev.iteration, ev.component + 1);
        self.counts.component_steps += 1;
        let z_next = &ev.step.z_next;

        for s in 0..self.solutions.len() {
            let before = (ev.z - &self.solutions[s]).norm();
            let after = (z_next - &self.solutions[s]).norm();
            if after > before + FEJER_SLACK {
                self.counts.fejer_chain_violations += 1;
                self.violation(format!(
                    "intra-sweep distance grew at iteration {k}, component {i}: {before:e} -> {after:e}"
                ))?;
            }
        }

        let dist_x = self.x_set.distance(z_next).unwrap_or(f64::INFINITY);
        if dist_x > IN_X_TOL {
            self.counts.outside_x_violations += 1;
            self.violation(format!("iterate left X at iteration {k}, component {i}: distance {dist_x:e}"))?;
        }

        let ls = match &ev.step.outcome {
            StepOutcome::Fixed => return ControlFlow::Continue(()),
            StepOutcome::Degenerate(ls) | StepOutcome::Moved(ls) => ls,
        };
        self.counts.accepted_linesearches += 1;
        self.counts.max_j = self.counts.max_j.max(ls.j);

        for s in 0..self.solutions.len() {
            let val = ls.normal.dot(&(&self.solutions[s] - &ls.x_bar));
            self.counts.worst_containment = self.counts.worst_containment.max(val);
            if val > CONTAINMENT_SLACK {
                self.counts.containment_violations += 1;
                self.violation(format!(
                    "known solution outside the halfspace at iteration {k}, component {i}: {val:e}"
                ))?;
            }
        }

        let lhs = ls.normal.dot(&(ev.z - &ls.x_bar));
        let rhs = ls.alpha * self.delta / self.beta_hi * (ev.z - &ev.step.fb_point).norm_squared();
        self.counts.worst_accepted_step = self.counts.worst_accepted_step.min(lhs - rhs);
        if lhs < rhs - ACCEPTED_STEP_SLACK || lhs < -ACCEPTED_STEP_SLACK {
            self.counts.accepted_step_violations += 1;
            self.violation(format!(
                "accepted-step inequality failed at iteration {k}, component {i}: {lhs:e} < {rhs:e}"
            ))?;
        }
        ControlFlow::Continue(())
    }

    fn on_sweep(&mut self, k: usize, x: &Vector, x_next: &Vector) -> ControlFlow<String> {
        self.counts.sweeps += 1;
        for s in 0..self.solutions.len() {
            let before = (x - &self.solutions[s]).norm();
            let after = (x_next - &self.solutions[s]).norm();
            if after > before + FEJER_SLACK {
                self.counts.fejer_outer_violations += 1;
                self.violation(format!("distance to solution grew at iteration {k}: {before:e} -> {after:e}"))?;
            }
        }
        ControlFlow::Continue(())
    }
}
