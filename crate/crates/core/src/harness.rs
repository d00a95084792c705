//! Problem instances, planted-solution generators, an independent oracle
//! solver, run metrics and file persistence.

use std::path::Path;

use nalgebra::Cholesky;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::ConvexSet;
use crate::operators::{forward_backward_map, ForwardOp, ForwardOperator, SetValuedOp, SetValuedOperator};
use crate::solver::{residual, AlgoParams, SolveTrace};
use crate::{check_dim, serde_la, Error, Matrix, Result, Vector};

/// Residual required at a planted solution.
pub const PLANTED_TOL: f64 = 1e-8;
/// Slack for Fejér distance comparisons.
pub const FEJER_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    #[serde(rename = "A")]
    pub a: ForwardOp,
    #[serde(rename = "B")]
    pub b: SetValuedOp,
}

/// A system `0 ∈ Aᵢ(x) + Bᵢ(x)`, `i = 1..m`, restricted to `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub name: String,
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(rename = "X")]
    pub x_set: ConvexSet,
    pub components: Vec<Component>,
    #[serde(default, with = "serde_la::opt_vector", skip_serializing_if = "Option::is_none")]
    pub known_solution: Option<Vector>,
    /// Selection radius.
    #[serde(rename = "R")]
    pub radius: f64,
}

impl ProblemInstance {
    /// Builds and validates an instance (monotonicity enforced).
    pub fn new(
        name: impl Into<String>,
        n: usize,
        components: Vec<Component>,
        x_set: ConvexSet,
        known_solution: Option<Vector>,
        radius: f64,
    ) -> Result<Self> {
        let inst = ProblemInstance {
            name: name.into(),
            n,
            m: components.len(),
            seed: None,
            x_set,
            components,
            known_solution,
            radius,
        };
        inst.validate(false)?;
        Ok(inst)
    }

    /// Structural validation. With `allow_unchecked`, affine maps whose
    /// symmetric part is indefinite are accepted.
    pub fn validate(&self, allow_unchecked: bool) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if self.components.is_empty() {
            return Err(Error::Config("instance needs at least one component".into()));
        }
        if self.m != self.components.len() {
            return Err(Error::Config(format!(
                "m = {} but {} components listed",
                self.m,
                self.components.len()
            )));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Config(format!("R must be positive, got {}", self.radius)));
        }
        self.x_set.validate()?;
        check_dim(self.n, self.x_set.dim())?;
        for c in &self.components {
            if allow_unchecked {
                c.a.validate_shape()?;
            } else {
                c.a.validate()?;
            }
            check_dim(self.n, c.a.dim())?;
            c.b.validate()?;
            if let Some(d) = c.b.dim() {
                check_dim(self.n, d)?;
            }
            let needed = c.b.min_radius(self.n);
            if self.radius < needed {
                return Err(Error::Config(format!(
                    "R = {} is below the selection bound {needed}",
                    self.radius
                )));
            }
        }
        if let Some(s) = &self.known_solution {
            check_dim(self.n, s.len())?;
            crate::check_finite("known solution", s)?;
        }
        for w in self.domain_warnings() {
            log::warn!("{}: {w}", self.name);
        }
        Ok(())
    }

    /// Detectable violations of `X ⊆ dom Bᵢ`.
    pub fn domain_warnings(&self) -> Vec<String> {
        self.components
            .iter()
            .enumerate()
            .filter_map(|(i, c)| match &c.b {
                SetValuedOp::NormalCone { set } => match self.x_set.is_subset_of(set, 1e-12) {
                    Some(false) => Some(format!("X is not contained in the set of component {}", i + 1)),
                    Some(true) => None,
                    None => Some(format!("cannot verify X inside the set of component {}", i + 1)),
                },
                _ => None,
            })
            .collect()
    }

    /// Natural residual of the known solution, if any.
    pub fn planted_residual(&self, beta: f64) -> Result<Option<f64>> {
        self.known_solution
            .as_ref()
            .map(|s| residual(self, beta, s))
            .transpose()
    }

    /// Box on which sampled property checks exercise the oracles.
    pub fn working_box(&self) -> (Vector, Vector) {
        if let Some(b) = self.x_set.bounding_box() {
            return b;
        }
        let c = self.known_solution.clone().unwrap_or_else(|| Vector::zeros(self.n));
        (c.add_scalar(-10.0), c.add_scalar(10.0))
    }

    /// Default starting point: the projection onto `X` of a far point along
    /// the all-ones direction.
    pub fn default_start(&self) -> Vector {
        self.x_set
            .project(&Vector::from_element(self.n, 1e3))
            .expect("X has instance dimension")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str, allow_unchecked: bool) -> Result<Self> {
        let inst: ProblemInstance = serde_json::from_str(s)?;
        inst.validate(allow_unchecked)?;
        Ok(inst)
    }

    pub fn load(path: &Path, allow_unchecked: bool) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?, allow_unchecked)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    /// Affine variational inequalities `Aᵢ(x) = Mᵢ(x − x*)`, `Bᵢ = N_{Cᵢ}`.
    AffineVi,
    /// One lasso component `Wᵀ(Wx − b) + λ∂‖x‖₁`, the rest affine VIs.
    MixedL1,
}

impl std::str::FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "affine_vi" => Ok(Structure::AffineVi),
            "mixed_l1" => Ok(Structure::MixedL1),
            other => Err(Error::Config(format!("unknown structure {other:?}"))),
        }
    }
}

impl std::fmt::Display for Structure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Structure::AffineVi => "affine_vi",
            Structure::MixedL1 => "mixed_l1",
        })
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `M = I + GᵀG/(2n) + (K − Kᵀ)/(4√n)`: symmetric part with spectrum in
/// roughly `[1, 3]` plus a skew part.
fn monotone_matrix(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let nf = n as f64;
    let g = gaussian_matrix(rng, n, n);
    let k = gaussian_matrix(rng, n, n);
    Matrix::identity(n, n) + g.transpose() * &g * (0.5 / nf) + (&k - k.transpose()) * (0.25 / nf.sqrt())
}

/// A set strictly containing `x_box`: an enlarged box or a covering ball.
fn covering_set(rng: &mut ChaCha8Rng, x_lo: &Vector, x_hi: &Vector) -> ConvexSet {
    let n = x_lo.len();
    if rng.random_bool(0.5) {
        let lo = Vector::from_fn(n, |j, _| x_lo[j] - rng.random_range(0.1..1.0));
        let hi = Vector::from_fn(n, |j, _| x_hi[j] + rng.random_range(0.1..1.0));
        ConvexSet::Box { lo, hi }
    } else {
        let mid = (x_lo + x_hi) * 0.5;
        let center = Vector::from_fn(n, |j, _| mid[j] + rng.random_range(-0.2..0.2));
        let far: f64 = (0..n)
            .map(|j| {
                (x_lo[j] - center[j])
                    .abs()
                    .max((x_hi[j] - center[j]).abs())
                    .powi(2)
            })
            .sum::<f64>()
            .sqrt();
        ConvexSet::ball(center, far + rng.random_range(0.1..1.0))
    }
}

/// Lasso component whose minimizer is `star`:
/// `Wᵀ(W·star − b) + λs = 0` for a subgradient `s ∈ ∂‖star‖₁`.
fn planted_l1_component(rng: &mut ChaCha8Rng, star: &Vector, lambda: f64) -> Result<Component> {
    let n = star.len();
    // tall W = [I; G/(2√n)] keeps WᵀW well conditioned
    let g = gaussian_matrix(rng, n, n) * (0.5 / (n as f64).sqrt());
    let mut w = Matrix::zeros(2 * n, n);
    w.view_mut((0, 0), (n, n)).copy_from(&Matrix::identity(n, n));
    w.view_mut((n, 0), (n, n)).copy_from(&g);
    let s = Vector::from_fn(n, |j, _| {
        if star[j] == 0.0 {
            rng.random_range(-0.5..0.5)
        } else {
            star[j].signum()
        }
    });
    // minimal-norm r with Wᵀr = λs, then b = W·star + r
    let chol = Cholesky::new(w.transpose() * &w)
        .ok_or_else(|| Error::Generation("WᵀW not positive definite".into()))?;
    let r = &w * chol.solve(&(s * lambda));
    let b = &w * star + r;
    Ok(Component {
        a: ForwardOp::least_squares(w, b)?,
        b: SetValuedOp::l1(lambda),
    })
}

/// Random instance with a planted common solution `x*`.
pub fn generate_planted_system(n: usize, m: usize, seed: u64, structure: Structure) -> Result<ProblemInstance> {
    if n == 0 || m == 0 {
        return Err(Error::Generation(format!("need n >= 1 and m >= 1, got n={n}, m={m}")));
    }
    if structure == Structure::MixedL1 && m < 2 {
        return Err(Error::Generation(
            "mixed_l1 pairs the l1 component with at least one affine component, need m >= 2".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut star = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let lambda = 0.5;
    if structure == Structure::MixedL1 {
        // sparse plant so the l1 kinks are exercised
        for j in 0..n {
            if rng.random_bool(0.3) {
                star[j] = 0.0;
            }
        }
    }
    let x_lo = Vector::from_fn(n, |j, _| star[j] - rng.random_range(0.5..1.5));
    let x_hi = Vector::from_fn(n, |j, _| star[j] + rng.random_range(0.5..1.5));

    let mut components = Vec::with_capacity(m);
    let mut radius = 1.0;
    if structure == Structure::MixedL1 {
        components.push(planted_l1_component(&mut rng, &star, lambda)?);
        radius = lambda * (n as f64).sqrt() + 1.0;
    }
    while components.len() < m {
        let mat = monotone_matrix(&mut rng, n);
        let q = -(&mat * &star);
        components.push(Component {
            a: ForwardOp::affine(mat, q)?,
            b: SetValuedOp::normal_cone(covering_set(&mut rng, &x_lo, &x_hi)),
        });
    }

    let inst = ProblemInstance {
        name: format!("{structure}_n{n}_m{m}_s{seed}"),
        n,
        m,
        seed: Some(seed),
        x_set: ConvexSet::Box { lo: x_lo, hi: x_hi },
        components,
        known_solution: Some(star),
        radius,
    };
    inst.validate(false)?;
    check_planted(&inst)?;
    Ok(inst)
}

/// Generator postconditions: planted residual and `X ⊆ ∩Cᵢ`.
pub fn check_planted(inst: &ProblemInstance) -> Result<()> {
    let beta = AlgoParams::default().beta_mid();
    match inst.planted_residual(beta)? {
        Some(r) if r <= PLANTED_TOL => {}
        Some(r) => return Err(Error::Generation(format!("planted residual {r:e} too large"))),
        None => return Err(Error::Generation("no planted solution".into())),
    }
    for (i, c) in inst.components.iter().enumerate() {
        if let SetValuedOp::NormalCone { set } = &c.b {
            if inst.x_set.is_subset_of(set, 0.0) != Some(true) {
                return Err(Error::Generation(format!("X not inside C_{}", i + 1)));
            }
        }
    }
    Ok(())
}

/// The fixed acceptance suite: seeds 1–20 cycling through
/// `n ∈ {2, 10, 50}` and `m ∈ {1, 2, 5}`; even seeds with `m >= 2` are
/// mixed_l1, the rest affine_vi.
pub fn default_suite() -> Vec<(u64, usize, usize, Structure)> {
    const NS: [usize; 3] = [2, 10, 50];
    const MS: [usize; 3] = [1, 2, 5];
    (1..=20u64)
        .map(|seed| {
            let i = (seed - 1) as usize;
            let m = MS[(i / 3) % 3];
            let structure = if seed % 2 == 0 && m >= 2 {
                Structure::MixedL1
            } else {
                Structure::AffineVi
            };
            (seed, NS[i % 3], m, structure)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    pub iters: usize,
    pub step0: f64,
    /// Early exit once the residual at `step0` falls below this.
    pub tol: f64,
    /// Grid cross-check for `n ≤ 2`.
    pub grid_check: bool,
}

impl OracleOptions {
    /// Step scaled to the largest operator norm bound of the instance.
    pub fn for_instance(inst: &ProblemInstance) -> Self {
        let l = inst
            .components
            .iter()
            .map(|c| c.a.lipschitz_bound())
            .fold(0.0f64, f64::max)
            .max(1e-12);
        OracleOptions {
            iters: 200_000,
            step0: 1.0 / l,
            tol: 1e-11,
            grid_check: true,
        }
    }
}

/// Maximum final residual the oracle may report.
pub const ORACLE_TOL: f64 = 1e-4;

/// Approximate common solution by round-robin forward-backward passes
/// `x ← (I + βₜBᵢ)⁻¹(x − βₜAᵢ(x))`, `βₜ = step0/√t`, projected onto `X`.
///
/// Uses neither the linesearch nor halfspace projections. For `n ≤ 2` the
/// result is cross-checked by a refining grid search on the max component
/// residual over `X`'s bounding box.
pub fn oracle_solve(inst: &ProblemInstance, opts: &OracleOptions) -> Result<Vector> {
    let mut x = inst.default_start();
    let check_every = 50;
    for t in 1..=opts.iters {
        let beta = opts.step0 / (t as f64).sqrt();
        for c in &inst.components {
            x = forward_backward_map(&c.a, &c.b, beta, &x)?;
        }
        x = inst.x_set.project(&x)?;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::OracleFailure { residual: f64::INFINITY });
        }
        if t % check_every == 0 && residual(inst, opts.step0, &x)? <= opts.tol {
            break;
        }
    }
    let res = residual(inst, opts.step0, &x)?;
    if res > ORACLE_TOL {
        return Err(Error::OracleFailure { residual: res });
    }
    if opts.grid_check && inst.n <= 2 {
        let g = grid_search(inst, opts.step0)?;
        // grid resolution after refinement is ~1e-5
        if (&g - &x).norm() > 1e-3 {
            return Err(Error::OracleFailure { residual: res });
        }
    }
    Ok(x)
}

/// Coarse-to-fine grid minimization of the max component residual.
pub fn grid_search(inst: &ProblemInstance, beta: f64) -> Result<Vector> {
    let (mut lo, mut hi) = inst.working_box();
    let pts = 41usize;
    let mut best = lo.clone();
    for _ in 0..12 {
        let mut best_val = f64::INFINITY;
        let axis = |j: usize, s: usize| lo[j] + (hi[j] - lo[j]) * s as f64 / (pts - 1) as f64;
        let total = pts.pow(inst.n as u32);
        for idx in 0..total {
            let mut rem = idx;
            let p = Vector::from_fn(inst.n, |j, _| {
                let s = rem % pts;
                rem /= pts;
                axis(j, s)
            });
            let p = inst.x_set.project(&p)?;
            let v = residual(inst, beta, &p)?;
            if v < best_val {
                best_val = v;
                best = p;
            }
        }
        // zoom to a window of four cells around the incumbent
        let half = (&hi - &lo) * (2.0 / (pts - 1) as f64);
        lo = &best - &half;
        hi = &best + &half;
    }
    Ok(best)
}

/// Summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub final_residual: f64,
    pub iterations: usize,
    pub linesearch_total: usize,
    pub max_linesearch_j: usize,
    pub fejer_violations: usize,
    pub dist_to_star: Vec<f64>,
    /// Volatile.
    pub wall_time_ms: f64,
}

pub fn evaluate_run(trace: &SolveTrace, instance: &ProblemInstance) -> Result<Metrics> {
    let last = trace
        .last()
        .ok_or_else(|| Error::Config("empty trace".into()))?;
    let dist_to_star: Vec<f64> = match &instance.known_solution {
        Some(s) => trace.records.iter().map(|r| (&r.x - s).norm()).collect(),
        None => Vec::new(),
    };
    let fejer_violations = dist_to_star
        .windows(2)
        .filter(|w| w[1] > w[0] + FEJER_SLACK)
        .count();
    Ok(Metrics {
        final_residual: last.residual,
        iterations: trace.len() - 1,
        linesearch_total: trace.records.iter().map(|r| r.linesearch_total()).sum(),
        max_linesearch_j: trace
            .records
            .iter()
            .flat_map(|r| r.linesearch_j.iter().flatten().copied())
            .max()
            .unwrap_or(0),
        fejer_violations,
        dist_to_star,
        wall_time_ms: last.elapsed_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, IterationRecord};
    use nalgebra::dvector;

    #[test]
    fn identity_instance_has_zero_residual_at_plant() {
        let inst = ProblemInstance::new(
            "id",
            2,
            vec![Component {
                a: ForwardOp::identity(2),
                b: SetValuedOp::normal_cone(ConvexSet::cube(2, -1.0, 1.0)),
            }],
            ConvexSet::cube(2, -1.0, 1.0),
            Some(Vector::zeros(2)),
            1.0,
        )
        .unwrap();
        assert_eq!(inst.planted_residual(0.55).unwrap(), Some(0.0));
    }

    #[test]
    fn generated_instances_pass_validation() {
        for (n, m, seed) in [(2, 1, 1), (2, 2, 2), (10, 3, 42), (5, 2, 3)] {
            for s in [Structure::AffineVi, Structure::MixedL1] {
                if s == Structure::MixedL1 && m == 1 {
                    continue;
                }
                let inst = generate_planted_system(n, m, seed, s).unwrap();
                assert_eq!(inst.components.len(), m);
                assert!(inst.planted_residual(0.55).unwrap().unwrap() <= PLANTED_TOL);
                assert!(inst.domain_warnings().is_empty());
                let l1 = inst.components.iter().filter(|c| matches!(c.b, SetValuedOp::L1 { .. })).count();
                assert_eq!(l1, usize::from(s == Structure::MixedL1));
            }
        }
    }

    #[test]
    fn generator_rejects_empty_systems() {
        assert!(generate_planted_system(2, 0, 1, Structure::AffineVi).is_err());
        assert!(generate_planted_system(0, 1, 1, Structure::AffineVi).is_err());
        assert!(generate_planted_system(3, 1, 1, Structure::MixedL1).is_err());
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_planted_system(10, 3, 9, Structure::MixedL1).unwrap();
        let b = generate_planted_system(10, 3, 9, Structure::MixedL1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn default_suite_covers_the_grid() {
        let suite = default_suite();
        assert_eq!(suite.len(), 20);
        for n in [2, 10, 50] {
            for m in [1, 2, 5] {
                assert!(suite.iter().any(|c| c.1 == n && c.2 == m));
            }
            for s in [Structure::AffineVi, Structure::MixedL1] {
                assert!(suite.iter().any(|c| c.1 == n && c.3 == s));
            }
        }
    }

    #[test]
    fn oracle_finds_shifted_identity_zero() {
        let a = dvector![0.5, -0.25];
        let inst = ProblemInstance::new(
            "shift",
            2,
            vec![Component { a: ForwardOp::shifted_identity(&a), b: SetValuedOp::Zero }],
            ConvexSet::cube(2, -2.0, 2.0),
            None,
            1.0,
        )
        .unwrap();
        let x = oracle_solve(&inst, &OracleOptions::for_instance(&inst)).unwrap();
        assert!((&x - &a).norm() <= 1e-6);
    }

    #[test]
    fn oracle_solves_two_component_example_and_agrees_with_grid() {
        let inst = ProblemInstance::new(
            "two",
            2,
            vec![
                Component {
                    a: ForwardOp::identity(2),
                    b: SetValuedOp::normal_cone(ConvexSet::cube(2, -1.0, 1.0)),
                },
                Component {
                    a: ForwardOp::affine(Matrix::identity(2, 2) * 2.0, Vector::zeros(2)).unwrap(),
                    b: SetValuedOp::normal_cone(ConvexSet::ball(Vector::zeros(2), 1.0)),
                },
            ],
            ConvexSet::cube(2, -2.0, 2.0),
            Some(Vector::zeros(2)),
            1.0,
        )
        .unwrap();
        let x = oracle_solve(&inst, &OracleOptions::for_instance(&inst)).unwrap();
        assert!(x.norm() <= 1e-4);
        let g = grid_search(&inst, 0.5).unwrap();
        assert!(g.norm() <= 1e-3);
    }

    #[test]
    fn oracle_recovers_planted_solutions() {
        for s in [Structure::AffineVi, Structure::MixedL1] {
            let inst = generate_planted_system(6, 2, 5, s).unwrap();
            let x = oracle_solve(&inst, &OracleOptions::for_instance(&inst)).unwrap();
            assert!((&x - inst.known_solution.as_ref().unwrap()).norm() <= 1e-4);
        }
    }

    #[test]
    fn oracle_reports_failure_when_starved() {
        let inst = generate_planted_system(10, 3, 4, Structure::AffineVi).unwrap();
        let opts = OracleOptions {
            iters: 1,
            ..OracleOptions::for_instance(&inst)
        };
        assert!(matches!(oracle_solve(&inst, &opts), Err(Error::OracleFailure { .. })));
    }

    #[test]
    fn evaluate_run_counts() {
        let inst = generate_planted_system(4, 2, 11, Structure::AffineVi).unwrap();
        let out = solve(&inst, &AlgoParams::default(), &inst.default_start()).unwrap();
        let m = evaluate_run(&out.trace, &inst).unwrap();
        assert_eq!(m.fejer_violations, 0);
        assert!(m.final_residual <= 1e-6);
        assert_eq!(m.iterations, out.iterations());

        let star = inst.known_solution.clone().unwrap();
        let out = solve(&inst, &AlgoParams::default(), &star).unwrap();
        let m = evaluate_run(&out.trace, &inst).unwrap();
        assert_eq!(m.iterations, 0);
        assert!(m.final_residual <= 1e-8);

        let mut trace = SolveTrace::default();
        for (k, d) in [3.0, 2.0, 2.5, 1.0].into_iter().enumerate() {
            let mut x = star.clone();
            x[0] += d;
            trace.records.push(IterationRecord {
                k,
                x,
                residual: 1.0,
                beta: 0.5,
                component_residuals: vec![],
                linesearch_j: vec![],
                dist_to_star: None,
                elapsed_ms: 0.0,
            });
        }
        assert_eq!(evaluate_run(&trace, &inst).unwrap().fejer_violations, 1);
        assert!(evaluate_run(&SolveTrace::default(), &inst).is_err());
    }

    #[test]
    fn json_round_trip_preserves_solver_trace() {
        let inst = generate_planted_system(5, 3, 8, Structure::MixedL1).unwrap();
        let back = ProblemInstance::from_json(&inst.to_json().unwrap(), false).unwrap();
        assert_eq!(back, inst);
        let p = AlgoParams::default();
        let a = solve(&inst, &p, &inst.default_start()).unwrap();
        let b = solve(&back, &p, &back.default_start()).unwrap();
        assert_eq!(a.trace.records.len(), b.trace.records.len());
        for (ra, rb) in a.trace.records.iter().zip(&b.trace.records) {
            assert_eq!(ra.x, rb.x);
            assert_eq!(ra.residual.to_bits(), rb.residual.to_bits());
        }
    }

    #[test]
    fn non_monotone_instance_needs_opt_in() {
        let mut inst = generate_planted_system(2, 1, 3, Structure::AffineVi).unwrap();
        inst.components[0].a = ForwardOp::affine_unchecked(-Matrix::identity(2, 2), Vector::zeros(2));
        let json = inst.to_json().unwrap();
        assert!(matches!(ProblemInstance::from_json(&json, false), Err(Error::NotMonotone { .. })));
        assert!(ProblemInstance::from_json(&json, true).is_ok());
    }

    #[test]
    fn instance_schema_field_names() {
        let inst = generate_planted_system(2, 1, 1, Structure::AffineVi).unwrap();
        let v: serde_json::Value = serde_json::from_str(&inst.to_json().unwrap()).unwrap();
        for key in ["name", "n", "m", "seed", "X", "components", "known_solution", "R"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["components"][0].get("A").is_some());
        assert!(v["components"][0].get("B").is_some());
    }
}
