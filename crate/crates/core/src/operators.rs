//! Operator interfaces and the catalog of concrete monotone operators.
//!
//! A component of an inclusion system is a pair `(A, B)`: `A` is evaluated
//! directly (forward step), `B` only through its resolvent `(I + βB)⁻¹`
//! (backward step) and through a bounded selection `u ∈ B(x)`, `‖u‖ ≤ R`.

use serde::{Deserialize, Serialize};

use crate::geometry::ConvexSet;
use crate::{check_dim, serde_la, Error, Matrix, Result, Vector};

/// Symmetric parts with an eigenvalue below `-MONOTONE_TOL` are rejected.
pub const MONOTONE_TOL: f64 = 1e-10;
/// Membership tolerance used by normal-cone selections.
pub const DOMAIN_TOL: f64 = 1e-9;

/// Point-to-point monotone map.
pub trait ForwardOperator: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &Vector) -> Result<Vector>;
}

/// Maximal monotone set-valued operator known through oracles.
pub trait SetValuedOperator: Send + Sync {
    /// Fixed dimension, if the operator carries one.
    fn dim(&self) -> Option<usize>;

    /// `(I + βB)⁻¹(x)`.
    fn resolvent(&self, beta: f64, x: &Vector) -> Result<Vector>;

    /// Some `u ∈ B(x)` with `‖u‖ ≤ radius`. Deterministic minimal-norm choice.
    fn selection(&self, x: &Vector, radius: f64) -> Result<Vector>;

    /// Structural test of `u ∈ B(x)`.
    fn in_graph(&self, x: &Vector, u: &Vector, tol: f64) -> Result<bool>;
}

/// Catalog of forward operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForwardOp {
    /// `x ↦ Mx + q`.
    Affine {
        #[serde(rename = "M", with = "serde_la::matrix")]
        m: Matrix,
        #[serde(with = "serde_la::vector")]
        q: Vector,
    },
    /// Gradient of `½‖Wx − b‖²`, i.e. `x ↦ Wᵀ(Wx − b)`.
    LeastSquares {
        #[serde(rename = "W", with = "serde_la::matrix")]
        w: Matrix,
        #[serde(with = "serde_la::vector")]
        b: Vector,
    },
}

impl ForwardOp {
    /// Affine map with a monotonicity check on the symmetric part of `m`.
    pub fn affine(m: Matrix, q: Vector) -> Result<Self> {
        let op = ForwardOp::Affine { m, q };
        op.validate()?;
        Ok(op)
    }

    /// Affine map without the monotonicity check.
    pub fn affine_unchecked(m: Matrix, q: Vector) -> Self {
        ForwardOp::Affine { m, q }
    }

    pub fn least_squares(w: Matrix, b: Vector) -> Result<Self> {
        let op = ForwardOp::LeastSquares { w, b };
        op.validate_shape()?;
        Ok(op)
    }

    pub fn identity(n: usize) -> Self {
        ForwardOp::Affine {
            m: Matrix::identity(n, n),
            q: Vector::zeros(n),
        }
    }

    /// `x ↦ x − a`.
    pub fn shifted_identity(a: &Vector) -> Self {
        ForwardOp::Affine {
            m: Matrix::identity(a.len(), a.len()),
            q: -a,
        }
    }

    pub fn zero(n: usize) -> Self {
        ForwardOp::Affine {
            m: Matrix::zeros(n, n),
            q: Vector::zeros(n),
        }
    }

    /// Linear part of the map.
    pub fn matrix(&self) -> Matrix {
        match self {
            ForwardOp::Affine { m, .. } => m.clone(),
            ForwardOp::LeastSquares { w, .. } => w.transpose() * w,
        }
    }

    pub fn validate_shape(&self) -> Result<()> {
        match self {
            ForwardOp::Affine { m, q } => {
                check_dim(m.nrows(), m.ncols())?;
                check_dim(m.nrows(), q.len())?;
                if m.iter().chain(q.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::Config("affine map has non-finite entries".into()));
                }
            }
            ForwardOp::LeastSquares { w, b } => {
                check_dim(w.nrows(), b.len())?;
                if w.iter().chain(b.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::Config("least-squares map has non-finite entries".into()));
                }
            }
        }
        if self.dim() == 0 {
            return Err(Error::Config("operator dimension must be at least 1".into()));
        }
        Ok(())
    }

    /// Shape checks plus monotonicity of the linear part.
    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        let min_eigenvalue = self.min_symmetric_eigenvalue();
        if min_eigenvalue < -MONOTONE_TOL {
            return Err(Error::NotMonotone { min_eigenvalue });
        }
        Ok(())
    }

    /// Smallest eigenvalue of `(M + Mᵀ)/2`.
    pub fn min_symmetric_eigenvalue(&self) -> f64 {
        self.min_symmetric_eigenpair().0
    }

    /// Smallest eigenvalue of the symmetric part and a unit eigenvector for it.
    pub fn min_symmetric_eigenpair(&self) -> (f64, Vector) {
        let m = self.matrix();
        let sym = (&m + m.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let (idx, val) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty matrix");
        (val, eig.eigenvectors.column(idx).into_owned())
    }

    /// Frobenius norm of the linear part; an upper bound on the Lipschitz constant.
    pub fn lipschitz_bound(&self) -> f64 {
        match self {
            ForwardOp::Affine { m, .. } => m.norm(),
            ForwardOp::LeastSquares { w, .. } => w.norm_squared(),
        }
    }
}

impl ForwardOperator for ForwardOp {
    fn dim(&self) -> usize {
        match self {
            ForwardOp::Affine { q, .. } => q.len(),
            ForwardOp::LeastSquares { w, .. } => w.ncols(),
        }
    }

    fn eval(&self, x: &Vector) -> Result<Vector> {
        match self {
            ForwardOp::Affine { m, q } => affine_eval(m, q, x),
            ForwardOp::LeastSquares { w, b } => {
                check_dim(w.ncols(), x.len())?;
                Ok(w.tr_mul(&(w * x - b)))
            }
        }
    }
}

/// Catalog of set-valued operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetValuedOp {
    /// `B ≡ {0}`.
    Zero,
    /// Normal cone `N_C`.
    NormalCone { set: ConvexSet },
    /// `λ ∂‖·‖₁`.
    L1 { lambda: f64 },
}

impl SetValuedOp {
    pub fn normal_cone(set: ConvexSet) -> Self {
        SetValuedOp::NormalCone { set }
    }

    pub fn l1(lambda: f64) -> Self {
        SetValuedOp::L1 { lambda }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SetValuedOp::Zero => Ok(()),
            SetValuedOp::NormalCone { set } => set.validate(),
            SetValuedOp::L1 { lambda } => {
                if lambda.is_finite() && *lambda > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!("l1 weight must be positive, got {lambda}")))
                }
            }
        }
    }

    /// Smallest radius for which the selection is defined everywhere on its domain.
    pub fn min_radius(&self, n: usize) -> f64 {
        match self {
            SetValuedOp::L1 { lambda } => lambda * (n as f64).sqrt(),
            _ => 0.0,
        }
    }

    /// Domain of the operator as a convex set.
    pub fn domain(&self, n: usize) -> ConvexSet {
        match self {
            SetValuedOp::NormalCone { set } => set.clone(),
            _ => ConvexSet::whole_space(n),
        }
    }
}

impl SetValuedOperator for SetValuedOp {
    fn dim(&self) -> Option<usize> {
        match self {
            SetValuedOp::NormalCone { set } => Some(set.dim()),
            _ => None,
        }
    }

    fn resolvent(&self, beta: f64, x: &Vector) -> Result<Vector> {
        if !(beta > 0.0) {
            return Err(Error::Config(format!("resolvent step must be positive, got {beta}")));
        }
        match self {
            SetValuedOp::Zero => Ok(x.clone()),
            SetValuedOp::NormalCone { set } => resolvent_normal_cone(set, beta, x),
            SetValuedOp::L1 { lambda } => Ok(soft_threshold(*lambda, beta, x)),
        }
    }

    fn selection(&self, x: &Vector, radius: f64) -> Result<Vector> {
        match self {
            SetValuedOp::Zero => Ok(Vector::zeros(x.len())),
            SetValuedOp::NormalCone { set } => selection_normal_cone(set, x, radius),
            SetValuedOp::L1 { lambda } => selection_l1(*lambda, x, radius),
        }
    }

    fn in_graph(&self, x: &Vector, u: &Vector, tol: f64) -> Result<bool> {
        check_dim(x.len(), u.len())?;
        Ok(match self {
            SetValuedOp::Zero => u.amax() <= tol,
            // u ∈ N_C(x)  ⟺  x ∈ C and P_C(x + u) = x
            SetValuedOp::NormalCone { set } => {
                set.contains(x, tol)? && (set.project(&(x + u))? - x).amax() <= tol
            }
            SetValuedOp::L1 { lambda } => x.iter().zip(u.iter()).all(|(&xj, &uj)| {
                if xj == 0.0 {
                    uj.abs() <= lambda + tol
                } else {
                    (uj - lambda * xj.signum()).abs() <= tol
                }
            }),
        })
    }
}

pub fn affine_eval(m: &Matrix, q: &Vector, x: &Vector) -> Result<Vector> {
    check_dim(m.ncols(), x.len())?;
    check_dim(m.nrows(), q.len())?;
    Ok(m * x + q)
}

/// The resolvent of a normal cone is the projection onto its set, for every `beta`.
pub fn resolvent_normal_cone(set: &ConvexSet, _beta: f64, x: &Vector) -> Result<Vector> {
    set.project(x)
}

/// Resolvent of `λ∂‖·‖₁` with step `beta`: componentwise shrinkage by `beta·lambda`.
pub fn soft_threshold(lambda: f64, beta: f64, x: &Vector) -> Vector {
    let t = beta * lambda;
    x.map(|v| v.signum() * (v.abs() - t).max(0.0))
}

/// The zero vector, which lies in `N_C(x)` for every `x ∈ C`.
pub fn selection_normal_cone(set: &ConvexSet, x: &Vector, _radius: f64) -> Result<Vector> {
    let distance = set.distance(x)?;
    if distance > DOMAIN_TOL {
        return Err(Error::Domain { distance });
    }
    Ok(Vector::zeros(x.len()))
}

/// Minimal-norm subgradient `λ·sign(x)` (zero at the kinks) of `λ‖·‖₁`.
pub fn selection_l1(lambda: f64, x: &Vector, radius: f64) -> Result<Vector> {
    let needed = lambda * (x.len() as f64).sqrt();
    if radius < needed {
        return Err(Error::Config(format!(
            "selection radius {radius} is below lambda*sqrt(n) = {needed}"
        )));
    }
    Ok(x.map(|v| if v == 0.0 { 0.0 } else { lambda * v.signum() }))
}

/// `(I + βB)⁻¹(z − βA(z))`.
pub fn forward_backward_map(
    a: &dyn ForwardOperator,
    b: &dyn SetValuedOperator,
    beta: f64,
    z: &Vector,
) -> Result<Vector> {
    let forward = a.eval(z)?;
    check_dim(z.len(), forward.len())?;
    b.resolvent(beta, &(z - forward * beta))
}
