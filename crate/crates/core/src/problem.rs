//! Concave-convex functions with two derivatives.
//!
//! A [`SaddleProblem`] bundles φ(x, y) with its gradients and Hessian blocks.
//! The ascent-descent field is f(z) = [φ_x, -φ_y]ᵀ and its Jacobian splits
//! into a skew-symmetric coupling block A(z) and a symmetric curvature block
//! B(z):
//!
//! ```text
//! A(z) = [ 0        φ_xy ]      B(z) = [ φ_xx   0     ]
//!        [ -φ_yx    0    ]             [ 0     -φ_yy  ]
//! ```

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::domain::{BoxDomain, PinSide, BOUNDARY_TOL};
use crate::error::{Error, Result};

pub type ValueFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type HessFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// A C² concave-convex function with callbacks for both derivative orders.
///
/// Callbacks must be pure; values are immutable and cheap to clone (the
/// closures are shared), so problems can be evaluated concurrently.
#[derive(Clone)]
pub struct SaddleProblem {
    n: usize,
    m: usize,
    value: ValueFn,
    grad_x: GradFn,
    grad_y: GradFn,
    hess_xx: HessFn,
    hess_xy: HessFn,
    hess_yy: HessFn,
    quadratic: bool,
}

impl std::fmt::Debug for SaddleProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SaddleProblem")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("quadratic", &self.quadratic)
            .finish()
    }
}

impl SaddleProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn from_callbacks(
        n: usize,
        m: usize,
        value: ValueFn,
        grad_x: GradFn,
        grad_y: GradFn,
        hess_xx: HessFn,
        hess_xy: HessFn,
        hess_yy: HessFn,
    ) -> Self {
        Self {
            n,
            m,
            value,
            grad_x,
            grad_y,
            hess_xx,
            hess_xy,
            hess_yy,
            quadratic: false,
        }
    }

    pub(crate) fn mark_quadratic(mut self) -> Self {
        self.quadratic = true;
        self
    }

    pub fn primal_dim(&self) -> usize {
        self.n
    }

    pub fn dual_dim(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    /// Constant Hessian blocks (A and B do not depend on z).
    pub fn is_quadratic(&self) -> bool {
        self.quadratic
    }

    pub fn split(&self, z: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok((
            DVector::from_iterator(self.n, z.iter().take(self.n).cloned()),
            DVector::from_iterator(self.m, z.iter().skip(self.n).cloned()),
        ))
    }

    pub fn value(&self, z: &DVector<f64>) -> Result<f64> {
        let (x, y) = self.split(z)?;
        Ok((self.value)(&x, &y))
    }

    pub fn grad_x(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let (x, y) = self.split(z)?;
        Ok((self.grad_x)(&x, &y))
    }

    pub fn grad_y(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let (x, y) = self.split(z)?;
        Ok((self.grad_y)(&x, &y))
    }

    pub fn hess_xx(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (x, y) = self.split(z)?;
        Ok((self.hess_xx)(&x, &y))
    }

    pub fn hess_xy(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (x, y) = self.split(z)?;
        Ok((self.hess_xy)(&x, &y))
    }

    pub fn hess_yy(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (x, y) = self.split(z)?;
        Ok((self.hess_yy)(&x, &y))
    }

    /// The ascent-descent field f(z) = [φ_x, -φ_y]ᵀ.
    pub fn gradient_field(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let (x, y) = self.split(z)?;
        let gx = (self.grad_x)(&x, &y);
        let gy = (self.grad_y)(&x, &y);
        let mut f = DVector::zeros(self.dim());
        f.rows_mut(0, self.n).copy_from(&gx);
        f.rows_mut(self.n, self.m).copy_from(&(-gy));
        Ok(f)
    }

    /// Skew-symmetric coupling block of the field Jacobian.
    pub fn matrix_a(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (x, y) = self.split(z)?;
        let hxy = (self.hess_xy)(&x, &y);
        let mut a = DMatrix::zeros(self.dim(), self.dim());
        a.view_mut((0, self.n), (self.n, self.m)).copy_from(&hxy);
        a.view_mut((self.n, 0), (self.m, self.n))
            .copy_from(&(-hxy.transpose()));
        Ok(a)
    }

    /// Symmetric curvature block of the field Jacobian (negative semidefinite).
    pub fn matrix_b(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (x, y) = self.split(z)?;
        let hxx = (self.hess_xx)(&x, &y);
        let hyy = (self.hess_yy)(&x, &y);
        let mut b = DMatrix::zeros(self.dim(), self.dim());
        b.view_mut((0, 0), (self.n, self.n)).copy_from(&hxx);
        b.view_mut((self.n, self.n), (self.m, self.m))
            .copy_from(&(-hyy));
        Ok(b)
    }

    /// Jacobian of the field, A(z) + B(z).
    pub fn field_jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.matrix_a(z)? + self.matrix_b(z)?)
    }

    /// First-order test for a K-restricted saddle point: the field lies in
    /// the normal cone of the box at z.
    pub fn is_restricted_saddle(
        &self,
        domain: &BoxDomain,
        z: &DVector<f64>,
        tol: f64,
    ) -> Result<bool> {
        if domain.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: domain.dim(),
            });
        }
        if !domain.contains(z, BOUNDARY_TOL) {
            return Err(Error::OutsideDomain(
                "is_restricted_saddle: z outside the domain".into(),
            ));
        }
        let f = self.gradient_field(z)?;
        let pins = domain.active_pins(z);
        for i in 0..self.dim() {
            let ok = match pins[i] {
                _ if domain.is_degenerate(i) => true,
                Some(PinSide::AtLower) => f[i] <= tol,
                Some(PinSide::AtUpper) => f[i] >= -tol,
                None => f[i].abs() <= tol,
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Check the supplied derivatives against finite differences and the
    /// concave-convexity sign conditions at the given samples.
    pub fn validate_derivatives(&self, samples: &[DVector<f64>]) -> DerivativeReport {
        const H: f64 = 1e-5;
        let mut report = DerivativeReport::default();
        for z in samples {
            let Ok(grad) = self.full_gradient(z) else {
                report.failures.push("dimension mismatch in sample".into());
                continue;
            };
            // Gradient vs central differences of the value.
            for i in 0..self.dim() {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[i] += H;
                zm[i] -= H;
                let fd = (self.value(&zp).unwrap() - self.value(&zm).unwrap()) / (2.0 * H);
                let err = (grad[i] - fd).abs() / grad[i].abs().max(1.0);
                report.max_grad_rel_err = report.max_grad_rel_err.max(err);
            }
            // Hessian blocks vs central differences of the gradient.
            let hess = self.full_hessian(z);
            for i in 0..self.dim() {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[i] += H;
                zm[i] -= H;
                let col_fd = (self.full_gradient(&zp).unwrap()
                    - self.full_gradient(&zm).unwrap())
                    / (2.0 * H);
                for j in 0..self.dim() {
                    let err = (hess[(j, i)] - col_fd[j]).abs() / hess[(j, i)].abs().max(1.0);
                    report.max_hess_rel_err = report.max_hess_rel_err.max(err);
                }
            }
            // Concave-convexity via extreme eigenvalues.
            let exx = nalgebra::SymmetricEigen::new(self.hess_xx(z).unwrap());
            let max_xx = exx.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if max_xx > 1e-8 {
                report
                    .failures
                    .push(format!("hess_xx has positive eigenvalue {max_xx:.3e}"));
            }
            if self.m > 0 {
                let eyy = nalgebra::SymmetricEigen::new(self.hess_yy(z).unwrap());
                let min_yy = eyy.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
                if min_yy < -1e-8 {
                    report
                        .failures
                        .push(format!("hess_yy has negative eigenvalue {min_yy:.3e}"));
                }
            }
        }
        if report.max_grad_rel_err > 1e-4 {
            report
                .failures
                .push(format!("gradient mismatch {:.3e}", report.max_grad_rel_err));
        }
        if report.max_hess_rel_err > 1e-3 {
            report
                .failures
                .push(format!("hessian mismatch {:.3e}", report.max_hess_rel_err));
        }
        report
    }

    /// Gradient of φ itself, [φ_x; φ_y].
    fn full_gradient(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let (x, y) = self.split(z)?;
        let gx = (self.grad_x)(&x, &y);
        let gy = (self.grad_y)(&x, &y);
        let mut g = DVector::zeros(self.dim());
        g.rows_mut(0, self.n).copy_from(&gx);
        g.rows_mut(self.n, self.m).copy_from(&gy);
        Ok(g)
    }

    /// Full Hessian of φ assembled from the blocks.
    fn full_hessian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let hxx = self.hess_xx(z).unwrap();
        let hxy = self.hess_xy(z).unwrap();
        let hyy = self.hess_yy(z).unwrap();
        let mut h = DMatrix::zeros(self.dim(), self.dim());
        h.view_mut((0, 0), (self.n, self.n)).copy_from(&hxx);
        h.view_mut((0, self.n), (self.n, self.m)).copy_from(&hxy);
        h.view_mut((self.n, 0), (self.m, self.n))
            .copy_from(&hxy.transpose());
        h.view_mut((self.n, self.n), (self.m, self.m)).copy_from(&hyy);
        h
    }
}

/// Result of [`SaddleProblem::validate_derivatives`].
#[derive(Debug, Clone, Default)]
pub struct DerivativeReport {
    pub max_grad_rel_err: f64,
    pub max_hess_rel_err: f64,
    pub failures: Vec<String>,
}

impl DerivativeReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// φ(x, y) = ½ xᵀP x - ½ yᵀQ y + xᵀR y + pᵀx + qᵀy.
#[derive(Debug, Clone)]
pub struct QuadraticSaddle {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub lin_p: DVector<f64>,
    pub lin_q: DVector<f64>,
}

impl QuadraticSaddle {
    pub fn new(
        p: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        lin_p: DVector<f64>,
        lin_q: DVector<f64>,
    ) -> Result<Self> {
        let n = p.nrows();
        let m = q.nrows();
        if p.ncols() != n || q.ncols() != m || r.nrows() != n || r.ncols() != m {
            return Err(Error::InvalidInput("quadratic block dimensions disagree".into()));
        }
        if lin_p.len() != n || lin_q.len() != m {
            return Err(Error::InvalidInput("linear term dimensions disagree".into()));
        }
        if (&p - p.transpose()).norm() > 1e-10 || (&q - q.transpose()).norm() > 1e-10 {
            return Err(Error::InvalidInput("P and Q must be symmetric".into()));
        }
        let max_p = nalgebra::SymmetricEigen::new(p.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let min_q = if m > 0 {
            nalgebra::SymmetricEigen::new(q.clone())
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
        } else {
            0.0
        };
        if max_p > 1e-8 || min_q < -1e-8 {
            return Err(Error::InvalidInput(
                "P must be negative semidefinite and Q positive semidefinite".into(),
            ));
        }
        Ok(Self { p, q, r, lin_p, lin_q })
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn m(&self) -> usize {
        self.q.nrows()
    }

    pub fn to_problem(&self) -> SaddleProblem {
        let (p, q, r) = (self.p.clone(), self.q.clone(), self.r.clone());
        let (lp, lq) = (self.lin_p.clone(), self.lin_q.clone());
        let (n, m) = (self.n(), self.m());
        let value = {
            let (p, q, r, lp, lq) = (p.clone(), q.clone(), r.clone(), lp.clone(), lq.clone());
            Arc::new(move |x: &DVector<f64>, y: &DVector<f64>| {
                0.5 * x.dot(&(&p * x)) - 0.5 * y.dot(&(&q * y)) + x.dot(&(&r * y))
                    + lp.dot(x)
                    + lq.dot(y)
            }) as ValueFn
        };
        let grad_x = {
            let (p, r, lp) = (p.clone(), r.clone(), lp.clone());
            Arc::new(move |x: &DVector<f64>, y: &DVector<f64>| &p * x + &r * y + &lp) as GradFn
        };
        let grad_y = {
            let (q, r, lq) = (q.clone(), r.clone(), lq.clone());
            Arc::new(move |x: &DVector<f64>, y: &DVector<f64>| -(&q * y) + r.transpose() * x + &lq)
                as GradFn
        };
        let hess_xx = {
            let p = p.clone();
            Arc::new(move |_: &DVector<f64>, _: &DVector<f64>| p.clone()) as HessFn
        };
        let hess_xy = {
            let r = r.clone();
            Arc::new(move |_: &DVector<f64>, _: &DVector<f64>| r.clone()) as HessFn
        };
        let hess_yy = {
            let q = q.clone();
            Arc::new(move |_: &DVector<f64>, _: &DVector<f64>| -q.clone()) as HessFn
        };
        SaddleProblem::from_callbacks(n, m, value, grad_x, grad_y, hess_xx, hess_xy, hess_yy)
            .mark_quadratic()
    }
}

/// Structural hint used to propagate the constant-Hessian property through
/// Lagrangian assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    Affine,
    Quadratic,
    General,
}

/// A scalar function of x with gradient and Hessian callbacks.
#[derive(Clone)]
pub struct ScalarFunction {
    pub value: Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>,
    pub grad: Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>,
    pub hess: Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>,
    pub kind: ScalarKind,
}

impl std::fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarFunction").field("kind", &self.kind).finish()
    }
}

impl ScalarFunction {
    /// ½ xᵀP x + pᵀx.
    pub fn quadratic(p: DMatrix<f64>, lin: DVector<f64>) -> Self {
        let n = p.nrows();
        assert_eq!(p.ncols(), n);
        assert_eq!(lin.len(), n);
        let value = {
            let (p, lin) = (p.clone(), lin.clone());
            Arc::new(move |x: &DVector<f64>| 0.5 * x.dot(&(&p * x)) + lin.dot(x))
                as Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>
        };
        let grad = {
            let (p, lin) = (p.clone(), lin.clone());
            Arc::new(move |x: &DVector<f64>| &p * x + &lin)
                as Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>
        };
        let hess = Arc::new(move |_: &DVector<f64>| p.clone())
            as Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
        Self {
            value,
            grad,
            hess,
            kind: ScalarKind::Quadratic,
        }
    }

    /// aᵀx + b.
    pub fn affine(a: DVector<f64>, b: f64) -> Self {
        let n = a.len();
        let value = {
            let a = a.clone();
            Arc::new(move |x: &DVector<f64>| a.dot(x) + b)
                as Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>
        };
        let grad = {
            let a = a.clone();
            Arc::new(move |_: &DVector<f64>| a.clone())
                as Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>
        };
        let hess = Arc::new(move |_: &DVector<f64>| DMatrix::zeros(n, n))
            as Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
        Self {
            value,
            grad,
            hess,
            kind: ScalarKind::Affine,
        }
    }
}

/// max U(x) subject to g(x) >= 0 (and optionally x in an explicit box).
#[derive(Debug, Clone)]
pub struct ConcaveProgram {
    pub objective: ScalarFunction,
    pub constraints: Vec<ScalarFunction>,
    pub n: usize,
    pub x_domain: Option<BoxDomain>,
}

impl ConcaveProgram {
    /// Lagrangian φ(x, y) = U(x) + yᵀ g(x). The intended domain is
    /// K_x × R_+^m; φ is affine in y so hess_yy is identically zero.
    pub fn lagrangian(&self) -> SaddleProblem {
        let n = self.n;
        let m = self.constraints.len();
        let obj = self.objective.clone();
        let cons = self.constraints.clone();
        let value = {
            let (obj, cons) = (obj.clone(), cons.clone());
            Arc::new(move |x: &DVector<f64>, y: &DVector<f64>| {
                (obj.value)(x)
                    + cons
                        .iter()
                        .enumerate()
                        .map(|(j, g)| y[j] * (g.value)(x))
                        .sum::<f64>()
            }) as ValueFn
        };
        let grad_x = {
            let (obj, cons) = (obj.clone(), cons.clone());
            Arc::new(move |x: &DVector<f64>, y: &DVector<f64>| {
                let mut g = (obj.grad)(x);
                for (j, c) in cons.iter().enumerate() {
                    g += (c.grad)(x) * y[j];
                }
                g
            }) as GradFn
        };
        let grad_y = {
            let cons = cons.clone();
            Arc::new(move |x: &DVector<f64>, _: &DVector<f64>| {
                DVector::from_fn(cons.len(), |j, _| (cons[j].value)(x))
            }) as GradFn
        };
        let hess_xx = {
            let (obj, cons) = (obj.clone(), cons.clone());
            Arc::new(move |x: &DVector<f64>, y: &DVector<f64>| {
                let mut h = (obj.hess)(x);
                for (j, c) in cons.iter().enumerate() {
                    h += (c.hess)(x) * y[j];
                }
                h
            }) as HessFn
        };
        let hess_xy = {
            let cons = cons.clone();
            Arc::new(move |x: &DVector<f64>, _: &DVector<f64>| {
                let mut h = DMatrix::zeros(n, cons.len());
                for (j, c) in cons.iter().enumerate() {
                    h.set_column(j, &(c.grad)(x));
                }
                h
            }) as HessFn
        };
        let hess_yy =
            Arc::new(move |_: &DVector<f64>, _: &DVector<f64>| DMatrix::zeros(m, m)) as HessFn;
        let quadratic = matches!(obj.kind, ScalarKind::Affine | ScalarKind::Quadratic)
            && cons.iter().all(|c| c.kind == ScalarKind::Affine);
        let p = SaddleProblem::from_callbacks(n, m, value, grad_x, grad_y, hess_xx, hess_xy, hess_yy);
        if quadratic {
            p.mark_quadratic()
        } else {
            p
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn example1() -> SaddleProblem {
        builtins::example1_problem()
    }

    fn example2() -> SaddleProblem {
        builtins::example2_problem()
    }

    #[test]
    fn example1_field_matches_linear_system() {
        // f = (-x1 + y, y, -x1 - x2), the row reading of the system matrix
        // [[-1,0,1],[0,0,1],[-1,-1,0]].
        let p = example1();
        let z = DVector::from_row_slice(&[0.3, -1.2, 0.7]);
        let f = p.gradient_field(&z).unwrap();
        assert!((f[0] - (-0.3 + 0.7)).abs() < 1e-14);
        assert!((f[1] - 0.7).abs() < 1e-14);
        assert!((f[2] - (-0.3 + 1.2)).abs() < 1e-14);
        let j = p.field_jacobian(&z).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[-1.0, 0.0, 1.0, 0.0, 0.0, 1.0, -1.0, -1.0, 0.0],
        );
        assert!((j - expected).norm() < 1e-12);
    }

    #[test]
    fn example2_field_matches_linear_system() {
        let p = example2();
        let z = DVector::from_row_slice(&[2.0, -0.5, 1.5]);
        let f = p.gradient_field(&z).unwrap();
        assert!((f[0] - 1.5).abs() < 1e-14);
        assert!((f[1] - 0.5).abs() < 1e-14);
        assert!((f[2] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn interior_saddle_has_zero_field() {
        let p = example1();
        let z = DVector::zeros(3);
        assert!(p.gradient_field(&z).unwrap().norm() < 1e-14);
    }

    #[test]
    fn example1_a_b_split_at_origin() {
        // Frozen from the symmetric/skew split of the Jacobian
        // [[-1,0,1],[0,0,1],[-1,-1,0]]; cross-checked against finite
        // differences below.
        let p = example1();
        let z = DVector::zeros(3);
        let a = p.matrix_a(&z).unwrap();
        let b = p.matrix_b(&z).unwrap();
        let a_expected =
            DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, -1.0, -1.0, 0.0]);
        let b_expected = DMatrix::from_diagonal(&DVector::from_row_slice(&[-1.0, 0.0, 0.0]));
        assert!((a - a_expected).norm() < 1e-12);
        assert!((b - b_expected).norm() < 1e-12);
    }

    #[test]
    fn example2_a_b_split_at_origin() {
        let p = example2();
        let z = DVector::zeros(3);
        let a = p.matrix_a(&z).unwrap();
        let b = p.matrix_b(&z).unwrap();
        let a_expected =
            DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
        let b_expected = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.0, -1.0, 0.0]));
        assert!((a - a_expected).norm() < 1e-12);
        assert!((b - b_expected).norm() < 1e-12);
    }

    #[test]
    fn a_skew_b_symmetric_and_jacobian_split() {
        let problems = [example1(), example2(), builtins::routing_a().lagrangian()];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in &problems {
            for _ in 0..100 {
                let z = DVector::from_fn(p.dim(), |_, _| rng.gen_range(0.1..2.0));
                let a = p.matrix_a(&z).unwrap();
                let b = p.matrix_b(&z).unwrap();
                assert!((&a + a.transpose()).norm() < 1e-12);
                assert!((&b - b.transpose()).norm() < 1e-12);
                // A + B equals the finite-difference Jacobian of the field.
                let j = &a + &b;
                let h = 1e-6;
                for i in 0..p.dim() {
                    let mut zp = z.clone();
                    let mut zm = z.clone();
                    zp[i] += h;
                    zm[i] -= h;
                    let col = (p.gradient_field(&zp).unwrap() - p.gradient_field(&zm).unwrap())
                        / (2.0 * h);
                    for r in 0..p.dim() {
                        let scale = j[(r, i)].abs().max(1.0);
                        assert!(
                            (j[(r, i)] - col[r]).abs() / scale < 1e-4,
                            "jacobian mismatch at ({r},{i})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn lagrangian_reproduces_example1() {
        // U = -x1^2/2 with the equality constraint x1 + x2 = 0 relaxed by a
        // free multiplier.
        let cp = builtins::example1_program();
        let lag = cp.lagrangian();
        assert!(lag.is_quadratic());
        let direct = example1();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let z = DVector::from_fn(3, |_, _| rng.gen_range(-2.0..2.0));
            assert!((lag.value(&z).unwrap() - direct.value(&z).unwrap()).abs() < 1e-12);
            assert!(
                (lag.gradient_field(&z).unwrap() - direct.gradient_field(&z).unwrap()).norm()
                    < 1e-12
            );
        }
    }

    #[test]
    fn lagrangian_with_no_constraints_is_objective() {
        let cp = ConcaveProgram {
            objective: ScalarFunction::quadratic(
                DMatrix::from_diagonal(&DVector::from_row_slice(&[-1.0, -2.0])),
                DVector::zeros(2),
            ),
            constraints: vec![],
            n: 2,
            x_domain: None,
        };
        let lag = cp.lagrangian();
        assert_eq!(lag.dual_dim(), 0);
        let z = DVector::from_row_slice(&[1.0, 2.0]);
        assert!((lag.value(&z).unwrap() - (-0.5 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn lagrangian_is_affine_in_y() {
        let lag = builtins::routing_a().lagrangian();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let z = DVector::from_fn(lag.dim(), |_, _| rng.gen_range(0.1..2.0));
            assert_eq!(lag.hess_yy(&z).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn restricted_saddle_checks() {
        let a = 1.5;
        let p = example1();
        let k = builtins::ka_domain(a);
        let saddle = DVector::from_row_slice(&[a, -a, 0.0]);
        assert!(p.is_restricted_saddle(&k, &saddle, 1e-9).unwrap());
        // Origin lies outside K_a for a > 0.
        let origin = DVector::zeros(3);
        assert!(matches!(
            p.is_restricted_saddle(&k, &origin, 1e-9),
            Err(Error::OutsideDomain(_))
        ));
        // Example 2 continuum members at a = 0.
        let p2 = example2();
        let k0 = builtins::ka_domain(0.0);
        for y in [0.0, -0.3, -1.0, -7.0] {
            let z = DVector::from_row_slice(&[0.0, 0.0, y]);
            assert!(p2.is_restricted_saddle(&k0, &z, 1e-9).unwrap(), "y = {y}");
        }
        // Positive y breaks the sign condition.
        let z = DVector::from_row_slice(&[0.0, 0.0, 0.5]);
        assert!(!p2.is_restricted_saddle(&k0, &z, 1e-9).unwrap());
    }

    #[test]
    fn validate_derivatives_quadratic_is_exact() {
        let p = example1();
        let samples: Vec<DVector<f64>> = (0..5)
            .map(|k| DVector::from_fn(3, |i, _| 0.3 * (k as f64) - 0.2 * i as f64))
            .collect();
        let report = p.validate_derivatives(&samples);
        assert!(report.ok(), "{:?}", report.failures);
        assert!(report.max_grad_rel_err <= 1e-9);
    }

    #[test]
    fn validate_derivatives_routing_log_utilities() {
        let p = builtins::routing_a().lagrangian();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let samples: Vec<DVector<f64>> = (0..5)
            .map(|_| DVector::from_fn(p.dim(), |_, _| rng.gen_range(0.2..2.0)))
            .collect();
        let report = p.validate_derivatives(&samples);
        assert!(report.ok(), "{:?}", report.failures);
        assert!(report.max_grad_rel_err <= 1e-5);
        assert!(report.max_hess_rel_err <= 1e-4);
    }

    #[test]
    fn validate_derivatives_flags_corrupted_gradient() {
        let good = example1();
        let bad = SaddleProblem {
            grad_x: Arc::new(|x: &DVector<f64>, y: &DVector<f64>| {
                DVector::from_row_slice(&[-x[0] + y[0] + 0.5, y[0]])
            }),
            ..good
        };
        let samples = vec![DVector::from_row_slice(&[0.1, 0.2, 0.3])];
        assert!(!bad.validate_derivatives(&samples).ok());
    }

    #[test]
    fn saddle_invariant_along_example2_continuum() {
        // Adding a null direction of the pinned-coordinate complement that
        // leaves the field's sign pattern intact keeps saddle-hood.
        let p = example2();
        let k0 = builtins::ka_domain(0.0);
        let base = DVector::from_row_slice(&[0.0, 0.0, -1.0]);
        assert!(p.is_restricted_saddle(&k0, &base, 1e-9).unwrap());
        for t in [0.1, 1.0, 5.0] {
            let shifted = DVector::from_row_slice(&[0.0, 0.0, -1.0 - t]);
            assert!(p.is_restricted_saddle(&k0, &shifted, 1e-9).unwrap());
        }
    }
}
