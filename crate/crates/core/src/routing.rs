//! Multi-path routing: network encoding, the utility-maximisation Lagrangian,
//! the algebraic instability certificate and its explicit oscillating orbit.
//!
//! A network has m sources, n routes and l links. `H` (m×n) maps routes to
//! their source; `L` (l×n) maps routes to the links they use. Rates x (one
//! per route) and link prices y evolve under the projected dynamics of the
//! Lagrangian
//!
//! ```text
//! φ(x, y) = Σ_i U_i((Hx)_i) + yᵀ(C − Lx)
//! ```
//!
//! on the nonnegative orthant. Global convergence fails exactly when ker(H)
//! contains an eigenvector of LᵀL with positive eigenvalue; in that case an
//! explicit orbit at constant distance from the saddle exists.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::linalg;
use crate::problem::{GradFn, HessFn, SaddleProblem, ValueFn};

/// A strictly concave, strictly increasing utility with two derivatives.
#[derive(Clone)]
pub struct Utility {
    pub value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub d1: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub d2: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub name: String,
}

impl std::fmt::Debug for Utility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Utility({})", self.name)
    }
}

impl Utility {
    /// U(t) = log(1 + t).
    pub fn log1p() -> Self {
        Self {
            value: Arc::new(|t| (1.0 + t).ln()),
            d1: Arc::new(|t| 1.0 / (1.0 + t)),
            d2: Arc::new(|t| -1.0 / ((1.0 + t) * (1.0 + t))),
            name: "log(1+x)".into(),
        }
    }

    /// U(t) = 1 - exp(-t).
    pub fn exp_saturating() -> Self {
        Self {
            value: Arc::new(|t| 1.0 - (-t).exp()),
            d1: Arc::new(|t| (-t).exp()),
            d2: Arc::new(|t| -(-t).exp()),
            name: "1-exp(-x)".into(),
        }
    }
}

/// Sources, routes and links with capacities, utilities and per-route gains.
#[derive(Debug, Clone)]
pub struct RoutingNetwork {
    source_route: DMatrix<f64>,
    link_route: DMatrix<f64>,
    capacities: DVector<f64>,
    utilities: Vec<Utility>,
    kappas: DVector<f64>,
}

impl RoutingNetwork {
    pub fn new(
        source_route: DMatrix<f64>,
        link_route: DMatrix<f64>,
        capacities: DVector<f64>,
        utilities: Vec<Utility>,
        kappas: DVector<f64>,
    ) -> Result<Self> {
        let m = source_route.nrows();
        let n = source_route.ncols();
        let l = link_route.nrows();
        if link_route.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: link_route.ncols() });
        }
        if capacities.len() != l || utilities.len() != m || kappas.len() != n {
            return Err(Error::InvalidInput("capacity/utility/gain dimensions disagree".into()));
        }
        for j in 0..n {
            let ones = (0..m).filter(|&i| source_route[(i, j)] == 1.0).count();
            let zeros = (0..m).filter(|&i| source_route[(i, j)] == 0.0).count();
            if ones != 1 || ones + zeros != m {
                return Err(Error::InvalidInput(format!(
                    "route {j} must belong to exactly one source"
                )));
            }
            let links = (0..l).filter(|&k| link_route[(k, j)] == 1.0).count();
            let empties = (0..l).filter(|&k| link_route[(k, j)] == 0.0).count();
            if links == 0 || links + empties != l {
                return Err(Error::InvalidInput(format!("route {j} must use at least one link")));
            }
        }
        if capacities.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::InvalidInput("capacities must be strictly positive".into()));
        }
        if kappas.iter().any(|&k| !(k > 0.0)) {
            return Err(Error::InvalidInput("gains must be strictly positive".into()));
        }
        // Strict monotonicity/concavity on a sampled range.
        for (i, u) in utilities.iter().enumerate() {
            for k in 0..64 {
                let t = 5.0 * k as f64 / 63.0;
                if !((u.d1)(t) > 0.0) || !((u.d2)(t) < 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "utility {i} not strictly increasing/concave at t = {t}"
                    )));
                }
            }
        }
        Ok(Self { source_route, link_route, capacities, utilities, kappas })
    }

    pub fn num_sources(&self) -> usize {
        self.source_route.nrows()
    }

    pub fn num_routes(&self) -> usize {
        self.source_route.ncols()
    }

    pub fn num_links(&self) -> usize {
        self.link_route.nrows()
    }

    pub fn source_route_matrix(&self) -> &DMatrix<f64> {
        &self.source_route
    }

    pub fn link_route_matrix(&self) -> &DMatrix<f64> {
        &self.link_route
    }

    pub fn capacities(&self) -> &DVector<f64> {
        &self.capacities
    }

    pub fn kappas(&self) -> &DVector<f64> {
        &self.kappas
    }

    /// Nonnegative orthant over (x, y).
    pub fn domain(&self) -> BoxDomain {
        BoxDomain::nonneg(self.num_routes() + self.num_links())
    }

    /// Aggregate utility U(x) = Σ_i U_i((Hx)_i) and its derivatives.
    fn aggregate(&self, x: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let totals = &self.source_route * x;
        let mut value = 0.0;
        let mut d1 = DVector::zeros(self.num_sources());
        let mut d2 = DVector::zeros(self.num_sources());
        for i in 0..self.num_sources() {
            value += (self.utilities[i].value)(totals[i]);
            d1[i] = (self.utilities[i].d1)(totals[i]);
            d2[i] = (self.utilities[i].d2)(totals[i]);
        }
        let grad = self.source_route.transpose() * &d1;
        let hess = self.source_route.transpose()
            * DMatrix::from_diagonal(&d2)
            * &self.source_route;
        (value, grad, hess)
    }

    /// The Lagrangian as a saddle problem over (x, y) ∈ R_+^{n+l}.
    pub fn lagrangian(&self) -> SaddleProblem {
        let net = self.clone();
        let n = self.num_routes();
        let l = self.num_links();
        let value = {
            let net = net.clone();
            Arc::new(move |x: &DVector<f64>, y: &DVector<f64>| {
                let (u, _, _) = net.aggregate(x);
                u + y.dot(&(&net.capacities - &net.link_route * x))
            }) as ValueFn
        };
        let grad_x = {
            let net = net.clone();
            Arc::new(move |x: &DVector<f64>, y: &DVector<f64>| {
                let (_, g, _) = net.aggregate(x);
                g - net.link_route.transpose() * y
            }) as GradFn
        };
        let grad_y = {
            let net = net.clone();
            Arc::new(move |x: &DVector<f64>, _: &DVector<f64>| {
                &net.capacities - &net.link_route * x
            }) as GradFn
        };
        let hess_xx = {
            let net = net.clone();
            Arc::new(move |x: &DVector<f64>, _: &DVector<f64>| {
                let (_, _, h) = net.aggregate(x);
                h
            }) as HessFn
        };
        let hess_xy = {
            let net = net.clone();
            Arc::new(move |_: &DVector<f64>, _: &DVector<f64>| -net.link_route.transpose())
                as HessFn
        };
        let hess_yy =
            Arc::new(move |_: &DVector<f64>, _: &DVector<f64>| DMatrix::zeros(l, l)) as HessFn;
        SaddleProblem::from_callbacks(n, l, value, grad_x, grad_y, hess_xx, hess_xy, hess_yy)
    }

    /// Algebraic instability certificate: a unit vector u in ker(H) that is an
    /// eigenvector of LᵀL with eigenvalue λ > 0, if one exists.
    pub fn instability(&self) -> Option<(DVector<f64>, f64)> {
        const TOL: f64 = 1e-10;
        let gram = self.link_route.transpose() * &self.link_route;
        let eig = nalgebra::SymmetricEigen::new(gram.clone());
        // Cluster eigenvalues and inspect eigenspaces in descending order.
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[j]
                .partial_cmp(&eig.eigenvalues[i])
                .unwrap()
                .then(i.cmp(&j))
        });
        let mut idx = 0;
        while idx < order.len() {
            let lambda = eig.eigenvalues[order[idx]];
            if lambda <= TOL {
                break;
            }
            let mut group = vec![order[idx]];
            let mut next = idx + 1;
            while next < order.len()
                && (eig.eigenvalues[order[next]] - lambda).abs() <= 1e-8 * lambda.max(1.0)
            {
                group.push(order[next]);
                next += 1;
            }
            // Does the eigenspace meet ker(H)? Solve H E c = 0 for combination c.
            let mut espace = DMatrix::zeros(self.num_routes(), group.len());
            for (j, &gi) in group.iter().enumerate() {
                espace.set_column(j, &eig.eigenvectors.column(gi));
            }
            let he = &self.source_route * &espace;
            let combos = linalg::null_space(&he, TOL);
            if combos.ncols() > 0 {
                let c: DVector<f64> = combos.column(0).into();
                let mut u = &espace * c;
                u /= u.norm();
                debug_assert!((&self.source_route * &u).norm() <= TOL);
                debug_assert!((&gram * &u - &u * lambda).norm() <= TOL * lambda.max(1.0));
                return Some((u, lambda));
            }
            idx = next;
        }
        None
    }

    /// The gradient-method skew block A(z̄) = [[0, −Lᵀ], [L, 0]].
    pub fn skew_block(&self) -> DMatrix<f64> {
        let n = self.num_routes();
        let l = self.num_links();
        let mut a = DMatrix::zeros(n + l, n + l);
        a.view_mut((0, n), (n, l))
            .copy_from(&(-self.link_route.transpose()));
        a.view_mut((n, 0), (l, n)).copy_from(&self.link_route);
        a
    }

    /// Closed-form oscillating orbit z(t) = z̄ + c e^{tA(z̄)} [u; −Lu].
    ///
    /// Requires a strictly positive saddle. When `c` is not given it starts
    /// at min(z̄) / (2 ‖[u; −Lu]‖) and is halved until the sampled orbit stays
    /// strictly positive. Returns the sampled trajectory and the c used.
    pub fn explicit_oscillation(
        &self,
        saddle: &DVector<f64>,
        u: &DVector<f64>,
        c: Option<f64>,
        times: &[f64],
    ) -> Result<(Trajectory, f64)> {
        let n = self.num_routes();
        let l = self.num_links();
        if saddle.len() != n + l {
            return Err(Error::DimensionMismatch { expected: n + l, got: saddle.len() });
        }
        if u.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: u.len() });
        }
        if saddle.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::OutsideDomain(
                "explicit oscillation needs a strictly positive saddle".into(),
            ));
        }
        if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("times must be non-empty and increasing".into()));
        }
        let mut w0 = DVector::zeros(n + l);
        w0.rows_mut(0, n).copy_from(u);
        w0.rows_mut(n, l).copy_from(&(-(&self.link_route * u)));
        let planes = linalg::skew_planes(&self.skew_block(), 1e-12);
        let min_coord = saddle.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut amplitude = match c {
            Some(c) if c >= 0.0 => c,
            Some(_) => return Err(Error::InvalidInput("amplitude must be nonnegative".into())),
            None => min_coord / (2.0 * w0.norm()),
        };
        // Check positivity over a dense phase sample; shrink if needed.
        for _ in 0..64 {
            let ok = (0..512).all(|k| {
                let t = times[0]
                    + (times[times.len() - 1] - times[0]) * k as f64 / 511.0;
                let z = saddle + linalg::skew_exp_apply(&planes, t, &w0) * amplitude;
                z.iter().all(|&v| v > 0.0)
            });
            if ok {
                break;
            }
            amplitude *= 0.5;
        }
        let states: Vec<DVector<f64>> = times
            .iter()
            .map(|&t| saddle + linalg::skew_exp_apply(&planes, t, &w0) * amplitude)
            .collect();
        let traj = Trajectory::new(times.to_vec(), states, self.domain())?;
        Ok((traj, amplitude))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;

    #[test]
    fn single_route_per_source_has_no_certificate() {
        // H = I: ker(H) = {0}.
        let net = RoutingNetwork::new(
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]),
            DVector::from_element(3, 1.0),
            vec![Utility::log1p(), Utility::log1p()],
            DVector::from_element(2, 1.0),
        )
        .unwrap();
        assert!(net.instability().is_none());
    }

    #[test]
    fn two_source_network_is_unstable_with_lambda_two() {
        let net = builtins::routing_a();
        let gram = net.link_route_matrix().transpose() * net.link_route_matrix();
        assert!((gram - DMatrix::identity(4, 4) * 2.0).norm() < 1e-14);
        let (u, lambda) = net.instability().expect("certificate expected");
        assert!((lambda - 2.0).abs() <= 1e-10);
        assert!((net.source_route_matrix() * &u).norm() <= 1e-10);
        let resid = net.link_route_matrix().transpose() * (net.link_route_matrix() * &u)
            - &u * lambda;
        assert!(resid.norm() <= 1e-10);
    }

    #[test]
    fn single_source_two_route_network_is_stable() {
        // LᵀL = diag(4, 3): eigenvectors e1, e2, neither in ker(H) = span(1,-1).
        let net = builtins::routing_b();
        let gram = net.link_route_matrix().transpose() * net.link_route_matrix();
        let expected = DMatrix::from_diagonal(&DVector::from_row_slice(&[4.0, 3.0]));
        assert!((gram - expected).norm() < 1e-14);
        assert!(net.instability().is_none());
    }

    #[test]
    fn explicit_orbit_solves_the_unmodified_dynamics() {
        let net = builtins::routing_a();
        let saddle = builtins::routing_a_saddle();
        let (u, _lambda) = net.instability().unwrap();
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
        let (orbit, c) = net.explicit_oscillation(&saddle, &u, None, &times).unwrap();
        assert!(c > 0.0);
        let p = net.lagrangian();
        let a = net.skew_block();
        // Analytic derivative vs the field at each sample; interior states so
        // the projection is inactive.
        for (k, t) in times.iter().enumerate() {
            let z = orbit.state(k);
            assert!(z.iter().all(|&v| v > 0.0));
            let zdot = &a * (z - &saddle);
            let f = p.gradient_field(z).unwrap();
            assert!((zdot - f).norm() <= 1e-6, "residual at t = {t}");
        }
    }

    #[test]
    fn explicit_orbit_with_zero_amplitude_is_constant() {
        let net = builtins::routing_a();
        let saddle = builtins::routing_a_saddle();
        let (u, _) = net.instability().unwrap();
        let times = [0.0, 1.0, 2.0];
        let (orbit, _) = net.explicit_oscillation(&saddle, &u, Some(0.0), &times).unwrap();
        for s in orbit.states() {
            assert_eq!(s, &saddle);
        }
    }

    #[test]
    fn explicit_orbit_keeps_constant_saddle_distance() {
        let net = builtins::routing_a();
        let saddle = builtins::routing_a_saddle();
        let (u, _) = net.instability().unwrap();
        let times: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let (orbit, c) = net.explicit_oscillation(&saddle, &u, None, &times).unwrap();
        let mut w0 = DVector::zeros(net.num_routes() + net.num_links());
        w0.rows_mut(0, net.num_routes()).copy_from(&u);
        w0.rows_mut(net.num_routes(), net.num_links())
            .copy_from(&(-(net.link_route_matrix() * &u)));
        let expect = c * w0.norm();
        for s in orbit.states() {
            assert!(((s - &saddle).norm() - expect).abs() <= 1e-10);
        }
    }

    #[test]
    fn skew_exponential_matches_series_at_t_one() {
        let net = builtins::routing_a();
        let a = net.skew_block();
        let (u, _) = net.instability().unwrap();
        let mut w0 = DVector::zeros(12);
        w0.rows_mut(0, 4).copy_from(&u);
        w0.rows_mut(4, 8).copy_from(&(-(net.link_route_matrix() * &u)));
        let planes = linalg::skew_planes(&a, 1e-12);
        let fast = linalg::skew_exp_apply(&planes, 1.0, &w0);
        let slow = linalg::series_exp_apply(&a, 1.0, &w0);
        assert!((fast - slow).norm() <= 1e-12);
    }

    #[test]
    fn non_positive_saddle_is_rejected() {
        let net = builtins::routing_a();
        let mut saddle = builtins::routing_a_saddle();
        saddle[0] = 0.0;
        let (u, _) = net.instability().unwrap();
        assert!(net.explicit_oscillation(&saddle, &u, None, &[0.0, 1.0]).is_err());
    }
}
