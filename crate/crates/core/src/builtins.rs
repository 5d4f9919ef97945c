//! Named builtin problems: the two bifurcation examples, a seeded strictly
//! concave-convex quadratic, and the two routing networks.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::problem::{ConcaveProgram, QuadraticSaddle, SaddleProblem, ScalarFunction};
use crate::routing::{RoutingNetwork, Utility};

/// φ(x1, x2, y) = -x1²/2 + (x1 + x2) y.
pub fn example1_problem() -> SaddleProblem {
    QuadraticSaddle::new(
        DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.0]),
        DMatrix::zeros(1, 1),
        DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
        DVector::zeros(2),
        DVector::zeros(1),
    )
    .expect("valid quadratic")
    .to_problem()
}

/// The concave program behind example 1: max -x1²/2 subject to the equality
/// x1 + x2 = 0 relaxed by a free multiplier.
pub fn example1_program() -> ConcaveProgram {
    ConcaveProgram {
        objective: ScalarFunction::quadratic(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.0]),
            DVector::zeros(2),
        ),
        constraints: vec![ScalarFunction::affine(DVector::from_row_slice(&[1.0, 1.0]), 0.0)],
        n: 2,
        x_domain: None,
    }
}

/// φ(x1, x2, y) = -x2²/2 + x1 y.
pub fn example2_problem() -> SaddleProblem {
    QuadraticSaddle::new(
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -1.0]),
        DMatrix::zeros(1, 1),
        DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        DVector::zeros(2),
        DVector::zeros(1),
    )
    .expect("valid quadratic")
    .to_problem()
}

/// K_a = {(x1, x2, y) : x1 >= a}.
pub fn ka_domain(a: f64) -> BoxDomain {
    BoxDomain::new(
        DVector::from_row_slice(&[a, f64::NEG_INFINITY, f64::NEG_INFINITY]),
        DVector::from_element(3, f64::INFINITY),
    )
    .expect("valid box")
}

/// K_a-restricted saddle points of example 1.
pub fn example1_saddles(a: f64) -> Vec<DVector<f64>> {
    if a <= 0.0 {
        vec![DVector::zeros(3)]
    } else {
        vec![DVector::from_row_slice(&[a, -a, 0.0])]
    }
}

/// K_a-restricted saddle points of example 2; two representatives of the ray
/// {(0, 0, y) : y <= 0} at a = 0, none for a > 0.
pub fn example2_saddles(a: f64) -> Vec<DVector<f64>> {
    if a < 0.0 {
        vec![DVector::zeros(3)]
    } else if a == 0.0 {
        vec![DVector::zeros(3), DVector::from_row_slice(&[0.0, 0.0, -1.0])]
    } else {
        Vec::new()
    }
}

/// Two sources, two routes each, every route on its own pair of links
/// (parallel edges kept distinct), so LᵀL = 2 I.
pub fn routing_a() -> RoutingNetwork {
    let h = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
    let mut l = DMatrix::zeros(8, 4);
    for j in 0..4 {
        l[(2 * j, j)] = 1.0;
        l[(2 * j + 1, j)] = 1.0;
    }
    RoutingNetwork::new(
        h,
        l,
        DVector::from_element(8, 1.0),
        vec![Utility::log1p(), Utility::exp_saturating()],
        DVector::from_element(4, 1.0),
    )
    .expect("valid network")
}

/// A strictly positive saddle of the routing-a Lagrangian: rates at the
/// per-route capacity, prices split evenly over each route's two links.
pub fn routing_a_saddle() -> DVector<f64> {
    let u1 = 1.0 / 3.0; // U1'(2) for log(1+x)
    let u2 = (-2.0f64).exp(); // U2'(2) for 1-exp(-x)
    let mut z = DVector::zeros(12);
    for j in 0..4 {
        z[j] = 1.0;
    }
    for k in 0..4 {
        z[4 + k] = u1 / 2.0;
    }
    for k in 4..8 {
        z[4 + k] = u2 / 2.0;
    }
    z
}

/// One source with a 4-link route and a 3-link route, so LᵀL = diag(4, 3).
pub fn routing_b() -> RoutingNetwork {
    let h = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let mut l = DMatrix::zeros(7, 2);
    for k in 0..4 {
        l[(k, 0)] = 1.0;
    }
    for k in 4..7 {
        l[(k, 1)] = 1.0;
    }
    RoutingNetwork::new(
        h,
        l,
        DVector::from_element(7, 0.5),
        vec![Utility::log1p()],
        DVector::from_element(2, 1.0),
    )
    .expect("valid network")
}

/// A strictly positive saddle of the routing-b Lagrangian.
pub fn routing_b_saddle() -> DVector<f64> {
    let du = 0.5; // U'(1) for log(1+x)
    let mut z = DVector::zeros(9);
    z[0] = 0.5;
    z[1] = 0.5;
    for k in 0..4 {
        z[2 + k] = du / 4.0;
    }
    for k in 4..7 {
        z[2 + k] = du / 3.0;
    }
    z
}

/// Perturbation of a routing saddle along the orbit direction [u; -Lu],
/// scaled so the start stays strictly positive.
pub fn routing_perturbed_start(
    net: &RoutingNetwork,
    saddle: &DVector<f64>,
    u: &DVector<f64>,
) -> DVector<f64> {
    let n = net.num_routes();
    let l = net.num_links();
    let mut w = DVector::zeros(n + l);
    w.rows_mut(0, n).copy_from(u);
    w.rows_mut(n, l).copy_from(&(-(net.link_route_matrix() * u)));
    let c = saddle.iter().cloned().fold(f64::INFINITY, f64::min) / (2.0 * w.norm());
    saddle + w * c
}

/// Seeded strictly concave-convex quadratic with eigenvalues of -P and Q in
/// [0.5, 2], an interior saddle at (1, 1, 1, 1) on the nonnegative orthant.
pub struct StrictQuadratic {
    pub problem: SaddleProblem,
    pub domain: BoxDomain,
    pub saddle: DVector<f64>,
    pub z0: DVector<f64>,
}

pub fn strict_quadratic(seed: u64) -> StrictQuadratic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = -random_spd(&mut rng, 2, 0.5, 2.0);
    let q = random_spd(&mut rng, 2, 0.5, 2.0);
    let r = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-0.5..0.5));
    let x_bar = DVector::from_element(2, 1.0);
    let y_bar = DVector::from_element(2, 1.0);
    let lin_p = -(&p * &x_bar + &r * &y_bar);
    let lin_q = &q * &y_bar - r.transpose() * &x_bar;
    let quad = QuadraticSaddle::new(p, q, r, lin_p, lin_q).expect("valid strict quadratic");
    let mut dir = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
    dir /= dir.norm();
    let saddle = DVector::from_element(4, 1.0);
    let z0 = &saddle + dir * 0.3;
    StrictQuadratic {
        problem: quad.to_problem(),
        domain: BoxDomain::nonneg(4),
        saddle,
        z0,
    }
}

pub(crate) fn random_spd(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let qr = raw.qr();
    let basis = qr.q();
    let eig = DVector::from_fn(n, |_, _| rng.gen_range(lo..hi));
    &basis * DMatrix::from_diagonal(&eig) * basis.transpose()
}

/// A fully resolved builtin: problem, domain, saddles and run defaults.
pub struct BuiltinScenario {
    pub id: String,
    pub problem: SaddleProblem,
    pub domain: BoxDomain,
    pub z0: DVector<f64>,
    pub saddles: Vec<DVector<f64>>,
    pub network: Option<RoutingNetwork>,
    pub program: Option<ConcaveProgram>,
    pub integrator: IntegratorConfig,
    pub params: BTreeMap<String, f64>,
}

/// Catalog entry: id, description and default parameters.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BuiltinInfo {
    pub id: &'static str,
    pub description: &'static str,
    pub default_params: BTreeMap<String, f64>,
}

pub fn builtin_catalog() -> Vec<BuiltinInfo> {
    vec![
        BuiltinInfo {
            id: "example1",
            description: "phi = -x1^2/2 + (x1+x2) y on K_a = {x1 >= a}; bifurcates at a = 0. \
                          Default start: saddle + (1,1,1) for a <= 0, on-face perturbation \
                          (a, -a+0.5, 0) for a > 0.",
            default_params: BTreeMap::from([("a".to_string(), 1.0)]),
        },
        BuiltinInfo {
            id: "example2",
            description: "phi = -x2^2/2 + x1 y on K_a = {x1 >= a}; oscillates for a < 0, \
                          converges to the ray {(0,0,y): y <= 0} at a = 0, loses its saddle \
                          for a > 0. Default start: (max(1,a), 0, 0).",
            default_params: BTreeMap::from([("a".to_string(), 1.0)]),
        },
        BuiltinInfo {
            id: "strict-quadratic",
            description: "Seeded strictly concave-convex quadratic (eigenvalues of -P, Q in \
                          [0.5,2]) with interior saddle (1,1,1,1) on the nonnegative orthant. \
                          Default start: saddle + 0.3 * seeded unit direction.",
            default_params: BTreeMap::from([("seed".to_string(), 0.0)]),
        },
        BuiltinInfo {
            id: "routing-a",
            description: "Two sources, four routes, eight distinct directed links (parallel \
                          edges kept distinct, two per route), capacities 1, utilities \
                          log(1+x) and 1-exp(-x), gains 1. L^T L = 2I so the instability \
                          condition holds. Default start: saddle + c*[u; -Lu] with \
                          c = min(saddle)/(2|[u;-Lu]|).",
            default_params: BTreeMap::new(),
        },
        BuiltinInfo {
            id: "routing-b",
            description: "One source with a 4-link route and a 3-link route, capacities 0.5, \
                          utility log(1+x), gains 1. L^T L = diag(4,3), no instability \
                          certificate. Default start: saddle + c*[v; -Lv], v = (1,-1)/sqrt(2).",
            default_params: BTreeMap::new(),
        },
    ]
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

/// Instantiate a builtin by id with the given parameter overrides.
pub fn build_builtin(id: &str, params: &BTreeMap<String, f64>) -> Result<BuiltinScenario> {
    match id {
        "example1" => {
            let a = param(params, "a", 1.0);
            let saddles = example1_saddles(a);
            let z0 = if a <= 0.0 {
                DVector::from_row_slice(&[1.0_f64.max(a), 1.0, 1.0])
            } else {
                DVector::from_row_slice(&[a, -a + 0.5, 0.0])
            };
            Ok(BuiltinScenario {
                id: id.into(),
                problem: example1_problem(),
                domain: ka_domain(a),
                z0,
                saddles,
                network: None,
                program: Some(example1_program()),
                integrator: IntegratorConfig { horizon: 100.0, ..Default::default() },
                params: BTreeMap::from([("a".to_string(), a)]),
            })
        }
        "example2" => {
            let a = param(params, "a", 1.0);
            Ok(BuiltinScenario {
                id: id.into(),
                problem: example2_problem(),
                domain: ka_domain(a),
                z0: DVector::from_row_slice(&[1.0_f64.max(a), 0.0, 0.0]),
                saddles: example2_saddles(a),
                network: None,
                program: None,
                integrator: IntegratorConfig { horizon: 50.0, ..Default::default() },
                params: BTreeMap::from([("a".to_string(), a)]),
            })
        }
        "strict-quadratic" => {
            let seed = param(params, "seed", 0.0) as u64;
            let sq = strict_quadratic(seed);
            Ok(BuiltinScenario {
                id: id.into(),
                problem: sq.problem,
                domain: sq.domain,
                z0: sq.z0,
                saddles: vec![sq.saddle],
                network: None,
                program: None,
                integrator: IntegratorConfig { horizon: 200.0, ..Default::default() },
                params: BTreeMap::from([("seed".to_string(), seed as f64)]),
            })
        }
        "routing-a" => {
            let net = routing_a();
            let saddle = routing_a_saddle();
            let (u, _) = net.instability().expect("routing-a is unstable by construction");
            let z0 = routing_perturbed_start(&net, &saddle, &u);
            Ok(BuiltinScenario {
                id: id.into(),
                problem: net.lagrangian(),
                domain: net.domain(),
                z0,
                saddles: vec![saddle],
                network: Some(net),
                program: None,
                integrator: IntegratorConfig { horizon: 200.0, ..Default::default() },
                params: BTreeMap::new(),
            })
        }
        "routing-b" => {
            let net = routing_b();
            let saddle = routing_b_saddle();
            let v = DVector::from_row_slice(&[1.0, -1.0]) / 2.0_f64.sqrt();
            let z0 = routing_perturbed_start(&net, &saddle, &v);
            Ok(BuiltinScenario {
                id: id.into(),
                problem: net.lagrangian(),
                domain: net.domain(),
                z0,
                saddles: vec![saddle],
                network: Some(net),
                program: None,
                integrator: IntegratorConfig { horizon: 150.0, ..Default::default() },
                params: BTreeMap::new(),
            })
        }
        other => Err(Error::UnknownBuiltin(other.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_saddle_is_restricted_saddle() {
        let a = 1.0;
        let b = build_builtin("example1", &BTreeMap::from([("a".to_string(), a)])).unwrap();
        assert_eq!(b.saddles.len(), 1);
        assert!(b
            .problem
            .is_restricted_saddle(&b.domain, &b.saddles[0], 1e-9)
            .unwrap());
        assert_eq!(b.saddles[0], DVector::from_row_slice(&[1.0, -1.0, 0.0]));
    }

    #[test]
    fn routing_saddles_are_saddles() {
        for id in ["routing-a", "routing-b"] {
            let b = build_builtin(id, &BTreeMap::new()).unwrap();
            assert!(b
                .problem
                .is_restricted_saddle(&b.domain, &b.saddles[0], 1e-9)
                .unwrap());
            assert!(b.z0.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn strict_quadratic_saddle_is_interior() {
        let b = build_builtin("strict-quadratic", &BTreeMap::new()).unwrap();
        assert!(b
            .problem
            .is_restricted_saddle(&b.domain, &b.saddles[0], 1e-9)
            .unwrap());
        assert!(b.problem.gradient_field(&b.saddles[0]).unwrap().norm() < 1e-12);
    }

    #[test]
    fn unknown_builtin_errors() {
        assert!(matches!(
            build_builtin("no-such-scenario", &BTreeMap::new()),
            Err(Error::UnknownBuiltin(_))
        ));
    }

    #[test]
    fn catalog_lists_expected_ids() {
        let ids: Vec<&str> = builtin_catalog().iter().map(|b| b.id).collect();
        for id in ["example1", "example2", "strict-quadratic", "routing-a", "routing-b"] {
            assert!(ids.contains(&id));
        }
    }

    #[test]
    fn example2_continuum_representatives() {
        let s = example2_saddles(0.0);
        assert_eq!(s.len(), 2);
        assert!(example2_saddles(1.0).is_empty());
    }
}
