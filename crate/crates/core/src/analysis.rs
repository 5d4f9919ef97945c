//! Limit analysis of the projected dynamics: minimal-face reduction, the
//! limiting linear ODE, kernel/unobservable subspaces, convergence
//! certificates, per-face criterion scans and parameter sweeps.
//!
//! With the chosen saddle translated to the origin and Π the projector onto
//! the face's direction space, every limiting trajectory solves
//! ż = Π A(0) Π z while staying in ker(Π B(rz) Π) and
//! ker(Π (A(rz) − A(0)) Π) for all r ∈ [0, 1]. The certificate decides
//! whether any non-constant candidate survives those conditions and the sign
//! constraints the box imposes on pinned coordinates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::{AffineSubspace, BoxDomain, FaceDescriptor, PinSide};
use crate::error::{Error, Result};
use crate::integrator::{
    oscillation_metrics, simulate, IntegratorConfig, Method, Trajectory,
};
use crate::linalg;
use crate::problem::SaddleProblem;

/// Tolerances used by the certificate; recorded verbatim in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSet {
    /// Saddle verification tolerance for supplied saddle points.
    pub saddle_tol: f64,
    /// Kernel-condition tolerance for the r-grid rejection.
    pub kernel_tol: f64,
    /// Rank / null-space tolerance.
    pub rank_tol: f64,
    /// Spectral radius below which the surviving dynamics count as constant.
    pub spectral_tol: f64,
    /// A pinned coordinate with |field| below this is weakly active.
    pub active_tol: f64,
    /// Minimum amplitude trend for a simulated oscillation witness.
    pub witness_trend_min: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self {
            saddle_tol: 1e-6,
            kernel_tol: 1e-8,
            rank_tol: 1e-10,
            spectral_tol: 1e-10,
            active_tol: 1e-9,
            witness_trend_min: 0.95,
        }
    }
}

/// Options for [`convergence_certificate`].
#[derive(Debug, Clone)]
pub struct CertificateConfig {
    /// Integrator for witness simulations. Heun by default: the witness
    /// validity test needs the neutral rotation amplitude preserved over
    /// hundreds of time units.
    pub integrator: IntegratorConfig,
    /// Sample points r ∈ [0, 1] for the kernel conditions of non-quadratic
    /// problems.
    pub r_grid: Vec<f64>,
    /// Starting amplitude for the witness orbit, halved until feasible.
    pub c_start: f64,
    /// Witness simulations cover at least this many oscillation periods.
    pub min_periods: f64,
    pub tolerances: ToleranceSet,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig {
                step: 1e-3,
                horizon: 200.0,
                stride: 20,
                equilibrium_tol: 1e-6,
                method: Method::ProjectedHeun,
            },
            r_grid: (0..=10).map(|k| k as f64 / 10.0).collect(),
            c_start: 1e-1,
            min_periods: 30.0,
            tolerances: ToleranceSet::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ProvedConvergent,
    OscillationWitness,
    Inconclusive,
}

/// The oscillation certificate: an invariant plane of the limit matrix whose
/// orbit was validated by simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Orthonormal plane basis (v, u) with M v = ω u, M u = -ω v.
    pub basis: Vec<DVector<f64>>,
    pub frequency: f64,
    pub amplitude: f64,
    /// Amplitude trend of the validating simulation.
    pub trend: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Pinned coordinates of the minimal face, sorted.
    pub face_pinned: Vec<(usize, PinSide)>,
    pub projector: DMatrix<f64>,
    pub limit_matrix: DMatrix<f64>,
    /// Eigenvalues of the limit matrix as (re, im), sorted.
    pub eigenvalues: Vec<(f64, f64)>,
    pub candidate_subspace_dim: usize,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    /// The saddle the system was translated to.
    pub saddle: DVector<f64>,
    pub tolerances: ToleranceSet,
    pub notes: Vec<String>,
}

/// Face, projector and limiting matrix extracted from a saddle set.
#[derive(Debug, Clone)]
pub struct LimitingSystem {
    pub face: FaceDescriptor,
    pub subspace: AffineSubspace,
    pub matrix: DMatrix<f64>,
    pub saddle: DVector<f64>,
}

/// Minimal face containing the saddles, its projector Π, and M = Π A(z̄) Π
/// with coordinates translated so the chosen saddle z̄ (the first) is the
/// origin.
pub fn limiting_linear_system(
    p: &SaddleProblem,
    domain: &BoxDomain,
    saddles: &[DVector<f64>],
) -> Result<LimitingSystem> {
    if saddles.is_empty() {
        return Err(Error::InvalidInput("limiting_linear_system needs at least one saddle".into()));
    }
    let tol = ToleranceSet::default().saddle_tol;
    for s in saddles {
        if !p.is_restricted_saddle(domain, s, tol)? {
            return Err(Error::InvalidInput(
                "limiting_linear_system: a supplied point is not a restricted saddle".into(),
            ));
        }
    }
    let face = domain.minimal_face_containing(saddles)?;
    let subspace = face.affine_span();
    let saddle = saddles[0].clone();
    let pi = subspace.projector();
    let matrix = pi * p.matrix_a(&saddle)? * pi;
    Ok(LimitingSystem { face, subspace, matrix, saddle })
}

/// Maximal M-invariant subspace satisfying the kernel conditions.
///
/// For quadratic problems this is exactly the unobservable subspace of
/// (M, Π B Π). For general problems the same iteration at r = 0 is followed
/// by rejection of basis directions that violate the conditions at the
/// sampled states z̄ + r·w, repeated until stable.
pub fn kernel_invariant_subspace(
    p: &SaddleProblem,
    projector: &DMatrix<f64>,
    saddle: &DVector<f64>,
    r_grid: &[f64],
) -> Result<DMatrix<f64>> {
    let tols = ToleranceSet::default();
    let dim = p.dim();
    let a0 = p.matrix_a(saddle)?;
    let b0 = p.matrix_b(saddle)?;
    let m = projector * &a0 * projector;
    let pbp = projector * &b0 * projector;
    // Start: ker(Π B Π) ∩ range(Π).
    let range_pi = linalg::null_space(&(DMatrix::identity(dim, dim) - projector), tols.rank_tol);
    let kernel = linalg::null_space(&pbp, tols.rank_tol);
    let start = linalg::intersect(&kernel, &range_pi, tols.rank_tol);
    let mut w = linalg::invariant_subspace_within(&start, &m, tols.rank_tol);
    if p.is_quadratic() {
        return Ok(w);
    }
    // Scale reference for the residual tests.
    let scale = 1.0 + b0.norm().max(a0.norm());
    loop {
        let mut kept = Vec::new();
        'cols: for j in 0..w.ncols() {
            let dir: DVector<f64> = w.column(j).into();
            for &r in r_grid {
                let z = saddle + &dir * r;
                let b = p.matrix_b(&z)?;
                let da = p.matrix_a(&z)? - &a0;
                let res_b = (projector * &b * projector * &dir).norm();
                let res_a = (projector * &da * projector * &dir).norm();
                if res_b > tols.kernel_tol * scale || res_a > tols.kernel_tol * scale {
                    continue 'cols;
                }
            }
            kept.push(dir);
        }
        let next = linalg::basis_from_columns(dim, &kept);
        let next = linalg::invariant_subspace_within(&next, &m, tols.rank_tol);
        if next.ncols() == w.ncols() {
            return Ok(next);
        }
        w = next;
    }
}

/// One invariant rotation plane lifted to ambient coordinates.
#[derive(Debug, Clone)]
struct Plane {
    omega: f64,
    v: DVector<f64>,
    u: DVector<f64>,
}

/// Sign information for the pinned coordinates of the face at the saddle:
/// (coordinate, sign, slack). `sign * field_i <= 0` is required along any
/// candidate orbit; `slack = -sign * field_i(saddle) >= 0`.
#[derive(Debug, Clone)]
struct PinnedRow {
    coord: usize,
    sign: f64,
    slack: f64,
}

struct CertificateContext<'a> {
    p: &'a SaddleProblem,
    saddle: &'a DVector<f64>,
    /// Box and face when certifying the subgradient method on the domain;
    /// `None` when certifying the dynamics on an affine span.
    boxed: Option<(&'a BoxDomain, &'a FaceDescriptor)>,
    jacobian: DMatrix<f64>,
    field_at_saddle: DVector<f64>,
    span_projector: DMatrix<f64>,
    cfg: &'a CertificateConfig,
}

impl<'a> CertificateContext<'a> {
    fn pinned_rows(&self) -> Vec<PinnedRow> {
        let Some((_, face)) = self.boxed else {
            return Vec::new();
        };
        face.pinned()
            .iter()
            .map(|(&coord, side)| {
                let sign = match side {
                    PinSide::AtLower => 1.0,
                    PinSide::AtUpper => -1.0,
                };
                PinnedRow { coord, sign, slack: -sign * self.field_at_saddle[coord] }
            })
            .collect()
    }

    /// Largest-amplitude coordinate of a plane, used as the metrics signal.
    fn plane_coordinate(plane: &Plane) -> usize {
        let mut best = (0usize, -1.0f64);
        for j in 0..plane.v.len() {
            let a = plane.v[j].hypot(plane.u[j]);
            if a > best.1 {
                best = (j, a);
            }
        }
        best.0
    }

    /// Check whether the orbit z̄ + c (cos v + sin u) stays in the box and
    /// respects the pinned-coordinate sign conditions of the true field.
    fn orbit_feasible(&self, plane: &Plane, c: f64, rows: &[PinnedRow]) -> bool {
        let tol = self.cfg.tolerances.active_tol;
        if let Some((domain, _)) = self.boxed {
            for j in 0..plane.v.len() {
                let amp = c * plane.v[j].hypot(plane.u[j]);
                let z = self.saddle[j];
                if z - amp < domain.lower()[j] - tol || z + amp > domain.upper()[j] + tol {
                    return false;
                }
            }
            const PHASES: usize = 128;
            for k in 0..PHASES {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / PHASES as f64;
                let z = self.saddle + (&plane.v * phi.cos() + &plane.u * phi.sin()) * c;
                let f = match self.p.gradient_field(&z) {
                    Ok(f) => f,
                    Err(_) => return false,
                };
                for row in rows {
                    if row.sign * f[row.coord] > tol {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn find_feasible_amplitude(&self, plane: &Plane, rows: &[PinnedRow]) -> Option<f64> {
        let mut c = self.cfg.c_start;
        for _ in 0..40 {
            if self.orbit_feasible(plane, c, rows) {
                return Some(c);
            }
            c *= 0.5;
        }
        None
    }

    /// Simulate from z̄ + c v and test for sustained oscillation.
    fn witness_simulation(&self, plane: &Plane, c: f64) -> Result<Option<f64>> {
        let horizon = self
            .cfg
            .integrator
            .horizon
            .max(self.cfg.min_periods * 2.0 * std::f64::consts::PI / plane.omega);
        let steps = (horizon / self.cfg.integrator.step).ceil() as usize;
        let stride = self.cfg.integrator.stride.max(steps / 40_000 + 1);
        let icfg = IntegratorConfig { horizon, stride, ..self.cfg.integrator };
        let z0 = self.saddle + &plane.v * c;
        let coord = Self::plane_coordinate(plane);
        let traj = match self.boxed {
            Some((domain, _)) => match simulate(self.p, domain, &z0, &icfg) {
                Ok(t) => t,
                Err(Error::Divergence { .. }) => return Ok(None),
                Err(e) => return Err(e),
            },
            None => self.simulate_on_span(&z0, &icfg)?,
        };
        let window = (0.25 * horizon, horizon);
        match oscillation_metrics(&traj, window, Some(coord))? {
            Some(m) if m.amplitude_trend >= self.cfg.tolerances.witness_trend_min => {
                Ok(Some(m.amplitude_trend))
            }
            _ => Ok(None),
        }
    }

    /// Integrate ż = Π f(z) (the dynamics on the affine span); increments
    /// stay in range(Π) so no projection is needed.
    fn simulate_on_span(&self, z0: &DVector<f64>, icfg: &IntegratorConfig) -> Result<Trajectory> {
        let pi = &self.span_projector;
        let h = icfg.step;
        let strides = ((icfg.horizon / (h * icfg.stride as f64)).ceil() as usize).max(1);
        let total = strides * icfg.stride;
        let mut z = z0.clone();
        let mut times = vec![0.0];
        let mut states = vec![z.clone()];
        for k in 1..=total {
            let f0 = pi * self.p.gradient_field(&z)?;
            z = match icfg.method {
                Method::ProjectedEuler => &z + &f0 * h,
                Method::ProjectedHeun => {
                    let pred = &z + &f0 * h;
                    let f1 = pi * self.p.gradient_field(&pred)?;
                    &z + (f0 + f1) * (0.5 * h)
                }
            };
            if k % icfg.stride == 0 {
                times.push(k as f64 * h);
                states.push(z.clone());
            }
        }
        Trajectory::new(times, states, BoxDomain::unbounded(z0.len()))
    }

}

/// Full certificate for the subgradient method on a box domain.
pub fn convergence_certificate(
    p: &SaddleProblem,
    domain: &BoxDomain,
    saddles: &[DVector<f64>],
    cfg: &CertificateConfig,
) -> Result<ConvergenceReport> {
    let ls = limiting_linear_system(p, domain, saddles)?;
    certificate_core(p, &ls, Some(domain), cfg)
}

fn certificate_core(
    p: &SaddleProblem,
    ls: &LimitingSystem,
    domain: Option<&BoxDomain>,
    cfg: &CertificateConfig,
) -> Result<ConvergenceReport> {
    let tols = cfg.tolerances.clone();
    let pi = ls.subspace.projector().clone();
    let m = ls.matrix.clone();
    let w = kernel_invariant_subspace(p, &pi, &ls.saddle, &cfg.r_grid)?;
    let m_w = linalg::restrict(&m, &w);
    let rho = linalg::spectral_radius(&m_w);

    let mut report = ConvergenceReport {
        face_pinned: ls.face.pinned().iter().map(|(&i, &s)| (i, s)).collect(),
        projector: pi.clone(),
        limit_matrix: m.clone(),
        eigenvalues: linalg::sorted_eigenvalues(&m),
        candidate_subspace_dim: w.ncols(),
        verdict: Verdict::Inconclusive,
        witness: None,
        saddle: ls.saddle.clone(),
        tolerances: tols.clone(),
        notes: Vec::new(),
    };

    if rho <= tols.spectral_tol {
        report.verdict = Verdict::ProvedConvergent;
        report.notes.push(
            "all candidate trajectories in the surviving subspace are constant".into(),
        );
        return Ok(report);
    }

    let ctx = CertificateContext {
        p,
        saddle: &ls.saddle,
        boxed: domain.map(|d| (d, &ls.face)),
        jacobian: p.field_jacobian(&ls.saddle)?,
        field_at_saddle: p.gradient_field(&ls.saddle)?,
        cfg,
        span_projector: Some(pi.clone()),
    };

    // Oscillation planes of M restricted to W, lifted to ambient coordinates.
    let planes_w = linalg::skew_planes(&m_w, tols.spectral_tol);
    let planes: Vec<Plane> = planes_w
        .iter()
        .map(|pl| Plane {
            omega: pl.omega,
            v: &w * &pl.v,
            u: &w * &pl.u,
        })
        .collect();
    if planes.is_empty() {
        // rho > tol but no planes: numerical disagreement; stay honest.
        report.notes.push("nonzero spectral radius but no rotation planes found".into());
        return Ok(report);
    }

    // Group planes by frequency.
    let mut groups: Vec<Vec<&Plane>> = Vec::new();
    for plane in &planes {
        match groups
            .iter_mut()
            .find(|g| (g[0].omega - plane.omega).abs() <= 1e-8 * g[0].omega.max(1.0))
        {
            Some(g) => g.push(plane),
            None => groups.push(vec![plane]),
        }
    }

    let rows = ctx.pinned_rows();
    let weakly_active: Vec<&PinnedRow> =
        rows.iter().filter(|r| r.slack <= tols.active_tol).collect();

    let mut all_groups_excluded = true;
    for group in &groups {
        let candidates = surviving_candidates(&ctx.jacobian, group, &weakly_active, tols.rank_tol);
        let mut group_planes: Vec<Plane> = candidates;
        if group_planes.is_empty() && !p.is_quadratic() {
            // The linearized exclusion must be confirmed against the true
            // field before it can support a convergence claim; if a sampled
            // amplitude is feasible the exclusion fails.
            for plane in group {
                if ctx.find_feasible_amplitude(plane, &rows).is_some() {
                    group_planes.push((*plane).clone());
                }
            }
        }
        if group_planes.is_empty() {
            report.notes.push(format!(
                "frequency {:.6}: oscillating candidates violate the pinned-coordinate sign \
                 conditions at every amplitude",
                group[0].omega
            ));
            continue;
        }
        all_groups_excluded = false;
        for plane in &group_planes {
            let Some(c) = ctx.find_feasible_amplitude(plane, &rows) else {
                report.notes.push(format!(
                    "frequency {:.6}: no feasible orbit amplitude within the domain",
                    plane.omega
                ));
                continue;
            };
            if let Some(trend) = ctx.witness_simulation(plane, c)? {
                report.verdict = Verdict::OscillationWitness;
                report.witness = Some(Witness {
                    basis: vec![plane.v.clone(), plane.u.clone()],
                    frequency: plane.omega,
                    amplitude: c,
                    trend,
                });
                return Ok(report);
            }
            report.notes.push(format!(
                "frequency {:.6}: simulated candidate decayed (no witness)",
                plane.omega
            ));
        }
    }

    if all_groups_excluded {
        if p.is_quadratic() {
            report.verdict = Verdict::ProvedConvergent;
            report.notes.push(
                "every oscillation plane is blocked by a weakly active pinned coordinate".into(),
            );
        } else {
            // The exclusion reasoning is exact only for a linear field.
            let linear = exclusion_field_is_linear(&ctx, &planes)?;
            if linear {
                report.verdict = Verdict::ProvedConvergent;
                report.notes.push(
                    "every oscillation plane is blocked by a weakly active pinned coordinate \
                     (field verified linear along sampled orbits)"
                        .into(),
                );
            } else {
                report.notes.push(
                    "planes excluded by linearization only; field is not linear along the \
                     sampled orbits"
                        .into(),
                );
            }
        }
    }
    Ok(report)
}

/// Candidate planes of one frequency group that keep every weakly active
/// pinned row of the field identically zero along the orbit.
///
/// Complex directions ζ = Σ (a_k + i b_k)(v_k − i u_k) in the group's
/// eigenspace must satisfy (J Re ζ)_i = (J Im ζ)_i = 0 for each weakly
/// active row i; the null space of that linear system yields the surviving
/// planes. With no weakly active rows every plane survives.
fn surviving_candidates(
    jacobian: &DMatrix<f64>,
    group: &[&Plane],
    weakly_active: &[&PinnedRow],
    rank_tol: f64,
) -> Vec<Plane> {
    if weakly_active.is_empty() {
        return group.iter().map(|p| (*p).clone()).collect();
    }
    let p_count = group.len();
    let mut system = DMatrix::zeros(2 * weakly_active.len(), 2 * p_count);
    for (r, row) in weakly_active.iter().enumerate() {
        for (k, plane) in group.iter().enumerate() {
            let jv = (jacobian.row(row.coord) * &plane.v)[0];
            let ju = (jacobian.row(row.coord) * &plane.u)[0];
            // (J Re ζ)_i = Σ a_k (J v_k)_i + b_k (J u_k)_i
            system[(2 * r, 2 * k)] = jv;
            system[(2 * r, 2 * k + 1)] = ju;
            // (J Im ζ)_i = Σ b_k (J v_k)_i − a_k (J u_k)_i
            system[(2 * r + 1, 2 * k)] = -ju;
            system[(2 * r + 1, 2 * k + 1)] = jv;
        }
    }
    let null = linalg::null_space(&system, rank_tol);
    let mut out = Vec::new();
    for j in 0..null.ncols() {
        let gamma: DVector<f64> = null.column(j).into();
        let dim = group[0].v.len();
        let mut v = DVector::zeros(dim);
        let mut u = DVector::zeros(dim);
        for (k, plane) in group.iter().enumerate() {
            let (a, b) = (gamma[2 * k], gamma[2 * k + 1]);
            v += &plane.v * a + &plane.u * b;
            u += &plane.u * a - &plane.v * b;
        }
        let norm = v.norm();
        if norm > 1e-9 {
            out.push(Plane { omega: group[0].omega, v: v / norm, u: u / norm });
        }
    }
    out
}

/// Verify f(z̄ + w) = f(z̄) + J w along sampled orbit states of the planes,
/// which is what makes the linearized bracket exclusion exact.
fn exclusion_field_is_linear(ctx: &CertificateContext, planes: &[Plane]) -> Result<bool> {
    let c = 1e-3;
    for plane in planes {
        for k in 0..16 {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
            let w = (&plane.v * phi.cos() + &plane.u * phi.sin()) * c;
            let z = ctx.saddle + &w;
            let f = ctx.p.gradient_field(&z)?;
            let lin = &ctx.field_at_saddle + &ctx.jacobian * &w;
            if (f - lin).norm() > 1e-8 * (1.0 + ctx.field_at_saddle.norm()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Certificate for the dynamics restricted to the affine span of a face.
///
/// The span has no boundary, so the bracket exclusions do not apply and
/// witness orbits are simulated with the constant projector field.
pub fn span_certificate(
    p: &SaddleProblem,
    face: &FaceDescriptor,
    saddle: &DVector<f64>,
    cfg: &CertificateConfig,
) -> Result<ConvergenceReport> {
    let subspace = face.affine_span();
    let pi = subspace.projector();
    let matrix = pi * p.matrix_a(saddle)? * pi;
    let ls = LimitingSystem {
        face: face.clone(),
        subspace: subspace.clone(),
        matrix,
        saddle: saddle.clone(),
    };
    certificate_core(p, &ls, None, cfg)
}

/// Outcome of [`face_criterion_scan`].
#[derive(Debug, Clone, Serialize)]
pub struct FaceScan {
    /// Pinned map of each face with a saddle, and the span verdict.
    pub per_face: Vec<(Vec<(usize, PinSide)>, Verdict)>,
    pub overall: Verdict,
    /// "all-faces" when the face criterion itself concluded, otherwise
    /// "full-domain" (the fallback certificate decided).
    pub overall_via: String,
}

/// Face criterion: if the dynamics on the affine span of every face holding a
/// restricted saddle are convergent, so is the projected method on the box.
/// When some span oscillates the criterion is silent and the full-domain
/// certificate decides.
pub fn face_criterion_scan(
    p: &SaddleProblem,
    domain: &BoxDomain,
    saddles: &[DVector<f64>],
    cfg: &CertificateConfig,
) -> Result<FaceScan> {
    if saddles.is_empty() {
        return Err(Error::InvalidInput("face_criterion_scan needs saddle points".into()));
    }
    let faces = domain.enumerate_faces()?;
    let mut per_face = Vec::new();
    let mut all_convergent = true;
    for face in &faces {
        let on_face: Vec<&DVector<f64>> =
            saddles.iter().filter(|s| face.contains(s, 1e-9)).collect();
        let Some(saddle) = on_face.first() else {
            continue;
        };
        let report = span_certificate(p, face, saddle, cfg)?;
        if report.verdict != Verdict::ProvedConvergent {
            all_convergent = false;
        }
        per_face.push((
            face.pinned().iter().map(|(&i, &s)| (i, s)).collect(),
            report.verdict,
        ));
    }
    if all_convergent {
        return Ok(FaceScan {
            per_face,
            overall: Verdict::ProvedConvergent,
            overall_via: "all-faces".into(),
        });
    }
    let full = convergence_certificate(p, domain, saddles, cfg)?;
    Ok(FaceScan { per_face, overall: full.verdict, overall_via: "full-domain".into() })
}

/// Row of a parameter sweep.
#[derive(Debug, Clone, Serialize)]
pub struct BifurcationRow {
    pub param: f64,
    pub verdict: ScanVerdict,
    pub saddle: Option<DVector<f64>>,
    pub frequency: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanVerdict {
    Convergent,
    Oscillation,
    Inconclusive,
    NoSaddle,
}

impl std::fmt::Display for ScanVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScanVerdict::Convergent => write!(f, "C"),
            ScanVerdict::Oscillation => write!(f, "O"),
            ScanVerdict::Inconclusive => write!(f, "I"),
            ScanVerdict::NoSaddle => write!(f, "NoSaddle"),
        }
    }
}

impl From<Verdict> for ScanVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::ProvedConvergent => ScanVerdict::Convergent,
            Verdict::OscillationWitness => ScanVerdict::Oscillation,
            Verdict::Inconclusive => ScanVerdict::Inconclusive,
        }
    }
}

/// Certificate per parameter value; failures are recorded per row and the
/// scan continues. The family returns (problem, domain, saddles); an empty
/// saddle list is the NoSaddle case.
pub fn bifurcation_scan<F>(family: F, params: &[f64], cfg: &CertificateConfig) -> Vec<BifurcationRow>
where
    F: Fn(f64) -> Result<(SaddleProblem, BoxDomain, Vec<DVector<f64>>)>,
{
    params
        .iter()
        .map(|&param| {
            let (problem, domain, saddles) = match family(param) {
                Ok(t) => t,
                Err(e) => {
                    return BifurcationRow {
                        param,
                        verdict: ScanVerdict::Inconclusive,
                        saddle: None,
                        frequency: None,
                        note: Some(format!("family construction failed: {e}")),
                    };
                }
            };
            if saddles.is_empty() {
                return BifurcationRow {
                    param,
                    verdict: ScanVerdict::NoSaddle,
                    saddle: None,
                    frequency: None,
                    note: Some("no restricted saddle point".into()),
                };
            }
            match convergence_certificate(&problem, &domain, &saddles, cfg) {
                Ok(report) => BifurcationRow {
                    param,
                    verdict: report.verdict.into(),
                    saddle: Some(report.saddle.clone()),
                    frequency: report.witness.as_ref().map(|w| w.frequency),
                    note: None,
                },
                Err(e) => BifurcationRow {
                    param,
                    verdict: ScanVerdict::Inconclusive,
                    saddle: saddles.first().cloned(),
                    frequency: None,
                    note: Some(format!("certificate failed: {e}")),
                },
            }
        })
        .collect()
}
