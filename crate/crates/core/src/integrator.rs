//! Discrete approximation of the projected semi-flow and trajectory
//! diagnostics.
//!
//! The default scheme is project-after-step Euler,
//! `z <- P_K(z + h f(z))`, which for box domains reproduces the bracket
//! dynamics exactly at active constraints. A projected Heun variant is
//! available for accuracy studies.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::problem::SaddleProblem;

/// State norm beyond which a run is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ProjectedEuler,
    ProjectedHeun,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Step size in time units.
    pub step: f64,
    /// Total simulated time.
    pub horizon: f64,
    /// Output subsampling: one stored sample every `stride` steps.
    pub stride: usize,
    /// Tolerance used by equilibrium detection.
    pub equilibrium_tol: f64,
    pub method: Method,
}

impl IntegratorConfig {
    pub fn new(step: f64, horizon: f64, stride: usize, equilibrium_tol: f64, method: Method) -> Result<Self> {
        let cfg = Self { step, horizon, stride, equilibrium_tol, method };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::InvalidInput("step and horizon must be positive".into()));
        }
        if self.step > self.horizon {
            return Err(Error::InvalidInput("step must not exceed horizon".into()));
        }
        if self.stride == 0 {
            return Err(Error::InvalidInput("stride must be at least 1".into()));
        }
        if !(self.equilibrium_tol > 0.0) {
            return Err(Error::InvalidInput("equilibrium_tol must be positive".into()));
        }
        Ok(())
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            horizon: 100.0,
            stride: 10,
            equilibrium_tol: 1e-6,
            method: Method::ProjectedEuler,
        }
    }
}

/// A time-stamped state sequence produced by the integrator.
///
/// Samples are uniformly spaced by `step * stride` and every stored state
/// lies in the domain (exactly, for boxes, by construction).
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
    domain: BoxDomain,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<DVector<f64>>, domain: BoxDomain) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(Error::InvalidInput("times and states must be equal-length and non-empty".into()));
        }
        for s in &states {
            if !domain.contains(s, 1e-9) {
                return Err(Error::OutsideDomain("trajectory state outside the domain".into()));
            }
        }
        Ok(Self { times, states, domain })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &DVector<f64> {
        &self.states[i]
    }

    pub fn last_state(&self) -> &DVector<f64> {
        self.states.last().expect("non-empty trajectory")
    }

    /// Index range of samples with time in `[t0, t1]`.
    pub fn window(&self, t0: f64, t1: f64) -> Result<std::ops::Range<usize>> {
        if t0 > t1 || t0 < self.times[0] - 1e-12 || t1 > *self.times.last().unwrap() + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "window [{t0}, {t1}] outside trajectory span [{}, {}]",
                self.times[0],
                self.times.last().unwrap()
            )));
        }
        let lo = self.times.partition_point(|&t| t < t0 - 1e-12);
        let hi = self.times.partition_point(|&t| t <= t1 + 1e-12);
        Ok(lo..hi)
    }

    /// CSV export: header `t,z_0,...,z_{d-1}`, one row per retained sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 0..self.dim() {
            out.push_str(&format!(",z_{i}"));
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t}"));
            for v in s.iter() {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parse a trajectory previously written by [`Trajectory::to_csv`].
    pub fn from_csv(text: &str, domain: BoxDomain) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty CSV".into()))?;
        let cols = header.split(',').count();
        if cols != domain.dim() + 1 {
            return Err(Error::DimensionMismatch { expected: domain.dim() + 1, got: cols });
        }
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols {
                return Err(Error::InvalidInput(format!("row {} has {} fields", lineno + 2, fields.len())));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("row {}: {e}", lineno + 2)))
            };
            times.push(parse(fields[0])?);
            states.push(DVector::from_iterator(
                cols - 1,
                fields[1..].iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?,
            ));
        }
        Trajectory::new(times, states, domain)
    }
}

pub(crate) struct RawRun {
    pub trajectory: Trajectory,
    pub divergence: Option<(f64, DVector<f64>)>,
}

/// One integration step of the chosen method.
fn step_once(
    p: &SaddleProblem,
    domain: &BoxDomain,
    z: &DVector<f64>,
    h: f64,
    method: Method,
) -> Result<DVector<f64>> {
    match method {
        Method::ProjectedEuler => {
            let f = p.gradient_field(z)?;
            domain.project_point(&(z + f * h))
        }
        Method::ProjectedHeun => {
            let f0 = p.gradient_field(z)?;
            let predictor = domain.project_point(&(z + &f0 * h))?;
            let f1 = p.gradient_field(&predictor)?;
            domain.project_point(&(z + (f0 + f1) * (0.5 * h)))
        }
    }
}

/// Integrate, collecting samples; divergence is reported in-band so callers
/// that must not crash (scenario runs) can keep the partial trajectory.
pub(crate) fn simulate_raw(
    p: &SaddleProblem,
    domain: &BoxDomain,
    z0: &DVector<f64>,
    cfg: &IntegratorConfig,
) -> Result<RawRun> {
    cfg.validate()?;
    if p.dim() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: domain.dim() });
    }
    let projected = domain.project_point(z0)?;
    if (&projected - z0).norm() > 1e-6 {
        return Err(Error::OutsideDomain(
            "initial state further than 1e-6 from the domain".into(),
        ));
    }
    let mut z = projected;
    // Round the step count up to a whole number of strides so that stored
    // samples stay uniformly spaced while covering [0, horizon].
    let strides = ((cfg.horizon / (cfg.step * cfg.stride as f64)).ceil() as usize).max(1);
    let total_steps = strides * cfg.stride;
    let mut times = Vec::with_capacity(strides + 1);
    let mut states = Vec::with_capacity(strides + 1);
    times.push(0.0);
    states.push(z.clone());
    let mut divergence = None;
    'outer: for k in 1..=total_steps {
        let next = step_once(p, domain, &z, cfg.step, cfg.method)?;
        let t = k as f64 * cfg.step;
        if next.iter().any(|v| !v.is_finite()) || next.norm() > DIVERGENCE_NORM {
            divergence = Some((t, z.clone()));
            break 'outer;
        }
        z = next;
        if k % cfg.stride == 0 {
            times.push(t);
            states.push(z.clone());
        }
    }
    Ok(RawRun {
        trajectory: Trajectory::new(times, states, domain.clone())?,
        divergence,
    })
}

/// Run the projected integrator from `z0` over `[0, horizon]`.
pub fn simulate(
    p: &SaddleProblem,
    domain: &BoxDomain,
    z0: &DVector<f64>,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let run = simulate_raw(p, domain, z0, cfg)?;
    if let Some((time, last_state)) = run.divergence {
        return Err(Error::Divergence { time, last_state });
    }
    Ok(run.trajectory)
}

/// Euclidean distance per time sample between two runs on the same grid.
pub fn pairwise_distance(t1: &Trajectory, t2: &Trajectory) -> Result<Vec<f64>> {
    if t1.len() != t2.len() || t1.dim() != t2.dim() || t1.domain() != t2.domain() {
        return Err(Error::InvalidInput("trajectories on different grids or domains".into()));
    }
    for (a, b) in t1.times().iter().zip(t2.times()) {
        if (a - b).abs() > 1e-12 {
            return Err(Error::InvalidInput("time grids differ".into()));
        }
    }
    Ok(t1
        .states()
        .iter()
        .zip(t2.states())
        .map(|(a, b)| (a - b).norm())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationMetrics {
    /// Mean spacing of upward zero crossings of the demeaned signal.
    pub period_estimate: f64,
    /// (last-quarter peak mean) / (first-quarter peak mean).
    pub amplitude_trend: f64,
    pub crossings: usize,
}

/// Oscillation diagnostics over a time window.
///
/// `coordinate` selects the scalar signal; `None` picks the coordinate with
/// the largest variance in the window. Returns `Ok(None)` when the metrics
/// are undefined (fewer than 3 upward crossings, or a quarter without peaks).
pub fn oscillation_metrics(
    t: &Trajectory,
    window: (f64, f64),
    coordinate: Option<usize>,
) -> Result<Option<OscillationMetrics>> {
    let range = t.window(window.0, window.1)?;
    if range.len() < 4 {
        return Ok(None);
    }
    let idx: Vec<usize> = range.collect();
    let coord = match coordinate {
        Some(c) if c < t.dim() => c,
        Some(c) => {
            return Err(Error::InvalidInput(format!("coordinate {c} out of range")));
        }
        None => {
            // Highest-variance coordinate in the window.
            let mut best = (0usize, -1.0f64);
            for c in 0..t.dim() {
                let vals: Vec<f64> = idx.iter().map(|&i| t.state(i)[c]).collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
                if var > best.1 {
                    best = (c, var);
                }
            }
            best.0
        }
    };
    let vals: Vec<f64> = idx.iter().map(|&i| t.state(i)[coord]).collect();
    let times: Vec<f64> = idx.iter().map(|&i| t.times()[i]).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let signal: Vec<f64> = vals.iter().map(|v| v - mean).collect();

    // Upward zero crossings with linear interpolation.
    let mut crossings = Vec::new();
    for k in 0..signal.len() - 1 {
        if signal[k] < 0.0 && signal[k + 1] >= 0.0 {
            let frac = signal[k] / (signal[k] - signal[k + 1]);
            crossings.push(times[k] + frac * (times[k + 1] - times[k]));
        }
    }
    if crossings.len() < 3 {
        return Ok(None);
    }
    let period_estimate =
        (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64;

    // Peaks of the rectified signal, split into window quarters by time.
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for k in 1..signal.len() - 1 {
        let a = signal[k].abs();
        if a >= signal[k - 1].abs() && a >= signal[k + 1].abs() && a > 0.0 {
            peaks.push((times[k], a));
        }
    }
    let span = window.1 - window.0;
    let first: Vec<f64> = peaks
        .iter()
        .filter(|(t, _)| *t <= window.0 + 0.25 * span)
        .map(|(_, a)| *a)
        .collect();
    let last: Vec<f64> = peaks
        .iter()
        .filter(|(t, _)| *t >= window.1 - 0.25 * span)
        .map(|(_, a)| *a)
        .collect();
    if first.is_empty() || last.is_empty() {
        return Ok(None);
    }
    let first_mean = first.iter().sum::<f64>() / first.len() as f64;
    let last_mean = last.iter().sum::<f64>() / last.len() as f64;
    if first_mean <= 0.0 {
        return Ok(None);
    }
    Ok(Some(OscillationMetrics {
        period_estimate,
        amplitude_trend: last_mean / first_mean,
        crossings: crossings.len(),
    }))
}

/// Terminal state if the run has settled onto a restricted saddle.
///
/// Settled means the state changes by at most `tol` over the final 10% of
/// samples and the terminal state passes the saddle test at 10 * tol.
pub fn detect_equilibrium(
    t: &Trajectory,
    p: &SaddleProblem,
    tol: f64,
) -> Option<DVector<f64>> {
    let n = t.len();
    let tail_start = n - (n / 10).max(2).min(n - 1);
    let last = t.last_state();
    let settled = (tail_start..n).all(|i| (t.state(i) - last).norm() <= tol);
    if !settled {
        return None;
    }
    match p.is_restricted_saddle(t.domain(), last, 10.0 * tol) {
        Ok(true) => Some(last.clone()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cfg(step: f64, horizon: f64, stride: usize) -> IntegratorConfig {
        IntegratorConfig { step, horizon, stride, ..Default::default() }
    }

    #[test]
    fn example1_converges_for_negative_a() {
        let p = builtins::example1_problem();
        let k = builtins::ka_domain(-1.0);
        let z0 = nalgebra::DVector::from_row_slice(&[1.0, 1.0, 1.0]);
        let t = simulate(&p, &k, &z0, &cfg(1e-3, 100.0, 100)).unwrap();
        assert!(t.last_state().norm() <= 1e-3, "final = {}", t.last_state());
    }

    #[test]
    fn equilibrium_start_stays_constant() {
        let a = 1.0;
        let p = builtins::example1_problem();
        let k = builtins::ka_domain(a);
        let saddle = nalgebra::DVector::from_row_slice(&[a, -a, 0.0]);
        let t = simulate(&p, &k, &saddle, &cfg(1e-3, 5.0, 10)).unwrap();
        for s in t.states() {
            assert!((s - &saddle).norm() < 1e-12);
        }
    }

    #[test]
    fn example2_dual_escapes_for_positive_a() {
        // After the constraint activates, dy/dt = -x1 <= -a.
        let a = 1.0;
        let p = builtins::example2_problem();
        let k = builtins::ka_domain(a);
        let z0 = nalgebra::DVector::from_row_slice(&[1.0, 0.0, 0.0]);
        let t = simulate(&p, &k, &z0, &cfg(1e-3, 50.0, 10)).unwrap();
        let mut active_from = None;
        for i in 0..t.len() {
            if (t.state(i)[0] - a).abs() <= 1e-6 {
                active_from = Some(i);
                break;
            }
        }
        let start = active_from.expect("bound never became active");
        for i in start..t.len() - 1 {
            let dt = t.times()[i + 1] - t.times()[i];
            let slope = (t.state(i + 1)[2] - t.state(i)[2]) / dt;
            assert!(slope <= -a + 1e-3, "slope {slope} at t = {}", t.times()[i]);
        }
        assert!(detect_equilibrium(&t, &p, 1e-6).is_none());
    }

    #[test]
    fn identical_starts_give_zero_distance() {
        let p = builtins::example1_problem();
        let k = builtins::ka_domain(0.0);
        let z0 = nalgebra::DVector::from_row_slice(&[1.0, 0.5, 0.2]);
        let t1 = simulate(&p, &k, &z0, &cfg(1e-3, 5.0, 10)).unwrap();
        let t2 = simulate(&p, &k, &z0, &cfg(1e-3, 5.0, 10)).unwrap();
        assert!(pairwise_distance(&t1, &t2).unwrap().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn pairwise_distance_contracts_within_slack() {
        let p = builtins::example1_problem();
        let k = builtins::ka_domain(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = cfg(1e-3, 20.0, 1);
        // Local Lipschitz bound of the linear field: |J|_2.
        let l = p
            .field_jacobian(&nalgebra::DVector::zeros(3))
            .unwrap()
            .svd(false, false)
            .singular_values[0];
        for _ in 0..5 {
            let sample = |rng: &mut ChaCha8Rng| {
                k.project_point(&nalgebra::DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.5)))
                    .unwrap()
            };
            let t1 = simulate(&p, &k, &sample(&mut rng), &c).unwrap();
            let t2 = simulate(&p, &k, &sample(&mut rng), &c).unwrap();
            let d = pairwise_distance(&t1, &t2).unwrap();
            for w in d.windows(2) {
                assert!(w[1] <= w[0] + 2.0 * c.step * l, "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn time_shift_on_periodic_orbit_keeps_constant_distance() {
        let a = 1.0;
        let p = builtins::example1_problem();
        let k = builtins::ka_domain(a);
        // Start on the face oscillation with amplitude 0.5.
        let z0 = nalgebra::DVector::from_row_slice(&[a, -a + 0.5, 0.0]);
        let heun = IntegratorConfig { method: Method::ProjectedHeun, ..cfg(1e-3, 30.0, 10) };
        let warm = simulate(&p, &k, &z0, &IntegratorConfig { horizon: 1.0, ..heun }).unwrap();
        let shifted0 = warm.last_state().clone();
        let t1 = simulate(&p, &k, &z0, &heun).unwrap();
        let t2 = simulate(&p, &k, &shifted0, &heun).unwrap();
        let d = pairwise_distance(&t1, &t2).unwrap();
        let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        assert!(hi - lo <= 1e-3, "distance varied by {}", hi - lo);
    }

    #[test]
    fn oscillation_metrics_on_face_orbit() {
        let a = 1.0;
        let p = builtins::example1_problem();
        let k = builtins::ka_domain(a);
        let z0 = nalgebra::DVector::from_row_slice(&[a, -a + 0.5, 0.0]);
        let t = simulate(&p, &k, &z0, &cfg(1e-3, 100.0, 10)).unwrap();
        let m = oscillation_metrics(&t, (0.0, 100.0), Some(1)).unwrap().unwrap();
        let period_err = (m.period_estimate - 2.0 * std::f64::consts::PI).abs()
            / (2.0 * std::f64::consts::PI);
        assert!(period_err <= 0.02, "period {}", m.period_estimate);
        assert!(m.amplitude_trend >= 0.95);
    }

    #[test]
    fn oscillation_metrics_on_converging_run() {
        let p = builtins::example1_problem();
        let k = builtins::ka_domain(-1.0);
        let z0 = nalgebra::DVector::from_row_slice(&[1.0, 1.0, 1.0]);
        let t = simulate(&p, &k, &z0, &cfg(1e-3, 100.0, 10)).unwrap();
        let m = oscillation_metrics(&t, (0.0, 100.0), Some(1)).unwrap().unwrap();
        assert!(m.amplitude_trend < 0.1, "trend {}", m.amplitude_trend);
    }

    #[test]
    fn oscillation_metrics_undefined_on_constant_run() {
        let a = 2.0;
        let p = builtins::example1_problem();
        let k = builtins::ka_domain(a);
        let saddle = nalgebra::DVector::from_row_slice(&[a, -a, 0.0]);
        let t = simulate(&p, &k, &saddle, &cfg(1e-3, 10.0, 10)).unwrap();
        assert!(oscillation_metrics(&t, (0.0, 10.0), Some(1)).unwrap().is_none());
    }

    #[test]
    fn detect_equilibrium_on_converging_and_oscillating_runs() {
        let p = builtins::example1_problem();
        let k = builtins::ka_domain(-1.0);
        let z0 = nalgebra::DVector::from_row_slice(&[1.0, 1.0, 1.0]);
        let t = simulate(&p, &k, &z0, &cfg(1e-3, 100.0, 10)).unwrap();
        let eq = detect_equilibrium(&t, &p, 1e-6).expect("should settle");
        assert!(eq.norm() <= 1e-3);

        let k1 = builtins::ka_domain(1.0);
        let z0 = nalgebra::DVector::from_row_slice(&[1.0, -0.5, 0.0]);
        let t = simulate(&p, &k1, &z0, &cfg(1e-3, 100.0, 10)).unwrap();
        assert!(detect_equilibrium(&t, &p, 1e-6).is_none());

        let saddle = nalgebra::DVector::from_row_slice(&[1.0, -1.0, 0.0]);
        let t = simulate(&p, &k1, &saddle, &cfg(1e-3, 10.0, 10)).unwrap();
        let eq = detect_equilibrium(&t, &p, 1e-6).expect("constant run is settled");
        assert!((eq - saddle).norm() < 1e-12);
    }

    #[test]
    fn step_halving_is_first_order() {
        let p = builtins::example1_problem();
        let k = builtins::ka_domain(0.25);
        let z0 = nalgebra::DVector::from_row_slice(&[1.0, 1.0, 1.0]);
        let run = |h: f64| {
            simulate(&p, &k, &z0, &cfg(h, 10.0, (0.5 / h) as usize))
                .unwrap()
                .last_state()
                .clone()
        };
        let d1 = (run(2e-3) - run(1e-3)).norm();
        let d2 = (run(1e-3) - run(5e-4)).norm();
        assert!(d1 <= 0.05, "step-halving gap too large: {d1}");
        let ratio = d1 / d2.max(1e-15);
        assert!(ratio > 1.4 && ratio < 3.0, "not first order: ratio {ratio}");
    }

    #[test]
    fn saddle_distance_is_monotone_within_slack() {
        let a = 0.5;
        let p = builtins::example1_problem();
        let k = builtins::ka_domain(a);
        let saddle = nalgebra::DVector::from_row_slice(&[a, -a, 0.0]);
        let c = cfg(1e-3, 50.0, 1);
        let l = 3.0;
        let z0 = nalgebra::DVector::from_row_slice(&[2.0, 1.0, -1.0]);
        let t = simulate(&p, &k, &z0, &c).unwrap();
        let mut prev = f64::INFINITY;
        for s in t.states() {
            let d = (s - &saddle).norm();
            assert!(d <= prev + 2.0 * c.step * l);
            prev = d;
        }
    }

    #[test]
    fn states_never_leave_domain() {
        let p = builtins::example2_problem();
        let k = builtins::ka_domain(0.0);
        let z0 = nalgebra::DVector::from_row_slice(&[1.0, 0.5, 0.5]);
        let t = simulate(&p, &k, &z0, &cfg(1e-3, 30.0, 10)).unwrap();
        for s in t.states() {
            assert!(s[0] >= 0.0);
        }
    }

    #[test]
    fn initial_state_outside_tolerance_is_rejected() {
        let p = builtins::example1_problem();
        let k = builtins::ka_domain(0.0);
        let z0 = nalgebra::DVector::from_row_slice(&[-0.1, 0.0, 0.0]);
        assert!(matches!(
            simulate(&p, &k, &z0, &cfg(1e-3, 1.0, 1)),
            Err(Error::OutsideDomain(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let p = builtins::example1_problem();
        let k = builtins::ka_domain(0.0);
        let z0 = nalgebra::DVector::from_row_slice(&[1.0, 0.3, -0.4]);
        let t = simulate(&p, &k, &z0, &cfg(1e-2, 2.0, 5)).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("t,z_0,z_1,z_2\n"));
        let back = Trajectory::from_csv(&csv, k).unwrap();
        assert_eq!(back.len(), t.len());
        for i in 0..t.len() {
            assert_eq!(back.times()[i], t.times()[i]);
            assert_eq!(back.state(i), t.state(i));
        }
    }
}
