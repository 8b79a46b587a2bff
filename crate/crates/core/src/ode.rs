//! Dormand–Prince 5(4) integrator with dense output and a terminal event, plus
//! a classical fixed-step RK4 stepper.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size control parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

/// Terminal event `g(y) = 0`, triggered on a transition from `g < 0` to `g ≥ 0`.
pub struct Event<'a> {
    pub g: &'a dyn Fn(&[f64]) -> f64,
    /// Required accuracy `|g| < tol` of the located crossing.
    pub tol: f64,
}

/// Why integration stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// Reached the requested final time.
    Reached,
    /// The event fired after the state had been strictly inside (`g < 0`).
    Event,
    /// The state started on `g ≥ 0` and never entered `g < 0`.
    ImmediateExit,
}

/// One accepted step's continuous extension.
#[derive(Clone, Debug)]
struct Segment {
    t0: f64,
    h: f64,
    coeffs: Vec<f64>,
}

/// Piecewise quartic interpolant over the accepted steps.
#[derive(Clone, Debug, Default)]
pub struct DenseOutput {
    dim: usize,
    segments: Vec<Segment>,
}

impl DenseOutput {
    pub fn t_start(&self) -> f64 {
        self.segments.first().map_or(0.0, |s| s.t0)
    }

    pub fn t_end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t0 + s.h)
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Step boundaries `t_0 < t_1 < … < t_N`.
    pub fn knots(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.segments.iter().map(|s| s.t0).collect();
        if let Some(last) = self.segments.last() {
            out.push(last.t0 + last.h);
        }
        out
    }

    /// Interpolated state at `t`, clamped to the integrated interval.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let n = self.dim;
        let idx = match self
            .segments
            .binary_search_by(|s| s.t0.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let seg = &self.segments[idx.min(self.segments.len() - 1)];
        let s = if seg.h == 0.0 {
            0.0
        } else {
            ((t - seg.t0) / seg.h).clamp(0.0, 1.0)
        };
        let s1 = 1.0 - s;
        let c = &seg.coeffs;
        for i in 0..n {
            out[i] = c[i]
                + s * (c[n + i] + s1 * (c[2 * n + i] + s * (c[3 * n + i] + s1 * c[4 * n + i])));
        }
    }
}

/// Result of an adaptive integration.
#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub t: f64,
    pub y: Vec<f64>,
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
    pub dense: Option<DenseOutput>,
}

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            err: vec![0.0; n],
        }
    }
}

fn check_finite(t: f64, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("non-finite derivative at t = {t:e}")))
    }
}

/// One Dormand–Prince step of size `h` from `(t, y)` given `k[0] = f(t, y)`.
/// Fills `y_new`, `k[6] = f(t + h, y_new)` and the embedded error estimate.
fn dp_step<F>(f: &mut F, t: f64, y: &[f64], h: f64, st: &mut Stages) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let Stages { k, tmp, y_new, err } = st;
    let [k1, k2, k3, k4, k5, k6, k7] = k;
    for i in 0..n {
        tmp[i] = y[i] + h * A21 * k1[i];
    }
    f(t + C2 * h, tmp, k2)?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    f(t + C3 * h, tmp, k3)?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    f(t + C4 * h, tmp, k4)?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    f(t + C5 * h, tmp, k5)?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    f(t + h, tmp, k6)?;
    for i in 0..n {
        y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
    }
    f(t + h, y_new, k7)?;
    check_finite(t + h, k7)?;
    for i in 0..n {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok(())
}

fn error_norm(y: &[f64], st: &Stages, opts: &OdeOptions) -> f64 {
    let n = y.len();
    let mut acc = 0.0;
    for i in 0..n {
        let sk = opts.abs_tol + opts.rel_tol * y[i].abs().max(st.y_new[i].abs());
        let r = st.err[i] / sk;
        acc += r * r;
    }
    (acc / n as f64).sqrt()
}

fn segment(t: f64, y: &[f64], h: f64, st: &Stages) -> Segment {
    let n = y.len();
    let [k1, _, k3, k4, k5, k6, k7] = &st.k;
    let mut c = vec![0.0; 5 * n];
    for i in 0..n {
        let ydiff = st.y_new[i] - y[i];
        let bspl = h * k1[i] - ydiff;
        c[i] = y[i];
        c[n + i] = ydiff;
        c[2 * n + i] = bspl;
        c[3 * n + i] = ydiff - h * k7[i] - bspl;
        c[4 * n + i] =
            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Segment { t0: t, h, coeffs: c }
}

fn initial_step<F>(f: &mut F, t: f64, y: &[f64], f0: &[f64], span: f64, opts: &OdeOptions) -> Result<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let sk: Vec<f64> = y.iter().map(|v| opts.abs_tol + opts.rel_tol * v.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sk).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span.abs()).min(opts.h_max);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; n];
    f(t + h0, &y1, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span.abs()).min(opts.h_max))
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, stopping early at the
/// optional event. Dense output is recorded when `record` is set.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
    event: Option<&Event<'_>>,
    record: bool,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0) {
        return Err(Error::Precondition("tolerances must be positive".into()));
    }
    if t_end < t0 {
        return Err(Error::Precondition("integration runs forward in time only".into()));
    }
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut dense = record.then(|| DenseOutput { dim: n, segments: Vec::new() });
    let sol = |t: f64, y: Vec<f64>, termination, acc, rej, evals, dense: Option<DenseOutput>| OdeSolution {
        t,
        y,
        termination,
        accepted_steps: acc,
        rejected_steps: rej,
        rhs_evals: evals,
        dense,
    };

    let mut armed = match event {
        Some(ev) => (ev.g)(&y) < 0.0,
        None => true,
    };
    if t_end == t0 {
        return Ok(sol(t, y, Termination::Reached, 0, 0, 0, dense));
    }

    let mut st = Stages::new(n);
    f(t, &y, &mut st.k[0])?;
    check_finite(t, &st.k[0])?;
    let mut evals = 1;
    let mut h = match opts.h_init {
        Some(h) => h.min(t_end - t).min(opts.h_max),
        None => {
            evals += 1;
            initial_step(&mut f, t, &y, &st.k[0].clone(), t_end - t, opts)?
        }
    };
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut last_rejected = false;
    let mut domain_failure: Option<Error> = None;

    loop {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::Numerical(format!(
                "step budget of {} exhausted at t = {t:e}",
                opts.max_steps
            )));
        }
        let h_floor = 1e-14 * t.abs().max(1.0);
        if t_end - t <= h_floor {
            // A sliver left over from rounding: finish in one step.
            h = t_end - t;
        } else if h < h_floor {
            if !armed {
                return Ok(sol(t, y, Termination::ImmediateExit, accepted, rejected, evals, dense));
            }
            if let Some(e) = domain_failure {
                return Err(e);
            }
            return Err(Error::StepUnderflow {
                t,
                detail: format!("step {h:e} below {h_floor:e}"),
            });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let step = dp_step(&mut f, t, &y, h, &mut st);
        evals += 6;
        let err = match step {
            Ok(()) => error_norm(&y, &st, opts),
            Err(Error::Numerical(_)) => f64::INFINITY,
            Err(e @ Error::Domain(_)) => {
                domain_failure = Some(e);
                f64::INFINITY
            }
            Err(e) => return Err(e),
        };
        if err.is_finite() {
            domain_failure = None;
        }
        if !(err <= 1.0) {
            rejected += 1;
            last_rejected = true;
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.2, 1.0) } else { 0.2 };
            h *= fac;
            continue;
        }

        if let Some(ev) = event {
            let g1 = (ev.g)(&st.y_new);
            if g1 >= 0.0 {
                if !armed {
                    // Either the state never enters the domain or the step hopped
                    // across it entirely; shrink until the question is resolved.
                    rejected += 1;
                    h *= 0.2;
                    last_rejected = true;
                    continue;
                }
                let (te, ye, extra) = locate_event(&mut f, t, &y, h, &st, ev)?;
                evals += extra;
                if let Some(d) = dense.as_mut() {
                    let he = te - t;
                    if he > 0.0 {
                        let mut st2 = Stages::new(n);
                        st2.k[0].copy_from_slice(&st.k[0]);
                        dp_step(&mut f, t, &y, he, &mut st2)?;
                        evals += 6;
                        d.segments.push(segment(t, &y, he, &st2));
                    }
                }
                accepted += 1;
                return Ok(sol(te, ye, Termination::Event, accepted, rejected, evals, dense));
            } else {
                armed = true;
            }
        }

        if let Some(d) = dense.as_mut() {
            d.segments.push(segment(t, &y, h, &st));
        }
        accepted += 1;
        t = if last { t_end } else { t + h };
        y.copy_from_slice(&st.y_new);
        let k7 = std::mem::take(&mut st.k[6]);
        st.k[6] = std::mem::replace(&mut st.k[0], k7);
        if last {
            return Ok(sol(t, y, Termination::Reached, accepted, rejected, evals, dense));
        }
        let mut fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        if last_rejected {
            fac = fac.min(1.0);
        }
        last_rejected = false;
        h = (h * fac).min(opts.h_max);
    }
}

/// Bisection on the sub-step length, each trial state produced by a fresh
/// single Dormand–Prince step from the start of the bracketing step.
fn locate_event<F>(
    f: &mut F,
    t: f64,
    y: &[f64],
    h: f64,
    st: &Stages,
    ev: &Event<'_>,
) -> Result<(f64, Vec<f64>, usize)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let mut trial = Stages::new(n);
    trial.k[0].copy_from_slice(&st.k[0]);
    let (mut lo, mut hi) = (0.0, h);
    let mut best = (h, st.y_new.clone());
    let mut evals = 0;
    let g_hi = (ev.g)(&st.y_new);
    if g_hi.abs() < ev.tol {
        return Ok((t + h, best.1, 0));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        dp_step(f, t, y, mid, &mut trial)?;
        evals += 6;
        let g = (ev.g)(&trial.y_new);
        if g.abs() < ev.tol {
            return Ok((t + mid, trial.y_new.clone(), evals));
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
            best = (mid, trial.y_new.clone());
        }
    }
    Ok((t + best.0, best.1, evals))
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f(t, y, &mut k1)?;
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f(t + 0.5 * h, &tmp, &mut k2)?;
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f(t + 0.5 * h, &tmp, &mut k3)?;
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    f(t + h, &tmp, &mut k4)?;
    Ok((0..n)
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Number of equal RK4 steps covering `span` with no step longer than `h_max`.
pub fn rk4_step_count(span: f64, h_max: f64) -> usize {
    ((span.abs() / h_max).ceil() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        dy[0] = y[1];
        dy[1] = -y[0];
        Ok(())
    }

    #[test]
    fn harmonic_oscillator_to_tolerance() {
        let opts = OdeOptions::default();
        let sol = integrate(oscillator, 0.0, &[1.0, 0.0], 10.0, &opts, None, false).unwrap();
        assert_eq!(sol.termination, Termination::Reached);
        assert_eq!(sol.t, 10.0);
        assert!((sol.y[0] - 10f64.cos()).abs() < 1e-9);
        assert!((sol.y[1] + 10f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn dense_output_tracks_solution_between_steps() {
        let opts = OdeOptions::default();
        let sol = integrate(oscillator, 0.0, &[1.0, 0.0], 6.0, &opts, None, true).unwrap();
        let dense = sol.dense.unwrap();
        assert!(dense.segment_count() > 3);
        for k in 0..=60 {
            let t = 0.1 * k as f64;
            let y = dense.eval(t);
            assert!((y[0] - t.cos()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn global_error_scales_with_tolerance() {
        let err_at = |tol: f64| {
            let opts = OdeOptions { rel_tol: tol, abs_tol: tol, ..Default::default() };
            let s = integrate(oscillator, 0.0, &[1.0, 0.0], 5.0, &opts, None, false).unwrap();
            (s.y[0] - 5f64.cos()).abs()
        };
        assert!(err_at(1e-6) > err_at(1e-10));
        assert!(err_at(1e-10) < 1e-8);
    }

    #[test]
    fn event_locates_crossing() {
        // Constant velocity toward x = 1 from x = 0.
        let f = |_t: f64, _y: &[f64], dy: &mut [f64]| {
            dy[0] = 0.7;
            Ok(())
        };
        let g = |y: &[f64]| y[0] - 1.0;
        let ev = Event { g: &g, tol: 1e-12 };
        let sol = integrate(f, 0.0, &[0.0], 100.0, &OdeOptions::default(), Some(&ev), false).unwrap();
        assert_eq!(sol.termination, Termination::Event);
        assert!((sol.t - 1.0 / 0.7).abs() < 1e-11);
        assert!(g(&sol.y).abs() < 1e-12);
    }

    #[test]
    fn event_from_outside_moving_away_exits_immediately() {
        let f = |_t: f64, _y: &[f64], dy: &mut [f64]| {
            dy[0] = 1.0;
            Ok(())
        };
        let g = |y: &[f64]| y[0];
        let ev = Event { g: &g, tol: 1e-12 };
        let sol = integrate(f, 0.0, &[0.0], 5.0, &OdeOptions::default(), Some(&ev), false).unwrap();
        assert_eq!(sol.termination, Termination::ImmediateExit);
        assert_eq!(sol.t, 0.0);
    }

    #[test]
    fn stiff_blowup_reports_underflow_or_numerical_failure() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[0] * y[0];
            Ok(())
        };
        let err = integrate(f, 0.0, &[1.0], 2.0, &OdeOptions::default(), None, false).unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. } | Error::Numerical(_)));
    }

    #[test]
    fn span_below_the_step_floor_is_one_step() {
        let sol = integrate(oscillator, 0.0, &[1.0, 0.0], 5e-15, &OdeOptions::default(), None, false).unwrap();
        assert_eq!(sol.termination, Termination::Reached);
        assert_eq!(sol.accepted_steps, 1);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let run = |steps: usize| {
            let h = 1.0 / steps as f64;
            let mut y = vec![1.0, 0.0];
            let mut f = oscillator;
            for k in 0..steps {
                y = rk4_step(&mut f, k as f64 * h, &y, h).unwrap();
            }
            (y[0] - 1f64.cos()).abs()
        };
        let ratio = run(20) / run(40);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }
}
