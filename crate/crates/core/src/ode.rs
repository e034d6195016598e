//! Dormand–Prince 5(4) with adaptive steps, dense evaluation and event location.
//!
//! Dense evaluation re-takes a single step from the last accepted point at or
//! before the query time. That step is shorter than the accepted one, so its
//! local error is bounded by the accepted step's error, and at stored times it
//! returns the stored state exactly.

use crate::error::{GrushinError, Result};

pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step; also the resolution at which events are seen.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: 0.05,
            max_steps: 2_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        OdeOptions {
            rtol,
            atol,
            ..Default::default()
        }
    }
}

/// Event time precision.
pub const EVENT_TOL: f64 = 1e-12;

type EventFn<'a, const N: usize> = &'a dyn Fn(f64, &[f64; N]) -> f64;
type GuardFn<'a, const N: usize> = &'a dyn Fn(f64, &[f64; N]) -> Option<GrushinError>;

/// Optional callbacks: a scalar event whose sign changes are located, and a
/// guard checked after every accepted step that may abort integration.
pub struct Hooks<'a, const N: usize> {
    pub event: Option<EventFn<'a, N>>,
    pub terminal: bool,
    pub guard: Option<GuardFn<'a, N>>,
}

impl<const N: usize> Default for Hooks<'_, N> {
    fn default() -> Self {
        Hooks {
            event: None,
            terminal: false,
            guard: None,
        }
    }
}

impl<'a, const N: usize> Hooks<'a, N> {
    pub fn stop_at(event: EventFn<'a, N>) -> Self {
        Hooks {
            event: Some(event),
            terminal: true,
            guard: None,
        }
    }

    pub fn record(event: EventFn<'a, N>) -> Self {
        Hooks {
            event: Some(event),
            terminal: false,
            guard: None,
        }
    }

    pub fn guarded(mut self, guard: GuardFn<'a, N>) -> Self {
        self.guard = Some(guard);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Solution<S, const N: usize> {
    pub sys: S,
    pub ts: Vec<f64>,
    pub ys: Vec<[f64; N]>,
    /// Located sign changes of the event function, in time order.
    pub events: Vec<(f64, [f64; N])>,
    /// True when integration ended at a terminal event rather than at `t_end`.
    pub stopped: bool,
    pub steps: usize,
    pub rejected: usize,
}

impl<S: OdeSystem<N>, const N: usize> Solution<S, N> {
    pub fn t_start(&self) -> f64 {
        self.ts[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn last(&self) -> [f64; N] {
        *self.ys.last().unwrap()
    }

    /// State at any `t` in `[t_start, t_end]`.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let i = match self.ts.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(i) => return self.ys[i],
            Err(0) => return self.ys[0],
            Err(i) => i - 1,
        };
        if i + 1 >= self.ts.len() {
            return self.last();
        }
        dp_step(&self.sys, self.ts[i], &self.ys[i], t - self.ts[i]).0
    }
}

// Dormand–Prince tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step of size `h`: fifth-order state and error vector.
fn dp_step<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t: f64,
    y: &[f64; N],
    h: f64,
) -> ([f64; N], [f64; N]) {
    if h == 0.0 {
        return (*y, [0.0; N]);
    }
    let mut k = [[0.0; N]; 7];
    k[0] = sys.rhs(t, y);
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = sys.rhs(t + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = [0.0; N];
    for (s, ks) in k.iter().enumerate() {
        for i in 0..N {
            y5[i] += h * B5[s] * ks[i];
            err[i] += h * (B5[s] - B4[s]) * ks[i];
        }
    }
    (y5, err)
}

fn error_norm<const N: usize>(y: &[f64; N], y_new: &[f64; N], err: &[f64; N], o: &OdeOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let scale = o.atol + o.rtol * y[i].abs().max(y_new[i].abs());
        let e = err[i] / scale;
        acc += e * e;
    }
    (acc / N as f64).sqrt()
}

/// Integrates from `(t0, y0)` to `t_end > t0`, landing exactly on `t_end`
/// unless a terminal event fires first.
pub fn integrate<S, const N: usize>(
    sys: S,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    hooks: &Hooks<'_, N>,
) -> Result<Solution<S, N>>
where
    S: OdeSystem<N>,
{
    if !(t_end >= t0) || !t_end.is_finite() {
        return Err(GrushinError::input(format!(
            "integration horizon must be finite and ≥ {t0}, got {t_end}"
        )));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(GrushinError::input(format!("non-finite initial state {y0:?}")));
    }
    let mut sol = Solution {
        sys,
        ts: vec![t0],
        ys: vec![y0],
        events: Vec::new(),
        stopped: false,
        steps: 0,
        rejected: 0,
    };
    let span = t_end - t0;
    if span == 0.0 {
        return Ok(sol);
    }

    let mut t = t0;
    let mut y = y0;
    let mut g_prev = hooks.event.map(|g| g(t, &y));
    let mut h = initial_step(&sol.sys, t, &y, opts).min(span);

    while t < t_end {
        if sol.steps + sol.rejected >= opts.max_steps {
            return Err(GrushinError::numerical(
                "ode",
                format!("step budget {} exhausted at t = {t:e}", opts.max_steps),
            ));
        }
        let remaining = t_end - t;
        let last = h >= remaining * (1.0 - 1e-12);
        let h_try = if last { remaining } else { h };
        let (y_new, err) = dp_step(&sol.sys, t, &y, h_try);
        let e = error_norm(&y, &y_new, &err, opts);
        if !e.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            sol.rejected += 1;
            h = 0.25 * h_try;
        } else if e > 1.0 {
            sol.rejected += 1;
            h = h_try * (0.9 * e.powf(-0.2)).max(0.2);
        } else {
            let t_new = if last { t_end } else { t + h_try };
            sol.steps += 1;

            if let (Some(g), Some(gp)) = (hooks.event, g_prev) {
                let g_new = g(t_new, &y_new);
                if gp != 0.0 && (g_new == 0.0 || g_new.signum() != gp.signum()) {
                    let (te, ye) = locate(&sol.sys, g, t, &y, t_new - t, gp);
                    sol.events.push((te, ye));
                    if hooks.terminal {
                        if te > t {
                            sol.ts.push(te);
                            sol.ys.push(ye);
                        }
                        sol.stopped = true;
                        return Ok(sol);
                    }
                }
                g_prev = Some(g_new);
            }

            t = t_new;
            y = y_new;
            sol.ts.push(t);
            sol.ys.push(y);
            if let Some(guard) = hooks.guard {
                if let Some(fault) = guard(t, &y) {
                    return Err(fault);
                }
            }
            let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h_try * factor).min(opts.h_max);
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(GrushinError::numerical(
                "ode",
                format!("step size underflow (h = {h:e}) at t = {t:e}, y = {y:?}"),
            ));
        }
    }
    Ok(sol)
}

fn initial_step<S: OdeSystem<N>, const N: usize>(sys: &S, t: f64, y: &[f64; N], o: &OdeOptions) -> f64 {
    let f0 = sys.rhs(t, y);
    let norm = |v: &[f64; N]| {
        let mut acc = 0.0;
        for i in 0..N {
            let s = o.atol + o.rtol * y[i].abs();
            acc += (v[i] / s).powi(2);
        }
        (acc / N as f64).sqrt()
    };
    let (d0, d1) = (norm(y), norm(&f0));
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(o.h_max).max(1e-10)
}

/// Bisection for the event inside a step starting at `(t, y)` of length `h`.
fn locate<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    g: EventFn<'_, N>,
    t: f64,
    y: &[f64; N],
    h: f64,
    g_start: f64,
) -> (f64, [f64; N]) {
    let (mut lo, mut hi) = (0.0, h);
    let mut y_hi = dp_step(sys, t, y, hi).0;
    while hi - lo > EVENT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let y_mid = dp_step(sys, t, y, mid).0;
        let g_mid = g(t + mid, &y_mid);
        if g_mid == 0.0 {
            return (t + mid, y_mid);
        }
        if g_mid.signum() == g_start.signum() {
            lo = mid;
        } else {
            hi = mid;
            y_hi = y_mid;
        }
    }
    (t + hi, y_hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, Copy)]
    struct Oscillator;

    impl OdeSystem<2> for Oscillator {
        fn rhs(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
            [y[1], -y[0]]
        }
    }

    #[test]
    fn harmonic_oscillator_lands_on_end() {
        let sol = integrate(Oscillator, 0.0, [0.0, 1.0], 10.0, &OdeOptions::default(), &Hooks::default())
            .unwrap();
        assert_eq!(sol.t_end(), 10.0);
        let y = sol.last();
        assert!((y[0] - 10f64.sin()).abs() < 1e-9);
        assert!((y[1] - 10f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn dense_output_reproduces_samples_and_interpolates() {
        let sol = integrate(Oscillator, 0.0, [0.0, 1.0], 5.0, &OdeOptions::default(), &Hooks::default())
            .unwrap();
        for (t, y) in sol.ts.iter().zip(&sol.ys) {
            assert_eq!(sol.eval(*t), *y);
        }
        for i in 0..100 {
            let t = 0.05 * i as f64 + 0.0123;
            assert!((sol.eval(t)[0] - t.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn terminal_event_at_pi() {
        let g = |_t: f64, y: &[f64; 2]| y[0];
        let sol = integrate(
            Oscillator,
            0.0,
            [0.0, 1.0],
            10.0,
            &OdeOptions::default(),
            &Hooks::stop_at(&g),
        )
        .unwrap();
        assert!(sol.stopped);
        assert!((sol.t_end() - std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn recorded_events_are_all_found() {
        let g = |_t: f64, y: &[f64; 2]| y[1];
        let sol = integrate(
            Oscillator,
            0.0,
            [0.0, 1.0],
            20.0,
            &OdeOptions::default(),
            &Hooks::record(&g),
        )
        .unwrap();
        assert_eq!(sol.events.len(), 6);
        for (k, (te, _)) in sol.events.iter().enumerate() {
            let exact = std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI;
            assert!((te - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn guard_aborts() {
        let guard = |t: f64, _y: &[f64; 2]| (t > 1.0).then(|| GrushinError::numerical("test", "stop"));
        let hooks = Hooks::default().guarded(&guard);
        let err = integrate(Oscillator, 0.0, [0.0, 1.0], 5.0, &OdeOptions::default(), &hooks).unwrap_err();
        assert!(!err.is_input());
    }
}
