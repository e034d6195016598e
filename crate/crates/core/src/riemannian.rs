//! Geodesics from Riemannian points `q0 ∉ Σ` for a general profile.
//!
//! In cylindrical coordinates a geodesic with `K ≠ 0` never reaches the axis
//! and solves
//!
//! ```text
//! r̈ = −w0² f(r) f'(r) + K²/r³,   θ̇ = K/r²,   ż = w0 f(r)²,
//! ```
//!
//! with `ṙ(0) = L/r0`. The geodesic and its reflection through the plane
//! spanned by `q0` and the axis share `r(t)` and have opposite angles, so
//! they meet once the accumulated sweep `∫ |K|/r² dt` reaches `π`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    integrate_cartesian, k_vanishes, radius, Covector, DynOptions, PlanarSystem, Point,
};
use crate::error::{GrushinError, Result};
use crate::ode::{integrate, Hooks, OdeSystem, Solution};
use crate::profile::Profile;
use crate::quadrature::tanh_sinh;
use crate::grushin_r::cut_time_and_locus;
use crate::singular_synthesis::{period, SynthesisResult};

/// Largest accepted `|2E − 1|` for unit-speed inputs.
pub const SHELL_TOL: f64 = 1e-9;

/// Relative gap between the `h` and `h/2` central differences above which
/// the Richardson combination `(4 d_{h/2} − d_h)/3` replaces `d_{h/2}`.
pub const RICHARDSON_TRIGGER: f64 = 1e-9;

fn richardson(d1: f64, d2: f64) -> f64 {
    if (d1 - d2).abs() > RICHARDSON_TRIGGER * d2.abs() {
        (4.0 * d2 - d1) / 3.0
    } else {
        d2
    }
}

/// State `(r, ṙ, θ, z, Θ)`, where `Θ` accumulates `|K|/r²`.
#[derive(Debug, Clone, Copy)]
pub struct CylindricalSystem {
    pub profile: Profile,
    pub w0: f64,
    pub k: f64,
}

impl OdeSystem<5> for CylindricalSystem {
    fn rhs(&self, _t: f64, y: &[f64; 5]) -> [f64; 5] {
        let r = y[0];
        let f = self.profile.eval(r);
        let ffp = r * self.profile.ffprime_over_r(r);
        let kr2 = self.k / (r * r);
        [
            y[1],
            -self.w0 * self.w0 * ffp + kr2 * kr2 * r,
            kr2,
            self.w0 * f * f,
            kr2.abs(),
        ]
    }
}

/// A sample `(t, r, θ, z, ṙ)` of a geodesic in cylindrical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylindricalSample {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub z: f64,
    pub rdot: f64,
}

#[derive(Debug, Clone)]
enum Motion {
    Orbit(Solution<CylindricalSystem, 5>),
    /// `K = 0`: signed radius in the half plane at angle `θ0`.
    Planar(Solution<PlanarSystem, 3>),
}

#[derive(Debug, Clone)]
pub struct CylindricalGeodesic {
    pub profile: Profile,
    pub k: f64,
    pub l: f64,
    pub w0: f64,
    /// The value `E` of the Hamiltonian.
    pub energy: f64,
    pub r0: f64,
    pub theta0: f64,
    pub z0: f64,
    motion: Motion,
}

impl CylindricalGeodesic {
    pub fn t_max(&self) -> f64 {
        match &self.motion {
            Motion::Orbit(s) => s.t_end(),
            Motion::Planar(s) => s.t_end(),
        }
    }

    pub fn eval(&self, t: f64) -> CylindricalSample {
        match &self.motion {
            Motion::Orbit(s) => {
                let y = s.eval(t);
                CylindricalSample {
                    t,
                    r: y[0],
                    theta: y[2],
                    z: y[3],
                    rdot: y[1],
                }
            }
            Motion::Planar(s) => {
                let y = s.eval(t);
                let side = if y[0] < 0.0 { -1.0 } else { 1.0 };
                CylindricalSample {
                    t,
                    r: y[0].abs(),
                    theta: if side < 0.0 { self.theta0 + PI } else { self.theta0 },
                    z: y[2],
                    rdot: side * y[1],
                }
            }
        }
    }

    /// Accumulated sweep `∫ |K|/r²`, zero for planar motion.
    pub fn sweep(&self, t: f64) -> f64 {
        match &self.motion {
            Motion::Orbit(s) => s.eval(t)[4],
            Motion::Planar(_) => 0.0,
        }
    }

    pub fn position(&self, t: f64) -> Point {
        let s = self.eval(t);
        [s.r * s.theta.cos(), s.r * s.theta.sin(), s.z]
    }

    /// Samples at the integrator's accepted steps.
    pub fn samples(&self) -> Vec<CylindricalSample> {
        let ts = match &self.motion {
            Motion::Orbit(s) => &s.ts,
            Motion::Planar(s) => &s.ts,
        };
        ts.iter().map(|&t| self.eval(t)).collect()
    }

    /// Largest residual of `r̈ = −w0² f f' + K²/r³` along the samples, with
    /// `r̈` from central differences of `ṙ`.
    pub fn radial_residual(&self, h: f64) -> f64 {
        let (t0, t1) = (0.0, self.t_max());
        let mut worst = 0.0_f64;
        for s in self.samples() {
            if s.t - h < t0 || s.t + h > t1 || s.r < 1e-6 {
                continue;
            }
            let acc = (self.eval(s.t + h).rdot - self.eval(s.t - h).rdot) / (2.0 * h);
            let ffp = s.r * self.profile.ffprime_over_r(s.r);
            let rhs = -self.w0 * self.w0 * ffp + self.k * self.k / s.r.powi(3);
            worst = worst.max((acc - rhs).abs());
        }
        worst
    }
}

fn check_off_axis(q0: &Point) -> Result<f64> {
    if !q0.iter().all(|c| c.is_finite()) {
        return Err(GrushinError::input(format!("non-finite point {q0:?}")));
    }
    let r0 = radius(q0);
    if r0 == 0.0 {
        return Err(GrushinError::input(format!("base point {q0:?} lies on the axis")));
    }
    Ok(r0)
}

fn check_unit(profile: &Profile, q0: &Point, lam: &Covector) -> Result<()> {
    if !lam.is_finite() {
        return Err(GrushinError::input(format!("non-finite covector {lam:?}")));
    }
    let e2 = lam.energy2(profile, q0);
    if (e2 - 1.0).abs() > SHELL_TOL {
        return Err(GrushinError::input(format!(
            "covector is not on the unit shell: 2E − 1 = {:e}",
            e2 - 1.0
        )));
    }
    Ok(())
}

fn cylindrical_solution(
    profile: &Profile,
    q0: &Point,
    lam: &Covector,
    t_max: f64,
    opts: &DynOptions,
    stop_at_sweep: Option<f64>,
) -> Result<Solution<CylindricalSystem, 5>> {
    let r0 = radius(q0);
    let k = lam.k(q0);
    let sys = CylindricalSystem {
        profile: *profile,
        w0: lam.w0,
        k,
    };
    let y0 = [r0, lam.l(q0) / r0, q0[1].atan2(q0[0]), q0[2], 0.0];
    let floor = opts.r_floor;
    let guard = move |t: f64, y: &[f64; 5]| {
        (y[0] < floor).then(|| {
            GrushinError::numerical(
                "integrate_cylindrical",
                format!("radius {:e} below {floor:e} at t = {t:e} with K = {k:e}", y[0]),
            )
        })
    };
    match stop_at_sweep {
        Some(limit) => {
            let ev = move |_t: f64, y: &[f64; 5]| y[4] - limit;
            integrate(sys, 0.0, y0, t_max, &opts.ode, &Hooks::stop_at(&ev).guarded(&guard))
        }
        None => integrate(sys, 0.0, y0, t_max, &opts.ode, &Hooks::default().guarded(&guard)),
    }
}

/// Integrates a geodesic from `q0 ∉ Σ` in cylindrical form on `[0, t_max]`.
pub fn integrate_cylindrical(
    profile: &Profile,
    q0: &Point,
    lam: &Covector,
    t_max: f64,
    opts: &DynOptions,
) -> Result<CylindricalGeodesic> {
    let r0 = check_off_axis(q0)?;
    if !(t_max >= 0.0) || !t_max.is_finite() || !lam.is_finite() {
        return Err(GrushinError::input("horizon and covector must be finite"));
    }
    let energy2 = lam.energy2(profile, q0);
    let (k, l) = (lam.k(q0), lam.l(q0));
    let motion = if k_vanishes(q0, lam) {
        let sys = PlanarSystem {
            profile: *profile,
            w0: lam.w0,
        };
        Motion::Planar(integrate(sys, 0.0, [r0, l / r0, q0[2]], t_max, &opts.ode, &Hooks::default())?)
    } else {
        Motion::Orbit(cylindrical_solution(profile, q0, lam, t_max, opts, None)?)
    };
    let geo = CylindricalGeodesic {
        profile: *profile,
        k: if matches!(motion, Motion::Planar(_)) { 0.0 } else { k },
        l,
        w0: lam.w0,
        energy: 0.5 * energy2,
        r0,
        theta0: q0[1].atan2(q0[0]),
        z0: q0[2],
        motion,
    };
    let drift = geo
        .samples()
        .iter()
        .map(|s| {
            let f = profile.eval(s.r);
            let ang = if s.r > 0.0 { geo.k * geo.k / (s.r * s.r) } else { 0.0 };
            (s.rdot * s.rdot + ang + geo.w0 * geo.w0 * f * f - energy2).abs()
        })
        .fold(0.0, f64::max);
    if drift > opts.drift_tol * energy2.max(1.0) {
        return Err(GrushinError::numerical(
            "integrate_cylindrical",
            format!("energy drift {drift:e}"),
        ));
    }
    Ok(geo)
}

/// Reflection of the horizontal covector through the line spanned by `(x0, y0)`.
pub fn symmetrize_covector(q0: &Point, lam: &Covector) -> Result<Covector> {
    let r0 = check_off_axis(q0)?;
    let (x, y) = (q0[0] / r0, q0[1] / r0);
    let (a, b) = ((x - y) * (x + y), 2.0 * x * y);
    Ok(Covector::new(a * lam.u0 + b * lam.v0, b * lam.u0 - a * lam.v0, lam.w0))
}

/// First time the sweep `∫ |K|/r²` reaches `π`, or `+∞` if that does not
/// happen by `t_max`.
pub fn conjectured_cut_time(profile: &Profile, q0: &Point, lam: &Covector, t_max: f64, opts: &DynOptions) -> Result<f64> {
    check_off_axis(q0)?;
    check_unit(profile, q0, lam)?;
    if k_vanishes(q0, lam) {
        return Err(GrushinError::input(
            "K = 0 geodesics do not orbit the axis; use the axis hitting time",
        ));
    }
    let sol = cylindrical_solution(profile, q0, lam, t_max, opts, Some(PI))?;
    Ok(if sol.stopped { sol.t_end() } else { f64::INFINITY })
}

/// First time a `K = 0` geodesic from `q0 ∉ Σ` reaches the axis, with `ρ̇` there.
pub fn sigma_hit(profile: &Profile, q0: &Point, lam: &Covector, opts: &DynOptions) -> Result<Option<(f64, f64)>> {
    let r0 = check_off_axis(q0)?;
    if !lam.is_finite() {
        return Err(GrushinError::input(format!("non-finite covector {lam:?}")));
    }
    if !k_vanishes(q0, lam) {
        return Err(GrushinError::input(format!(
            "axis hitting time needs K = 0, got K = {:e}",
            lam.k(q0)
        )));
    }
    let rhodot0 = lam.l(q0) / r0;
    if lam.w0 == 0.0 {
        return Ok((rhodot0 < 0.0).then(|| (r0 / -rhodot0, rhodot0)));
    }
    let energy = 0.5 * lam.energy2(profile, q0);
    // Reaching the axis takes at most one axis-to-axis period.
    let horizon = 1.5 * period(profile, energy, lam.w0)?.period;
    let sys = PlanarSystem {
        profile: *profile,
        w0: lam.w0,
    };
    let ev = |_t: f64, y: &[f64; 3]| y[0];
    let sol = integrate(sys, 0.0, [r0, rhodot0, q0[2]], horizon, &opts.ode, &Hooks::stop_at(&ev))?;
    Ok(sol.stopped.then(|| (sol.t_end(), sol.last()[1])))
}

/// First time a `K = 0` geodesic from `q0 ∉ Σ` reaches the axis; the
/// geodesic minimizes length up to this time.
pub fn sigma_hitting_time(profile: &Profile, q0: &Point, lam: &Covector, opts: &DynOptions) -> Result<f64> {
    Ok(sigma_hit(profile, q0, lam, opts)?.map_or(f64::INFINITY, |(t, _)| t))
}

/// Cut time from `q0 ∉ Σ`. Only `f(r) = r` is certified; otherwise the
/// symmetrizing meeting time (or the axis hitting time when `K = 0`) is
/// reported with `certified = false`.
pub fn riemannian_cut_time(
    profile: &Profile,
    q0: &Point,
    lam: &Covector,
    t_max: f64,
    opts: &DynOptions,
) -> Result<SynthesisResult> {
    check_off_axis(q0)?;
    check_unit(profile, q0, lam)?;
    if profile.is_linear() {
        return cut_time_and_locus(q0, lam);
    }
    let (t, construction) = if k_vanishes(q0, lam) {
        (sigma_hitting_time(profile, q0, lam, opts)?, "axis hitting time, minimizing up to here")
    } else {
        (conjectured_cut_time(profile, q0, lam, t_max, opts)?, "symmetrizing geodesic, conjectured")
    };
    let cut_point = if t.is_finite() {
        Some(integrate_cartesian(profile, q0, lam, t, opts)?.position(t))
    } else {
        None
    };
    Ok(SynthesisResult {
        t_cut: t,
        cut_point,
        length: t,
        certified: false,
        construction: construction.into(),
    })
}

/// Smallest scaled omitted invariant at which a chart is used.
pub const CHART_MARGIN: f64 = 1e-3;

/// Coordinates on the unit energy shell at `q0`; the omitted invariant is
/// recovered from `2E = 1` with the sign of the base covector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    KW,
    LW,
    KL,
}

impl Chart {
    pub const ALL: [Chart; 3] = [Chart::KW, Chart::LW, Chart::KL];

    pub fn name(&self) -> &'static str {
        match self {
            Chart::KW => "KW",
            Chart::LW => "LW",
            Chart::KL => "KL",
        }
    }

    fn coords(&self, q0: &Point, lam: &Covector) -> [f64; 2] {
        let (k, l, w) = (lam.k(q0), lam.l(q0), lam.w0);
        match self {
            Chart::KW => [k, w],
            Chart::LW => [l, w],
            Chart::KL => [k, l],
        }
    }

    fn covector(&self, profile: &Profile, q0: &Point, base: &Covector, c: [f64; 2]) -> Result<Covector> {
        let r0 = radius(q0);
        let f0 = profile.eval(r0);
        let sign = |x: f64| if x < 0.0 { -1.0 } else { 1.0 };
        let root = |v: f64| {
            if v < 0.0 {
                Err(GrushinError::numerical(
                    "chart",
                    format!("{} chart point {c:?} lies off the unit shell", self.name()),
                ))
            } else {
                Ok(v.sqrt())
            }
        };
        let (k, l, w) = match self {
            Chart::KW => {
                let l = sign(base.l(q0)) * root(r0 * r0 * (1.0 - f0 * f0 * c[1] * c[1]) - c[0] * c[0])?;
                (c[0], l, c[1])
            }
            Chart::LW => {
                let k = sign(base.k(q0)) * root(r0 * r0 * (1.0 - f0 * f0 * c[1] * c[1]) - c[0] * c[0])?;
                (k, c[0], c[1])
            }
            Chart::KL => {
                let w = sign(base.w0) * root(1.0 - (c[0] * c[0] + c[1] * c[1]) / (r0 * r0))? / f0;
                (c[0], c[1], w)
            }
        };
        Ok(Covector::from_invariants(q0, k, l, w))
    }

    /// Omitted invariant scaled to `[0, 1]` on the unit shell, where
    /// `(K² + L²)/r0² + f(r0)² w0² = 1`.
    fn omitted(&self, profile: &Profile, q0: &Point, lam: &Covector) -> f64 {
        let r0 = radius(q0);
        match self {
            Chart::KW => lam.l(q0).abs() / r0,
            Chart::LW => lam.k(q0).abs() / r0,
            Chart::KL => lam.w0.abs() * profile.eval(r0),
        }
    }

    /// The chart needs `w0 ≠ 0` and the omitted invariant away from 0;
    /// `K ≠ 0` is needed throughout so that `θ` is continuous.
    fn check(&self, profile: &Profile, q0: &Point, lam: &Covector) -> Result<()> {
        let (k, l, w) = (lam.k(q0), lam.l(q0), lam.w0);
        let ok = w != 0.0 && !k_vanishes(q0, lam) && self.omitted(profile, q0, lam) >= CHART_MARGIN;
        if ok {
            Ok(())
        } else {
            Err(GrushinError::input(format!(
                "{} chart is not valid at K = {k:e}, L = {l:e}, w0 = {w:e}",
                self.name()
            )))
        }
    }
}

/// Endpoints of a covector and its chart perturbations, integrated once and
/// differenced at any time up to the horizon.
struct ChartFamily {
    base: Solution<CylindricalSystem, 5>,
    steps: [f64; 2],
    // [coordinate][level: h, h/2][sign: +, −]
    probes: Vec<Vec<[Solution<CylindricalSystem, 5>; 2]>>,
    w0: f64,
    k: f64,
    profile: Profile,
}

impl ChartFamily {
    fn new(profile: &Profile, chart: Chart, q0: &Point, lam: &Covector, t_max: f64, opts: &DynOptions) -> Result<Self> {
        check_off_axis(q0)?;
        check_unit(profile, q0, lam)?;
        chart.check(profile, q0, lam)?;
        let c = chart.coords(q0, lam);
        let m = chart.omitted(profile, q0, lam);
        let steps = [1e-5 * m * (1.0 + c[0].abs()), 1e-5 * m * (1.0 + c[1].abs())];
        let base = cylindrical_solution(profile, q0, lam, t_max, opts, None)?;
        let mut probes = Vec::with_capacity(2);
        for i in 0..2 {
            let mut levels = Vec::with_capacity(2);
            for h in [steps[i], 0.5 * steps[i]] {
                let mut pair = Vec::with_capacity(2);
                for sgn in [1.0, -1.0] {
                    let mut cc = c;
                    cc[i] += sgn * h;
                    let lam_p = chart.covector(profile, q0, lam, cc).map_err(|_| {
                        GrushinError::input(format!(
                            "{} chart is degenerate here: the omitted invariant is within one step of 0",
                            chart.name()
                        ))
                    })?;
                    pair.push(cylindrical_solution(profile, q0, &lam_p, t_max, opts, None)?);
                }
                let minus = pair.pop().unwrap();
                let plus = pair.pop().unwrap();
                levels.push([plus, minus]);
            }
            probes.push(levels);
        }
        Ok(ChartFamily {
            base,
            steps,
            probes,
            w0: lam.w0,
            k: lam.k(q0),
            profile: *profile,
        })
    }

    /// Partial derivative of state component `comp` in coordinate `i`.
    fn partial(&self, t: f64, i: usize, comp: usize) -> f64 {
        let d = |level: usize| {
            let [p, m] = &self.probes[i][level];
            let h = self.steps[i] / (1 << level) as f64;
            (p.eval(t)[comp] - m.eval(t)[comp]) / (2.0 * h)
        };
        richardson(d(0), d(1))
    }

    fn reduced(&self, t: f64) -> f64 {
        let (ra, ta) = (self.partial(t, 0, 0), self.partial(t, 0, 2));
        let (rb, tb) = (self.partial(t, 1, 0), self.partial(t, 1, 2));
        (ra * tb - rb * ta) / self.w0
    }

    fn full(&self, t: f64) -> f64 {
        let y = self.base.eval(t);
        let f = self.profile.eval(y[0]);
        let col_t = [y[1], self.k / (y[0] * y[0]), self.w0 * f * f];
        let col = |i: usize| [self.partial(t, i, 0), self.partial(t, i, 2), self.partial(t, i, 3)];
        det3(col_t, col(0), col(1))
    }
}

/// Determinant of the matrix with the given columns.
pub fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - b[0] * (a[1] * c[2] - a[2] * c[1]) + c[0] * (a[1] * b[2] - a[2] * b[1])
}

/// The reduced Jacobian of the endpoint map in `chart`, e.g.
/// `(1/w0)(r_K θ_w − r_w θ_K)` for `(K, w0)`, from finite-difference partials.
pub fn jacobian_reduced(
    profile: &Profile,
    chart: Chart,
    q0: &Point,
    lam: &Covector,
    t: f64,
    opts: &DynOptions,
) -> Result<f64> {
    if t == 0.0 {
        check_unit(profile, q0, lam)?;
        chart.check(profile, q0, lam)?;
        return Ok(0.0);
    }
    Ok(ChartFamily::new(profile, chart, q0, lam, t, opts)?.reduced(t))
}

/// The 3×3 determinant of `(r, θ, z)` with respect to `(t, chart)`, with
/// the time column taken from the vector field.
pub fn jacobian_full(profile: &Profile, chart: Chart, q0: &Point, lam: &Covector, t: f64, opts: &DynOptions) -> Result<f64> {
    if t == 0.0 {
        check_unit(profile, q0, lam)?;
        chart.check(profile, q0, lam)?;
        return Ok(0.0);
    }
    Ok(ChartFamily::new(profile, chart, q0, lam, t, opts)?.full(t))
}

/// Finite-difference and quadrature values of the Jacobian of
/// `(t, u0, w0) ↦ Exp(t λ)` along a straight line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StraightLineDet {
    pub t: f64,
    pub finite_difference: f64,
    /// `−(t/v0) ∫₀ᵗ f(r(s))² ds`.
    pub formula: f64,
}

/// `∫₀ᵗ f(|q0 + s (u0, v0)|)² ds`, split at the closest approach to the axis.
pub fn straight_line_fsq_integral(profile: &Profile, q0: &Point, u0: f64, v0: f64, t: f64) -> Result<f64> {
    let integrand = |s: f64| {
        let r = (q0[0] + s * u0).hypot(q0[1] + s * v0);
        let f = profile.eval(r);
        f * f
    };
    let speed2 = u0 * u0 + v0 * v0;
    let s_c = if speed2 > 0.0 {
        -(q0[0] * u0 + q0[1] * v0) / speed2
    } else {
        0.0
    };
    let mut knots = vec![0.0];
    if s_c > 0.0 && s_c < t {
        knots.push(s_c);
    }
    knots.push(t);
    let mut total = 0.0;
    for w in knots.windows(2) {
        total += tanh_sinh(|n| integrand(n.x), w[0], w[1], 1e-13)?.value;
    }
    Ok(total)
}

pub fn straight_line_determinants(
    profile: &Profile,
    q0: &Point,
    lam: &Covector,
    times: &[f64],
    opts: &DynOptions,
) -> Result<Vec<StraightLineDet>> {
    check_unit(profile, q0, lam)?;
    if lam.w0 != 0.0 || lam.v0 == 0.0 {
        return Err(GrushinError::input("straight-line chart needs w0 = 0 and v0 != 0"));
    }
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    if !times.iter().all(|t| *t > 0.0 && t.is_finite()) {
        return Err(GrushinError::input("times must be positive and finite"));
    }
    let f0 = profile.eval(radius(q0));
    let sv = lam.v0.signum();
    let chart = |u0: f64, w0: f64| -> Result<Covector> {
        let rest = 1.0 - u0 * u0 - f0 * f0 * w0 * w0;
        if rest < 0.0 {
            return Err(GrushinError::numerical("straight_line_determinants", "probe left the unit shell"));
        }
        Ok(Covector::new(u0, sv * rest.sqrt(), w0))
    };
    let c = [lam.u0, lam.w0];
    let steps = [1e-5 * (1.0 + c[0].abs()), 1e-5 * (1.0 + c[1].abs())];
    let mut probes = Vec::new();
    for i in 0..2 {
        let mut levels = Vec::new();
        for h in [steps[i], 0.5 * steps[i]] {
            let mut pair = Vec::new();
            for sgn in [1.0, -1.0] {
                let mut cc = c;
                cc[i] += sgn * h;
                pair.push(integrate_cartesian(profile, q0, &chart(cc[0], cc[1])?, t_max, opts)?);
            }
            levels.push(pair);
        }
        probes.push(levels);
    }
    let partial = |t: f64, i: usize| -> [f64; 3] {
        let d = |level: usize| {
            let h = steps[i] / (1 << level) as f64;
            let (p, m) = (probes[i][level][0].position(t), probes[i][level][1].position(t));
            [0, 1, 2].map(|k| (p[k] - m[k]) / (2.0 * h))
        };
        let (d1, d2) = (d(0), d(1));
        [0, 1, 2].map(|k| richardson(d1[k], d2[k]))
    };
    times
        .iter()
        .map(|&t| {
            let col_t = [lam.u0, lam.v0, 0.0];
            let fd = det3(col_t, partial(t, 0), partial(t, 1));
            let formula = -(t / lam.v0) * straight_line_fsq_integral(profile, q0, lam.u0, lam.v0, t)?;
            Ok(StraightLineDet {
                t,
                finite_difference: fd,
                formula,
            })
        })
        .collect()
}

/// A sign change of the reduced determinant; never a certified conjugate time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugateBracket {
    pub t_lo: f64,
    pub t_hi: f64,
    pub certified: bool,
}

/// Sign changes of [`jacobian_reduced`] in the `(K, L)` chart on `(0, t_max]`.
/// Exploratory only: brackets are found on a grid of `n_grid` points and
/// refined by bisection.
pub fn experimental_conjugate_search(
    profile: &Profile,
    q0: &Point,
    lam: &Covector,
    t_max: f64,
    n_grid: usize,
    opts: &DynOptions,
) -> Result<Vec<ConjugateBracket>> {
    if lam.w0 == 0.0 {
        return Ok(Vec::new());
    }
    if !(t_max > 0.0) || !t_max.is_finite() || n_grid < 2 {
        return Err(GrushinError::input("need a positive finite horizon and at least two grid points"));
    }
    let fam = ChartFamily::new(profile, Chart::KL, q0, lam, t_max, opts)?;
    let mut out = Vec::new();
    let dt = t_max / n_grid as f64;
    let mut prev = (dt, fam.reduced(dt));
    for i in 2..=n_grid {
        let t = dt * i as f64;
        let v = fam.reduced(t);
        if v != 0.0 && prev.1 != 0.0 && v.signum() != prev.1.signum() {
            let (mut lo, mut hi) = (prev.0, t);
            let s_lo = prev.1.signum();
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if fam.reduced(mid).signum() == s_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(ConjugateBracket {
                t_lo: lo,
                t_hi: hi,
                certified: false,
            });
        }
        prev = (t, v);
    }
    Ok(out)
}
