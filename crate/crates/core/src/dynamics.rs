//! Hamiltonian geodesic flow in Cartesian and reduced planar form, and the
//! variational equation in `w0` along geodesics leaving the axis.
//!
//! Cartesian form, with `w ≡ w0` constant and `k(r) = f(r) f'(r) / r`:
//!
//! ```text
//! ẋ = u,  ẏ = v,  ż = w0 f(r)²,  u̇ = −w0² k(r) x,  v̇ = −w0² k(r) y
//! ```
//!
//! When `K = x v − y u` vanishes the motion stays in a vertical half plane
//! and is described by a signed radius `ρ` with `ρ̈ = −w0² g(ρ) g'(ρ)`, where
//! `g` is the odd extension of `f`. That form is `C¹` through the axis.

use serde::{Deserialize, Serialize};

use crate::error::{GrushinError, Result};
use crate::ode::{integrate, Hooks, OdeOptions, OdeSystem, Solution, EVENT_TOL};
use crate::profile::Profile;

pub type Point = [f64; 3];

pub fn radius(q: &Point) -> f64 {
    q[0].hypot(q[1])
}

/// Initial momentum `(u0, v0, w0)` at a base point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Covector {
    pub u0: f64,
    pub v0: f64,
    pub w0: f64,
}

impl Covector {
    pub fn new(u0: f64, v0: f64, w0: f64) -> Self {
        Covector { u0, v0, w0 }
    }

    /// `2E = u0² + v0² + f(r0)² w0²`.
    pub fn energy2(&self, profile: &Profile, q0: &Point) -> f64 {
        let f = profile.eval(radius(q0));
        self.u0 * self.u0 + self.v0 * self.v0 + f * f * self.w0 * self.w0
    }

    /// Angular momentum `K = x0 v0 − y0 u0`.
    pub fn k(&self, q0: &Point) -> f64 {
        q0[0] * self.v0 - q0[1] * self.u0
    }

    /// Radial momentum `L = x0 u0 + y0 v0`.
    pub fn l(&self, q0: &Point) -> f64 {
        q0[0] * self.u0 + q0[1] * self.v0
    }

    /// Rescales to the unit energy shell `2E = 1`.
    pub fn normalized(&self, profile: &Profile, q0: &Point) -> Result<Covector> {
        let e2 = self.energy2(profile, q0);
        if !(e2 > 0.0) || !e2.is_finite() {
            return Err(GrushinError::input(format!(
                "covector {self:?} has zero energy at {q0:?}"
            )));
        }
        let s = e2.sqrt();
        Ok(Covector::new(self.u0 / s, self.v0 / s, self.w0 / s))
    }

    /// The covector at `q0 ∉ Σ` with prescribed `K`, `L` and `w0`.
    pub fn from_invariants(q0: &Point, k: f64, l: f64, w0: f64) -> Covector {
        let r2 = q0[0] * q0[0] + q0[1] * q0[1];
        Covector::new(
            (q0[0] * l - q0[1] * k) / r2,
            (q0[1] * l + q0[0] * k) / r2,
            w0,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.u0.is_finite() && self.v0.is_finite() && self.w0.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub u: f64,
    pub v: f64,
    pub w0: f64,
}

impl State3D {
    pub fn position(&self) -> Point {
        [self.x, self.y, self.z]
    }

    pub fn r(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn hamiltonian(&self, profile: &Profile) -> f64 {
        let f = profile.eval(self.r());
        0.5 * (self.u * self.u + self.v * self.v + f * f * self.w0 * self.w0)
    }

    pub fn k(&self) -> f64 {
        self.x * self.v - self.y * self.u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarState {
    pub rho: f64,
    pub rhodot: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynOptions {
    pub ode: OdeOptions,
    /// Largest tolerated drift of `H` and `K`, relative to `max(1, |initial value|)`.
    pub drift_tol: f64,
    /// Radius below which `K = 0` Cartesian integration hands off to planar form.
    pub switch_radius: f64,
    /// A `K ≠ 0` trajectory below this radius is inconsistent.
    pub r_floor: f64,
}

impl Default for DynOptions {
    fn default() -> Self {
        DynOptions {
            ode: OdeOptions::default(),
            drift_tol: 1e-8,
            switch_radius: 1e-6,
            r_floor: 1e-9,
        }
    }
}

impl DynOptions {
    /// Options for finite-difference work, where integration error must sit
    /// well below the difference step.
    pub fn precise() -> Self {
        DynOptions {
            ode: OdeOptions::with_tol(1e-13, 1e-15),
            ..Default::default()
        }
    }

    pub fn with_rtol(rtol: f64) -> Self {
        DynOptions {
            ode: OdeOptions::with_tol(rtol, rtol * 1e-2),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CartesianSystem {
    pub profile: Profile,
    pub w0: f64,
}

impl OdeSystem<5> for CartesianSystem {
    fn rhs(&self, _t: f64, y: &[f64; 5]) -> [f64; 5] {
        let r = y[0].hypot(y[1]);
        let f = self.profile.eval(r);
        let k = self.profile.ffprime_over_r(r);
        let w2 = self.w0 * self.w0;
        [y[3], y[4], self.w0 * f * f, -w2 * k * y[0], -w2 * k * y[1]]
    }
}

/// `(ρ, ρ̇, z)` in a vertical half plane.
#[derive(Debug, Clone, Copy)]
pub struct PlanarSystem {
    pub profile: Profile,
    pub w0: f64,
}

impl OdeSystem<3> for PlanarSystem {
    fn rhs(&self, _t: f64, y: &[f64; 3]) -> [f64; 3] {
        let g = self.profile.odd();
        [y[1], -self.w0 * self.w0 * g.g_gprime(y[0]), self.w0 * g.gsq(y[0])]
    }
}

/// Planar system together with its `w0`-derivatives `(ρ_w, ρ̇_w, z_w)`.
#[derive(Debug, Clone, Copy)]
pub struct VariationalSystem {
    pub profile: Profile,
    pub w0: f64,
}

impl OdeSystem<6> for VariationalSystem {
    fn rhs(&self, _t: f64, y: &[f64; 6]) -> [f64; 6] {
        let g = self.profile.odd();
        let w = self.w0;
        let ggp = g.g_gprime(y[0]);
        let gsq = g.gsq(y[0]);
        [
            y[1],
            -w * w * ggp,
            w * gsq,
            y[4],
            -2.0 * w * ggp - 0.5 * w * w * g.gsq_deriv2(y[0]) * y[3],
            gsq + 2.0 * w * ggp * y[3],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DriftReport {
    pub max_dh: f64,
    pub max_dk: f64,
}

#[derive(Debug, Clone)]
enum Segment {
    Cartesian(Solution<CartesianSystem, 5>),
    /// Planar motion embedded along the unit direction `(c, s)`.
    Planar {
        sol: Solution<PlanarSystem, 3>,
        c: f64,
        s: f64,
    },
}

impl Segment {
    fn t_start(&self) -> f64 {
        match self {
            Segment::Cartesian(sol) => sol.t_start(),
            Segment::Planar { sol, .. } => sol.t_start(),
        }
    }

    fn t_end(&self) -> f64 {
        match self {
            Segment::Cartesian(sol) => sol.t_end(),
            Segment::Planar { sol, .. } => sol.t_end(),
        }
    }

    fn state(&self, t: f64, w0: f64) -> State3D {
        match self {
            Segment::Cartesian(sol) => cartesian_state(&sol.eval(t), w0),
            Segment::Planar { sol, c, s } => planar_embedded(&sol.eval(t), *c, *s, w0),
        }
    }

    fn times(&self) -> &[f64] {
        match self {
            Segment::Cartesian(sol) => &sol.ts,
            Segment::Planar { sol, .. } => &sol.ts,
        }
    }
}

fn cartesian_state(y: &[f64; 5], w0: f64) -> State3D {
    State3D {
        x: y[0],
        y: y[1],
        z: y[2],
        u: y[3],
        v: y[4],
        w0,
    }
}

fn planar_embedded(y: &[f64; 3], c: f64, s: f64, w0: f64) -> State3D {
    State3D {
        x: y[0] * c,
        y: y[0] * s,
        z: y[2],
        u: y[1] * c,
        v: y[1] * s,
        w0,
    }
}

/// A geodesic in ℝ³ with dense evaluation and conservation diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub profile: Profile,
    pub w0: f64,
    segments: Vec<Segment>,
    pub drift: DriftReport,
    /// Times at which the trajectory crosses the axis `Σ`.
    pub sigma_crossings: Vec<f64>,
}

impl Trajectory {
    pub fn t_max(&self) -> f64 {
        self.segments.last().unwrap().t_end()
    }

    /// True when any part was integrated in planar form.
    pub fn used_planar(&self) -> bool {
        self.segments.iter().any(|s| matches!(s, Segment::Planar { .. }))
    }

    /// Time at which Cartesian integration handed over to planar form.
    pub fn handoff_time(&self) -> Option<f64> {
        match self.segments.as_slice() {
            [Segment::Cartesian(_), second, ..] => Some(second.t_start()),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64) -> State3D {
        let seg = self
            .segments
            .iter()
            .find(|s| t <= s.t_end())
            .unwrap_or_else(|| self.segments.last().unwrap());
        seg.state(t, self.w0)
    }

    pub fn position(&self, t: f64) -> Point {
        self.eval(t).position()
    }

    /// Accepted integration points, in strictly increasing time.
    pub fn samples(&self) -> Vec<(f64, State3D)> {
        let mut out: Vec<(f64, State3D)> = Vec::new();
        for seg in &self.segments {
            for &t in seg.times() {
                if out.last().is_none_or(|(tl, _)| t > *tl) {
                    out.push((t, seg.state(t, self.w0)));
                }
            }
        }
        out
    }

    /// `n + 1` equally spaced samples on `[0, t_max]`.
    pub fn uniform_samples(&self, n: usize) -> Vec<(f64, State3D)> {
        let n = n.max(1);
        let tm = self.t_max();
        (0..=n)
            .map(|i| {
                let t = if i == n { tm } else { tm * i as f64 / n as f64 };
                (t, self.eval(t))
            })
            .collect()
    }
}

fn check_horizon(t_max: f64) -> Result<()> {
    if t_max > 0.0 && t_max.is_finite() {
        Ok(())
    } else {
        Err(GrushinError::input(format!(
            "t_max must be positive and finite, got {t_max}"
        )))
    }
}

fn check_point(q: &Point) -> Result<()> {
    if q.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GrushinError::input(format!("non-finite point {q:?}")))
    }
}

/// Whether a covector's angular momentum is zero up to rounding.
pub fn k_vanishes(q0: &Point, lam: &Covector) -> bool {
    let scale = radius(q0) * lam.u0.hypot(lam.v0);
    lam.k(q0).abs() <= 1e-13 * scale.max(f64::MIN_POSITIVE)
}

/// Integrates the geodesic with initial data `(q0, λ0)` on `[0, t_max]`.
pub fn integrate_cartesian(
    profile: &Profile,
    q0: &Point,
    lam: &Covector,
    t_max: f64,
    opts: &DynOptions,
) -> Result<Trajectory> {
    check_horizon(t_max)?;
    check_point(q0)?;
    if !lam.is_finite() {
        return Err(GrushinError::input(format!("non-finite covector {lam:?}")));
    }
    let r0 = radius(q0);
    let w0 = lam.w0;
    let h0 = 0.5 * lam.energy2(profile, q0);
    let k0 = lam.k(q0);
    let planar = k_vanishes(q0, lam);

    let mut segments = Vec::new();
    if r0 == 0.0 {
        let speed = lam.u0.hypot(lam.v0);
        let (c, s) = if speed > 0.0 {
            (lam.u0 / speed, lam.v0 / speed)
        } else {
            (1.0, 0.0)
        };
        let sol = planar_leg(profile, w0, [0.0, speed, q0[2]], 0.0, t_max, &opts.ode)?;
        segments.push(Segment::Planar { sol, c, s });
    } else {
        let (c, s) = (q0[0] / r0, q0[1] / r0);
        let sys = CartesianSystem {
            profile: *profile,
            w0,
        };
        let y0 = [q0[0], q0[1], q0[2], lam.u0, lam.v0];
        let switch = opts.switch_radius;
        let floor = opts.r_floor;
        let drift_tol = opts.drift_tol;
        let guard = move |t: f64, y: &[f64; 5]| {
            let st = cartesian_state(y, w0);
            let (dh, dk) = ((st.hamiltonian(profile) - h0).abs(), (st.k() - k0).abs());
            if dh > drift_tol * h0.abs().max(1.0) || dk > drift_tol * k0.abs().max(1.0) {
                return Some(GrushinError::numerical(
                    "integrate_cartesian",
                    format!("drift |dH| = {dh:e}, |dK| = {dk:e} at t = {t:e}, state {y:?}"),
                ));
            }
            if !planar && st.r() < floor {
                return Some(GrushinError::numerical(
                    "integrate_cartesian",
                    format!("K = {k0:e} != 0 but r = {:e} < {floor:e} at t = {t:e}", st.r()),
                ));
            }
            None
        };
        let near_axis = |_t: f64, y: &[f64; 5]| y[0] * c + y[1] * s - switch;
        let hooks = if planar && r0 > switch {
            Hooks::stop_at(&near_axis).guarded(&guard)
        } else {
            Hooks::default().guarded(&guard)
        };
        if planar && r0 <= switch {
            let rho_dot = lam.u0 * c + lam.v0 * s;
            let sol = planar_leg(profile, w0, [r0, rho_dot, q0[2]], 0.0, t_max, &opts.ode)?;
            segments.push(Segment::Planar { sol, c, s });
        } else {
            let sol = integrate(sys, 0.0, y0, t_max, &opts.ode, &hooks)?;
            let handoff = sol.stopped.then(|| (sol.t_end(), sol.last()));
            segments.push(Segment::Cartesian(sol));
            if let Some((t1, y1)) = handoff {
                if t1 < t_max {
                    let rho = y1[0] * c + y1[1] * s;
                    let rho_dot = y1[3] * c + y1[4] * s;
                    let sol = planar_leg(profile, w0, [rho, rho_dot, y1[2]], t1, t_max, &opts.ode)?;
                    segments.push(Segment::Planar { sol, c, s });
                }
            }
        }
    }

    let mut traj = Trajectory {
        profile: *profile,
        w0,
        segments,
        drift: DriftReport::default(),
        sigma_crossings: Vec::new(),
    };
    for seg in &traj.segments {
        if let Segment::Planar { sol, .. } = seg {
            traj.sigma_crossings
                .extend(crossings(sol, |_t, y| y[0]).into_iter().filter(|&t| t > sol.t_start()));
        }
    }
    let mut drift = DriftReport::default();
    for (_, st) in traj.samples() {
        drift.max_dh = drift.max_dh.max((st.hamiltonian(profile) - h0).abs());
        drift.max_dk = drift.max_dk.max((st.k() - k0).abs());
    }
    traj.drift = drift;
    if drift.max_dh > opts.drift_tol * h0.abs().max(1.0) || drift.max_dk > opts.drift_tol * k0.abs().max(1.0) {
        return Err(GrushinError::numerical(
            "integrate_cartesian",
            format!(
                "drift |dH| = {:e}, |dK| = {:e} exceeds {:e}",
                drift.max_dh, drift.max_dk, opts.drift_tol
            ),
        ));
    }
    Ok(traj)
}

fn planar_leg(
    profile: &Profile,
    w0: f64,
    y0: [f64; 3],
    t0: f64,
    t1: f64,
    ode: &OdeOptions,
) -> Result<Solution<PlanarSystem, 3>> {
    let sys = PlanarSystem {
        profile: *profile,
        w0,
    };
    integrate(sys, t0, y0, t1, ode, &Hooks::default())
}

/// Times where `g` changes sign along a solution, refined by bisection on
/// the dense output. A zero at the initial point is not reported.
pub fn crossings<S, G, const N: usize>(sol: &Solution<S, N>, g: G) -> Vec<f64>
where
    S: OdeSystem<N>,
    G: Fn(f64, &[f64; N]) -> f64,
{
    let mut out = Vec::new();
    let mut prev = (sol.ts[0], g(sol.ts[0], &sol.ys[0]));
    for (t, y) in sol.ts.iter().zip(&sol.ys).skip(1) {
        let cur = (*t, g(*t, y));
        if prev.1 != 0.0 && (cur.1 == 0.0 || cur.1.signum() != prev.1.signum()) {
            let (mut lo, mut hi) = (prev.0, cur.0);
            let sign_lo = prev.1.signum();
            while hi - lo > EVENT_TOL {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let gm = g(mid, &sol.eval(mid));
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                } else if gm.signum() == sign_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(hi);
        }
        prev = cur;
    }
    out
}

/// A trajectory of the reduced planar system.
#[derive(Debug, Clone)]
pub struct PlanarTrajectory {
    pub profile: Profile,
    pub w0: f64,
    pub energy2: f64,
    pub sol: Solution<PlanarSystem, 3>,
    /// Sign changes of `ρ` after the initial time.
    pub sigma_crossings: Vec<f64>,
    /// Largest violation of `ρ̇² + w0² g(ρ)² = 2E` over the samples.
    pub max_energy_drift: f64,
}

impl PlanarTrajectory {
    pub fn t_max(&self) -> f64 {
        self.sol.t_end()
    }

    pub fn eval(&self, t: f64) -> PlanarState {
        let y = self.sol.eval(t);
        PlanarState {
            rho: y[0],
            rhodot: y[1],
            z: y[2],
        }
    }

    pub fn samples(&self) -> Vec<(f64, PlanarState)> {
        self.sol
            .ts
            .iter()
            .zip(&self.sol.ys)
            .map(|(t, y)| {
                (
                    *t,
                    PlanarState {
                        rho: y[0],
                        rhodot: y[1],
                        z: y[2],
                    },
                )
            })
            .collect()
    }

    /// Times where `ρ̇` vanishes.
    pub fn turning_points(&self) -> Vec<f64> {
        crossings(&self.sol, |_t, y| y[1])
    }
}

fn energy_residual(profile: &Profile, w0: f64, energy2: f64, rho: f64, rhodot: f64) -> f64 {
    rhodot * rhodot + w0 * w0 * profile.odd().gsq(rho) - energy2
}

/// Integrates the reduced planar system on `[0, t_max]`. The initial data must
/// satisfy the energy identity at level `energy2 = 2E`.
#[allow(clippy::too_many_arguments)]
pub fn integrate_planar(
    profile: &Profile,
    rho0: f64,
    rhodot0: f64,
    z0: f64,
    w0: f64,
    energy2: f64,
    t_max: f64,
    opts: &DynOptions,
) -> Result<PlanarTrajectory> {
    check_horizon(t_max)?;
    let res = energy_residual(profile, w0, energy2, rho0, rhodot0);
    if !(res.abs() <= 1e-10 * energy2.abs().max(1.0)) {
        return Err(GrushinError::input(format!(
            "initial data violate the energy identity by {res:e}"
        )));
    }
    let sol = planar_leg(profile, w0, [rho0, rhodot0, z0], 0.0, t_max, &opts.ode)?;
    let max_energy_drift = sol
        .ys
        .iter()
        .map(|y| energy_residual(profile, w0, energy2, y[0], y[1]).abs())
        .fold(0.0, f64::max);
    if max_energy_drift > opts.drift_tol * energy2.max(1.0) {
        return Err(GrushinError::numerical(
            "integrate_planar",
            format!("energy identity drift {max_energy_drift:e}"),
        ));
    }
    let sigma_crossings = crossings(&sol, |_t, y| y[0]);
    Ok(PlanarTrajectory {
        profile: *profile,
        w0,
        energy2,
        sol,
        sigma_crossings,
        max_energy_drift,
    })
}

/// Planar trajectory leaving the axis at `z = 0` with `ρ̇(0) = √(2E)`.
pub fn singular_start(
    profile: &Profile,
    w0: f64,
    energy2: f64,
    t_max: f64,
    opts: &DynOptions,
) -> Result<PlanarTrajectory> {
    if !(energy2 > 0.0) {
        return Err(GrushinError::input(format!("energy must be positive, got 2E = {energy2}")));
    }
    integrate_planar(profile, 0.0, energy2.sqrt(), 0.0, w0, energy2, t_max, opts)
}

/// First return time to the axis of the trajectory leaving it with
/// `ρ̇(0) = √(2E)`, located as a terminal ODE event.
pub fn first_return_time(profile: &Profile, w0: f64, energy2: f64, horizon: f64, opts: &DynOptions) -> Result<f64> {
    check_horizon(horizon)?;
    let sys = PlanarSystem {
        profile: *profile,
        w0,
    };
    let g = |_t: f64, y: &[f64; 3]| y[0];
    let sol = integrate(sys, 0.0, [0.0, energy2.sqrt(), 0.0], horizon, &opts.ode, &Hooks::stop_at(&g))?;
    if sol.stopped {
        Ok(sol.t_end())
    } else {
        Ok(f64::INFINITY)
    }
}

/// Singular-start trajectory with its `w0`-derivatives.
#[derive(Debug, Clone)]
pub struct VariationalTrajectory {
    pub w0: f64,
    pub energy2: f64,
    pub sol: Solution<VariationalSystem, 6>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    pub rho: f64,
    pub rhodot: f64,
    pub z: f64,
    pub rho_w: f64,
    pub rhodot_w: f64,
    pub z_w: f64,
}

impl VariationalTrajectory {
    pub fn eval(&self, t: f64) -> VariationalState {
        let y = self.sol.eval(t);
        VariationalState {
            rho: y[0],
            rhodot: y[1],
            z: y[2],
            rho_w: y[3],
            rhodot_w: y[4],
            z_w: y[5],
        }
    }
}

/// Co-integrates the singular-start planar trajectory and the linear
/// variational system in `w0`, with zero initial variations.
pub fn integrate_variational(
    profile: &Profile,
    w0: f64,
    energy2: f64,
    t_max: f64,
    opts: &DynOptions,
) -> Result<VariationalTrajectory> {
    check_horizon(t_max)?;
    if w0 == 0.0 || !w0.is_finite() {
        return Err(GrushinError::input("variational system needs w0 != 0"));
    }
    if !(energy2 > 0.0) {
        return Err(GrushinError::input(format!("energy must be positive, got 2E = {energy2}")));
    }
    let sys = VariationalSystem {
        profile: *profile,
        w0,
    };
    let y0 = [0.0, energy2.sqrt(), 0.0, 0.0, 0.0, 0.0];
    let sol = integrate(sys, 0.0, y0, t_max, &opts.ode, &Hooks::default())?;
    Ok(VariationalTrajectory { w0, energy2, sol })
}

/// Planar state at exactly time `t` of the singular-start trajectory.
pub fn singular_state_at(profile: &Profile, w0: f64, energy2: f64, t: f64, opts: &DynOptions) -> Result<PlanarState> {
    let sol = planar_leg(profile, w0, [0.0, energy2.sqrt(), 0.0], 0.0, t, &opts.ode)?;
    let y = sol.last();
    Ok(PlanarState {
        rho: y[0],
        rhodot: y[1],
        z: y[2],
    })
}

/// Residual of `z_w = −ρ̇ ρ_w / w0` at time `t`, with `z_w` from a central
/// difference of re-integrated trajectories and `ρ_w` from the variational system.
pub fn z_w0_identity_check(profile: &Profile, w0: f64, energy2: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let opts = DynOptions::precise();
    let var = integrate_variational(profile, w0, energy2, t, &opts)?;
    let st = var.eval(t);
    let h = 1e-4 * w0.abs();
    let zp = singular_state_at(profile, w0 + h, energy2, t, &opts)?.z;
    let zm = singular_state_at(profile, w0 - h, energy2, t, &opts)?.z;
    let z_w = (zp - zm) / (2.0 * h);
    Ok((z_w + st.rhodot * st.rho_w / w0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn straight_line_without_vertical_momentum() {
        let p = Profile::monomial(2.0).unwrap();
        let tr = integrate_cartesian(&p, &[1.0, 0.0, 0.0], &Covector::new(1.0, 0.0, 0.0), 3.0, &DynOptions::default())
            .unwrap();
        let q = tr.position(2.5);
        assert!((q[0] - 3.5).abs() < 1e-12 && q[1] == 0.0 && q[2] == 0.0);
    }

    #[test]
    fn circular_orbit_for_linear_profile() {
        let p = Profile::linear();
        let tr = integrate_cartesian(&p, &[1.0, 0.0, 0.0], &Covector::new(0.0, 1.0, 1.0), 2.0 * PI, &DynOptions::default())
            .unwrap();
        for (_, st) in tr.samples() {
            assert!((st.r() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_profile_first_return() {
        let p = Profile::linear();
        let tr = singular_start(&p, 2.0, 1.0, 2.0, &DynOptions::default()).unwrap();
        assert!((tr.sigma_crossings[0] - FRAC_PI_2).abs() < 1e-10);
        let t = first_return_time(&p, 2.0, 1.0, 2.0, &DynOptions::default()).unwrap();
        assert!((t - FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn zero_potential_planar_motion() {
        let p = Profile::monomial(3.0).unwrap();
        let tr = integrate_planar(&p, 0.0, 1.0, 0.5, 0.0, 1.0, 4.0, &DynOptions::default()).unwrap();
        let st = tr.eval(3.0);
        assert!((st.rho - 3.0).abs() < 1e-12 && st.z == 0.5);
    }

    #[test]
    fn planar_entry_must_satisfy_energy_identity() {
        let p = Profile::linear();
        let err = integrate_planar(&p, 0.5, 1.0, 0.0, 1.0, 1.0, 1.0, &DynOptions::default()).unwrap_err();
        assert!(err.is_input());
    }

    #[test]
    fn radial_line_hands_off_to_planar() {
        let p = Profile::monomial(2.0).unwrap();
        let tr = integrate_cartesian(&p, &[1.0, 0.0, 0.0], &Covector::new(-1.0, 0.0, 0.0), 2.0, &DynOptions::default())
            .unwrap();
        assert!(tr.used_planar());
        assert!((tr.sigma_crossings[0] - 1.0).abs() < 1e-10);
        let q = tr.position(1.5);
        assert!((q[0] + 0.5).abs() < 1e-10);
    }

    #[test]
    fn variational_matches_finite_difference() {
        let p = Profile::monomial(2.0).unwrap();
        let opts = DynOptions::precise();
        let t_period = first_return_time(&p, 1.0, 1.0, 10.0, &opts).unwrap();
        let t = t_period / 3.0;
        let var = integrate_variational(&p, 1.0, 1.0, t, &opts).unwrap();
        let h = 1e-4;
        let rp = singular_state_at(&p, 1.0 + h, 1.0, t, &opts).unwrap().rho;
        let rm = singular_state_at(&p, 1.0 - h, 1.0, t, &opts).unwrap().rho;
        let fd = (rp - rm) / (2.0 * h);
        let rho_w = var.eval(t).rho_w;
        assert!(((fd - rho_w) / rho_w).abs() < 1e-4, "{fd} vs {rho_w}");
    }

    #[test]
    fn z_w0_identity_both_signs() {
        let p = Profile::linear();
        assert!(z_w0_identity_check(&p, 1.0, 1.0, 1.0).unwrap() < 1e-5);
        assert!(z_w0_identity_check(&p, -1.0, 1.0, 1.0).unwrap() < 1e-5);
        let p2 = Profile::monomial(2.0).unwrap();
        let t = first_return_time(&p2, 2.0, 1.0, 10.0, &DynOptions::precise()).unwrap();
        assert!(z_w0_identity_check(&p2, 2.0, 1.0, t / 4.0).unwrap() < 1e-5);
    }

    #[test]
    fn nonzero_k_cannot_reach_axis() {
        // With the floor set above the true minimum radius the fault must trigger.
        let p = Profile::linear();
        let opts = DynOptions {
            r_floor: 0.5,
            ..Default::default()
        };
        let err = integrate_cartesian(&p, &[1.0, 0.0, 0.0], &Covector::new(-0.9, 0.1, 0.1), 3.0, &opts).unwrap_err();
        assert!(!err.is_input());
    }
}
