//! The integrable case `f(r) = r`.
//!
//! Here the horizontal motion is an isotropic harmonic oscillator of
//! frequency `|w0|`, so the radius oscillates between `r_min` and `r_max`,
//!
//! ```text
//! r(t)² = r_min² + (r_max² − r_min²) sin²(s),   s = w0 t + φ,
//! ```
//!
//! and every quantity of interest has a closed form. Unit-speed geodesics
//! from `q0` stop minimizing at `t* = π/|w0|`, where all geodesics with the
//! same `w0` meet at `(−x0, −y0, z0 ± π/(2 w0²))`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::dynamics::{radius, Covector, Point, State3D};
use crate::error::{GrushinError, Result};
use crate::profile::Profile;
use crate::roots::bisect;
use crate::singular_synthesis::{DistanceResult, SynthesisResult};

/// Largest accepted `|2E − 1|` for a covector said to be on the unit shell.
pub const SHELL_TOL: f64 = 1e-12;

/// Phases within this distance of `0` or `±π/2` use the limit charts of [`jacobian_D`].
pub const LIMIT_PHASE: f64 = 1e-12;

fn sign_nonneg(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn eta(x: f64) -> f64 {
    0.5 * (x - x.sin() * x.cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationParams {
    pub r_min: f64,
    pub r_max: f64,
    pub w0: f64,
    pub k: f64,
    pub l: f64,
    /// Phase in `(−π/2, π/2]`, with `r0² = r_min² + (r_max² − r_min²) sin²φ`.
    pub phi: f64,
    pub r0: f64,
}

impl OscillationParams {
    /// `r_max² − r_min²`.
    pub fn delta(&self) -> f64 {
        (self.r_max - self.r_min) * (self.r_max + self.r_min)
    }

    pub fn phase(&self, t: f64) -> f64 {
        self.w0 * t + self.phi
    }

    pub fn r(&self, t: f64) -> f64 {
        let s = self.phase(t).sin();
        (self.r_min * self.r_min + self.delta() * s * s).sqrt()
    }
}

/// `(r_min, r_max)` on the unit shell for given `K` and `w0 ≠ 0`.
pub fn extrema_from_invariants(k: f64, w0: f64) -> (f64, f64) {
    let disc = (1.0 - 4.0 * w0 * w0 * k * k).max(0.0).sqrt();
    extrema_from_disc(k, w0, disc)
}

fn extrema_from_disc(k: f64, w0: f64, disc: f64) -> (f64, f64) {
    let r_min = (2.0 * k * k / (1.0 + disc)).sqrt();
    let r_max = ((1.0 + disc) / (2.0 * w0 * w0)).sqrt();
    (r_min, r_max)
}

/// `(|K|, |w0|)` for given radial extrema.
pub fn invariants_from_extrema(r_min: f64, r_max: f64) -> (f64, f64) {
    let w0 = 1.0 / r_min.hypot(r_max);
    (r_min * r_max * w0, w0)
}

fn check_shell(q0: &Point, lam: &Covector) -> Result<()> {
    if !lam.is_finite() || !q0.iter().all(|c| c.is_finite()) {
        return Err(GrushinError::input("non-finite base point or covector"));
    }
    let e2 = lam.energy2(&Profile::linear(), q0);
    if (e2 - 1.0).abs() > SHELL_TOL {
        return Err(GrushinError::input(format!(
            "covector is not on the unit shell: 2E − 1 = {:e}",
            e2 - 1.0
        )));
    }
    Ok(())
}

pub fn params_from_covector(q0: &Point, lam: &Covector) -> Result<OscillationParams> {
    check_shell(q0, lam)?;
    let w0 = lam.w0;
    if w0 == 0.0 {
        return Err(GrushinError::input(
            "w0 = 0 gives a straight line, which has no oscillation parameters",
        ));
    }
    let r0 = radius(q0);
    let k = lam.k(q0);
    let l = lam.l(q0);
    // With 2E = 1, 1 − 4w0²K² = (1 − 2x)² + 4w0²L² where x = w0²r0².
    let m = 1.0 - 2.0 * w0 * w0 * r0 * r0;
    let wl2 = 4.0 * w0 * w0 * l * l;
    let disc = (m * m + wl2).sqrt();
    let (r_min, r_max) = extrema_from_disc(k, w0, disc);
    // cos²φ ∝ disc + m and sin²φ ∝ disc − m, each formed without cancellation.
    let (c2, s2) = if m >= 0.0 {
        let big = disc + m;
        (big, if big > 0.0 { wl2 / big } else { 0.0 })
    } else {
        let big = disc - m;
        (wl2 / big, big)
    };
    let phi = (sign_nonneg(l * w0) * s2.sqrt()).atan2(c2.sqrt());
    let phi = if phi <= -FRAC_PI_2 { FRAC_PI_2 } else { phi };
    Ok(OscillationParams {
        r_min,
        r_max,
        w0,
        k,
        l,
        phi,
        r0,
    })
}

/// Explicit unit-speed geodesic of `f(r) = r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormGeodesic {
    pub params: OscillationParams,
    pub q0: Point,
    pub covector: Covector,
    pub theta0: f64,
    pub z0: f64,
}

impl ClosedFormGeodesic {
    fn planar(&self) -> bool {
        self.params.k == 0.0
    }

    /// Unit direction of the vertical half plane and sign of `ρ` for planar motion.
    fn plane(&self) -> ([f64; 2], f64) {
        let p = &self.params;
        if p.r0 > 0.0 {
            let e = [self.q0[0] / p.r0, self.q0[1] / p.r0];
            (e, sign_nonneg(p.phi.sin()))
        } else {
            let n = self.covector.u0.hypot(self.covector.v0);
            ([self.covector.u0 / n, self.covector.v0 / n], sign_nonneg(p.w0))
        }
    }

    pub fn r(&self, t: f64) -> f64 {
        self.params.r(t)
    }

    /// Continuous polar angle, valid for `K ≠ 0`; planar motion keeps `θ0`
    /// and crosses the axis instead.
    pub fn theta(&self, t: f64) -> f64 {
        let p = &self.params;
        if self.planar() {
            return self.theta0;
        }
        let (a, b) = (p.r_min, p.r_max);
        let lam = |s: f64| {
            let (sn, cs) = s.sin_cos();
            s + ((b - a) * sn * cs).atan2(a * cs * cs + b * sn * sn)
        };
        self.theta0 + sign_nonneg(p.k * p.w0) * (lam(p.phase(t)) - lam(p.phi))
    }

    pub fn z(&self, t: f64) -> f64 {
        let p = &self.params;
        self.z0 + p.w0 * p.r_min * p.r_min * t + p.delta() * (eta(p.phase(t)) - eta(p.phi))
    }

    /// Signed radius along the half plane of a `K = 0` geodesic.
    pub fn rho(&self, t: f64) -> f64 {
        let (_, sigma) = self.plane();
        sigma * self.params.r_max * self.params.phase(t).sin()
    }

    pub fn rdot(&self, t: f64) -> f64 {
        let p = &self.params;
        let (sn, cs) = p.phase(t).sin_cos();
        let r = self.r(t);
        if r == 0.0 {
            return p.r_max * p.w0.abs() * cs.abs();
        }
        p.w0 * p.delta() * sn * cs / r
    }

    pub fn position(&self, t: f64) -> Point {
        let z = self.z(t);
        if self.planar() {
            let (e, _) = self.plane();
            let rho = self.rho(t);
            return [rho * e[0], rho * e[1], z];
        }
        let (r, th) = (self.r(t), self.theta(t));
        [r * th.cos(), r * th.sin(), z]
    }

    pub fn state(&self, t: f64) -> State3D {
        let p = &self.params;
        let [x, y, z] = self.position(t);
        let (u, v) = if self.planar() {
            let (e, sigma) = self.plane();
            let rhodot = sigma * p.r_max * p.w0 * p.phase(t).cos();
            (rhodot * e[0], rhodot * e[1])
        } else {
            let (r, th) = (self.r(t), self.theta(t));
            let (rd, thd) = (self.rdot(t), p.k / (r * r));
            let (sn, cs) = th.sin_cos();
            (rd * cs - r * sn * thd, rd * sn + r * cs * thd)
        };
        State3D {
            x,
            y,
            z,
            u,
            v,
            w0: p.w0,
        }
    }
}

pub fn closed_form_geodesic(q0: &Point, lam: &Covector) -> Result<ClosedFormGeodesic> {
    let params = params_from_covector(q0, lam)?;
    Ok(ClosedFormGeodesic {
        params,
        q0: *q0,
        covector: *lam,
        theta0: q0[1].atan2(q0[0]),
        z0: q0[2],
    })
}

/// The Jacobian determinant `D(t, r_min, r_max)` in the chart `(t, r_min, r_max)`.
///
/// At the chart edges the value is replaced by a rescaled limit with the
/// same zeros: `tan φ · D` as `φ → 0`, `cot φ · D` as `φ → ±π/2`, and the
/// Euclidean form `r(t) · D` whenever `r_min = 0`. When `r_min = 0` and
/// `φ = π/2` both invariants vanish and the reduced form
/// `sin(w0 t)(w0³ t r_max² cos(w0 t) − sin(w0 t))` is used.
#[allow(non_snake_case)]
pub fn jacobian_D(t: f64, r_min: f64, r_max: f64, phi: f64) -> f64 {
    let (a, b) = (r_min, r_max);
    let w0 = 1.0 / a.hypot(b);
    let w3t = w0 * w0 * w0 * t;
    let s = w0 * t + phi;
    let (sn, cs) = s.sin_cos();
    let r = (a * a + (b - a) * (b + a) * sn * sn).sqrt();
    let euclid = a == 0.0;
    let scale = |v: f64| if euclid { v } else { v / r };
    let (sw, cw) = (w0 * t).sin_cos();
    if phi.abs() < LIMIT_PHASE {
        return scale(sw * (w3t * b * b * cw - sw));
    }
    if (phi.abs() - FRAC_PI_2).abs() < LIMIT_PHASE {
        if euclid {
            return sw * (w3t * b * b * cw - sw);
        }
        return scale(sw * (w3t * a * a * cw - sw));
    }
    let (tp, cp) = (phi.tan(), 1.0 / phi.tan());
    let sc = sn * cs;
    let g = (cp * b * b - tp * a * a) * sc + a * a * sn * sn - b * b * cs * cs;
    let h = 2.0 * sc - tp * cs * cs - cp * sn * sn;
    scale(w3t * g + h)
}

/// `F(t) = (tan φ cos s − sin s) / (−r_min² tan φ sin s − r_max² cos s)`;
/// interior zeros of `D` are the solutions of `F = w0³ t`.
#[allow(non_snake_case)]
pub fn F_function(t: f64, r_min: f64, r_max: f64, phi: f64) -> f64 {
    let w0 = 1.0 / r_min.hypot(r_max);
    let (sn, cs) = (w0 * t + phi).sin_cos();
    let tp = phi.tan();
    (tp * cs - sn) / (-r_min * r_min * tp * sn - r_max * r_max * cs)
}

/// `t_con = π/|w0|`, infinite for straight lines.
pub fn conjugate_time(q0: &Point, lam: &Covector) -> Result<f64> {
    check_shell(q0, lam)?;
    Ok(if lam.w0 == 0.0 {
        f64::INFINITY
    } else {
        PI / lam.w0.abs()
    })
}

/// First positive zero of [`jacobian_D`], located by a sign-change scan over
/// `(0, 1.5 π/w0]` followed by bisection.
pub fn first_zero_of_d(r_min: f64, r_max: f64, phi: f64) -> Result<f64> {
    let w0 = 1.0 / r_min.hypot(r_max);
    let t_end = 1.5 * PI / w0;
    let d = |t: f64| jacobian_D(t, r_min, r_max, phi);
    let n = 3000;
    let t_start = 1e-3 * PI / w0;
    let step = (t_end - t_start) / n as f64;
    let mut t_prev = t_start;
    let mut d_prev = d(t_prev);
    for i in 1..=n {
        let t = t_start + step * i as f64;
        let dv = d(t);
        if dv == 0.0 {
            return Ok(t);
        }
        if dv.signum() != d_prev.signum() {
            return bisect(d, t_prev, t, 0.0, 1e-15);
        }
        t_prev = t;
        d_prev = dv;
    }
    Err(GrushinError::numerical(
        "first_zero_of_d",
        format!("no sign change of D on (0, {t_end:e}] for r_min = {r_min}, r_max = {r_max}, φ = {phi}"),
    ))
}

/// Cut time and cut point of a unit-speed geodesic from `q0 ∉ Σ`.
pub fn cut_time_and_locus(q0: &Point, lam: &Covector) -> Result<SynthesisResult> {
    check_shell(q0, lam)?;
    if radius(q0) == 0.0 {
        return Err(GrushinError::input("base point lies on the axis"));
    }
    if lam.w0 == 0.0 {
        return Ok(SynthesisResult {
            t_cut: f64::INFINITY,
            cut_point: None,
            length: f64::INFINITY,
            certified: true,
            construction: "straight line, minimizing for all time".into(),
        });
    }
    let t_cut = PI / lam.w0.abs();
    let cut = [
        -q0[0],
        -q0[1],
        q0[2] + lam.w0.signum() * PI / (2.0 * lam.w0 * lam.w0),
    ];
    Ok(SynthesisResult {
        t_cut,
        cut_point: Some(cut),
        length: t_cut,
        certified: true,
        construction: "closed form, f(r) = r".into(),
    })
}

/// Membership in `Cut(q0) = {(−x0, −y0, z) : |z − z0| ≥ π r0²/2}` up to `tol`.
pub fn in_cut_locus(q0: &Point, q: &Point, tol: f64) -> bool {
    let r0 = radius(q0);
    (q[0] + q0[0]).hypot(q[1] + q0[1]) <= tol && (q[2] - q0[2]).abs() >= PI * r0 * r0 / 2.0 - tol
}

/// Solution of `Exp_{q0}(p) = q1` inside the injectivity domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpInverse {
    /// Length of the minimizing geodesic.
    pub length: f64,
    /// Unit covector at `q0`, absent when `q0 = q1`.
    pub covector: Option<Covector>,
    /// `w0 · length`, the total phase in `(−π, π]`.
    pub omega: f64,
    pub on_cut_locus: bool,
}

/// Time-one endpoint data for momentum `(p_u, p_v, ω)` reaching `(x1, y1)`.
struct Shot {
    p: [f64; 2],
    dz: f64,
}

// ∫₀¹ sin²(ωs) ds / ω², with a series where the closed form cancels.
fn iss(omega: f64) -> f64 {
    let x = 2.0 * omega;
    if x.abs() < 0.2 {
        let x2 = x * x;
        1.0 / 3.0 + x2 * (-1.0 / 60.0 + x2 * (1.0 / 2520.0 + x2 * (-1.0 / 181440.0 + x2 / 19958400.0)))
    } else {
        (x - x.sin()) / (4.0 * omega * omega * omega)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn shoot(q0: &Point, q1: &Point, omega: f64) -> Shot {
    let c = 2.0 * (0.5 * omega).cos().powi(2);
    let sc = sinc(omega);
    // (x1 − x0 cos ω) = (x1 + x0) − x0 (1 + cos ω)
    let p = [
        ((q1[0] + q0[0]) - q0[0] * c) / sc,
        ((q1[1] + q0[1]) - q0[1] * c) / sc,
    ];
    let r02 = q0[0] * q0[0] + q0[1] * q0[1];
    let lp = q0[0] * p[0] + q0[1] * p[1];
    let pp = p[0] * p[0] + p[1] * p[1];
    let icc = 0.5 + 0.5 * sinc(2.0 * omega);
    let ics = 0.5 * sinc(omega).powi(2);
    let dz = omega * (r02 * icc + 2.0 * lp * ics + pp * iss(omega));
    Shot { p, dz }
}

/// Inverts the exponential map of `f(r) = r` from `q0` onto `q1`.
///
/// At time one with momentum `(p_u, p_v, ω)` the horizontal endpoint is
/// `(x0, y0) cos ω + (p_u, p_v) sin ω / ω`, so the horizontal momentum is
/// explicit in `ω` and the vertical displacement is an odd function of `ω`,
/// increasing on `(−π, π)`. The remaining scalar equation is solved by
/// bisection to full precision.
pub fn invert_exponential(q0: &Point, q1: &Point) -> Result<ExpInverse> {
    if !q0.iter().chain(q1.iter()).all(|c| c.is_finite()) {
        return Err(GrushinError::input("non-finite point"));
    }
    let r0 = radius(q0);
    let dz = q1[2] - q0[2];
    let antipodal = (q1[0] + q0[0]).hypot(q1[1] + q0[1]) <= 1e-15 * r0.max(1.0);
    if antipodal && dz.abs() >= PI * r0 * r0 / 2.0 && dz != 0.0 {
        let w = (PI / (2.0 * dz.abs())).sqrt() * dz.signum();
        let length = (2.0 * PI * dz.abs()).sqrt();
        // A representative minimizer: start along the direction of q0, or along x on Σ.
        let horizontal = (1.0 - w * w * r0 * r0).max(0.0).sqrt();
        let (eu, ev) = if r0 > 0.0 { (q0[0] / r0, q0[1] / r0) } else { (1.0, 0.0) };
        return Ok(ExpInverse {
            length,
            covector: Some(Covector::new(-horizontal * eu, -horizontal * ev, w)),
            omega: w * length,
            on_cut_locus: true,
        });
    }
    let target = dz.abs();
    let omega = if target == 0.0 {
        0.0
    } else {
        let g = |om: f64| {
            let v = shoot(q0, q1, om).dz;
            if v.is_finite() {
                v - target
            } else {
                f64::INFINITY
            }
        };
        let (mut lo, mut hi) = (0.0_f64, PI);
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let om = if g(hi).abs() < g(lo).abs() { hi } else { lo };
        if om >= PI {
            return Err(GrushinError::numerical(
                "invert_exponential",
                format!("phase reached π for q0 = {q0:?}, q1 = {q1:?}"),
            ));
        }
        om * dz.signum()
    };
    let s = shoot(q0, q1, omega);
    let length = (s.p[0] * s.p[0] + s.p[1] * s.p[1] + r0 * r0 * omega * omega).sqrt();
    let covector = if length > 0.0 {
        Some(Covector::new(s.p[0] / length, s.p[1] / length, omega / length))
    } else {
        None
    };
    Ok(ExpInverse {
        length,
        covector,
        omega,
        on_cut_locus: false,
    })
}

/// Exact distance for `f(r) = r` between any two points.
pub fn distance_r(q0: &Point, q1: &Point) -> Result<DistanceResult> {
    let inv = invert_exponential(q0, q1)?;
    let witness = match inv.covector {
        None => "identical points".to_string(),
        Some(c) if inv.on_cut_locus => format!("cut point reached at t* with w0 = {:e}", c.w0),
        Some(c) => format!("covector ({:e}, {:e}, {:e})", c.u0, c.v0, c.w0),
    };
    Ok(DistanceResult::exact(inv.length, 1e-12 * inv.length.max(1.0), witness))
}

/// One sample of the geodesic fan through a cut point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanSample {
    pub w0: f64,
    /// Direction angle of the horizontal part `(u0, v0)` of the covector.
    pub phi: f64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Unit-speed geodesics from `q0` sharing `w0`, sampled on `[0, π/|w0|]`.
pub fn geodesic_fan(q0: &Point, w0: f64, n_dirs: usize, n_t: usize) -> Result<Vec<FanSample>> {
    let r0 = radius(q0);
    if w0 == 0.0 || !(w0.abs() * r0 < 1.0) {
        return Err(GrushinError::input(format!(
            "need 0 < |w0| r0 < 1 for a fan on the unit shell, got w0 = {w0}, r0 = {r0}"
        )));
    }
    if n_dirs == 0 || n_t < 2 {
        return Err(GrushinError::input("fan needs at least one direction and two time samples"));
    }
    let horizontal = (1.0 - w0 * w0 * r0 * r0).sqrt();
    let t_star = PI / w0.abs();
    let mut out = Vec::with_capacity(n_dirs * n_t);
    for i in 0..n_dirs {
        let phi = 2.0 * PI * i as f64 / n_dirs as f64;
        let lam = Covector::new(horizontal * phi.cos(), horizontal * phi.sin(), w0);
        let g = closed_form_geodesic(q0, &lam)?;
        for j in 0..n_t {
            let t = t_star * j as f64 / (n_t - 1) as f64;
            let [x, y, z] = g.position(t);
            out.push(FanSample { w0, phi, t, x, y, z });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(q0: &Point, u: f64, v: f64, w: f64) -> Covector {
        Covector::new(u, v, w).normalized(&Profile::linear(), q0).unwrap()
    }

    #[test]
    fn extrema_roundtrip() {
        let (k, w0) = invariants_from_extrema(0.6, 0.8);
        assert!((w0 - 1.0).abs() < 1e-15 && (k - 0.48).abs() < 1e-15);
        let (a, b) = extrema_from_invariants(k, w0);
        assert!((a - 0.6).abs() < 1e-12 && (b - 0.8).abs() < 1e-12);
    }

    #[test]
    fn params_reproduce_invariants() {
        let q0 = [0.7, -0.4, 0.2];
        for &(u, v, w) in &[(0.3, 0.5, 0.9), (-0.8, 0.1, -0.4), (0.2, -0.6, 1.7), (0.0, 0.0, 1.0)] {
            let lam = unit(&q0, u, v, w);
            let p = params_from_covector(&q0, &lam).unwrap();
            let (k, w0) = invariants_from_extrema(p.r_min, p.r_max);
            assert!((k - p.k.abs()).abs() < 1e-12);
            assert!((w0 - p.w0.abs()).abs() < 1e-12);
            let l = p.w0 * p.delta() * p.phi.sin() * p.phi.cos();
            assert!((l - p.l).abs() < 1e-12, "{l} vs {}", p.l);
            assert!((p.r(0.0) - p.r0).abs() < 1e-12);
        }
    }

    #[test]
    fn k_zero_degenerates() {
        let q0 = [1.0, 0.0, 0.0];
        let lam = unit(&q0, 0.6, 0.0, 0.8);
        let p = params_from_covector(&q0, &lam).unwrap();
        assert_eq!(p.r_min, 0.0);
        assert!((p.r_max - 1.0 / p.w0).abs() < 1e-14);
    }

    #[test]
    fn l_zero_starts_at_minimum() {
        // w0 small: q0 is the inner extremum
        let q0 = [1.0, 0.0, 0.0];
        let lam = unit(&q0, 0.0, 0.9, 0.3);
        let p = params_from_covector(&q0, &lam).unwrap();
        assert_eq!(p.phi, 0.0);
        assert!((p.r_min - 1.0).abs() < 1e-14);
    }

    #[test]
    fn circular_orbit() {
        let q0 = [1.0, 0.0, 0.0];
        let lam = Covector::new(0.0, 0.5_f64.sqrt(), 0.5_f64.sqrt());
        let g = closed_form_geodesic(&q0, &lam).unwrap();
        for i in 0..50 {
            assert!((g.r(0.3 * i as f64) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_velocity_matches_covector() {
        let q0 = [0.3, 0.9, -1.0];
        let lam = unit(&q0, -0.4, 0.7, 0.8);
        let s = closed_form_geodesic(&q0, &lam).unwrap().state(0.0);
        assert!((s.u - lam.u0).abs() < 1e-12 && (s.v - lam.v0).abs() < 1e-12);
        assert!((s.x - q0[0]).abs() < 1e-14 && (s.y - q0[1]).abs() < 1e-14);
    }

    #[test]
    fn cut_point_height() {
        let q0 = [1.0, 0.0, 0.0];
        let lam = unit(&q0, 0.0, 0.0, 1.0);
        let res = cut_time_and_locus(&q0, &lam).unwrap();
        assert!((res.t_cut - PI).abs() < 1e-15);
        let c = res.cut_point.unwrap();
        assert!((c[0] + 1.0).abs() < 1e-15 && (c[2] - FRAC_PI_2).abs() < 1e-15);
        let g = closed_form_geodesic(&q0, &lam).unwrap();
        let end = g.position(res.t_cut);
        for i in 0..3 {
            assert!((end[i] - c[i]).abs() < 1e-12, "{end:?}");
        }
    }

    #[test]
    fn d_vanishes_at_pi_over_w0() {
        let (a, b, phi) = (0.4, 1.1, 0.6);
        let w0 = 1.0 / f64::hypot(a, b);
        assert!(jacobian_D(PI / w0, a, b, phi).abs() < 1e-12);
        assert_eq!(jacobian_D(0.0, a, b, phi), 0.0);
        let t = first_zero_of_d(a, b, phi).unwrap();
        assert!((t - PI / w0).abs() < 1e-8);
    }

    #[test]
    fn distance_examples() {
        let d = distance_r(&[1.0, 0.0, 0.0], &[2.0, 0.0, 0.0]).unwrap().value.unwrap();
        assert!((d - 1.0).abs() < 1e-14);
        let d = distance_r(&[1.0, 0.0, 0.0], &[-1.0, 0.0, FRAC_PI_2]).unwrap().value.unwrap();
        assert!((d - PI).abs() < 1e-12);
        let d = distance_r(&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]).unwrap().value.unwrap();
        assert!((d - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inversion_reaches_target() {
        let q0 = [0.5, -0.2, 0.1];
        let q1 = [-0.7, 1.3, 0.9];
        let inv = invert_exponential(&q0, &q1).unwrap();
        let lam = inv.covector.unwrap();
        let end = closed_form_geodesic(&q0, &lam).unwrap().position(inv.length);
        for i in 0..3 {
            assert!((end[i] - q1[i]).abs() < 1e-10, "{end:?}");
        }
    }
}
