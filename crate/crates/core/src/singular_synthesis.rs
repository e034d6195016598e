//! Optimal synthesis from points on the axis `Σ`.
//!
//! A unit-speed geodesic leaving `(0, 0, z0)` stays in one vertical half
//! plane, oscillates in the signed radius `ρ` and returns to `Σ` after the
//! period `T(w0)`, where it stops minimizing. Every radial integral here is
//! evaluated with the substitution `r = ρ*(1 − u²)`, which turns the
//! inverse-square-root singularity at the turning point `ρ*` into a smooth
//! integrand and leaves only the mild behaviour of `f` at `r = 0` to the
//! tanh-sinh rule.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    first_return_time, integrate_cartesian, radius, singular_state_at, Covector, DynOptions, Point,
    Trajectory,
};
use crate::error::{GrushinError, Result};
use crate::profile::Profile;
use crate::quadrature::tanh_sinh;
use crate::roots::{invert_increasing, MAX_DOUBLINGS};

const QUAD_TOL: f64 = 1e-12;

/// Radius below which a target is treated as lying on the axis.
pub const AXIS_FALLBACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPointData {
    pub rho_star: f64,
    /// First return time to the axis.
    pub period: f64,
    pub w0: f64,
    /// The value `E` of the Hamiltonian.
    pub energy: f64,
}

/// Outcome of a cut-time computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    #[serde(with = "crate::export::extended_f64")]
    pub t_cut: f64,
    pub cut_point: Option<Point>,
    /// Length of the geodesic up to the cut time.
    #[serde(with = "crate::export::extended_f64")]
    pub length: f64,
    /// True when the cut time is proved, false for the conjectured bound.
    pub certified: bool,
    pub construction: String,
}

/// Exact distance or a certified enclosure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub value: Option<f64>,
    #[serde(with = "crate::export::extended_f64")]
    pub lower: f64,
    #[serde(with = "crate::export::extended_f64")]
    pub upper: f64,
    pub witness: String,
    pub tol: f64,
}

impl DistanceResult {
    pub fn exact(value: f64, tol: f64, witness: impl Into<String>) -> Self {
        DistanceResult {
            value: Some(value),
            lower: value,
            upper: value,
            witness: witness.into(),
            tol,
        }
    }
}

fn check_energy(energy: f64) -> Result<()> {
    if energy > 0.0 && energy.is_finite() {
        Ok(())
    } else {
        Err(GrushinError::input(format!(
            "energy must be positive; E = {energy} leaves only the stationary trajectory"
        )))
    }
}

/// `∫ weight(r) dr / √(2E − w0² f(r)²)` over `r = a(1 − u²)`, `u ∈ [u_lo, 1]`,
/// where `a = ρ*` and `2E = w0² f(a)²`. `om_lo = 1 − u_lo` is passed
/// separately so that `r` keeps full relative precision when `u_lo` is near 1.
fn radial_integral<W>(profile: &Profile, a: f64, w_abs: f64, u_lo: f64, om_lo: f64, weight: W) -> Result<f64>
where
    W: Fn(f64) -> f64,
{
    radial_integral_to(profile, a, w_abs, (u_lo, om_lo), (1.0, 0.0), weight)
}

fn radial_integral_to<W>(
    profile: &Profile,
    a: f64,
    w_abs: f64,
    (u_lo, om_lo): (f64, f64),
    (u_hi, om_hi): (f64, f64),
    weight: W,
) -> Result<f64>
where
    W: Fn(f64) -> f64,
{
    let fa2 = profile.eval(a).powi(2);
    let limit_slope = (2.0 * a * a * profile.ffprime_over_r(a)).sqrt();
    let integrand = |u: f64, one_minus_u: f64| -> f64 {
        let r = a * one_minus_u * (1.0 + u);
        if u < 1e-100 {
            return 2.0 * a * weight(a) / (w_abs * limit_slope);
        }
        let gap = if u > 0.5 {
            fa2 - profile.eval(r).powi(2)
        } else {
            profile.sq_gap(a, u)
        };
        2.0 * a * u * weight(r) / (w_abs * gap.sqrt())
    };
    // Near u = 1 integrate in s = 1 − u so the interval length is exact.
    let res = if u_lo >= 0.5 {
        tanh_sinh(
            |n| {
                let s = if n.from_a <= n.to_b { om_hi + n.from_a } else { om_lo - n.to_b };
                integrand(1.0 - s, s)
            },
            om_hi,
            om_lo,
            QUAD_TOL,
        )?
    } else {
        tanh_sinh(
            |n| {
                if n.from_a <= n.to_b {
                    integrand(u_lo + n.from_a, om_lo - n.from_a)
                } else {
                    integrand(u_hi - n.to_b, om_hi + n.to_b)
                }
            },
            u_lo,
            u_hi,
            QUAD_TOL,
        )?
    };
    Ok(res.value)
}

/// Turning point and period of the geodesic leaving `Σ` with energy `E` and
/// vertical momentum `w0 ≠ 0`.
pub fn period(profile: &Profile, energy: f64, w0: f64) -> Result<TurningPointData> {
    check_energy(energy)?;
    if w0 == 0.0 || !w0.is_finite() {
        return Err(GrushinError::input("period needs w0 != 0"));
    }
    let rho_star = profile.f_inverse((2.0 * energy).sqrt() / w0.abs())?;
    let half = radial_integral(profile, rho_star, w0.abs(), 0.0, 1.0, |_| 1.0)?;
    Ok(TurningPointData {
        rho_star,
        period: 2.0 * half,
        w0,
        energy,
    })
}

/// Period together with the ODE first-return time, for cross-checking.
pub fn period_crosscheck(profile: &Profile, energy: f64, w0: f64) -> Result<(TurningPointData, f64)> {
    let tp = period(profile, energy, w0)?;
    let t_ode = first_return_time(profile, w0, 2.0 * energy, 1.5 * tp.period, &DynOptions::precise())?;
    Ok((tp, t_ode))
}

/// Height gained over one period, `z(T) = 2 w0 ∫₀^{ρ*} f² dr / √(2E − w0² f²)`.
pub fn vertical_displacement(profile: &Profile, energy: f64, w0: f64) -> Result<(TurningPointData, f64)> {
    let tp = period(profile, energy, w0)?;
    let i = radial_integral(profile, tp.rho_star, w0.abs(), 0.0, 1.0, |r| profile.eval(r).powi(2))?;
    Ok((tp, 2.0 * w0 * i))
}

/// Geodesic from `(0, 0, z0)` in the half plane at angle `θ0`.
pub fn geodesic_from_sigma(
    profile: &Profile,
    z0: f64,
    theta0: f64,
    energy: f64,
    w0: f64,
    t_max: f64,
    opts: &DynOptions,
) -> Result<Trajectory> {
    check_energy(energy)?;
    let speed = (2.0 * energy).sqrt();
    let lam = Covector::new(speed * theta0.cos(), speed * theta0.sin(), w0);
    integrate_cartesian(profile, &[0.0, 0.0, z0], &lam, t_max, opts)
}

/// Cut time and cut point (relative to a base point at the origin) of the
/// geodesic leaving `Σ` with energy `E` and vertical momentum `w0`.
pub fn cut_from_sigma(profile: &Profile, energy: f64, w0: f64) -> Result<SynthesisResult> {
    check_energy(energy)?;
    if w0 == 0.0 {
        return Ok(SynthesisResult {
            t_cut: f64::INFINITY,
            cut_point: None,
            length: f64::INFINITY,
            certified: true,
            construction: "straight ray, minimizing for all time".into(),
        });
    }
    let (tp, z) = vertical_displacement(profile, energy, w0)?;
    Ok(SynthesisResult {
        t_cut: tp.period,
        cut_point: Some([0.0, 0.0, z]),
        length: tp.period * (2.0 * energy).sqrt(),
        certified: true,
        construction: format!("first return to the axis, w0 = {w0}"),
    })
}

/// Arrival data at radius `ρ̄` for a unit-energy geodesic with `w0 > 0`:
/// first arrival `(t1, z1)` on the way out, second `(t2, z2)` on the way back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchValues {
    pub w0: f64,
    pub rho_star: f64,
    pub t1: f64,
    pub z1: f64,
    pub t2: f64,
    pub z2: f64,
}

/// Branch junction `w0* = 1/f(ρ̄)`, where `ρ* = ρ̄` and both arrivals coincide.
pub fn branch_junction(profile: &Profile, rho_bar: f64) -> f64 {
    1.0 / profile.eval(rho_bar)
}

pub fn branch_values(profile: &Profile, w0: f64, rho_bar: f64) -> Result<BranchValues> {
    if !(w0 > 0.0) || !(rho_bar > 0.0) {
        return Err(GrushinError::input("branch values need w0 > 0 and rho_bar > 0"));
    }
    let rho_star = profile.f_inverse(1.0 / w0)?.max(rho_bar);
    let u_bar = ((rho_star - rho_bar) / rho_star).max(0.0).sqrt();
    // 1 − ū = (ρ̄/ρ*) / (1 + ū) without cancellation.
    let om_bar = (rho_bar / rho_star) / (1.0 + u_bar);
    let f2 = |r: f64| profile.eval(r).powi(2);
    let b_t = radial_integral(profile, rho_star, w0, u_bar, om_bar, |_| 1.0)?;
    let b_z = radial_integral(profile, rho_star, w0, u_bar, om_bar, f2)?;
    let (a_t, a_z) = if u_bar > 0.0 {
        let ends = ((0.0, 1.0), (u_bar, om_bar));
        (
            radial_integral_to(profile, rho_star, w0, ends.0, ends.1, |_| 1.0)?,
            radial_integral_to(profile, rho_star, w0, ends.0, ends.1, f2)?,
        )
    } else {
        (0.0, 0.0)
    };
    Ok(BranchValues {
        w0,
        rho_star,
        t1: b_t,
        z1: w0 * b_z,
        t2: b_t + 2.0 * a_t,
        z2: w0 * (b_z + 2.0 * a_z),
    })
}

/// The shooting solution found for a target seen from the axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaShot {
    /// Signed vertical momentum of the minimizing geodesic.
    pub w0: f64,
    /// Its length.
    pub length: f64,
    /// Spread of the length over the final bisection bracket.
    pub tol: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Trivial,
    StraightRay,
    Axis,
    First,
    Second,
}

/// Bisection in `ln w` for `phi(w) = target` where `phi` is monotone on
/// `[w_lo, w_hi]`; returns the final bracket.
fn bisect_log<F>(mut phi: F, target: f64, mut w_lo: f64, mut w_hi: f64, increasing: bool) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    for _ in 0..200 {
        let mid = (0.5 * (w_lo.ln() + w_hi.ln())).exp();
        if mid <= w_lo || mid >= w_hi || (w_hi - w_lo) <= 1e-13 * w_hi {
            break;
        }
        let below = phi(mid)? < target;
        if below == increasing {
            w_lo = mid;
        } else {
            w_hi = mid;
        }
    }
    Ok((w_lo, w_hi))
}

/// Solves `z(T(w)) = dz` for `w > 0` at unit energy; returns the bracket.
fn solve_axis(profile: &Profile, dz: f64) -> Result<(f64, f64)> {
    let zt = |w: f64| vertical_displacement(profile, 0.5, w).map(|(_, z)| z);
    let mut w_lo = 1.0;
    let mut w_hi = 1.0;
    let z1 = zt(1.0)?;
    let mut n = 0;
    if z1 > dz {
        while zt(w_hi)? > dz {
            w_lo = w_hi;
            w_hi *= 2.0;
            n += 1;
            if n > MAX_DOUBLINGS {
                return Err(GrushinError::numerical("distance_from_sigma", format!("axis bracket for dz = {dz:e} not found")));
            }
        }
    } else {
        while zt(w_lo)? <= dz {
            w_hi = w_lo;
            w_lo *= 0.5;
            n += 1;
            if n > MAX_DOUBLINGS {
                return Err(GrushinError::numerical("distance_from_sigma", format!("axis bracket for dz = {dz:e} not found")));
            }
        }
    }
    bisect_log(zt, dz, w_lo, w_hi, false)
}

/// Shoots from `(0, 0, 0)` to the point at radius `ρ̄` and height `dz`.
pub fn shoot_from_sigma(profile: &Profile, rho_bar: f64, dz: f64) -> Result<SigmaShot> {
    if !(rho_bar >= 0.0) || !rho_bar.is_finite() || !dz.is_finite() {
        return Err(GrushinError::input(format!("invalid target (rho = {rho_bar}, dz = {dz})")));
    }
    let sign = if dz < 0.0 { -1.0 } else { 1.0 };
    let h = dz.abs();
    if h == 0.0 {
        let branch = if rho_bar == 0.0 { Branch::Trivial } else { Branch::StraightRay };
        return Ok(SigmaShot {
            w0: 0.0,
            length: rho_bar,
            tol: 0.0,
            branch,
        });
    }
    if rho_bar < AXIS_FALLBACK {
        let (w_lo, w_hi) = solve_axis(profile, h)?;
        let t_lo = period(profile, 0.5, w_lo)?.period;
        let t_hi = period(profile, 0.5, w_hi)?.period;
        let w = (0.5 * (w_lo.ln() + w_hi.ln())).exp();
        return Ok(SigmaShot {
            w0: sign * w,
            length: period(profile, 0.5, w)?.period,
            tol: (t_lo - t_hi).abs() + rho_bar + 1e-12,
            branch: Branch::Axis,
        });
    }

    let w_star = branch_junction(profile, rho_bar);
    let junction = branch_values(profile, w_star, rho_bar)?;
    let (branch, (w_lo, w_hi)) = if h <= junction.z1 {
        let z1 = |w: f64| branch_values(profile, w, rho_bar).map(|b| b.z1);
        let mut w_lo = 0.5 * w_star;
        let mut n = 0;
        while z1(w_lo)? >= h {
            w_lo *= 0.5;
            n += 1;
            if n > MAX_DOUBLINGS {
                return Err(GrushinError::numerical(
                    "distance_from_sigma",
                    format!("first-branch bracket failed for rho = {rho_bar:e}, dz = {dz:e}"),
                ));
            }
        }
        (Branch::First, bisect_log(z1, h, w_lo, w_star, true)?)
    } else {
        let z2 = |w: f64| branch_values(profile, w, rho_bar).map(|b| b.z2);
        let mut w_lo = 0.5 * w_star;
        let mut n = 0;
        while z2(w_lo)? <= h {
            w_lo *= 0.5;
            n += 1;
            if n > MAX_DOUBLINGS {
                return Err(GrushinError::numerical(
                    "distance_from_sigma",
                    format!("second-branch bracket failed for rho = {rho_bar:e}, dz = {dz:e}"),
                ));
            }
        }
        (Branch::Second, bisect_log(z2, h, w_lo, w_star, false)?)
    };
    let length_at = |w: f64| -> Result<f64> {
        let b = branch_values(profile, w, rho_bar)?;
        Ok(if branch == Branch::First { b.t1 } else { b.t2 })
    };
    let w = (0.5 * (w_lo.ln() + w_hi.ln())).exp();
    let length = length_at(w)?;
    let tol = (length_at(w_lo)? - length_at(w_hi)?).abs() + 1e-12 * length.max(1.0);
    Ok(SigmaShot {
        w0: sign * w,
        length,
        tol,
        branch,
    })
}

/// Exact distance between a point `q0 ∈ Σ` and any target.
pub fn distance_from_sigma(profile: &Profile, q0: &Point, target: &Point) -> Result<DistanceResult> {
    if radius(q0) > 1e-12 {
        return Err(GrushinError::input(format!("base point {q0:?} is not on the axis")));
    }
    let rho_bar = radius(target);
    let shot = shoot_from_sigma(profile, rho_bar, target[2] - q0[2])?;
    let witness = match shot.branch {
        Branch::Trivial => "identical points".to_string(),
        Branch::StraightRay => "horizontal straight ray".to_string(),
        Branch::Axis => format!("axis-to-axis geodesic, w0 = {:e}", shot.w0),
        Branch::First => format!("first arrival, w0 = {:e}", shot.w0),
        Branch::Second => format!("second arrival, w0 = {:e}", shot.w0),
    };
    Ok(DistanceResult::exact(shot.length, shot.tol, witness))
}

/// Distance when at least one endpoint lies on `Σ`.
pub fn distance_sigma_pair(profile: &Profile, a: &Point, b: &Point) -> Result<DistanceResult> {
    if radius(a) <= 1e-12 {
        distance_from_sigma(profile, a, b)
    } else if radius(b) <= 1e-12 {
        distance_from_sigma(profile, b, a)
    } else {
        Err(GrushinError::input("neither endpoint lies on the axis"))
    }
}

/// A sample of the sphere boundary in the half plane `(ρ, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub w0: f64,
    pub t: f64,
    pub rho: f64,
    pub z: f64,
}

/// Vertical momentum at which the period equals `t`.
pub fn w0_with_period(profile: &Profile, t: f64) -> Result<f64> {
    let mut w_lo = 1.0;
    let mut w_hi = 1.0;
    let mut n = 0;
    while period(profile, 0.5, w_hi)?.period > t {
        w_hi *= 2.0;
        n += 1;
        if n > MAX_DOUBLINGS {
            return Err(GrushinError::numerical("w0_with_period", format!("no bracket for T = {t:e}")));
        }
    }
    while period(profile, 0.5, w_lo)?.period < t {
        w_lo *= 0.5;
        n += 1;
        if n > 2 * MAX_DOUBLINGS {
            return Err(GrushinError::numerical("w0_with_period", format!("no bracket for T = {t:e}")));
        }
    }
    let (lo, hi) = bisect_log(|w| period(profile, 0.5, w).map(|p| p.period), t, w_lo, w_hi, false)?;
    Ok((0.5 * (lo.ln() + hi.ln())).exp())
}

/// Boundary of the unit-speed ball of the given radius about a point of `Σ`,
/// in `(ρ, z)` relative to the centre, ordered from the lowest to the
/// highest axis point.
///
/// Geodesics with `|w0| ≤ w_c`, where `T(w_c) = radius`, are still minimizing
/// at time `radius`; their endpoints trace the boundary. The `w0` grid is
/// geometric on `[10⁻⁴ w_c, w_c]` in each half.
pub fn ball_boundary_from_sigma(profile: &Profile, radius: f64, n_samples: usize) -> Result<Vec<BoundaryPoint>> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(GrushinError::input(format!("radius must be positive, got {radius}")));
    }
    let half = (n_samples / 2).max(2);
    let w_c = w0_with_period(profile, radius)?;
    let (_, z_top) = vertical_displacement(profile, 0.5, w_c)?;
    let grid = crate::profile::geometric(1e-4 * w_c, w_c, half);
    let opts = DynOptions::default();
    let mut upper = Vec::with_capacity(half + 1);
    upper.push(BoundaryPoint {
        w0: 0.0,
        t: radius,
        rho: radius,
        z: 0.0,
    });
    for &w in &grid[..grid.len() - 1] {
        let st = singular_state_at(profile, w, 1.0, radius, &opts)?;
        upper.push(BoundaryPoint {
            w0: w,
            t: radius,
            rho: st.rho.max(0.0),
            z: st.z,
        });
    }
    upper.push(BoundaryPoint {
        w0: w_c,
        t: radius,
        rho: 0.0,
        z: z_top,
    });
    let mut out: Vec<BoundaryPoint> = upper
        .iter()
        .rev()
        .map(|p| BoundaryPoint {
            w0: -p.w0,
            z: -p.z,
            ..*p
        })
        .collect();
    out.pop();
    out.extend(upper);
    Ok(out)
}

/// Point of the surface of revolution swept by the boundary curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshPoint {
    pub theta: f64,
    pub w0: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub fn revolve(boundary: &[BoundaryPoint], center: &Point, n_theta: usize) -> Vec<MeshPoint> {
    let n = n_theta.max(3);
    let mut out = Vec::with_capacity(n * boundary.len());
    for i in 0..n {
        let theta = 2.0 * PI * i as f64 / n as f64;
        let (s, c) = theta.sin_cos();
        for p in boundary {
            out.push(MeshPoint {
                theta,
                w0: p.w0,
                x: center[0] + p.rho * c,
                y: center[1] + p.rho * s,
                z: center[2] + p.z,
            });
        }
    }
    out
}

/// Bounds with the quantities that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallBoxBounds {
    pub result: DistanceResult,
    /// `|Δxy| + min(h(|Δz|), |Δz|/f(r))` with `r` the radius of the first point.
    pub formula: f64,
    /// Horizontal then vertical, the cheaper of the two orders.
    pub competitor_1: f64,
    /// Radial move to `ρ = h(|Δz|)`, down to the axis, along the axis
    /// geodesic, back out, then across to the target.
    pub competitor_2: f64,
}

/// The comparison quantity `|Δxy| + min(h(|Δz|), |Δz| / f(r))`.
pub fn ball_box_formula(profile: &Profile, q: &Point, q1: &Point) -> Result<f64> {
    let dxy = (q[0] - q1[0]).hypot(q[1] - q1[1]);
    let dz = (q[2] - q1[2]).abs();
    if dz == 0.0 {
        return Ok(dxy);
    }
    let vertical = dz / profile.eval(radius(q));
    Ok(dxy + profile.h_inverse(dz)?.min(vertical))
}

/// Certified lower bound and admissible-curve upper bound for `d(q, q')`.
///
/// Lower: horizontal displacement, and the time `τ` with `τ f(r + τ) = |Δz|`
/// needed to climb `|Δz|` when the radius grows at unit speed from either end.
pub fn ball_box_bounds(profile: &Profile, q: &Point, q1: &Point) -> Result<BallBoxBounds> {
    let dxy = (q[0] - q1[0]).hypot(q[1] - q1[1]);
    let dz = (q[2] - q1[2]).abs();
    let formula = ball_box_formula(profile, q, q1)?;
    let (r, r1) = (radius(q), radius(q1));
    if dz == 0.0 {
        return Ok(BallBoxBounds {
            result: DistanceResult {
                value: None,
                lower: dxy,
                upper: dxy,
                witness: "horizontal segment".into(),
                tol: 0.0,
            },
            formula,
            competitor_1: dxy,
            competitor_2: f64::INFINITY,
        });
    }
    let c1a = dxy + dz / profile.eval(r1);
    let c1b = dxy + dz / profile.eval(r);
    let competitor_1 = c1a.min(c1b);

    let rho = profile.h_inverse(dz)?;
    let dir = if r > 0.0 {
        (q[0] / r, q[1] / r)
    } else if r1 > 0.0 {
        (q1[0] / r1, q1[1] / r1)
    } else {
        (1.0, 0.0)
    };
    let (xt, yt) = (rho * dir.0, rho * dir.1);
    let axis_leg = shoot_from_sigma(profile, 0.0, dz)?.length;
    let competitor_2 = (r - rho).abs() + 2.0 * rho + axis_leg + (xt - q1[0]).hypot(yt - q1[1]);

    let tau = |r_end: f64| invert_increasing(|t| t * profile.eval(r_end + t), dz, "ball_box_bounds");
    let lower = dxy.max(tau(r)?).max(tau(r1)?);
    let (upper, witness) = if competitor_1 <= competitor_2 {
        let order = if c1a <= c1b { "horizontal then vertical" } else { "vertical then horizontal" };
        (competitor_1, order.to_string())
    } else {
        (competitor_2, format!("through the axis at radius {rho:e}"))
    };
    Ok(BallBoxBounds {
        result: DistanceResult {
            value: None,
            lower,
            upper,
            witness,
            tol: 0.0,
        },
        formula,
        competitor_1,
        competitor_2,
    })
}

/// Empirical two-sided constant `C` with `formula / C ≤ d ≤ C · formula`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallBoxCalibration {
    pub constant: f64,
    pub worst_pair: (Point, Point),
    pub samples: usize,
}

/// Calibrates `C` on pairs drawn uniformly from `[−half, half]³` with one
/// endpoint moved onto `Σ`, where distances are exact.
pub fn calibrate_ball_box(profile: &Profile, half: f64, n: usize, seed: u64) -> Result<BallBoxCalibration> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut best = BallBoxCalibration {
        constant: 1.0,
        worst_pair: ([0.0; 3], [0.0; 3]),
        samples: 0,
    };
    while best.samples < n {
        let mut a: Point = [0.0, 0.0, rng.gen_range(-half..half)];
        let mut b: Point = [rng.gen_range(-half..half), rng.gen_range(-half..half), rng.gen_range(-half..half)];
        if radius(&b) < 1e-3 {
            continue;
        }
        if rng.gen_bool(0.5) {
            std::mem::swap(&mut a, &mut b);
        }
        let exact = distance_sigma_pair(profile, &a, &b)?.value.unwrap();
        let formula = ball_box_formula(profile, &a, &b)?;
        let c = (exact / formula).max(formula / exact);
        if c > best.constant {
            best.constant = c;
            best.worst_pair = (a, b);
        }
        best.samples += 1;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn linear_periods() {
        let p = Profile::linear();
        for &w in &[0.5, 1.0, 2.0, -2.0] {
            let tp = period(&p, 0.5, w).unwrap();
            assert!((tp.period - PI / w.abs()).abs() < 1e-12, "{w}: {}", tp.period);
            assert!((tp.rho_star - 1.0 / w.abs()).abs() < 1e-14);
        }
    }

    #[test]
    fn period_rejects_nonpositive_energy() {
        assert!(period(&Profile::linear(), 0.0, 1.0).unwrap_err().is_input());
    }

    #[test]
    fn linear_vertical_displacement() {
        let (_, z) = vertical_displacement(&Profile::linear(), 0.5, 1.0).unwrap();
        assert!((z - FRAC_PI_2).abs() < 1e-12);
        let (_, z) = vertical_displacement(&Profile::linear(), 0.5, -2.0).unwrap();
        assert!((z + PI / 8.0).abs() < 1e-12);
    }

    #[test]
    fn period_matches_first_return() {
        for p in Profile::builtins() {
            let (tp, t_ode) = period_crosscheck(&p, 1.0, 0.7).unwrap();
            assert!(((tp.period - t_ode) / t_ode).abs() < 1e-9, "{p}: {} vs {t_ode}", tp.period);
        }
    }

    #[test]
    fn branches_meet_at_junction_and_split_the_period() {
        let p = Profile::monomial(2.0).unwrap();
        let rho_bar = 0.8;
        let w_star = branch_junction(&p, rho_bar);
        let j = branch_values(&p, w_star, rho_bar).unwrap();
        assert!((j.z1 - j.z2).abs() < 1e-12 && (j.t1 - j.t2).abs() < 1e-12);
        let b = branch_values(&p, 0.5 * w_star, rho_bar).unwrap();
        let (tp, z) = vertical_displacement(&p, 0.5, 0.5 * w_star).unwrap();
        // Out, turn, and back to the axis: t2 + t1 = T.
        assert!((b.t1 + b.t2 - tp.period).abs() < 1e-11);
        assert!((b.z1 + b.z2 - z).abs() < 1e-11);
    }

    #[test]
    fn distance_examples() {
        let p = Profile::linear();
        let d = distance_from_sigma(&p, &[0.0; 3], &[2.0, 0.0, 0.0]).unwrap();
        assert_eq!(d.value, Some(2.0));
        for &zb in &[0.1, 1.0, 5.0] {
            let d = distance_from_sigma(&p, &[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0 + zb]).unwrap();
            assert!((d.value.unwrap() - (2.0 * PI * zb).sqrt()).abs() < 1e-9);
        }
        let mut prev = 1.0;
        for &eps in &[1e-6, 1e-5, 1e-4] {
            let d = distance_from_sigma(&p, &[0.0; 3], &[1.0, 0.0, eps]).unwrap().value.unwrap();
            assert!(d > prev && d - 1.0 < 10.0 * eps, "{eps}: {d}");
            prev = d;
        }
    }

    #[test]
    fn distance_requires_axis_base() {
        let err = distance_from_sigma(&Profile::linear(), &[1.0, 0.0, 0.0], &[0.0; 3]).unwrap_err();
        assert!(err.is_input());
    }

    #[test]
    fn ball_boundary_extremes() {
        let p = Profile::monolog(1.0, 2.0).unwrap();
        let radius = 1.0;
        let b = ball_boundary_from_sigma(&p, radius, 60).unwrap();
        let max_rho = b.iter().map(|q| q.rho).fold(0.0, f64::max);
        let max_z = b.iter().map(|q| q.z).fold(f64::MIN, f64::max);
        assert_eq!(max_rho, radius);
        assert!(max_z <= radius * p.eval(radius));
        assert!(b.first().unwrap().z < 0.0 && b.last().unwrap().z > 0.0);
    }

    #[test]
    fn ball_box_examples() {
        let p = Profile::linear();
        let same = ball_box_bounds(&p, &[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((same.result.lower, same.result.upper), (0.0, 0.0));
        let b = ball_box_bounds(&p, &[1.0, 0.0, 0.0], &[1.0, 0.0, 1.0]).unwrap();
        assert!(b.result.upper <= 1.0);
        let eps = 1e-3;
        let b = ball_box_bounds(&p, &[eps, 0.0, 0.0], &[eps, 0.0, 4.0]).unwrap();
        assert!(b.competitor_2 < b.competitor_1 && b.result.upper < 20.0);
        assert!(b.result.lower <= b.result.upper);
    }
}
