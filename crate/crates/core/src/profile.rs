//! Admissible radial weights `f` and the functions derived from them.
//!
//! A profile is one of two parametric families:
//!
//! * `Monomial { alpha }`: `f(r) = r^α`
//! * `MonomialLog { alpha, beta }`: `f(r) = r^α · ln(1 + r)^β`
//!
//! The metric is admissible when `α ≥ 1` and `β ≥ 0`. Smaller exponents can
//! still be constructed so that [`validate`] can report which axiom breaks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GrushinError, Result};
use crate::roots::invert_increasing;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Monomial { alpha: f64 },
    MonomialLog { alpha: f64, beta: f64 },
}

impl Profile {
    pub fn monomial(alpha: f64) -> Result<Self> {
        check_exponent("alpha", alpha, false)?;
        Ok(Profile::Monomial { alpha })
    }

    pub fn monolog(alpha: f64, beta: f64) -> Result<Self> {
        check_exponent("alpha", alpha, false)?;
        check_exponent("beta", beta, true)?;
        Ok(Profile::MonomialLog { alpha, beta })
    }

    /// `f(r) = r`, the integrable case.
    pub fn linear() -> Self {
        Profile::Monomial { alpha: 1.0 }
    }

    /// The profiles exercised by the verification suites.
    pub fn builtins() -> Vec<Profile> {
        vec![
            Profile::Monomial { alpha: 1.0 },
            Profile::Monomial { alpha: 2.0 },
            Profile::Monomial { alpha: 3.0 },
            Profile::MonomialLog {
                alpha: 1.0,
                beta: 2.0,
            },
        ]
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            Profile::Monomial { alpha } | Profile::MonomialLog { alpha, .. } => alpha,
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            Profile::Monomial { .. } => 0.0,
            Profile::MonomialLog { beta, .. } => beta,
        }
    }

    /// True for `f(r) = r` exactly, where closed forms are available.
    pub fn is_linear(&self) -> bool {
        self.alpha() == 1.0 && self.beta() == 0.0
    }

    /// Exponent of the leading power of `f` at the origin.
    pub fn leading_power(&self) -> f64 {
        self.alpha() + self.beta()
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match *self {
            Profile::Monomial { alpha } => pow(r, alpha),
            Profile::MonomialLog { alpha, beta } => pow(r, alpha) * pow(r.ln_1p(), beta),
        }
    }

    /// `f'(r)` for `r > 0`.
    pub fn deriv1(&self, r: f64) -> f64 {
        let (alpha, beta) = (self.alpha(), self.beta());
        let mut d = alpha * pow(r, alpha - 1.0) * pow(r.ln_1p(), beta);
        if beta != 0.0 {
            d += beta * pow(r, alpha) * pow(r.ln_1p(), beta - 1.0) / (1.0 + r);
        }
        d
    }

    /// `f''(r)` for `r > 0`.
    pub fn deriv2(&self, r: f64) -> f64 {
        let (alpha, beta) = (self.alpha(), self.beta());
        let l = r.ln_1p();
        let mut d = if alpha == 1.0 {
            0.0
        } else {
            alpha * (alpha - 1.0) * pow(r, alpha - 2.0) * pow(l, beta)
        };
        if beta != 0.0 {
            let p = 1.0 + r;
            d += 2.0 * alpha * beta * pow(r, alpha - 1.0) * pow(l, beta - 1.0) / p;
            d -= beta * pow(r, alpha) * pow(l, beta - 1.0) / (p * p);
            if beta != 1.0 {
                d += beta * (beta - 1.0) * pow(r, alpha) * pow(l, beta - 2.0) / (p * p);
            }
        }
        d
    }

    /// Limit of `f(r) f'(r) / r` as `r → 0⁺`; infinite when the leading power is below 1.
    pub fn ffprime_over_r_at_0(&self) -> f64 {
        let p = self.leading_power();
        if p > 1.0 {
            0.0
        } else if p == 1.0 {
            1.0
        } else {
            f64::INFINITY
        }
    }

    /// `f(r) f'(r) / r`, written as `r^{2α-2} ℓ^{2β} (α + β r / ((1+r) ℓ))`
    /// with `ℓ = ln(1+r)` so that no `0/0` appears for small `r`.
    pub fn ffprime_over_r(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.ffprime_over_r_at_0();
        }
        let (alpha, beta) = (self.alpha(), self.beta());
        let base = if alpha == 1.0 { 1.0 } else { pow(r, 2.0 * alpha - 2.0) };
        if beta == 0.0 {
            return alpha * base;
        }
        let l = r.ln_1p();
        base * pow(l, 2.0 * beta) * (alpha + beta * r / ((1.0 + r) * l))
    }

    /// `f'(r)² + f(r) f''(r)`, i.e. half of `(f²)''`.
    pub fn half_fsq_deriv2(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.ffprime_over_r_at_0();
        }
        let d1 = self.deriv1(r);
        d1 * d1 + self.eval(r) * self.deriv2(r)
    }

    /// `ln(f(a(1-u²)) / f(a))` for `a > 0`, `0 ≤ u ≤ 1`, accurate for small `u`.
    pub fn ln_ratio(&self, a: f64, u: f64) -> f64 {
        let u2 = u * u;
        if u2 >= 1.0 {
            return f64::NEG_INFINITY;
        }
        let mut lr = self.alpha() * (-u2).ln_1p();
        let beta = self.beta();
        if beta != 0.0 {
            let inner = (-a * u2 / (1.0 + a)).ln_1p() / a.ln_1p();
            lr += beta * inner.ln_1p();
        }
        lr
    }

    /// `f(a)² − f(a(1−u²))²` without cancellation for small `u`.
    pub fn sq_gap(&self, a: f64, u: f64) -> f64 {
        let fa = self.eval(a);
        fa * fa * -(2.0 * self.ln_ratio(a, u)).exp_m1()
    }

    pub fn odd(&self) -> OddExtension {
        OddExtension { profile: *self }
    }

    /// Inverse of the strictly increasing map `r ↦ r f(r)`.
    pub fn h_inverse(&self, s: f64) -> Result<f64> {
        invert_increasing(|r| r * self.eval(r), s, "h_inverse")
    }

    /// Inverse of `f` on `[0, ∞)`.
    pub fn f_inverse(&self, y: f64) -> Result<f64> {
        if self.is_linear() && y >= 0.0 {
            return Ok(y);
        }
        invert_increasing(|r| self.eval(r), y, "f_inverse")
    }
}

fn pow(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

fn check_exponent(name: &str, value: f64, allow_zero: bool) -> Result<()> {
    let ok = value.is_finite() && (value > 0.0 || (allow_zero && value == 0.0));
    if ok {
        Ok(())
    } else {
        Err(GrushinError::input(format!(
            "{name} must be finite and {}, got {value}",
            if allow_zero { "non-negative" } else { "positive" }
        )))
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Profile::Monomial { alpha } => write!(f, "monomial:alpha={alpha}"),
            Profile::MonomialLog { alpha, beta } => {
                write!(f, "monolog:alpha={alpha},beta={beta}")
            }
        }
    }
}

impl FromStr for Profile {
    type Err = GrushinError;

    /// Parses `monomial:alpha=<f>` or `monolog:alpha=<f>,beta=<f>`, ignoring case.
    fn from_str(spec: &str) -> Result<Self> {
        let lower = spec.trim().to_ascii_lowercase();
        let (family, params) = lower
            .split_once(':')
            .ok_or_else(|| GrushinError::input(format!("profile spec {spec:?} lacks ':'")))?;
        let mut alpha = None;
        let mut beta = None;
        for pair in params.split(',') {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                GrushinError::input(format!("profile parameter {pair:?} is not key=value"))
            })?;
            let value: f64 = value.trim().parse().map_err(|_| {
                GrushinError::input(format!("profile parameter {key:?} is not a number"))
            })?;
            let slot = match key.trim() {
                "alpha" => &mut alpha,
                "beta" => &mut beta,
                other => {
                    return Err(GrushinError::input(format!(
                        "unknown profile parameter {other:?}"
                    )))
                }
            };
            if slot.replace(value).is_some() {
                return Err(GrushinError::input(format!("duplicate profile parameter {key:?}")));
            }
        }
        let alpha = alpha.ok_or_else(|| GrushinError::input("profile spec needs alpha"))?;
        match family.trim() {
            "monomial" => {
                if beta.is_some() {
                    return Err(GrushinError::input("monomial profile takes no beta"));
                }
                Profile::monomial(alpha)
            }
            "monolog" => {
                let beta = beta.ok_or_else(|| GrushinError::input("monolog profile needs beta"))?;
                Profile::monolog(alpha, beta)
            }
            other => Err(GrushinError::input(format!("unknown profile family {other:?}"))),
        }
    }
}

/// The odd extension `g(ρ) = sign(ρ) f(|ρ|)` used for motion through the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OddExtension {
    pub profile: Profile,
}

impl OddExtension {
    pub fn g(&self, rho: f64) -> f64 {
        let v = self.profile.eval(rho.abs());
        if rho < 0.0 {
            -v
        } else {
            v
        }
    }

    pub fn gsq(&self, rho: f64) -> f64 {
        let v = self.profile.eval(rho.abs());
        v * v
    }

    /// `g(ρ) g'(ρ) = ρ · f f'/r (|ρ|)`.
    pub fn g_gprime(&self, rho: f64) -> f64 {
        rho * self.profile.ffprime_over_r(rho.abs())
    }

    /// `(g²)''(ρ)`, continuous through `ρ = 0`.
    pub fn gsq_deriv2(&self, rho: f64) -> f64 {
        2.0 * self.profile.half_fsq_deriv2(rho.abs())
    }
}

/// Sample grids on which the admissibility axioms are checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Geometric grid approaching the origin: `[near_lo, near_hi]`.
    pub near_lo: f64,
    pub near_hi: f64,
    pub near_n: usize,
    /// Geometric tail grid `[tail_lo, tail_hi]`.
    pub tail_lo: f64,
    pub tail_hi: f64,
    pub tail_n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            near_lo: 1e-12,
            near_hi: 1e-1,
            near_n: 80,
            tail_lo: 1e1,
            tail_hi: 1e6,
            tail_n: 60,
        }
    }
}

impl GridSpec {
    fn near(&self) -> Vec<f64> {
        geometric(self.near_lo, self.near_hi, self.near_n)
    }

    fn tail(&self) -> Vec<f64> {
        geometric(self.tail_lo, self.tail_hi, self.tail_n)
    }

    /// Near grid, a bridge from `near_hi` to `tail_lo`, and the tail grid.
    fn full(&self) -> Vec<f64> {
        let mut all = self.near();
        all.extend(geometric(self.near_hi, self.tail_lo, 100).into_iter().skip(1));
        all.extend(self.tail().into_iter().skip(1));
        all
    }
}

/// `n ≥ 2` points spaced geometrically from `lo` to `hi`, both included.
pub fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo * (ratio * i as f64).exp()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomStatus {
    Pass,
    /// Asymptotic claims that a finite grid can support but not prove.
    Consistent,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub axiom: u8,
    pub statement: String,
    pub status: AxiomStatus,
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub profile: String,
    pub checks: Vec<AxiomCheck>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != AxiomStatus::Fail)
    }

    pub fn check(&self, axiom: u8) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.axiom == axiom)
    }
}

/// Checks the five membership axioms on the sample grids of `grid`.
pub fn validate(profile: &Profile, grid: &GridSpec) -> ValidationReport {
    let full = grid.full();
    let checks = vec![
        axiom_positive(profile, &full),
        axiom_regular(profile, &full),
        axiom_continuous_at_zero(profile, &grid.near()),
        axiom_increasing_unbounded(profile, &full),
        axiom_tail_growth(profile, &grid.tail()),
    ];
    ValidationReport {
        profile: profile.to_string(),
        checks,
    }
}

fn entry(
    axiom: u8,
    statement: &'static str,
    status: AxiomStatus,
    witness: Option<f64>,
    detail: String,
) -> AxiomCheck {
    AxiomCheck {
        axiom,
        statement: statement.to_string(),
        status,
        witness,
        detail,
    }
}

fn axiom_positive(p: &Profile, grid: &[f64]) -> AxiomCheck {
    const S: &str = "f(0) = 0 and f > 0 away from 0";
    if p.eval(0.0) != 0.0 {
        return entry(1, S, AxiomStatus::Fail, Some(0.0), "f(0) != 0".into());
    }
    match grid.iter().find(|&&r| !(p.eval(r) > 0.0)) {
        Some(&r) => entry(1, S, AxiomStatus::Fail, Some(r), format!("f({r:e}) = {:e}", p.eval(r))),
        None => entry(1, S, AxiomStatus::Pass, None, format!("{} samples", grid.len())),
    }
}

fn axiom_regular(p: &Profile, grid: &[f64]) -> AxiomCheck {
    const S: &str = "f is C2 away from 0";
    let bad = grid.iter().find(|&&r| {
        let (d1, d2) = (p.deriv1(r), p.deriv2(r));
        if !d1.is_finite() || !d2.is_finite() {
            return true;
        }
        let h = 1e-4 * r;
        let fd = (p.deriv1(r + h) - p.deriv1(r - h)) / (2.0 * h);
        (fd - d2).abs() > 1e-5 * (1.0 + d2.abs() + d1.abs() / r)
    });
    match bad {
        Some(&r) => entry(
            2,
            S,
            AxiomStatus::Fail,
            Some(r),
            format!("f'' inconsistent at r = {r:e}"),
        ),
        None => entry(2, S, AxiomStatus::Pass, None, "derivatives finite and consistent".into()),
    }
}

fn axiom_continuous_at_zero(p: &Profile, near: &[f64]) -> AxiomCheck {
    const S: &str = "f f'/r extends continuously to r = 0";
    let limit = p.ffprime_over_r_at_0();
    let smallest = near[0];
    if !limit.is_finite() {
        return entry(
            3,
            S,
            AxiomStatus::Fail,
            Some(smallest),
            format!("f f'/r = {:e} at r = {smallest:e}, diverging", p.ffprime_over_r(smallest)),
        );
    }
    let mut prev_gap = f64::INFINITY;
    for &r in near.iter().rev() {
        let value = p.ffprime_over_r(r);
        let gap = (value - limit).abs();
        if !value.is_finite() || gap > prev_gap + 1e-12 * (1.0 + limit) {
            return entry(
                3,
                S,
                AxiomStatus::Fail,
                Some(r),
                format!("f f'/r = {value:e} at r = {r:e} moves away from {limit:e}"),
            );
        }
        prev_gap = gap;
    }
    entry(
        3,
        S,
        AxiomStatus::Pass,
        None,
        format!("converges to {limit} (gap {prev_gap:e} at r = {smallest:e})"),
    )
}

fn axiom_increasing_unbounded(p: &Profile, grid: &[f64]) -> AxiomCheck {
    const S: &str = "f strictly increasing and unbounded";
    for pair in grid.windows(2) {
        if !(p.eval(pair[1]) > p.eval(pair[0])) {
            return entry(
                4,
                S,
                AxiomStatus::Fail,
                Some(pair[1]),
                format!("f not increasing between {:e} and {:e}", pair[0], pair[1]),
            );
        }
    }
    let last = *grid.last().unwrap();
    let growth = p.eval(last) / p.eval(1.0);
    if growth < 1e3 {
        return entry(
            4,
            S,
            AxiomStatus::Fail,
            Some(last),
            format!("f({last:e}) / f(1) = {growth:e} shows no growth"),
        );
    }
    entry(
        4,
        S,
        AxiomStatus::Consistent,
        None,
        format!("f({last:e}) / f(1) = {growth:e}"),
    )
}

fn axiom_tail_growth(p: &Profile, tail: &[f64]) -> AxiomCheck {
    const S: &str = "f^2/f' grows without bound";
    let q = |r: f64| {
        let f = p.eval(r);
        f * f / p.deriv1(r)
    };
    for pair in tail.windows(2) {
        if !(q(pair[1]) > q(pair[0])) {
            return entry(
                5,
                S,
                AxiomStatus::Fail,
                Some(pair[1]),
                format!("f^2/f' not increasing at r = {:e}", pair[1]),
            );
        }
    }
    let (first, last) = (tail[0], *tail.last().unwrap());
    let growth = q(last) / q(first);
    if growth < 1e3 {
        return entry(
            5,
            S,
            AxiomStatus::Fail,
            Some(last),
            format!("f^2/f' grows only by {growth:e} over the tail"),
        );
    }
    entry(
        5,
        S,
        AxiomStatus::Consistent,
        None,
        format!("f^2/f' grows by {growth:e} over the tail"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all() -> Vec<Profile> {
        let mut v = Profile::builtins();
        v.push(Profile::monolog(1.0, 1.0).unwrap());
        v.push(Profile::monolog(2.5, 0.5).unwrap());
        v
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for p in all() {
            for &r in &[1e-3, 0.1, 0.7, 1.0, 3.0, 50.0] {
                let h = 1e-5 * r;
                let d1 = (p.eval(r + h) - p.eval(r - h)) / (2.0 * h);
                let d2 = (p.deriv1(r + h) - p.deriv1(r - h)) / (2.0 * h);
                assert!((d1 - p.deriv1(r)).abs() <= 1e-7 * (1.0 + d1.abs()), "{p} f' at {r}");
                assert!((d2 - p.deriv2(r)).abs() <= 1e-6 * (1.0 + d2.abs()), "{p} f'' at {r}");
                let k = p.eval(r) * p.deriv1(r) / r;
                assert!((k - p.ffprime_over_r(r)).abs() <= 1e-12 * (1.0 + k.abs()));
            }
        }
    }

    #[test]
    fn sq_gap_matches_direct_difference() {
        for p in all() {
            for &a in &[0.3, 1.0, 4.0] {
                for &u in &[0.2, 0.5, 0.9] {
                    let direct = p.eval(a).powi(2) - p.eval(a * (1.0 - u * u)).powi(2);
                    let gap = p.sq_gap(a, u);
                    assert!((gap - direct).abs() <= 1e-12 * p.eval(a).powi(2), "{p} {a} {u}");
                }
                let u = 1e-9;
                let lead = 2.0 * a * p.eval(a) * p.deriv1(a) * u * u;
                assert!((p.sq_gap(a, u) / lead - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn linear_odd_extension() {
        let g = Profile::linear().odd();
        for &rho in &[-2.0, -1e-9, 0.0, 1e-9, 0.5] {
            assert_eq!(g.g(-rho), -g.g(rho));
            assert_eq!(g.gsq_deriv2(rho), 2.0);
        }
        assert_eq!(g.g_gprime(0.3), 0.3);
    }

    #[test]
    fn inverse_examples() {
        let r = Profile::linear();
        assert!((r.h_inverse(4.0).unwrap() - 2.0).abs() < 1e-12);
        let r2 = Profile::monomial(2.0).unwrap();
        assert!((r2.h_inverse(8.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((r2.f_inverse(9.0).unwrap() - 3.0).abs() < 1e-12);
        let ml = Profile::monolog(1.0, 1.0).unwrap();
        assert!((ml.f_inverse(2.0 * 3f64.ln()).unwrap() - 2.0).abs() < 1e-12);
        for p in all() {
            assert_eq!(p.h_inverse(0.0).unwrap(), 0.0);
            assert_eq!(p.f_inverse(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn builtins_validate() {
        for p in Profile::builtins() {
            let report = validate(&p, &GridSpec::default());
            assert!(report.all_pass(), "{report:?}");
            assert_eq!(report.check(5).unwrap().status, AxiomStatus::Consistent);
        }
    }

    #[test]
    fn square_root_fails_continuity_at_zero() {
        let p = Profile::monomial(0.5).unwrap();
        let report = validate(&p, &GridSpec::default());
        let c = report.check(3).unwrap();
        assert_eq!(c.status, AxiomStatus::Fail);
        assert!(c.witness.unwrap() < 1e-6);
    }

    #[test]
    fn parse_and_display_round_trip() {
        for p in all() {
            assert_eq!(p.to_string().parse::<Profile>().unwrap(), p);
        }
        assert_eq!(
            "MonoLog:Alpha=1,BETA=2".parse::<Profile>().unwrap(),
            Profile::monolog(1.0, 2.0).unwrap()
        );
        for bad in [
            "",
            "monomial",
            "monomial:alpha",
            "monomial:alpha=x",
            "monomial:alpha=1,beta=2",
            "monolog:alpha=1",
            "cubic:alpha=1",
            "monomial:alpha=-1",
            "monomial:alpha=1,alpha=2",
            "monomial:alpha=nan",
        ] {
            assert!(bad.parse::<Profile>().unwrap_err().is_input(), "{bad}");
        }
    }
}
