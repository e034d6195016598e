//! A quick invariant suite for one profile, reported as a pass/fail table.

use std::f64::consts::PI;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate_cartesian, integrate_variational, z_w0_identity_check, Covector, DynOptions, Point};
use crate::error::Result;
use crate::grushin_r::{closed_form_geodesic, cut_time_and_locus, distance_r};
use crate::profile::{validate, AxiomStatus, GridSpec, Profile};
use crate::riemannian::{
    conjectured_cut_time, integrate_cylindrical, jacobian_full, jacobian_reduced, straight_line_determinants,
    symmetrize_covector, Chart,
};
use crate::singular_synthesis::{ball_box_bounds, calibrate_ball_box, distance_from_sigma, period, period_crosscheck};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub profile: String,
    pub check: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn random_unit(profile: &Profile, rng: &mut StdRng) -> (Point, Covector) {
    loop {
        let q0: Point = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let raw = Covector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if q0[0].hypot(q0[1]) < 0.05 || raw.w0.abs() < 0.05 {
            continue;
        }
        if let Ok(lam) = raw.normalized(profile, &q0) {
            return (q0, lam);
        }
    }
}

type Check = fn(&Profile, &mut StdRng) -> Result<(bool, String)>;

fn axioms(p: &Profile, _: &mut StdRng) -> Result<(bool, String)> {
    let rep = validate(p, &GridSpec::default());
    let failed: Vec<u8> = rep
        .checks
        .iter()
        .filter(|c| c.status == AxiomStatus::Fail)
        .map(|c| c.axiom)
        .collect();
    Ok((failed.is_empty(), format!("failed axioms: {failed:?}")))
}

fn periods(p: &Profile, _: &mut StdRng) -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for &w in &[0.5, 1.0, 2.0] {
        let (tp, t_ode) = period_crosscheck(p, 0.5, w)?;
        worst = worst.max((tp.period - t_ode).abs());
    }
    Ok((worst < 1e-8, format!("max |T_quad − T_ode| = {worst:.3e}")))
}

fn conservation(p: &Profile, rng: &mut StdRng) -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let (q0, lam) = random_unit(p, rng);
        let t = 3.0 * period(p, 0.5, lam.w0)?.period;
        let tr = integrate_cartesian(p, &q0, &lam, t, &DynOptions::default())?;
        worst = worst.max(tr.drift.max_dh).max(tr.drift.max_dk);
    }
    Ok((worst < 1e-9, format!("max drift of H, K over [0, 3T] = {worst:.3e}")))
}

fn technical_lemma(p: &Profile, _: &mut StdRng) -> Result<(bool, String)> {
    let mut sign_ok = true;
    let mut residual = 0.0_f64;
    for &w in &[0.4, 1.0, 2.5] {
        let t_per = period(p, 0.5, w)?.period;
        let var = integrate_variational(p, w, 1.0, t_per, &DynOptions::precise())?;
        for i in 1..20 {
            let t = t_per * i as f64 / 20.0;
            sign_ok &= var.eval(t).rho_w < 0.0;
        }
        residual = residual.max(z_w0_identity_check(p, w, 1.0, 0.6 * t_per)?);
    }
    Ok((
        sign_ok && residual < 1e-5,
        format!("ρ_w < 0: {sign_ok}, z_w identity residual {residual:.3e}"),
    ))
}

fn symmetrizing(p: &Profile, rng: &mut StdRng) -> Result<(bool, String)> {
    let opts = DynOptions::precise();
    let mut worst = 0.0_f64;
    let mut finite = 0;
    for _ in 0..5 {
        let (q0, lam) = random_unit(p, rng);
        let t = conjectured_cut_time(p, &q0, &lam, 200.0, &opts)?;
        if !t.is_finite() {
            continue;
        }
        finite += 1;
        let hat = symmetrize_covector(&q0, &lam)?;
        let a = integrate_cylindrical(p, &q0, &lam, t, &opts)?.position(t);
        let b = integrate_cylindrical(p, &q0, &hat, t, &opts)?.position(t);
        worst = worst.max((0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max));
    }
    Ok((
        worst < 1e-7,
        format!("{finite} finite conjectured cut times, max |γ(T) − γ̂(T)| = {worst:.3e}"),
    ))
}

fn jacobian_reduction(p: &Profile, rng: &mut StdRng) -> Result<(bool, String)> {
    let opts = DynOptions::precise();
    let mut worst = 0.0_f64;
    for _ in 0..3 {
        let (q0, lam) = random_unit(p, rng);
        for chart in Chart::ALL {
            let red = jacobian_reduced(p, chart, &q0, &lam, 0.7, &opts)?;
            let full = jacobian_full(p, chart, &q0, &lam, 0.7, &opts)?;
            worst = worst.max((red - full).abs() / full.abs());
        }
    }
    Ok((worst < 1e-4, format!("max relative gap reduced vs full = {worst:.3e}")))
}

fn straight_lines(p: &Profile, _: &mut StdRng) -> Result<(bool, String)> {
    let q0 = [0.8, -0.5, 0.0];
    let lam = Covector::new(0.6, 0.8, 0.0);
    let times: Vec<f64> = (1..=10).map(|i| i as f64).collect();
    let dets = straight_line_determinants(p, &q0, &lam, &times, &DynOptions::precise())?;
    let worst = dets
        .iter()
        .map(|d| (d.finite_difference - d.formula).abs() / d.formula.abs())
        .fold(0.0, f64::max);
    let nonzero = dets.iter().all(|d| d.finite_difference != 0.0);
    Ok((worst < 1e-6 && nonzero, format!("max relative gap {worst:.3e}")))
}

fn ball_box(p: &Profile, rng: &mut StdRng) -> Result<(bool, String)> {
    let cal = calibrate_ball_box(p, 2.0, 30, rng.gen())?;
    Ok((cal.constant <= 10.0, format!("C = {:.4}", cal.constant)))
}

fn sigma_distances(p: &Profile, rng: &mut StdRng) -> Result<(bool, String)> {
    let mut ok = true;
    for _ in 0..10 {
        let a = [0.0, 0.0, rng.gen_range(-2.0..2.0)];
        let b = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let d = distance_from_sigma(p, &a, &b)?.value.unwrap_or(f64::NAN);
        let bb = ball_box_bounds(p, &a, &b)?;
        ok &= d >= bb.result.lower * (1.0 - 1e-9) && d <= bb.result.upper * (1.0 + 1e-9);
    }
    Ok((ok, "exact distance within certified bounds".into()))
}

fn closed_form(p: &Profile, rng: &mut StdRng) -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for _ in 0..5 {
        let (q0, lam) = random_unit(p, rng);
        let t_end = 2.0 * PI / lam.w0.abs();
        let g = closed_form_geodesic(&q0, &lam)?;
        let tr = integrate_cartesian(p, &q0, &lam, t_end, &DynOptions::precise())?;
        for i in 0..=50 {
            let t = t_end * i as f64 / 50.0;
            let (a, b) = (g.position(t), tr.position(t));
            worst = worst.max((0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max));
        }
    }
    Ok((worst < 1e-7, format!("max closed form vs ODE = {worst:.3e}")))
}

fn cut_locus(_: &Profile, rng: &mut StdRng) -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let (q0, lam) = random_unit(&Profile::linear(), rng);
        let res = cut_time_and_locus(&q0, &lam)?;
        let c = res.cut_point.unwrap();
        let end = closed_form_geodesic(&q0, &lam)?.position(res.t_cut);
        worst = worst.max((0..3).map(|k| (end[k] - c[k]).abs() / (1.0 + c[k].abs())).fold(0.0, f64::max));
    }
    Ok((worst < 1e-9, format!("max cut point mismatch {worst:.3e}")))
}

fn metric(_: &Profile, rng: &mut StdRng) -> Result<(bool, String)> {
    let mut slack = f64::INFINITY;
    let mut asym = 0.0_f64;
    let mut pt = || [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
    for _ in 0..20 {
        let (a, b, c) = (pt(), pt(), pt());
        let d = |x: &Point, y: &Point| distance_r(x, y).map(|r| r.value.unwrap());
        slack = slack.min(d(&a, &b)? + d(&b, &c)? - d(&a, &c)?);
        asym = asym.max((d(&a, &b)? - d(&b, &a)?).abs());
    }
    Ok((
        slack >= -1e-8 && asym <= 1e-9,
        format!("min triangle slack {slack:.3e}, max asymmetry {asym:.3e}"),
    ))
}

/// Runs the suite with a fixed seed; checks specific to `f(r) = r` run only
/// for that profile.
pub fn run_suite(profile: &Profile, seed: u64) -> Vec<VerifyRow> {
    let mut checks: Vec<(&str, Check)> = vec![
        ("axioms", axioms),
        ("period", periods),
        ("conservation", conservation),
        ("technical_lemma", technical_lemma),
        ("symmetrizing_geodesic", symmetrizing),
        ("jacobian_reduction", jacobian_reduction),
        ("straight_line_determinant", straight_lines),
        ("ball_box", ball_box),
        ("sigma_distance_bounds", sigma_distances),
    ];
    if profile.is_linear() {
        checks.push(("closed_form", closed_form));
        checks.push(("cut_locus", cut_locus));
        checks.push(("metric", metric));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    checks
        .into_iter()
        .map(|(name, check)| {
            let start = Instant::now();
            let (passed, detail) = match check(profile, &mut rng) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            VerifyRow {
                profile: profile.to_string(),
                check: name.to_string(),
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

/// Fixed-width table of results.
pub fn format_table(rows: &[VerifyRow]) -> String {
    let mut out = format!("{:<26} {:<28} {:<6} {:>8}  {}\n", "profile", "check", "status", "seconds", "detail");
    for r in rows {
        out.push_str(&format!(
            "{:<26} {:<28} {:<6} {:>8.3}  {}\n",
            r.profile,
            r.check,
            if r.passed { "PASS" } else { "FAIL" },
            r.seconds,
            r.detail
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_suite_passes() {
        let rows = run_suite(&Profile::linear(), 1);
        assert_eq!(rows.len(), 12);
        for r in &rows {
            assert!(r.passed, "{}: {}", r.check, r.detail);
        }
        assert!(format_table(&rows).contains("PASS"));
    }
}
