//! Acceptance suite: one PASS/FAIL line per criterion.

use renorm_core::arclab::{
    arc_points, average_jacobian, boundary_invariance, degenerate_arc, holder_bound, holder_empirical,
    siegel_boundary, universality_report, HenonDynamics, UniversalAlpha,
};
use renorm_core::goldenrot::{count_words, equidist_average, fibonacci_q, theta, WordKind};
use renorm_core::renorm1d::{
    differential_spectrum, gstar_shifted, mu_star, renormalize1d, solve_fixed_point, FixedPoint, NewtonConfig, Pair1D,
};
use renorm_core::renorm2d::{
    embed_1d, renormalize2d_traced, tilt_decomposition, Frames2, HenonMap, HenonTower, Microscope,
};
use renorm_core::series::{compose1, revert_about_with_radius, Series1};
use renorm_core::{Precision, Result, C64};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn fixed_point_60() -> &'static FixedPoint {
    static FP: OnceLock<FixedPoint> = OnceLock::new();
    FP.get_or_init(|| solve_fixed_point(60, &NewtonConfig::default()).expect("fixed point at degree 60"))
}

fn within_time(t: Duration, budget_s: f64) -> bool {
    t.as_secs_f64() < budget_s
}

fn combinatorics() -> Result<Outcome> {
    let t = Instant::now();
    let mut ok = true;
    for n in 0..=15 {
        ok &= count_words(n, WordKind::J) == fibonacci_q(2 * n + 1)?;
        ok &= count_words(n, WordKind::I) == fibonacci_q(2 * n)?;
    }
    let el = t.elapsed();
    outcome(ok && within_time(el, 1.0), format!("counts match Fibonacci for n <= 15: {ok}; {el:.2?} (< 1 s)"))
}

fn equidistribution() -> Result<Outcome> {
    let t = Instant::now();
    let th = theta();
    let (lo, hi) = (0.5 * th * th, 1.5 * th * th);
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, m) in [("x", 1.0), ("sin5x", 5.0)] {
        let f = move |x: f64| if m == 1.0 { c(x, 0.0) } else { c((5.0 * x).sin(), 0.0) };
        let mut errs = Vec::new();
        for n in 2..=10 {
            let r = equidist_average(f, m, n)?;
            let e = (r.qavg - r.favg).norm();
            ok &= e <= 2.0 / th * m * renorm_core::goldenrot::short_length(n);
            errs.push(e);
        }
        let ratios: Vec<f64> = errs.windows(2).map(|w| w[1] / w[0]).collect();
        ok &= ratios.iter().all(|r| (lo..=hi).contains(r));
        let (rmin, rmax) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        notes.push(format!("{name}: err(10) = {:.2e}, ratios in [{rmin:.4}, {rmax:.4}]", errs[8]));
    }
    let el = t.elapsed();
    ok &= within_time(el, 5.0);
    outcome(ok, format!("{}; window [{lo:.4}, {hi:.4}]; {el:.2?} (< 5 s)", notes.join("; ")))
}

fn fixed_point_1d() -> Result<Outcome> {
    let t = Instant::now();
    let fp = fixed_point_60();
    let lam2 = fp.lambda * fp.lambda;
    let g1 = gstar_shifted(&fp.zstar, 0.25)?.coeffs()[1];
    let fp70 = solve_fixed_point(70, &NewtonConfig::default())?;
    let dl = (fp70.lambda - fp.lambda).norm();
    let el = t.elapsed();
    let ok = fp.residual < 1e-11 && (g1 - lam2).norm() < 1e-8 && dl < 1e-6 && within_time(el, 60.0);
    outcome(
        ok,
        format!(
            "residual {:.2e} (< 1e-11); |g*'(1) - lambda^2| {:.2e} (< 1e-8); |lambda(70) - lambda(60)| {dl:.2e} (< 1e-6); {el:.2?}",
            fp.residual,
            (g1 - lam2).norm()
        ),
    )
}

fn hyperbolicity() -> Result<Outcome> {
    let t = Instant::now();
    let z = &fixed_point_60().zstar;
    let s30 = differential_spectrum(z, 30)?;
    let s50 = differential_spectrum(z, 50)?;
    let second = s50.eigenvalues[1].norm();
    let d0 = (s50.eigenvalues[0] - s30.eigenvalues[0]).norm();
    let d1 = (s50.eigenvalues[1].norm() - s30.eigenvalues[1].norm()).abs();
    let el = t.elapsed();
    let ok = s30.expanding_count == 1
        && s50.expanding_count == 1
        && second < 0.95
        && d0 < 1e-4
        && d1 < 1e-4
        && within_time(el, 120.0);
    outcome(
        ok,
        format!(
            "expanding {}/{}; leading {:.8}; second modulus {second:.6} (< 0.95); dim 30->50 shifts {d0:.1e}, {d1:.1e} (< 1e-4); {el:.2?}",
            s30.expanding_count,
            s50.expanding_count,
            s50.eigenvalues[0].norm()
        ),
    )
}

/// Conjugate both maps of `z` by `φ(x) = x + εx(x − 1)`, which fixes 0 and 1.
fn perturbed(z: &Pair1D, eps: C64) -> Result<Pair1D> {
    let one = c(1.0, 0.0);
    let coefs = [c(0.0, 0.0), one - eps, eps];
    let phi0 = Series1::from_poly(&coefs, z.degree(), c(0.0, 0.0), 3.0);
    let phi_inv = revert_about_with_radius(&phi0, c(0.0, 0.0), 2.5)?;
    let conj = |f: &Series1| -> Result<Series1> {
        let phi = Series1::from_poly(&coefs, f.degree(), f.center(), f.radius());
        Ok(compose1(&phi_inv, &compose1(f, &phi)?)?.resized(f.degree()).with_radius(f.radius()))
    };
    Ok(Pair1D::new(conj(&z.eta)?, conj(&z.xi)?))
}

fn fixed_point_2d() -> Result<Outcome> {
    let t = Instant::now();
    // the default 2D frames carry x-degree 80
    let fp = solve_fixed_point(80, &NewtonConfig::default())?;
    let z = &fp.zstar;
    let frames = Frames2::default();
    let iota = embed_1d(z, &frames)?;
    let (r, _) = renormalize2d_traced(&iota)?;
    let fixed = r.distance(&iota);
    let mut worst: f64 = 0.0;
    for eps in [c(0.002, 0.0), c(-0.002, 0.0), c(0.0, 0.002), c(0.005, 0.0), c(0.0, -0.005)] {
        let zt = perturbed(z, eps)?;
        let (lhs, _) = renormalize2d_traced(&embed_1d(&zt, &frames)?)?;
        let rhs = embed_1d(&renormalize1d(&zt)?, &frames)?;
        worst = worst.max(lhs.distance(&rhs));
    }
    let el = t.elapsed();
    let ok = fixed < 1e-9 && worst < 1e-9 && within_time(el, 120.0);
    outcome(ok, format!("|R(i(z)) - i(z)| {fixed:.2e}; commutation on 5 pairs {worst:.2e} (< 1e-9); {el:.2?}"))
}

fn collapse() -> Result<Outcome> {
    let t = Instant::now();
    let hm = HenonMap::golden(0.2)?;
    let tower = HenonTower::new(hm, 4)?;
    let frames = Frames2::tower();
    let mut norms = Vec::new();
    let mut precs = Vec::new();
    for n in 0..=4 {
        let (p, prec) = tower.pair_auto(n, &frames, Precision::Double)?;
        norms.push(p.y_norm());
        precs.push(prec);
    }
    let ratios: Vec<f64> = norms.windows(2).map(|w| w[1].ln() / w[0].ln()).collect();
    let el = t.elapsed();
    let ok = norms.iter().all(|v| *v > 0.0 && v.is_finite())
        && ratios.iter().all(|r| *r >= 1.5)
        && precs[4] == Precision::Extended
        && within_time(el, 300.0);
    let shown: Vec<String> = norms.iter().map(|v| format!("{v:.2e}")).collect();
    let rs: Vec<String> = ratios.iter().map(|v| format!("{v:.2}")).collect();
    outcome(ok, format!("y-norms [{}]; log ratios [{}] (>= 1.5); {el:.2?}", shown.join(", "), rs.join(", ")))
}

fn average_jacobian_closed_form() -> Result<Outcome> {
    let mut ok = true;
    let mut notes = Vec::new();
    for nu in [0.1, 0.2, 0.3] {
        let t = Instant::now();
        let hm = HenonMap::golden(nu)?;
        let d = HenonDynamics::new(hm, 6)?;
        let b = average_jacobian(&d, 6)?.avg_jacobian;
        let want = (mu_star() * c(nu, 0.0)).powf(1.0 + theta());
        let rel = (b - want).norm() / want.norm();
        let el = t.elapsed();
        ok &= rel < 1e-8 && within_time(el, 120.0);
        notes.push(format!("nu {nu}: rel {rel:.1e} in {el:.2?}"));
    }
    outcome(ok, format!("{} (< 1e-8)", notes.join("; ")))
}

fn universal_alpha() -> &'static UniversalAlpha {
    static A: OnceLock<UniversalAlpha> = OnceLock::new();
    A.get_or_init(|| UniversalAlpha::new(&fixed_point_60().zstar).expect("universal alpha"))
}

fn universality() -> Result<Outcome> {
    let t = Instant::now();
    let hm = HenonMap::golden(0.3)?;
    let d = HenonDynamics::new(hm, 6)?;
    let b = average_jacobian(&d, 6)?.avg_jacobian;
    let alpha = universal_alpha();
    let fit = universality_report(&d, 1..=3, b, alpha)?;
    let rel = (fit.slope - fit.log_b_sigma).abs() / fit.log_b_sigma.abs();
    let r = universality_report(&d, 1..=4, b, alpha)?;
    let devs: Vec<String> = r.levels.iter().map(|l| format!("{:.2e}", l.alpha_dev)).collect();
    let el = t.elapsed();
    let ok = rel < 0.05 && r.dev_ratios.iter().all(|q| *q < 0.9) && within_time(el, 600.0);
    outcome(
        ok,
        format!(
            "slope {:.4} vs log|b| {:.4} (rel {rel:.3}, < 0.05); deviations [{}], ratios < 0.9: {}; {el:.2?}",
            fit.slope,
            fit.log_b_sigma,
            devs.join(", "),
            r.dev_ratios.iter().all(|q| *q < 0.9)
        ),
    )
}

fn tilt_scaling() -> Result<Outcome> {
    let t = Instant::now();
    let hm = HenonMap::golden(0.3)?;
    let d = HenonDynamics::new(hm, 6)?;
    let logb = average_jacobian(&d, 6)?.avg_jacobian.norm().ln();
    let m = Microscope::from_tower(&d.tower, 0, 4)?;
    let lam = fixed_point_60().lambda;
    let mut ok = true;
    let mut notes = Vec::new();
    for td in tilt_decomposition(&m)?.into_iter().filter(|td| (1..=3).contains(&td.level)) {
        let q = fibonacci_q(2 * td.level)? as f64;
        let rate = td.s.norm().ln() / q;
        ok &= ((rate - logb) / logb).abs() < 0.1;
        notes.push(format!("k {}: {rate:.4}", td.level));
        if td.level == 3 {
            let eu = (td.u - lam * lam).norm() / (lam * lam).norm();
            let ev = (td.v - lam).norm() / lam.norm();
            ok &= eu < 0.05 && ev < 0.05;
            notes.push(format!("u_3 off {eu:.3}, v_3 off {ev:.3} (< 0.05)"));
        }
    }
    ok &= notes.len() == 4;
    outcome(ok, format!("log|b| {logb:.4}; {} (within 10%); {:.2?}", notes.join(", "), t.elapsed()))
}

fn non_rigidity() -> Result<Outcome> {
    let t = Instant::now();
    let b = c(0.3, 0.0);
    let exact = holder_bound(b, b)? == 1.0
        && holder_bound(c(0.0, 0.25), c(0.5, 0.0))? == 1.5
        && holder_bound(c(0.5, 0.0), c(0.25, 0.0))? == 0.75
        && holder_bound(c(1.0, 0.0), b).is_err()
        && holder_bound(b, c(0.0, 0.0)).is_err();
    let (h1, h2) = (HenonMap::golden(0.3)?, HenonMap::golden(0.1)?);
    let (d1, d2) = (HenonDynamics::new(h1, 5)?, HenonDynamics::new(h2, 5)?);
    let b1 = average_jacobian(&d1, 5)?.avg_jacobian;
    let b2 = average_jacobian(&d2, 5)?.avg_jacobian;
    let r = holder_empirical(&d1, &d2, b1, b2, 5)?;
    let el = t.elapsed();
    let ok = exact
        && r.binding
        && r.alpha_hat.is_finite()
        && r.alpha_hat <= 1.0
        && r.alpha_hat <= r.bound + 0.1
        && within_time(el, 300.0);
    outcome(
        ok,
        format!("bound values exact: {exact}; alpha_hat {:.4} vs bound {:.4} (binding); {el:.2?}", r.alpha_hat, r.bound),
    )
}

fn boundary() -> Result<Outcome> {
    let t = Instant::now();
    let hm = HenonMap::golden(0.2)?;
    let cloud = siegel_boundary(&hm, 6)?;
    let (defect, gap) = boundary_invariance(&hm, &cloud);
    let d0 = HenonDynamics::new(HenonMap::golden(0.0)?, 6)?;
    let arc = arc_points(&d0, 6)?;
    let deg = degenerate_arc(6)?;
    let same_words = arc.len() == deg.len() && arc.iter().zip(&deg).all(|(a, b)| a.word == b.word);
    let err = arc
        .iter()
        .zip(&deg)
        .map(|(a, b)| (a.point.0 - b.point.0).norm().max((a.point.1 - b.point.1).norm()))
        .fold(0.0, f64::max);
    let ok = defect <= 3.0 * gap && same_words && err < 1e-10;
    outcome(
        ok,
        format!("defect {defect:.2e} vs 3 x gap {:.2e}; nu = 0 arc vs 1D arc {err:.2e} (< 1e-10); {:.2?}", 3.0 * gap, t.elapsed()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 11] = [
        ("combinatorics", combinatorics),
        ("equidistribution", equidistribution),
        ("1D fixed point", fixed_point_1d),
        ("hyperbolicity", hyperbolicity),
        ("2D fixed point", fixed_point_2d),
        ("super-exponential collapse", collapse),
        ("average Jacobian", average_jacobian_closed_form),
        ("universality", universality),
        ("tilt scaling", tilt_scaling),
        ("non-rigidity", non_rigidity),
        ("boundary invariance", boundary),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("[{}] {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
