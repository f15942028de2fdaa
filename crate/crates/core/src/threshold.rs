//! The numeric calculus behind the decay certificates: the critical activity
//! of the regular tree, the fixed point of the one-argument recurrence, the
//! per-step decay factor `nu`, certificate predicates, threshold search, and
//! the concavity checks backing the spherically-symmetric-tree bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{finite_above, finite_at_least, Error, Result};
use crate::graph::Activity;

/// Critical activity of the infinite `d`-ary tree, `d^d / (d-1)^(d+1)`,
/// evaluated in log space for real `d > 1`.
pub fn lambda_c(d: f64) -> Result<f64> {
    if !finite_above(d, 1.0) {
        return Err(Error::arg(format!("lambda_c requires d > 1, got {d}")));
    }
    Ok((d * d.ln() - (d + 1.0) * (d - 1.0).ln()).exp())
}

/// The one-argument recurrence `f_{d,lambda}(x) = lambda / (1 + x)^d`.
#[inline]
pub fn recurrence(d: f64, lambda: f64, x: f64) -> f64 {
    lambda * (-d * x.ln_1p()).exp()
}

/// Solution of `d x = 1 + f_{d,lambda}(x)` together with its residual in the
/// polynomial form `(d x - 1)(1 + x)^d = lambda`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FixedPoint {
    pub arity: f64,
    pub activity: f64,
    pub x: f64,
    pub residual: f64,
}

/// Solves the fixed-point equation by bisection on `(d x - 1)(1 + x)^d = lambda`,
/// which is strictly increasing for `x >= 1/d`. The bracket `[1/d, (1+lambda)/d]`
/// is forced analytically; bisection runs to f64 bracket exhaustion. The
/// comparison is done in log space so extreme activities cannot overflow.
pub fn solve_fixed_point(d: f64, activity: Activity) -> Result<FixedPoint> {
    if !finite_at_least(d, 1.0) {
        return Err(Error::arg(format!(
            "fixed point requires arity d >= 1, got {d}"
        )));
    }
    let lambda = activity.value();
    let ln_lambda = activity.ln();
    let above = |x: f64| -> bool {
        let t = d * x - 1.0;
        if t <= 0.0 {
            return false;
        }
        t.ln() + d * x.ln_1p() >= ln_lambda
    };
    let mut lo = 1.0 / d;
    let mut hi = (1.0 + lambda) / d;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let residual = ((d * x - 1.0) * (d * x.ln_1p()).exp() - lambda).abs();
    Ok(FixedPoint {
        arity: d,
        activity: lambda,
        x,
        residual,
    })
}

/// Per-step decay factor `nu(d) = (d x - 1) / (1 + x)` at the fixed point.
/// The decay certificate for connective constant `delta` is `nu * delta < 1`.
pub fn nu(d: f64, activity: Activity) -> Result<f64> {
    let fp = solve_fixed_point(d, activity)?;
    Ok((d * fp.x - 1.0) / (1.0 + fp.x))
}

/// Decay functional for spherically symmetric trees, `chi(d) = d * nu(d)`.
pub fn chi(d: f64, activity: Activity) -> Result<f64> {
    Ok(d * nu(d, activity)?)
}

/// Message `phi(x) = asinh(sqrt(x))`.
pub fn phi(x: f64) -> f64 {
    x.sqrt().asinh()
}

/// Derivative of the message, `Phi(x) = 1 / (2 sqrt(x (1 + x)))`.
pub fn phi_deriv(x: f64) -> f64 {
    0.5 / (x * (1.0 + x)).sqrt()
}

/// Inverse message `psi(y) = sinh(y)^2`.
pub fn psi(y: f64) -> f64 {
    let s = y.sinh();
    s * s
}

/// `S_{phi,p}(x) = (exp(-x) / Phi(exp(x) - 1))^p`; concave in `x` for p = 2,
/// where it reduces to `4 (1 - exp(-x))`.
pub fn s_phi(x: f64, p: f64) -> f64 {
    ((-x).exp() / phi_deriv(x.exp_m1())).powf(p)
}

/// `Xi_{phi,q}(d, x) = d^(q-1) * (Phi(f(x)) f(x) / ((1 + x) Phi(x)))^q` for
/// the message above.
pub fn big_xi(d: f64, activity: Activity, q: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let f = recurrence(d, activity.value(), x);
    let core = phi_deriv(f) * f / ((1.0 + x) * phi_deriv(x));
    d.powf(q - 1.0) * core.powf(q)
}

/// `xi_{phi,q}(d) = sup_x Xi_{phi,q}(d, x)`.
///
/// At `q = 2` the supremum is attained exactly at the fixed point; for other
/// `q` a guarded grid scan with golden-section refinement is used. This is an
/// evaluation utility: the certificates in this crate use `q = 2` throughout.
pub fn xi_general(d: f64, activity: Activity, q: f64) -> Result<f64> {
    if !finite_at_least(q, 1.0) {
        return Err(Error::arg(format!("xi requires q >= 1, got {q}")));
    }
    if q == 2.0 {
        let fp = solve_fixed_point(d, activity)?;
        return Ok(big_xi(d, activity, q, fp.x));
    }
    // grid + golden-section refinement; extend the grid while the maximizer
    // sits on the right edge
    let mut x_max = 4.0 * (1.0 + activity.value());
    loop {
        let grid = 4000;
        let mut best_i = 0;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=grid {
            let x = x_max * i as f64 / grid as f64;
            let v = big_xi(d, activity, q, x);
            if v > best {
                best = v;
                best_i = i;
            }
        }
        if best_i == grid {
            x_max *= 2.0;
            if x_max > 1e12 {
                return Err(Error::arg("xi maximizer search did not localize"));
            }
            continue;
        }
        let h = x_max / grid as f64;
        let mut a = (best_i as f64 - 1.0).max(0.0) * h;
        let mut b = (best_i + 1) as f64 * h;
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let c = b - inv_phi * (b - a);
            let dd = a + inv_phi * (b - a);
            if big_xi(d, activity, q, c) < big_xi(d, activity, q, dd) {
                a = c;
            } else {
                b = dd;
            }
            if b - a < 1e-14 * (1.0 + b) {
                break;
            }
        }
        return Ok(big_xi(d, activity, q, 0.5 * (a + b)));
    }
}

/// Outcome of the degree-and-connective-constant decay certificate
/// `nu(d) * delta < 1` (graphs of maximum degree `d + 1` and connective
/// constant at most `delta`).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SsmCertificate {
    pub holds: bool,
    pub margin: f64,
}

pub fn ssm_certificate(d: u32, delta: f64, activity: Activity) -> Result<SsmCertificate> {
    if d < 1 {
        return Err(Error::arg("certificate requires arity d >= 1"));
    }
    if !finite_above(delta, 0.0) {
        return Err(Error::arg(format!(
            "connective constant must be positive, got {delta}"
        )));
    }
    let margin = 1.0 - nu(d as f64, activity)? * delta;
    Ok(SsmCertificate {
        holds: margin > 0.0,
        margin,
    })
}

/// Degree-free certificate: decay holds on any family of connective constant
/// `delta` whenever `lambda < lambda_c(delta + 1)`. Also reports the simpler
/// sufficient condition `lambda < e / delta`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DegreeFreeCertificate {
    pub holds: bool,
    pub below_e_over_delta: bool,
}

pub fn degree_free_certificate(delta: f64, activity: Activity) -> Result<DegreeFreeCertificate> {
    if !finite_above(delta, 0.0) {
        return Err(Error::arg(format!(
            "connective constant must be positive, got {delta}"
        )));
    }
    let lambda = activity.value();
    Ok(DegreeFreeCertificate {
        holds: lambda < lambda_c(delta + 1.0)?,
        below_e_over_delta: lambda < std::f64::consts::E / delta,
    })
}

/// The supremum activity with `nu(d) * delta <= 1`, and the effective arity
/// `alpha` with `lambda_c(alpha)` equal to it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThresholdSolution {
    pub lambda_star: f64,
    pub alpha: f64,
}

const BISECT_TOL: f64 = 1e-9;

/// Searches the decay threshold in `lambda` by bisection, using that `nu` is
/// increasing in `lambda` at fixed `d`. Errors distinctly when no finite
/// threshold exists (`sup_lambda nu * delta = d * delta <= 1`).
pub fn lambda_star(d: u32, delta: f64) -> Result<ThresholdSolution> {
    if d < 1 {
        return Err(Error::arg("lambda_star requires arity d >= 1"));
    }
    if !finite_at_least(delta, 1.0) {
        return Err(Error::arg(format!(
            "lambda_star requires delta >= 1, got {delta}"
        )));
    }
    if d as f64 * delta <= 1.0 {
        return Err(Error::ThresholdUnreachable { arity: d, delta });
    }
    let df = d as f64;
    let crosses = |lambda: f64| -> Result<bool> {
        Ok(nu(df, Activity::new(lambda)?)? * delta >= 1.0)
    };
    let mut hi = 1.0;
    let mut doublings = 0;
    while !crosses(hi)? {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::ThresholdUnreachable { arity: d, delta });
        }
    }
    let mut lo = hi / 2.0;
    while crosses(lo)? {
        lo /= 2.0;
        if lo < 1e-300 {
            return Err(Error::arg("threshold bisection lost its bracket"));
        }
    }
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if crosses(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda_star = 0.5 * (lo + hi);
    Ok(ThresholdSolution {
        lambda_star,
        alpha: alpha_for(lambda_star)?,
    })
}

/// Inverts `lambda_c` on `(1, infinity)`, where it is strictly decreasing.
pub fn alpha_for(lambda: f64) -> Result<f64> {
    if !finite_above(lambda, 0.0) {
        return Err(Error::arg(format!("alpha_for requires lambda > 0, got {lambda}")));
    }
    let mut lo = 1.0 + 1e-12;
    let mut hi = 2.0;
    if lambda_c(lo)? <= lambda {
        return Err(Error::arg("activity too large to invert lambda_c"));
    }
    while lambda_c(hi)? > lambda {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::arg("alpha search did not bracket"));
        }
    }
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lambda_c(mid)? > lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Decay threshold for bipartite graphs with side arities `d1` and `d2`:
/// `lambda_c(sqrt(d1 d2))`.
pub fn bipartite_threshold(d1: f64, d2: f64) -> Result<f64> {
    if !finite_above(d1, 0.0) || !finite_above(d2, 0.0) || !(d1 * d2).is_finite() {
        return Err(Error::arg("bipartite threshold requires positive arities"));
    }
    if d1 * d2 <= 1.0 {
        return Err(Error::arg(format!(
            "bipartite threshold requires d1 * d2 > 1, got {}",
            d1 * d2
        )));
    }
    lambda_c((d1 * d2).sqrt())
}

/// Point evaluation plus threshold search, in the JSON shape used by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub d: u32,
    pub delta: f64,
    pub lambda: f64,
    pub x_tilde: f64,
    pub nu: f64,
    pub margin: f64,
    pub lambda_star: f64,
    pub alpha: f64,
}

/// Builds a [`ThresholdReport`] for arity `d` and connective constant
/// `delta`. When `lambda` is omitted the report is evaluated at the
/// threshold itself.
pub fn threshold_report(d: u32, delta: f64, lambda: Option<f64>) -> Result<ThresholdReport> {
    let solution = lambda_star(d, delta)?;
    let lambda = lambda.unwrap_or(solution.lambda_star);
    let activity = Activity::new(lambda)?;
    let fp = solve_fixed_point(d as f64, activity)?;
    let nu_value = (d as f64 * fp.x - 1.0) / (1.0 + fp.x);
    Ok(ThresholdReport {
        d,
        delta,
        lambda,
        x_tilde: fp.x,
        nu: nu_value,
        margin: 1.0 - nu_value * delta,
        lambda_star: solution.lambda_star,
        alpha: solution.alpha,
    })
}

/// Numeric concavity audit of `H(x) = log(e^x nu(e^x))` on a grid, plus the
/// closed-form second derivative of `S_{phi,2}`.
#[derive(Debug, Clone, Serialize)]
pub struct ConcavityReport {
    pub grid_points: usize,
    /// Largest scaled second central difference of H observed.
    pub max_second_difference: f64,
    pub h_concave: bool,
    /// Largest value of `S''_{phi,2}(x) = -4 exp(-x)` on the grid.
    pub max_s_second: f64,
    pub s_concave: bool,
}

pub fn check_concavity(activity: Activity, x_max: f64, step: f64) -> Result<ConcavityReport> {
    if !finite_above(x_max, 0.0) || !finite_above(step, 0.0) || step >= x_max {
        return Err(Error::arg("concavity grid requires 0 < step < x_max"));
    }
    let points = (x_max / step).round() as usize + 1;
    let h_at = |x: f64| -> Result<f64> { Ok(x + nu(x.exp(), activity)?.ln()) };
    let mut values = Vec::with_capacity(points);
    for i in 0..points {
        values.push(h_at(i as f64 * step)?);
    }
    let mut max_second = f64::NEG_INFINITY;
    for i in 1..points - 1 {
        let second = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (step * step);
        max_second = max_second.max(second);
    }
    let mut max_s_second = f64::NEG_INFINITY;
    for i in 0..points {
        let x = i as f64 * step;
        max_s_second = max_s_second.max(-4.0 * (-x).exp());
    }
    Ok(ConcavityReport {
        grid_points: points,
        max_second_difference: max_second,
        h_concave: max_second <= 1e-9,
        max_s_second,
        s_concave: max_s_second < 0.0,
    })
}

/// One lattice row of the threshold table: published connective-constant
/// upper bound, maximum degree, and the certified `(alpha, lambda_star)`
/// computed from them. The previously best published decay bound is carried
/// as static reference data.
#[derive(Debug, Clone, Serialize)]
pub struct LatticeTableRow {
    pub lattice: &'static str,
    pub connective_constant: f64,
    pub max_degree: u32,
    pub alpha: f64,
    pub lambda_star: f64,
    pub previous_alpha: f64,
    pub previous_lambda: f64,
}

/// (name, connective-constant upper bound, max degree, previous best bound).
const LATTICES: [(&str, f64, u32, f64, f64); 7] = [
    ("triangular", 4.251419, 6, 5.0, 0.762),
    ("honeycomb", 1.847760, 3, 2.0, 4.0),
    ("Z2", 2.679193, 4, 2.502, 2.48),
    ("Z3", 4.7387, 6, 5.0, 0.762),
    ("Z4", 6.8040, 8, 7.0, 0.490),
    ("Z5", 8.8602, 10, 9.0, 0.360),
    ("Z6", 10.8886, 12, 11.0, 0.285),
];

/// Computes the full lattice threshold table. Rows are independent and run
/// in parallel; output order is fixed.
pub fn lattice_table() -> Result<Vec<LatticeTableRow>> {
    LATTICES
        .par_iter()
        .map(|&(lattice, delta, max_degree, previous_alpha, previous_lambda)| {
            let sol = lambda_star(max_degree - 1, delta)?;
            Ok(LatticeTableRow {
                lattice,
                connective_constant: delta,
                max_degree,
                alpha: sol.alpha,
                lambda_star: sol.lambda_star,
                previous_alpha,
                previous_lambda,
            })
        })
        .collect()
}

/// CSV form with the fixed column layout
/// `lattice,connective_constant,max_degree,alpha,lambda_star`.
pub fn lattice_table_csv(rows: &[LatticeTableRow]) -> String {
    let mut out = String::from("lattice,connective_constant,max_degree,alpha,lambda_star\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6}\n",
            r.lattice, r.connective_constant, r.max_degree, r.alpha, r.lambda_star
        ));
    }
    out
}
