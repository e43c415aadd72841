//! Scalar several-variable toolkit: Wirtinger derivatives, Levi forms,
//! pluriharmonicity and the linearity test for holomorphic functions whose
//! real part ignores `Im z`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free::FreeFunctionSpec;
use crate::linalg::{c, OperatorTuple, C64};
use crate::sampling;

/// Step for first derivatives.
pub const FIRST_STEP: f64 = 1e-4;
/// Step for second derivatives.
pub const SECOND_STEP: f64 = 1e-3;
/// Tolerance of the "depends only on Re z" test.
pub const INDEPENDENCE_TOL: f64 = 1e-8;

/// Expression grammar for scalar fields on `ℂ^m` (variables are 0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldExpr {
    Var(usize),
    Const(C64),
    Add(Vec<FieldExpr>),
    Mul(Vec<FieldExpr>),
    Scale { by: C64, arg: Box<FieldExpr> },
    Pow(Box<FieldExpr>, u32),
    Exp(Box<FieldExpr>),
    Conj(Box<FieldExpr>),
    Re(Box<FieldExpr>),
    Im(Box<FieldExpr>),
}

impl FieldExpr {
    pub fn z(j: usize) -> Self {
        FieldExpr::Var(j)
    }

    pub fn constant(re: f64, im: f64) -> Self {
        FieldExpr::Const(c(re, im))
    }

    pub fn scale(self, re: f64, im: f64) -> Self {
        FieldExpr::Scale {
            by: c(re, im),
            arg: Box::new(self),
        }
    }

    pub fn pow(self, p: u32) -> Self {
        FieldExpr::Pow(Box::new(self), p)
    }

    pub fn exp(self) -> Self {
        FieldExpr::Exp(Box::new(self))
    }

    pub fn conj(self) -> Self {
        FieldExpr::Conj(Box::new(self))
    }

    pub fn re(self) -> Self {
        FieldExpr::Re(Box::new(self))
    }

    pub fn im(self) -> Self {
        FieldExpr::Im(Box::new(self))
    }

    pub fn sum(terms: Vec<FieldExpr>) -> Self {
        FieldExpr::Add(terms)
    }

    pub fn product(factors: Vec<FieldExpr>) -> Self {
        FieldExpr::Mul(factors)
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            FieldExpr::Var(j) => Some(*j),
            FieldExpr::Const(_) => None,
            FieldExpr::Add(xs) | FieldExpr::Mul(xs) => xs.iter().filter_map(|x| x.max_var()).max(),
            FieldExpr::Scale { arg, .. } => arg.max_var(),
            FieldExpr::Pow(x, _) | FieldExpr::Exp(x) | FieldExpr::Conj(x) | FieldExpr::Re(x) | FieldExpr::Im(x) => {
                x.max_var()
            }
        }
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        match self {
            FieldExpr::Var(j) => z[*j],
            FieldExpr::Const(a) => *a,
            FieldExpr::Add(xs) => xs.iter().map(|x| x.eval(z)).sum(),
            FieldExpr::Mul(xs) => xs.iter().map(|x| x.eval(z)).product(),
            FieldExpr::Scale { by, arg } => by * arg.eval(z),
            FieldExpr::Pow(x, p) => x.eval(z).powu(*p),
            FieldExpr::Exp(x) => x.eval(z).exp(),
            FieldExpr::Conj(x) => x.eval(z).conj(),
            FieldExpr::Re(x) => c(x.eval(z).re, 0.0),
            FieldExpr::Im(x) => c(x.eval(z).im, 0.0),
        }
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, xs: &[FieldExpr], sep: &str| -> fmt::Result {
            write!(f, "(")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, "{sep}")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, ")")
        };
        match self {
            FieldExpr::Var(j) => write!(f, "z{}", j + 1),
            FieldExpr::Const(a) => write!(f, "({}{:+}i)", a.re, a.im),
            FieldExpr::Add(xs) => join(f, xs, " + "),
            FieldExpr::Mul(xs) => join(f, xs, " "),
            FieldExpr::Scale { by, arg } => write!(f, "({}{:+}i){arg}", by.re, by.im),
            FieldExpr::Pow(x, p) => write!(f, "{x}^{p}"),
            FieldExpr::Exp(x) => write!(f, "exp({x})"),
            FieldExpr::Conj(x) => write!(f, "conj({x})"),
            FieldExpr::Re(x) => write!(f, "Re({x})"),
            FieldExpr::Im(x) => write!(f, "Im({x})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldClass {
    Holomorphic,
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSource {
    Expr(FieldExpr),
    /// The 1×1 level of a free function, optionally shifted so `f(0) = 0`.
    Free { spec: FreeFunctionSpec, centered: bool },
}

/// A function `ℂ^m → ℂ` on the open polydisc of the given radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub name: String,
    pub m: usize,
    pub class: FieldClass,
    pub radius: f64,
    pub source: FieldSource,
}

impl ScalarField {
    pub fn new(name: &str, m: usize, class: FieldClass, radius: f64, expr: FieldExpr) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("fields need at least one variable".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::Parameter(format!("polydisc radius must be positive, got {radius}")));
        }
        if let Some(j) = expr.max_var() {
            if j >= m {
                return Err(Error::Contract(format!("variable z{} used but m = {m}", j + 1)));
            }
        }
        Ok(Self {
            name: name.to_string(),
            m,
            class,
            radius,
            source: FieldSource::Expr(expr),
        })
    }

    /// Restricts a free function to 1×1 inputs.
    pub fn from_free(spec: &FreeFunctionSpec, class: FieldClass, radius: f64, centered: bool) -> Self {
        Self {
            name: format!("{}|1x1", spec.name),
            m: spec.arity,
            class,
            radius,
            source: FieldSource::Free {
                spec: spec.clone(),
                centered,
            },
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ScalarField = serde_json::from_str(s)?;
        if let FieldSource::Expr(e) = &f.source {
            return ScalarField::new(&f.name, f.m, f.class, f.radius, e.clone());
        }
        Ok(f)
    }

    /// `Re f` as a general field.
    pub fn real_part(&self) -> Self {
        let source = match &self.source {
            FieldSource::Expr(e) => FieldSource::Expr(e.clone().re()),
            FieldSource::Free { spec, centered } => FieldSource::Free {
                spec: FreeFunctionSpec {
                    expr: crate::free::Expr::Re(Box::new(spec.expr.clone())),
                    ..spec.clone()
                },
                centered: *centered,
            },
        };
        Self {
            name: format!("Re({})", self.name),
            class: FieldClass::General,
            source,
            ..self.clone()
        }
    }

    pub fn eval(&self, z: &[C64]) -> Result<C64> {
        if z.len() != self.m {
            return Err(Error::Arity {
                expected: self.m,
                got: z.len(),
            });
        }
        if z.iter().any(|w| w.norm() >= self.radius) {
            return Err(Error::Domain(format!("point outside the polydisc of radius {}", self.radius)));
        }
        match &self.source {
            FieldSource::Expr(e) => Ok(e.eval(z)),
            FieldSource::Free { spec, centered } => {
                let v = spec.evaluate(&OperatorTuple::scalars(z))?[(0, 0)];
                if *centered {
                    Ok(v - spec.evaluate(&OperatorTuple::scalars(&vec![c(0.0, 0.0); self.m]))?[(0, 0)])
                } else {
                    Ok(v)
                }
            }
        }
    }

    /// A seeded point with every coordinate in the disc of radius `frac · radius`.
    pub fn sample_point<R: Rng + ?Sized>(&self, r: &mut R, frac: f64) -> Vec<C64> {
        (0..self.m)
            .map(|_| {
                let rho = frac * self.radius * r.gen::<f64>().sqrt();
                C64::from_polar(rho, r.gen_range(0.0..std::f64::consts::TAU))
            })
            .collect()
    }
}

/// Real coordinate `k` of `ℂ^m ≅ ℝ^{2m}`: `x_j` for `k = 2j`, `y_j` for `k = 2j + 1`.
fn shifted(z: &[C64], moves: &[(usize, f64)]) -> Vec<C64> {
    let mut w = z.to_vec();
    for &(k, t) in moves {
        if k % 2 == 0 {
            w[k / 2].re += t;
        } else {
            w[k / 2].im += t;
        }
    }
    w
}

fn eval_step(f: &ScalarField, z: &[C64], step: f64) -> Result<C64> {
    f.eval(z).map_err(|e| match e {
        Error::Domain(reason) => Error::Step { step, reason },
        e => e,
    })
}

fn first_partial(f: &ScalarField, z: &[C64], k: usize, h: f64) -> Result<C64> {
    let p = eval_step(f, &shifted(z, &[(k, h)]), h)?;
    let m = eval_step(f, &shifted(z, &[(k, -h)]), h)?;
    Ok((p - m) / (2.0 * h))
}

fn second_partial(f: &ScalarField, z: &[C64], a: usize, b: usize, h: f64) -> Result<C64> {
    let e = |sa: f64, sb: f64| eval_step(f, &shifted(z, &[(a, sa * h), (b, sb * h)]), h);
    Ok((e(1.0, 1.0)? - e(1.0, -1.0)? - e(-1.0, 1.0)? + e(-1.0, -1.0)?) / (4.0 * h * h))
}

fn richardson(d: impl Fn(f64) -> Result<C64>, h: f64, extrapolate: bool) -> Result<C64> {
    if !extrapolate {
        return d(h);
    }
    let (d1, d2) = (d(h)?, d(0.5 * h)?);
    Ok((d2 * 4.0 - d1) / 3.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirtingerPair {
    pub d: Vec<C64>,
    pub dbar: Vec<C64>,
}

/// `∂f = (∂x − i∂y)/2` and `∂̄f = (∂x + i∂y)/2` per variable.
pub fn wirtinger_with(f: &ScalarField, z: &[C64], h: f64, extrapolate: bool) -> Result<WirtingerPair> {
    if !(h > 0.0) {
        return Err(Error::Parameter(format!("step must be positive, got {h}")));
    }
    let mut d = Vec::with_capacity(f.m);
    let mut dbar = Vec::with_capacity(f.m);
    for j in 0..f.m {
        let fx = richardson(|s| first_partial(f, z, 2 * j, s), h, extrapolate)?;
        let fy = richardson(|s| first_partial(f, z, 2 * j + 1, s), h, extrapolate)?;
        let i = c(0.0, 1.0);
        d.push((fx - i * fy) * 0.5);
        dbar.push((fx + i * fy) * 0.5);
    }
    Ok(WirtingerPair { d, dbar })
}

pub fn wirtinger(f: &ScalarField, z: &[C64], h: Option<f64>) -> Result<WirtingerPair> {
    wirtinger_with(f, z, h.unwrap_or(FIRST_STEP), true)
}

/// Matrix `[∂ⱼ∂̄ₖ u]` from the real Hessian:
/// `¼[u_{xⱼxₖ} + u_{yⱼyₖ} + i(u_{xⱼyₖ} − u_{yⱼxₖ})]`.
pub fn mixed_wirtinger(u: &ScalarField, z: &[C64], h: Option<f64>) -> Result<DMatrix<C64>> {
    let h = h.unwrap_or(SECOND_STEP);
    if !(h > 0.0) {
        return Err(Error::Parameter(format!("step must be positive, got {h}")));
    }
    let m = u.m;
    let second = |a: usize, b: usize| richardson(|s| second_partial(u, z, a, b, s), h, true);
    let mut out = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
            let v = second(xj, xk)? + second(yj, yk)? + c(0.0, 1.0) * (second(xj, yk)? - second(yj, xk)?);
            out[(j, k)] = v * 0.25;
        }
    }
    Ok(out)
}

/// `L(z; c, d) = Σⱼₖ ∂ⱼ∂̄ₖu(z) cⱼ conj(dₖ)`.
pub fn levi_form(u: &ScalarField, z: &[C64], cv: &[C64], dv: &[C64], h: Option<f64>) -> Result<C64> {
    if cv.len() != u.m || dv.len() != u.m {
        return Err(Error::Dimension(format!("direction vectors must have length {}", u.m)));
    }
    let mix = mixed_wirtinger(u, z, h)?;
    let mut acc = c(0.0, 0.0);
    for j in 0..u.m {
        for k in 0..u.m {
            acc += mix[(j, k)] * cv[j] * dv[k].conj();
        }
    }
    Ok(acc)
}

/// `max |∂ⱼ∂̄ₖ u(z)|`.
pub fn pluriharmonic_residual(u: &ScalarField, z: &[C64], h: Option<f64>) -> Result<f64> {
    Ok(mixed_wirtinger(u, z, h)?.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearityStage {
    ImDependence,
    Hessian,
    Fit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearityReport {
    pub field: String,
    pub probes: usize,
    pub seed: u64,
    pub tol: f64,
    pub hypothesis_met: bool,
    pub f_at_zero: [f64; 2],
    /// Stage (i): `max |u(z) − u(z′)| / (1 + |u(z)|)` over pairs with `Re z = Re z′`.
    pub im_dependence: f64,
    pub re_only: bool,
    /// Stage (ii): max real-Hessian entry of `u` in real directions; only
    /// computed when `u` depends on `Re z` alone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_hessian: Option<f64>,
    /// Stage (iii): least-squares `f(z) ≈ Σ aⱼ zⱼ`.
    pub coefficients: Vec<C64>,
    pub fit_residual: f64,
    pub linear: bool,
    /// First stage that argued against linearity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flagged_by: Option<LinearityStage>,
    pub coverage: String,
}

/// Runs the three-stage linearity test on a holomorphic field with `f(0) = 0`.
///
/// The verdict is `linear` iff the least-squares residual is at most `tol`;
/// `flagged_by` records which stage first argued otherwise.
pub fn linearity_test(f: &ScalarField, probes: usize, seed: u64, tol: f64) -> Result<LinearityReport> {
    if f.class != FieldClass::Holomorphic {
        return Err(Error::Config(format!("`{}` is not declared holomorphic", f.name)));
    }
    if probes == 0 {
        return Err(Error::Config("probes must be positive".into()));
    }
    let f0 = f.eval(&vec![c(0.0, 0.0); f.m])?;
    let mut report = LinearityReport {
        field: f.name.clone(),
        probes,
        seed,
        tol,
        hypothesis_met: f0.norm() <= tol,
        f_at_zero: [f0.re, f0.im],
        im_dependence: 0.0,
        re_only: false,
        max_hessian: None,
        coefficients: Vec::new(),
        fit_residual: f64::INFINITY,
        linear: false,
        flagged_by: None,
        coverage: format!("{probes} seeded points in the polydisc of radius {}", 0.9 * f.radius),
    };
    if !report.hypothesis_met {
        return Ok(report);
    }
    let u = f.real_part();
    let mut r = sampling::rng(seed);

    // (i) u(z) against u(z′) with Re z′ = Re z
    let ylim = 0.9 * f.radius;
    let mut gap: f64 = 0.0;
    for p in 0..probes {
        let z = f.sample_point(&mut r, 0.6);
        let mut z2 = z.clone();
        for w in z2.iter_mut() {
            let room = (ylim * ylim - w.re * w.re).max(0.0).sqrt();
            // the first probe moves Im z to π/2 where the disc allows
            w.im = if p == 0 { std::f64::consts::FRAC_PI_2.min(0.99 * room) } else { r.gen_range(-room..room) * 0.99 };
        }
        let mut z1 = z;
        if p == 0 {
            z1.iter_mut().for_each(|w| w.im = 0.0);
        }
        let (a, b) = (u.eval(&z1)?.re, u.eval(&z2)?.re);
        gap = gap.max((a - b).abs() / (1.0 + a.abs()));
    }
    report.im_dependence = gap;
    report.re_only = gap <= INDEPENDENCE_TOL;

    // (ii) real Hessian along the x directions
    if report.re_only {
        let mut hmax: f64 = 0.0;
        for _ in 0..probes.min(20) {
            let z = f.sample_point(&mut r, 0.5);
            for j in 0..f.m {
                for k in 0..f.m {
                    let v = richardson(|s| second_partial(&u, &z, 2 * j, 2 * k, s), SECOND_STEP, true)?;
                    hmax = hmax.max(v.norm());
                }
            }
        }
        report.max_hessian = Some(hmax);
    }

    // (iii) least squares over the probes
    let pts: Vec<Vec<C64>> = (0..probes.max(2 * f.m)).map(|_| f.sample_point(&mut r, 0.9)).collect();
    let a = DMatrix::from_fn(pts.len(), f.m, |i, j| pts[i][j]);
    let vals = pts.iter().map(|z| f.eval(z)).collect::<Result<Vec<_>>>()?;
    let b = DVector::from_vec(vals.clone());
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Contract(format!("least-squares fit failed: {e}")))?;
    let fitted = &a * &coef;
    report.fit_residual = vals
        .iter()
        .zip(fitted.iter())
        .map(|(v, w)| (v - w).norm() / (1.0 + v.norm()))
        .fold(0.0, f64::max);
    report.coefficients = coef.iter().copied().collect();
    report.linear = report.fit_residual <= tol;
    report.flagged_by = if report.linear {
        None
    } else if !report.re_only {
        Some(LinearityStage::ImDependence)
    } else if report.max_hessian.unwrap_or(0.0) > 1e-4 {
        Some(LinearityStage::Hessian)
    } else {
        Some(LinearityStage::Fit)
    };
    Ok(report)
}

/// A holomorphic test field with `f(0) = 0` and whether it is linear.
#[derive(Debug, Clone)]
pub struct BankEntry {
    pub field: ScalarField,
    pub linear: bool,
}

/// Holomorphic fields used by the test suites.
pub fn holomorphic_bank() -> Vec<BankEntry> {
    let z = FieldExpr::z;
    let h = |name: &str, m: usize, linear: bool, e: FieldExpr| BankEntry {
        field: ScalarField::new(name, m, FieldClass::Holomorphic, 2.0, e).expect("bank fields are valid"),
        linear,
    };
    vec![
        h("z", 1, true, z(0)),
        h("2z", 1, true, z(0).scale(2.0, 0.0)),
        h("iz", 1, true, z(0).scale(0.0, 1.0)),
        h("(1+2i)z", 1, true, z(0).scale(1.0, 2.0)),
        h("z^2", 1, false, z(0).pow(2)),
        h("z^3", 1, false, z(0).pow(3)),
        h("exp(z)-1", 1, false, FieldExpr::sum(vec![z(0).exp(), FieldExpr::constant(-1.0, 0.0)])),
        h("z exp(z)", 1, false, FieldExpr::product(vec![z(0), z(0).exp()])),
        h("z1 + 3 z2", 2, true, FieldExpr::sum(vec![z(0), z(1).scale(3.0, 0.0)])),
        h("z1 z2", 2, false, FieldExpr::product(vec![z(0), z(1)])),
        h("(1-i) z1 - 0.5 z2", 2, true, FieldExpr::sum(vec![z(0).scale(1.0, -1.0), z(1).scale(-0.5, 0.0)])),
        h("exp(z1) z2", 2, false, FieldExpr::product(vec![z(0).exp(), z(1)])),
        h(
            "z1^2 + z2^3 - z1 z2",
            2,
            false,
            FieldExpr::sum(vec![z(0).pow(2), z(1).pow(3), FieldExpr::product(vec![z(0), z(1)]).scale(-1.0, 0.0)]),
        ),
    ]
}

/// Looks up a bank field by name.
pub fn bank_field(name: &str) -> Result<ScalarField> {
    holomorphic_bank()
        .into_iter()
        .find(|e| e.field.name == name)
        .map(|e| e.field)
        .ok_or_else(|| Error::Config(format!("unknown bank field `{name}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::affine_fit;
    use crate::free::zoo;

    fn one(name: &str, class: FieldClass, e: FieldExpr) -> ScalarField {
        ScalarField::new(name, 1, class, 3.0, e).unwrap()
    }

    #[test]
    fn wirtinger_examples() {
        let z = c(0.3, -0.7);
        let w = wirtinger(&one("z", FieldClass::Holomorphic, FieldExpr::z(0)), &[z], None).unwrap();
        assert!((w.d[0] - c(1.0, 0.0)).norm() < 1e-10 && w.dbar[0].norm() < 1e-10);
        let w = wirtinger(&one("conj", FieldClass::General, FieldExpr::z(0).conj()), &[z], None).unwrap();
        assert!(w.d[0].norm() < 1e-10 && (w.dbar[0] - c(1.0, 0.0)).norm() < 1e-10);
        let w = wirtinger(&one("sq", FieldClass::Holomorphic, FieldExpr::z(0).pow(2)), &[c(1.0, 1.0)], None).unwrap();
        assert!((w.d[0] - c(2.0, 2.0)).norm() < 1e-9 && w.dbar[0].norm() < 1e-9);
    }

    #[test]
    fn levi_examples() {
        let one_c = [c(1.0, 0.0)];
        let z = [c(0.4, 0.2)];
        let abs2 = one("|z|^2", FieldClass::General, FieldExpr::product(vec![FieldExpr::z(0), FieldExpr::z(0).conj()]));
        assert!((levi_form(&abs2, &z, &one_c, &one_c, None).unwrap() - c(1.0, 0.0)).norm() < 1e-6);
        let re = one("Re z", FieldClass::General, FieldExpr::z(0).re());
        let cv = [c(0.3, 2.0)];
        assert!(levi_form(&re, &z, &cv, &one_c, None).unwrap().norm() < 1e-6);
        let harm = one("Re z^2", FieldClass::General, FieldExpr::z(0).pow(2).re());
        assert!(levi_form(&harm, &z, &one_c, &one_c, None).unwrap().norm() < 1e-6);
        assert!((pluriharmonic_residual(&abs2, &z, None).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn holomorphic_real_parts_are_pluriharmonic() {
        let cube = one("z^3", FieldClass::Holomorphic, FieldExpr::z(0).pow(3));
        assert!(pluriharmonic_residual(&cube.real_part(), &[c(0.5, -0.5)], None).unwrap() <= 1e-6);
        let z1z2 = ScalarField::new("z1z2", 2, FieldClass::Holomorphic, 2.0, FieldExpr::product(vec![FieldExpr::z(0), FieldExpr::z(1)])).unwrap();
        assert!(pluriharmonic_residual(&z1z2.real_part(), &[c(0.5, 0.1), c(-0.2, 0.3)], None).unwrap() <= 1e-6);
        let mut r = sampling::rng(3);
        for f in holomorphic_bank().into_iter().map(|e| e.field) {
            for _ in 0..10 {
                let z = f.sample_point(&mut r, 0.8);
                let res = pluriharmonic_residual(&f.real_part(), &z, None).unwrap();
                assert!(res <= 1e-6, "{}: {res}", f.name);
            }
        }
    }

    #[test]
    fn declared_holomorphic_fields_have_vanishing_dbar() {
        let mut r = sampling::rng(4);
        for f in holomorphic_bank().into_iter().map(|e| e.field) {
            for _ in 0..100 {
                let z = f.sample_point(&mut r, 0.9);
                let w = wirtinger(&f, &z, None).unwrap();
                let worst = w.dbar.iter().map(|v| v.norm()).fold(0.0, f64::max);
                assert!(worst <= 1e-6, "{}: {worst}", f.name);
            }
        }
    }

    #[test]
    fn central_differences_converge_at_second_order() {
        // holomorphic stencil errors cancel in ∂, so use a general polynomial
        let f = one("z^2 conj(z)", FieldClass::General, FieldExpr::product(vec![FieldExpr::z(0).pow(2), FieldExpr::z(0).conj()]));
        let z = [c(0.7, 0.4)];
        let exact = z[0] * z[0].conj() * 2.0;
        let err = |h: f64| (wirtinger_with(&f, &z, h, false).unwrap().d[0] - exact).norm();
        let (e1, e2) = (err(1e-2), err(5e-3));
        assert!(e1 / e2 >= 3.5, "{e1} {e2}");
    }

    #[test]
    fn linearity_examples() {
        let get = |n: &str| bank_field(n).unwrap();
        let rep = linearity_test(&get("2z"), 50, 1, 1e-10).unwrap();
        assert!(rep.linear && rep.re_only);
        assert!((rep.coefficients[0] - c(2.0, 0.0)).norm() < 1e-10);
        for name in ["exp(z)-1", "z^2"] {
            let rep = linearity_test(&get(name), 50, 1, 1e-6).unwrap();
            assert!(!rep.linear && !rep.re_only, "{name}");
            assert_eq!(rep.flagged_by, Some(LinearityStage::ImDependence));
        }
        let shifted = ScalarField::new("z+1", 1, FieldClass::Holomorphic, 2.0, FieldExpr::sum(vec![FieldExpr::z(0), FieldExpr::constant(1.0, 0.0)])).unwrap();
        assert!(!linearity_test(&shifted, 10, 1, 1e-8).unwrap().hypothesis_met);
    }

    #[test]
    fn re_only_bank_members_are_linear() {
        for e in holomorphic_bank() {
            let f = e.field;
            let rep = linearity_test(&f, 60, 2, 1e-6).unwrap();
            if rep.im_dependence <= INDEPENDENCE_TOL {
                assert!(rep.linear, "{}: {}", f.name, rep.fit_residual);
            }
            assert_eq!(rep.linear, e.linear, "{}", f.name);
        }
    }

    #[test]
    fn affine_fit_agrees_with_linear_fit() {
        for e in zoo().into_iter().filter(|e| e.traits.affine) {
            let field = ScalarField::from_free(&e.spec, FieldClass::Holomorphic, 2.0, true);
            let rep = linearity_test(&field, 40, 3, 1e-8).unwrap();
            let fit = affine_fit(&e.spec, 5, 3).unwrap();
            for (x, y) in rep.coefficients.iter().zip(&fit.a) {
                assert!((x - y).norm() <= 1e-8, "{}: {x} vs {y}", e.id);
            }
        }
    }

    #[test]
    fn fields_round_trip_through_json() {
        for f in holomorphic_bank().into_iter().map(|e| e.field) {
            let s = serde_json::to_string(&f).unwrap();
            assert_eq!(ScalarField::from_json(&s).unwrap(), f);
        }
        let bad = r#"{"name":"x","m":1,"class":"general","radius":1.0,"source":{"expr":{"var":3}}}"#;
        assert!(matches!(ScalarField::from_json(bad), Err(Error::Contract(_))));
    }
}
