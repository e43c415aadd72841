use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::MatrixJson;
use crate::linalg::{
    c, hermitian_defect, identity, im_part, inverse, re_part, spectral_norm, sqrt_psd, sqrtm,
    CMatrix, Hermitian, OperatorTuple, Tol, C64, HERMITIAN_REL_TOL,
};
use crate::means::{mean, MeanKind};

/// Expression tree of a free function.
///
/// JSON grammar (externally tagged, variables are 0-based):
///
/// ```text
/// expr := {"var": i}
///       | {"const": [re, im]}                 scalar multiple of I
///       | {"const_matrix": <matrix>}          only 1x1 passes validation
///       | {"add": [expr, ...]}
///       | {"scale": {"by": [re, im], "arg": expr}}
///       | {"mul": [expr, ...]}                ordered matrix product
///       | {"inv": expr} | {"sqrt": expr} | {"re": expr} | {"im": expr}
///       | {"geo_mean": [expr, expr]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Var(usize),
    Const(C64),
    ConstMatrix(MatrixJson),
    Add(Vec<Expr>),
    Scale { by: C64, arg: Box<Expr> },
    Mul(Vec<Expr>),
    Inv(Box<Expr>),
    Sqrt(Box<Expr>),
    Re(Box<Expr>),
    Im(Box<Expr>),
    GeoMean(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    pub fn constant(re: f64, im: f64) -> Self {
        Expr::Const(c(re, im))
    }

    pub fn scale(self, re: f64, im: f64) -> Self {
        Expr::Scale {
            by: c(re, im),
            arg: Box::new(self),
        }
    }

    pub fn neg(self) -> Self {
        self.scale(-1.0, 0.0)
    }

    pub fn pow(self, p: usize) -> Self {
        assert!(p >= 1);
        Expr::Mul(vec![self; p])
    }

    pub fn inv(self) -> Self {
        Expr::Inv(Box::new(self))
    }

    pub fn sqrt(self) -> Self {
        Expr::Sqrt(Box::new(self))
    }

    pub fn re(self) -> Self {
        Expr::Re(Box::new(self))
    }

    pub fn im(self) -> Self {
        Expr::Im(Box::new(self))
    }

    pub fn geo_mean(self, other: Expr) -> Self {
        Expr::GeoMean(Box::new(self), Box::new(other))
    }

    pub fn sum(terms: Vec<Expr>) -> Self {
        Expr::Add(terms)
    }

    pub fn product(factors: Vec<Expr>) -> Self {
        Expr::Mul(factors)
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        let mut best = None;
        self.visit(&mut |e| {
            if let Expr::Var(i) = e {
                best = Some(best.map_or(*i, |b: usize| b.max(*i)));
            }
        });
        best
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Var(_) | Expr::Const(_) | Expr::ConstMatrix(_) => {}
            Expr::Add(xs) | Expr::Mul(xs) => xs.iter().for_each(|x| x.visit(f)),
            Expr::Scale { arg, .. } => arg.visit(f),
            Expr::Inv(x) | Expr::Sqrt(x) | Expr::Re(x) | Expr::Im(x) => x.visit(f),
            Expr::GeoMean(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Replaces every `Var(i)` by `subst(i)`.
    pub fn substitute(&self, subst: &impl Fn(usize) -> Expr) -> Expr {
        match self {
            Expr::Var(i) => subst(*i),
            Expr::Const(_) | Expr::ConstMatrix(_) => self.clone(),
            Expr::Add(xs) => Expr::Add(xs.iter().map(|x| x.substitute(subst)).collect()),
            Expr::Mul(xs) => Expr::Mul(xs.iter().map(|x| x.substitute(subst)).collect()),
            Expr::Scale { by, arg } => Expr::Scale {
                by: *by,
                arg: Box::new(arg.substitute(subst)),
            },
            Expr::Inv(x) => Expr::Inv(Box::new(x.substitute(subst))),
            Expr::Sqrt(x) => Expr::Sqrt(Box::new(x.substitute(subst))),
            Expr::Re(x) => Expr::Re(Box::new(x.substitute(subst))),
            Expr::Im(x) => Expr::Im(Box::new(x.substitute(subst))),
            Expr::GeoMean(a, b) => Expr::GeoMean(
                Box::new(a.substitute(subst)),
                Box::new(b.substitute(subst)),
            ),
        }
    }

    /// True when the tree contains `Re`/`Im` nodes (not holomorphic).
    pub fn uses_real_parts(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Re(_) | Expr::Im(_)));
        found
    }

    fn eval(&self, x: &OperatorTuple) -> Result<CMatrix> {
        let n = x.dim();
        match self {
            Expr::Var(i) => Ok(x.get(*i).clone()),
            Expr::Const(z) => Ok(identity(n) * *z),
            Expr::ConstMatrix(m) => {
                let m = CMatrix::try_from(m)?;
                if m.shape() != (1, 1) {
                    return Err(Error::Contract(
                        "fixed-size constant blocks are not dimension-uniform".into(),
                    ));
                }
                Ok(identity(n) * m[(0, 0)])
            }
            Expr::Add(xs) => {
                let mut acc = CMatrix::zeros(n, n);
                for t in xs {
                    acc += t.eval(x)?;
                }
                Ok(acc)
            }
            Expr::Mul(xs) => {
                let mut acc = identity(n);
                for t in xs {
                    acc *= t.eval(x)?;
                }
                Ok(acc)
            }
            Expr::Scale { by, arg } => Ok(arg.eval(x)? * *by),
            Expr::Inv(a) => inverse(&a.eval(x)?),
            Expr::Sqrt(a) => {
                let m = a.eval(x)?;
                if hermitian_defect(&m) <= HERMITIAN_REL_TOL * (1.0 + spectral_norm(&m)) {
                    Ok(sqrt_psd(&Hermitian::symmetrize(&m), Tol::Auto)?.into_matrix())
                } else {
                    sqrtm(&m)
                }
            }
            Expr::Re(a) => Ok(re_part(&a.eval(x)?)?.into_matrix()),
            Expr::Im(a) => Ok(im_part(&a.eval(x)?)?.into_matrix()),
            Expr::GeoMean(a, b) => mean(MeanKind::Geometric, &a.eval(x)?, &b.eval(x)?),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, xs: &[Expr], sep: &str| -> fmt::Result {
            write!(f, "(")?;
            for (i, t) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, "{sep}")?;
                }
                write!(f, "{t}")?;
            }
            write!(f, ")")
        };
        match self {
            Expr::Var(i) => write!(f, "X{}", i + 1),
            Expr::Const(z) => write!(f, "({z})I"),
            Expr::ConstMatrix(m) => write!(f, "C[{}x{}]", m.rows, m.cols),
            Expr::Add(xs) => join(f, xs, " + "),
            Expr::Mul(xs) => join(f, xs, "·"),
            Expr::Scale { by, arg } => write!(f, "({by}){arg}"),
            Expr::Inv(a) => write!(f, "{a}⁻¹"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
            Expr::Re(a) => write!(f, "Re({a})"),
            Expr::Im(a) => write!(f, "Im({a})"),
            Expr::GeoMean(a, b) => write!(f, "({a} # {b})"),
        }
    }
}

/// Declared domain of a free function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    All,
    /// Tuples whose items have positive definite real part.
    PRe,
    /// Tuples of Hermitian positive definite matrices.
    HermitianPd,
}

impl Domain {
    pub fn contains(self, x: &OperatorTuple) -> bool {
        match self {
            Domain::All => true,
            Domain::PRe => crate::order::in_p_re(x, 0.0),
            Domain::HermitianPd => x.items().iter().all(|m| {
                Hermitian::new(m.clone())
                    .map(|h| h.min_eigen().0 > 0.0)
                    .unwrap_or(false)
            }),
        }
    }

    /// Whether the zero tuple at dimension one belongs to the domain.
    pub fn contains_zero(self) -> bool {
        matches!(self, Domain::All)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::All => "all",
            Domain::PRe => "p_re",
            Domain::HermitianPd => "hermitian_pd",
        })
    }
}

/// A free function given symbolically, evaluable at every dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeFunctionSpec {
    pub name: String,
    pub arity: usize,
    pub domain: Domain,
    pub expr: Expr,
}

impl FreeFunctionSpec {
    pub fn new(name: impl Into<String>, arity: usize, domain: Domain, expr: Expr) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            arity,
            domain,
            expr,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.arity == 0 {
            return Err(Error::Contract("arity must be at least one".into()));
        }
        if let Some(m) = self.expr.max_var() {
            if m >= self.arity {
                return Err(Error::Contract(format!(
                    "expression uses X{} but arity is {}",
                    m + 1,
                    self.arity
                )));
            }
        }
        let mut bad = None;
        self.expr.visit(&mut |e| {
            if let Expr::ConstMatrix(m) = e {
                if m.rows != 1 || m.cols != 1 {
                    bad = Some((m.rows, m.cols));
                }
            }
        });
        if let Some((r, cols)) = bad {
            return Err(Error::Contract(format!(
                "constant {r}x{cols} block is not dimension-uniform"
            )));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: FreeFunctionSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn with_domain(&self, domain: Domain) -> Self {
        Self {
            domain,
            ..self.clone()
        }
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..self.clone()
        }
    }

    pub fn evaluate(&self, x: &OperatorTuple) -> Result<CMatrix> {
        evaluate(self, x)
    }
}

/// Evaluates `F(X)` after checking arity and the declared domain.
pub fn evaluate(f: &FreeFunctionSpec, x: &OperatorTuple) -> Result<CMatrix> {
    if x.arity() != f.arity {
        return Err(Error::Arity {
            expected: f.arity,
            got: x.arity(),
        });
    }
    if !f.domain.contains(x) {
        return Err(Error::Domain(format!("input outside the {} domain", f.domain)));
    }
    let out = f.expr.eval(x)?;
    if !crate::linalg::is_finite(&out) {
        return Err(Error::Domain("evaluation produced non-finite entries".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(re: f64, im: f64) -> CMatrix {
        CMatrix::from_element(1, 1, c(re, im))
    }

    #[test]
    fn identity_function() {
        let f = FreeFunctionSpec::new("x1", 1, Domain::All, Expr::var(0)).unwrap();
        let x = OperatorTuple::single(scalar(1.5, -2.0)).unwrap();
        assert_eq!(f.evaluate(&x).unwrap(), x.get(0).clone());
    }

    #[test]
    fn affine_example() {
        let f = FreeFunctionSpec::new(
            "affine",
            2,
            Domain::All,
            Expr::sum(vec![
                Expr::constant(1.0, 0.0),
                Expr::var(0).scale(2.0, 0.0),
                Expr::var(1).scale(3.0, 0.0),
            ]),
        )
        .unwrap();
        let out = f.evaluate(&OperatorTuple::identities(3, 2)).unwrap();
        assert_eq!(out, identity(3) * c(6.0, 0.0));
    }

    #[test]
    fn negative_inverse_of_real_part() {
        let f = FreeFunctionSpec::new("nri", 1, Domain::PRe, Expr::var(0).re().inv().neg()).unwrap();
        let out = f.evaluate(&OperatorTuple::single(scalar(2.0, 5.0)).unwrap()).unwrap();
        assert!((out[(0, 0)] - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn domain_and_arity_errors() {
        let f = FreeFunctionSpec::new("nri", 1, Domain::PRe, Expr::var(0).re().inv().neg()).unwrap();
        let err = f.evaluate(&OperatorTuple::single(scalar(0.0, 1.0)).unwrap());
        assert!(matches!(err, Err(Error::Domain(_))));
        let err = f.evaluate(&OperatorTuple::identities(1, 2));
        assert!(matches!(err, Err(Error::Arity { .. })));

        let inv = FreeFunctionSpec::new("inv", 1, Domain::All, Expr::var(0).inv()).unwrap();
        let err = inv.evaluate(&OperatorTuple::zeros(2, 1));
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn fixed_size_constant_is_rejected() {
        let block = MatrixJson::from(&identity(2));
        let err = FreeFunctionSpec::new(
            "block",
            1,
            Domain::All,
            Expr::sum(vec![Expr::var(0), Expr::ConstMatrix(block)]),
        );
        assert!(matches!(err, Err(Error::Contract(_))));

        let err = FreeFunctionSpec::new("bad", 1, Domain::All, Expr::var(1));
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn json_grammar() {
        let text = r#"{
            "name": "shifted-square",
            "arity": 1,
            "domain": "p_re",
            "expr": {"add": [{"const": [1.0, 0.0]}, {"mul": [{"var": 0}, {"var": 0}]},
                             {"scale": {"by": [0.0, 2.0], "arg": {"re": {"var": 0}}}}]}
        }"#;
        let f = FreeFunctionSpec::from_json(text).unwrap();
        assert_eq!(f.domain, Domain::PRe);
        let x = OperatorTuple::single(scalar(1.0, 1.0)).unwrap();
        // 1 + (1+i)^2 + 2i·1 = 1 + 4i
        assert!((f.evaluate(&x).unwrap()[(0, 0)] - c(1.0, 4.0)).norm() < 1e-14);
        let back = FreeFunctionSpec::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);

        let block = r#"{"name":"b","arity":1,"domain":"all",
            "expr":{"const_matrix":{"rows":2,"cols":2,"data":[[1,0],[0,0],[0,0],[1,0]]}}}"#;
        assert!(matches!(FreeFunctionSpec::from_json(block), Err(Error::Contract(_))));
    }
}
