//! Real monotonicity and real concavity certifiers.

use rand::Rng;

use crate::certify::{check_dims, re_margin};
use crate::error::Result;
use crate::free::domain::{resample, sample_ordered, sample_point};
use crate::free::FreeFunctionSpec;
use crate::linalg::OperatorTuple;
use crate::report::{CertificateReport, Claim, Tally, Witness};
use crate::sampling;

pub const DEFAULT_LAMBDAS: [f64; 3] = [0.25, 0.5, 0.75];

/// Bisection steps used to shrink a witness.
const MINIMIZE_STEPS: usize = 30;

/// Shrinks a violation along the segment `s ∈ (0, 1]`, where `s = 0` is a
/// passing configuration and `s = 1` the original failing one.
///
/// Returns the smallest `s` found whose margin is still at most half the
/// original margin, together with that margin.
fn minimize(m0: f64, margin_at: impl Fn(f64) -> Result<f64>) -> (f64, f64) {
    let target = 0.5 * m0;
    let (mut lo, mut hi, mut best) = (0.0, 1.0, m0);
    for _ in 0..MINIMIZE_STEPS {
        let mid = 0.5 * (lo + hi);
        match margin_at(mid) {
            Ok(m) if m <= target => {
                hi = mid;
                best = m;
            }
            _ => lo = mid,
        }
    }
    (hi, best)
}

fn dim_of(dims: &[usize], trial: usize) -> usize {
    dims[trial % dims.len()]
}

struct Trial {
    margin: f64,
    witness: Option<Witness>,
}

fn monotone_margin(f: &FreeFunctionSpec, a: &OperatorTuple, b: &OperatorTuple) -> Result<f64> {
    re_margin(&(f.evaluate(b)? - f.evaluate(a)?))
}

fn monotone_trial(f: &FreeFunctionSpec, seed: u64, trial: usize, n: usize, tol: f64) -> Result<Trial> {
    let mut r = sampling::trial_rng(seed, trial as u64);
    let (a, b, margin) = resample(&mut r, |r| {
        let (a, b) = sample_ordered(r, f.domain, n, f.arity);
        let m = monotone_margin(f, &a, &b)?;
        Ok((a, b, m))
    })?;
    if margin >= -tol {
        return Ok(Trial { margin, witness: None });
    }
    // A ≤_Re A + s(B − A) for every s ∈ [0, 1]
    let (s, m) = minimize(margin, |s| monotone_margin(f, &a, &a.lerp(s, &b)?));
    let b_min = a.lerp(s, &b)?;
    let witness = Witness::new(trial, n, m)
        .tuple("A", &a)
        .tuple("B", &b_min)
        .param("shrink", s)
        .param("unminimized_margin", margin);
    Ok(Trial {
        margin,
        witness: Some(witness),
    })
}

/// Samples pairs `A ≤_Re B` and checks `F(A) ≤_Re F(B)`.
///
/// Trial `t` runs at dimension `dims[t % dims.len()]` from the stream
/// `trial_rng(seed, t)`, so any witness can be replayed on its own.
pub fn certify_monotone(
    f: &FreeFunctionSpec,
    dims: &[usize],
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<CertificateReport> {
    check_dims(dims, trials)?;
    f.validate()?;
    let mut tally = Tally::new(Claim::Monotone, &f.name, dims, seed, tol);
    for t in 0..trials {
        let trial = monotone_trial(f, seed, t, dim_of(dims, t), tol)?;
        let w = trial.witness;
        tally.record(trial.margin, || w.expect("violating trials carry a witness"));
    }
    Ok(tally.finish())
}

/// Re-runs one monotonicity trial; yields the same witness as the original run.
pub fn replay_monotone(
    f: &FreeFunctionSpec,
    seed: u64,
    trial: usize,
    dim: usize,
    tol: f64,
) -> Result<Option<Witness>> {
    Ok(monotone_trial(f, seed, trial, dim, tol)?.witness)
}

fn concave_margin(f: &FreeFunctionSpec, a: &OperatorTuple, b: &OperatorTuple, lambda: f64) -> Result<f64> {
    let mid = f.evaluate(&a.lerp(lambda, b)?)?;
    let chord = f.evaluate(a)? * crate::linalg::c(1.0 - lambda, 0.0) + f.evaluate(b)? * crate::linalg::c(lambda, 0.0);
    re_margin(&(mid - chord))
}

pub(crate) fn concave_trial_with<R: Rng>(
    f: &FreeFunctionSpec,
    r: &mut R,
    trial: usize,
    n: usize,
    lambdas: &[f64],
    tol: f64,
    sampler: impl Fn(&mut R) -> (OperatorTuple, OperatorTuple),
) -> Result<(f64, Option<Witness>)> {
    let (a, b, margins) = resample(r, |r| {
        let (a, b) = sampler(r);
        let ms = lambdas
            .iter()
            .map(|&l| concave_margin(f, &a, &b, l))
            .collect::<Result<Vec<_>>>()?;
        Ok((a, b, ms))
    })?;
    let (li, margin) = margins
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, m)| if m < acc.1 { (i, m) } else { acc });
    if margin >= -tol {
        return Ok((margin, None));
    }
    let lambda = lambdas[li];
    // the chord inequality is an equality when B = A
    let (s, m) = minimize(margin, |s| concave_margin(f, &a, &a.lerp(s, &b)?, lambda));
    let b_min = a.lerp(s, &b)?;
    let witness = Witness::new(trial, n, m)
        .tuple("A", &a)
        .tuple("B", &b_min)
        .param("lambda", lambda)
        .param("shrink", s)
        .param("unminimized_margin", margin);
    Ok((margin, Some(witness)))
}

fn concave_trial(
    f: &FreeFunctionSpec,
    seed: u64,
    trial: usize,
    n: usize,
    lambdas: &[f64],
    tol: f64,
) -> Result<(f64, Option<Witness>)> {
    let mut r = sampling::trial_rng(seed, trial as u64);
    concave_trial_with(f, &mut r, trial, n, lambdas, tol, |r| {
        (sample_point(r, f.domain, n, f.arity), sample_point(r, f.domain, n, f.arity))
    })
}

fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(crate::Error::Parameter("lambdas must be a non-empty subset of [0, 1]".into()));
    }
    Ok(())
}

/// Checks `(1−λ)F(A) + λF(B) ≤_Re F((1−λ)A + λB)` on independent pairs.
pub fn certify_concave(
    f: &FreeFunctionSpec,
    dims: &[usize],
    trials: usize,
    seed: u64,
    tol: f64,
    lambdas: &[f64],
) -> Result<CertificateReport> {
    check_dims(dims, trials)?;
    check_lambdas(lambdas)?;
    f.validate()?;
    let mut tally = Tally::new(Claim::Concave, &f.name, dims, seed, tol);
    for t in 0..trials {
        let (margin, w) = concave_trial(f, seed, t, dim_of(dims, t), lambdas, tol)?;
        tally.record(margin, || w.expect("violating trials carry a witness"));
    }
    Ok(tally.finish())
}

pub fn replay_concave(
    f: &FreeFunctionSpec,
    seed: u64,
    trial: usize,
    dim: usize,
    tol: f64,
    lambdas: &[f64],
) -> Result<Option<Witness>> {
    check_lambdas(lambdas)?;
    Ok(concave_trial(f, seed, trial, dim, lambdas, tol)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::DEFAULT_TOL;
    use crate::free::{lookup, zoo, Domain, Expr};
    use crate::linalg::c;
    use crate::order::real_leq;

    fn scalar(re: f64, im: f64) -> OperatorTuple {
        OperatorTuple::scalars(&[c(re, im)])
    }

    #[test]
    fn positive_affine_is_monotone() {
        let f = lookup("affine-pos").unwrap().spec;
        let rep = certify_monotone(&f, &[1, 2, 3, 4], 1000, 7, DEFAULT_TOL).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.trials, 1000);
    }

    #[test]
    fn negative_inverse_scalar_witness() {
        let f = lookup("neg-inverse").unwrap().spec;
        let a = scalar(1.0, 0.0);
        let b = scalar(1.0, 1.0);
        assert!(real_leq(&b, &a, 0.0).unwrap().holds);
        let m = monotone_margin(&f, &b, &a).unwrap();
        assert!((m + 0.5).abs() < 1e-12);
        let rep = certify_monotone(&f, &[1, 2], 500, 1, DEFAULT_TOL).unwrap();
        assert!(rep.violated());
    }

    #[test]
    fn negative_inverse_of_real_part_is_monotone() {
        let f = lookup("neg-re-inverse").unwrap().spec;
        let rep = certify_monotone(&f, &[1, 2, 3, 4], 1000, 2, DEFAULT_TOL).unwrap();
        assert!(rep.passed(), "{:?}", rep.worst_margin);
    }

    #[test]
    fn witnesses_replay_and_stay_violating() {
        let f = lookup("square").unwrap().spec;
        let rep = certify_monotone(&f, &[2], 200, 5, DEFAULT_TOL).unwrap();
        let w = rep.witness.clone().expect("square is not monotone");
        assert!(w.margin < -DEFAULT_TOL);
        assert!(w.margin <= 0.5 * w.params["unminimized_margin"] + 1e-15);
        let again = replay_monotone(&f, rep.seed, w.trial, w.dim, DEFAULT_TOL).unwrap().unwrap();
        assert_eq!(again, w);
        let (a, b) = (w.input_tuple("A").unwrap(), w.input_tuple("B").unwrap());
        assert!(real_leq(&a, &b, 1e-12).unwrap().holds);
        assert!((monotone_margin(&f, &a, &b).unwrap() - w.margin).abs() < 1e-12);
    }

    #[test]
    fn concavity_examples() {
        let f = lookup("affine-neg").unwrap().spec;
        let rep = certify_concave(&f, &[1, 2, 3], 200, 1, DEFAULT_TOL, &DEFAULT_LAMBDAS).unwrap();
        assert!(rep.passed() && rep.worst_margin.abs() < 1e-12);

        let sq = FreeFunctionSpec::new("sq", 1, Domain::HermitianPd, Expr::var(0).pow(2)).unwrap();
        let a = OperatorTuple::scalars(&[c(1.0, 0.0)]);
        let b = OperatorTuple::scalars(&[c(3.0, 0.0)]);
        assert!((concave_margin(&sq, &a, &b, 0.5).unwrap() + 1.0).abs() < 1e-12);
        let rep = certify_concave(&sq, &[1, 2], 100, 1, DEFAULT_TOL, &DEFAULT_LAMBDAS).unwrap();
        assert!(rep.violated());
        let w = rep.witness.unwrap();
        assert_eq!(replay_concave(&sq, 1, w.trial, w.dim, DEFAULT_TOL, &DEFAULT_LAMBDAS).unwrap(), Some(w));

        let g = lookup("geomean-hpd").unwrap().spec;
        let rep = certify_concave(&g, &[1, 2, 3], 300, 1, DEFAULT_TOL, &DEFAULT_LAMBDAS).unwrap();
        assert!(rep.passed(), "{}", rep.worst_margin);
    }

    #[test]
    fn zoo_verdicts_match_traits() {
        for e in zoo() {
            let m = certify_monotone(&e.spec, &[1, 2, 3], 600, 11, DEFAULT_TOL).unwrap();
            assert_eq!(m.passed(), e.traits.monotone, "monotone {}: {}", e.id, m.worst_margin);
            let cc = certify_concave(&e.spec, &[1, 2, 3], 600, 11, DEFAULT_TOL, &DEFAULT_LAMBDAS).unwrap();
            assert_eq!(cc.passed(), e.traits.concave, "concave {}: {}", e.id, cc.worst_margin);
        }
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let f = lookup("square").unwrap().spec;
        assert!(certify_monotone(&f, &[], 10, 0, DEFAULT_TOL).is_err());
        assert!(certify_concave(&f, &[1], 10, 0, DEFAULT_TOL, &[1.5]).is_err());
    }
}
