//! Trial generation inside a declared [`Domain`].

use rand::Rng;

use crate::error::{Error, Result};
use crate::free::expr::{Domain, FreeFunctionSpec};
use crate::linalg::{c, CMatrix, OperatorTuple};
use crate::order::ordered_pair_with;
use crate::sampling;

/// Attempts allowed before a domain exit becomes a sampling error.
pub const MAX_RESAMPLE: usize = 100;

pub fn sample_point<R: Rng + ?Sized>(rng: &mut R, domain: Domain, n: usize, k: usize) -> OperatorTuple {
    let items = (0..k)
        .map(|_| match domain {
            Domain::All | Domain::PRe => sampling::real_positive(rng, n),
            Domain::HermitianPd => sampling::hermitian_pd(rng, n),
        })
        .collect();
    OperatorTuple::new(items).expect("uniform sizes")
}

/// `(A, B)` in the domain with `A ≤_Re B`.
pub fn sample_ordered<R: Rng + ?Sized>(
    rng: &mut R,
    domain: Domain,
    n: usize,
    k: usize,
) -> (OperatorTuple, OperatorTuple) {
    match domain {
        Domain::All | Domain::PRe => ordered_pair_with(rng, n, k),
        Domain::HermitianPd => {
            let a = sample_point(rng, domain, n, k);
            let items = a
                .items()
                .iter()
                .map(|x| {
                    let rank = rng.gen_range(0..=n);
                    x + sampling::psd(rng, n, rank)
                })
                .collect();
            (a, OperatorTuple::new(items).expect("uniform sizes"))
        }
    }
}

/// A real-positive direction `H` (Hermitian PSD on Hermitian domains).
///
/// One draw in four has `Re H = 0`, the boundary of the real-positive cone.
pub fn sample_direction<R: Rng + ?Sized>(rng: &mut R, domain: Domain, n: usize, k: usize) -> OperatorTuple {
    let items = (0..k)
        .map(|_| match domain {
            Domain::All | Domain::PRe => {
                let rank = if rng.gen_bool(0.25) { 0 } else { rng.gen_range(1..=n) };
                sampling::psd(rng, n, rank) + sampling::hermitian(rng, n) * c(0.0, 1.0)
            }
            Domain::HermitianPd => {
                let rank = rng.gen_range(1..=n);
                sampling::psd(rng, n, rank)
            }
        })
        .collect::<Vec<CMatrix>>();
    OperatorTuple::new(items).expect("uniform sizes")
}

/// Draws until `f` succeeds without a domain error.
pub fn resample<R: Rng + ?Sized, T>(
    rng: &mut R,
    mut f: impl FnMut(&mut R) -> Result<T>,
) -> Result<T> {
    let mut last = String::new();
    for _ in 0..MAX_RESAMPLE {
        match f(rng) {
            Ok(v) => return Ok(v),
            Err(Error::Domain(why)) => last = why,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Sampling {
        attempts: MAX_RESAMPLE,
        reason: last,
    })
}

/// A point of the domain together with `F` evaluated there.
pub fn sample_evaluated<R: Rng + ?Sized>(
    rng: &mut R,
    f: &FreeFunctionSpec,
    n: usize,
) -> Result<(OperatorTuple, CMatrix)> {
    resample(rng, |r| {
        let x = sample_point(r, f.domain, n, f.arity);
        let y = f.evaluate(&x)?;
        Ok((x, y))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Tol;
    use crate::order::real_leq;

    #[test]
    fn samples_stay_in_domain() {
        let mut r = sampling::rng(1);
        for domain in [Domain::All, Domain::PRe, Domain::HermitianPd] {
            for n in 1..5 {
                assert!(domain.contains(&sample_point(&mut r, domain, n, 2)));
                let (a, b) = sample_ordered(&mut r, domain, n, 2);
                assert!(domain.contains(&a) && domain.contains(&b));
                assert!(real_leq(&a, &b, Tol::Auto).unwrap().holds);
                let h = sample_direction(&mut r, domain, n, 2);
                for x in h.items() {
                    assert!(crate::order::is_real_positive(x, Tol::Auto).unwrap().holds);
                }
            }
        }
    }

    #[test]
    fn persistent_domain_exit_is_a_sampling_error() {
        let mut r = sampling::rng(0);
        let err = resample(&mut r, |_| -> Result<()> { Err(Error::Domain("never".into())) });
        assert!(matches!(err, Err(Error::Sampling { attempts: MAX_RESAMPLE, .. })));
    }
}
