//! The acceptance suite: ten property checks at desk scale, each with its
//! tolerances pinned. Used by `verify-all` and the `acceptance` test target.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certify::{
    affine_fit, block_concavity_construction, certify_concave, certify_derivative, certify_monotone,
    choi_of_linear_map, integral_reconstruction, is_cp, re_independence_test, replay_monotone, FnMap, KrausMap,
    DEFAULT_LAMBDAS, DEFAULT_TOL,
};
use crate::certify::derivative::DERIVATIVE_TOL;
use crate::error::Result;
use crate::free::domain::sample_point;
use crate::free::zoo::affine;
use crate::free::{check_free_axioms, lookup, zoo, Domain};
use crate::hypograph::check_matrix_convexity;
use crate::linalg::{c, CMatrix, Hermitian, Tol};
use crate::means::{geometric_mean, verify_max_characterization};
use crate::pluri::{holomorphic_bank, linearity_test, wirtinger, LinearityStage};
use crate::sampling;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2}. {} — {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

type Check = fn(u64) -> Result<(bool, String)>;

pub const CRITERIA: [(&str, Check); 10] = [
    ("free-axiom suite", free_axioms),
    ("geometric-mean max characterization", geomean_max),
    ("real-order failure of the geometric mean", geomean_order_failure),
    ("real-part independence detector", re_independence),
    ("affine rigidity", rigidity),
    ("monotone implies concave", monotone_concave_chain),
    ("derivative criterion", derivative),
    ("Choi module", choi),
    ("hypograph equivalence", hypograph),
    ("pluriharmonic lab", pluriharmonic),
];

/// Runs criterion `id` (1-based).
pub fn run_criterion(id: usize, seed: u64) -> CriterionResult {
    let (name, check) = CRITERIA[id - 1];
    let start = Instant::now();
    let (passed, detail) = match check(seed) {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult {
        id,
        name: name.to_string(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every criterion, one thread each; results are in criterion order.
pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    std::thread::scope(|s| {
        let handles: Vec<_> = (1..=CRITERIA.len())
            .map(|id| s.spawn(move || run_criterion(id, seed)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread panicked")).collect()
    })
}

fn free_axioms(seed: u64) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut failed = Vec::new();
    for e in zoo() {
        for n in 1..=3 {
            let (ds, un) = check_free_axioms(&e.spec, n, 100, seed)?;
            worst = worst.max(ds.max_residual).max(un.max_residual);
            if ds.max_residual > 1e-9 || un.max_residual > 1e-9 {
                failed.push(format!("{}@{n}", e.id));
            }
        }
    }
    Ok((
        failed.is_empty(),
        format!("{} members x n=1..3 x 100 trials, max residual {worst:.2e}, failures {failed:?}", zoo().len()),
    ))
}

fn geomean_max(seed: u64) -> Result<(bool, String)> {
    let mut r = sampling::rng(seed);
    let (mut worst_feas, mut worst_inflated) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ok = true;
    for _ in 0..100 {
        let n = r.gen_range(1..=4);
        let a = Hermitian::new(sampling::hermitian_pd(&mut r, n))?;
        let b = Hermitian::new(sampling::hermitian_pd(&mut r, n))?;
        let g = Hermitian::new(geometric_mean(a.as_matrix(), b.as_matrix())?)?;
        let rep = verify_max_characterization(&a, &b, &g, 1e-3)?;
        worst_feas = worst_feas.min(rep.feasibility_margin);
        worst_inflated = worst_inflated.max(rep.inflated_margin);
        ok &= rep.feasibility_margin >= -1e-8 && rep.inflated_margin < 0.0;
    }
    Ok((
        ok,
        format!("100 pairs: min block eigenvalue {worst_feas:.2e}, max inflated eigenvalue {worst_inflated:.2e}"),
    ))
}

fn geomean_order_failure(seed: u64) -> Result<(bool, String)> {
    let f = lookup("geomean")?.spec;
    let rep = certify_monotone(&f, &[1, 2], 10_000, seed, DEFAULT_TOL)?;
    let Some(w) = rep.witness.clone() else {
        return Ok((false, format!("no violation in 10^4 trials (worst margin {:.2e})", rep.worst_margin)));
    };
    let replay = replay_monotone(&f, seed, w.trial, w.dim, DEFAULT_TOL)?;
    let ok = rep.worst_margin < -1e-6 && w.margin < -1e-6 && replay.as_ref() == Some(&w);
    Ok((
        ok,
        format!(
            "first witness at trial {} (n={}), margin {:.3e}, worst {:.3e}, replay {}",
            w.trial,
            w.dim,
            w.margin,
            rep.worst_margin,
            if replay.as_ref() == Some(&w) { "identical" } else { "differs" }
        ),
    ))
}

fn re_independence(seed: u64) -> Result<(bool, String)> {
    let ni = lookup("neg-inverse")?.spec;
    let rep = re_independence_test(&ni, &[1], 10, seed, DEFAULT_TOL)?;
    let w = rep.witness.as_ref();
    let canonical = w.map(|w| w.trial == 0 && (w.margin + 0.5).abs() <= 1e-10).unwrap_or(false);
    let nri = lookup("neg-re-inverse")?.spec;
    let pass = re_independence_test(&nri, &[1, 2, 3, 4], 1000, seed, DEFAULT_TOL)?;
    Ok((
        canonical && pass.passed(),
        format!(
            "-X^-1 witness margin {:?}; -(Re X)^-1 over 10^3 trials: {} (worst {:.2e})",
            w.map(|w| w.margin),
            if pass.passed() { "no violation" } else { "violated" },
            pass.worst_margin
        ),
    ))
}

fn rigidity(seed: u64) -> Result<(bool, String)> {
    let mut r = sampling::rng(seed);
    let mut worst: f64 = 0.0;
    for t in 0..20 {
        let k = 1 + t % 3;
        let a0 = c(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
        let a: Vec<_> = (0..k).map(|_| c(r.gen_range(0.0..3.0), 0.0)).collect();
        let domain = if t % 2 == 0 { Domain::All } else { Domain::PRe };
        let fit = affine_fit(&affine("planted", a0, &a, domain)?, 10, seed)?;
        worst = worst.max((fit.a0 - a0).norm());
        for (x, y) in fit.a.iter().zip(&a) {
            worst = worst.max((x - y).norm());
        }
    }
    let sq = lookup("square")?.spec;
    let fit = affine_fit(&sq, 20, seed)?;
    let mono = certify_monotone(&sq, &[1, 2], 10_000, seed, DEFAULT_TOL)?;
    Ok((
        worst <= 1e-8 && fit.residual > 1e-2 && mono.violated(),
        format!(
            "planted coefficient error {worst:.2e}; X^2 residual {:.3}, monotonicity witness {}",
            fit.residual,
            mono.witness.as_ref().map(|w| format!("at trial {}", w.trial)).unwrap_or_else(|| "missing".into())
        ),
    ))
}

fn monotone_concave_chain(seed: u64) -> Result<(bool, String)> {
    let mut broken = Vec::new();
    for e in zoo() {
        for n in 1..=4 {
            let m = certify_monotone(&e.spec, &[2 * n], 150, seed, DEFAULT_TOL)?;
            if m.passed() {
                let cc = certify_concave(&e.spec, &[n], 150, seed, DEFAULT_TOL, &DEFAULT_LAMBDAS)?;
                if cc.violated() {
                    broken.push(format!("{}@{n}", e.id));
                }
            }
        }
    }
    let mut r = sampling::rng(seed);
    let mut worst: f64 = 0.0;
    let mut all = true;
    for _ in 0..100 {
        let n = r.gen_range(1..=4);
        let k = r.gen_range(1..=2);
        let a = sample_point(&mut r, Domain::PRe, n, k);
        let b = sample_point(&mut r, Domain::PRe, n, k);
        let rep = block_concavity_construction(&a, &b, r.gen_range(0.05..0.95), r.gen_range(0.01..1.0), 1e-10)?;
        worst = worst.max(rep.unitary_residual).max(rep.block_identity_residual);
        all &= rep.passed;
    }
    Ok((
        broken.is_empty() && all && worst <= 1e-10,
        format!("chain breaks {broken:?}; block construction max residual {worst:.2e} over 100 draws"),
    ))
}

fn derivative(seed: u64) -> Result<(bool, String)> {
    let mut disagreements = Vec::new();
    for e in zoo() {
        let d = certify_derivative(&e.spec, &[1, 2, 3], 300, seed, DERIVATIVE_TOL)?;
        let m = certify_monotone(&e.spec, &[1, 2, 3], 300, seed, DEFAULT_TOL)?;
        if d.passed() != m.passed() {
            disagreements.push(e.id);
        }
    }
    let mut r = sampling::rng(seed);
    let mut worst: f64 = 0.0;
    for e in zoo() {
        for n in 1..=2 {
            let a = sample_point(&mut r, e.spec.domain, n, e.spec.arity);
            let b = sample_point(&mut r, e.spec.domain, n, e.spec.arity);
            worst = worst.max(integral_reconstruction(&e.spec, &a, &b, 256)?);
        }
    }
    Ok((
        disagreements.is_empty() && worst <= 1e-6,
        format!("disagreements {disagreements:?}; integral reconstruction max relative error {worst:.2e}"),
    ))
}

fn choi(seed: u64) -> Result<(bool, String)> {
    let t = FnMap { n: 2, m: 2, f: |x: &CMatrix| x.transpose() };
    let rep = is_cp(&choi_of_linear_map(&t, "transpose")?, Tol::Auto)?;
    let low = rep.eigenvalues[0];
    let transpose_ok = !rep.verdict.holds && (low + 1.0).abs() <= 1e-10;
    let mut r = sampling::rng(seed);
    let mut worst: f64 = 0.0;
    let mut all_cp = true;
    for _ in 0..50 {
        let (n, m) = (r.gen_range(1..=3), r.gen_range(1..=3));
        let factors = (0..r.gen_range(1..=3)).map(|_| sampling::ginibre(&mut r, m, n)).collect();
        let rep = is_cp(&choi_of_linear_map(&KrausMap::new(factors)?, "kraus")?, Tol::Auto)?;
        all_cp &= rep.verdict.holds;
        worst = worst.max(rep.reconstruction_residual);
    }
    Ok((
        transpose_ok && all_cp && worst <= 1e-9,
        format!("transpose lowest eigenvalue {low:.12}; 50 Kraus maps, max reconstruction residual {worst:.2e}"),
    ))
}

fn hypograph(seed: u64) -> Result<(bool, String)> {
    let mut rows = Vec::new();
    let mut ok = true;
    for e in zoo().into_iter().filter(|e| e.traits.maps_into_p_re) {
        let h = check_matrix_convexity(&e.spec, &[1, 2, 3], 400, seed, DEFAULT_TOL)?;
        let m = certify_monotone(&e.spec, &[1, 2, 3], 400, seed, DEFAULT_TOL)?;
        ok &= h.passed() == m.passed();
        rows.push(format!("{}={}/{}", e.id, verdict(h.passed()), verdict(m.passed())));
    }
    Ok((ok, format!("hypograph/monotone: {}", rows.join(", "))))
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "ok"
    } else {
        "violated"
    }
}

fn pluriharmonic(seed: u64) -> Result<(bool, String)> {
    let mut r = sampling::rng(seed);
    let mut worst: f64 = 0.0;
    let bank = holomorphic_bank();
    for e in &bank {
        for _ in 0..100 {
            let z = e.field.sample_point(&mut r, 0.9);
            let w = wirtinger(&e.field, &z, None)?;
            worst = w.dbar.iter().map(|v| v.norm()).fold(worst, f64::max);
        }
    }
    let mut accepted = Vec::new();
    let mut ok = worst <= 1e-6;
    for e in &bank {
        let rep = linearity_test(&e.field, 60, seed, 1e-6)?;
        if e.linear {
            ok &= rep.linear;
            accepted.push(e.field.name.clone());
        }
        if e.field.name == "exp(z)-1" || e.field.name == "z^2" {
            ok &= !rep.linear && rep.flagged_by == Some(LinearityStage::ImDependence);
        }
    }
    Ok((
        ok,
        format!("max |dbar f| {worst:.2e} over {} fields; linear accepted {accepted:?}; exp(z)-1, z^2 rejected at the Im-dependence stage", bank.len()),
    ))
}
