//! Check engine for the inequalities and identities satisfied by J-sums.
//!
//! Every check is oriented as `lhs <= rhs` and passes when
//! `rhs − lhs >= −tolerance · max(1, |rhs|)`. Equalities are encoded with
//! `lhs = |a − b|` and `rhs` the allowed deviation.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{JsumError, Result};
use crate::jnorm::{self, jnorm, jnorm_oracle_with_limit, norming_functional, rho, sigma, SubsetS};
use crate::projections::{
    p_interval, p_n, q_alpha, q_n, q_set, t_block, t_block_by_composition, IntervalI, StepSequence,
};
use crate::random::{self, rng_for};
use crate::vector::{JVector, Tail};
use crate::{ALG_TOL, NORM_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Recorded without pass/fail semantics (constant-specific bounds at q ≠ 2).
    Info,
    /// The check was declined because its hypotheses cannot hold.
    Refused,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Instance {
    pub seed: Option<u64>,
    pub chain: Option<String>,
    pub index: usize,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    /// `margin / max(1, |rhs|)`.
    pub relative_margin: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub instance: Instance,
}

impl CheckReport {
    pub fn new(check: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = rhs - lhs;
        let scale = rhs.abs().max(1.0);
        let verdict = if margin >= -tolerance * scale {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        CheckReport {
            check: check.to_string(),
            lhs,
            rhs,
            margin,
            relative_margin: margin / scale,
            tolerance,
            verdict,
            instance: Instance::default(),
        }
    }

    /// `|a − b| <= allowed`.
    pub fn equality(check: &str, a: f64, b: f64, allowed: f64) -> Self {
        let mut r = CheckReport::new(check, (a - b).abs(), allowed, 0.0);
        r.relative_margin = r.margin / b.abs().max(1.0);
        r
    }

    pub fn informational(mut self) -> Self {
        self.verdict = Verdict::Info;
        self
    }

    /// Graded only at `q = 2`.
    fn graded_at_q2(self, q: f64) -> Self {
        if q == 2.0 {
            self
        } else {
            self.informational()
        }
    }

    pub fn refused(check: &str, detail: &str) -> Self {
        let mut r = CheckReport::new(check, f64::NAN, f64::NAN, 0.0);
        r.margin = f64::NAN;
        r.relative_margin = f64::NAN;
        r.verdict = Verdict::Refused;
        r.instance.detail = detail.to_string();
        r
    }

    pub fn with_instance(mut self, seed: Option<u64>, chain: Option<&str>, index: usize) -> Self {
        self.instance.seed = seed;
        self.instance.chain = chain.map(str::to_string);
        self.instance.index = index;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.instance.detail = detail.into();
        self
    }

    pub fn passed(&self) -> bool {
        matches!(self.verdict, Verdict::Pass | Verdict::Info)
    }

    pub fn failed(&self) -> bool {
        !self.passed()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub info: usize,
    pub refused: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub relative_margin: f64,
    pub margin: f64,
    pub index: usize,
    /// Largest observed `lhs / rhs`; the empirical constant for informational checks.
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SuiteReport {
    pub reports: Vec<CheckReport>,
    pub counts: Counts,
    pub worst: BTreeMap<String, WorstCase>,
}

impl SuiteReport {
    pub fn from_reports(mut reports: Vec<CheckReport>) -> Self {
        reports.sort_by(|a, b| a.check.cmp(&b.check).then(a.instance.index.cmp(&b.instance.index)));
        let mut counts = Counts {
            total: reports.len(),
            ..Counts::default()
        };
        let mut worst: BTreeMap<String, WorstCase> = BTreeMap::new();
        for r in &reports {
            match r.verdict {
                Verdict::Pass => counts.passed += 1,
                Verdict::Fail => counts.failed += 1,
                Verdict::Info => counts.info += 1,
                Verdict::Refused => counts.refused += 1,
            }
            let ratio = if r.rhs != 0.0 { r.lhs / r.rhs } else { 0.0 };
            let entry = worst.entry(r.check.clone()).or_insert(WorstCase {
                relative_margin: f64::INFINITY,
                margin: f64::INFINITY,
                index: r.instance.index,
                worst_ratio: f64::NEG_INFINITY,
            });
            if r.relative_margin < entry.relative_margin {
                entry.relative_margin = r.relative_margin;
                entry.margin = r.margin;
                entry.index = r.instance.index;
            }
            if ratio > entry.worst_ratio {
                entry.worst_ratio = ratio;
            }
        }
        SuiteReport { reports, counts, worst }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckReport> {
        self.reports.iter().filter(|r| r.failed())
    }

    pub fn all_passed(&self) -> bool {
        self.counts.failed == 0 && self.counts.refused == 0
    }

    /// Rows `check,seed,instance,lhs,rhs,margin,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,seed,instance,lhs,rhs,margin,pass\n");
        for r in &self.reports {
            let seed = r.instance.seed.map(|s| s.to_string()).unwrap_or_default();
            let pass = match r.verdict {
                Verdict::Pass => "true",
                Verdict::Fail => "false",
                Verdict::Info => "info",
                Verdict::Refused => "refused",
            };
            out.push_str(&format!(
                "{},{},{},{:e},{:e},{:e},{}\n",
                r.check, seed, r.instance.index, r.lhs, r.rhs, r.margin, pass
            ));
        }
        out
    }
}

fn check_support_in(x: &JVector, interval: IntervalI, n: usize) -> Result<()> {
    if let Some((lo, hi)) = x.support_hull() {
        if !interval.contains(lo) || !interval.contains(hi) {
            return Err(JsumError::SupportViolation(format!(
                "support {lo}..={hi} not inside {interval:?}"
            )));
        }
    }
    if x.unbounded_support() && !matches!(interval.bounds(), Some((_, hi)) if hi == n) {
        return Err(JsumError::SupportViolation(
            "eventually constant tail outside the interval".into(),
        ));
    }
    Ok(())
}

/// `ρ(x, S) <= ρ(x, {m} ∪ (S ∩ I))` for `x` supported in `I` and `m < min I`.
pub fn check_interval_reduction(
    chain: &Chain,
    x: &JVector,
    interval: IntervalI,
    m: usize,
    s: &SubsetS,
) -> Result<CheckReport> {
    x.check_on(chain)?;
    interval.validate(chain.len())?;
    let (lo, _) = interval
        .bounds()
        .ok_or_else(|| JsumError::SupportViolation("interval must be nonempty".into()))?;
    if m >= lo {
        return Err(JsumError::SupportViolation(format!(
            "m = {m} is not below min I = {lo}"
        )));
    }
    check_support_in(x, interval, chain.len())?;
    let reduced = SubsetS::from_unsorted(
        std::iter::once(m).chain(s.indices().iter().copied().filter(|&i| interval.contains(i))),
    )?;
    let lhs = rho(chain, x, s)?;
    let rhs = rho(chain, x, &reduced)?;
    Ok(CheckReport::new("interval_reduction", lhs, rhs, NORM_TOL).with_detail(format!("S={s} reduced={reduced}")))
}

/// Support hulls `(position, lo, hi)` of the nonzero blocks, sorted by `lo`;
/// `hi = usize::MAX` for supports that run into the tail.
fn hulls(blocks: &[JVector]) -> Vec<(usize, usize, usize)> {
    let mut h: Vec<(usize, usize, usize)> = blocks
        .iter()
        .enumerate()
        .filter_map(|(i, x)| {
            x.support_hull()
                .map(|(lo, hi)| (i, lo, if x.unbounded_support() { usize::MAX } else { hi }))
        })
        .collect();
    h.sort_by_key(|&(_, lo, _)| lo);
    h
}

fn sum_all(chain: &Chain, blocks: &[JVector]) -> Result<JVector> {
    blocks
        .iter()
        .try_fold(JVector::zeros(chain, Tail::Zero), |acc, x| acc.add(x))
}

fn sq(t: f64) -> f64 {
    t * t
}

/// `‖Σ x_j‖² <= 3 Σ ‖x_j‖²` for blocks on pairwise disjoint intervals.
pub fn check_upper(chain: &Chain, blocks: &[JVector]) -> Result<CheckReport> {
    for x in blocks {
        x.check_on(chain)?;
    }
    let h = hulls(blocks);
    for w in h.windows(2) {
        if w[1].1 <= w[0].2 {
            return Err(JsumError::OverlappingSupports {
                first: w[0].0,
                second: w[1].0,
            });
        }
    }
    let lhs = sq(jnorm::norm(chain, &sum_all(chain, blocks)?)?);
    let rhs = 3.0
        * blocks
            .iter()
            .map(|x| jnorm::norm(chain, x).map(sq))
            .sum::<Result<f64>>()?;
    Ok(CheckReport::new("upper_estimate", lhs, rhs, NORM_TOL).graded_at_q2(chain.q()))
}

/// `Σ ‖x_j‖² <= 2 ‖Σ x_j‖²` for blocks on skipped intervals.
pub fn check_lower(chain: &Chain, blocks: &[JVector]) -> Result<CheckReport> {
    for x in blocks {
        x.check_on(chain)?;
    }
    let h = hulls(blocks);
    for w in h.windows(2) {
        let gap = if w[0].2 == usize::MAX {
            i64::MIN
        } else {
            w[1].1 as i64 - w[0].2 as i64
        };
        if gap < 2 {
            return Err(JsumError::SkipViolation {
                first: w[0].0,
                second: w[1].0,
                gap,
            });
        }
    }
    let lhs = blocks
        .iter()
        .map(|x| jnorm::norm(chain, x).map(sq))
        .sum::<Result<f64>>()?;
    let rhs = 2.0 * sq(jnorm::norm(chain, &sum_all(chain, blocks)?)?);
    Ok(CheckReport::new("lower_estimate", lhs, rhs, NORM_TOL).graded_at_q2(chain.q()))
}

/// `ρ(Q_α x, S) <= ρ(x, {α_p : p ∈ S})`.
pub fn check_stepping(chain: &Chain, x: &JVector, alpha: &StepSequence, s: &SubsetS) -> Result<CheckReport> {
    s.within(chain.len())?;
    let qx = q_alpha(chain, x, alpha)?;
    let image = SubsetS::from_unsorted(s.indices().iter().map(|&p| alpha.get(p)))?;
    let lhs = rho(chain, &qx, s)?;
    let rhs = rho(chain, x, &image)?;
    Ok(CheckReport::new("stepping", lhs, rhs, NORM_TOL))
}

/// `Σ ‖x^i‖² <= 2 ‖Σ x^i‖²` for `x^k ∈ R((I − P_{m_{k−1}}) Q_{m_k})`.
pub fn check_skipped_block_lemma(chain: &Chain, m_seq: &[usize], xs: &[JVector]) -> Result<CheckReport> {
    let n = chain.len();
    if m_seq.len() != xs.len() + 1 || m_seq.first() != Some(&0) {
        return Err(JsumError::InvalidSubset(format!(
            "need m_0 = 0 followed by one index per vector, got {m_seq:?} for {} vectors",
            xs.len()
        )));
    }
    if m_seq.windows(2).any(|w| w[0] >= w[1]) {
        return Err(JsumError::InvalidSubset(format!(
            "{m_seq:?} is not strictly increasing"
        )));
    }
    if let Some(&last) = m_seq.last() {
        if last > n {
            return Err(JsumError::IndexOutOfRange { index: last, max: n });
        }
    }
    for (k, x) in xs.iter().enumerate() {
        x.check_on(chain)?;
        let (prev, cur) = (m_seq[k], m_seq[k + 1]);
        let head = (1..=prev).map(|j| x.block(j).amax()).fold(0.0, f64::max);
        let qx = q_n(chain, x, cur)?;
        let dev = head.max(x.max_abs_diff(&qx));
        let tail_ok = !(cur < n && x.tail() == Tail::Zero && x.block(n).amax() > 0.0);
        if dev > ALG_TOL * x.max_abs().max(1.0) || !tail_ok {
            return Err(JsumError::RangeMembership {
                index: k + 1,
                deviation: dev,
            });
        }
    }
    let lhs = xs.iter().map(|x| jnorm::norm(chain, x).map(sq)).sum::<Result<f64>>()?;
    let rhs = 2.0 * sq(jnorm::norm(chain, &sum_all(chain, xs)?)?);
    Ok(CheckReport::new("skipped_block_lemma", lhs, rhs, NORM_TOL).graded_at_q2(chain.q()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub trials: usize,
    pub seed: u64,
    /// Largest N for which the brute-force comparison runs.
    pub oracle_limit: usize,
    /// Random test functionals per norming-functional trial.
    pub dual_samples: usize,
}

impl SuiteOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        SuiteOptions {
            trials,
            seed,
            oracle_limit: 10,
            dual_samples: 8,
        }
    }
}

/// Run every check and invariant on `trials` seeded random instances.
pub fn run_suite(chain: &Chain, trials: usize, seed: u64) -> SuiteReport {
    run_suite_with(chain, SuiteOptions::new(trials, seed))
}

pub fn run_suite_with(chain: &Chain, opts: SuiteOptions) -> SuiteReport {
    let chain_id = chain.hash()[..16].to_string();
    let reports: Vec<CheckReport> = (0..opts.trials)
        .into_par_iter()
        .flat_map_iter(|trial| {
            let mut rng = rng_for(opts.seed, trial as u64);
            let mut out = Vec::new();
            if let Err(e) = run_trial(chain, &opts, &mut rng, &mut out) {
                out.push(CheckReport::refused("trial_error", &e.to_string()));
            }
            out.into_iter()
                .map(|r| r.with_instance(Some(opts.seed), Some(chain_id.as_str()), trial))
                .collect::<Vec<_>>()
        })
        .collect();
    SuiteReport::from_reports(reports)
}

fn run_trial<R: Rng>(chain: &Chain, opts: &SuiteOptions, rng: &mut R, out: &mut Vec<CheckReport>) -> Result<()> {
    let n = chain.len();
    let q = chain.q();
    let tail = if rng.random_bool(0.5) {
        Tail::Zero
    } else {
        Tail::EventuallyConstant
    };
    let x = random::random_vector(rng, chain, tail);
    let x_norm = jnorm::norm(chain, &x)?;
    let scale = x.max_abs().max(1.0);

    // norm evaluation
    let cert = jnorm(chain, &x)?;
    out.push(CheckReport::equality(
        "certificate_consistency",
        rho(chain, &x, &cert.witness)?,
        cert.rho_value,
        ALG_TOL * cert.rho_value.max(1.0),
    ));
    if n <= opts.oracle_limit {
        let oracle = jnorm_oracle_with_limit(chain, &x, opts.oracle_limit)?;
        out.push(CheckReport::equality(
            "oracle_equivalence",
            cert.value,
            oracle.value,
            NORM_TOL * oracle.value.max(1.0),
        ));
    }
    let m = rng.random_range(1..=n);
    let v = random::gaussian_vec(rng, chain.dim(m));
    let single = JVector::single(chain, m, v.clone())?;
    let bn = chain.block_norm(m, &v);
    out.push(CheckReport::equality(
        "isometric_embedding",
        jnorm::norm(chain, &single)?,
        bn,
        ALG_TOL * bn.max(1.0),
    ));

    let s = random::random_subset(rng, n);
    out.push(CheckReport::new(
        "sigma_below_rho",
        sigma(chain, &x, &s)?,
        rho(chain, &x, &s)?,
        NORM_TOL,
    ));

    // σ additivity on S ∪ T with max S = min T, superadditivity with max S <= min T
    let cut = rng.random_range(0..=n);
    let left = SubsetS::from_unsorted((0..=cut).filter(|&i| i == cut || rng.random_bool(0.5)))?;
    let right = SubsetS::from_unsorted((cut..=n).filter(|&i| i == cut || rng.random_bool(0.5)))?;
    let pw = |s: &SubsetS| sigma(chain, &x, s).map(|v| v.powf(q));
    let joined = pw(&left.union(&right))?;
    let parts = pw(&left)? + pw(&right)?;
    out.push(CheckReport::equality(
        "sigma_additivity",
        joined,
        parts,
        NORM_TOL * parts.max(1.0),
    ));
    if cut < n {
        let right2 = SubsetS::from_unsorted((cut + 1..=n).filter(|&i| i == cut + 1 || rng.random_bool(0.5)))?;
        let joined = pw(&left.union(&right2))?;
        let parts = pw(&left)? + pw(&right2)?;
        out.push(CheckReport::new("sigma_superadditivity", parts, joined, NORM_TOL));
    }

    // prefix monotonicity, reaching ‖x‖ at N for zero tails
    let xz = x.clone().with_tail(Tail::Zero);
    let mut prev = 0.0;
    for k in 1..=n {
        let cur = jnorm::norm(chain, &p_n(chain, &xz, k)?)?;
        out.push(CheckReport::new("prefix_monotone", prev, cur, NORM_TOL));
        prev = cur;
    }
    let xz_norm = jnorm::norm(chain, &xz)?;
    out.push(CheckReport::equality(
        "prefix_limit",
        prev,
        xz_norm,
        NORM_TOL * xz_norm.max(1.0),
    ));

    // truncation stability
    let xe = x.clone().with_tail(Tail::EventuallyConstant);
    let xe_norm = jnorm::norm(chain, &xe)?;
    let ext = chain.extend_identity(5);
    let ext_norm = jnorm::norm(&ext, &xe.extend_to(&ext)?)?;
    out.push(CheckReport::equality(
        "truncation_stability",
        ext_norm,
        xe_norm,
        ALG_TOL * xe_norm.max(1.0),
    ));

    // norming functional
    if x_norm > 0.0 {
        let f = norming_functional(chain, &x)?;
        out.push(CheckReport::equality(
            "functional_norming",
            f.apply(&x),
            x_norm,
            NORM_TOL * x_norm.max(1.0),
        ));
        for _ in 0..opts.dual_samples {
            let y = random::random_vector(rng, chain, Tail::Zero);
            out.push(CheckReport::new(
                "functional_bound",
                f.apply(&y).abs(),
                jnorm::norm(chain, &y)?,
                NORM_TOL,
            ));
        }
    }

    // interval projections
    let interval = random::random_interval(rng, n);
    let px = p_interval(chain, &x, interval)?;
    out.push(CheckReport::new(
        "p_contractive",
        jnorm::norm(chain, &px)?,
        x_norm,
        ALG_TOL,
    ));
    out.push(CheckReport::new(
        "p_idempotent",
        p_interval(chain, &px, interval)?.max_abs_diff(&px),
        ALG_TOL * scale,
        0.0,
    ));

    // stepping projections
    let alpha = random::random_step_sequence(rng, n);
    let qx = q_alpha(chain, &x, &alpha)?;
    out.push(CheckReport::new(
        "q_contractive",
        jnorm::norm(chain, &qx)?,
        x_norm,
        ALG_TOL,
    ));
    let a = random::random_index_set(rng, n);
    let qa = q_set(chain, &x, &a)?;
    out.push(CheckReport::new(
        "q_idempotent",
        q_set(chain, &qa, &a)?.max_abs_diff(&qa),
        ALG_TOL * scale,
        0.0,
    ));
    let sx = random::random_subset(rng, n);
    out.push(check_stepping(chain, &x, &alpha, &sx)?);

    // P_m / Q_m identities
    let mm = rng.random_range(1..=n);
    let pm = p_n(chain, &x, mm)?;
    let qm = q_n(chain, &x, mm)?;
    out.push(CheckReport::new(
        "qp_equals_q",
        q_n(chain, &pm, mm)?.max_abs_diff(&qm),
        ALG_TOL * scale,
        0.0,
    ));
    out.push(CheckReport::new(
        "pq_equals_p",
        p_n(chain, &qm, mm)?.max_abs_diff(&pm),
        ALG_TOL * scale,
        0.0,
    ));
    let (pn, qn) = (jnorm::norm(chain, &pm)?, jnorm::norm(chain, &qm)?);
    out.push(CheckReport::equality("pq_norms_equal", qn, pn, NORM_TOL * pn.max(1.0)));

    // interval reduction
    let (lo, hi) = interval.bounds().expect("random intervals are nonempty");
    let xi = random::random_vector_on(rng, chain, IntervalI::new(lo, hi), tail);
    let m0 = rng.random_range(0..lo);
    let s0 = random::random_subset(rng, n);
    out.push(check_interval_reduction(chain, &xi, interval, m0, &s0)?);

    // upper and lower estimates, stepped-block lemma
    out.push(check_upper(chain, &random::random_block_system(rng, chain, 1))?);
    out.push(check_lower(chain, &random::random_block_system(rng, chain, 2))?);
    let (mseq, xs) = random::random_stepped_blocks(rng, chain);
    out.push(check_skipped_block_lemma(chain, &mseq, &xs)?);

    // block projections
    if n >= 2 {
        let n1 = rng.random_range(0..=n - 1);
        let n2 = rng.random_range(n1 + 2..=n + 1);
        let t = t_block(chain, &x, n1, n2)?;
        out.push(CheckReport::new(
            "t_bound",
            jnorm::norm(chain, &t)?,
            2.0 * x_norm,
            NORM_TOL,
        ));
        out.push(CheckReport::new(
            "t_idempotent",
            t_block(chain, &t, n1, n2)?.max_abs_diff(&t),
            ALG_TOL * scale,
            0.0,
        ));
        let tc = t_block_by_composition(chain, &x, n1, n2)?;
        out.push(CheckReport::new(
            "t_closed_form",
            tc.max_abs_diff(&t),
            ALG_TOL * scale,
            0.0,
        ));
        if n2 < n {
            let n3 = rng.random_range(n2 + 2..=n + 1);
            let t2 = t_block(chain, &x, n2, n3)?;
            let cross = t_block(chain, &t2, n1, n2)?
                .max_abs()
                .max(t_block(chain, &t, n2, n3)?.max_abs());
            out.push(CheckReport::new("t_orthogonal", cross, ALG_TOL * scale, 0.0));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{builtin_chain, BuiltinKind};
    use approx::assert_relative_eq;

    fn james(n: usize) -> Chain {
        builtin_chain(&BuiltinKind::James { n }).unwrap()
    }

    fn e(c: &Chain, m: usize) -> JVector {
        JVector::single(c, m, nalgebra::DVector::from_element(1, 1.0)).unwrap()
    }

    #[test]
    fn interval_reduction_examples() {
        let c = james(3);
        let s13 = SubsetS::new(vec![1, 3]).unwrap();
        // S ∩ I is empty, so the reduced set is {0} and both sides vanish
        let r = check_interval_reduction(&c, &e(&c, 2), IntervalI::new(2, 2), 0, &s13).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.passed());

        let s2 = SubsetS::new(vec![2]).unwrap();
        let r = check_interval_reduction(&c, &e(&c, 2), IntervalI::new(2, 2), 0, &s2).unwrap();
        assert_eq!(r.lhs, 1.0);
        assert_relative_eq!(r.rhs, 2f64.sqrt(), epsilon = 1e-15);

        let zero = JVector::zeros(&c, Tail::Zero);
        let r = check_interval_reduction(&c, &zero, IntervalI::new(2, 3), 1, &s13).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.passed());

        assert!(matches!(
            check_interval_reduction(&c, &e(&c, 1), IntervalI::new(2, 2), 0, &s13),
            Err(JsumError::SupportViolation(_))
        ));
        assert!(check_interval_reduction(&c, &e(&c, 2), IntervalI::new(2, 2), 2, &s13).is_err());
    }

    #[test]
    fn upper_examples() {
        let c = james(3);
        let r = check_upper(&c, &[e(&c, 1), e(&c, 3)]).unwrap();
        assert_relative_eq!(r.lhs, 2.0, epsilon = 1e-14);
        assert_relative_eq!(r.rhs, 6.0, epsilon = 1e-14);
        assert!(r.passed());

        let r = check_upper(&c, &[e(&c, 1), e(&c, 2)]).unwrap();
        assert_relative_eq!(r.lhs, 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.rhs, 6.0, epsilon = 1e-14);

        let x = JVector::from_scalars(&c, &[1.0, 2.0, 0.0], Tail::Zero).unwrap();
        let r = check_upper(&c, std::slice::from_ref(&x)).unwrap();
        assert_relative_eq!(r.rhs, 3.0 * r.lhs, epsilon = 1e-14);

        let y = JVector::from_scalars(&c, &[0.0, 1.0, 1.0], Tail::Zero).unwrap();
        assert_eq!(
            check_upper(&c, &[x, y]),
            Err(JsumError::OverlappingSupports { first: 0, second: 1 })
        );
    }

    #[test]
    fn lower_examples() {
        let c = james(3);
        let r = check_lower(&c, &[e(&c, 1), e(&c, 3)]).unwrap();
        assert_relative_eq!(r.lhs, 2.0, epsilon = 1e-14);
        assert_relative_eq!(r.rhs, 4.0, epsilon = 1e-14);
        assert!(r.passed());
        let r = check_lower(&c, &[e(&c, 2)]).unwrap();
        assert_relative_eq!(r.rhs, 2.0 * r.lhs, epsilon = 1e-14);
        assert_eq!(
            check_lower(&c, &[e(&c, 2), e(&c, 1)]),
            Err(JsumError::SkipViolation {
                first: 1,
                second: 0,
                gap: 1
            })
        );
    }

    #[test]
    fn stepping_examples() {
        let c = james(4);
        let x = JVector::from_scalars(&c, &[1.0, -2.0, 0.5, 3.0], Tail::Zero).unwrap();
        let s = SubsetS::new(vec![0, 2, 4]).unwrap();
        let r = check_stepping(&c, &x, &StepSequence::identity(4), &s).unwrap();
        assert_eq!(r.lhs, r.rhs);
        let r = check_stepping(&c, &x, &StepSequence::new(vec![0; 5]).unwrap(), &s).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.passed());
    }

    #[test]
    fn skipped_block_lemma_examples() {
        let c = james(3);
        // single x^1 in R(Q_2)
        let x1 = q_n(
            &c,
            &JVector::from_scalars(&c, &[1.0, -1.0, 4.0], Tail::Zero).unwrap(),
            2,
        )
        .unwrap();
        let r = check_skipped_block_lemma(&c, &[0, 2], &[x1]).unwrap();
        assert_relative_eq!(r.rhs, 2.0 * r.lhs, epsilon = 1e-14);

        // m = (0, 1, 3), x^1 = Q_1(e_1), x^2 = (I − P_1) Q_3(e_3)
        let x1 = q_n(&c, &e(&c, 1), 1).unwrap();
        let e3 = e(&c, 3).with_tail(Tail::EventuallyConstant);
        let x2 = p_interval(&c, &q_n(&c, &e3, 3).unwrap(), IntervalI::new(2, 3)).unwrap();
        let r = check_skipped_block_lemma(&c, &[0, 1, 3], &[x1.clone(), x2.clone()]).unwrap();
        // ‖Q_1 e_1‖ = 1, ‖e_3‖ = 1, x^1 + x^2 = (1, 1, 2)
        assert_relative_eq!(r.lhs, 2.0, epsilon = 1e-14);
        let sum = JVector::from_scalars(&c, &[1.0, 1.0, 2.0], Tail::Zero).unwrap();
        let expect = 2.0 * jnorm_oracle_with_limit(&c, &sum, 16).unwrap().value.powi(2);
        assert_relative_eq!(r.rhs, expect, epsilon = 1e-12);
        assert!(r.passed());

        // x^2 not vanishing on [1, m_1]
        let bad = e(&c, 1);
        assert!(matches!(
            check_skipped_block_lemma(&c, &[0, 1, 3], &[x1, bad]),
            Err(JsumError::RangeMembership { index: 2, .. })
        ));
    }

    #[test]
    fn informational_at_other_q() {
        let c = james(3).with_q(3.0).unwrap();
        let r = check_upper(&c, &[e(&c, 1), e(&c, 3)]).unwrap();
        assert_eq!(r.verdict, Verdict::Info);
    }

    #[test]
    fn suite_runs_clean_on_james_and_is_deterministic() {
        let c = james(6);
        let a = run_suite(&c, 20, 1);
        assert!(a.all_passed(), "{:?}", a.failures().next());
        assert!(a.counts.total > 0);
        assert_eq!(a, run_suite(&c, 20, 1));
        assert_eq!(run_suite(&c, 0, 1).counts.total, 0);
    }

    #[test]
    fn csv_has_header_and_one_row_per_report() {
        let r = run_suite(&james(3), 2, 9);
        let csv = r.to_csv();
        assert!(csv.starts_with("check,seed,instance,lhs,rhs,margin,pass\n"));
        assert_eq!(csv.lines().count(), r.reports.len() + 1);
    }
}
