//! The seminorms σ(x, S), ρ(x, S) and the J-norm.
//!
//! `‖x‖_J = 2^{-1/q} · sup_S ρ(x, S)` where S runs over nonempty subsets of
//! `{0, …, N}`. The supremum is computed two ways: exhaustive enumeration
//! ([`jnorm_oracle`]) and a longest-path dynamic program over the DAG on
//! `{0, …, N}` ([`jnorm`]).

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{JsumError, Result};
use crate::vector::JVector;

pub const DEFAULT_ORACLE_LIMIT: usize = 16;

/// A nonempty strictly increasing index set `p_0 < … < p_k` inside `{0, …, N}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SubsetS(Vec<usize>);

impl SubsetS {
    /// Validate a strictly increasing, nonempty sequence.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(JsumError::InvalidSubset("empty".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(JsumError::InvalidSubset(format!(
                "{indices:?} is not strictly increasing"
            )));
        }
        Ok(SubsetS(indices))
    }

    /// Sort and deduplicate arbitrary indices.
    pub fn from_unsorted<I: IntoIterator<Item = usize>>(indices: I) -> Result<Self> {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self::new(v)
    }

    pub fn within(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&m) if m > n => Err(JsumError::IndexOutOfRange { index: m, max: n }),
            _ => Ok(()),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn min_index(&self) -> usize {
        self.0[0]
    }

    pub fn max_index(&self) -> usize {
        *self.0.last().expect("nonempty")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Set union.
    pub fn union(&self, other: &SubsetS) -> SubsetS {
        SubsetS::from_unsorted(self.0.iter().chain(&other.0).copied()).expect("union of nonempty sets")
    }
}

impl TryFrom<Vec<usize>> for SubsetS {
    type Error = JsumError;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        SubsetS::new(v)
    }
}

impl From<SubsetS> for Vec<usize> {
    fn from(s: SubsetS) -> Vec<usize> {
        s.0
    }
}

impl fmt::Display for SubsetS {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Result of a J-norm evaluation together with the index set attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormCertificate {
    pub value: f64,
    pub witness: SubsetS,
    pub rho_value: f64,
}

fn check_inputs(chain: &Chain, x: &JVector, s: &SubsetS) -> Result<()> {
    x.check_on(chain)?;
    s.within(chain.len())
}

fn qth_root(sum: f64, q: f64) -> f64 {
    if q == 2.0 {
        sum.sqrt()
    } else {
        sum.powf(1.0 / q)
    }
}

fn qth_power(t: f64, q: f64) -> f64 {
    if q == 2.0 {
        t * t
    } else {
        t.powf(q)
    }
}

/// 2^{-1/q}, the prefactor relating sup ρ to the J-norm.
pub fn prefactor(q: f64) -> f64 {
    if q == 2.0 {
        std::f64::consts::FRAC_1_SQRT_2
    } else {
        2f64.powf(-1.0 / q)
    }
}

/// ‖φ_p^r(x_p) − x_r‖_r.
fn increment(chain: &Chain, x: &JVector, p: usize, r: usize) -> f64 {
    let pushed = chain.push_forward(p, r, x.block(p));
    chain.block_norm(r, &(pushed - x.block(r)))
}

fn sigma_power(chain: &Chain, x: &JVector, s: &SubsetS) -> f64 {
    s.indices()
        .windows(2)
        .map(|w| qth_power(increment(chain, x, w[0], w[1]), chain.q()))
        .sum()
}

fn rho_power(chain: &Chain, x: &JVector, s: &SubsetS) -> f64 {
    let last = s.max_index();
    sigma_power(chain, x, s) + qth_power(chain.block_norm(last, x.block(last)), chain.q())
}

/// σ(x, S) = (Σ_i ‖φ_{p_{i−1}}^{p_i}(x_{p_{i−1}}) − x_{p_i}‖^q)^{1/q}.
pub fn sigma(chain: &Chain, x: &JVector, s: &SubsetS) -> Result<f64> {
    check_inputs(chain, x, s)?;
    Ok(qth_root(sigma_power(chain, x, s), chain.q()))
}

/// ρ(x, S): σ with the final term ‖x_{p_k}‖^q added under the root.
pub fn rho(chain: &Chain, x: &JVector, s: &SubsetS) -> Result<f64> {
    check_inputs(chain, x, s)?;
    Ok(qth_root(rho_power(chain, x, s), chain.q()))
}

pub fn jnorm_oracle(chain: &Chain, x: &JVector) -> Result<NormCertificate> {
    jnorm_oracle_with_limit(chain, x, DEFAULT_ORACLE_LIMIT)
}

/// Exhaustive maximisation of ρ over all `2^{N+1} − 1` subsets of `{0, …, N}`.
/// Exact ties go to the lexicographically smallest subset.
pub fn jnorm_oracle_with_limit(chain: &Chain, x: &JVector, limit: usize) -> Result<NormCertificate> {
    x.check_on(chain)?;
    let n = chain.len();
    if n > limit {
        return Err(JsumError::OracleLimit { n, limit });
    }
    let q = chain.q();
    let mut edge = vec![vec![0.0; n + 1]; n + 1];
    for (p, row) in edge.iter_mut().enumerate() {
        for (r, w) in row.iter_mut().enumerate().skip(p + 1) {
            *w = qth_power(increment(chain, x, p, r), q);
        }
    }
    let fin: Vec<f64> = (0..=n).map(|r| qth_power(chain.block_norm(r, x.block(r)), q)).collect();

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut subset = Vec::with_capacity(n + 1);
    for mask in 1u64..(1u64 << (n + 1)) {
        subset.clear();
        subset.extend((0..=n).filter(|i| mask & (1 << i) != 0));
        let mut total = 0.0;
        for w in subset.windows(2) {
            total += edge[w[0]][w[1]];
        }
        total += fin[*subset.last().expect("nonempty")];
        let better = match &best {
            None => true,
            Some((v, s)) => total > *v || (total == *v && subset < *s),
        };
        if better {
            best = Some((total, subset.clone()));
        }
    }
    let (total, witness) = best.expect("at least one subset");
    let rho_value = qth_root(total, q);
    Ok(NormCertificate {
        value: prefactor(q) * rho_value,
        witness: SubsetS(witness),
        rho_value,
    })
}

/// J-norm by longest path on the DAG `0 → 1 → … → N` (all forward edges).
///
/// Edge `(p, r)` weighs `‖φ_p^r(x_p) − x_r‖^q`, ending at `r` earns
/// `‖x_r‖^q`. Paths are scored from the back, `g[r] = max(end_r, max_s w(r,s) + g[s])`,
/// so the lexicographically smallest optimal path can be read off greedily.
pub fn jnorm(chain: &Chain, x: &JVector) -> Result<NormCertificate> {
    x.check_on(chain)?;
    let n = chain.len();
    let q = chain.q();

    // edge weights, one row at a time, pushing x_p forward one map per step
    let mut edge = vec![vec![0.0; n + 1]; n + 1];
    for (r, w) in edge[0].iter_mut().enumerate().skip(1) {
        *w = qth_power(chain.block_norm(r, x.block(r)), q);
    }
    for (p, row) in edge.iter_mut().enumerate().take(n).skip(1) {
        let mut v = x.block(p).clone();
        for (r, w) in row.iter_mut().enumerate().skip(p + 1) {
            v = chain.map(r - 1) * v;
            *w = qth_power(chain.block_norm(r, &(&v - x.block(r))), q);
        }
    }
    let fin: Vec<f64> = (0..=n).map(|r| qth_power(chain.block_norm(r, x.block(r)), q)).collect();

    let mut score = vec![0.0; n + 1];
    let mut next: Vec<Option<usize>> = vec![None; n + 1];
    for r in (0..=n).rev() {
        let mut best = fin[r];
        let mut choice = None;
        for s in r + 1..=n {
            let cand = edge[r][s] + score[s];
            if cand > best {
                best = cand;
                choice = Some(s);
            }
        }
        score[r] = best;
        next[r] = choice;
    }

    let total = score.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let start = score.iter().position(|&v| v == total).expect("max is attained");
    let mut witness = vec![start];
    let mut at = start;
    while let Some(s) = next[at] {
        witness.push(s);
        at = s;
    }
    let rho_value = qth_root(total, q);
    Ok(NormCertificate {
        value: prefactor(q) * rho_value,
        witness: SubsetS(witness),
        rho_value,
    })
}

/// Convenience: the J-norm value.
pub fn norm(chain: &Chain, x: &JVector) -> Result<f64> {
    Ok(jnorm(chain, x)?.value)
}

/// A functional acting blockwise, `<f, y> = Σ_n <f_n, y_n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFunctional {
    blocks: Vec<DVector<f64>>,
    witness: SubsetS,
    norm_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualFunctionalData {
    pub blocks: Vec<Vec<f64>>,
    pub witness: SubsetS,
    pub norm_bound: f64,
}

impl DualFunctional {
    pub fn apply(&self, y: &JVector) -> f64 {
        self.blocks.iter().zip(y.blocks()).map(|(f, v)| f.dot(v)).sum()
    }

    pub fn block(&self, n: usize) -> &DVector<f64> {
        &self.blocks[n]
    }

    pub fn witness(&self) -> &SubsetS {
        &self.witness
    }

    /// Certified upper bound on the dual J-norm.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn scale(&self, a: f64) -> DualFunctional {
        DualFunctional {
            blocks: self.blocks.iter().map(|b| b * a).collect(),
            witness: self.witness.clone(),
            norm_bound: self.norm_bound * a.abs(),
        }
    }

    pub fn data(&self) -> DualFunctionalData {
        DualFunctionalData {
            blocks: self.blocks[1..].iter().map(|b| b.iter().copied().collect()).collect(),
            witness: self.witness.clone(),
            norm_bound: self.norm_bound,
        }
    }
}

/// Supporting functional at `x`: `2^{-1/q}` times a subgradient of `ρ(·, S*)`
/// at `x`, where `S*` is the witness of `‖x‖_J`.
///
/// With `u_i` the increments and final block along `S*` and `g_i` unit dual
/// vectors with `<g_i, u_i> = ‖u_i‖`, the gradient is
/// `ρ^{1−q} Σ_i ‖u_i‖^{q−1} A_iᵀ g_i`. Hölder's inequality gives
/// `|<f, y>| ≤ 2^{-1/q} ρ(y, S*) ≤ ‖y‖_J` for every q, so the dual norm is at most one.
pub fn norming_functional(chain: &Chain, x: &JVector) -> Result<DualFunctional> {
    let cert = jnorm(chain, x)?;
    if cert.value == 0.0 {
        return Err(JsumError::ZeroVector);
    }
    let q = chain.q();
    let idx = cert.witness.indices();
    let mut blocks: Vec<DVector<f64>> = (0..=chain.len()).map(|n| DVector::zeros(chain.dim(n))).collect();

    let rho_pow = rho_power(chain, x, &cert.witness);
    let rho_val = qth_root(rho_pow, q);
    let outer = prefactor(q) * rho_val.powf(1.0 - q);

    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        let u = chain.push_forward(a, b, x.block(a)) - x.block(b);
        let nu = chain.block_norm(b, &u);
        if nu == 0.0 {
            continue;
        }
        let g = chain.space(b).p.subgradient(&u) * (outer * nu.powf(q - 1.0));
        if a > 0 {
            blocks[a] += chain.pull_back(a, b, &g);
        }
        blocks[b] -= g;
    }
    let last = cert.witness.max_index();
    let u = x.block(last);
    let nu = chain.block_norm(last, u);
    if nu > 0.0 {
        blocks[last] += chain.space(last).p.subgradient(u) * (outer * nu.powf(q - 1.0));
    }
    Ok(DualFunctional {
        blocks,
        witness: cert.witness,
        norm_bound: 1.0,
    })
}
