//! Interval projections `P_I`, stepping projections `Q_α`, `Q_A`, `Q_n`, and
//! the block projections `T_k = P_{n_{k+1}−1}(I − Q_{n_k})`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{JsumError, Result};
use crate::vector::{JVector, Tail};

/// An integer interval `{lo, …, hi}` inside `{0, …, N}`, possibly empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntervalI {
    Range { lo: usize, hi: usize },
    Empty(EmptyTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmptyTag {
    Empty,
}

impl IntervalI {
    pub const EMPTY: IntervalI = IntervalI::Empty(EmptyTag::Empty);

    pub fn new(lo: usize, hi: usize) -> Self {
        IntervalI::Range { lo, hi }
    }

    /// `{1, …, n}`, empty for `n = 0`.
    pub fn prefix(n: usize) -> Self {
        if n == 0 {
            Self::EMPTY
        } else {
            IntervalI::Range { lo: 1, hi: n }
        }
    }

    pub fn contains(&self, n: usize) -> bool {
        match *self {
            IntervalI::Range { lo, hi } => lo <= n && n <= hi,
            IntervalI::Empty(_) => false,
        }
    }

    pub fn bounds(&self) -> Option<(usize, usize)> {
        match *self {
            IntervalI::Range { lo, hi } => Some((lo, hi)),
            IntervalI::Empty(_) => None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            IntervalI::Range { lo, hi } if lo > hi || hi > n => Err(JsumError::InvalidInterval { lo, hi, n }),
            _ => Ok(()),
        }
    }
}

/// `P_I`: keep blocks inside `I`, zero the rest. The tail survives only when
/// `I` reaches N.
pub fn p_interval(chain: &Chain, x: &JVector, interval: IntervalI) -> Result<JVector> {
    x.check_on(chain)?;
    interval.validate(chain.len())?;
    let n = chain.len();
    let mut out = JVector::zeros(chain, Tail::Zero);
    for m in 1..=n {
        if interval.contains(m) {
            *out.block_mut(m) = x.block(m).clone();
        }
    }
    let keep_tail = matches!(interval.bounds(), Some((_, hi)) if hi == n);
    Ok(if keep_tail { out.with_tail(x.tail()) } else { out })
}

/// `P_n = P_{{1..n}}`.
pub fn p_n(chain: &Chain, x: &JVector, n: usize) -> Result<JVector> {
    p_interval(chain, x, IntervalI::prefix(n))
}

/// Nondecreasing `α_0, …, α_N` with `α_n <= n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct StepSequence(Vec<usize>);

impl StepSequence {
    pub fn new(alpha: Vec<usize>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(JsumError::InvalidStepSequence("empty".into()));
        }
        for (n, &a) in alpha.iter().enumerate() {
            if a > n {
                return Err(JsumError::InvalidStepSequence(format!("alpha_{n} = {a} exceeds {n}")));
            }
        }
        if let Some(i) = alpha.windows(2).position(|w| w[0] > w[1]) {
            return Err(JsumError::InvalidStepSequence(format!(
                "alpha_{i} = {} > alpha_{} = {}",
                alpha[i],
                i + 1,
                alpha[i + 1]
            )));
        }
        Ok(StepSequence(alpha))
    }

    /// `α_n = n`.
    pub fn identity(n: usize) -> Self {
        StepSequence((0..=n).collect())
    }

    /// `α_n = max(({0} ∪ A) ∩ [0, n])` for `n = 0..=N`.
    pub fn from_set(a: &IndexSetA, n: usize) -> Self {
        let mut cur = 0;
        let alpha = (0..=n)
            .map(|m| {
                if a.contains(m) {
                    cur = m;
                }
                cur
            })
            .collect();
        StepSequence(alpha)
    }

    pub fn get(&self, n: usize) -> usize {
        self.0[n]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Truncation length covered, i.e. `α` has `N + 1` entries.
    pub fn len(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<Vec<usize>> for StepSequence {
    type Error = JsumError;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        StepSequence::new(v)
    }
}

impl From<StepSequence> for Vec<usize> {
    fn from(s: StepSequence) -> Vec<usize> {
        s.0
    }
}

/// `Q_α(x)_n = φ_{α_n}^n(x_{α_n})`.
///
/// Past N the sequence `α` is read as frozen at `α_N`, or as the identity when
/// `α_N = N`; the output tail follows from that.
pub fn q_alpha(chain: &Chain, x: &JVector, alpha: &StepSequence) -> Result<JVector> {
    x.check_on(chain)?;
    let n = chain.len();
    if alpha.len() != n {
        return Err(JsumError::InvalidStepSequence(format!(
            "length {} for N = {n}",
            alpha.len() + 1
        )));
    }
    let mut out = JVector::zeros(chain, Tail::Zero);
    for m in 1..=n {
        let a = alpha.get(m);
        if a > 0 {
            *out.block_mut(m) = chain.push_forward(a, m, x.block(a));
        }
    }
    let tail = match alpha.get(n) {
        0 => Tail::Zero,
        a if a == n => x.tail(),
        _ => Tail::EventuallyConstant,
    };
    Ok(out.with_tail(tail))
}

/// An index set `A ⊆ {1, …, N}`, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct IndexSetA(Vec<usize>);

impl IndexSetA {
    pub fn new<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        IndexSetA(v)
    }

    /// `{1, …, n}`.
    pub fn prefix(n: usize) -> Self {
        IndexSetA((1..=n).collect())
    }

    pub fn contains(&self, n: usize) -> bool {
        self.0.binary_search(&n).is_ok()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match (self.0.first(), self.0.last()) {
            (Some(0), _) => Err(JsumError::IndexOutOfRange { index: 0, max: n }),
            (_, Some(&m)) if m > n => Err(JsumError::IndexOutOfRange { index: m, max: n }),
            _ => Ok(()),
        }
    }
}

impl From<Vec<usize>> for IndexSetA {
    fn from(v: Vec<usize>) -> Self {
        IndexSetA::new(v)
    }
}

impl From<IndexSetA> for Vec<usize> {
    fn from(a: IndexSetA) -> Vec<usize> {
        a.0
    }
}

/// `A <<< B`: some integer lies strictly between them, `min B − max A >= 2`.
pub fn is_skipped(a: &[usize], b: &[usize]) -> bool {
    match (a.iter().max(), b.iter().min()) {
        (Some(&ma), Some(&mb)) => mb as i64 - ma as i64 >= 2,
        _ => false,
    }
}

/// `Q_A = Q_{α_A}`.
pub fn q_set(chain: &Chain, x: &JVector, a: &IndexSetA) -> Result<JVector> {
    a.validate(chain.len())?;
    q_alpha(chain, x, &StepSequence::from_set(a, chain.len()))
}

/// `Q_n = Q_{{1..n}}`: `(x_1, …, x_n, φ_n(x_n), φ_n^{n+2}(x_n), …)`.
pub fn q_n(chain: &Chain, x: &JVector, n: usize) -> Result<JVector> {
    q_set(chain, x, &IndexSetA::prefix(n))
}

fn check_block_indices(chain: &Chain, n_k: usize, n_next: usize) -> Result<()> {
    if n_next <= n_k + 1 {
        return Err(JsumError::ShortBlock { n_k, n_next });
    }
    if n_next - 1 > chain.len() {
        return Err(JsumError::IndexOutOfRange {
            index: n_next - 1,
            max: chain.len(),
        });
    }
    Ok(())
}

/// `T(x)_m = x_m − φ_{n_k}^m(x_{n_k})` for `n_k < m < n_next`, zero elsewhere.
pub fn t_block(chain: &Chain, x: &JVector, n_k: usize, n_next: usize) -> Result<JVector> {
    x.check_on(chain)?;
    check_block_indices(chain, n_k, n_next)?;
    let mut out = JVector::zeros(chain, Tail::Zero);
    let base = x.block(n_k);
    let mut pushed: DVector<f64> = base.clone();
    for m in n_k + 1..n_next {
        pushed = if n_k == 0 {
            DVector::zeros(chain.dim(m))
        } else {
            chain.map(m - 1) * pushed
        };
        *out.block_mut(m) = x.block(m) - &pushed;
    }
    Ok(out)
}

/// `P_{n_next−1}(I − Q_{n_k})` evaluated literally as `P x − P Q x`.
/// Only blocks are compared against [`t_block`]; the result carries a zero tail.
pub fn t_block_by_composition(chain: &Chain, x: &JVector, n_k: usize, n_next: usize) -> Result<JVector> {
    check_block_indices(chain, n_k, n_next)?;
    let px = p_n(chain, x, n_next - 1)?.with_tail(Tail::Zero);
    let pqx = p_n(chain, &q_n(chain, x, n_k)?, n_next - 1)?.with_tail(Tail::Zero);
    px.sub(&pqx)
}

/// Projection addressable from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProjectionSpec {
    P(IntervalI),
    QA(IndexSetA),
    T { nk: usize, nnext: usize },
}

pub fn apply_projection(chain: &Chain, x: &JVector, spec: &ProjectionSpec) -> Result<JVector> {
    match spec {
        ProjectionSpec::P(i) => p_interval(chain, x, *i),
        ProjectionSpec::QA(a) => q_set(chain, x, a),
        ProjectionSpec::T { nk, nnext } => t_block(chain, x, *nk, *nnext),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{builtin_chain, BuiltinKind};

    fn james(n: usize) -> Chain {
        builtin_chain(&BuiltinKind::James { n }).unwrap()
    }

    fn scalars(x: &JVector) -> Vec<f64> {
        (1..=x.len()).map(|n| x.block(n)[0]).collect()
    }

    #[test]
    fn interval_examples() {
        let c = james(3);
        let x = JVector::from_scalars(&c, &[1.0, 1.0, 1.0], Tail::Zero).unwrap();
        assert_eq!(p_interval(&c, &x, IntervalI::new(1, 3)).unwrap(), x);
        assert!(p_interval(&c, &x, IntervalI::EMPTY).unwrap().is_zero());
        assert_eq!(
            scalars(&p_interval(&c, &x, IntervalI::new(2, 2)).unwrap()),
            vec![0.0, 1.0, 0.0]
        );
        assert!(p_interval(&c, &x, IntervalI::new(2, 4)).is_err());
        assert!(p_interval(&c, &x, IntervalI::new(3, 2)).is_err());

        let ec = x.clone().with_tail(Tail::EventuallyConstant);
        assert_eq!(p_interval(&c, &ec, IntervalI::new(1, 2)).unwrap().tail(), Tail::Zero);
        assert_eq!(
            p_interval(&c, &ec, IntervalI::new(2, 3)).unwrap().tail(),
            Tail::EventuallyConstant
        );
    }

    #[test]
    fn stepping_examples() {
        let c = james(3);
        let x = JVector::from_scalars(&c, &[5.0, 7.0, 9.0], Tail::Zero).unwrap();
        assert_eq!(q_alpha(&c, &x, &StepSequence::identity(3)).unwrap(), x);
        assert!(q_alpha(&c, &x, &StepSequence::new(vec![0; 4]).unwrap())
            .unwrap()
            .is_zero());
        let a = StepSequence::new(vec![0, 0, 2, 2]).unwrap();
        assert_eq!(scalars(&q_alpha(&c, &x, &a).unwrap()), vec![0.0, 7.0, 7.0]);
    }

    #[test]
    fn step_sequence_validation() {
        assert!(StepSequence::new(vec![0, 2]).is_err());
        assert!(StepSequence::new(vec![0, 1, 0]).is_err());
        assert!(StepSequence::new(vec![1]).is_err());
        let a = IndexSetA::new([2, 4]);
        assert_eq!(StepSequence::from_set(&a, 5).as_slice(), &[0, 0, 2, 2, 4, 4]);
    }

    #[test]
    fn q_set_examples() {
        let c = james(3);
        let x = JVector::from_scalars(&c, &[1.0, 2.0, 3.0], Tail::Zero).unwrap();
        assert_eq!(q_set(&c, &x, &IndexSetA::new([1, 2, 3])).unwrap(), x);
        assert_eq!(
            scalars(&q_set(&c, &x, &IndexSetA::new([2])).unwrap()),
            vec![0.0, 2.0, 2.0]
        );
        assert!(q_set(&c, &x, &IndexSetA::default()).unwrap().is_zero());
        let q1 = q_n(&c, &x, 1).unwrap();
        assert_eq!(scalars(&q1), vec![1.0, 1.0, 1.0]);
        assert_eq!(q1.tail(), Tail::EventuallyConstant);
        assert!(q_set(&c, &x, &IndexSetA::new([0])).is_err());
    }

    #[test]
    fn t_block_examples() {
        let c = james(3);
        let x = JVector::from_scalars(&c, &[1.0, 4.0, 9.0], Tail::Zero).unwrap();
        let t = t_block(&c, &x, 1, 3).unwrap();
        assert_eq!(scalars(&t), vec![0.0, 3.0, 0.0]);
        assert_eq!(t_block(&c, &t, 1, 3).unwrap(), t);
        assert!(t_block(&c, &JVector::zeros(&c, Tail::Zero), 1, 3).unwrap().is_zero());
        assert_eq!(t_block(&c, &x, 1, 2), Err(JsumError::ShortBlock { n_k: 1, n_next: 2 }));
        assert!(t_block(&c, &x, 1, 5).is_err());
        assert_eq!(t_block_by_composition(&c, &x, 1, 3).unwrap(), t);
        // n_next - 1 = N is allowed
        assert_eq!(scalars(&t_block(&c, &x, 1, 4).unwrap()), vec![0.0, 3.0, 8.0]);
    }

    #[test]
    fn skipped_relation() {
        assert!(is_skipped(&[1, 2], &[4]));
        assert!(!is_skipped(&[1, 2], &[3]));
        assert!(!is_skipped(&[], &[3]));
    }

    #[test]
    fn projection_spec_json() {
        let p: ProjectionSpec = serde_json::from_str(r#"{"P":{"lo":1,"hi":2}}"#).unwrap();
        assert_eq!(p, ProjectionSpec::P(IntervalI::new(1, 2)));
        let e: ProjectionSpec = serde_json::from_str(r#"{"P":"empty"}"#).unwrap();
        assert_eq!(e, ProjectionSpec::P(IntervalI::EMPTY));
        let q: ProjectionSpec = serde_json::from_str(r#"{"QA":[3,1]}"#).unwrap();
        assert_eq!(q, ProjectionSpec::QA(IndexSetA::new([1, 3])));
        let t: ProjectionSpec = serde_json::from_str(r#"{"T":{"nk":1,"nnext":3}}"#).unwrap();
        assert_eq!(t, ProjectionSpec::T { nk: 1, nnext: 3 });
    }
}
