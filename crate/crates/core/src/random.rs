//! Seeded instance generators shared by the check engine, the CLI and the tests.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::chain::Chain;
use crate::jnorm::SubsetS;
use crate::projections::{p_interval, q_n, IndexSetA, IntervalI, StepSequence};
use crate::vector::{JVector, Tail};

/// Name of the generator recorded in report headers.
pub const GENERATOR: &str = "chacha8-seed-stream/v1";

/// Independent stream `stream` of the run seeded by `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Gaussian blocks; each block is zeroed with probability 1/4 so that sparse
/// supports show up regularly.
pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, chain: &Chain, tail: Tail) -> JVector {
    random_vector_on(rng, chain, IntervalI::new(1, chain.len()), tail)
}

/// Random vector supported inside `interval` (tail zero unless the interval reaches N).
pub fn random_vector_on<R: Rng + ?Sized>(rng: &mut R, chain: &Chain, interval: IntervalI, tail: Tail) -> JVector {
    let blocks = (1..=chain.len())
        .map(|m| {
            let v = gaussian_vec(rng, chain.dim(m));
            if interval.contains(m) && rng.random_range(0..4) != 0 {
                v
            } else {
                DVector::zeros(chain.dim(m))
            }
        })
        .collect();
    let keep_tail = matches!(interval.bounds(), Some((_, hi)) if hi == chain.len());
    JVector::from_blocks(chain, blocks, if keep_tail { tail } else { Tail::Zero }).expect("dimensions follow the chain")
}

/// Vector with all blocks nonzero inside `interval`.
pub fn dense_vector_on<R: Rng + ?Sized>(rng: &mut R, chain: &Chain, interval: IntervalI) -> JVector {
    let blocks = (1..=chain.len())
        .map(|m| {
            if interval.contains(m) {
                gaussian_vec(rng, chain.dim(m))
            } else {
                DVector::zeros(chain.dim(m))
            }
        })
        .collect();
    JVector::from_blocks(chain, blocks, Tail::Zero).expect("dimensions follow the chain")
}

/// Nonempty subset of `{0, …, n}`, each index kept with probability 1/2.
pub fn random_subset<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SubsetS {
    let mut v: Vec<usize> = (0..=n).filter(|_| rng.random_bool(0.5)).collect();
    if v.is_empty() {
        v.push(rng.random_range(0..=n));
    }
    SubsetS::new(v).expect("sorted and nonempty")
}

/// Nonempty interval inside `{1, …, n}`.
pub fn random_interval<R: Rng + ?Sized>(rng: &mut R, n: usize) -> IntervalI {
    let a = rng.random_range(1..=n);
    let b = rng.random_range(1..=n);
    IntervalI::new(a.min(b), a.max(b))
}

pub fn random_step_sequence<R: Rng + ?Sized>(rng: &mut R, n: usize) -> StepSequence {
    let mut alpha = vec![0];
    for m in 1..=n {
        let prev = alpha[m - 1];
        let a = if rng.random_bool(0.5) {
            prev
        } else {
            rng.random_range(prev..=m)
        };
        alpha.push(a);
    }
    StepSequence::new(alpha).expect("nondecreasing and below the diagonal")
}

pub fn random_index_set<R: Rng + ?Sized>(rng: &mut R, n: usize) -> IndexSetA {
    IndexSetA::new((1..=n).filter(|_| rng.random_bool(0.5)))
}

/// Random intervals in `{1, …, n}` in increasing order with
/// `min I_{j+1} − max I_j >= min_gap`. `min_gap = 1` gives disjoint
/// intervals, `min_gap = 2` skipped ones. At least one interval is returned.
pub fn random_intervals<R: Rng + ?Sized>(rng: &mut R, n: usize, min_gap: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut lo = rng.random_range(1..=n.min(2));
    while lo <= n {
        let max_len = (n - lo + 1).min(4);
        let len = rng.random_range(1..=max_len);
        let hi = lo + len - 1;
        out.push((lo, hi));
        lo = hi + min_gap + rng.random_range(0..2);
    }
    out
}

/// Block vectors on random intervals (see [`random_intervals`]), each with J-norm one.
pub fn random_block_system<R: Rng + ?Sized>(rng: &mut R, chain: &Chain, min_gap: usize) -> Vec<JVector> {
    random_intervals(rng, chain.len(), min_gap)
        .into_iter()
        .map(|(lo, hi)| {
            let v = dense_vector_on(rng, chain, IntervalI::new(lo, hi));
            let norm = crate::jnorm::norm(chain, &v).expect("vector on chain");
            if norm > 0.0 {
                v.scale(1.0 / norm)
            } else {
                v
            }
        })
        .collect()
}

/// Strictly increasing `m_0 = 0 < m_1 < … <= n` together with vectors
/// `x^k = (I − P_{m_{k−1}}) Q_{m_k}(y_k)` built from Gaussian `y_k`.
pub fn random_stepped_blocks<R: Rng + ?Sized>(rng: &mut R, chain: &Chain) -> (Vec<usize>, Vec<JVector>) {
    let n = chain.len();
    let mut m = vec![0];
    let mut xs = Vec::new();
    while *m.last().expect("nonempty") < n {
        let prev = *m.last().expect("nonempty");
        let next = rng.random_range(prev + 1..=n.min(prev + 3));
        let y = dense_vector_on(rng, chain, IntervalI::new(1, n)).with_tail(Tail::EventuallyConstant);
        let qy = q_n(chain, &y, next).expect("valid index");
        let x = p_interval(chain, &qy, IntervalI::new(prev + 1, n)).expect("valid interval");
        m.push(next);
        xs.push(x);
        if rng.random_range(0..4) == 0 {
            break;
        }
    }
    (m, xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{builtin_chain, BuiltinKind};

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| rng_for(5, 1).random()).collect();
        let b: Vec<u64> = (0..4).map(|_| rng_for(5, 1).random()).collect();
        assert_eq!(a, b);
        let x: u64 = rng_for(5, 1).random();
        let y: u64 = rng_for(5, 2).random();
        assert_ne!(x, y);
    }

    #[test]
    fn interval_generators_respect_gaps() {
        let mut rng = rng_for(1, 0);
        for _ in 0..200 {
            for gap in [1, 2] {
                let iv = random_intervals(&mut rng, 9, gap);
                assert!(!iv.is_empty());
                for w in iv.windows(2) {
                    assert!(w[1].0 >= w[0].1 + gap);
                }
                assert!(iv.iter().all(|&(lo, hi)| 1 <= lo && lo <= hi && hi <= 9));
            }
        }
    }

    #[test]
    fn stepped_blocks_have_increasing_m() {
        let chain = builtin_chain(&BuiltinKind::Random {
            seed: 2,
            n: 6,
            max_dim: 2,
        })
        .unwrap();
        let mut rng = rng_for(3, 0);
        for _ in 0..50 {
            let (m, xs) = random_stepped_blocks(&mut rng, &chain);
            assert_eq!(m[0], 0);
            assert_eq!(m.len(), xs.len() + 1);
            assert!(m.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
