//! Elements of the truncated product `X_0 × X_1 × … × X_N` with a tail convention.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{JsumError, Result};

/// How the sequence continues past the truncation index N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    /// `x_n = 0` for `n > N`: a finitely supported element.
    #[default]
    Zero,
    /// `x_n = φ_N^n(x_N)` for `n > N`: an eventually constant sequence.
    EventuallyConstant,
}

/// A vector on a chain. Block 0 is the empty block of the trivial space.
#[derive(Debug, Clone, PartialEq)]
pub struct JVector {
    blocks: Vec<DVector<f64>>,
    tail: Tail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JVectorData {
    pub blocks: Vec<Vec<f64>>,
    #[serde(default)]
    pub tail: Tail,
}

impl JVector {
    pub fn zeros(chain: &Chain, tail: Tail) -> Self {
        let mut blocks = Vec::with_capacity(chain.len() + 1);
        blocks.push(DVector::zeros(0));
        blocks.extend((1..=chain.len()).map(|n| DVector::zeros(chain.dim(n))));
        JVector { blocks, tail }
    }

    /// Build from blocks `x_1, …, x_N`.
    pub fn from_blocks(chain: &Chain, blocks: Vec<DVector<f64>>, tail: Tail) -> Result<Self> {
        if blocks.len() != chain.len() {
            return Err(JsumError::BlockCount {
                expected: chain.len(),
                got: blocks.len(),
            });
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.len() != chain.dim(i + 1) {
                return Err(JsumError::DimensionMismatch {
                    expected: chain.dim(i + 1),
                    got: b.len(),
                });
            }
        }
        let mut all = Vec::with_capacity(blocks.len() + 1);
        all.push(DVector::zeros(0));
        all.extend(blocks);
        Ok(JVector { blocks: all, tail })
    }

    pub fn from_vecs(chain: &Chain, blocks: &[Vec<f64>], tail: Tail) -> Result<Self> {
        Self::from_blocks(
            chain,
            blocks.iter().map(|b| DVector::from_column_slice(b)).collect(),
            tail,
        )
    }

    pub fn from_data(chain: &Chain, data: &JVectorData) -> Result<Self> {
        Self::from_vecs(chain, &data.blocks, data.tail)
    }

    /// Scalar chains: one coordinate per block.
    pub fn from_scalars(chain: &Chain, values: &[f64], tail: Tail) -> Result<Self> {
        let blocks: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        Self::from_vecs(chain, &blocks, tail)
    }

    /// The vector supported on the single index `m` with value `v`.
    pub fn single(chain: &Chain, m: usize, v: DVector<f64>) -> Result<Self> {
        if m == 0 || m > chain.len() {
            return Err(JsumError::IndexOutOfRange {
                index: m,
                max: chain.len(),
            });
        }
        if v.len() != chain.dim(m) {
            return Err(JsumError::DimensionMismatch {
                expected: chain.dim(m),
                got: v.len(),
            });
        }
        let mut x = JVector::zeros(chain, Tail::Zero);
        x.blocks[m] = v;
        Ok(x)
    }

    /// Flattened coordinates of blocks `1..=N` in chain order.
    pub fn from_flat(chain: &Chain, flat: &DVector<f64>, tail: Tail) -> Result<Self> {
        if flat.len() != chain.total_dim() {
            return Err(JsumError::DimensionMismatch {
                expected: chain.total_dim(),
                got: flat.len(),
            });
        }
        let blocks = (1..=chain.len())
            .map(|n| flat.rows(chain.offset(n), chain.dim(n)).into_owned())
            .collect();
        Self::from_blocks(chain, blocks, tail)
    }

    pub fn data(&self) -> JVectorData {
        JVectorData {
            blocks: self.blocks[1..].iter().map(|b| b.iter().copied().collect()).collect(),
            tail: self.tail,
        }
    }

    /// Truncation length N.
    pub fn len(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.len() <= 1
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }

    /// Block `x_n`, `0 <= n <= N`.
    pub fn block(&self, n: usize) -> &DVector<f64> {
        &self.blocks[n]
    }

    pub(crate) fn block_mut(&mut self, n: usize) -> &mut DVector<f64> {
        &mut self.blocks[n]
    }

    pub fn blocks(&self) -> &[DVector<f64>] {
        &self.blocks
    }

    pub fn flatten(&self) -> DVector<f64> {
        let data: Vec<f64> = self.blocks.iter().flat_map(|b| b.iter().copied()).collect();
        DVector::from_vec(data)
    }

    /// Check that block dimensions agree with the chain.
    pub fn check_on(&self, chain: &Chain) -> Result<()> {
        if self.len() != chain.len() {
            return Err(JsumError::BlockCount {
                expected: chain.len(),
                got: self.len(),
            });
        }
        for n in 1..=chain.len() {
            if self.blocks[n].len() != chain.dim(n) {
                return Err(JsumError::DimensionMismatch {
                    expected: chain.dim(n),
                    got: self.blocks[n].len(),
                });
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|&v| v == 0.0))
    }

    pub fn scale(&self, a: f64) -> JVector {
        JVector {
            blocks: self.blocks.iter().map(|b| b * a).collect(),
            tail: self.tail,
        }
    }

    /// `self + a·other`. Mixing tails is allowed when the zero-tail operand
    /// vanishes at N, so that the sum is again eventually constant.
    pub fn axpy(&self, a: f64, other: &JVector) -> Result<JVector> {
        if self.len() != other.len() {
            return Err(JsumError::BlockCount {
                expected: self.len(),
                got: other.len(),
            });
        }
        let tail = combine_tails(self, other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(x, y)| {
                if x.len() != y.len() {
                    Err(JsumError::DimensionMismatch {
                        expected: x.len(),
                        got: y.len(),
                    })
                } else {
                    Ok(x + y * a)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(JVector { blocks, tail })
    }

    pub fn add(&self, other: &JVector) -> Result<JVector> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &JVector) -> Result<JVector> {
        self.axpy(-1.0, other)
    }

    /// Largest coordinatewise absolute difference over blocks `1..=N`.
    pub fn max_abs_diff(&self, other: &JVector) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(x, y)| x.iter().zip(y.iter()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(|b| b.amax()).fold(0.0, f64::max)
    }

    /// Smallest and largest indices carrying a nonzero block; `None` for zero blocks.
    pub fn support_hull(&self) -> Option<(usize, usize)> {
        let nz: Vec<usize> = (1..self.blocks.len())
            .filter(|&n| self.blocks[n].iter().any(|&v| v != 0.0))
            .collect();
        Some((*nz.first()?, *nz.last()?))
    }

    /// Whether the support reaches past N (nonzero eventually constant tail).
    pub fn unbounded_support(&self) -> bool {
        self.tail == Tail::EventuallyConstant && self.blocks[self.len()].iter().any(|&v| v != 0.0)
    }

    /// Restate this vector on `extended`, a chain whose first N spaces agree
    /// with the original. Zero tails stay zero; eventually constant tails are
    /// pushed forward along the new maps.
    pub fn extend_to(&self, extended: &Chain) -> Result<JVector> {
        let n = self.len();
        if extended.len() < n {
            return Err(JsumError::BlockCount {
                expected: n,
                got: extended.len(),
            });
        }
        for m in 1..=n {
            if extended.dim(m) != self.blocks[m].len() {
                return Err(JsumError::DimensionMismatch {
                    expected: extended.dim(m),
                    got: self.blocks[m].len(),
                });
            }
        }
        let mut blocks = self.blocks.clone();
        for m in n + 1..=extended.len() {
            let next = match self.tail {
                Tail::Zero => DVector::zeros(extended.dim(m)),
                Tail::EventuallyConstant => extended.push_forward(n, m, &self.blocks[n]),
            };
            blocks.push(next);
        }
        Ok(JVector {
            blocks,
            tail: self.tail,
        })
    }
}

fn combine_tails(x: &JVector, y: &JVector) -> Result<Tail> {
    let n = x.len();
    let vanishes = |v: &JVector| v.blocks[n].iter().all(|&c| c == 0.0);
    match (x.tail, y.tail) {
        (Tail::Zero, Tail::Zero) => Ok(Tail::Zero),
        (Tail::EventuallyConstant, Tail::EventuallyConstant) => Ok(Tail::EventuallyConstant),
        (Tail::Zero, Tail::EventuallyConstant) if vanishes(x) => Ok(Tail::EventuallyConstant),
        (Tail::EventuallyConstant, Tail::Zero) if vanishes(y) => Ok(Tail::EventuallyConstant),
        _ => Err(JsumError::IncompatibleTails),
    }
}

/// Truncated representative of the Ω-seminorm, `‖x_N‖_N`.
///
/// The true seminorm is the limit of the nonincreasing sequence `‖x_n‖_n`;
/// at truncation only its N-th term is available.
pub fn omega_seminorm(chain: &Chain, x: &JVector) -> Result<f64> {
    x.check_on(chain)?;
    if x.tail != Tail::EventuallyConstant {
        return Err(JsumError::ZeroTailOmega);
    }
    Ok(chain.block_norm(chain.len(), x.block(chain.len())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{builtin_chain, BuiltinKind, ValidationMode};
    use crate::space::CoordinateSpace;
    use nalgebra::DMatrix;

    fn james(n: usize) -> Chain {
        builtin_chain(&BuiltinKind::James { n }).unwrap()
    }

    #[test]
    fn omega_examples() {
        let c = james(3);
        let x = JVector::from_scalars(&c, &[3.0, 3.0, 3.0], Tail::EventuallyConstant).unwrap();
        assert_eq!(omega_seminorm(&c, &x).unwrap(), 3.0);
        assert_eq!(
            omega_seminorm(&c, &JVector::zeros(&c, Tail::EventuallyConstant)).unwrap(),
            0.0
        );

        let half = Chain::new(
            vec![CoordinateSpace::euclidean(1); 2],
            vec![DMatrix::from_element(1, 1, 0.5)],
            2.0,
            ValidationMode::Spectral,
            None,
        )
        .unwrap();
        let y = JVector::from_scalars(&half, &[4.0, 2.0], Tail::EventuallyConstant).unwrap();
        assert_eq!(omega_seminorm(&half, &y).unwrap(), 2.0);
        let z = JVector::from_scalars(&half, &[4.0, 2.0], Tail::Zero).unwrap();
        assert_eq!(omega_seminorm(&half, &z), Err(JsumError::ZeroTailOmega));
    }

    #[test]
    fn tail_arithmetic() {
        let c = james(3);
        let ec = JVector::from_scalars(&c, &[1.0, 1.0, 1.0], Tail::EventuallyConstant).unwrap();
        let z_ok = JVector::from_scalars(&c, &[1.0, 2.0, 0.0], Tail::Zero).unwrap();
        let z_bad = JVector::from_scalars(&c, &[0.0, 0.0, 1.0], Tail::Zero).unwrap();
        assert_eq!(ec.add(&z_ok).unwrap().tail(), Tail::EventuallyConstant);
        assert_eq!(ec.add(&z_bad), Err(JsumError::IncompatibleTails));
        assert_eq!(z_ok.add(&z_bad).unwrap().tail(), Tail::Zero);
    }

    #[test]
    fn flat_round_trip_and_dimension_errors() {
        let c = builtin_chain(&BuiltinKind::Random {
            seed: 3,
            n: 4,
            max_dim: 3,
        })
        .unwrap();
        let flat = DVector::from_fn(c.total_dim(), |i, _| i as f64);
        let x = JVector::from_flat(&c, &flat, Tail::Zero).unwrap();
        assert_eq!(x.flatten(), flat);
        assert!(JVector::from_vecs(&c, &[vec![1.0]], Tail::Zero).is_err());
    }

    #[test]
    fn extension_pushes_eventually_constant_tails_forward() {
        let c = james(2);
        let x = JVector::from_scalars(&c, &[1.0, 2.0], Tail::EventuallyConstant).unwrap();
        let e = x.extend_to(&c.extend_identity(3)).unwrap();
        assert_eq!(e.len(), 5);
        assert_eq!(e.block(5)[0], 2.0);
        let z = x
            .clone()
            .with_tail(Tail::Zero)
            .extend_to(&c.extend_identity(3))
            .unwrap();
        assert_eq!(z.block(5)[0], 0.0);
    }
}
