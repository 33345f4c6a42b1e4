//! Chains of coordinate spaces joined by contractive connecting maps.
//!
//! Spaces are indexed `1..=N`; index 0 is the trivial space, represented
//! implicitly (every map out of it is zero).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{JsumError, Result};
use crate::space::CoordinateSpace;

/// Slack allowed on measured operator norms in spectral mode.
pub const CONTRACTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ValidationMode {
    /// Largest singular value of each map is measured; needs `p = 2` on both ends.
    #[default]
    Spectral,
    /// Contractivity is attested by the caller and recorded, not measured.
    Asserted,
}

fn default_q() -> f64 {
    2.0
}

/// Serializable chain description, the JSON form accepted by [`build_chain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDescription {
    #[serde(rename = "N")]
    pub n: usize,
    pub spaces: Vec<CoordinateSpace>,
    pub maps: Vec<Vec<Vec<f64>>>,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub validation: ValidationMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attestation: Option<String>,
}

/// A validated finite chain `(X_1, …, X_N; φ_1, …, φ_{N−1})` with outer exponent `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    spaces: Vec<CoordinateSpace>,
    maps: Vec<DMatrix<f64>>,
    q: f64,
    validation: ValidationMode,
    attestation: Option<String>,
    measured_norms: Vec<f64>,
}

pub fn build_chain(desc: &ChainDescription) -> Result<Chain> {
    if desc.n != desc.spaces.len() {
        return Err(JsumError::InvalidSpace {
            index: desc.spaces.len(),
            reason: format!("N = {} but {} spaces given", desc.n, desc.spaces.len()),
        });
    }
    let maps = desc
        .maps
        .iter()
        .enumerate()
        .map(|(i, rows)| matrix_from_rows(i + 1, rows))
        .collect::<Result<Vec<_>>>()?;
    Chain::new(
        desc.spaces.clone(),
        maps,
        desc.q,
        desc.validation,
        desc.attestation.clone(),
    )
}

fn matrix_from_rows(index: usize, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(JsumError::ShapeMismatch {
            index,
            rows: nrows,
            cols: bad.len(),
            expected_rows: nrows,
            expected_cols: ncols,
        });
    }
    Ok(DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]))
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

impl Chain {
    pub fn new(
        spaces: Vec<CoordinateSpace>,
        maps: Vec<DMatrix<f64>>,
        q: f64,
        validation: ValidationMode,
        attestation: Option<String>,
    ) -> Result<Self> {
        if spaces.is_empty() {
            return Err(JsumError::EmptyChain);
        }
        if !(q > 1.0 && q.is_finite()) {
            return Err(JsumError::InvalidOuterExponent(q));
        }
        for (i, s) in spaces.iter().enumerate() {
            if s.dim == 0 {
                return Err(JsumError::InvalidSpace {
                    index: i + 1,
                    reason: "dimension must be positive".into(),
                });
            }
        }
        if maps.len() != spaces.len() - 1 {
            return Err(JsumError::MapCount {
                spaces: spaces.len(),
                expected: spaces.len() - 1,
                got: maps.len(),
            });
        }
        let mut measured_norms = Vec::new();
        for (i, m) in maps.iter().enumerate() {
            let (from, to) = (spaces[i], spaces[i + 1]);
            if m.nrows() != to.dim || m.ncols() != from.dim {
                return Err(JsumError::ShapeMismatch {
                    index: i + 1,
                    rows: m.nrows(),
                    cols: m.ncols(),
                    expected_rows: to.dim,
                    expected_cols: from.dim,
                });
            }
            if validation == ValidationMode::Spectral {
                if !(from.p.is_euclidean() && to.p.is_euclidean()) {
                    return Err(JsumError::SpectralNonEuclidean {
                        index: i + 1,
                        from: from.p.value(),
                        to: to.p.value(),
                    });
                }
                let norm = spectral_norm(m);
                if norm > 1.0 + CONTRACTION_TOL {
                    return Err(JsumError::ContractionViolation { index: i + 1, norm });
                }
                measured_norms.push(norm);
            }
        }
        let attestation = match validation {
            ValidationMode::Spectral => None,
            ValidationMode::Asserted => {
                Some(attestation.unwrap_or_else(|| "contractivity asserted by caller".to_string()))
            }
        };
        Ok(Chain {
            spaces,
            maps,
            q,
            validation,
            attestation,
            measured_norms,
        })
    }

    /// Truncation length N.
    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn validation(&self) -> ValidationMode {
        self.validation
    }

    pub fn attestation(&self) -> Option<&str> {
        self.attestation.as_deref()
    }

    /// Operator norms measured during spectral validation, one per map.
    pub fn measured_norms(&self) -> &[f64] {
        &self.measured_norms
    }

    /// Space `X_n` for `1 <= n <= N`.
    pub fn space(&self, n: usize) -> &CoordinateSpace {
        &self.spaces[n - 1]
    }

    pub fn spaces(&self) -> &[CoordinateSpace] {
        &self.spaces
    }

    /// Dimension of `X_n`, 0 for `n = 0`.
    pub fn dim(&self, n: usize) -> usize {
        if n == 0 {
            0
        } else {
            self.spaces[n - 1].dim
        }
    }

    /// ‖v‖_n, with the trivial space at `n = 0`.
    pub fn block_norm(&self, n: usize, v: &DVector<f64>) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.spaces[n - 1].norm(v)
        }
    }

    /// φ_n : X_n → X_{n+1} for `1 <= n < N`.
    pub fn map(&self, n: usize) -> &DMatrix<f64> {
        &self.maps[n - 1]
    }

    pub fn maps(&self) -> &[DMatrix<f64>] {
        &self.maps
    }

    pub fn total_dim(&self) -> usize {
        self.spaces.iter().map(|s| s.dim).sum()
    }

    /// Offset of block `n` inside the flattened coordinate vector of blocks `1..=N`.
    pub fn offset(&self, n: usize) -> usize {
        self.spaces[..n.saturating_sub(1)].iter().map(|s| s.dim).sum()
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n > self.len() {
            Err(JsumError::IndexOutOfRange {
                index: n,
                max: self.len(),
            })
        } else {
            Ok(())
        }
    }

    /// φ_n^m(v) for `0 <= n <= m <= N`; `n = 0` yields the zero vector of `X_m`.
    pub fn composite_apply(&self, n: usize, m: usize, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_index(n)?;
        self.check_index(m)?;
        if n > m {
            return Err(JsumError::ReversedIndices { n, m });
        }
        if v.len() != self.dim(n) {
            return Err(JsumError::DimensionMismatch {
                expected: self.dim(n),
                got: v.len(),
            });
        }
        Ok(self.push_forward(n, m, v))
    }

    /// Unchecked φ_n^m, used on the hot paths once dimensions are known to agree.
    pub(crate) fn push_forward(&self, n: usize, m: usize, v: &DVector<f64>) -> DVector<f64> {
        if n == 0 {
            return DVector::zeros(self.dim(m));
        }
        let mut out = v.clone();
        for j in n..m {
            out = &self.maps[j - 1] * out;
        }
        out
    }

    /// (φ_n^m)ᵀ g, mapping a dual vector on `X_m` back to `X_n`.
    pub(crate) fn pull_back(&self, n: usize, m: usize, g: &DVector<f64>) -> DVector<f64> {
        if n == 0 {
            return DVector::zeros(0);
        }
        let mut out = g.clone();
        for j in (n..m).rev() {
            out = self.maps[j - 1].tr_mul(&out);
        }
        out
    }

    /// Replace the outer exponent.
    pub fn with_q(&self, q: f64) -> Result<Chain> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(JsumError::InvalidOuterExponent(q));
        }
        Ok(Chain { q, ..self.clone() })
    }

    /// Scale map φ_index by `factor`. The result is in asserted mode, since the
    /// scaled map need not be contractive.
    pub fn with_scaled_map(&self, index: usize, factor: f64) -> Result<Chain> {
        if index == 0 || index >= self.len() {
            return Err(JsumError::IndexOutOfRange {
                index,
                max: self.len().saturating_sub(1),
            });
        }
        let mut maps = self.maps.clone();
        maps[index - 1] *= factor;
        Chain::new(
            self.spaces.clone(),
            maps,
            self.q,
            ValidationMode::Asserted,
            Some(format!("map {index} scaled by {factor}")),
        )
    }

    /// Append `extra` copies of the last space joined by identity maps.
    pub fn extend_identity(&self, extra: usize) -> Chain {
        let last = *self.spaces.last().expect("nonempty chain");
        let spaces = (0..extra).map(|_| last).collect();
        let maps = (0..extra).map(|_| DMatrix::identity(last.dim, last.dim)).collect();
        self.extend_with(spaces, maps)
            .expect("identity extension is always valid")
    }

    /// Append further spaces and maps; `maps[0]` joins the current last space to `spaces[0]`.
    pub fn extend_with(&self, spaces: Vec<CoordinateSpace>, maps: Vec<DMatrix<f64>>) -> Result<Chain> {
        let mut all_spaces = self.spaces.clone();
        all_spaces.extend(spaces);
        let mut all_maps = self.maps.clone();
        all_maps.extend(maps);
        Chain::new(all_spaces, all_maps, self.q, self.validation, self.attestation.clone())
    }

    pub fn description(&self) -> ChainDescription {
        ChainDescription {
            n: self.len(),
            spaces: self.spaces.clone(),
            maps: self
                .maps
                .iter()
                .map(|m| (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect())
                .collect(),
            q: self.q,
            validation: self.validation,
            attestation: self.attestation.clone(),
        }
    }

    /// Hex SHA-256 of the canonical JSON description.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(&self.description()).expect("chain description serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Named chain families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "lowercase")]
pub enum BuiltinKind {
    /// Scalar chain with identity maps: the classical James space.
    James { n: usize },
    /// `X_n = ℓ_{p_n}^{dims}` with the formal identity; `p` nondecreasing.
    Lpn { n: usize, p: Vec<f64>, dims: usize },
    /// Seeded Euclidean chain with random contractions.
    Random { seed: u64, n: usize, max_dim: usize },
}

pub fn builtin_chain(kind: &BuiltinKind) -> Result<Chain> {
    match kind {
        BuiltinKind::James { n } => {
            if *n == 0 {
                return Err(JsumError::EmptyChain);
            }
            let spaces = vec![CoordinateSpace::euclidean(1); *n];
            let maps = vec![DMatrix::identity(1, 1); n - 1];
            Chain::new(spaces, maps, 2.0, ValidationMode::Spectral, None)
        }
        BuiltinKind::Lpn { n, p, dims } => {
            if *n == 0 {
                return Err(JsumError::EmptyChain);
            }
            if p.len() != *n {
                return Err(JsumError::InvalidSpace {
                    index: p.len(),
                    reason: format!("{} exponents given for N = {n}", p.len()),
                });
            }
            for (i, w) in p.windows(2).enumerate() {
                if w[1] < w[0] {
                    return Err(JsumError::DecreasingExponents {
                        index: i + 1,
                        prev: w[0],
                        next: w[1],
                    });
                }
            }
            let spaces = p
                .iter()
                .enumerate()
                .map(|(i, &pi)| {
                    CoordinateSpace::new(*dims, pi).map_err(|e| match e {
                        JsumError::InvalidSpace { reason, .. } => JsumError::InvalidSpace { index: i + 1, reason },
                        other => other,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let maps = vec![DMatrix::identity(*dims, *dims); n - 1];
            if p.iter().all(|&x| x == 2.0) {
                Chain::new(spaces, maps, 2.0, ValidationMode::Spectral, None)
            } else {
                Chain::new(
                    spaces,
                    maps,
                    2.0,
                    ValidationMode::Asserted,
                    Some("formal identity between nondecreasing lp exponents".into()),
                )
            }
        }
        BuiltinKind::Random { seed, n, max_dim } => {
            if *n == 0 {
                return Err(JsumError::EmptyChain);
            }
            if *max_dim == 0 {
                return Err(JsumError::InvalidSpace {
                    index: 0,
                    reason: "max_dim must be positive".into(),
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let dims: Vec<usize> = (0..*n).map(|_| rng.random_range(1..=*max_dim)).collect();
            let spaces = dims.iter().map(|&d| CoordinateSpace::euclidean(d)).collect();
            let maps = dims
                .windows(2)
                .map(|w| random_contraction(&mut rng, w[1], w[0]))
                .collect();
            Chain::new(spaces, maps, 2.0, ValidationMode::Spectral, None)
        }
    }
}

/// Gaussian `rows × cols` matrix rescaled to spectral norm `1/1.01`.
pub fn random_contraction<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    loop {
        let m = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
        let s = spectral_norm(&m);
        if s > 1e-8 {
            return m / (s * 1.01);
        }
    }
}

impl fmt::Display for BuiltinKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinKind::James { n } => write!(f, "james:{n}"),
            BuiltinKind::Lpn { n, p, dims } => {
                let ps: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                write!(f, "lpn:{n}:{}:{dims}", ps.join(","))
            }
            BuiltinKind::Random { seed, n, max_dim } => write!(f, "random:{seed}:{n}:{max_dim}"),
        }
    }
}

impl FromStr for BuiltinKind {
    type Err = JsumError;

    /// `james:N`, `lpn:N:p1,p2,…:dims`, `random:seed:N:max_dim`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || JsumError::Config(format!("unrecognised builtin chain {s:?}"));
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["james", n] => Ok(BuiltinKind::James { n: num(n)? }),
            ["lpn", n, ps, dims] => {
                let p = ps
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(BuiltinKind::Lpn {
                    n: num(n)?,
                    p,
                    dims: num(dims)?,
                })
            }
            ["random", seed, n, max_dim] => Ok(BuiltinKind::Random {
                seed: seed.trim().parse().map_err(|_| bad())?,
                n: num(n)?,
                max_dim: num(max_dim)?,
            }),
            _ => Err(bad()),
        }
    }
}
