//! Chains of nested coordinate subspaces of a host ℓ_p space.
//!
//! The host `Z = ℓ_p^D` is split into disjoint coordinate blocks
//! `Z_1, …, Z_m`; `X_n` is spanned by the first `n` blocks and each map is
//! the inclusion `X_n → X_{n+1}`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{Chain, ValidationMode};
use crate::error::{JsumError, Result};
use crate::estimates::CheckReport;
use crate::jnorm::{self, jnorm, jnorm_oracle_with_limit};
use crate::random::{gaussian_vec, rng_for};
use crate::space::{CoordinateSpace, Exponent};
use crate::vector::{JVector, Tail};
use crate::{ALG_TOL, NORM_TOL};

/// Reports on a truncated chain read the limit off the last block.
pub const TRUNCATION_NOTE: &str = "limit taken as the last block x_N of the truncated chain";

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSpec {
    #[serde(rename = "D")]
    pub dim: usize,
    pub p: Exponent,
    /// 1-based host coordinates of each block.
    pub blocks: Vec<Vec<usize>>,
    /// Suppression constant.
    #[serde(rename = "K", default = "one")]
    pub suppression: f64,
    /// Lower 2-estimate constant.
    #[serde(rename = "M", default = "one")]
    pub lower: f64,
}

impl DecompositionSpec {
    /// `ℓ_p^D` split into consecutive blocks of the given sizes, with `K = M = 1`.
    pub fn lp(p: f64, sizes: &[usize]) -> Result<Self> {
        let mut next = 1;
        let blocks = sizes
            .iter()
            .map(|&s| {
                let b: Vec<usize> = (next..next + s).collect();
                next += s;
                b
            })
            .collect();
        let spec = DecompositionSpec {
            dim: next - 1,
            p: Exponent::new(p)?,
            blocks,
            suppression: 1.0,
            lower: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(JsumError::InvalidDecomposition(s));
        if self.blocks.is_empty() {
            return bad("no blocks".into());
        }
        let mut seen = vec![false; self.dim];
        for (i, b) in self.blocks.iter().enumerate() {
            if b.is_empty() {
                return bad(format!("block {} is empty", i + 1));
            }
            for &c in b {
                if c == 0 || c > self.dim {
                    return bad(format!("coordinate {c} outside 1..={}", self.dim));
                }
                if std::mem::replace(&mut seen[c - 1], true) {
                    return bad(format!("coordinate {c} appears in more than one block"));
                }
            }
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return bad(format!("coordinate {} is not covered", c + 1));
        }
        if [self.suppression, self.lower].iter().any(|c| c.is_nan() || *c < 1.0) {
            return bad(format!(
                "need K >= 1 and M >= 1, got K = {}, M = {}",
                self.suppression, self.lower
            ));
        }
        Ok(())
    }

    /// Whether the host admits the lower 2-estimate used by the embedding bound.
    pub fn has_lower_estimate(&self) -> bool {
        self.p.value() <= 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseChain {
    spec: DecompositionSpec,
    chain: Chain,
    /// 0-based host coordinates in block order.
    order: Vec<usize>,
    /// `dim X_n` for `n = 0..=m`.
    cumulative: Vec<usize>,
}

pub fn build_dense(spec: &DecompositionSpec) -> Result<DenseChain> {
    spec.validate()?;
    let order: Vec<usize> = spec.blocks.iter().flatten().map(|c| c - 1).collect();
    let mut cumulative = vec![0];
    for b in &spec.blocks {
        cumulative.push(cumulative.last().expect("nonempty") + b.len());
    }
    let p = spec.p.value();
    let spaces = cumulative[1..]
        .iter()
        .map(|&d| CoordinateSpace::new(d, p))
        .collect::<Result<Vec<_>>>()?;
    let maps = cumulative[1..]
        .windows(2)
        .map(|w| DMatrix::from_fn(w[1], w[0], |r, c| if r == c { 1.0 } else { 0.0 }))
        .collect();
    let (validation, attestation) = if spec.p.is_euclidean() {
        (ValidationMode::Spectral, None)
    } else {
        (
            ValidationMode::Asserted,
            Some("coordinate inclusions are isometric in every lp norm".to_string()),
        )
    };
    let chain = Chain::new(spaces, maps, 2.0, validation, attestation)?;
    Ok(DenseChain {
        spec: spec.clone(),
        chain,
        order,
        cumulative,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitValue {
    pub value: DVector<f64>,
    /// The input was finitely supported, so its limit vanishes.
    pub in_kernel: bool,
}

impl DenseChain {
    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn spec(&self) -> &DecompositionSpec {
        &self.spec
    }

    pub fn host_norm(&self, z: &DVector<f64>) -> f64 {
        self.spec.p.norm(z)
    }

    fn check_host(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.spec.dim {
            return Err(JsumError::DimensionMismatch {
                expected: self.spec.dim,
                got: z.len(),
            });
        }
        Ok(())
    }

    /// Coordinates of `z` on the first `n` blocks.
    pub fn restrict(&self, z: &DVector<f64>, n: usize) -> DVector<f64> {
        DVector::from_iterator(
            self.cumulative[n],
            self.order[..self.cumulative[n]].iter().map(|&c| z[c]),
        )
    }

    /// Host vector with the coordinates of `v ∈ X_n` filled in.
    pub fn scatter(&self, v: &DVector<f64>, n: usize) -> DVector<f64> {
        let mut z = DVector::zeros(self.spec.dim);
        for (i, &c) in self.order[..self.cumulative[n]].iter().enumerate() {
            z[c] = v[i];
        }
        z
    }

    /// The limit of an eventually constant sequence, read off `x_N`.
    pub fn limit_operator(&self, x: &JVector) -> Result<LimitValue> {
        x.check_on(&self.chain)?;
        if x.tail() == Tail::Zero {
            return Ok(LimitValue {
                value: DVector::zeros(self.spec.dim),
                in_kernel: true,
            });
        }
        let n = self.chain.len();
        Ok(LimitValue {
            value: self.scatter(x.block(n), n),
            in_kernel: false,
        })
    }

    /// `(T_n z)_n` with `T_n` the restriction to the first `n` blocks.
    pub fn embed_t(&self, z: &DVector<f64>) -> Result<JVector> {
        self.check_host(z)?;
        let blocks = (1..=self.chain.len()).map(|n| self.restrict(z, n)).collect();
        JVector::from_blocks(&self.chain, blocks, Tail::EventuallyConstant)
    }

    /// `ρ(T z, S)² <= (M + 1) K² ‖z‖²` at the maximizing `S`.
    pub fn certificate(&self, z: &DVector<f64>) -> Result<CheckReport> {
        if !self.spec.has_lower_estimate() {
            return Ok(CheckReport::refused(
                "dense_certificate",
                &format!("host exponent {} > 2 has no lower 2-estimate", self.spec.p),
            ));
        }
        let tz = self.embed_t(z)?;
        let cert = jnorm(&self.chain, &tz)?;
        let (k, m) = (self.spec.suppression, self.spec.lower);
        let zn = self.host_norm(z);
        Ok(CheckReport::new(
            "dense_certificate",
            cert.rho_value.powi(2),
            (m + 1.0) * k * k * zn * zn,
            NORM_TOL,
        )
        .with_detail(format!("S={}", cert.witness)))
    }

    /// `‖T z‖_J <= sqrt((M + 1) / 2) K ‖z‖`.
    pub fn norm_bound(&self, z: &DVector<f64>) -> Result<CheckReport> {
        if !self.spec.has_lower_estimate() {
            return Ok(CheckReport::refused("dense_norm_bound", "no lower 2-estimate"));
        }
        let tn = jnorm::norm(&self.chain, &self.embed_t(z)?)?;
        let bound = ((self.spec.lower + 1.0) / 2.0).sqrt() * self.spec.suppression * self.host_norm(z);
        Ok(CheckReport::new("dense_norm_bound", tn, bound, NORM_TOL))
    }
}

/// Splitting identities, certificates and sampled constant checks.
pub fn check_splitting(dense: &DenseChain, samples: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let chain = dense.chain();
    let n = chain.len();
    let d = dense.spec.dim;
    let mut out = Vec::new();
    for s in 0..samples {
        let mut rng = rng_for(seed, s as u64);
        let tag = |r: CheckReport| r.with_instance(Some(seed), None, s);
        let z = gaussian_vec(&mut rng, d);
        let scale = z.amax().max(1.0);

        let back = dense.limit_operator(&dense.embed_t(&z)?)?.value;
        out.push(tag(CheckReport::new(
            "dense_limit_embed_identity",
            (back - &z).amax(),
            ALG_TOL * scale,
            0.0,
        )));
        out.push(tag(dense.certificate(&z)?));
        out.push(tag(dense.norm_bound(&z)?));

        let x = crate::random::random_vector(&mut rng, chain, Tail::EventuallyConstant);
        let y = dense.embed_t(&dense.limit_operator(&x)?.value)?;
        let yy = dense.embed_t(&dense.limit_operator(&y)?.value)?;
        out.push(tag(CheckReport::new(
            "dense_embed_limit_idempotent",
            yy.max_abs_diff(&y),
            NORM_TOL * y.max_abs().max(1.0),
            0.0,
        )));

        let mut w = crate::random::random_vector(&mut rng, chain, Tail::Zero);
        w.block_mut(n).fill(0.0);
        let lim = dense.limit_operator(&w)?;
        let img = dense.embed_t(&lim.value)?;
        out.push(tag(CheckReport::new("dense_kernel", img.max_abs(), 0.0, 0.0)
            .with_detail(format!("in_kernel={}", lim.in_kernel))));

        // lower 2-estimate and suppression constant, sampled
        let parts: f64 = dense
            .spec
            .blocks
            .iter()
            .map(|b| {
                let v = DVector::from_iterator(b.len(), b.iter().map(|&c| z[c - 1]));
                dense.spec.p.norm(&v).powi(2)
            })
            .sum();
        let zn = dense.host_norm(&z);
        let lower = CheckReport::new("dense_lower_estimate", parts, dense.spec.lower * zn * zn, ALG_TOL);
        out.push(tag(if dense.spec.has_lower_estimate() {
            lower
        } else {
            lower.informational()
        }));
        let keep: Vec<bool> = (0..dense.spec.blocks.len()).map(|_| rng.random_bool(0.5)).collect();
        let mut pz = DVector::zeros(d);
        for (b, &k) in dense.spec.blocks.iter().zip(&keep) {
            if k {
                for &c in b {
                    pz[c - 1] = z[c - 1];
                }
            }
        }
        out.push(tag(CheckReport::new(
            "dense_suppression",
            dense.host_norm(&pz),
            dense.spec.suppression * zn,
            ALG_TOL,
        )));

        if n >= 2 {
            let m = rng.random_range(1..n);
            let v = gaussian_vec(&mut rng, chain.dim(m));
            let lifted = chain.composite_apply(m, m + 1, &v)?;
            let (a, b) = (chain.block_norm(m + 1, &lifted), chain.block_norm(m, &v));
            out.push(tag(CheckReport::equality(
                "dense_inclusion_isometry",
                a,
                b,
                ALG_TOL * b.max(1.0),
            )));
        }
        if n <= 7 && dense.spec.has_lower_estimate() {
            let tz = dense.embed_t(&z)?;
            let oracle = jnorm_oracle_with_limit(chain, &tz, 7)?;
            let (k, m) = (dense.spec.suppression, dense.spec.lower);
            out.push(tag(CheckReport::new(
                "dense_certificate_oracle",
                oracle.rho_value.powi(2),
                (m + 1.0) * k * k * zn * zn,
                NORM_TOL,
            )));
        }
    }
    Ok(out)
}
