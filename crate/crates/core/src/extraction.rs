//! Greedy extraction of a block system from a finite-dimensional subspace,
//! together with the analysis, synthesis and perturbation operators built on it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{JsumError, Result};
use crate::estimates::{CheckReport, SuiteReport};
use crate::jnorm::{self, norming_functional, DualFunctional, DualFunctionalData};
use crate::projections::{p_n, q_n, t_block};
use crate::random::{gaussian_vec, rng_for};
use crate::vector::{JVector, JVectorData, Tail};
use crate::{ALG_TOL, NORM_TOL};

const RANK_TOL: f64 = 1e-10;
/// Headroom required above the lower block-norm bound before attaching functionals.
const BLOCK_HEADROOM: f64 = 1e-6;
const REFINE_ITERS: usize = 25;

/// Default threshold schedule `2^{-k} / 6`.
pub fn default_threshold(k: usize) -> f64 {
    0.5f64.powi(k as i32) / 6.0
}

/// A finite-dimensional subspace given by a linearly independent basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceM {
    basis: Vec<JVector>,
}

impl SubspaceM {
    pub fn new(chain: &Chain, basis: Vec<JVector>) -> Result<Self> {
        if basis.is_empty() {
            return Err(JsumError::TrivialSubspace);
        }
        for b in &basis {
            b.check_on(chain)?;
        }
        // all basis vectors must be mutually addable
        basis
            .iter()
            .try_fold(JVector::zeros(chain, Tail::Zero), |acc, b| acc.add(b))?;
        let f = flat_matrix(&basis);
        let sv = f.singular_values();
        let (lo, hi) = sv
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        if hi == 0.0 || lo / hi < RANK_TOL {
            return Err(JsumError::DependentBasis(if hi == 0.0 { 0.0 } else { lo / hi }));
        }
        Ok(SubspaceM { basis })
    }

    pub fn basis(&self) -> &[JVector] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn combine(&self, chain: &Chain, coeffs: &[f64]) -> Result<JVector> {
        combine(chain, &self.basis, coeffs)
    }
}

fn combine(chain: &Chain, vs: &[JVector], coeffs: &[f64]) -> Result<JVector> {
    let tail = if vs.iter().any(|v| v.tail() == Tail::EventuallyConstant) {
        Tail::EventuallyConstant
    } else {
        Tail::Zero
    };
    vs.iter()
        .zip(coeffs)
        .try_fold(JVector::zeros(chain, tail), |acc, (v, &c)| acc.axpy(c, v))
}

fn flat_matrix(vs: &[JVector]) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = vs.iter().map(JVector::flatten).collect();
    DMatrix::from_columns(&cols)
}

/// Unit vector of `M` found by a direction search, with the norms of its images.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub vector: JVector,
    pub coeffs: Vec<f64>,
    /// `‖L_j x‖_J` for each map searched against, at `‖x‖_J = 1`.
    pub image_norms: Vec<f64>,
}

impl Direction {
    pub fn ratio(&self) -> f64 {
        self.image_norms.iter().sum()
    }
}

type LinearMap<'a> = dyn Fn(&JVector) -> Result<JVector> + 'a;

/// Minimizes `Σ_j ‖L_j x‖_J / ‖x‖_J` over `M`: smallest generalized singular
/// direction of the stacked Euclidean images, then optional subgradient descent.
fn search_direction(chain: &Chain, m: &SubspaceM, maps: &[&LinearMap<'_>], refine: bool) -> Result<Direction> {
    let images: Vec<Vec<JVector>> = maps
        .iter()
        .map(|l| m.basis.iter().map(l).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let d = m.dim();
    let f = flat_matrix(&m.basis);
    let r = f.clone().qr().r();
    let stacked = {
        let blocks: Vec<DMatrix<f64>> = images.iter().map(|im| flat_matrix(im)).collect();
        let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
        let mut a = DMatrix::zeros(rows.max(d), d);
        let mut off = 0;
        for b in &blocks {
            a.rows_mut(off, b.nrows()).copy_from(b);
            off += b.nrows();
        }
        a
    };
    let r_inv = r.clone().try_inverse().ok_or(JsumError::DependentBasis(0.0))?;
    let svd = (stacked * &r_inv).svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let imin = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty");
    let w: DVector<f64> = v_t.row(imin).transpose();
    let c0: Vec<f64> = (&r_inv * w).iter().copied().collect();

    let eval = |c: &[f64]| -> Result<(f64, Vec<f64>, f64)> {
        let x = combine(chain, &m.basis, c)?;
        let xn = jnorm::norm(chain, &x)?;
        let norms = images
            .iter()
            .map(|im| combine(chain, im, c).and_then(|y| jnorm::norm(chain, &y)))
            .collect::<Result<Vec<_>>>()?;
        Ok((norms.iter().sum::<f64>() / xn, norms, xn))
    };

    let mut c = c0;
    let (mut h, _, _) = eval(&c)?;
    if refine {
        for _ in 0..REFINE_ITERS {
            if h < 1e-14 {
                break;
            }
            let x = combine(chain, &m.basis, &c)?;
            let xn = jnorm::norm(chain, &x)?;
            let fx = norming_functional(chain, &x)?;
            let mut num = 0.0;
            let mut grad_num = vec![0.0; d];
            for im in &images {
                let y = combine(chain, im, &c)?;
                if y.is_zero() {
                    continue;
                }
                let fy = norming_functional(chain, &y)?;
                num += fy.apply(&y);
                for (g, b) in grad_num.iter_mut().zip(im) {
                    *g += fy.apply(b);
                }
            }
            let grad: Vec<f64> = grad_num
                .iter()
                .zip(&m.basis)
                .map(|(gn, b)| (gn * xn - num * fx.apply(b)) / (xn * xn))
                .collect();
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            let cnorm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gnorm == 0.0 {
                break;
            }
            let mut t = 0.5 * cnorm / gnorm;
            let mut improved = false;
            for _ in 0..30 {
                let trial: Vec<f64> = c.iter().zip(&grad).map(|(ci, gi)| ci - t * gi).collect();
                if let Ok((ht, _, _)) = eval(&trial) {
                    if ht < h {
                        c = trial;
                        h = ht;
                        improved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
        }
    }

    let (_, norms, xn) = eval(&c)?;
    // fix the sign so the largest coordinate is positive
    let x = combine(chain, &m.basis, &c)?;
    let flat = x.flatten();
    let pivot = flat
        .iter()
        .copied()
        .fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
    let s = if pivot < 0.0 { -1.0 } else { 1.0 } / xn;
    let coeffs: Vec<f64> = c.iter().map(|v| v * s).collect();
    Ok(Direction {
        vector: x.scale(s),
        coeffs,
        image_norms: norms.iter().map(|v| v / xn).collect(),
    })
}

/// Unit vector of `M` with small `‖Q_n x‖_J`; heuristic, no optimality claim.
pub fn min_q_direction(chain: &Chain, m: &SubspaceM, n: usize) -> Result<Direction> {
    if n > chain.len() {
        return Err(JsumError::IndexOutOfRange {
            index: n,
            max: chain.len(),
        });
    }
    let q = |x: &JVector| q_n(chain, x, n);
    let d = search_direction(chain, m, &[&q], false)?;
    if d.ratio() < ALG_TOL {
        return Ok(d);
    }
    let refined = search_direction(chain, m, &[&q], true)?;
    Ok(if refined.ratio() < d.ratio() { refined } else { d })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// `‖Q_{n_k} x_k‖_J`.
    pub q_norm: f64,
    /// `‖P_{n_{k+1}−1} x_k − x_k‖_J`.
    pub tail_norm: f64,
    pub z_minus_x: f64,
    pub z_norm: f64,
    /// Certified bound on the dual norm of the attached functional.
    pub functional_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockEntry {
    pub k: usize,
    pub n_k: usize,
    pub n_next: usize,
    pub threshold: f64,
    pub carrier: JVector,
    pub block: JVector,
    pub functional: Option<DualFunctional>,
    pub margins: Margins,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockSystem {
    pub entries: Vec<BlockEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEntryData {
    pub k: usize,
    pub n_k: usize,
    pub n_next: usize,
    pub threshold: f64,
    pub carrier: JVectorData,
    pub block: JVectorData,
    pub functional: Option<DualFunctionalData>,
    pub margins: Margins,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSystemData {
    pub indices: Vec<usize>,
    pub blocks: Vec<BlockEntryData>,
}

impl BlockSystem {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `n_1 < n_2 < … < n_{K+1}`.
    pub fn indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.entries.iter().map(|e| e.n_k).collect();
        if let Some(last) = self.entries.last() {
            v.push(last.n_next);
        }
        v
    }

    pub fn blocks(&self) -> impl Iterator<Item = &JVector> {
        self.entries.iter().map(|e| &e.block)
    }

    pub fn data(&self) -> BlockSystemData {
        BlockSystemData {
            indices: self.indices(),
            blocks: self
                .entries
                .iter()
                .map(|e| BlockEntryData {
                    k: e.k,
                    n_k: e.n_k,
                    n_next: e.n_next,
                    threshold: e.threshold,
                    carrier: e.carrier.data(),
                    block: e.block.data(),
                    functional: e.functional.as_ref().map(DualFunctional::data),
                    margins: e.margins,
                })
                .collect(),
        }
    }

    fn functionals(&self) -> Result<Vec<&DualFunctional>> {
        self.entries
            .iter()
            .map(|e| e.functional.as_ref().ok_or(JsumError::MissingFunctionals))
            .collect()
    }
}

/// `(I − P_{m−1}) x`, with `P_N` the identity on the truncation.
fn prefix_defect(chain: &Chain, x: &JVector, m: usize) -> Result<JVector> {
    let p = p_n(chain, x, m - 1)?;
    x.sub(&p.with_tail(x.tail()))
}

/// Greedy choice of `n_1 < n_2 < …` and unit carriers `x_k ∈ M` with
/// `‖Q_{n_k} x_k‖ < ε_k` and `‖P_{n_{k+1}−1} x_k − x_k‖ < ε_k`.
pub fn select_sequence(
    chain: &Chain,
    m: &SubspaceM,
    k_max: usize,
    n1: usize,
    threshold: &dyn Fn(usize) -> f64,
) -> Result<BlockSystem> {
    let n = chain.len();
    let mut entries = Vec::new();
    let mut nk = n1;
    for k in 1..=k_max {
        let eps = threshold(k);
        let probe = min_q_direction(chain, m, nk)?;
        if probe.ratio() >= eps {
            return Err(JsumError::ThresholdUnreachable {
                k,
                ratio: probe.ratio(),
                threshold: eps,
                stage: "q".into(),
            });
        }
        let q = |x: &JVector| q_n(chain, x, nk);
        let mut best = f64::INFINITY;
        let mut found = None;
        for next in nk + 2..=n + 1 {
            let tail = |x: &JVector| prefix_defect(chain, x, next);
            let mut cand = search_direction(chain, m, &[&q, &tail], false)?;
            let fits = |d: &Direction| d.image_norms[0] < eps && d.image_norms[1] < eps;
            if !fits(&cand) {
                let refined = search_direction(chain, m, &[&q, &tail], true)?;
                if refined.ratio() < cand.ratio() {
                    cand = refined;
                }
            }
            // the tail of an eventually constant carrier is never captured by P_N
            let unbounded = next == n + 1 && cand.vector.unbounded_support();
            if fits(&cand) && !unbounded {
                found = Some((next, cand));
                break;
            }
            best = best.min(cand.image_norms[1]);
        }
        let (next, dir) = found.ok_or(JsumError::ThresholdUnreachable {
            k,
            ratio: best,
            threshold: eps,
            stage: "tail".into(),
        })?;
        let x = dir.vector;
        let z = t_block(chain, &x, nk, next)?;
        if let Some((lo, hi)) = z.support_hull() {
            if lo <= nk || hi >= next {
                return Err(JsumError::SupportViolation(format!("block {k} leaves ({nk}, {next})")));
            }
        }
        let margins = Margins {
            q_norm: dir.image_norms[0],
            tail_norm: dir.image_norms[1],
            z_minus_x: jnorm::norm(chain, &z.sub(&x.clone().with_tail(Tail::Zero))?)?,
            z_norm: jnorm::norm(chain, &z)?,
            functional_norm: None,
        };
        entries.push(BlockEntry {
            k,
            n_k: nk,
            n_next: next,
            threshold: eps,
            carrier: x,
            block: z,
            functional: None,
            margins,
        });
        nk = next;
    }
    Ok(BlockSystem { entries })
}

/// Attaches `x*_k` with `<x*_k, z_k> = 1` and `‖x*_k‖ <= 1 / ‖z_k‖`.
pub fn attach_functionals(chain: &Chain, mut system: BlockSystem) -> Result<BlockSystem> {
    for e in &mut system.entries {
        let zn = jnorm::norm(chain, &e.block)?;
        if zn <= 5.0 / 6.0 + BLOCK_HEADROOM {
            return Err(JsumError::BlockTooSmall { k: e.k, norm: zn });
        }
        let f = norming_functional(chain, &e.block)?.scale(1.0 / zn);
        e.margins.functional_norm = Some(f.norm_bound());
        e.functional = Some(f);
    }
    Ok(system)
}

/// `(<x*_k, T_k x>)_k`.
pub fn analysis_operator(chain: &Chain, system: &BlockSystem, x: &JVector) -> Result<Vec<f64>> {
    let fs = system.functionals()?;
    system
        .entries
        .iter()
        .zip(fs)
        .map(|(e, f)| Ok(f.apply(&t_block(chain, x, e.n_k, e.n_next)?)))
        .collect()
}

/// `Σ α_k z_k`.
pub fn synthesis_operator(chain: &Chain, system: &BlockSystem, alpha: &[f64]) -> Result<JVector> {
    if alpha.len() > system.len() {
        return Err(JsumError::TooManyCoefficients {
            got: alpha.len(),
            blocks: system.len(),
        });
    }
    let zs: Vec<JVector> = system.blocks().cloned().collect();
    combine(chain, &zs[..alpha.len()], alpha)
}

/// Projection onto the span of the blocks, synthesis after analysis.
pub fn projection_onto_z(chain: &Chain, system: &BlockSystem, x: &JVector) -> Result<JVector> {
    let a = analysis_operator(chain, system, x)?;
    synthesis_operator(chain, system, &a)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationVariant {
    /// `K x = Σ <u*_k, x> (v_k − u_k)`.
    Plain,
    /// `K x = Σ <u*_k, T_k x> (v_k − u_k)` with the block projections `(n_k, n_{k+1})`.
    WithBlocks(Vec<(usize, usize)>),
}

/// `U = I + K` for a biorthogonal system under the smallness condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    u: Vec<JVector>,
    diffs: Vec<JVector>,
    functionals: Vec<DualFunctional>,
    variant: PerturbationVariant,
    smallness: f64,
}

impl Perturbation {
    /// `Σ ‖u*_k‖ (‖T_k‖) ‖u_k − v_k‖`, a bound on `‖K‖`.
    pub fn smallness(&self) -> f64 {
        self.smallness
    }

    fn coefficient(&self, chain: &Chain, k: usize, x: &JVector) -> Result<f64> {
        match &self.variant {
            PerturbationVariant::Plain => Ok(self.functionals[k].apply(x)),
            PerturbationVariant::WithBlocks(spans) => {
                let (a, b) = spans[k];
                Ok(self.functionals[k].apply(&t_block(chain, x, a, b)?))
            }
        }
    }

    pub fn apply_k(&self, chain: &Chain, x: &JVector) -> Result<JVector> {
        let coeffs = (0..self.u.len())
            .map(|k| self.coefficient(chain, k, x))
            .collect::<Result<Vec<_>>>()?;
        combine(chain, &self.diffs, &coeffs)
    }

    pub fn apply_u(&self, chain: &Chain, x: &JVector) -> Result<JVector> {
        x.add(&self.apply_k(chain, x)?)
    }

    /// Neumann series `Σ (−K)^j y`, truncated once terms drop below `tol`.
    pub fn apply_inverse(&self, chain: &Chain, y: &JVector, tol: f64) -> Result<JVector> {
        let mut term = y.clone();
        let mut sum = y.clone();
        for _ in 0..200 {
            term = self.apply_k(chain, &term)?.scale(-1.0);
            sum = sum.add(&term)?;
            if term.max_abs() <= tol {
                break;
            }
        }
        Ok(sum)
    }
}

pub fn small_perturbation(
    chain: &Chain,
    pairs: &[(JVector, JVector)],
    functionals: &[DualFunctional],
    variant: PerturbationVariant,
) -> Result<Perturbation> {
    if functionals.len() != pairs.len() {
        return Err(JsumError::MissingFunctionals);
    }
    if let PerturbationVariant::WithBlocks(spans) = &variant {
        if spans.len() != pairs.len() {
            return Err(JsumError::BlockCount {
                expected: pairs.len(),
                got: spans.len(),
            });
        }
    }
    let u: Vec<JVector> = pairs.iter().map(|(u, _)| u.clone()).collect();
    let diffs = pairs.iter().map(|(u, v)| v.sub(u)).collect::<Result<Vec<_>>>()?;
    let mut p = Perturbation {
        u,
        diffs,
        functionals: functionals.to_vec(),
        variant,
        smallness: 0.0,
    };

    let mut dev = 0.0f64;
    for i in 0..p.u.len() {
        for j in 0..p.u.len() {
            let want = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((p.coefficient(chain, i, &p.u[j])? - want).abs());
        }
    }
    if dev > NORM_TOL {
        return Err(JsumError::NotBiorthogonal(dev));
    }
    let factor = match p.variant {
        PerturbationVariant::Plain => 1.0,
        PerturbationVariant::WithBlocks(_) => 2.0,
    };
    let mut sum = 0.0;
    for (f, d) in p.functionals.iter().zip(&p.diffs) {
        sum += f.norm_bound() * factor * jnorm::norm(chain, d)?;
    }
    if sum >= 1.0 {
        return Err(JsumError::SmallnessViolated(sum));
    }
    p.smallness = sum;
    Ok(p)
}

/// The perturbation carrying each block `z_k` back to its carrier `x_k`.
pub fn block_perturbation(chain: &Chain, system: &BlockSystem) -> Result<Perturbation> {
    let fs: Vec<DualFunctional> = system.functionals()?.into_iter().cloned().collect();
    let pairs: Vec<(JVector, JVector)> = system
        .entries
        .iter()
        .map(|e| (e.block.clone(), e.carrier.clone()))
        .collect();
    let spans = system.entries.iter().map(|e| (e.n_k, e.n_next)).collect();
    small_perturbation(chain, &pairs, &fs, PerturbationVariant::WithBlocks(spans))
}

/// `count` random blocks supported on `[5j − 3, 5j − 1]`, each with a leak of
/// size `leak` at `5j`.
pub fn skipped_blocks_basis<R: Rng + ?Sized>(
    rng: &mut R,
    chain: &Chain,
    count: usize,
    leak: f64,
) -> Result<Vec<JVector>> {
    if 5 * count > chain.len() {
        return Err(JsumError::IndexOutOfRange {
            index: 5 * count,
            max: chain.len(),
        });
    }
    (1..=count)
        .map(|j| {
            let mut blocks: Vec<DVector<f64>> = (0..=chain.len()).map(|n| DVector::zeros(chain.dim(n))).collect();
            for b in &mut blocks[5 * j - 3..5 * j] {
                for v in b.iter_mut() {
                    let mag: f64 = rng.random_range(0.5..1.5);
                    *v = if rng.random_bool(0.5) { mag } else { -mag };
                }
            }
            blocks[5 * j].fill(leak);
            blocks.remove(0);
            JVector::from_blocks(chain, blocks, Tail::Zero)
        })
        .collect()
}

/// Largest coordinate of the least-squares residual of `x` against the basis of `M`.
fn subspace_residual(m: &SubspaceM, x: &JVector) -> f64 {
    let f = flat_matrix(&m.basis);
    let b = x.flatten();
    match f.clone().svd(true, true).solve(&b, 1e-14) {
        Ok(c) => (f * c - b).amax(),
        Err(_) => f64::INFINITY,
    }
}

/// Re-measures every property of a completed block system on random samples.
pub fn verify_block_system(
    chain: &Chain,
    m: &SubspaceM,
    system: &BlockSystem,
    samples: usize,
    seed: u64,
) -> Result<SuiteReport> {
    let mut out = Vec::new();
    let q2 = chain.q() == 2.0;
    let graded = |r: CheckReport| if q2 { r } else { r.informational() };
    for (i, e) in system.entries.iter().enumerate() {
        let k = e.k;
        let tag = |r: CheckReport| r.with_instance(Some(seed), None, k);
        out.push(tag(CheckReport::new("q_threshold", e.margins.q_norm, e.threshold, 0.0)));
        out.push(tag(CheckReport::new(
            "tail_threshold",
            e.margins.tail_norm,
            e.threshold,
            0.0,
        )));
        out.push(tag(CheckReport::new("gap", (e.n_k + 2) as f64, e.n_next as f64, 0.0)));
        out.push(tag(CheckReport::new(
            "block_distance",
            e.margins.z_minus_x,
            2.0 * e.threshold,
            0.0,
        )));
        out.push(tag(CheckReport::new(
            "block_norm_lower",
            5.0 / 6.0,
            e.margins.z_norm,
            0.0,
        )));
        out.push(tag(CheckReport::new(
            "block_norm_upper",
            e.margins.z_norm,
            7.0 / 6.0,
            0.0,
        )));
        let carrier = jnorm::norm(chain, &e.carrier)?;
        out.push(tag(CheckReport::equality("carrier_unit", carrier, 1.0, NORM_TOL)));
        let residual = subspace_residual(m, &e.carrier);
        out.push(tag(CheckReport::new(
            "carrier_in_subspace",
            residual,
            ALG_TOL * e.carrier.max_abs().max(1.0),
            0.0,
        )));
        if let Some(f) = &e.functional {
            out.push(tag(CheckReport::equality(
                "functional_on_block",
                f.apply(&e.block),
                1.0,
                NORM_TOL,
            )));
            out.push(tag(CheckReport::new("functional_norm", f.norm_bound(), 6.0 / 5.0, 0.0)));
            let mut rng = rng_for(seed, (1000 + i) as u64);
            for _ in 0..samples.min(10) {
                let y = crate::random::random_vector(&mut rng, chain, Tail::Zero);
                let yn = jnorm::norm(chain, &y)?;
                out.push(tag(CheckReport::new(
                    "functional_bound",
                    f.apply(&y).abs(),
                    f.norm_bound() * yn,
                    NORM_TOL,
                )));
            }
        }
    }
    if system.is_empty() || system.entries.iter().any(|e| e.functional.is_none()) {
        return Ok(SuiteReport::from_reports(out));
    }
    let kk = system.len();
    let zs: Vec<JVector> = system.blocks().cloned().collect();

    for (j, z) in zs.iter().enumerate() {
        let tag = |r: CheckReport| r.with_instance(Some(seed), None, j + 1);
        let a = analysis_operator(chain, system, z)?;
        let dev = a
            .iter()
            .enumerate()
            .map(|(i, v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        out.push(tag(CheckReport::new("analysis_on_blocks", dev, NORM_TOL, 0.0)));
        let rz = projection_onto_z(chain, system, z)?;
        out.push(tag(CheckReport::new(
            "projection_fixes_blocks",
            rz.max_abs_diff(z),
            NORM_TOL * z.max_abs().max(1.0),
            0.0,
        )));
    }

    let perturbation = block_perturbation(chain, system);
    match &perturbation {
        Ok(p) => {
            out.push(
                CheckReport::new("perturbation_smallness", p.smallness(), 1.0, 0.0).with_instance(Some(seed), None, 0),
            );
            for e in &system.entries {
                let u = p.apply_u(chain, &e.block)?;
                let c = e.carrier.clone();
                out.push(
                    CheckReport::new(
                        "perturbation_maps_blocks",
                        u.max_abs_diff(&c),
                        NORM_TOL * c.max_abs().max(1.0),
                        0.0,
                    )
                    .with_instance(Some(seed), None, e.k),
                );
            }
        }
        Err(err) => out.push(CheckReport::refused("perturbation_smallness", &err.to_string())),
    }

    let mut rng = rng_for(seed, 0);
    for s in 0..samples {
        let tag = |r: CheckReport| r.with_instance(Some(seed), None, s);
        let x = crate::random::random_vector(&mut rng, chain, Tail::Zero);
        let xn = jnorm::norm(chain, &x)?;
        let a = analysis_operator(chain, system, &x)?;
        let energy: f64 = a.iter().map(|v| v * v).sum();
        out.push(tag(graded(CheckReport::new(
            "analysis_bound",
            energy,
            16.0 * xn * xn,
            NORM_TOL,
        ))));
        let rx = projection_onto_z(chain, system, &x)?;
        let rrx = projection_onto_z(chain, system, &rx)?;
        out.push(tag(CheckReport::new(
            "projection_idempotent",
            rrx.max_abs_diff(&rx),
            NORM_TOL * rx.max_abs().max(1.0),
            0.0,
        )));

        let alpha: Vec<f64> = gaussian_vec(&mut rng, kk).iter().copied().collect();
        let sx = synthesis_operator(chain, system, &alpha)?;
        let back = analysis_operator(chain, system, &sx)?;
        let dev = back.iter().zip(&alpha).map(|(b, a)| (b - a).abs()).fold(0.0, f64::max);
        let amax = alpha.iter().fold(1.0f64, |m, a| m.max(a.abs()));
        out.push(tag(CheckReport::new(
            "analysis_synthesis_identity",
            dev,
            NORM_TOL * amax,
            0.0,
        )));
        let sn2 = jnorm::norm(chain, &sx)?.powi(2);
        let weighted: f64 = alpha
            .iter()
            .zip(system.entries.iter())
            .map(|(a, e)| a * a * e.margins.z_norm * e.margins.z_norm)
            .sum();
        out.push(tag(graded(CheckReport::new(
            "frame_upper",
            sn2,
            3.0 * weighted,
            NORM_TOL,
        ))));
        out.push(tag(graded(CheckReport::new(
            "frame_lower",
            0.5 * weighted,
            sn2,
            NORM_TOL,
        ))));
        if let Ok(p) = &perturbation {
            let u = p.apply_u(chain, &x)?;
            let back = p.apply_inverse(chain, &u, 1e-15)?;
            out.push(tag(CheckReport::new(
                "perturbation_inverse",
                back.max_abs_diff(&x),
                NORM_TOL * x.max_abs().max(1.0),
                0.0,
            )));
        }
    }
    Ok(SuiteReport::from_reports(out))
}
