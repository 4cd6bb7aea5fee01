//! Knill–Laflamme code synthesis for diagonal (dephasing) error channels.
//!
//! Code words live on disjoint halves `S_0`, `S_1` of the qudit eigenbasis
//! with real non-negative amplitudes. For diagonal Kraus operators the
//! off-diagonal KL condition `⟨0_L|E_k†E_j|1_L⟩ = 0` then holds identically
//! and the diagonal condition becomes linear in the populations `p = amp²`:
//!
//! ```text
//! Σ_{i∈S_0} p⁰_i E_k[i] E_j[i] = Σ_{i∈S_1} p¹_i E_k[i] E_j[i]     (k ≤ j < K)
//! ```
//!
//! Every balanced partition is solved by non-negative least squares and the
//! one with the smallest residual wins. When no partition satisfies the
//! conditions, a minimax linear programme per partition finds the code
//! with the smallest worst-case violation.

use dephasing_channel::KrausSet;
use ftqec_linalg::{c, CMat, CVec};
use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SynthesisError {
    #[error("K = {k} exceeds d/2 = {half}")]
    TooManyErrors { k: usize, half: usize },
    #[error("qudit dimension {0} must be even and at least 2")]
    BadDimension(usize),
    #[error("Kraus set acts on dimension {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("no partition reaches the KL threshold {threshold:.1e}; best residual {best:.3e}")]
    Approximate { best: f64, threshold: f64, codewords: Box<CodeWords> },
    #[error("error-space collapse at ℓ = {l}, k = {k}: E_k|ℓ_L⟩ is dependent on lower errors")]
    Collapse { l: usize, k: usize },
    #[error("stabilizer eigenvalues must be {expected} pairwise-distinct reals")]
    BadEigenvalues { expected: usize },
}

/// Logical code words `|0_L⟩`, `|1_L⟩` on disjoint eigenbasis supports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeWords {
    pub d: usize,
    /// Number of Kraus operators the words were solved for.
    pub k: usize,
    pub support0: Vec<usize>,
    pub support1: Vec<usize>,
    /// Real non-negative amplitudes on `support0` (unit norm).
    pub amp0: Vec<f64>,
    pub amp1: Vec<f64>,
    /// Max absolute violation of the KL conditions over `k, j < K`.
    pub kl_residual: f64,
}

impl CodeWords {
    /// Full `d`-vector of `|ℓ_L⟩`.
    pub fn word(&self, l: usize) -> DVector<f64> {
        let (sup, amp) = if l == 0 { (&self.support0, &self.amp0) } else { (&self.support1, &self.amp1) };
        let mut v = DVector::zeros(self.d);
        for (&i, &a) in sup.iter().zip(amp) {
            v[i] = a;
        }
        v
    }

    pub fn support(&self, l: usize) -> &[usize] {
        if l == 0 {
            &self.support0
        } else {
            &self.support1
        }
    }

    /// Diagonal projector onto the eigenstates of logical support `l`.
    pub fn support_projector(&self, l: usize) -> DVector<f64> {
        let mut p = DVector::zeros(self.d);
        for &i in self.support(l) {
            p[i] = 1.0;
        }
        p
    }
}

/// Max over `k, j < K` of `|⟨0|E_k†E_j|0⟩ − ⟨1|E_k†E_j|1⟩|` and `|⟨0|E_k†E_j|1⟩|`.
pub fn kl_residual(cw: &CodeWords, kraus: &KrausSet, k: usize) -> f64 {
    let w0 = cw.word(0);
    let w1 = cw.word(1);
    let kk = k.min(kraus.len());
    let mut worst: f64 = 0.0;
    for a in 0..kk {
        for b in 0..kk {
            let m = kraus.ops[a].component_mul(&kraus.ops[b]);
            let d00: f64 = (0..cw.d).map(|i| w0[i] * w0[i] * m[i]).sum();
            let d11: f64 = (0..cw.d).map(|i| w1[i] * w1[i] * m[i]).sum();
            let d01: f64 = (0..cw.d).map(|i| w0[i] * w1[i] * m[i]).sum();
            worst = worst.max((d00 - d11).abs()).max(d01.abs());
        }
    }
    worst
}

/// Same as [`kl_residual`] with each `(k, j)` condition divided by
/// `‖E_k E_j‖`, i.e. measured relative to the strength of that error pair.
pub fn normalized_kl_residual(cw: &CodeWords, kraus: &KrausSet, k: usize) -> f64 {
    let w0 = cw.word(0);
    let w1 = cw.word(1);
    let kk = k.min(kraus.len());
    let mut worst: f64 = 0.0;
    for a in 0..kk {
        for b in a..kk {
            let m = kraus.ops[a].component_mul(&kraus.ops[b]);
            let n = m.norm();
            if n == 0.0 {
                continue;
            }
            let d00: f64 = (0..cw.d).map(|i| w0[i] * w0[i] * m[i]).sum();
            let d11: f64 = (0..cw.d).map(|i| w1[i] * w1[i] * m[i]).sum();
            worst = worst.max((d00 - d11).abs() / n);
        }
    }
    worst
}

/// Solver options.
#[derive(Clone, Copy, Debug)]
pub struct SynthesisOptions {
    /// Acceptance threshold on the absolute KL residual.
    pub threshold: f64,
    /// Weight of the two normalisation rows in the NNLS system.
    pub normalization_weight: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self { threshold: 1e-8, normalization_weight: 1e3 }
    }
}

/// All balanced partitions `(S_0, S_1)` with `0 ∈ S_0`, lexicographic in `S_0`.
pub fn partitions(d: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    (0..d)
        .combinations(d / 2)
        .filter(|s0| s0[0] == 0)
        .map(|s0| {
            let s1 = (0..d).filter(|i| !s0.contains(i)).collect();
            (s0, s1)
        })
        .collect()
}

/// Solve the KL conditions for the `K` leading Kraus operators.
///
/// Returns the best code (buildable error basis first, then lowest residual,
/// lexicographically first among equals),
/// or [`SynthesisError::Approximate`] carrying it if the residual misses
/// the threshold.
pub fn solve_codewords(kraus: &KrausSet, k: usize, d: usize, opts: SynthesisOptions) -> Result<CodeWords, SynthesisError> {
    if d < 2 || d % 2 == 1 {
        return Err(SynthesisError::BadDimension(d));
    }
    if k > d / 2 {
        return Err(SynthesisError::TooManyErrors { k, half: d / 2 });
    }
    if kraus.dim() != d {
        return Err(SynthesisError::DimensionMismatch { got: kraus.dim(), expected: d });
    }
    let kk = k.min(kraus.len());
    // Rows M^{kj} in two scalings: normalised to unit length, so that the
    // high-order conditions are not drowned by the leading ones, and raw
    // (relative to the leading row), which favours the leading conditions
    // when the system is infeasible.
    let mut rows: Vec<DVector<f64>> = vec![];
    let mut raw_rows: Vec<DVector<f64>> = vec![];
    for a in 0..kk {
        for b in a..kk {
            let m = kraus.ops[a].component_mul(&kraus.ops[b]);
            let n = m.norm();
            if n > 0.0 {
                rows.push(&m / n);
                raw_rows.push(m);
            }
        }
    }
    let lead = raw_rows.first().map_or(1.0, |m| m.norm());
    for r in raw_rows.iter_mut() {
        *r /= lead;
    }
    let parts = partitions(d);
    let search = |rows: &[DVector<f64>]| -> CodeWords {
        let results: Vec<CodeWords> = parts
            .par_iter()
            .map(|(s0, s1)| solve_partition(rows, s0, s1, d, kk, opts.normalization_weight, kraus))
            .collect();
        let mut best = 0;
        for (i, cw) in results.iter().enumerate() {
            if better(cw, &results[best], kraus) {
                best = i;
            }
        }
        results[best].clone()
    };
    // Stage 1: normalised rows. Stage 2 (only if stage 1 misses the
    // threshold): raw rows, which trade high-order conditions for the
    // leading ones.
    let mut cw = search(&rows);
    if !(cw.kl_residual < opts.threshold) {
        let alt = search(&raw_rows);
        if better(&alt, &cw, kraus) {
            cw = alt;
        }
    }
    // Stage 3 (infeasible systems): least squares does not minimise the
    // worst violation, so solve the minimax problem exactly per partition.
    if !(cw.kl_residual < opts.threshold) {
        // rows far below the leading one cannot move the residual but make
        // the simplex basis singular
        let lp_rows: Vec<DVector<f64>> = raw_rows.iter().filter(|m| m.norm() > 1e-13).cloned().collect();
        let results: Vec<Option<CodeWords>> = parts.par_iter().map(|(s0, s1)| minimax_partition(&lp_rows, s0, s1, d, kk, kraus)).collect();
        for cand in results.into_iter().flatten() {
            if better(&cand, &cw, kraus) {
                cw = cand;
            }
        }
    }
    if !(cw.kl_residual < opts.threshold) {
        return Err(SynthesisError::Approximate { best: cw.kl_residual, threshold: opts.threshold, codewords: Box::new(cw) });
    }
    Ok(cw)
}

/// Candidate order: codes with a buildable error basis first (a sparse
/// support can make `E_k|ℓ_L⟩` linearly dependent), then lower residual.
fn better(a: &CodeWords, b: &CodeWords, kraus: &KrausSet) -> bool {
    let (va, vb) = (build_error_basis(a, kraus).is_ok(), build_error_basis(b, kraus).is_ok());
    if va != vb {
        return va;
    }
    a.kl_residual < b.kl_residual
}

fn solve_partition(
    rows: &[DVector<f64>],
    s0: &[usize],
    s1: &[usize],
    d: usize,
    k: usize,
    weight: f64,
    kraus: &KrausSet,
) -> CodeWords {
    let h = d / 2;
    let nr = rows.len() + 2;
    // column layout: [p⁰ on S_0 | p¹ on S_1]
    let build = |w: f64| {
        let mut a = DMatrix::<f64>::zeros(nr, d);
        for (r, m) in rows.iter().enumerate() {
            for (c_, &i) in s0.iter().enumerate() {
                a[(r, c_)] = m[i];
            }
            for (c_, &i) in s1.iter().enumerate() {
                a[(r, h + c_)] = -m[i];
            }
        }
        for c_ in 0..h {
            a[(nr - 2, c_)] = w;
            a[(nr - 1, h + c_)] = w;
        }
        let mut b = DVector::<f64>::zeros(nr);
        b[nr - 2] = w;
        b[nr - 1] = w;
        (a, b)
    };
    let (a, b) = build(weight);
    let an = ndarray::Array2::from_shape_fn((nr, d), |(i, j)| a[(i, j)]);
    let bn = ndarray::Array1::from_iter(b.iter().copied());
    let (p, _) = nnls::nnls(an.view(), bn.view());
    let p_nnls: Vec<f64> = p.iter().copied().collect();
    let mut best = finish(&p_nnls, s0, s1, d, k, kraus);

    // Polish: exact least squares on the NNLS active set, which removes the
    // bias of the finite normalisation weight when the system is feasible.
    let active: Vec<usize> = (0..d).filter(|&j| p_nnls[j] > 0.0).collect();
    if !active.is_empty() {
        let (a1, b1) = build(1.0);
        let sub = DMatrix::from_fn(nr, active.len(), |i, j| a1[(i, active[j])]);
        if let Ok(x) = sub.svd(true, true).solve(&b1, 1e-15) {
            if x.iter().all(|&v| v >= -1e-14) {
                let mut p2 = vec![0.0; d];
                for (j, &col) in active.iter().enumerate() {
                    p2[col] = x[j].max(0.0);
                }
                let cand = finish(&p2, s0, s1, d, k, kraus);
                if cand.kl_residual < best.kl_residual {
                    best = cand;
                }
            }
        }
    }
    best
}

/// `min t` subject to `|M p| ≤ t` row-wise and both populations on the simplex.
fn minimax_partition(rows: &[DVector<f64>], s0: &[usize], s1: &[usize], d: usize, k: usize, kraus: &KrausSet) -> Option<CodeWords> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let h = d / 2;
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let t = pb.add_var(1.0, (0.0, f64::INFINITY));
    let vars: Vec<_> = (0..d).map(|_| pb.add_var(0.0, (0.0, 1.0))).collect();
    for m in rows {
        let mut expr: Vec<(microlp::Variable, f64)> = Vec::with_capacity(d + 1);
        expr.extend(s0.iter().zip(&vars[..h]).map(|(&i, &v)| (v, m[i])));
        expr.extend(s1.iter().zip(&vars[h..]).map(|(&i, &v)| (v, -m[i])));
        let mut upper = expr.clone();
        upper.push((t, -1.0));
        pb.add_constraint(upper.as_slice(), ComparisonOp::Le, 0.0);
        expr.push((t, 1.0));
        pb.add_constraint(expr.as_slice(), ComparisonOp::Ge, 0.0);
    }
    let ones0: Vec<_> = vars[..h].iter().map(|&v| (v, 1.0)).collect();
    let ones1: Vec<_> = vars[h..].iter().map(|&v| (v, 1.0)).collect();
    pb.add_constraint(ones0.as_slice(), ComparisonOp::Eq, 1.0);
    pb.add_constraint(ones1.as_slice(), ComparisonOp::Eq, 1.0);
    // the simplex solver panics on numerically singular bases; treat that
    // like an infeasible partition
    let sol = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| pb.solve())).ok()?.ok()?;
    let p: Vec<f64> = vars.iter().map(|&v| sol[v].max(0.0)).collect();
    Some(finish(&p, s0, s1, d, k, kraus))
}

fn finish(p: &[f64], s0: &[usize], s1: &[usize], d: usize, k: usize, kraus: &KrausSet) -> CodeWords {
    let h = d / 2;
    let norm = |x: &[f64]| {
        let s: f64 = x.iter().sum();
        if s > 0.0 {
            x.iter().map(|v| (v / s).sqrt()).collect::<Vec<_>>()
        } else {
            vec![(1.0 / h as f64).sqrt(); h]
        }
    };
    let mut cw = CodeWords {
        d,
        k,
        support0: s0.to_vec(),
        support1: s1.to_vec(),
        amp0: norm(&p[..h]),
        amp1: norm(&p[h..]),
        kl_residual: 0.0,
    };
    cw.kl_residual = kl_residual(&cw, kraus, k);
    cw
}

/// Orthonormal error words `|ℓ,k⟩`, column index `ℓ·K + k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBasis {
    pub d: usize,
    pub k: usize,
    pub vectors: CMat,
}

impl ErrorBasis {
    #[inline]
    pub fn col(l: usize, k: usize, kk: usize) -> usize {
        l * kk + k
    }

    /// `|ℓ,k⟩`.
    pub fn word(&self, l: usize, k: usize) -> CVec {
        self.vectors.column(Self::col(l, k, self.k)).into_owned()
    }

    /// Number of columns (`2K`).
    pub fn span_dim(&self) -> usize {
        2 * self.k
    }

    /// `max |G − I|` of the Gram matrix.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        ftqec_linalg::max_abs(&(g - CMat::identity(2 * self.k, 2 * self.k)))
    }
}

/// Gram–Schmidt over `E_k|ℓ_L⟩`, `k` ascending, each `ℓ` independently.
/// Every word satisfies `⟨ℓ,k|E_k|ℓ_L⟩ > 0`.
///
/// A vector whose post-projection norm falls below `1e-10` of its own
/// pre-projection norm signals error-space collapse. (The threshold is
/// relative because high-order Kraus operators are legitimately tiny.)
pub fn build_error_basis(cw: &CodeWords, kraus: &KrausSet) -> Result<ErrorBasis, SynthesisError> {
    let d = cw.d;
    let kk = cw.k;
    if kraus.len() < kk {
        return Err(SynthesisError::Collapse { l: 0, k: kraus.len() });
    }
    let mut vectors = CMat::zeros(d, 2 * kk);
    for l in 0..2 {
        let w = cw.word(l);
        let mut done: Vec<DVector<f64>> = vec![];
        for k in 0..kk {
            let raw = kraus.ops[k].component_mul(&w);
            let n0 = raw.norm();
            let mut x = raw.clone();
            // two passes of modified Gram–Schmidt for numerical orthogonality
            for _ in 0..2 {
                for u in &done {
                    let ov = u.dot(&x);
                    x -= u * ov;
                }
            }
            let n = x.norm();
            if n0 == 0.0 || n < 1e-10 * n0 {
                return Err(SynthesisError::Collapse { l, k });
            }
            // The sign is inherited from E_k|ℓ_L⟩ (⟨ℓ,k|E_k|ℓ_L⟩ > 0) for both ℓ;
            // this common convention is what identifies |0,k⟩ with |1,k⟩ in
            // the G ⊗ I_K structure of error-transparent gates.
            x /= n;
            vectors.set_column(ErrorBasis::col(l, k, kk), &x.map(|v| c(v, 0.0)));
            done.push(x);
        }
    }
    Ok(ErrorBasis { d, k: kk, vectors })
}

/// Multi-valued stabilizer `S = Σ_{k,ℓ} λ_k |ℓ,k⟩⟨ℓ,k|`.
pub fn stabilizer_observable(basis: &ErrorBasis, lambdas: &[f64]) -> Result<CMat, SynthesisError> {
    let kk = basis.k;
    if lambdas.len() != kk || lambdas.iter().tuple_combinations().any(|(a, b)| a == b) {
        return Err(SynthesisError::BadEigenvalues { expected: kk });
    }
    let mut s = CMat::zeros(basis.d, basis.d);
    for l in 0..2 {
        for (k, &lam) in lambdas.iter().enumerate() {
            let v = basis.word(l, k);
            s += (&v * v.adjoint()) * c(lam, 0.0);
        }
    }
    Ok(s)
}
