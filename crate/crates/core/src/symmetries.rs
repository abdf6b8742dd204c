//! Conformal Killing tensors and higher symmetries of Δ^ℓ.
//!
//! A symbol R^s·Q ∈ S⁰_{k,s} (Q trace-free of degree k − 2s) is an
//! s-generalized conformal Killing k-tensor when the trace-free part
//! of G^{2s+1}Q vanishes.  These are exactly the symbols whose
//! (λ,λ)-quantization D₁ satisfies Δ^ℓ∘D₁ = D₂∘Δ^ℓ for some D₂, at
//! the weights λ = (n−2ℓ)/2n, μ = (n+2ℓ)/2n making Δ^ℓ equivariant,
//! provided s < ℓ.
//!
//! The kernel computation stays exact and finite: the Killing equation
//! preserves x-homogeneity, so each coefficient degree d solves
//! independently, and within a degree the columns split into small
//! connected blocks (the equation only couples monomials of equal
//! multi-parity).

use crate::conformal::{self, laplacian_weights};
use crate::error::{Error, Result};
use crate::invariants;
use crate::linalg::{self, SparseRow};
use crate::opalg::{laplacian_power, right_divide, DiffOp};
use crate::quantization::{dequantize, quantize};
use crate::ring::{exponents, Monom, PhasePoly, Signature};
use num_traits::Zero;
use std::collections::BTreeMap;

/// Solutions of the (generalized) conformal Killing equation on the
/// component S⁰_{k,s}, up to coefficient x-degree `degree_bound`.
#[derive(Clone, Debug)]
pub struct KillingBasis {
    pub k: usize,
    pub s: usize,
    pub sig: Signature,
    pub degree_bound: usize,
    /// Linearly independent solutions R^s·Q, ordered by coefficient
    /// degree and canonical within each degree.
    pub basis: Vec<PhasePoly>,
    /// True when raising the bound by one adds no solutions.
    pub stable: bool,
}

impl KillingBasis {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }
}

/// Default search bound; flat-model solutions are polynomial with
/// coefficient degree well below this, which the stability flag
/// certifies after the fact.
pub fn default_degree_bound(k: usize, s: usize) -> usize {
    2 * k + 2 * s + 2
}

/// Trace-free parts Q of solutions with x-homogeneous coefficients of
/// degree d, as canonical kernel vectors over (x-monomial, trace-free
/// basis element) columns.
fn ckt_kernel_at_degree(
    k: usize,
    s: usize,
    sig: &Signature,
    d: usize,
) -> Result<Vec<PhasePoly>> {
    let n = sig.n();
    let j0 = k - 2 * s;
    let tf = invariants::trace_free_basis(sig, j0);
    let width = tf.len();
    let xmons = exponents(n, d);
    let ncols = xmons.len() * width;

    let order = 2 * s + 1;
    let g_pow = invariants::op_g(sig).pow(order)?;
    let out_deg = k + 1;
    let out_mons: BTreeMap<Vec<u16>, usize> =
        exponents(n, out_deg).into_iter().enumerate().map(|(i, e)| (e, i)).collect();
    let out_len = out_mons.len();
    let proj = invariants::harmonic_projection_matrix(sig, out_deg, 0)?;

    let mut cells: BTreeMap<(Vec<u16>, usize), SparseRow> = BTreeMap::new();
    if d >= order {
        for (ai, alpha) in xmons.iter().enumerate() {
            for (bi, w) in tf.iter().enumerate() {
                let mut q = PhasePoly::zero(n);
                for (m, c) in w.terms() {
                    q.add_term(Monom::new(alpha.clone(), m.p.clone()), c.clone());
                }
                let image = g_pow.apply(&q)?;
                // Split the image by x-monomial and project each slice.
                let mut slices: BTreeMap<Vec<u16>, PhasePoly> = BTreeMap::new();
                for (m, c) in image.terms() {
                    slices
                        .entry(m.x.clone())
                        .or_insert_with(|| PhasePoly::zero(n))
                        .add_term(Monom::new(vec![0; n], m.p.clone()), c.clone());
                }
                let col = ai * width + bi;
                for (xm, slice) in slices {
                    let coords = invariants::project_pure(&slice, &out_mons, &proj, out_len);
                    for (oi, v) in coords.into_iter().enumerate() {
                        if !v.is_zero() {
                            cells.entry((xm.clone(), oi)).or_default().push((col, v));
                        }
                    }
                }
            }
        }
    }

    let mut rows: Vec<SparseRow> = cells.into_values().collect();
    for row in &mut rows {
        row.sort_by_key(|(c, _)| *c);
    }
    let kernel = linalg::nullspace_components(ncols, rows);

    let mut out = Vec::with_capacity(kernel.len());
    for vec in kernel {
        let mut q = PhasePoly::zero(n);
        for (col, v) in vec {
            let (ai, bi) = (col / width, col % width);
            for (m, c) in tf[bi].terms() {
                q.add_term(Monom::new(xmons[ai].clone(), m.p.clone()), c.clone() * v.clone());
            }
        }
        out.push(q);
    }
    Ok(out)
}

/// Solves the conformal Killing equation on S⁰_{k,s} over polynomial
/// coefficients of x-degree ≤ `degree_bound` (default
/// [`default_degree_bound`]).
pub fn solve_ckt(
    k: usize,
    s: usize,
    sig: &Signature,
    degree_bound: Option<usize>,
) -> Result<KillingBasis> {
    if 2 * s > k {
        return Err(Error::Invalid(format!("killing component ({k},{s}) needs 2s <= k")));
    }
    let bound = degree_bound.unwrap_or_else(|| default_degree_bound(k, s));
    let r_pow = crate::ring::r_symbol(sig).pow(s);
    let mut basis = Vec::new();
    for d in 0..=bound {
        for q in ckt_kernel_at_degree(k, s, sig, d)? {
            basis.push(q.mul(&r_pow)?);
        }
    }
    let stable = ckt_kernel_at_degree(k, s, sig, bound + 1)?.is_empty();
    Ok(KillingBasis { k, s, sig: *sig, degree_bound: bound, basis, stable })
}

/// A higher symmetry of Δ^ℓ: Δ^ℓ∘D₁ = D₂∘Δ^ℓ with D₁ on λ-densities
/// and D₂ on μ-densities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryPair {
    pub d1: DiffOp,
    pub d2: DiffOp,
    pub ell: usize,
}

impl SymmetryPair {
    /// Δ^ℓ∘D₁ − D₂∘Δ^ℓ; zero exactly when the pair is valid.
    pub fn defect(&self, sig: &Signature) -> Result<DiffOp> {
        let (lambda, _) = laplacian_weights(sig, self.ell);
        let delta_l = laplacian_power(sig, self.ell, lambda);
        delta_l.compose(&self.d1)?.sub(&self.d2.compose(&delta_l)?)
    }

    pub fn is_valid(&self, sig: &Signature) -> Result<bool> {
        Ok(self.defect(sig)?.is_zero())
    }

    /// The trivial symmetry (identity at both weights).
    pub fn identity(ell: usize, sig: &Signature) -> Self {
        let n = sig.n();
        let (lambda, mu) = laplacian_weights(sig, ell);
        let one = PhasePoly::one(n);
        SymmetryPair {
            d1: crate::opalg::normal_order_n(&one, lambda.clone(), lambda),
            d2: crate::opalg::normal_order_n(&one, mu.clone(), mu),
            ell,
        }
    }

    /// The first-order symmetry (ℓ^λ_X, ℓ^μ_X) of a conformal
    /// generator.
    pub fn first_order(gen: &conformal::ConformalGenerator, ell: usize, sig: &Signature) -> Self {
        let (lambda, mu) = laplacian_weights(sig, ell);
        SymmetryPair {
            d1: conformal::lie_density(gen, &lambda),
            d2: conformal::lie_density(gen, &mu),
            ell,
        }
    }
}

/// Outcome of checking a symbol for the symmetry property.
#[derive(Clone, Debug)]
pub enum SymmetryCheck {
    /// Both quantizations work: D₂ = Q^{μ,μ}(K).
    Pair(SymmetryPair),
    /// The quantized candidate failed but Δ^ℓ∘D₁ is still right
    /// divisible; D₂ comes from the division.
    Divided(SymmetryPair),
    /// Not a symmetry; carries the nonzero defect Δ^ℓ∘D₁ − D₂∘Δ^ℓ.
    Defect(DiffOp),
}

/// Quantizes K at (λ,λ) and (μ,μ) and checks Δ^ℓ∘D₁ = D₂∘Δ^ℓ, falling
/// back to right division when the quantized candidate fails.
pub fn verify_symmetry(k_sym: &PhasePoly, ell: usize, sig: &Signature) -> Result<SymmetryCheck> {
    if ell == 0 {
        return Err(Error::Invalid("symmetry verification needs a positive power".into()));
    }
    let (lambda, mu) = laplacian_weights(sig, ell);
    let d1 = quantize(k_sym, &lambda, &lambda, sig)?;
    let d2 = quantize(k_sym, &mu, &mu, sig)?;
    let delta_l = laplacian_power(sig, ell, lambda.clone());
    let lhs = delta_l.compose(&d1)?;
    let defect = lhs.sub(&d2.compose(&delta_l)?)?;
    if defect.is_zero() {
        return Ok(SymmetryCheck::Pair(SymmetryPair { d1, d2, ell }));
    }
    match right_divide(&lhs, ell, sig)? {
        Some(q) => Ok(SymmetryCheck::Divided(SymmetryPair { d1, d2: q, ell })),
        None => Ok(SymmetryCheck::Defect(defect)),
    }
}

/// Drops every harmonic part of depth ≥ ℓ from each p-degree
/// component: the canonical symbol representative modulo R^ℓ·S.
fn reduce_mod_r_power(p: &PhasePoly, ell: usize, sig: &Signature) -> Result<PhasePoly> {
    let n = sig.n();
    let mut out = PhasePoly::zero(n);
    for k in p.p_degrees() {
        for part in invariants::harmonic_decompose(&p.p_component(k), sig)? {
            if part.s < ell {
                let r_pow = crate::ring::r_symbol(sig).pow(part.s);
                out = out.add(&part.component.mul(&r_pow)?)?;
            }
        }
    }
    Ok(out)
}

/// Composes two symmetries and reduces D₁ to the canonical
/// representative modulo the left ideal generated by Δ^ℓ.
///
/// The composite's symbol is reduced modulo R^ℓ·S, both density
/// weights are requantized, and the defining identity is re-verified
/// exactly before returning.
pub fn symmetry_product(
    a: &SymmetryPair,
    b: &SymmetryPair,
    sig: &Signature,
) -> Result<SymmetryPair> {
    if a.ell != b.ell {
        return Err(Error::Invalid(format!(
            "symmetry product across different powers {} and {}",
            a.ell, b.ell
        )));
    }
    let ell = a.ell;
    let (lambda, mu) = laplacian_weights(sig, ell);
    let comp = a.d1.compose(&b.d1)?;
    let sym = dequantize(&comp, sig)?;
    let reduced = reduce_mod_r_power(&sym, ell, sig)?;
    let pair = SymmetryPair {
        d1: quantize(&reduced, &lambda, &lambda, sig)?,
        d2: quantize(&reduced, &mu, &mu, sig)?,
        ell,
    };
    if !pair.is_valid(sig)? {
        return Err(Error::Invalid(
            "reduced symmetry product violates its defining identity".into(),
        ));
    }
    Ok(pair)
}
