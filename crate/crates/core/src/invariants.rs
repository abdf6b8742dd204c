//! Canonical invariant contraction operators, the harmonic (trace)
//! decomposition of symbols, and the classification of equivariant
//! operators between symbol components within the contraction ansatz.
//!
//! The component S_{k,s} is R^s times the trace-free symbols of
//! p-degree k−2s; it is a submodule for every weight, so projections
//! onto components commute with the conformal action.
//!
//! Restriction tests never sample: an operator kills every x^α·w with
//! w in a finite p-basis iff each of its x-action groups does, because
//! distinct falling-factorial coefficients are linearly independent as
//! functions of the exponent α.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::conformal::{self, ConformalGenerator, Label};
use crate::error::{Error, Result};
use crate::linalg::{self, RowSpan, SparseRow};
use crate::opalg::{OpMonom, PhaseOp};
use crate::ring::{exponents, rat, rint, Monom, PhasePoly, Rat, Signature};

/// Multiplication by R = η^{ij}p_ip_j.
pub fn op_r(sig: &Signature) -> PhaseOp {
    PhaseOp::mult_by(&crate::ring::r_symbol(sig))
}

/// T = η_{ij}∂_{p_i}∂_{p_j}.
pub fn op_t(sig: &Signature) -> PhaseOp {
    let n = sig.n();
    let mut op = PhaseOp::zero(n);
    for i in 0..n {
        let mut dp = vec![0; n];
        dp[i] = 2;
        op.add_term(OpMonom::new(vec![0; n], vec![0; n], vec![0; n], dp), rint(sig.eps(i)));
    }
    op
}

/// D = ∂_{x^i}∂_{p_i}.
pub fn op_d(n: usize) -> PhaseOp {
    let mut op = PhaseOp::zero(n);
    for i in 0..n {
        let mut dx = vec![0; n];
        let mut dp = vec![0; n];
        dx[i] = 1;
        dp[i] = 1;
        op.add_term(OpMonom::new(vec![0; n], vec![0; n], dx, dp), Rat::one());
    }
    op
}

/// G = η^{ij}p_i∂_{x^j}.
pub fn op_g(sig: &Signature) -> PhaseOp {
    let n = sig.n();
    let mut op = PhaseOp::zero(n);
    for i in 0..n {
        let mut p = vec![0; n];
        let mut dx = vec![0; n];
        p[i] = 1;
        dx[i] = 1;
        op.add_term(OpMonom::new(vec![0; n], p, dx, vec![0; n]), rint(sig.eps(i)));
    }
    op
}

/// Λ = η^{ij}∂_{x^i}∂_{x^j}, the Laplacian on symbol coefficients.
pub fn op_x_laplacian(sig: &Signature) -> PhaseOp {
    let n = sig.n();
    let mut op = PhaseOp::zero(n);
    for i in 0..n {
        let mut dx = vec![0; n];
        dx[i] = 2;
        op.add_term(OpMonom::new(vec![0; n], vec![0; n], dx, vec![0; n]), rint(sig.eps(i)));
    }
    op
}

/// Euler operator x^i∂_{x^i}.
pub fn op_ex(n: usize) -> PhaseOp {
    let mut op = PhaseOp::zero(n);
    for i in 0..n {
        let mut x = vec![0; n];
        let mut dx = vec![0; n];
        x[i] = 1;
        dx[i] = 1;
        op.add_term(OpMonom::new(x, vec![0; n], dx, vec![0; n]), Rat::one());
    }
    op
}

/// Euler operator p_i∂_{p_i}.
pub fn op_ep(n: usize) -> PhaseOp {
    let mut op = PhaseOp::zero(n);
    for i in 0..n {
        let mut p = vec![0; n];
        let mut dp = vec![0; n];
        p[i] = 1;
        dp[i] = 1;
        op.add_term(OpMonom::new(vec![0; n], p, vec![0; n], dp), Rat::one());
    }
    op
}

/// Basis of trace-free p-polynomials of degree j (kernel of T),
/// canonical under the fixed monomial order.
pub fn trace_free_basis(sig: &Signature, j: usize) -> Vec<PhasePoly> {
    let n = sig.n();
    let mons = exponents(n, j);
    if j < 2 {
        return mons
            .into_iter()
            .map(|e| {
                let mut p = PhasePoly::zero(n);
                p.add_term(Monom::new(vec![0; n], e), Rat::one());
                p
            })
            .collect();
    }
    let out_mons = exponents(n, j - 2);
    let out_index: BTreeMap<&Vec<u16>, usize> =
        out_mons.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let mut rows: Vec<SparseRow> = vec![Vec::new(); out_mons.len()];
    for (col, e) in mons.iter().enumerate() {
        for i in 0..n {
            if e[i] >= 2 {
                let mut tgt = e.clone();
                tgt[i] -= 2;
                let coef = rint(sig.eps(i) * (e[i] as i64) * (e[i] as i64 - 1));
                rows[out_index[&tgt]].push((col, coef));
            }
        }
    }
    for row in &mut rows {
        row.sort_by_key(|(c, _)| *c);
    }
    linalg::nullspace(mons.len(), rows)
        .into_iter()
        .map(|v| {
            let mut p = PhasePoly::zero(n);
            for (col, c) in v {
                p.add_term(Monom::new(vec![0; n], mons[col].clone()), c);
            }
            p
        })
        .collect()
}

/// Basis of the pure-p part of S_{k,s}: R^s times trace-free degree
/// k−2s.
pub fn component_basis(sig: &Signature, k: usize, s: usize) -> Result<Vec<PhasePoly>> {
    if 2 * s > k {
        return Err(Error::Invalid(format!("component ({k},{s}) needs 2s <= k")));
    }
    let r_s = crate::ring::r_symbol(sig).pow(s);
    Ok(trace_free_basis(sig, k - 2 * s)
        .into_iter()
        .map(|q| q.mul(&r_s).unwrap())
        .collect())
}

/// One summand of the harmonic decomposition P = Σ_s R^s·component_s.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HarmonicPart {
    pub s: usize,
    pub component: PhasePoly,
}

/// Decomposes a p-homogeneous symbol as Σ_s R^s P_s with T·P_s = 0,
/// by an exact linear solve per x-monomial slice.  Zero summands are
/// omitted.
pub fn harmonic_decompose(p: &PhasePoly, sig: &Signature) -> Result<Vec<HarmonicPart>> {
    let n = sig.n();
    if p.n() != n {
        return Err(Error::DimensionMismatch(p.n(), n));
    }
    if p.is_zero() {
        return Ok(Vec::new());
    }
    let degs = p.p_degrees();
    if degs.len() != 1 {
        return Err(Error::Invalid("harmonic decomposition needs a p-homogeneous symbol".into()));
    }
    let k = degs[0];
    let smax = k / 2;

    // Unknowns: coefficients of each P_s over degree-(k−2s) monomials.
    let bases: Vec<Vec<Vec<u16>>> = (0..=smax).map(|s| exponents(n, k - 2 * s)).collect();
    let mut offset = vec![0usize; smax + 2];
    for s in 0..=smax {
        offset[s + 1] = offset[s] + bases[s].len();
    }
    let ncols = offset[smax + 1];

    let top_mons = exponents(n, k);
    let top_index: BTreeMap<&Vec<u16>, usize> =
        top_mons.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let r_pows: Vec<PhasePoly> = (0..=smax).map(|s| crate::ring::r_symbol(sig).pow(s)).collect();

    // Reconstruction rows (indexed by degree-k monomials) ...
    let mut rows: Vec<SparseRow> = vec![Vec::new(); top_mons.len()];
    for s in 0..=smax {
        for (j, e) in bases[s].iter().enumerate() {
            for (rm, rc) in r_pows[s].terms() {
                let sum: Vec<u16> = e.iter().zip(&rm.p).map(|(a, b)| a + b).collect();
                rows[top_index[&sum]].push((offset[s] + j, rc.clone()));
            }
        }
    }
    // ... plus trace rows T·P_s = 0.
    for s in 0..=smax {
        if k - 2 * s < 2 {
            continue;
        }
        let out = exponents(n, k - 2 * s - 2);
        let out_index: BTreeMap<&Vec<u16>, usize> =
            out.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let mut trows: Vec<SparseRow> = vec![Vec::new(); out.len()];
        for (j, e) in bases[s].iter().enumerate() {
            for i in 0..n {
                if e[i] >= 2 {
                    let mut tgt = e.clone();
                    tgt[i] -= 2;
                    let coef = rint(sig.eps(i) * (e[i] as i64) * (e[i] as i64 - 1));
                    trows[out_index[&tgt]].push((offset[s] + j, coef));
                }
            }
        }
        rows.extend(trows);
    }
    for row in &mut rows {
        row.sort_by_key(|(c, _)| *c);
    }

    let mut slices: BTreeMap<Vec<u16>, Vec<Rat>> = BTreeMap::new();
    for (m, c) in p.terms() {
        let slice =
            slices.entry(m.x.clone()).or_insert_with(|| vec![Rat::zero(); rows.len()]);
        slice[top_index[&m.p]] = c.clone();
    }

    let mut parts: Vec<PhasePoly> = vec![PhasePoly::zero(n); smax + 1];
    for (xmon, rhs) in slices {
        match linalg::solve(ncols, &rows, &rhs) {
            linalg::Solve::Inconsistent => {
                return Err(Error::Invalid("harmonic decomposition system inconsistent".into()))
            }
            linalg::Solve::Solution { particular, kernel } => {
                debug_assert!(kernel.is_empty(), "harmonic decomposition must be unique");
                for s in 0..=smax {
                    for (j, e) in bases[s].iter().enumerate() {
                        let c = particular[offset[s] + j].clone();
                        parts[s].add_term(Monom::new(xmon.clone(), e.clone()), c);
                    }
                }
            }
        }
    }
    Ok(parts
        .into_iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(s, component)| HarmonicPart { s, component })
        .collect())
}

/// The P_s component of the harmonic decomposition (zero if absent).
pub fn harmonic_component(p: &PhasePoly, sig: &Signature, s: usize) -> Result<PhasePoly> {
    Ok(harmonic_decompose(p, sig)?
        .into_iter()
        .find(|h| h.s == s)
        .map(|h| h.component)
        .unwrap_or_else(|| PhasePoly::zero(sig.n())))
}

/// R^s·P_s, the part of P inside S_{k,s}.
pub fn component_part(p: &PhasePoly, sig: &Signature, s: usize) -> Result<PhasePoly> {
    Ok(harmonic_component(p, sig, s)?.mul(&crate::ring::r_symbol(sig).pow(s)).unwrap())
}

/// Terms of a PhaseOp sharing an x-action (x-multiplication offset u =
/// a−c and x-derivative c), with their pure-p parts.
fn x_groups(op: &PhaseOp) -> BTreeMap<(Vec<i64>, Vec<u16>), PhaseOp> {
    let n = op.n();
    let mut out: BTreeMap<(Vec<i64>, Vec<u16>), PhaseOp> = BTreeMap::new();
    for (m, c) in op.terms() {
        let u: Vec<i64> = (0..n).map(|i| m.x[i] as i64 - m.dx[i] as i64).collect();
        let key = (u, m.dx.clone());
        let g = out.entry(key).or_insert_with(|| PhaseOp::zero(n));
        g.add_term(OpMonom::new(vec![0; n], m.p.clone(), vec![0; n], m.dp.clone()), c.clone());
    }
    out
}

/// True iff `op` annihilates x^α·w for every α ∈ ℕ^n and every w in
/// `basis` (pure-p polynomials).
fn vanishes_on_x_span(op: &PhaseOp, basis: &[PhasePoly]) -> bool {
    for group in x_groups(op).values() {
        for w in basis {
            if !group.apply(w).unwrap().is_zero() {
                return false;
            }
        }
    }
    true
}

/// Generators whose equivariance is not automatic for constant
/// η-contraction operators: the n special-conformal ones and the
/// dilation.  Translations and rotations commute with every ansatz
/// monomial exactly.
fn constraining_generators(sig: &Signature) -> Result<Vec<ConformalGenerator>> {
    Ok(conformal::generators(sig)?
        .into_iter()
        .filter(|g| matches!(g.label(), Label::SpecialConformal(_) | Label::Dilation))
        .collect())
}

/// Exact test of L^{δ′}_X∘O = O∘L^δ_X for every generator X, as an
/// identity of normal-ordered operators on all of S.
pub fn is_invariant(op: &PhaseOp, delta: &Rat, delta_p: &Rat, sig: &Signature) -> Result<bool> {
    for g in conformal::generators(sig)? {
        let l_in = conformal::lie_symbol(&g, delta);
        let l_out = conformal::lie_symbol(&g, delta_p);
        if !l_out.compose(op)?.sub(&op.compose(&l_in)?)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Same identity restricted to the source component S_{k,s}; exact via
/// the x-group reduction, no sampling.
pub fn is_invariant_on(
    op: &PhaseOp,
    delta: &Rat,
    delta_p: &Rat,
    k: usize,
    s: usize,
    sig: &Signature,
) -> Result<bool> {
    let basis = component_basis(sig, k, s)?;
    for g in conformal::generators(sig)? {
        let l_in = conformal::lie_symbol(&g, delta);
        let l_out = conformal::lie_symbol(&g, delta_p);
        let defect = l_out.compose(op)?.sub(&op.compose(&l_in)?)?;
        if !vanishes_on_x_span(&defect, &basis) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A normal-ordered contraction monomial R^r G^g Λ^l D^d T^t (rightmost
/// factor applied first).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct AnsatzMonom {
    pub r: u16,
    pub g: u16,
    pub l: u16,
    pub d: u16,
    pub t: u16,
}

impl AnsatzMonom {
    pub fn identity() -> Self {
        AnsatzMonom { r: 0, g: 0, l: 0, d: 0, t: 0 }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// Change in p-degree.
    pub fn p_shift(&self) -> i64 {
        2 * self.r as i64 + self.g as i64 - self.d as i64 - 2 * self.t as i64
    }

    /// Drop in x-degree (all factors lower or keep it).
    pub fn x_drop(&self) -> i64 {
        self.g as i64 + 2 * self.l as i64 + self.d as i64
    }

    /// Order of p-derivatives; monomials with p_order > k act as zero
    /// on degree-k symbols.
    pub fn p_order(&self) -> i64 {
        self.d as i64 + 2 * self.t as i64
    }

    pub fn realization(&self, sig: &Signature) -> PhaseOp {
        let n = sig.n();
        let mut out = PhaseOp::identity(n);
        for (op, pow) in [
            (op_r(sig), self.r),
            (op_g(sig), self.g),
            (op_x_laplacian(sig), self.l),
            (op_d(n), self.d),
            (op_t(sig), self.t),
        ] {
            for _ in 0..pow {
                out = out.compose(&op).unwrap();
            }
        }
        out
    }
}

impl std::fmt::Display for AnsatzMonom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_identity() {
            return write!(f, "1");
        }
        let mut first = true;
        for (name, pow) in
            [("R", self.r), ("G", self.g), ("L", self.l), ("D", self.d), ("T", self.t)]
        {
            if pow == 0 {
                continue;
            }
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if pow == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{pow}")?;
            }
        }
        Ok(())
    }
}

/// Ansatz monomials mapping degree-k symbols to degree-k′, with
/// x-degree drop at most `bound` and p-derivative order at most k.
/// The identity monomial is excluded: classification counts operators
/// beyond scalar multiples of the identity embedding.
fn classify_ansatz(k: usize, kp: usize, bound: usize) -> Vec<AnsatzMonom> {
    let shift = kp as i64 - k as i64;
    let mut out = Vec::new();
    for g in 0..=bound as u16 {
        for l in 0..=((bound as u16 - g) / 2) {
            for d in 0..=(bound as u16 - g - 2 * l) {
                for t in 0..=((k as u16).saturating_sub(d) / 2) {
                    let two_r = shift - g as i64 + d as i64 + 2 * t as i64;
                    if two_r < 0 || two_r % 2 != 0 {
                        continue;
                    }
                    let m = AnsatzMonom { r: (two_r / 2) as u16, g, l, d, t };
                    if m.p_order() <= k as i64 && !m.is_identity() {
                        out.push(m);
                    }
                }
            }
        }
    }
    out.sort();
    out
}

/// Result of classifying invariant operators S_{k,s} → S_{k′,s′}
/// within the contraction ansatz.
#[derive(Clone, Debug)]
pub struct Classification {
    /// Dimension of the space of realized invariant operators
    /// (solutions modulo combinations acting as zero on the source
    /// component after target projection).
    pub dimension: usize,
    /// Coset representatives, as coefficient vectors over `monomials`.
    pub basis_coeffs: Vec<Vec<Rat>>,
    /// The same representatives realized as operators.
    pub basis: Vec<PhaseOp>,
    pub monomials: Vec<AnsatzMonom>,
    pub solution_dim: usize,
    pub zero_action_dim: usize,
}

/// Dense matrix of the projection sending a degree-k p-polynomial to
/// the P_s part of its harmonic decomposition; columns follow
/// `exponents(n, k)`.
pub(crate) fn harmonic_projection_matrix(
    sig: &Signature,
    k: usize,
    s: usize,
) -> Result<Vec<Vec<Rat>>> {
    let n = sig.n();
    let mons = exponents(n, k);
    let mut cols = Vec::with_capacity(mons.len());
    for e in &mons {
        let mut unit = PhasePoly::zero(n);
        unit.add_term(Monom::new(vec![0; n], e.clone()), Rat::one());
        let comp = harmonic_component(&unit, sig, s)?;
        let out_mons = exponents(n, k - 2 * s);
        let mut col = vec![Rat::zero(); out_mons.len()];
        for (i, om) in out_mons.iter().enumerate() {
            col[i] = comp.coeff(&Monom::new(vec![0; n], om.clone()));
        }
        cols.push(col);
    }
    Ok(cols)
}

/// Applies a projection in column form to a pure-p polynomial of
/// degree k, producing coefficients over `exponents(n, k − 2s)`.
pub(crate) fn project_pure(
    poly: &PhasePoly,
    mons: &BTreeMap<Vec<u16>, usize>,
    cols: &[Vec<Rat>],
    out_len: usize,
) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); out_len];
    for (m, c) in poly.terms() {
        let col = &cols[mons[&m.p]];
        for (i, v) in col.iter().enumerate() {
            if !v.is_zero() {
                out[i] += c.clone() * v.clone();
            }
        }
    }
    out
}

/// Classifies conformally invariant operators S^δ_{k,s} → S^{δ′}_{k′,s′}
/// within the span of contraction monomials of x-degree drop ≤ bound.
///
/// An ansatz combination counts as invariant when its composition with
/// the harmonic projection onto the target component intertwines the
/// actions; combinations whose projected action on the source is zero
/// are quotiented out.  Expected dimensions are 0 or 1.
pub fn classify(
    k: usize,
    s: usize,
    kp: usize,
    sp: usize,
    delta: &Rat,
    delta_p: &Rat,
    sig: &Signature,
    bound: usize,
) -> Result<Classification> {
    if 2 * s > k || 2 * sp > kp {
        return Err(Error::Invalid("component indices need 2s <= k".into()));
    }
    let n = sig.n();
    let monomials = classify_ansatz(k, kp, bound);
    let basis = component_basis(sig, k, s)?;
    let proj = harmonic_projection_matrix(sig, kp, sp)?;
    let kp_mons: BTreeMap<Vec<u16>, usize> =
        exponents(n, kp).into_iter().enumerate().map(|(i, e)| (e, i)).collect();
    let out_len = exponents(n, kp - 2 * sp).len();

    let ops: Vec<PhaseOp> = monomials.iter().map(|m| m.realization(sig)).collect();
    let gens = constraining_generators(sig)?;

    // Defect rows: projected defect of each monomial on each x-group
    // and each source basis element, stacked over output monomials.
    let mut defect_rows: Vec<SparseRow> = Vec::new();
    let mut zero_rows: Vec<SparseRow> = Vec::new();
    {
        // keyed by (generator, x-group key, basis index, output index)
        let mut defect_cells: BTreeMap<(usize, Vec<i64>, Vec<u16>, usize, usize), SparseRow> =
            BTreeMap::new();
        let mut action_cells: BTreeMap<(Vec<i64>, Vec<u16>, usize, usize), SparseRow> =
            BTreeMap::new();
        for (col, op) in ops.iter().enumerate() {
            for (gi, gen) in gens.iter().enumerate() {
                let l_in = conformal::lie_symbol(gen, delta);
                let l_out = conformal::lie_symbol(gen, delta_p);
                let defect = l_out.compose(op)?.sub(&op.compose(&l_in)?)?;
                for ((u, c), group) in x_groups(&defect) {
                    for (wi, w) in basis.iter().enumerate() {
                        let img = group.apply(w)?;
                        if img.is_zero() {
                            continue;
                        }
                        let coords = project_pure(&img, &kp_mons, &proj, out_len);
                        for (oi, v) in coords.into_iter().enumerate() {
                            if !v.is_zero() {
                                defect_cells
                                    .entry((gi, u.clone(), c.clone(), wi, oi))
                                    .or_default()
                                    .push((col, v));
                            }
                        }
                    }
                }
            }
            for ((u, c), group) in x_groups(op) {
                for (wi, w) in basis.iter().enumerate() {
                    let img = group.apply(w)?;
                    if img.is_zero() {
                        continue;
                    }
                    let coords = project_pure(&img, &kp_mons, &proj, out_len);
                    for (oi, v) in coords.into_iter().enumerate() {
                        if !v.is_zero() {
                            action_cells
                                .entry((u.clone(), c.clone(), wi, oi))
                                .or_default()
                                .push((col, v));
                        }
                    }
                }
            }
        }
        defect_rows.extend(defect_cells.into_values());
        zero_rows.extend(action_cells.into_values());
    }
    for row in defect_rows.iter_mut().chain(zero_rows.iter_mut()) {
        row.sort_by_key(|(c, _)| *c);
    }

    let solutions = linalg::nullspace(monomials.len(), defect_rows);
    let zero_action = linalg::nullspace(monomials.len(), zero_rows);

    // Zero-action combinations are trivially invariant, hence lie in
    // the solution space; quotient them out for the realized count.
    let mut span = RowSpan::new(monomials.len());
    for v in &zero_action {
        span.insert(v.clone());
    }
    debug_assert_eq!(span.rank(), zero_action.len());
    let mut basis_coeffs = Vec::new();
    for v in &solutions {
        if span.insert(v.clone()) {
            basis_coeffs.push(to_dense_vec(v, monomials.len()));
        }
    }
    let dimension = basis_coeffs.len();
    let basis_ops: Vec<PhaseOp> = basis_coeffs
        .iter()
        .map(|coeffs| {
            let mut op = PhaseOp::zero(n);
            for (c, m) in coeffs.iter().zip(&ops) {
                if !c.is_zero() {
                    op = op.add(&m.scale(c)).unwrap();
                }
            }
            op
        })
        .collect();

    Ok(Classification {
        dimension,
        basis_coeffs,
        basis: basis_ops,
        monomials,
        solution_dim: solutions.len(),
        zero_action_dim: zero_action.len(),
    })
}

fn to_dense_vec(row: &SparseRow, ncols: usize) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); ncols];
    for (c, v) in row {
        out[*c] = v.clone();
    }
    out
}

/// Solves for the coefficients a_1..a_ℓ making
/// Λ^ℓ + a_1·GDΛ^{ℓ−1} + … + a_ℓ·G^ℓD^ℓ
/// conformally invariant on trace-free degree-k symbols at the weights
/// δ = 1/2 + (k−ℓ)/n, δ′ = δ + 2ℓ/n.
///
/// Returns the coefficients and a flag: true when the defect vanishes
/// identically on the component, false when it vanishes only after
/// projecting the output onto its trace-free part.
pub fn solve_lell(ell: usize, k: usize, sig: &Signature) -> Result<(Vec<Rat>, bool)> {
    if ell == 0 || k < ell {
        return Err(Error::Invalid("the family needs 1 <= ell <= k".into()));
    }
    let n = sig.n();
    let delta = rat(1, 2) + rat(k as i64 - ell as i64, n as i64);
    let delta_p = delta.clone() + rat(2 * ell as i64, n as i64);
    let monomials: Vec<AnsatzMonom> = (0..=ell as u16)
        .map(|m| AnsatzMonom { r: 0, g: m, l: ell as u16 - m, d: m, t: 0 })
        .collect();
    let ops: Vec<PhaseOp> = monomials.iter().map(|m| m.realization(sig)).collect();
    let basis = component_basis(sig, k, 0)?;
    let gens = constraining_generators(sig)?;
    let kp_mons: BTreeMap<Vec<u16>, usize> =
        exponents(n, k).into_iter().enumerate().map(|(i, e)| (e, i)).collect();

    let solve_with = |project: bool| -> Result<Option<Vec<Rat>>> {
        let proj = if project {
            Some(harmonic_projection_matrix(sig, k, 0)?)
        } else {
            None
        };
        let out_len = exponents(n, k).len();
        let mut rows: Vec<SparseRow> = Vec::new();
        let mut rhs: Vec<Rat> = Vec::new();
        let mut cells: BTreeMap<(usize, Vec<i64>, Vec<u16>, usize, usize), SparseRow> =
            BTreeMap::new();
        for (col, op) in ops.iter().enumerate() {
            for (gi, gen) in gens.iter().enumerate() {
                let l_in = conformal::lie_symbol(gen, &delta);
                let l_out = conformal::lie_symbol(gen, &delta_p);
                let defect = l_out.compose(op)?.sub(&op.compose(&l_in)?)?;
                for ((u, c), group) in x_groups(&defect) {
                    for (wi, w) in basis.iter().enumerate() {
                        let img = group.apply(w)?;
                        if img.is_zero() {
                            continue;
                        }
                        let coords = match &proj {
                            Some(p) => {
                                project_pure(&img, &kp_mons, p, exponents(n, k).len())
                            }
                            None => {
                                let mut v = vec![Rat::zero(); out_len];
                                for (m, cf) in img.terms() {
                                    v[kp_mons[&m.p]] = cf.clone();
                                }
                                v
                            }
                        };
                        for (oi, v) in coords.into_iter().enumerate() {
                            if !v.is_zero() {
                                cells
                                    .entry((gi, u.clone(), c.clone(), wi, oi))
                                    .or_default()
                                    .push((col, v));
                            }
                        }
                    }
                }
            }
        }
        for (_, mut row) in cells {
            row.sort_by_key(|(c, _)| *c);
            // column 0 is the fixed leading coefficient a_0 = 1
            let mut b = Rat::zero();
            let mut rest: SparseRow = Vec::new();
            for (c, v) in row {
                if c == 0 {
                    b = -v;
                } else {
                    rest.push((c - 1, v));
                }
            }
            rows.push(rest);
            rhs.push(b);
        }
        match linalg::solve(ell, &rows, &rhs) {
            linalg::Solve::Inconsistent => Ok(None),
            linalg::Solve::Solution { particular, kernel } => {
                if kernel.is_empty() {
                    Ok(Some(particular))
                } else {
                    Err(Error::Invalid(format!(
                        "coefficients of the degree-{ell} family on degree-{k} symbols are not unique"
                    )))
                }
            }
        }
    };

    if let Some(coeffs) = solve_with(false)? {
        return Ok((coeffs, true));
    }
    if let Some(coeffs) = solve_with(true)? {
        return Ok((coeffs, false));
    }
    Err(Error::Invalid(format!(
        "no invariant operator of the degree-{ell} family exists on degree-{k} symbols"
    )))
}

/// Names of the canonical operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CanonicalName {
    R,
    T,
    D,
    G,
    /// Trace-free projection of G on the source component S_{k,s}.
    G0 { k: usize, s: usize },
    Lambda,
    Ex,
    Ep,
    /// The invariant power family on trace-free degree-k symbols.
    Lell { ell: usize, k: usize },
}

impl std::fmt::Display for CanonicalName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CanonicalName::R => write!(f, "R"),
            CanonicalName::T => write!(f, "T"),
            CanonicalName::D => write!(f, "D"),
            CanonicalName::G => write!(f, "G"),
            CanonicalName::G0 { k, s } => write!(f, "G0[{k},{s}]"),
            CanonicalName::Lambda => write!(f, "Lambda"),
            CanonicalName::Ex => write!(f, "Ex"),
            CanonicalName::Ep => write!(f, "Ep"),
            CanonicalName::Lell { ell, k } => write!(f, "L{ell}[{k}]"),
        }
    }
}

/// A canonical operator together with its bidegree (change in x- and
/// p-degree).
#[derive(Clone, Debug)]
pub struct CanonicalOp {
    pub name: CanonicalName,
    pub realization: PhaseOp,
    pub bidegree: (i64, i64),
}

/// Builds a canonical operator.  For G0 the realization is the
/// combination of G and RD agreeing with the trace-free projection of
/// G on S_{k,s}; its coefficients come from an exact linear solve, and
/// it is only meaningful applied to that component.
pub fn canonical(name: CanonicalName, sig: &Signature) -> Result<CanonicalOp> {
    let n = sig.n();
    let op = match name {
        CanonicalName::R => op_r(sig),
        CanonicalName::T => op_t(sig),
        CanonicalName::D => op_d(n),
        CanonicalName::G => op_g(sig),
        CanonicalName::Lambda => op_x_laplacian(sig),
        CanonicalName::Ex => op_ex(n),
        CanonicalName::Ep => op_ep(n),
        CanonicalName::G0 { k, s } => g0_realization(sig, k, s)?,
        CanonicalName::Lell { ell, k } => {
            let (coeffs, _) = solve_lell(ell, k, sig)?;
            let mut op = AnsatzMonom { r: 0, g: 0, l: ell as u16, d: 0, t: 0 }.realization(sig);
            for (m, c) in coeffs.iter().enumerate() {
                let mono = AnsatzMonom {
                    r: 0,
                    g: m as u16 + 1,
                    l: (ell - m - 1) as u16,
                    d: m as u16 + 1,
                    t: 0,
                };
                op = op.add(&mono.realization(sig).scale(c))?;
            }
            op
        }
    };
    let bidegree = match name {
        CanonicalName::R => (0, 2),
        CanonicalName::T => (0, -2),
        CanonicalName::D => (-1, -1),
        CanonicalName::G | CanonicalName::G0 { .. } => (-1, 1),
        CanonicalName::Lambda => (-2, 0),
        CanonicalName::Ex | CanonicalName::Ep => (0, 0),
        CanonicalName::Lell { ell, .. } => (-2 * ell as i64, 0),
    };
    Ok(CanonicalOp { name, realization: op, bidegree })
}

/// G0 on S_{k,s} as c_G·G + c_RD·R∘D: the unique combination whose
/// output stays in the s-th harmonic summand, normalized to match the
/// s-part of G (c_G + 2s·c_RD = 1).
fn g0_realization(sig: &Signature, k: usize, s: usize) -> Result<PhaseOp> {
    let n = sig.n();
    let basis = component_basis(sig, k, s)?;
    let t_pow = op_t(sig).pow(s + 1)?;
    // Per x-derivative direction i, the pure-p parts of G and R∘D are
    // ε_i·p_i and R·∂_{p_i}; the output may only have harmonic parts
    // up to s, i.e. T^{s+1} of it vanishes.
    let mut rows: Vec<SparseRow> = Vec::new();
    let mut rhs: Vec<Rat> = Vec::new();
    let r_sym = crate::ring::r_symbol(sig);
    for i in 0..n {
        for w in &basis {
            let mut pi = PhasePoly::zero(n);
            let mut e = vec![0; n];
            e[i] = 1;
            pi.add_term(Monom::new(vec![0; n], e), rint(sig.eps(i)));
            let g_part = t_pow.apply(&pi.mul(w)?)?;
            let rd_part = t_pow.apply(&w.partial_p(i)?.mul(&r_sym)?)?;
            let mut mons: Vec<Monom> = g_part.terms().map(|(m, _)| m.clone()).collect();
            mons.extend(rd_part.terms().map(|(m, _)| m.clone()));
            mons.sort();
            mons.dedup();
            for m in mons {
                let row: SparseRow = [(0, g_part.coeff(&m)), (1, rd_part.coeff(&m))]
                    .into_iter()
                    .filter(|(_, v)| !v.is_zero())
                    .collect();
                rows.push(row);
                rhs.push(Rat::zero());
            }
        }
    }
    let norm: SparseRow = [(0, Rat::one()), (1, rint(2 * s as i64))]
        .into_iter()
        .filter(|(_, v)| !v.is_zero())
        .collect();
    rows.push(norm);
    rhs.push(Rat::one());
    match linalg::solve(2, &rows, &rhs) {
        linalg::Solve::Solution { particular, kernel } if kernel.is_empty() => {
            let g_coef = &particular[0];
            let rd_coef = &particular[1];
            Ok(op_g(sig).scale(g_coef).add(&op_r(sig).compose(&op_d(n))?.scale(rd_coef))?)
        }
        _ => Err(Error::Invalid(format!("trace-free projection of G on ({k},{s}) not determined"))),
    }
}
