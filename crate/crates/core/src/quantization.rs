//! Equivariant quantization of symbols into differential operators
//! between λ- and μ-densities, δ = μ − λ.
//!
//! The map on degree-k symbols is the identity normal ordering plus
//! correction terms of level m = 1..k drawn from the contraction
//! ansatz; the coefficients are fixed by exact equivariance under the
//! special-conformal generators.  Affine and dilation equivariance
//! hold structurally: correction monomials have constant coefficients,
//! are built from full η-contractions, and carry bidegree (−m, −m).
//!
//! Equivariance is imposed as an identity, not sampled: composing with
//! 𝒩 on either side is itself a symbol-space operator (the classical
//! composition formula), and the resulting defect must annihilate
//! every x^α p^β with |β| = k.  The x-side reduces exactly by linear
//! independence of falling factorials; the p-side is a finite slice.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::conformal::{self, ConformalGenerator, Label};
use crate::error::{Error, Result};
use crate::invariants::AnsatzMonom;
use crate::linalg::{self, SparseRow};
use crate::opalg::{falling, normal_order_n, DiffOp, OpMonom, PhaseOp};
use crate::ring::{exponents, exponents_up_to, fmt_rat, rat, rint, PhasePoly, Rat, Signature};

/// Correction monomials for degree-k symbols: level m has
/// G^g Λ^l D^d with g + 2l + d = m, prefixed by R^r and followed by
/// T^t with t = r + g + l, subject to d + 2t ≤ k (p-derivative order
/// at most k).  Level 0 is the identity.
pub fn quant_ansatz(k: usize) -> Vec<AnsatzMonom> {
    let mut out = vec![AnsatzMonom::identity()];
    for m in 1..=k as u16 {
        for g in 0..=m {
            for l in 0..=((m - g) / 2) {
                if g + 2 * l > m {
                    break;
                }
                let d = m - g - 2 * l;
                for r in 0u16.. {
                    let t = r + g + l;
                    if d as usize + 2 * t as usize > k {
                        break;
                    }
                    out.push(AnsatzMonom { r, g, l, d, t });
                }
            }
        }
    }
    out.sort();
    out
}

/// The symbol of ℓ^w_X ∘ 𝒩(f), as an operator acting on the symbol f.
fn left_composition(gen: &ConformalGenerator, w: &Rat) -> Result<PhaseOp> {
    let n = gen.n();
    let lsym = gen.symbol().add(&gen.divergence().scale(w))?;
    let mut op = PhaseOp::mult_by(&lsym);
    for (j, xj) in gen.field().iter().enumerate() {
        for (m, c) in xj.terms() {
            let mut dx = vec![0; n];
            dx[j] = 1;
            op.add_term(OpMonom::new(m.x.clone(), m.p.clone(), dx, vec![0; n]), c.clone());
        }
    }
    Ok(op)
}

/// The symbol of 𝒩(f) ∘ ℓ^w_X: Σ_γ (1/γ!) ∂_x^γ(symbol of ℓ) · ∂_p^γ f.
fn right_composition(gen: &ConformalGenerator, w: &Rat) -> Result<PhaseOp> {
    let n = gen.n();
    let lsym = gen.symbol().add(&gen.divergence().scale(w))?;
    let mut op = PhaseOp::zero(n);
    for gamma in exponents_up_to(n, 2) {
        let mut d = lsym.clone();
        let mut fact = BigInt::one();
        for i in 0..n {
            for step in 0..gamma[i] {
                d = d.partial_x(i)?;
                fact *= BigInt::from(step as i64 + 1);
            }
        }
        if d.is_zero() {
            continue;
        }
        let scale = Rat::one() / Rat::from(fact);
        for (m, c) in d.terms() {
            op.add_term(
                OpMonom::new(m.x.clone(), m.p.clone(), vec![0; n], gamma.clone()),
                c.clone() * scale.clone(),
            );
        }
    }
    Ok(op)
}

fn ff_prod(beta: &[u16], dp: &[u16]) -> BigInt {
    let mut out = BigInt::one();
    for (b, d) in beta.iter().zip(dp) {
        if d > b {
            return BigInt::zero();
        }
        out *= falling(*b, *d);
    }
    out
}

/// Outcome of solving for the quantization coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QuantStatus {
    Unique,
    NonUnique { kernel_dim: usize },
    NonExistent,
}

impl std::fmt::Display for QuantStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QuantStatus::Unique => write!(f, "unique"),
            QuantStatus::NonUnique { kernel_dim } => {
                write!(f, "non-unique (kernel dimension {kernel_dim})")
            }
            QuantStatus::NonExistent => write!(f, "non-existent"),
        }
    }
}

/// The solved equivariant quantization on degree-k symbols of weight
/// δ, landing in operators on λ-densities.
#[derive(Clone, Debug)]
pub struct QuantMap {
    sig: Signature,
    k: usize,
    lambda: Rat,
    delta: Rat,
    status: QuantStatus,
    coeffs: BTreeMap<AnsatzMonom, Rat>,
    realized: Vec<(PhaseOp, Rat)>,
}

impl QuantMap {
    pub fn sig(&self) -> &Signature {
        &self.sig
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lambda(&self) -> &Rat {
        &self.lambda
    }

    pub fn delta(&self) -> &Rat {
        &self.delta
    }

    pub fn mu(&self) -> Rat {
        self.lambda.clone() + self.delta.clone()
    }

    pub fn status(&self) -> &QuantStatus {
        &self.status
    }

    /// Solved coefficients over the ansatz monomials (zero entries
    /// omitted; the identity monomial always carries 1).
    pub fn coefficients(&self) -> &BTreeMap<AnsatzMonom, Rat> {
        &self.coeffs
    }

    /// Quantizes a p-homogeneous degree-k symbol.
    pub fn apply(&self, p: &PhasePoly) -> Result<DiffOp> {
        if self.status != QuantStatus::Unique {
            return Err(Error::Resonance(format!(
                "quantization of degree-{} symbols at delta = {} is {}",
                self.k,
                fmt_rat(&self.delta),
                self.status
            )));
        }
        let n = self.sig.n();
        if p.is_zero() {
            return Ok(DiffOp::zero(n, self.lambda.clone(), self.mu()));
        }
        if !p.is_p_homogeneous(self.k) {
            return Err(Error::Invalid(format!(
                "quantization map for degree {} applied to a symbol of other degree",
                self.k
            )));
        }
        let mut sym = PhasePoly::zero(n);
        for (op, c) in &self.realized {
            sym = sym.add(&op.apply(p)?.scale(c))?;
        }
        Ok(normal_order_n(&sym, self.lambda.clone(), self.mu()))
    }
}

/// Solves for the equivariant quantization of degree-k weight-δ
/// symbols over λ-densities.
pub fn solve_quantization(
    k: usize,
    delta: &Rat,
    lambda: &Rat,
    sig: &Signature,
) -> Result<QuantMap> {
    let n = sig.n();
    let mu = lambda.clone() + delta.clone();
    let monomials = quant_ansatz(k);
    let ops: Vec<PhaseOp> = monomials.iter().map(|m| m.realization(sig)).collect();
    let gens: Vec<ConformalGenerator> = conformal::generators(sig)?
        .into_iter()
        .filter(|g| matches!(g.label(), Label::SpecialConformal(_)))
        .collect();
    let betas = exponents(n, k);

    // Rows keyed by (generator, x-offset, x-derivative, p-offset,
    // slice point); the identity column is pinned to 1 and moved to
    // the right-hand side.
    let mut cells: BTreeMap<(usize, Vec<i64>, Vec<u16>, Vec<i64>, usize), (SparseRow, Rat)> =
        BTreeMap::new();
    for (gi, gen) in gens.iter().enumerate() {
        let l_in = conformal::lie_symbol(gen, delta);
        let m_left = left_composition(gen, &mu)?;
        let m_right = right_composition(gen, lambda)?;
        for (col, op) in ops.iter().enumerate() {
            let defect = op
                .compose(&l_in)?
                .sub(&m_left.compose(op)?)?
                .add(&m_right.compose(op)?)?;
            let mut groups: BTreeMap<(Vec<i64>, Vec<u16>, Vec<i64>), Vec<(Vec<u16>, Rat)>> =
                BTreeMap::new();
            for (m, c) in defect.terms() {
                let u: Vec<i64> = (0..n).map(|i| m.x[i] as i64 - m.dx[i] as i64).collect();
                let v: Vec<i64> = (0..n).map(|i| m.p[i] as i64 - m.dp[i] as i64).collect();
                groups
                    .entry((u, m.dx.clone(), v))
                    .or_default()
                    .push((m.dp.clone(), c.clone()));
            }
            for ((u, c_exp, v), terms) in groups {
                for (bi, beta) in betas.iter().enumerate() {
                    let mut val = Rat::zero();
                    for (dp, c) in &terms {
                        let ff = ff_prod(beta, dp);
                        if !ff.is_zero() {
                            val += c.clone() * Rat::from(ff);
                        }
                    }
                    if val.is_zero() {
                        continue;
                    }
                    let cell = cells
                        .entry((gi, u.clone(), c_exp.clone(), v.clone(), bi))
                        .or_insert_with(|| (Vec::new(), Rat::zero()));
                    if col == 0 {
                        cell.1 -= val;
                    } else {
                        cell.0.push((col - 1, val));
                    }
                }
            }
        }
    }

    let ncols = monomials.len() - 1;
    let mut rows = Vec::with_capacity(cells.len());
    let mut rhs = Vec::with_capacity(cells.len());
    for (_, (mut row, b)) in cells {
        row.sort_by_key(|(c, _)| *c);
        rows.push(row);
        rhs.push(b);
    }

    let (status, solution) = match linalg::solve(ncols, &rows, &rhs) {
        linalg::Solve::Inconsistent => (QuantStatus::NonExistent, None),
        linalg::Solve::Solution { particular, kernel } => {
            if kernel.is_empty() {
                (QuantStatus::Unique, Some(particular))
            } else {
                (QuantStatus::NonUnique { kernel_dim: kernel.len() }, Some(particular))
            }
        }
    };

    let mut coeffs = BTreeMap::new();
    let mut realized = Vec::new();
    if let Some(sol) = &solution {
        coeffs.insert(AnsatzMonom::identity(), Rat::one());
        realized.push((ops[0].clone(), Rat::one()));
        for (i, c) in sol.iter().enumerate() {
            if !c.is_zero() {
                coeffs.insert(monomials[i + 1], c.clone());
                realized.push((ops[i + 1].clone(), c.clone()));
            }
        }
    }
    if status != QuantStatus::Unique {
        realized.clear();
    }

    Ok(QuantMap {
        sig: *sig,
        k,
        lambda: lambda.clone(),
        delta: delta.clone(),
        status,
        coeffs,
        realized,
    })
}

/// Closed-form coefficients on trace-free degree-k symbols:
/// Q(P) = Σ_m c_m 𝒩(D^m P) with c_0 = 1 and
/// c_m = (k − m + nλ) / (m (2k − m − 1 + n(1 − δ))) · c_{m−1}.
pub fn radoux_coeffs(k: usize, n: usize, lambda: &Rat, delta: &Rat) -> Result<Vec<Rat>> {
    let mut out = vec![Rat::one()];
    for m in 1..=k as i64 {
        let denom = rint(m) * (rint(2 * k as i64 - m - 1) + rint(n as i64) * (Rat::one() - delta.clone()));
        if denom.is_zero() {
            return Err(Error::Resonance(format!(
                "trace-free quantization coefficient denominator vanishes at level {m} (delta = {})",
                fmt_rat(delta)
            )));
        }
        let numer = rint(k as i64 - m) + rint(n as i64) * lambda.clone();
        let prev = out.last().unwrap().clone();
        out.push(prev * numer / denom);
    }
    Ok(out)
}

/// Weights δ at which the degree-k quantization is resonant:
/// δ = 1 + (2k − 1 − m)/n for m = 1..k.
pub fn excluded_weights(k: usize, n: usize) -> Vec<Rat> {
    (1..=k as i64).map(|m| Rat::one() + rat(2 * k as i64 - 1 - m, n as i64)).collect()
}

/// Quantizes a trace-free p-homogeneous symbol by the closed-form
/// coefficients; independent of the equivariance solver.
pub fn quantize_tracefree(
    p: &PhasePoly,
    lambda: &Rat,
    mu: &Rat,
    sig: &Signature,
) -> Result<DiffOp> {
    let n = sig.n();
    if p.is_zero() {
        return Ok(DiffOp::zero(n, lambda.clone(), mu.clone()));
    }
    let degs = p.p_degrees();
    if degs.len() != 1 {
        return Err(Error::Invalid("trace-free quantization needs a p-homogeneous symbol".into()));
    }
    let k = degs[0];
    if !crate::invariants::op_t(sig).apply(p)?.is_zero() {
        return Err(Error::Invalid("symbol is not trace-free".into()));
    }
    let delta = mu.clone() - lambda.clone();
    let coeffs = radoux_coeffs(k, n, lambda, &delta)?;
    let d = crate::invariants::op_d(n);
    let mut sym = PhasePoly::zero(n);
    let mut power = p.clone();
    for c in &coeffs {
        sym = sym.add(&power.scale(c))?;
        power = d.apply(&power)?;
    }
    Ok(normal_order_n(&sym, lambda.clone(), mu.clone()))
}

/// Caches solved quantization maps at fixed weights (λ, μ).
pub struct Quantizer {
    sig: Signature,
    lambda: Rat,
    mu: Rat,
    maps: BTreeMap<usize, QuantMap>,
}

impl Quantizer {
    pub fn new(sig: &Signature, lambda: &Rat, mu: &Rat) -> Self {
        Quantizer {
            sig: *sig,
            lambda: lambda.clone(),
            mu: mu.clone(),
            maps: BTreeMap::new(),
        }
    }

    pub fn map(&mut self, k: usize) -> Result<&QuantMap> {
        if !self.maps.contains_key(&k) {
            let delta = self.mu.clone() - self.lambda.clone();
            let qm = solve_quantization(k, &delta, &self.lambda, &self.sig)?;
            self.maps.insert(k, qm);
        }
        Ok(&self.maps[&k])
    }

    /// Quantizes a symbol degree by degree.
    pub fn quantize(&mut self, p: &PhasePoly) -> Result<DiffOp> {
        let mut out = DiffOp::zero(self.sig.n(), self.lambda.clone(), self.mu.clone());
        for k in p.p_degrees() {
            let comp = p.p_component(k);
            let piece = self.map(k)?.apply(&comp)?;
            out = out.add(&piece)?;
        }
        Ok(out)
    }

    /// Inverts the quantization grade by grade: strips the top-order
    /// full symbol, subtracts its quantization, and recurses.
    pub fn dequantize(&mut self, a: &DiffOp) -> Result<PhasePoly> {
        if a.lambda() != &self.lambda || a.mu() != &self.mu {
            return Err(Error::WeightMismatch(format!(
                "operator weights ({}, {}) differ from quantizer weights ({}, {})",
                fmt_rat(a.lambda()),
                fmt_rat(a.mu()),
                fmt_rat(&self.lambda),
                fmt_rat(&self.mu)
            )));
        }
        let mut total = PhasePoly::zero(self.sig.n());
        let mut rem = a.clone();
        while !rem.is_zero() {
            let d = rem.order();
            let sigma = rem.symbol_at_order(d);
            let qd = self.map(d)?.apply(&sigma)?;
            rem = rem.sub(&qd)?;
            debug_assert!(rem.is_zero() || rem.order() < d);
            total = total.add(&sigma)?;
        }
        Ok(total)
    }
}

/// One-shot equivariant quantization at weights (λ, μ).
pub fn quantize(p: &PhasePoly, lambda: &Rat, mu: &Rat, sig: &Signature) -> Result<DiffOp> {
    Quantizer::new(sig, lambda, mu).quantize(p)
}

/// One-shot inverse at the operator's own weights.
pub fn dequantize(a: &DiffOp, sig: &Signature) -> Result<PhasePoly> {
    Quantizer::new(sig, a.lambda(), a.mu()).dequantize(a)
}
