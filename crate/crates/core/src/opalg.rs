//! The normal-ordered operator algebra on phase-space polynomials.
//!
//! A [`PhaseOp`] is a finite sum of terms x^a p^b ∂_x^c ∂_p^d with all
//! multiplications acting after all derivations; composition rewrites
//! any product back into this canonical form via Leibniz commutation.
//! A [`DiffOp`] is the restricted shape Σ_α A_α(x) ∂_x^α that acts on
//! densities; it carries its source and target weights (λ, μ).

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg;
use crate::ring::{exponents, Monom, PhasePoly, Rat, Signature};

/// e·(e−1)···(e−t+1).
pub(crate) fn falling(e: u16, t: u16) -> BigInt {
    let mut acc = BigInt::one();
    for j in 0..t {
        acc *= BigInt::from(e as i64 - j as i64);
    }
    acc
}

/// Binomial coefficient C(e, t) for e ≥ t.
fn binom(e: u16, t: u16) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for j in 0..t {
        num *= BigInt::from((e - j) as i64);
        den *= BigInt::from((j + 1) as i64);
    }
    num / den
}

/// Iterates over all γ with 0 ≤ γ_i ≤ bound_i.
fn for_each_below(bound: &[u16], mut f: impl FnMut(&[u16])) {
    let n = bound.len();
    let mut cur = vec![0u16; n];
    loop {
        f(&cur);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            if cur[i] < bound[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

/// One operator term: x^a p^b ∂_x^c ∂_p^d.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpMonom {
    pub x: Vec<u16>,
    pub p: Vec<u16>,
    pub dx: Vec<u16>,
    pub dp: Vec<u16>,
}

impl OpMonom {
    pub fn new(x: Vec<u16>, p: Vec<u16>, dx: Vec<u16>, dp: Vec<u16>) -> Self {
        OpMonom { x, p, dx, dp }
    }
}

/// Normal-ordered operator with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseOp {
    n: usize,
    terms: BTreeMap<OpMonom, Rat>,
}

impl PhaseOp {
    pub fn zero(n: usize) -> Self {
        PhaseOp { n, terms: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut op = PhaseOp::zero(n);
        op.add_term(
            OpMonom::new(vec![0; n], vec![0; n], vec![0; n], vec![0; n]),
            Rat::one(),
        );
        op
    }

    /// Multiplication by a phase polynomial.
    pub fn mult_by(f: &PhasePoly) -> Self {
        let n = f.n();
        let mut op = PhaseOp::zero(n);
        for (m, c) in f.terms() {
            op.add_term(OpMonom::new(m.x.clone(), m.p.clone(), vec![0; n], vec![0; n]), c.clone());
        }
        op
    }

    /// ∂/∂x^i.
    pub fn deriv_x(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        let mut dx = vec![0; n];
        dx[i] = 1;
        let mut op = PhaseOp::zero(n);
        op.add_term(OpMonom::new(vec![0; n], vec![0; n], dx, vec![0; n]), Rat::one());
        Ok(op)
    }

    /// ∂/∂p_i.
    pub fn deriv_p(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        let mut dp = vec![0; n];
        dp[i] = 1;
        let mut op = PhaseOp::zero(n);
        op.add_term(OpMonom::new(vec![0; n], vec![0; n], vec![0; n], dp), Rat::one());
        Ok(op)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OpMonom, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, m: OpMonom, c: Rat) {
        if c.is_zero() {
            return;
        }
        debug_assert!(
            m.x.len() == self.n && m.p.len() == self.n && m.dx.len() == self.n && m.dp.len() == self.n
        );
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get().clone() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    fn check_same_n(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_n(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_n(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let mut out = PhaseOp::zero(self.n);
        for (m, c) in self.terms() {
            out.terms.insert(m.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, k: &Rat) -> Self {
        if k.is_zero() {
            return PhaseOp::zero(self.n);
        }
        let mut out = PhaseOp::zero(self.n);
        for (m, c) in self.terms() {
            out.terms.insert(m.clone(), c * k);
        }
        out
    }

    /// Exact action on a polynomial.
    pub fn apply(&self, f: &PhasePoly) -> Result<PhasePoly> {
        if self.n != f.n() {
            return Err(Error::DimensionMismatch(self.n, f.n()));
        }
        let mut out = PhasePoly::zero(self.n);
        for (om, oc) in self.terms() {
            'term: for (fm, fc) in f.terms() {
                let mut coef = oc * fc;
                let mut x = Vec::with_capacity(self.n);
                let mut p = Vec::with_capacity(self.n);
                for i in 0..self.n {
                    if fm.x[i] < om.dx[i] || fm.p[i] < om.dp[i] {
                        continue 'term;
                    }
                    x.push(fm.x[i] - om.dx[i] + om.x[i]);
                    p.push(fm.p[i] - om.dp[i] + om.p[i]);
                    if om.dx[i] > 0 {
                        coef = coef * Rat::from(falling(fm.x[i], om.dx[i]));
                    }
                    if om.dp[i] > 0 {
                        coef = coef * Rat::from(falling(fm.p[i], om.dp[i]));
                    }
                }
                out.add_term(Monom::new(x, p), coef);
            }
        }
        Ok(out)
    }

    /// Normal-ordered A∘B: op_apply(op_compose(A,B), f) = A(B(f)).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same_n(other)?;
        let n = self.n;
        let mut out = PhaseOp::zero(n);
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                // Commute ∂_x^{c₁} past x^{a₂} and ∂_p^{d₁} past p^{b₂}.
                let gx: Vec<u16> = (0..n).map(|i| ma.dx[i].min(mb.x[i])).collect();
                let gp: Vec<u16> = (0..n).map(|i| ma.dp[i].min(mb.p[i])).collect();
                let base = ca * cb;
                for_each_below(&gx, |cx| {
                    let mut coef_x = BigInt::one();
                    for i in 0..n {
                        if cx[i] > 0 {
                            coef_x *= binom(ma.dx[i], cx[i]) * falling(mb.x[i], cx[i]);
                        }
                    }
                    for_each_below(&gp, |cp| {
                        let mut coef = coef_x.clone();
                        for i in 0..n {
                            if cp[i] > 0 {
                                coef *= binom(ma.dp[i], cp[i]) * falling(mb.p[i], cp[i]);
                            }
                        }
                        let term = OpMonom::new(
                            (0..n).map(|i| ma.x[i] + mb.x[i] - cx[i]).collect(),
                            (0..n).map(|i| ma.p[i] + mb.p[i] - cp[i]).collect(),
                            (0..n).map(|i| ma.dx[i] + mb.dx[i] - cx[i]).collect(),
                            (0..n).map(|i| ma.dp[i] + mb.dp[i] - cp[i]).collect(),
                        );
                        out.add_term(term, &base * Rat::from(coef));
                    });
                });
            }
        }
        Ok(out)
    }

    /// A∘B − B∘A.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.compose(other)?.sub(&other.compose(self)?)
    }

    /// Self composed k times; k = 0 gives the identity.
    pub fn pow(&self, k: usize) -> Result<Self> {
        let mut out = PhaseOp::identity(self.n);
        for _ in 0..k {
            out = out.compose(self)?;
        }
        Ok(out)
    }

    /// Max |c| over terms (order in ∂_x); 0 for the zero operator.
    pub fn x_order(&self) -> usize {
        self.terms
            .keys()
            .map(|m| m.dx.iter().map(|&e| e as usize).sum())
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for PhaseOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", crate::ring::fmt_rat(c))?;
            let blocks: [(&str, &Vec<u16>); 4] =
                [("x", &m.x), ("p", &m.p), ("dx", &m.dx), ("dp", &m.dp)];
            for (name, exps) in blocks {
                for (i, &e) in exps.iter().enumerate() {
                    match e {
                        0 => {}
                        1 => write!(f, "·{}{}", name, i + 1)?,
                        _ => write!(f, "·{}{}^{}", name, i + 1, e)?,
                    }
                }
            }
        }
        Ok(())
    }
}

/// Differential operator Σ_α A_α(x) ∂_x^α from λ-densities to
/// μ-densities (weights recorded; densities are trivialized by the
/// flat volume).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffOp {
    lambda: Rat,
    mu: Rat,
    op: PhaseOp,
}

impl DiffOp {
    pub fn zero(n: usize, lambda: Rat, mu: Rat) -> Self {
        DiffOp { lambda, mu, op: PhaseOp::zero(n) }
    }

    /// Wraps a PhaseOp that must contain no p-multiplications and no
    /// ∂_p derivations.
    pub fn from_phase_op(op: PhaseOp, lambda: Rat, mu: Rat) -> Result<Self> {
        for (m, _) in op.terms() {
            if m.p.iter().any(|&e| e != 0) || m.dp.iter().any(|&e| e != 0) {
                return Err(Error::Invalid(
                    "differential operator with momentum multiplications or ∂_p".into(),
                ));
            }
        }
        Ok(DiffOp { lambda, mu, op })
    }

    pub fn n(&self) -> usize {
        self.op.n()
    }

    pub fn lambda(&self) -> &Rat {
        &self.lambda
    }

    pub fn mu(&self) -> &Rat {
        &self.mu
    }

    pub fn as_phase_op(&self) -> &PhaseOp {
        &self.op
    }

    pub fn is_zero(&self) -> bool {
        self.op.is_zero()
    }

    /// Max |α|; 0 for the zero operator.
    pub fn order(&self) -> usize {
        self.op.x_order()
    }

    /// Full symbol: x^a ∂_x^c ↦ x^a p^c, the inverse of normal ordering.
    pub fn full_symbol(&self) -> PhasePoly {
        let n = self.n();
        let mut out = PhasePoly::zero(n);
        for (m, c) in self.op.terms() {
            out.add_term(Monom::new(m.x.clone(), m.dx.clone()), c.clone());
        }
        out
    }

    /// The |α| = k part of the full symbol.
    pub fn symbol_at_order(&self, k: usize) -> PhasePoly {
        self.full_symbol().p_component(k)
    }

    pub fn apply(&self, f: &PhasePoly) -> Result<PhasePoly> {
        self.op.apply(f)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.lambda != other.lambda || self.mu != other.mu {
            return Err(Error::WeightMismatch(format!(
                "adding ({},{}) to ({},{})",
                self.lambda, self.mu, other.lambda, other.mu
            )));
        }
        Ok(DiffOp { lambda: self.lambda.clone(), mu: self.mu.clone(), op: self.op.add(&other.op)? })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        DiffOp { lambda: self.lambda.clone(), mu: self.mu.clone(), op: self.op.neg() }
    }

    pub fn scale(&self, k: &Rat) -> Self {
        DiffOp { lambda: self.lambda.clone(), mu: self.mu.clone(), op: self.op.scale(k) }
    }

    /// A∘B with weight chaining: B maps λ_B → μ_B, A maps μ_B → μ_A.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.lambda != other.mu {
            return Err(Error::WeightMismatch(format!(
                "composing source weight {} with target weight {}",
                self.lambda, other.mu
            )));
        }
        Ok(DiffOp {
            lambda: other.lambda.clone(),
            mu: self.mu.clone(),
            op: self.op.compose(&other.op)?,
        })
    }
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.op)
    }
}

/// Normal ordering 𝒩: A_β(x) p^β ↦ A_β(x) ∂_x^β, with weights attached
/// to the resulting operator.
pub fn normal_order_n(f: &PhasePoly, lambda: Rat, mu: Rat) -> DiffOp {
    let n = f.n();
    let mut op = PhaseOp::zero(n);
    for (m, c) in f.terms() {
        op.add_term(OpMonom::new(m.x.clone(), vec![0; n], m.p.clone(), vec![0; n]), c.clone());
    }
    DiffOp { lambda, mu, op }
}

/// Δ^ℓ = 𝒩(R^ℓ) as an operator from weight-λ to weight-(λ+2ℓ/n)
/// densities.
pub fn laplacian_power(sig: &Signature, ell: usize, lambda: Rat) -> DiffOp {
    let n = sig.n();
    let r_l = crate::ring::r_symbol(sig).pow(ell);
    let shift = Rat::new(BigInt::from(2 * ell as i64), BigInt::from(n as i64));
    let mu = &lambda + shift;
    normal_order_n(&r_l, lambda, mu)
}

/// Exact division W·R^ℓ = f in the polynomial ring, if W exists.
///
/// Solved per homogeneous momentum degree and per x-monomial by an
/// exact linear system (R is not a monomial, so monomial division does
/// not apply).
pub fn divide_by_r_power(f: &PhasePoly, ell: usize, sig: &Signature) -> Option<PhasePoly> {
    let n = sig.n();
    assert_eq!(f.n(), n);
    if f.is_zero() {
        return Some(PhasePoly::zero(n));
    }
    let r_l = crate::ring::r_symbol(sig).pow(ell);
    let mut quotient = PhasePoly::zero(n);
    for k in f.p_degrees() {
        if k < 2 * ell {
            return None;
        }
        let src = exponents(n, k - 2 * ell);
        let dst = exponents(n, k);
        let dst_index: BTreeMap<&Vec<u16>, usize> =
            dst.iter().enumerate().map(|(i, e)| (e, i)).collect();
        // Columns: candidate W monomials; rows: target p-monomials.
        let mut cols: Vec<Vec<(usize, Rat)>> = vec![Vec::new(); src.len()];
        for (j, e) in src.iter().enumerate() {
            for (rm, rc) in r_l.terms() {
                let sum: Vec<u16> = e.iter().zip(&rm.p).map(|(a, b)| a + b).collect();
                cols[j].push((dst_index[&sum], rc.clone()));
            }
        }
        let mut rows: Vec<Vec<(usize, Rat)>> = vec![Vec::new(); dst.len()];
        for (j, col) in cols.iter().enumerate() {
            for (i, c) in col {
                rows[*i].push((j, c.clone()));
            }
        }
        // Group the degree-k component by x-monomial and solve each slice.
        let comp = f.p_component(k);
        let mut slices: BTreeMap<Vec<u16>, Vec<Rat>> = BTreeMap::new();
        for (m, c) in comp.terms() {
            let slice = slices.entry(m.x.clone()).or_insert_with(|| vec![Rat::zero(); dst.len()]);
            slice[dst_index[&m.p]] = c.clone();
        }
        for (xmon, rhs) in slices {
            match linalg::solve(src.len(), &rows, &rhs) {
                linalg::Solve::Inconsistent => return None,
                linalg::Solve::Solution { particular, .. } => {
                    for (j, c) in particular.into_iter().enumerate() {
                        quotient.add_term(Monom::new(xmon.clone(), src[j].clone()), c);
                    }
                }
            }
        }
    }
    Some(quotient)
}

/// Right division by Δ^ℓ: returns B with A = B∘Δ^ℓ when it exists.
///
/// Peels the top-order symbol, tests divisibility by R^ℓ, subtracts
/// B_top∘Δ^ℓ and recurses; terminates because the order strictly drops.
pub fn right_divide(a: &DiffOp, ell: usize, sig: &Signature) -> Result<Option<DiffOp>> {
    let n = sig.n();
    if a.n() != n {
        return Err(Error::DimensionMismatch(a.n(), n));
    }
    if ell == 0 {
        return Err(Error::Invalid("right division needs a positive power".into()));
    }
    let shift = Rat::new(BigInt::from(2 * ell as i64), BigInt::from(n as i64));
    let b_lambda = a.lambda().clone() + shift;
    let delta_l = laplacian_power(sig, ell, a.lambda().clone());
    let mut quot = DiffOp::zero(n, b_lambda, a.mu().clone());
    let mut rem = a.clone();
    while !rem.is_zero() {
        let d = rem.order();
        if d < 2 * ell {
            return Ok(None);
        }
        let sigma = rem.symbol_at_order(d);
        let w = match divide_by_r_power(&sigma, ell, sig) {
            None => return Ok(None),
            Some(w) => w,
        };
        let b_top = normal_order_n(&w, quot.lambda().clone(), quot.mu().clone());
        rem = rem.sub(&b_top.compose(&delta_l)?)?;
        quot = quot.add(&b_top)?;
        debug_assert!(rem.is_zero() || rem.order() < d);
    }
    Ok(Some(quot))
}
