//! Exact scalars and sparse polynomials on the phase space T*ℝⁿ.
//!
//! [`PhasePoly`] is the universal coefficient carrier of the crate:
//! operator symbols, density coefficients and momenta all live here.
//! Terms are kept in a canonical total order (momentum degree, momentum
//! exponents, position degree, position exponents), so two polynomials
//! are equal iff their term maps are syntactically equal.
//!
//! Sign convention, fixed once for the whole crate:
//! {a,b} = Σ_i (∂_{p_i}a ∂_{x^i}b − ∂_{x^i}a ∂_{p_i}b),
//! hence {p₁,x¹} = +1 and {μ_X, f(x)} = X(f) for μ_X = X^i p_i.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar: always reduced, denominator positive, zero is 0/1.
pub type Rat = BigRational;

/// `a/b` as an exact rational. Panics if `b == 0`.
pub fn rat(a: i64, b: i64) -> Rat {
    assert!(b != 0, "zero denominator");
    Rat::new(BigInt::from(a), BigInt::from(b))
}

/// Integer as an exact rational.
pub fn rint(a: i64) -> Rat {
    Rat::from(BigInt::from(a))
}

/// Parses `"num"` or `"num/den"` with optional sign, decimal-free.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let bad = || Error::BadRational(s.to_string());
    let mut parts = s.trim().splitn(2, '/');
    let num: BigInt = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    let den: BigInt = match parts.next() {
        Some(d) => d.trim().parse().map_err(|_| bad())?,
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rat::new(num, den))
}

/// Formats as `"num"` when integral, `"num/den"` otherwise.
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Metric signature of the flat model ℝ^{p,q}: η = diag(+1 ×p, −1 ×q),
/// with n = p + q ≥ 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    p: usize,
    q: usize,
}

impl Signature {
    pub fn new(p: usize, q: usize) -> Result<Self> {
        if p + q < 3 {
            return Err(Error::BadSignature { p, q });
        }
        Ok(Signature { p, q })
    }

    pub fn n(&self) -> usize {
        self.p + self.q
    }

    pub fn plus(&self) -> usize {
        self.p
    }

    pub fn minus(&self) -> usize {
        self.q
    }

    /// η_ii ∈ {+1, −1}; the metric is diagonal. Indices are 0-based.
    pub fn eps(&self, i: usize) -> i64 {
        assert!(i < self.n(), "index {i} out of range for n = {}", self.n());
        if i < self.p {
            1
        } else {
            -1
        }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

/// Exponent pair of one term: `x[i]` is the power of x^i, `p[i]` of p_i.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monom {
    pub x: Vec<u16>,
    pub p: Vec<u16>,
}

impl Monom {
    pub fn new(x: Vec<u16>, p: Vec<u16>) -> Self {
        debug_assert_eq!(x.len(), p.len());
        Monom { x, p }
    }

    pub fn x_degree(&self) -> usize {
        self.x.iter().map(|&e| e as usize).sum()
    }

    pub fn p_degree(&self) -> usize {
        self.p.iter().map(|&e| e as usize).sum()
    }
}

impl Ord for Monom {
    // Canonical order: p-degree, p-exponents, x-degree, x-exponents.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.p_degree(), &self.p, self.x_degree(), &self.x).cmp(&(
            other.p_degree(),
            &other.p,
            other.x_degree(),
            &other.x,
        ))
    }
}

impl PartialOrd for Monom {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse exact-rational polynomial in x¹..xⁿ, p₁..p_n.
///
/// Invariants: no stored zero coefficient; every exponent vector has
/// length n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhasePoly {
    n: usize,
    terms: BTreeMap<Monom, Rat>,
}

impl PhasePoly {
    pub fn zero(n: usize) -> Self {
        PhasePoly { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: Rat) -> Self {
        let mut poly = PhasePoly::zero(n);
        poly.add_term(Monom::new(vec![0; n], vec![0; n]), c);
        poly
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, Rat::one())
    }

    /// The coordinate x^i (0-based).
    pub fn x_var(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        let mut x = vec![0; n];
        x[i] = 1;
        let mut poly = PhasePoly::zero(n);
        poly.add_term(Monom::new(x, vec![0; n]), Rat::one());
        Ok(poly)
    }

    /// The momentum p_i (0-based).
    pub fn p_var(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        let mut p = vec![0; n];
        p[i] = 1;
        let mut poly = PhasePoly::zero(n);
        poly.add_term(Monom::new(vec![0; n], p), Rat::one());
        Ok(poly)
    }

    /// Builds a polynomial from (coefficient, x-exponents, p-exponents) triples.
    pub fn from_terms(n: usize, terms: &[(Rat, Vec<u16>, Vec<u16>)]) -> Result<Self> {
        let mut poly = PhasePoly::zero(n);
        for (c, x, p) in terms {
            if x.len() != n || p.len() != n {
                return Err(Error::DimensionMismatch(x.len().max(p.len()), n));
            }
            poly.add_term(Monom::new(x.clone(), p.clone()), c.clone());
        }
        Ok(poly)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monom, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monom) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    /// Adds `c·m` in place, dropping the term if it cancels.
    pub fn add_term(&mut self, m: Monom, c: Rat) {
        if c.is_zero() {
            return;
        }
        debug_assert_eq!(m.x.len(), self.n);
        debug_assert_eq!(m.p.len(), self.n);
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
        let mut out = PhasePoly::zero(self.n);
        for (m, c) in self.terms() {
            out.terms.insert(m.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return PhasePoly::zero(self.n);
        }
        let mut out = PhasePoly::zero(self.n);
        for (m, k) in self.terms() {
            out.terms.insert(m.clone(), k * c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_n(other)?;
        let mut out = PhasePoly::zero(self.n);
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                let x = ma.x.iter().zip(&mb.x).map(|(a, b)| a + b).collect();
                let p = ma.p.iter().zip(&mb.p).map(|(a, b)| a + b).collect();
                out.add_term(Monom::new(x, p), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut out = PhasePoly::one(self.n);
        for _ in 0..k {
            out = out.mul(self).expect("same n");
        }
        out
    }

    /// ∂/∂x^i (0-based).
    pub fn partial_x(&self, i: usize) -> Result<Self> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, n: self.n });
        }
        let mut out = PhasePoly::zero(self.n);
        for (m, c) in self.terms() {
            let e = m.x[i];
            if e > 0 {
                let mut x = m.x.clone();
                x[i] = e - 1;
                out.add_term(Monom::new(x, m.p.clone()), c * rint(e as i64));
            }
        }
        Ok(out)
    }

    /// ∂/∂p_i (0-based).
    pub fn partial_p(&self, i: usize) -> Result<Self> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, n: self.n });
        }
        let mut out = PhasePoly::zero(self.n);
        for (m, c) in self.terms() {
            let e = m.p[i];
            if e > 0 {
                let mut p = m.p.clone();
                p[i] = e - 1;
                out.add_term(Monom::new(m.x.clone(), p), c * rint(e as i64));
            }
        }
        Ok(out)
    }

    /// {a,b} = Σ_i (∂_{p_i}a ∂_{x^i}b − ∂_{x^i}a ∂_{p_i}b).
    pub fn poisson(&self, other: &Self) -> Result<Self> {
        self.check_same_n(other)?;
        let mut out = PhasePoly::zero(self.n);
        for i in 0..self.n {
            let t1 = self.partial_p(i)?.mul(&other.partial_x(i)?)?;
            let t2 = self.partial_x(i)?.mul(&other.partial_p(i)?)?;
            out = out.add(&t1)?.sub(&t2)?;
        }
        Ok(out)
    }

    /// Highest |β| over all terms; 0 for the zero polynomial.
    pub fn p_degree(&self) -> usize {
        self.terms.keys().map(|m| m.p_degree()).max().unwrap_or(0)
    }

    /// Highest |α| over all terms; 0 for the zero polynomial.
    pub fn x_degree(&self) -> usize {
        self.terms.keys().map(|m| m.x_degree()).max().unwrap_or(0)
    }

    /// Sum of the terms with |β| = k.
    pub fn p_component(&self, k: usize) -> Self {
        let mut out = PhasePoly::zero(self.n);
        for (m, c) in self.terms() {
            if m.p_degree() == k {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out
    }

    /// Sum of the terms with |α| = d.
    pub fn x_component(&self, d: usize) -> Self {
        let mut out = PhasePoly::zero(self.n);
        for (m, c) in self.terms() {
            if m.x_degree() == d {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out
    }

    /// True iff every term has |β| = k.
    pub fn is_p_homogeneous(&self, k: usize) -> bool {
        self.terms.keys().all(|m| m.p_degree() == k)
    }

    /// Occurring momentum degrees, ascending.
    pub fn p_degrees(&self) -> Vec<usize> {
        let mut ds: Vec<usize> = self.terms.keys().map(|m| m.p_degree()).collect();
        ds.sort_unstable();
        ds.dedup();
        ds
    }
}

impl fmt::Display for PhasePoly {
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
            write!(f, "{}", fmt_rat(c))?;
            for (i, &e) in m.x.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "·x{}", i + 1)?,
                    _ => write!(f, "·x{}^{}", i + 1, e)?,
                }
            }
            for (i, &e) in m.p.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "·p{}", i + 1)?,
                    _ => write!(f, "·p{}^{}", i + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

/// All exponent vectors of length `n` with |e| = `degree`, in
/// lexicographically descending order (a fixed, reproducible order).
pub fn exponents(n: usize, degree: usize) -> Vec<Vec<u16>> {
    fn rec(n: usize, degree: u16, prefix: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if n == 1 {
            prefix.push(degree);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=degree).rev() {
            prefix.push(e);
            rec(n - 1, degree - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, degree as u16, &mut Vec::new(), &mut out);
    out
}

/// All exponent vectors with |e| ≤ `max_degree`, degree-major order.
pub fn exponents_up_to(n: usize, max_degree: usize) -> Vec<Vec<u16>> {
    (0..=max_degree).flat_map(|d| exponents(n, d)).collect()
}

/// R = η^{ij} p_i p_j, the symbol of the Laplacian.
pub fn r_symbol(sig: &Signature) -> PhasePoly {
    let n = sig.n();
    let mut out = PhasePoly::zero(n);
    for i in 0..n {
        let mut p = vec![0; n];
        p[i] = 2;
        out.add_term(Monom::new(vec![0; n], p), rint(sig.eps(i)));
    }
    out
}

/// x² = η_{ij} x^i x^j.
pub fn x_square(sig: &Signature) -> PhasePoly {
    let n = sig.n();
    let mut out = PhasePoly::zero(n);
    for i in 0..n {
        let mut x = vec![0; n];
        x[i] = 2;
        out.add_term(Monom::new(x, vec![0; n]), rint(sig.eps(i)));
    }
    out
}

/// xp = x^i p_i.
pub fn xp_pairing(n: usize) -> PhasePoly {
    let mut out = PhasePoly::zero(n);
    for i in 0..n {
        let mut x = vec![0; n];
        let mut p = vec![0; n];
        x[i] = 1;
        p[i] = 1;
        out.add_term(Monom::new(x, p), Rat::one());
    }
    out
}
