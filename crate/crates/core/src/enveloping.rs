//! Degree-truncated symmetric and enveloping algebras over the
//! conformal Lie algebra, with the three algebra morphisms that turn
//! abstract degree-2 elements into symbols or operators: the
//! symmetrization into the enveloping algebra, the moment-map
//! pullbacks (model and ambient), and the density-representation
//! morphism.  Hosts the Casimir, the pair decomposition of symmetric
//! 2-tensors over the algebra, the degree-2 ideal kernels, and the
//! quadratic ideal generators tied to the Laplacian.
//!
//! Elements are stored over weakly increasing index words in a fixed
//! generator order; enveloping products rewrite to that basis with the
//! structure constants, which terminates because each swap either
//! shortens the word or removes an inversion.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::conformal::{self, ConformalGenerator};
use crate::error::{Error, Result};
use crate::linalg::{self, SparseRow};
use crate::opalg::{normal_order_n, DiffOp, OpMonom};
use crate::ring::{rint, Monom, PhasePoly, Rat, Signature};

/// Degree cap for enveloping arithmetic; all degree-2 ideal statements
/// plus one extra product fit below it.
pub const MAX_WORD_DEGREE: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvKind {
    Symmetric,
    Enveloping,
}

/// An element of the truncated symmetric or enveloping algebra,
/// expanded over weakly increasing generator-index words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvElement {
    pub kind: EnvKind,
    pub max_degree: usize,
    coeffs: BTreeMap<Vec<usize>, Rat>,
}

impl EnvElement {
    pub fn zero(kind: EnvKind) -> Self {
        EnvElement { kind, max_degree: MAX_WORD_DEGREE, coeffs: BTreeMap::new() }
    }

    pub fn unit(kind: EnvKind) -> Self {
        let mut e = EnvElement::zero(kind);
        e.add_word(Vec::new(), Rat::one());
        e
    }

    pub fn generator(kind: EnvKind, index: usize) -> Self {
        let mut e = EnvElement::zero(kind);
        e.add_word(vec![index], Rat::one());
        e
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest word length present.
    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(|w| w.len()).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Rat)> {
        self.coeffs.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, word: &[usize]) -> Rat {
        self.coeffs.get(word).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn add_word(&mut self, word: Vec<usize>, c: Rat) {
        if c.is_zero() {
            return;
        }
        debug_assert!(word.windows(2).all(|w| w[0] <= w[1]), "word must be sorted");
        debug_assert!(word.len() <= self.max_degree);
        use std::collections::btree_map::Entry;
        match self.coeffs.entry(word) {
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

    fn check_kind(&self, other: &Self) -> Result<()> {
        if self.kind != other.kind {
            return Err(Error::Invalid("mixing symmetric and enveloping elements".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_kind(other)?;
        let mut out = self.clone();
        out.max_degree = self.max_degree.max(other.max_degree);
        for (w, c) in other.terms() {
            out.add_word(w.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, k: &Rat) -> Self {
        let mut out = EnvElement::zero(self.kind);
        out.max_degree = self.max_degree;
        if k.is_zero() {
            return out;
        }
        for (w, c) in self.terms() {
            out.coeffs.insert(w.clone(), c * k);
        }
        out
    }
}

/// Four mutually complementary pieces of a symmetric pair product
/// X⊙Y, each a degree-2 symmetric element.
#[derive(Clone, Debug)]
pub struct PairDecomposition {
    /// X⊙Y itself.
    pub product: EnvElement,
    /// Fully antisymmetric (four-form) part of the pair tensor.
    pub wedge: EnvElement,
    /// Multiple of the Casimir fixed by the Killing pairing.
    pub casimir: EnvElement,
    /// Part generated by the trace of the pair tensor (trace-free
    /// symmetric matrix on the ambient space).
    pub trace: EnvElement,
    /// What is left: the highest-weight (window-shaped) component.
    pub remainder: EnvElement,
}

/// Selector for the degree-2 kernel computations.
#[derive(Clone, Debug, PartialEq)]
pub enum DegreeTwoMap {
    ModelMoment,
    AmbientMoment,
    Ell(Rat),
}

#[derive(Clone, Debug)]
pub struct KernelReport {
    pub dimension: usize,
    pub basis: Vec<EnvElement>,
}

/// The scalar by which the symmetrized Casimir acts on λ-densities.
pub fn rho(n: usize, lambda: &Rat) -> Rat {
    rint((n * n) as i64) * lambda.clone() * (Rat::one() - lambda.clone())
}

/// Dense rank-4 tensor over the ambient space.
struct T4 {
    d: usize,
    v: Vec<Rat>,
}

impl T4 {
    fn zero(d: usize) -> Self {
        T4 { d, v: vec![Rat::zero(); d * d * d * d] }
    }

    fn idx(&self, a: usize, b: usize, c: usize, e: usize) -> usize {
        ((a * self.d + b) * self.d + c) * self.d + e
    }

    fn get(&self, a: usize, b: usize, c: usize, e: usize) -> &Rat {
        &self.v[self.idx(a, b, c, e)]
    }

    fn set(&mut self, a: usize, b: usize, c: usize, e: usize, val: Rat) {
        let i = self.idx(a, b, c, e);
        self.v[i] = val;
    }

}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    match k {
        0 => vec![vec![]],
        _ => {
            let mut out = Vec::new();
            for (i, rest) in (0..k).map(|i| (i, permutations(k - 1))) {
                for mut p in rest {
                    for x in p.iter_mut() {
                        if *x >= i {
                            *x += 1;
                        }
                    }
                    let mut q = vec![i];
                    q.extend(p);
                    out.push(q);
                }
            }
            out
        }
    }
}

fn parity(perm: &[usize]) -> i64 {
    let mut inv = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

/// The conformal algebra with everything the truncated algebras need:
/// generator order, structure constants, Killing data, and the basis
/// pair tensors of the ambient realization.
pub struct EnvAlgebra {
    sig: Signature,
    gens: Vec<ConformalGenerator>,
    /// brackets[a][b] = expansion of [X_a, X_b] over the basis.
    brackets: Vec<Vec<Vec<(usize, Rat)>>>,
    killing: Vec<Vec<Rat>>,
    killing_inv: Vec<Vec<Rat>>,
    /// Lowered antisymmetric ambient matrices ω_a = η̃·ambient(X_a).
    bivectors: Vec<Vec<Vec<Rat>>>,
    /// Ambient light-cone metric and its inverse (numerically equal).
    metric: Vec<Vec<Rat>>,
    /// Degree-2 words (a ≤ b) in order, with their pair tensors.
    pair_words: Vec<(usize, usize)>,
    pair_tensors: Vec<T4>,
}

impl EnvAlgebra {
    pub fn new(sig: &Signature) -> Result<Self> {
        let gens = conformal::generators(sig)?;
        let dim = gens.len();
        let n = sig.n();
        let d = n + 2;

        let mut brackets = vec![vec![Vec::new(); dim]; dim];
        for a in 0..dim {
            for b in 0..dim {
                if a == b {
                    continue;
                }
                let br = conformal::bracket_fields(gens[a].field(), gens[b].field());
                let coords = conformal::expand_in_generators(&br, &gens).ok_or_else(|| {
                    Error::Invalid("generator bracket left the conformal span".into())
                })?;
                brackets[a][b] = coords
                    .into_iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .collect();
            }
        }

        let killing = conformal::killing_matrix(&gens);
        let killing_inv = linalg::invert_dense(&killing)
            .ok_or_else(|| Error::Invalid("degenerate Killing form".into()))?;

        // Light-cone metric: coordinates (+, 1..n, −).
        let mut metric = vec![vec![Rat::zero(); d]; d];
        metric[0][d - 1] = Rat::one();
        metric[d - 1][0] = Rat::one();
        for i in 0..n {
            metric[i + 1][i + 1] = rint(sig.eps(i));
        }

        let mut bivectors = Vec::with_capacity(dim);
        for g in &gens {
            let m = g.ambient();
            let mut w = vec![vec![Rat::zero(); d]; d];
            for a in 0..d {
                for b in 0..d {
                    let mut acc = Rat::zero();
                    for c in 0..d {
                        acc += &metric[a][c] * &m[c][b];
                    }
                    w[a][b] = acc;
                }
            }
            bivectors.push(w);
        }

        let mut pair_words = Vec::new();
        for a in 0..dim {
            for b in a..dim {
                pair_words.push((a, b));
            }
        }
        let pair_tensors = pair_words
            .iter()
            .map(|&(a, b)| {
                let mut t = T4::zero(d);
                for i in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            for l in 0..d {
                                let val = &bivectors[a][i][j] * &bivectors[b][k][l]
                                    + &bivectors[b][i][j] * &bivectors[a][k][l];
                                t.set(i, j, k, l, val);
                            }
                        }
                    }
                }
                t
            })
            .collect();

        Ok(EnvAlgebra {
            sig: *sig,
            gens,
            brackets,
            killing,
            killing_inv,
            bivectors,
            metric,
            pair_words,
            pair_tensors,
        })
    }

    pub fn sig(&self) -> &Signature {
        &self.sig
    }

    pub fn generators(&self) -> &[ConformalGenerator] {
        &self.gens
    }

    pub fn dim(&self) -> usize {
        self.gens.len()
    }

    pub fn killing_entry(&self, a: usize, b: usize) -> &Rat {
        &self.killing[a][b]
    }

    fn index_of(&self, g: &ConformalGenerator) -> Result<usize> {
        self.gens
            .iter()
            .position(|h| h.label() == g.label())
            .ok_or_else(|| Error::Invalid("generator outside the stored basis".into()))
    }

    /// Rewrites a sum of arbitrary words to the weakly increasing
    /// basis using the structure constants.
    fn straighten(&self, terms: Vec<(Vec<usize>, Rat)>) -> Result<EnvElement> {
        let mut out = EnvElement::zero(EnvKind::Enveloping);
        let mut stack = terms;
        while let Some((w, c)) = stack.pop() {
            if c.is_zero() {
                continue;
            }
            if w.len() > MAX_WORD_DEGREE {
                return Err(Error::DegreeOverflow(format!(
                    "enveloping word of length {} exceeds the cap {}",
                    w.len(),
                    MAX_WORD_DEGREE
                )));
            }
            match (0..w.len().saturating_sub(1)).find(|&i| w[i] > w[i + 1]) {
                None => out.add_word(w, c),
                Some(i) => {
                    let mut swapped = w.clone();
                    swapped.swap(i, i + 1);
                    for (g, f) in &self.brackets[w[i]][w[i + 1]] {
                        let mut reduced: Vec<usize> = w[..i].to_vec();
                        reduced.push(*g);
                        reduced.extend(&w[i + 2..]);
                        stack.push((reduced, &c * f));
                    }
                    stack.push((swapped, c));
                }
            }
        }
        Ok(out)
    }

    /// Product in the truncated algebra of matching kind.
    pub fn mul(&self, u: &EnvElement, v: &EnvElement) -> Result<EnvElement> {
        u.check_kind(v)?;
        let cap = u.max_degree.max(v.max_degree);
        let mut words = Vec::new();
        for (wu, cu) in u.terms() {
            for (wv, cv) in v.terms() {
                if wu.len() + wv.len() > cap {
                    return Err(Error::DegreeOverflow(format!(
                        "product of degrees {} and {} exceeds the cap {}",
                        wu.len(),
                        wv.len(),
                        cap
                    )));
                }
                let mut w: Vec<usize> = wu.iter().chain(wv.iter()).cloned().collect();
                let c = cu * cv;
                if u.kind == EnvKind::Symmetric {
                    w.sort_unstable();
                }
                words.push((w, c));
            }
        }
        match u.kind {
            EnvKind::Symmetric => {
                let mut out = EnvElement::zero(EnvKind::Symmetric);
                out.max_degree = cap;
                for (w, c) in words {
                    out.add_word(w, c);
                }
                Ok(out)
            }
            EnvKind::Enveloping => self.straighten(words),
        }
    }

    /// Full symmetrization into the enveloping algebra: a length-k
    /// word averages its k! orderings.
    pub fn pbw(&self, u: &EnvElement) -> Result<EnvElement> {
        if u.kind != EnvKind::Symmetric {
            return Err(Error::Invalid("symmetrization applies to symmetric elements".into()));
        }
        let mut terms = Vec::new();
        for (w, c) in u.terms() {
            let perms = permutations(w.len());
            let scale = c / rint(perms.len() as i64);
            for p in perms {
                let word: Vec<usize> = p.iter().map(|&i| w[i]).collect();
                terms.push((word, scale.clone()));
            }
        }
        self.straighten(terms)
    }

    /// Adjoint action of the a-th generator on a symmetric element.
    pub fn ad_symmetric(&self, a: usize, u: &EnvElement) -> Result<EnvElement> {
        if u.kind != EnvKind::Symmetric {
            return Err(Error::Invalid("adjoint action given a non-symmetric element".into()));
        }
        let mut out = EnvElement::zero(EnvKind::Symmetric);
        out.max_degree = u.max_degree;
        for (w, c) in u.terms() {
            for i in 0..w.len() {
                for (g, f) in &self.brackets[a][w[i]] {
                    let mut word = w.clone();
                    word[i] = *g;
                    word.sort_unstable();
                    out.add_word(word, c * f);
                }
            }
        }
        Ok(out)
    }

    /// Algebra morphism onto phase-space symbols.  `ambient` selects
    /// the realization on the cone over ℝ^{p+1,q+1} (n+2 variables)
    /// instead of the model ℝ^{p,q} (n variables).
    pub fn moment_pullback(&self, u: &EnvElement, ambient: bool) -> Result<PhasePoly> {
        if u.kind != EnvKind::Symmetric {
            return Err(Error::Invalid("moment pullback applies to symmetric elements".into()));
        }
        let nvars = if ambient { self.sig.n() + 2 } else { self.sig.n() };
        let mut out = PhasePoly::zero(nvars);
        for (w, c) in u.terms() {
            let mut prod = PhasePoly::one(nvars);
            for &i in w {
                let factor = if ambient {
                    conformal::ambient_moment(&self.gens[i])
                } else {
                    self.gens[i].symbol()
                };
                prod = prod.mul(&factor)?;
            }
            out = out.add(&prod.scale(c))?;
        }
        Ok(out)
    }

    /// Algebra morphism onto operators on λ-densities, extending
    /// X ↦ X + λ·Div X by composition.
    pub fn ell_morphism(&self, u: &EnvElement, lambda: &Rat) -> Result<DiffOp> {
        if u.kind != EnvKind::Enveloping {
            return Err(Error::Invalid("density morphism applies to enveloping elements".into()));
        }
        let n = self.sig.n();
        let one = PhasePoly::one(n);
        let mut out = DiffOp::zero(n, lambda.clone(), lambda.clone());
        for (w, c) in u.terms() {
            let mut op = normal_order_n(&one, lambda.clone(), lambda.clone());
            for &i in w {
                op = op.compose(&conformal::lie_density(&self.gens[i], lambda))?;
            }
            out = out.add(&op.scale(c))?;
        }
        Ok(out)
    }

    /// Killing-dual Casimir Σ (B⁻¹)_{ab} X_a X_b as a symmetric
    /// element, for the ½Tr pairing; its ambient moment pullback is
    /// (xp)² − x²p².
    pub fn casimir(&self) -> EnvElement {
        let dim = self.dim();
        let mut out = EnvElement::zero(EnvKind::Symmetric);
        for a in 0..dim {
            for b in a..dim {
                let c = if a == b {
                    self.killing_inv[a][a].clone()
                } else {
                    rint(2) * &self.killing_inv[a][b]
                };
                out.add_word(vec![a, b], c);
            }
        }
        out
    }

    /// The Casimir element of the enveloping algebra, dual to the
    /// opposite pairing −½Tr, hence equal to minus the symmetrization
    /// of `casimir`.  With this normalization it acts on λ-densities
    /// by the scalar ρ(λ) = n²λ(1−λ); the ½Tr-dual one acts by −ρ(λ).
    pub fn casimir_env(&self) -> Result<EnvElement> {
        Ok(self.pbw(&self.casimir())?.scale(&-Rat::one()))
    }

    /// Expresses a pair tensor back in degree-2 word coordinates; the
    /// basis pair tensors are linearly independent, so coordinates are
    /// unique when they exist.
    fn tensor_to_coords(&self, t: &T4) -> Result<EnvElement> {
        let ncols = self.pair_words.len();
        let d = t.d;
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for flat in 0..d * d * d * d {
            let mut row: SparseRow = Vec::new();
            for (w, bt) in self.pair_tensors.iter().enumerate() {
                if !bt.v[flat].is_zero() {
                    row.push((w, bt.v[flat].clone()));
                }
            }
            if row.is_empty() && t.v[flat].is_zero() {
                continue;
            }
            rows.push(row);
            rhs.push(t.v[flat].clone());
        }
        match linalg::solve(ncols, &rows, &rhs) {
            linalg::Solve::Inconsistent => {
                Err(Error::Invalid("tensor outside the symmetric pair span".into()))
            }
            linalg::Solve::Solution { particular, kernel } => {
                debug_assert!(kernel.is_empty());
                let mut out = EnvElement::zero(EnvKind::Symmetric);
                for (w, c) in particular.into_iter().enumerate() {
                    let (a, b) = self.pair_words[w];
                    out.add_word(vec![a, b], c);
                }
                Ok(out)
            }
        }
    }

    /// Entry of the ambient light-cone metric (rows/columns ordered
    /// +, 1..n, −); the matrix equals its own inverse entrywise.
    pub fn metric_at(&self, a: usize, b: usize) -> &Rat {
        &self.metric[a][b]
    }

    /// Splits X⊙Y into wedge, Casimir, trace, and remainder parts.
    pub fn decompose_g2(
        &self,
        x: &ConformalGenerator,
        y: &ConformalGenerator,
    ) -> Result<PairDecomposition> {
        let xa = self.index_of(x)?;
        let ya = self.index_of(y)?;
        let d = self.sig.n() + 2;
        let n = self.sig.n();

        let wx = &self.bivectors[xa];
        let wy = &self.bivectors[ya];
        let mut t = T4::zero(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let val = &wx[i][j] * &wy[k][l] + &wy[i][j] * &wx[k][l];
                        t.set(i, j, k, l, val);
                    }
                }
            }
        }

        // Fully antisymmetric part.
        let perms: Vec<(Vec<usize>, i64)> =
            permutations(4).into_iter().map(|p| (p.clone(), parity(&p))).collect();
        let mut wedge_t = T4::zero(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let idx = [i, j, k, l];
                        let mut acc = Rat::zero();
                        for (p, sgn) in &perms {
                            let v = t.get(idx[p[0]], idx[p[1]], idx[p[2]], idx[p[3]]);
                            if *sgn > 0 {
                                acc += v;
                            } else {
                                acc -= v;
                            }
                        }
                        wedge_t.set(i, j, k, l, acc / rint(24));
                    }
                }
            }
        }

        // Contraction over the 2nd and 4th slots, then its trace.
        let mut m = vec![vec![Rat::zero(); d]; d];
        for a in 0..d {
            for c in 0..d {
                let mut acc = Rat::zero();
                for b in 0..d {
                    for e in 0..d {
                        let g = self.metric_at(b, e);
                        if !g.is_zero() {
                            acc += t.get(a, b, c, e) * g;
                        }
                    }
                }
                m[a][c] = acc;
            }
        }
        let mut tau = Rat::zero();
        for a in 0..d {
            for c in 0..d {
                let g = self.metric_at(a, c);
                if !g.is_zero() {
                    tau += &m[a][c] * g;
                }
            }
        }
        let mut m0 = m.clone();
        for a in 0..d {
            for c in 0..d {
                let delta = &tau / rint(d as i64) * self.metric_at(a, c);
                m0[a][c] -= delta;
            }
        }

        // Embed the trace-free matrix back as a pair tensor; the
        // embedding contracts back to (d−2)·m₀, hence the 1/n.
        let mut trace_t = T4::zero(d);
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let val = (&m0[a][c] * self.metric_at(b, e)
                            - &m0[b][c] * self.metric_at(a, e)
                            - &m0[a][e] * self.metric_at(b, c)
                            + &m0[b][e] * self.metric_at(a, c))
                            / rint(n as i64);
                        trace_t.set(a, b, c, e, val);
                    }
                }
            }
        }

        // Metric multiple carrying the full trace: τ(g₂) = d(d−1).
        let mut casimir_t = T4::zero(d);
        let scale = &tau / rint((d * (d - 1)) as i64);
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let val = (self.metric_at(a, c) * self.metric_at(b, e)
                            - self.metric_at(a, e) * self.metric_at(b, c))
                            * &scale;
                        casimir_t.set(a, b, c, e, val);
                    }
                }
            }
        }

        let mut product = EnvElement::zero(EnvKind::Symmetric);
        let word = if xa <= ya { vec![xa, ya] } else { vec![ya, xa] };
        product.add_word(word, Rat::one());

        let wedge = self.tensor_to_coords(&wedge_t)?;
        let trace = self.tensor_to_coords(&trace_t)?;
        let casimir = self.tensor_to_coords(&casimir_t)?;
        let remainder = product.sub(&wedge)?.sub(&trace)?.sub(&casimir)?;
        Ok(PairDecomposition { product, wedge, casimir, trace, remainder })
    }

    /// Exact degree-2 kernel of the selected morphism: the moment
    /// pullbacks act on homogeneous degree-2 symmetric elements, the
    /// density morphism on the filtered degree-2 enveloping algebra
    /// (unit included).
    pub fn kernel_deg2(&self, map: &DegreeTwoMap) -> Result<KernelReport> {
        let dim = self.dim();
        let mut words: Vec<Vec<usize>> = Vec::new();
        let enveloping = matches!(map, DegreeTwoMap::Ell(_));
        if enveloping {
            words.push(Vec::new());
            for a in 0..dim {
                words.push(vec![a]);
            }
        }
        for a in 0..dim {
            for b in a..dim {
                words.push(vec![a, b]);
            }
        }

        let kind = if enveloping { EnvKind::Enveloping } else { EnvKind::Symmetric };
        let mut poly_cells: BTreeMap<Monom, SparseRow> = BTreeMap::new();
        let mut op_cells: BTreeMap<OpMonom, SparseRow> = BTreeMap::new();
        for (col, w) in words.iter().enumerate() {
            let mut elem = EnvElement::zero(kind);
            elem.add_word(w.clone(), Rat::one());
            match map {
                DegreeTwoMap::ModelMoment | DegreeTwoMap::AmbientMoment => {
                    let ambient = matches!(map, DegreeTwoMap::AmbientMoment);
                    let img = self.moment_pullback(&elem, ambient)?;
                    for (mon, c) in img.terms() {
                        poly_cells.entry(mon.clone()).or_default().push((col, c.clone()));
                    }
                }
                DegreeTwoMap::Ell(lambda) => {
                    let img = self.ell_morphism(&elem, lambda)?;
                    for (mon, c) in img.as_phase_op().terms() {
                        op_cells.entry(mon.clone()).or_default().push((col, c.clone()));
                    }
                }
            }
        }
        let rows: Vec<SparseRow> = if enveloping {
            op_cells.into_values().collect()
        } else {
            poly_cells.into_values().collect()
        };
        let kernel = linalg::nullspace(words.len(), rows);
        let basis = kernel
            .into_iter()
            .map(|vec| {
                let mut e = EnvElement::zero(kind);
                for (col, c) in vec {
                    e.add_word(words[col].clone(), c);
                }
                e
            })
            .collect::<Vec<_>>();
        Ok(KernelReport { dimension: basis.len(), basis })
    }

    /// Quadratic ideal generator attached to a pair (X,Y) at weight λ:
    /// the symmetrization of X⊙Y minus its remainder part, shifted by
    /// the Killing pairing so that the Casimir piece groups as
    /// −(⟨X,Y⟩/dim 𝔤)·(𝒞 − ρ(λ)·1) and dies in the density
    /// representation at the same weight.
    pub fn joseph_generator(
        &self,
        x: &ConformalGenerator,
        y: &ConformalGenerator,
        lambda: &Rat,
    ) -> Result<EnvElement> {
        let split = self.decompose_g2(x, y)?;
        let kept = split.product.sub(&split.remainder)?;
        let u = self.pbw(&kept)?;
        let pairing = conformal::killing_form(x, y);
        let shift = -rho(self.sig.n(), lambda) * pairing / rint(self.dim() as i64);
        u.sub(&EnvElement::unit(EnvKind::Enveloping).scale(&shift))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{laplacian_weights, lie_density};
    use crate::opalg::right_divide;
    use crate::ring::rat;

    fn sig30() -> Signature {
        Signature::new(3, 0).unwrap()
    }

    fn word_element(kind: EnvKind, w: &[usize]) -> EnvElement {
        let mut e = EnvElement::zero(kind);
        let mut sorted = w.to_vec();
        if kind == EnvKind::Symmetric {
            sorted.sort_unstable();
        }
        e.add_word(sorted, Rat::one());
        e
    }

    #[test]
    fn straightening_matches_operator_composition() {
        let sig = sig30();
        let alg = EnvAlgebra::new(&sig).unwrap();
        let lambda = rat(2, 7);
        // products in both orders for a few generator pairs
        for (a, b) in [(7usize, 0usize), (6, 8), (3, 9), (0, 7)] {
            let u = word_element(EnvKind::Enveloping, &[a]);
            let v = word_element(EnvKind::Enveloping, &[b]);
            let prod = alg.mul(&u, &v).unwrap();
            let lhs = alg.ell_morphism(&prod, &lambda).unwrap();
            let rhs = alg
                .ell_morphism(&u, &lambda)
                .unwrap()
                .compose(&alg.ell_morphism(&v, &lambda).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs, "pair ({a},{b})");
        }
        // a length-3 straightening
        let w = alg
            .straighten(vec![(vec![9, 5, 1], Rat::one())])
            .unwrap();
        let lhs = alg.ell_morphism(&w, &lambda).unwrap();
        let gens = alg.generators().to_vec();
        let rhs = lie_density(&gens[9], &lambda)
            .compose(&lie_density(&gens[5], &lambda))
            .unwrap()
            .compose(&lie_density(&gens[1], &lambda))
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn pbw_on_small_elements() {
        let sig = sig30();
        let alg = EnvAlgebra::new(&sig).unwrap();
        // degree 1 is fixed
        let x = word_element(EnvKind::Symmetric, &[4]);
        let px = alg.pbw(&x).unwrap();
        assert_eq!(px.coeff(&[4]), Rat::one());
        assert_eq!(px.num_terms(), 1);
        // X·Y symmetrizes to the ordered word plus half the bracket
        let u = word_element(EnvKind::Symmetric, &[6, 7]);
        let pu = alg.pbw(&u).unwrap();
        assert_eq!(pu.coeff(&[6, 7]), Rat::one());
        let lambda = rat(1, 3);
        let gens = alg.generators().to_vec();
        let l6 = lie_density(&gens[6], &lambda);
        let l7 = lie_density(&gens[7], &lambda);
        let want = l6
            .compose(&l7)
            .unwrap()
            .add(&l7.compose(&l6).unwrap())
            .unwrap()
            .scale(&rat(1, 2));
        assert_eq!(alg.ell_morphism(&pu, &lambda).unwrap(), want);
    }

    #[test]
    fn pbw_is_equivariant() {
        let sig = sig30();
        let alg = EnvAlgebra::new(&sig).unwrap();
        for (a, w) in [(7usize, [0usize, 6]), (2, [7, 8]), (6, [3, 9])] {
            let u = word_element(EnvKind::Symmetric, &w);
            let lhs = alg.pbw(&alg.ad_symmetric(a, &u).unwrap()).unwrap();
            let xa = word_element(EnvKind::Enveloping, &[a]);
            let pu = alg.pbw(&u).unwrap();
            let rhs = alg.mul(&xa, &pu).unwrap().sub(&alg.mul(&pu, &xa).unwrap()).unwrap();
            assert_eq!(lhs, rhs, "generator {a} on {w:?}");
        }
    }

    #[test]
    fn bivectors_are_antisymmetric() {
        for sig in [sig30(), Signature::new(2, 2).unwrap()] {
            let alg = EnvAlgebra::new(&sig).unwrap();
            let d = sig.n() + 2;
            for (gi, w) in alg.bivectors.iter().enumerate() {
                for a in 0..d {
                    assert!(w[a][a].is_zero(), "generator {gi}");
                    for b in 0..a {
                        assert_eq!(w[a][b], -w[b][a].clone(), "generator {gi}");
                    }
                }
            }
        }
    }

    #[test]
    fn moment_pullbacks_on_generators_and_casimir() {
        let sig = sig30();
        let alg = EnvAlgebra::new(&sig).unwrap();
        // model: translations pull back to the momenta
        for i in 0..3 {
            let e = word_element(EnvKind::Symmetric, &[i]);
            assert_eq!(
                alg.moment_pullback(&e, false).unwrap(),
                PhasePoly::p_var(3, i).unwrap()
            );
        }
        // ambient Casimir: (xp)² − x²p² on the cone coordinates
        let c = alg.casimir();
        let amb = alg.moment_pullback(&c, true).unwrap();
        let d = 5;
        let xp = crate::ring::xp_pairing(d);
        let mut x2 = PhasePoly::zero(d);
        let mut p2 = PhasePoly::zero(d);
        for a in 0..d {
            for b in 0..d {
                let g = alg.metric_at(a, b).clone();
                if g.is_zero() {
                    continue;
                }
                let xa = PhasePoly::x_var(d, a).unwrap();
                let xb = PhasePoly::x_var(d, b).unwrap();
                x2 = x2.add(&xa.mul(&xb).unwrap().scale(&g)).unwrap();
                // the light-cone metric equals its inverse entrywise
                let pa = PhasePoly::p_var(d, a).unwrap();
                let pb = PhasePoly::p_var(d, b).unwrap();
                p2 = p2.add(&pa.mul(&pb).unwrap().scale(&g)).unwrap();
            }
        }
        let want = xp.mul(&xp).unwrap().sub(&x2.mul(&p2).unwrap()).unwrap();
        assert_eq!(amb, want);
        // model Casimir vanishes
        assert!(alg.moment_pullback(&c, false).unwrap().is_zero());
    }

    #[test]
    fn casimir_acts_by_the_quadratic_scalar() {
        let sig = sig30();
        let alg = EnvAlgebra::new(&sig).unwrap();
        let cas = alg.casimir_env().unwrap();
        for lambda in [rat(0, 1), rat(1, 2), rat(1, 6), rat(2, 5)] {
            let op = alg.ell_morphism(&cas, &lambda).unwrap();
            let want = normal_order_n(
                &PhasePoly::one(3).scale(&rho(3, &lambda)),
                lambda.clone(),
                lambda.clone(),
            );
            assert_eq!(op, want, "lambda = {lambda}");
            // the ½Tr-dual symmetrization acts by the opposite scalar
            let halftr = alg.pbw(&alg.casimir()).unwrap();
            assert_eq!(
                alg.ell_morphism(&halftr, &lambda).unwrap(),
                want.scale(&-Rat::one()),
                "lambda = {lambda}"
            );
        }
    }

    #[test]
    fn pair_decomposition_properties() {
        let sig = sig30();
        let alg = EnvAlgebra::new(&sig).unwrap();
        let gens = alg.generators().to_vec();
        let dim = alg.dim();

        // translations are Killing-null, so their Casimir part drops
        let d00 = alg.decompose_g2(&gens[0], &gens[0]).unwrap();
        assert!(conformal::killing_form(&gens[0], &gens[0]).is_zero());
        assert!(d00.casimir.is_zero());

        // proportional ambient data wedges to zero
        let dee = alg.decompose_g2(&gens[6], &gens[6]).unwrap();
        assert!(dee.wedge.is_zero());

        for (a, b) in [(0usize, 0usize), (0, 7), (6, 6), (3, 8), (7, 9)] {
            let split = alg.decompose_g2(&gens[a], &gens[b]).unwrap();
            let sum = split
                .wedge
                .add(&split.casimir)
                .unwrap()
                .add(&split.trace)
                .unwrap()
                .add(&split.remainder)
                .unwrap();
            assert_eq!(sum, split.product, "pair ({a},{b})");

            // the Casimir part is the Killing-pairing multiple of the
            // Killing-dual Casimir; the projection constant is 1/dim 𝔤
            let expect = alg
                .casimir()
                .scale(&(conformal::killing_form(&gens[a], &gens[b]) / rint(dim as i64)));
            assert_eq!(split.casimir, expect, "pair ({a},{b})");

            // remainder: no four-form part, no metric contraction
            let mut rem_t = T4::zero(5);
            for (w, c) in split.remainder.terms() {
                let idx = alg
                    .pair_words
                    .iter()
                    .position(|&(x, y)| vec![x, y] == *w)
                    .unwrap();
                for flat in 0..rem_t.v.len() {
                    let delta = &alg.pair_tensors[idx].v[flat] * c;
                    rem_t.v[flat] += delta;
                }
            }
            let perms: Vec<(Vec<usize>, i64)> =
                permutations(4).into_iter().map(|p| (p.clone(), parity(&p))).collect();
            for i in 0..5 {
                for j in 0..5 {
                    for k in 0..5 {
                        for l in 0..5 {
                            let idx = [i, j, k, l];
                            let mut alt = Rat::zero();
                            for (p, sgn) in &perms {
                                let v = rem_t.get(idx[p[0]], idx[p[1]], idx[p[2]], idx[p[3]]);
                                if *sgn > 0 {
                                    alt += v;
                                } else {
                                    alt -= v;
                                }
                            }
                            assert!(alt.is_zero(), "wedge residue in remainder ({a},{b})");
                        }
                    }
                }
            }
            for x in 0..5 {
                for z in 0..5 {
                    let mut acc = Rat::zero();
                    for y in 0..5 {
                        for w in 0..5 {
                            let g = alg.metric_at(y, w);
                            if !g.is_zero() {
                                acc += rem_t.get(x, y, z, w) * g;
                            }
                        }
                    }
                    assert!(acc.is_zero(), "trace residue in remainder ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn degree_two_kernels() {
        let sig = sig30();
        let alg = EnvAlgebra::new(&sig).unwrap();
        let ambient = alg.kernel_deg2(&DegreeTwoMap::AmbientMoment).unwrap();
        assert_eq!(ambient.dimension, 5);
        let model = alg.kernel_deg2(&DegreeTwoMap::ModelMoment).unwrap();
        assert_eq!(model.dimension, 6);
        let lambda = rat(1, 2);
        let ell = alg.kernel_deg2(&DegreeTwoMap::Ell(lambda.clone())).unwrap();
        assert_eq!(ell.dimension, 6);

        // 𝒞 − ρ(λ)·1 lies in the density-morphism kernel
        let special = alg
            .casimir_env()
            .unwrap()
            .sub(&EnvElement::unit(EnvKind::Enveloping).scale(&rho(3, &lambda)))
            .unwrap();
        assert!(alg.ell_morphism(&special, &lambda).unwrap().is_zero());

        // ... and the model-moment kernel contains the Casimir
        assert!(alg.moment_pullback(&alg.casimir(), false).unwrap().is_zero());
    }

    #[test]
    fn joseph_generators_divide_exactly_at_the_laplacian_weight() {
        let sig = sig30();
        let alg = EnvAlgebra::new(&sig).unwrap();
        let gens = alg.generators().to_vec();
        let (lambda, _) = laplacian_weights(&sig, 1);
        assert_eq!(lambda, rat(1, 6));

        for (a, b) in [(0usize, 0usize), (0, 5), (6, 7)] {
            let gen = alg.joseph_generator(&gens[a], &gens[b], &lambda).unwrap();
            let op = alg.ell_morphism(&gen, &lambda).unwrap();
            let divided = right_divide(&op, 1, &sig).unwrap();
            assert!(divided.is_some(), "pair ({a},{b}) at the special weight");
        }

        // a generic weight must fail for some pair
        let generic = rat(2, 7);
        let mut failed = false;
        'outer: for a in 0..alg.dim() {
            for b in a..alg.dim() {
                let gen = alg.joseph_generator(&gens[a], &gens[b], &generic).unwrap();
                let op = alg.ell_morphism(&gen, &generic).unwrap();
                if right_divide(&op, 1, &sig).unwrap().is_none() {
                    failed = true;
                    break 'outer;
                }
            }
        }
        assert!(failed, "every pair divided at a generic weight");

        // the construction is symmetric in its two inputs
        let g_xy = alg.joseph_generator(&gens[0], &gens[7], &lambda).unwrap();
        let g_yx = alg.joseph_generator(&gens[7], &gens[0], &lambda).unwrap();
        assert_eq!(g_xy, g_yx);
    }
}
