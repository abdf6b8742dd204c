//! The conformal Lie algebra o(p+1,q+1) of flat ℝ^{p,q}: generator
//! basis, ambient matrix realization, Killing form, and its three
//! actions (on densities, weighted symbols, and operators).
//!
//! Ambient model: light-cone basis (e₊, e₁..e_n, e₋) of ℝ^{p+1,q+1}
//! with pairing η̃(e₊,e₋) = 1 and middle block η.  A conformal vector
//! field X corresponds to a linear flow on the cone; we store the
//! transpose of that flow's matrix so that X ↦ ambient(X) is a Lie
//! algebra homomorphism (matrix-to-flow is an anti-homomorphism, and
//! transposition undoes it without changing traces).

use crate::error::{Error, Result};
use crate::linalg::RowSpan;
use crate::opalg::{DiffOp, OpMonom, PhaseOp};
use crate::ring::{rint, Monom, PhasePoly, Rat, Signature};
use num_traits::Zero;

/// Which standard generator; indices are 0-based, rotations keep i < j.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Label {
    Translation(usize),
    Rotation(usize, usize),
    Dilation,
    SpecialConformal(usize),
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::Translation(i) => write!(f, "P{}", i + 1),
            Label::Rotation(i, j) => write!(f, "J{}{}", i + 1, j + 1),
            Label::Dilation => write!(f, "E"),
            Label::SpecialConformal(i) => write!(f, "K{}", i + 1),
        }
    }
}

/// A basis element of o(p+1,q+1) realized three ways: as a vector
/// field on ℝ^{p,q}, as its divergence, and as an ambient matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConformalGenerator {
    label: Label,
    sig: Signature,
    /// Components X^k(x), polynomials in x of degree ≤ 2.
    field: Vec<PhasePoly>,
    /// Σ_k ∂_k X^k.
    divergence: PhasePoly,
    /// (n+2)×(n+2) matrix over the light-cone basis.
    ambient: Vec<Vec<Rat>>,
}

impl ConformalGenerator {
    pub fn label(&self) -> Label {
        self.label
    }

    pub fn sig(&self) -> Signature {
        self.sig
    }

    pub fn n(&self) -> usize {
        self.sig.n()
    }

    pub fn field(&self) -> &[PhasePoly] {
        &self.field
    }

    pub fn divergence(&self) -> &PhasePoly {
        &self.divergence
    }

    pub fn ambient(&self) -> &Vec<Vec<Rat>> {
        &self.ambient
    }

    /// Momentum symbol μ_X = X^k p_k.
    pub fn symbol(&self) -> PhasePoly {
        let n = self.n();
        let mut out = PhasePoly::zero(n);
        for (k, comp) in self.field.iter().enumerate() {
            out = out.add(&comp.mul(&PhasePoly::p_var(n, k).unwrap()).unwrap()).unwrap();
        }
        out
    }
}

/// x_i = η_{ij}x^j.
fn x_lower(sig: &Signature, i: usize) -> PhasePoly {
    PhasePoly::x_var(sig.n(), i).unwrap().scale(&rint(sig.eps(i)))
}

fn zero_matrix(d: usize) -> Vec<Vec<Rat>> {
    vec![vec![Rat::zero(); d]; d]
}

fn build(sig: Signature, label: Label, field: Vec<PhasePoly>, ambient: Vec<Vec<Rat>>) -> ConformalGenerator {
    let n = sig.n();
    let mut divergence = PhasePoly::zero(n);
    for (k, comp) in field.iter().enumerate() {
        divergence = divergence.add(&comp.partial_x(k).unwrap()).unwrap();
    }
    ConformalGenerator { label, sig, field, divergence, ambient }
}

/// The standard basis P_1..P_n, J_{ij} (i<j), E, K_1..K_n; its length
/// is (n+1)(n+2)/2.  Light-cone rows/columns are ordered (+, 1..n, −).
pub fn generators(sig: &Signature) -> Result<Vec<ConformalGenerator>> {
    let n = sig.n();
    if n < 3 {
        return Err(Error::BadSignature { p: sig.plus(), q: sig.minus() });
    }
    let d = n + 2;
    let mut out = Vec::with_capacity((n + 1) * (n + 2) / 2);

    for i in 0..n {
        let mut field = vec![PhasePoly::zero(n); n];
        field[i] = PhasePoly::one(n);
        let mut m = zero_matrix(d);
        m[0][1 + i] = rint(1);
        m[1 + i][d - 1] = rint(-sig.eps(i));
        out.push(build(*sig, Label::Translation(i), field, m));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            // J_{ij} = x_i∂_j − x_j∂_i.
            let mut field = vec![PhasePoly::zero(n); n];
            field[j] = x_lower(sig, i);
            field[i] = x_lower(sig, j).neg();
            let mut m = zero_matrix(d);
            m[1 + i][1 + j] = rint(sig.eps(i));
            m[1 + j][1 + i] = rint(-sig.eps(j));
            out.push(build(*sig, Label::Rotation(i, j), field, m));
        }
    }
    {
        let field = (0..n).map(|k| PhasePoly::x_var(n, k).unwrap()).collect();
        let mut m = zero_matrix(d);
        m[0][0] = rint(-1);
        m[d - 1][d - 1] = rint(1);
        out.push(build(*sig, Label::Dilation, field, m));
    }
    for i in 0..n {
        // K_i = 2x_i x^k∂_k − x²∂_i.
        let xi = x_lower(sig, i);
        let xsq = crate::ring::x_square(sig);
        let field = (0..n)
            .map(|k| {
                let mut c = xi.mul(&PhasePoly::x_var(n, k).unwrap()).unwrap().scale(&rint(2));
                if k == i {
                    c = c.sub(&xsq).unwrap();
                }
                c
            })
            .collect();
        let mut m = zero_matrix(d);
        m[1 + i][0] = rint(-2 * sig.eps(i));
        m[d - 1][1 + i] = rint(2);
        out.push(build(*sig, Label::SpecialConformal(i), field, m));
    }
    Ok(out)
}

/// [X,Y]^k = X^j ∂_j(Y^k) − Y^j ∂_j(X^k) on component lists.
pub fn bracket_fields(x: &[PhasePoly], y: &[PhasePoly]) -> Vec<PhasePoly> {
    let n = x.len();
    assert_eq!(y.len(), n);
    (0..n)
        .map(|k| {
            let mut acc = PhasePoly::zero(n);
            for j in 0..n {
                acc = acc.add(&x[j].mul(&y[k].partial_x(j).unwrap()).unwrap()).unwrap();
                acc = acc.sub(&y[j].mul(&x[k].partial_x(j).unwrap()).unwrap()).unwrap();
            }
            acc
        })
        .collect()
}

/// Writes a vector field in the generator basis; None if outside the
/// span.  Conformal fields are determined by x-degree ≤ 2 coefficients,
/// so exact linear algebra on stacked coefficient vectors suffices.
pub fn expand_in_generators(field: &[PhasePoly], gens: &[ConformalGenerator]) -> Option<Vec<Rat>> {
    let n = field.len();
    // Monomial index space: component k, then x-exponent of degree ≤ 2.
    let exps = crate::ring::exponents_up_to(n, 2);
    let index: std::collections::BTreeMap<&Vec<u16>, usize> =
        exps.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let ncols = n * exps.len();
    let flatten = |f: &[PhasePoly]| -> Option<Vec<Rat>> {
        let mut v = vec![Rat::zero(); ncols];
        for (k, comp) in f.iter().enumerate() {
            for (m, c) in comp.terms() {
                if m.p_degree() != 0 || m.x_degree() > 2 {
                    return None;
                }
                v[k * exps.len() + index[&m.x]] = c.clone();
            }
        }
        Some(v)
    };
    let target = flatten(field)?;
    let rows: Vec<Vec<(usize, Rat)>> = (0..ncols)
        .map(|r| {
            let mut row: Vec<(usize, Rat)> = Vec::new();
            for (j, g) in gens.iter().enumerate() {
                let gv = flatten(&g.field).expect("generator fields have x-degree <= 2");
                if !gv[r].is_zero() {
                    row.push((j, gv[r].clone()));
                }
            }
            row
        })
        .collect();
    match crate::linalg::solve(gens.len(), &rows, &target) {
        crate::linalg::Solve::Solution { particular, .. } => Some(particular),
        crate::linalg::Solve::Inconsistent => None,
    }
}

/// ℓ^λ_X = X^i∂_i + λ·Div(X), acting on λ-densities (weights (λ,λ)).
pub fn lie_density(x: &ConformalGenerator, lambda: &Rat) -> DiffOp {
    let n = x.n();
    let mut op = PhaseOp::zero(n);
    for (k, comp) in x.field().iter().enumerate() {
        for (m, c) in comp.terms() {
            let mut dx = vec![0u16; n];
            dx[k] = 1;
            op.add_term(OpMonom::new(m.x.clone(), vec![0; n], dx, vec![0; n]), c.clone());
        }
    }
    for (m, c) in x.divergence().terms() {
        op.add_term(OpMonom::new(m.x.clone(), vec![0; n], vec![0; n], vec![0; n]), c * lambda);
    }
    DiffOp::from_phase_op(op, lambda.clone(), lambda.clone()).unwrap()
}

/// L^δ_X = X^i∂_{x^i} − p_j(∂_{x^i}X^j)∂_{p_i} + δ·Div(X) on symbols;
/// at δ = 0 this is {μ_X, ·}.
pub fn lie_symbol(x: &ConformalGenerator, delta: &Rat) -> PhaseOp {
    let n = x.n();
    let mut op = PhaseOp::zero(n);
    for (k, comp) in x.field().iter().enumerate() {
        for (m, c) in comp.terms() {
            let mut dx = vec![0u16; n];
            dx[k] = 1;
            op.add_term(OpMonom::new(m.x.clone(), vec![0; n], dx, vec![0; n]), c.clone());
        }
    }
    for j in 0..n {
        for i in 0..n {
            let d = x.field()[j].partial_x(i).unwrap();
            for (m, c) in d.terms() {
                let mut p = vec![0u16; n];
                p[j] = 1;
                let mut dp = vec![0u16; n];
                dp[i] = 1;
                op.add_term(OpMonom::new(m.x.clone(), p, vec![0; n], dp), -c.clone());
            }
        }
    }
    for (m, c) in x.divergence().terms() {
        op.add_term(OpMonom::new(m.x.clone(), vec![0; n], vec![0; n], vec![0; n]), c * delta);
    }
    op
}

/// L^{λ,μ}_X A = ℓ^μ_X∘A − A∘ℓ^λ_X; weights are read off A.
pub fn lie_operator(x: &ConformalGenerator, a: &DiffOp) -> Result<DiffOp> {
    let left = lie_density(x, a.mu());
    let right = lie_density(x, a.lambda());
    left.compose(a)?.sub(&a.compose(&right)?)
}

/// ½·Tr(ambient(X)·ambient(Y)).
pub fn killing_form(x: &ConformalGenerator, y: &ConformalGenerator) -> Rat {
    let d = x.ambient().len();
    let mut tr = Rat::zero();
    for a in 0..d {
        for b in 0..d {
            tr += &x.ambient()[a][b] * &y.ambient()[b][a];
        }
    }
    tr / rint(2)
}

/// Gram matrix of the Killing form on a generator list.
pub fn killing_matrix(gens: &[ConformalGenerator]) -> Vec<Vec<Rat>> {
    let m = gens.len();
    let mut out = vec![vec![Rat::zero(); m]; m];
    for a in 0..m {
        for b in a..m {
            let v = killing_form(&gens[a], &gens[b]);
            out[a][b] = v.clone();
            out[b][a] = v;
        }
    }
    out
}

/// Rank of a dense rational matrix; the Gram matrix is nondegenerate
/// iff this equals its size.
pub fn dense_rank(m: &[Vec<Rat>]) -> usize {
    let ncols = m.first().map_or(0, |r| r.len());
    let mut span = RowSpan::new(ncols);
    for row in m {
        let sparse: Vec<(usize, Rat)> = row
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| (j, c.clone()))
            .collect();
        span.insert(sparse);
    }
    span.rank()
}

/// μ_X as a function on ambient phase space T*ℝ^{p+1,q+1}: the moment
/// (ambient(X)ᵀu)^A P_A of the cone flow, a homomorphism into the
/// ambient Poisson algebra.
pub fn ambient_moment(x: &ConformalGenerator) -> PhasePoly {
    let d = x.ambient().len();
    let mut out = PhasePoly::zero(d);
    for a in 0..d {
        for b in 0..d {
            // Flow matrix is the stored transpose: row b, column a.
            let c = &x.ambient()[a][b];
            if c.is_zero() {
                continue;
            }
            let mut xe = vec![0u16; d];
            let mut pe = vec![0u16; d];
            xe[a] = 1;
            pe[b] += 1;
            out.add_term(Monom::new(xe, pe), c.clone());
        }
    }
    out
}

/// Quantization weights (λ, μ) = ((n−2ℓ)/2n, (n+2ℓ)/2n) attached to Δ^ℓ.
pub fn laplacian_weights(sig: &Signature, ell: usize) -> (Rat, Rat) {
    let n = sig.n() as i64;
    let l = ell as i64;
    (crate::ring::rat(n - 2 * l, 2 * n), crate::ring::rat(n + 2 * l, 2 * n))
}

/// Δ^ℓ at its conformal weights.
pub fn conformal_laplacian(sig: &Signature, ell: usize) -> DiffOp {
    let (lambda, _) = laplacian_weights(sig, ell);
    crate::opalg::laplacian_power(sig, ell, lambda)
}
