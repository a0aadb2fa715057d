//! Closed-form normal geodesics: the product-of-exponentials solution of the
//! Euler and reconstruction equations for a chain of subalgebras, and its
//! reduction to homogeneous spaces.

use nalgebra::DMatrix;

use crate::algebra::{expm, AlgebraElement, GroupElement};
use crate::filtration::{Filtration, SrStructure};
use crate::{Error, Result};

/// The adjoint-chain operators `A^t_{[i,j)} = Ad_{exp(tv_i)} ∘ … ∘
/// Ad_{exp(tv_{j-1})}` with `v_k = (s_{k+1} − s_k) x̄_{g_k}`.
///
/// Built once per `(x̄, s, t)`; the same group factors feed both the Euler
/// solution and the reconstruction product, so the two stay bit-identical.
pub struct ChainOperator {
    /// `exp(t v_k)` for `k = 0..n-1`.
    factors: Vec<GroupElement>,
    /// Partial sums `x̄_{g_k}` shared with the group-side formula.
    partials: Vec<AlgebraElement>,
    parts: Vec<AlgebraElement>,
}

impl ChainOperator {
    pub fn new(f: &Filtration, s: &[f64], xbar: &AlgebraElement, t: f64) -> Result<Self> {
        let links = f.depth();
        if s.len() != links + 1 {
            return Err(Error::DimensionMismatch(s.len(), links + 1));
        }
        if xbar.n() != f.ambient().n() {
            return Err(Error::DimensionMismatch(xbar.n(), f.ambient().n()));
        }
        let dec = f.decompose(xbar);
        let partials: Vec<AlgebraElement> = (0..=links).map(|i| dec.partial(i)).collect();
        let factors = (0..links)
            .map(|k| expm(&partials[k].scale(t * (s[k + 1] - s[k]))))
            .collect();
        Ok(ChainOperator {
            factors,
            partials,
            parts: dec.parts().to_vec(),
        })
    }

    /// Applies `A^t_{[i,j)}`; `i = j` is the identity.
    pub fn apply(&self, i: usize, j: usize, x: &AlgebraElement) -> AlgebraElement {
        assert!(i <= j && j <= self.factors.len());
        let mut out = x.clone();
        for k in (i..j).rev() {
            out = self.factors[k].adjoint(&out).expect("same n");
        }
        out
    }

    pub fn factor(&self, k: usize) -> &GroupElement {
        &self.factors[k]
    }

    pub fn partial(&self, k: usize) -> &AlgebraElement {
        &self.partials[k]
    }

    /// Solution of the Euler equations: `x(t) = x̄_0 + Σ_i A^t_{[0,i)}(x̄_i)`.
    pub fn euler_solution(&self) -> AlgebraElement {
        let mut out = self.parts[0].clone();
        for i in 1..self.parts.len() {
            out = out.add(&self.apply(0, i, &self.parts[i]));
        }
        out
    }

    /// Solution of the reconstruction problem:
    /// `g(t) = ḡ exp(t s_n x̄) exp(t(s_{n−1} − s_n) x̄_{g_{n−1}}) ⋯
    ///  exp(t(s_0 − s_1) x̄_{g_0})`.
    ///
    /// The trailing factors are inverses of the chain factors built in
    /// [`ChainOperator::new`], reused here.
    pub fn group_solution(&self, gbar: &GroupElement, s: &[f64], t: f64) -> GroupElement {
        let links = self.factors.len();
        let mut g = gbar.mul(&expm(&self.partials[links].scale(t * s[links])));
        for k in (0..links).rev() {
            g = g.mul(&self.factors[k].inverse());
        }
        g
    }
}

/// `x(t)` from Theorem-style adjoint products, for arbitrary parameters `s`.
pub fn euler_solution(
    f: &Filtration,
    s: &[f64],
    xbar: &AlgebraElement,
    t: f64,
) -> Result<AlgebraElement> {
    Ok(ChainOperator::new(f, s, xbar, t)?.euler_solution())
}

/// `g(t)` for the reconstruction problem with `g(0) = ḡ`.
pub fn group_solution(
    f: &Filtration,
    s: &[f64],
    gbar: &GroupElement,
    xbar: &AlgebraElement,
    t: f64,
) -> Result<GroupElement> {
    let op = ChainOperator::new(f, s, xbar, t)?;
    Ok(op.group_solution(gbar, s, t))
}

/// Normal sub-Riemannian geodesic of an [`SrStructure`]: the reconstruction
/// product with `s_i = 0` off the index set.
pub fn sr_geodesic(
    srs: &SrStructure,
    gbar: &GroupElement,
    xbar: &AlgebraElement,
    t: f64,
) -> Result<GroupElement> {
    group_solution(srs.filtration(), srs.s(), gbar, xbar, t)
}

/// Geodesic of the reduced structure on `G/K`, `K = G_0`: the same product
/// with the trailing `g_0` factor dropped. Requires `pr_{g_0} x̄ = 0` and
/// `0 ∉ I`.
pub fn homogeneous_geodesic(
    srs: &SrStructure,
    xbar: &AlgebraElement,
    t: f64,
) -> Result<GroupElement> {
    if srs.index_set().contains(&0) {
        return Err(Error::InvalidParameters(
            "homogeneous reduction needs 0 outside the index set".into(),
        ));
    }
    let f = srs.filtration();
    let dec = f.decompose(xbar);
    let res = dec.part(0).norm();
    if res > 1e-12 {
        return Err(Error::InvalidMomentum(res));
    }
    let s = srs.s();
    let links = f.depth();
    let op = ChainOperator::new(f, s, xbar, t)?;
    let mut g = expm(&op.partial(links).scale(t * s[links]));
    for k in (1..links).rev() {
        g = g.mul(&op.factor(k).inverse());
    }
    Ok(g)
}

/// Quotient representative for the Stiefel variety `V_{n,k} = SO(n)/SO(n−k)`
/// with `K` embedded in the lower-right block: the first `k` columns of `g`.
pub fn stiefel_representative(k: usize, g: &GroupElement) -> Result<DMatrix<f64>> {
    let n = g.n();
    if k == 0 || k >= n {
        return Err(Error::UnsupportedSpace(format!("stiefel({n},{k})")));
    }
    Ok(g.matrix().columns(0, k).into_owned())
}
