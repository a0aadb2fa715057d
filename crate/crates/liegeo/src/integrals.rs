//! Conserved quantities: Casimir functions, symbolic polynomial vector
//! fields, and a graded search for polynomial first integrals via the kernel
//! of the Lie-derivative operator on monomial bases.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraElement, SoBasis};
use crate::flows::Flow;
use crate::{Error, Result};

/// Sorted multiset of variable indices; `[0, 0, 3]` is `x_0^2 x_3`.
pub type Monomial = Vec<usize>;

/// Sparse polynomial in `m` variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<Monomial, f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn monomial(vars: &[usize], c: f64) -> Self {
        let mut mono = vars.to_vec();
        mono.sort_unstable();
        let mut p = Poly::zero();
        p.add_term(mono, c);
        p
    }

    pub fn add_term(&mut self, mono: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(mono) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (mono, c) in &other.terms {
            out.add_term(mono.clone(), *c);
        }
        out
    }

    pub fn scale(&self, c: f64) -> Poly {
        let mut out = Poly::zero();
        for (mono, v) in &self.terms {
            out.add_term(mono.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut mono = ma.clone();
                mono.extend_from_slice(mb);
                mono.sort_unstable();
                out.add_term(mono, ca * cb);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(mono, c)| c * mono.iter().map(|&a| x[a]).product::<f64>())
            .sum()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| m.len()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    /// Drops coefficients below `tol` times the largest one.
    pub fn cleaned(&self, tol: f64) -> Poly {
        let max = self.terms.values().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut out = Poly::zero();
        for (mono, c) in &self.terms {
            if c.abs() > tol * max {
                out.add_term(mono.clone(), *c);
            }
        }
        out
    }

    /// Renders the polynomial with caller-supplied variable names.
    pub fn render(&self, name: impl Fn(usize) -> String) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (mono, c) in &self.terms {
            let vars: Vec<String> = mono.iter().map(|&a| name(a)).collect();
            let body = if vars.is_empty() {
                String::new()
            } else {
                format!("*{}", vars.join("*"))
            };
            parts.push(format!("{c:+.6}{body}"));
        }
        parts.join(" ")
    }
}

impl std::fmt::Display for Poly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.render(|a| format!("x{a}")))
    }
}

/// All sorted index multisets over `0..m` of size exactly `d`.
fn monomials_of_degree(m: usize, d: usize) -> Vec<Monomial> {
    fn rec(m: usize, d: usize, start: usize, prefix: &mut Monomial, out: &mut Vec<Monomial>) {
        if d == 0 {
            out.push(prefix.clone());
            return;
        }
        for a in start..m {
            prefix.push(a);
            rec(m, d - 1, a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, d, 0, &mut Vec::new(), &mut out);
    out
}

/// Graded monomial basis of degrees `1..=d` (constants excluded).
pub fn monomial_basis(m: usize, d: usize) -> Vec<Monomial> {
    (1..=d).flat_map(|k| monomials_of_degree(m, k)).collect()
}

/// Polynomial vector field on `R^m`: `ẋ_a = components[a](x)`.
#[derive(Clone, Debug)]
pub struct PolySystem {
    components: Vec<Poly>,
}

impl PolySystem {
    pub fn new(components: Vec<Poly>) -> Self {
        PolySystem { components }
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, a: usize) -> &Poly {
        &self.components[a]
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval(x)).collect()
    }

    /// Extracts the symbolic form of a flow whose right-hand side is
    /// homogeneous quadratic in the coefficients, by polarization over basis
    /// vectors. Fails if the field does not match the extracted quadratic at
    /// random points.
    pub fn quadratic_from_flow(flow: &dyn Flow) -> Result<PolySystem> {
        let n = flow.n();
        let basis = SoBasis::new(n);
        let elems = basis.elements();
        let m = elems.len();
        let f = |x: &AlgebraElement| flow.rhs(x).0;

        let diag: Vec<DVector<f64>> = elems.iter().map(|e| f(e).coeffs().clone()).collect();
        let mut components = vec![Poly::zero(); m];
        for a in 0..m {
            for out in 0..m {
                components[out].add_term(vec![a, a], diag[a][out]);
            }
            for b in (a + 1)..m {
                let cross = f(&elems[a].add(&elems[b])).coeffs() - &diag[a] - &diag[b];
                for out in 0..m {
                    components[out].add_term(vec![a, b], cross[out]);
                }
            }
        }
        let sys = PolySystem::new(components);

        // the construction is exact only for homogeneous quadratic fields;
        // spot-check before trusting it
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x51ad);
        for _ in 0..5 {
            let mut x = AlgebraElement::zero(n);
            let xs: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for (idx, v) in xs.iter().enumerate() {
                let (i, j) = basis.pair(idx);
                x.set_coeff(i, j, *v);
            }
            let want = f(&x);
            let got = sys.eval(&xs);
            let err: f64 = (0..m)
                .map(|k| (got[k] - want.coeffs()[k]).abs())
                .fold(0.0, f64::max);
            if err > 1e-9 * (1.0 + want.coeffs().norm()) {
                return Err(Error::InvalidParameters(
                    "vector field is not homogeneous quadratic".into(),
                ));
            }
        }
        Ok(sys)
    }

    /// Restriction to the coordinate subspace spanned by `vars` (all other
    /// coordinates set to zero). Errors if the subspace is not invariant.
    pub fn restrict(&self, vars: &[usize]) -> Result<PolySystem> {
        let keep: HashMap<usize, usize> =
            vars.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let substitute = |p: &Poly| {
            let mut out = Poly::zero();
            for (mono, c) in p.terms() {
                if let Some(remapped) = mono
                    .iter()
                    .map(|a| keep.get(a).copied())
                    .collect::<Option<Monomial>>()
                {
                    out.add_term(remapped, c);
                }
            }
            out
        };
        for (a, comp) in self.components.iter().enumerate() {
            if !keep.contains_key(&a) && !substitute(comp).is_zero() {
                return Err(Error::InvalidParameters(format!(
                    "coordinate subspace is not invariant: component {a} survives"
                )));
            }
        }
        Ok(PolySystem::new(
            vars.iter().map(|&a| substitute(&self.components[a])).collect(),
        ))
    }
}

/// Lie derivative `L_f p = Σ_a (∂p/∂x_a) f_a`.
pub fn lie_derivative(sys: &PolySystem, p: &Poly) -> Poly {
    let mut out = Poly::zero();
    for (mono, c) in p.terms() {
        let mut seen = usize::MAX;
        for (pos, &a) in mono.iter().enumerate() {
            if a == seen {
                continue;
            }
            seen = a;
            let mult = mono.iter().filter(|&&b| b == a).count() as f64;
            let mut reduced = mono.clone();
            reduced.remove(pos);
            let partial = Poly::monomial(&reduced, c * mult);
            out = out.add(&partial.mul(sys.component(a)));
        }
    }
    out
}

/// Matrix of `L_f` from the degree `≤ d` monomial basis (columns) to the
/// degree `≤ d+1` basis (rows), both graded and constant-free.
pub fn lie_derivative_matrix(
    sys: &PolySystem,
    d: usize,
) -> (DMatrix<f64>, Vec<Monomial>, Vec<Monomial>) {
    let m = sys.m();
    let cols = monomial_basis(m, d);
    let rows = monomial_basis(m, d + 1);
    let row_index: HashMap<&Monomial, usize> =
        rows.iter().enumerate().map(|(i, mo)| (mo, i)).collect();
    let mut mat = DMatrix::<f64>::zeros(rows.len(), cols.len());
    for (j, mono) in cols.iter().enumerate() {
        let image = lie_derivative(sys, &Poly::monomial(mono, 1.0));
        for (mo, c) in image.terms() {
            mat[(row_index[mo], j)] = c;
        }
    }
    (mat, cols, rows)
}

/// Outcome of [`search_integrals`].
#[derive(Debug)]
pub struct IntegralBasis {
    /// Degree bound of the search.
    pub degree: usize,
    /// Kernel dimension of the Lie-derivative matrix at the final degree.
    pub kernel_dim: usize,
    /// Dimension (at the final degree) of the span of products of the
    /// supplied integrals and the generators found at lower degrees.
    pub known_dim: usize,
    /// Generators not expressible as polynomials in known integrals,
    /// in increasing degree.
    pub new_integrals: Vec<Poly>,
}

const KERNEL_REL_TOL: f64 = 1e-9;
const GAP_FACTOR: f64 = 1e3;
const MEMBERSHIP_TOL: f64 = 1e-6;

/// All products of `gens` with total degree between 1 and `d`, each given as
/// a coefficient vector over `cols`.
fn product_vectors(gens: &[Poly], d: usize, cols: &[Monomial]) -> Vec<DVector<f64>> {
    let col_index: HashMap<&Monomial, usize> =
        cols.iter().enumerate().map(|(i, mo)| (mo, i)).collect();
    let degs: Vec<usize> = gens.iter().map(|g| g.degree().max(1)).collect();
    let mut out = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn rec(
        gens: &[Poly],
        degs: &[usize],
        i: usize,
        budget: usize,
        acc: &Poly,
        nontrivial: bool,
        col_index: &HashMap<&Monomial, usize>,
        ncols: usize,
        out: &mut Vec<DVector<f64>>,
    ) {
        if i == gens.len() {
            if nontrivial {
                let mut v = DVector::zeros(ncols);
                for (mo, c) in acc.terms() {
                    if let Some(&j) = col_index.get(mo) {
                        v[j] = c;
                    }
                }
                out.push(v);
            }
            return;
        }
        let mut cur = acc.clone();
        let mut used = 0;
        loop {
            rec(gens, degs, i + 1, budget - used, &cur, nontrivial || used > 0, col_index, ncols, out);
            used += degs[i];
            if used > budget {
                break;
            }
            cur = cur.mul(&gens[i]);
        }
    }
    let one = Poly::monomial(&[], 1.0);
    rec(gens, &degs, 0, d, &one, false, &col_index, cols.len(), &mut out);
    out
}

/// Gram–Schmidt step: returns the component of `v` orthogonal to `basis`,
/// appending the normalized residual to `basis` when it is significant.
fn residual_against(basis: &[DVector<f64>], v: &DVector<f64>) -> DVector<f64> {
    let mut r = v.clone();
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(&r);
            r -= q * c;
        }
    }
    r
}

/// Searches for polynomial first integrals of `sys` of degree at most `d`,
/// degree by degree. Kernel vectors of the Lie-derivative matrix that lie in
/// the algebra generated by `known` (and by generators found at lower
/// degrees) are discarded; the rest are reported as new generators.
pub fn search_integrals(sys: &PolySystem, d: usize, known: &[Poly]) -> Result<IntegralBasis> {
    let (mat, cols, _rows) = lie_derivative_matrix(sys, d);
    let mut gens: Vec<Poly> = known.to_vec();
    let mut new_integrals = Vec::new();
    let mut kernel_dim = 0;
    let mut known_dim = 0;

    for k in 1..=d {
        let ncols = cols.iter().take_while(|mo| mo.len() <= k).count();
        let sub = mat.columns(0, ncols).into_owned();
        let svd = sub.svd(false, true);
        let sigma = &svd.singular_values;
        let smax = sigma.max().max(f64::MIN_POSITIVE);
        let thr = KERNEL_REL_TOL * smax;
        let mut kernel_sigmas = Vec::new();
        let mut rest_min = f64::INFINITY;
        for &s in sigma.iter() {
            if s < thr {
                kernel_sigmas.push(s);
            } else {
                rest_min = rest_min.min(s);
            }
        }
        let kmax = kernel_sigmas.iter().cloned().fold(0.0f64, f64::max);
        if !kernel_sigmas.is_empty() && kmax > 0.0 && rest_min / kmax < GAP_FACTOR {
            return Err(Error::NumericalRankAmbiguous(rest_min / kmax));
        }

        let vt = svd.v_t.as_ref().expect("v requested");
        let mut kernel_vecs = Vec::new();
        for (i, &s) in sigma.iter().enumerate() {
            if s < thr {
                kernel_vecs.push(vt.row(i).transpose());
            }
        }

        // orthonormal basis of the space generated by products of known
        // generators, within degree k
        let mut qbasis: Vec<DVector<f64>> = Vec::new();
        for v in product_vectors(&gens, k, &cols[..ncols]) {
            let r = residual_against(&qbasis, &v);
            let norm = r.norm();
            if norm > MEMBERSHIP_TOL * v.norm().max(1.0) {
                qbasis.push(r / norm);
            }
        }
        if k == d {
            kernel_dim = kernel_vecs.len();
            known_dim = qbasis.len();
        }

        for v in kernel_vecs {
            let r = residual_against(&qbasis, &v);
            let norm = r.norm();
            if norm > MEMBERSHIP_TOL {
                let q = r / norm;
                let mut p = Poly::zero();
                for (j, mo) in cols[..ncols].iter().enumerate() {
                    p.add_term(mo.clone(), q[j]);
                }
                let p = p.cleaned(1e-10);
                gens.push(p.clone());
                new_integrals.push(p);
                qbasis.push(q);
            }
        }
    }

    Ok(IntegralBasis {
        degree: d,
        kernel_dim,
        known_dim,
        new_integrals,
    })
}

/// The two Casimir functions of `so(4)`: the squared norm and the Pfaffian
/// `x_12 x_34 − x_13 x_24 + x_14 x_23`.
pub fn casimirs_so4(x: &AlgebraElement) -> Result<(f64, f64)> {
    if x.n() != 4 {
        return Err(Error::DimensionMismatch(x.n(), 4));
    }
    let c = |i, j| x.coeff(i, j);
    let i1 = x.coeffs().norm_squared();
    let i2 = c(1, 2) * c(3, 4) - c(1, 3) * c(2, 4) + c(1, 4) * c(2, 3);
    Ok((i1, i2))
}

/// [`casimirs_so4`] as symbolic polynomials in the flat coordinates of
/// [`SoBasis::new(4)`].
pub fn casimir_polys_so4() -> (Poly, Poly) {
    let b = SoBasis::new(4);
    let idx = |i, j| b.flat(i, j);
    let mut i1 = Poly::zero();
    for a in 0..6 {
        i1.add_term(vec![a, a], 1.0);
    }
    let mut i2 = Poly::zero();
    i2.add_term(vec![idx(1, 2), idx(3, 4)], 1.0);
    i2.add_term(vec![idx(1, 3), idx(2, 4)], -1.0);
    i2.add_term(vec![idx(1, 4), idx(2, 3)], 1.0);
    (i1, i2)
}
