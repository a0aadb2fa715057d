//! The Manakov operator `ω_ij = ((b_i − b_j)/(a_i − a_j)) x_ij`, its
//! polynomial integral family, and the singular (sub-Riemannian) variants
//! obtained from repeated eigenvalues of `b` and `a`.

use crate::algebra::{inner, AlgebraElement, SoBasis};
use crate::filtration::SrStructure;
use crate::{Error, Result};

/// Diagonal parameter matrices `a`, `b` with their block structure and the
/// induced splittings of so(n).
#[derive(Debug, Clone)]
pub struct ManakovData {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    /// Index blocks of equal `a` entries (order of first appearance).
    a_blocks: Vec<Vec<usize>>,
    /// Index blocks of equal `b` entries.
    b_blocks: Vec<Vec<usize>>,
}

fn blocks(values: &[f64]) -> Vec<Vec<usize>> {
    // exact float equality: the entries are user-specified parameters
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if let Some(entry) = out.iter_mut().find(|(w, _)| *w == v) {
            entry.1.push(i);
        } else {
            out.push((v, vec![i]));
        }
    }
    out.into_iter().map(|(_, idx)| idx).collect()
}

impl ManakovData {
    /// Validates that the ratio `(b_i − b_j)/(a_i − a_j)` is well defined:
    /// `a_i = a_j` is only allowed where `b_i = b_j`.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch(a.len(), b.len()));
        }
        let n = a.len();
        if n < 2 {
            return Err(Error::InvalidParameters("need n >= 2".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if a[i] == a[j] && b[i] != b[j] {
                    return Err(Error::InvalidParameters(format!(
                        "a_{} = a_{} but b_{} != b_{}: ad_a is singular across a b-block",
                        i + 1,
                        j + 1,
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let a_blocks = blocks(&a);
        let b_blocks = blocks(&b);
        Ok(ManakovData {
            n,
            a,
            b,
            a_blocks,
            b_blocks,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// True when all `a_i` are distinct (the regular Manakov case).
    pub fn is_regular(&self) -> bool {
        self.a_blocks.len() == self.n
    }

    /// True when `a` has a repeated eigenvalue (singular Manakov flow).
    pub fn is_singular(&self) -> bool {
        !self.is_regular()
    }

    /// Pairs `(i, j)` (1-based) spanning the isotropy algebra so(n)_a.
    pub fn so_n_a_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for block in &self.a_blocks {
            for (ai, &i) in block.iter().enumerate() {
                for &j in &block[ai + 1..] {
                    out.push((i + 1, j + 1));
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn so_n_b_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for block in &self.b_blocks {
            for (bi, &i) in block.iter().enumerate() {
                for &j in &block[bi + 1..] {
                    out.push((i + 1, j + 1));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Basis of so(n)_a (wedge elements inside the a-blocks).
    pub fn so_n_a_basis(&self) -> Vec<AlgebraElement> {
        let basis = SoBasis::new(self.n);
        self.so_n_a_pairs()
            .into_iter()
            .map(|(i, j)| basis.element(i, j))
            .collect()
    }

    pub fn so_n_b_basis(&self) -> Vec<AlgebraElement> {
        let basis = SoBasis::new(self.n);
        self.so_n_b_pairs()
            .into_iter()
            .map(|(i, j)| basis.element(i, j))
            .collect()
    }

    /// Projection of `x` onto `v = (so(n)_a)^⊥`.
    pub fn project_v(&self, x: &AlgebraElement) -> AlgebraElement {
        let mut out = x.clone();
        for (i, j) in self.so_n_a_pairs() {
            out.set_coeff(i, j, 0.0);
        }
        out
    }

    /// Projection of `x` onto `d = (so(n)_b)^⊥`.
    pub fn project_d(&self, x: &AlgebraElement) -> AlgebraElement {
        let mut out = x.clone();
        for (i, j) in self.so_n_b_pairs() {
            out.set_coeff(i, j, 0.0);
        }
        out
    }

    /// The metric ratio at the pair `(i, j)`, zero on b-blocks.
    pub fn ratio(&self, i: usize, j: usize) -> f64 {
        let (bi, bj) = (self.b[i - 1], self.b[j - 1]);
        if bi == bj {
            0.0
        } else {
            (bi - bj) / (self.a[i - 1] - self.a[j - 1])
        }
    }

    /// `ω = ad_a⁻¹ ad_b (x_v)`: componentwise scaling by [`ratio`](Self::ratio).
    pub fn omega(&self, x: &AlgebraElement) -> AlgebraElement {
        assert_eq!(x.n(), self.n);
        let basis = SoBasis::new(self.n);
        let mut out = AlgebraElement::zero(self.n);
        for k in 0..basis.dim() {
            let (i, j) = basis.pair(k);
            let r = self.ratio(i, j);
            if r != 0.0 {
                out.set_coeff(i, j, r * x.coeff(i, j));
            }
        }
        out
    }

    /// Checks positivity of `ad_b ∘ ad_a⁻¹` on `d` (needed for a metric).
    pub fn is_metric(&self) -> bool {
        let basis = SoBasis::new(self.n);
        (0..basis.dim()).all(|k| {
            let (i, j) = basis.pair(k);
            self.b[i - 1] == self.b[j - 1] || self.ratio(i, j) > 0.0
        })
    }

    /// Validates the singular-mode requirement so(n)_a ≤ so(n)_b.
    pub fn validate_singular(&self) -> Result<()> {
        for (i, j) in self.so_n_a_pairs() {
            if self.b[i - 1] != self.b[j - 1] {
                return Err(Error::InvalidParameters(format!(
                    "a-block pair ({i},{j}) is not inside a b-block"
                )));
            }
        }
        Ok(())
    }

    /// All λ-coefficients of `tr((X + λ a)^k)` for `k = 2..=n`, flattened as
    /// `(k, m, value)` with `m` the λ-power.
    pub fn integrals(&self, x: &AlgebraElement) -> Vec<(usize, usize, f64)> {
        assert_eq!(x.n(), self.n);
        let n = self.n;
        // entries of X + λ a as degree-1 polynomials in λ
        let xm = x.matrix();
        let poly_entry = |i: usize, j: usize| -> Vec<f64> {
            let c1 = if i == j { self.a[i] } else { 0.0 };
            vec![xm[(i, j)], c1]
        };
        let mut out = Vec::new();
        // power up the polynomial matrix, taking traces along the way
        let mut current: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|i| (0..n).map(|j| poly_entry(i, j)).collect())
            .collect();
        let base = current.clone();
        for k in 2..=n {
            current = poly_mat_mul(&current, &base);
            let mut tr = vec![0.0; k + 1];
            for (i, row) in current.iter().enumerate() {
                for (m, c) in row[i].iter().enumerate() {
                    if m < tr.len() {
                        tr[m] += c;
                    }
                }
            }
            for (m, c) in tr.into_iter().enumerate() {
                out.push((k, m, c));
            }
        }
        out
    }

    /// `H_{sR,a,b}(x) = (1/2) ⟨ad_b ad_a⁻¹ (x_v), x⟩`.
    pub fn sr_hamiltonian(&self, x: &AlgebraElement) -> f64 {
        let omega = self.omega(&self.project_v(x));
        0.5 * inner(&omega, x).expect("same n")
    }

    /// Entrywise deviation between the Manakov quadratic form and a chain
    /// Hamiltonian over the basis of quadratic monomials.
    pub fn chain_coincidence(&self, srs: &SrStructure) -> Result<f64> {
        let basis = SoBasis::new(self.n);
        if srs.filtration().ambient().n() != self.n {
            return Err(Error::DimensionMismatch(
                srs.filtration().ambient().n(),
                self.n,
            ));
        }
        let d = basis.dim();
        // Gram matrices of both quadratic forms in the wedge basis
        let mut max_dev: f64 = 0.0;
        let elems = basis.elements();
        for k in 0..d {
            for l in k..d {
                // polarization: Q(u, v) = (H(u+v) - H(u-v)) / 4
                let up = elems[k].add(&elems[l]);
                let um = elems[k].sub(&elems[l]);
                let manakov = (self.sr_hamiltonian(&up) - self.sr_hamiltonian(&um)) / 4.0;
                let chain = (srs.hamiltonian(&up) - srs.hamiltonian(&um)) / 4.0;
                let scale = if k == l { 1.0 } else { 2.0 };
                max_dev = max_dev.max(scale * (manakov - chain).abs());
            }
        }
        Ok(max_dev)
    }
}

fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, &pi) in p.iter().enumerate() {
        if pi == 0.0 {
            continue;
        }
        for (j, &qj) in q.iter().enumerate() {
            out[i + j] += pi * qj;
        }
    }
    out
}

fn poly_add_into(acc: &mut Vec<f64>, p: &[f64]) {
    if acc.len() < p.len() {
        acc.resize(p.len(), 0.0);
    }
    for (i, &pi) in p.iter().enumerate() {
        acc[i] += pi;
    }
}

type PolyMatrix = Vec<Vec<Vec<f64>>>;

fn poly_mat_mul(a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
    let n = a.len();
    let mut out: PolyMatrix = vec![vec![vec![0.0]; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = vec![0.0];
            for (k, b_k) in b.iter().enumerate() {
                poly_add_into(&mut acc, &poly_mul(&a[i][k], &b_k[j]));
            }
            out[i][j] = acc;
        }
    }
    out
}
