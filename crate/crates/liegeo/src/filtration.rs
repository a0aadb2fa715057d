//! Chains of Lie subalgebras `g_0 < g_1 < … < g_n = so(n)`, the orthogonal
//! splittings `p_i = g_i ⊖ g_{i-1}`, bracket-generating hulls, and a catalog
//! of named chains.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{bracket, AlgebraElement, SoBasis};
use crate::{Error, Result};

/// Relative singular-value threshold for rank and null-space decisions.
const RANK_TOL: f64 = 1e-10;
/// Residual tolerance for subalgebra-closure checks.
const CLOSURE_TOL: f64 = 1e-10;

/// Orthonormalizes a list of algebra elements with modified Gram-Schmidt
/// (two passes). Returns `None` if the list is rank deficient.
fn orthonormalize(vectors: &[AlgebraElement], n: usize) -> Option<Vec<AlgebraElement>> {
    let mut out: Vec<AlgebraElement> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &out {
                let c = w.coeffs().dot(u.coeffs());
                w = w.sub(&u.scale(c));
            }
        }
        let norm = w.norm();
        if norm < RANK_TOL * v.norm().max(1.0) {
            return None;
        }
        out.push(w.scale(1.0 / norm));
    }
    let _ = n;
    Some(out)
}

/// Orthogonal projector onto the span of an orthonormal list, as a `d × d`
/// matrix acting on coefficient vectors.
fn projector(basis: &[AlgebraElement], dim: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(dim, dim);
    for u in basis {
        p += u.coeffs() * u.coeffs().transpose();
    }
    p
}

fn project_onto(basis: &[AlgebraElement], x: &AlgebraElement) -> AlgebraElement {
    let mut out = AlgebraElement::zero(x.n());
    for u in basis {
        out = out.add(&u.scale(u.coeffs().dot(x.coeffs())));
    }
    out
}

/// A validated filtration `g_0 < … < g_n` with derived complements and
/// projectors.
#[derive(Debug, Clone)]
pub struct Filtration {
    ambient: SoBasis,
    levels: Vec<Vec<AlgebraElement>>,
    complements: Vec<Vec<AlgebraElement>>,
    projectors: Vec<DMatrix<f64>>,
}

/// The splitting `x = x_0 + … + x_n` of an element along the complements.
#[derive(Debug, Clone)]
pub struct Decomposition {
    parts: Vec<AlgebraElement>,
}

impl Decomposition {
    pub fn parts(&self) -> &[AlgebraElement] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> &AlgebraElement {
        &self.parts[i]
    }

    /// Partial sum `x_{g_i} = x_0 + … + x_i`.
    pub fn partial(&self, i: usize) -> AlgebraElement {
        let mut out = self.parts[0].clone();
        for p in &self.parts[1..=i] {
            out = out.add(p);
        }
        out
    }

    pub fn reassemble(&self) -> AlgebraElement {
        self.partial(self.parts.len() - 1)
    }
}

impl Filtration {
    /// Builds and validates a filtration from spanning sets, one per level.
    ///
    /// The last level need not span the whole ambient algebra; `g_n` is
    /// whatever the last spanning set spans. Errors name the failing level.
    pub fn new(ambient: SoBasis, chain: &[Vec<AlgebraElement>]) -> Result<Self> {
        assert!(!chain.is_empty(), "empty chain");
        let n = ambient.n();
        let d = ambient.dim();
        let mut levels: Vec<Vec<AlgebraElement>> = Vec::with_capacity(chain.len());
        for (li, span) in chain.iter().enumerate() {
            for v in span {
                if v.n() != n {
                    return Err(Error::DimensionMismatch(v.n(), n));
                }
            }
            let basis =
                orthonormalize(span, n).ok_or(Error::LinearlyDependent(li))?;
            if let Some(prev) = levels.last() {
                // nesting: previous basis must lie in the current span
                let p = projector(&basis, d);
                for u in prev {
                    if (u.coeffs() - &p * u.coeffs()).norm() > CLOSURE_TOL {
                        return Err(Error::NotNested(li - 1, li));
                    }
                }
                if basis.len() <= prev.len() {
                    return Err(Error::NotStrict(li, li - 1));
                }
            }
            // subalgebra closure
            let p = projector(&basis, d);
            let mut defect: f64 = 0.0;
            for a in 0..basis.len() {
                for b in (a + 1)..basis.len() {
                    let br = bracket(&basis[a], &basis[b])?;
                    defect = defect.max((br.coeffs() - &p * br.coeffs()).norm());
                }
            }
            if defect > CLOSURE_TOL {
                return Err(Error::NotSubalgebra(li, defect));
            }
            levels.push(basis);
        }

        // complements p_0 = g_0, p_i = g_i minus g_{i-1}
        let mut complements: Vec<Vec<AlgebraElement>> = vec![levels[0].clone()];
        for li in 1..levels.len() {
            let prev = &levels[li - 1];
            let mut comp: Vec<AlgebraElement> = Vec::new();
            for v in &levels[li] {
                let mut w = v.sub(&project_onto(prev, v));
                for _ in 0..2 {
                    for u in &comp {
                        let c = w.coeffs().dot(u.coeffs());
                        w = w.sub(&u.scale(c));
                    }
                    w = w.sub(&project_onto(prev, &w));
                }
                let norm = w.norm();
                if norm > RANK_TOL {
                    comp.push(w.scale(1.0 / norm));
                }
            }
            debug_assert_eq!(comp.len(), levels[li].len() - prev.len());
            complements.push(comp);
        }
        let projectors = complements.iter().map(|c| projector(c, d)).collect();
        Ok(Filtration {
            ambient,
            levels,
            complements,
            projectors,
        })
    }

    pub fn ambient(&self) -> SoBasis {
        self.ambient
    }

    /// Number of links, i.e. the index `n` in `g_0 < … < g_n`.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, i: usize) -> &[AlgebraElement] {
        &self.levels[i]
    }

    pub fn level_dim(&self, i: usize) -> usize {
        self.levels[i].len()
    }

    /// Orthonormal basis of `p_i`.
    pub fn complement(&self, i: usize) -> &[AlgebraElement] {
        &self.complements[i]
    }

    pub fn complement_dim(&self, i: usize) -> usize {
        self.complements[i].len()
    }

    /// Projector matrix onto `p_i` in coefficient space.
    pub fn projector(&self, i: usize) -> &DMatrix<f64> {
        &self.projectors[i]
    }

    /// Splits `x` into its `p_i` components.
    pub fn decompose(&self, x: &AlgebraElement) -> Decomposition {
        let parts = self
            .projectors
            .iter()
            .map(|p| {
                AlgebraElement::from_coeffs(self.ambient.n(), p * x.coeffs()).expect("sized")
            })
            .collect();
        Decomposition { parts }
    }

    /// Kernel of `ad(x_{g_i})` restricted to `g_i` (SVD null space).
    pub fn isotropy(&self, i: usize, x: &AlgebraElement) -> Vec<AlgebraElement> {
        let partial = self.decompose(x).partial(i);
        let basis = &self.levels[i];
        let k = basis.len();
        if k == 0 {
            return Vec::new();
        }
        // matrix of ad(x_{g_i}) on g_i in the level basis
        let mut m = DMatrix::zeros(k, k);
        for (col, b) in basis.iter().enumerate() {
            let br = bracket(&partial, b).expect("same n");
            for (row, u) in basis.iter().enumerate() {
                m[(row, col)] = u.coeffs().dot(br.coeffs());
            }
        }
        let svd = m.svd(false, true);
        let smax = svd.singular_values.max();
        let v_t = svd.v_t.unwrap();
        let mut out = Vec::new();
        for r in 0..k {
            let sv = if r < svd.singular_values.len() {
                svd.singular_values[r]
            } else {
                0.0
            };
            if sv <= RANK_TOL * smax.max(1e-300) || smax == 0.0 {
                let row = v_t.row(r);
                let mut v = AlgebraElement::zero(self.ambient.n());
                for (c, b) in basis.iter().enumerate() {
                    v = v.add(&b.scale(row[c]));
                }
                out.push(v);
            }
        }
        out
    }

    /// Generic invariant-torus dimension: `rank g_0` plus the sum over links
    /// of the minimal dimension of `pr_{p_i}` of the isotropy of `x_{g_i}`,
    /// minimized over random samples.
    pub fn torus_dimension(&self, samples: usize, seed: u64) -> usize {
        assert!(samples >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.ambient.n();
        let d = self.ambient.dim();
        let random_x = |rng: &mut ChaCha8Rng| {
            let coeffs = DVector::from_iterator(d, (0..d).map(|_| rng.gen_range(-1.0f64..1.0)));
            AlgebraElement::from_coeffs(n, coeffs).unwrap()
        };

        // rank g_0: dimension of the centralizer of a generic element of g_0
        // within g_0, minimized over samples
        let rank_g0 = if self.levels[0].is_empty() {
            0
        } else {
            let g0 = Filtration {
                ambient: self.ambient,
                levels: vec![self.levels[0].clone()],
                complements: vec![self.complements[0].clone()],
                projectors: vec![self.projectors[0].clone()],
            };
            (0..samples)
                .map(|_| {
                    let z = project_onto(&self.levels[0], &random_x(&mut rng));
                    g0.isotropy(0, &z).len()
                })
                .min()
                .unwrap()
        };

        let mut delta = rank_g0;
        for i in 1..self.levels.len() {
            let dim_i = (0..samples)
                .map(|_| {
                    let x = random_x(&mut rng);
                    let iso = self.isotropy(i, &x);
                    if iso.is_empty() {
                        return 0;
                    }
                    let mut cols: Vec<AlgebraElement> = Vec::new();
                    for v in &iso {
                        cols.push(
                            AlgebraElement::from_coeffs(n, &self.projectors[i] * v.coeffs())
                                .unwrap(),
                        );
                    }
                    orthonormalize_rank(&cols)
                })
                .min()
                .unwrap();
            delta += dim_i;
        }
        delta
    }
}

/// Rank of the span of a list of elements.
fn orthonormalize_rank(vectors: &[AlgebraElement]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let mut out: Vec<AlgebraElement> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &out {
                let c = w.coeffs().dot(u.coeffs());
                w = w.sub(&u.scale(c));
            }
        }
        let norm = w.norm();
        if norm > RANK_TOL.max(RANK_TOL * v.norm()) {
            out.push(w.scale(1.0 / norm));
        }
    }
    out.len()
}

/// One step of a hull computation: bracketing generators `lhs` and `rhs`
/// produced a new independent direction.
#[derive(Debug, Clone)]
pub struct HullStep {
    pub lhs: usize,
    pub rhs: usize,
    pub new_dim: usize,
}

/// Smallest bracket-closed subspace containing `seed`, as an orthonormal
/// basis, together with a certificate of which brackets produced new
/// directions.
pub fn lie_hull_certified(
    ambient: SoBasis,
    seed: &[AlgebraElement],
) -> (Vec<AlgebraElement>, Vec<HullStep>) {
    assert!(!seed.is_empty(), "empty seed");
    let mut basis: Vec<AlgebraElement> = Vec::new();
    let mut steps = Vec::new();
    for v in seed {
        let mut w = v.clone();
        for u in &basis {
            let c = w.coeffs().dot(u.coeffs());
            w = w.sub(&u.scale(c));
        }
        let norm = w.norm();
        if norm > RANK_TOL * v.norm().max(1.0) {
            basis.push(w.scale(1.0 / norm));
        }
    }
    let full = ambient.dim();
    let mut frontier_start = 0;
    while basis.len() < full {
        let end = basis.len();
        let mut grew = false;
        for a in 0..end {
            for b in a.max(frontier_start)..end {
                if a == b {
                    continue;
                }
                let br = bracket(&basis[a], &basis[b]).expect("same n");
                let mut w = br.clone();
                for _ in 0..2 {
                    for u in &basis {
                        let c = w.coeffs().dot(u.coeffs());
                        w = w.sub(&u.scale(c));
                    }
                }
                let norm = w.norm();
                if norm > RANK_TOL {
                    basis.push(w.scale(1.0 / norm));
                    steps.push(HullStep {
                        lhs: a,
                        rhs: b,
                        new_dim: basis.len(),
                    });
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
        frontier_start = end;
    }
    (basis, steps)
}

/// Smallest bracket-closed subspace containing `seed`.
pub fn lie_hull(ambient: SoBasis, seed: &[AlgebraElement]) -> Vec<AlgebraElement> {
    lie_hull_certified(ambient, seed).0
}

/// A filtration together with the index set `I` and parameters `s` defining
/// a sub-Riemannian structure on `d = ⊕_{i ∈ I} p_i`.
#[derive(Debug, Clone)]
pub struct SrStructure {
    filtration: Filtration,
    index_set: Vec<usize>,
    s: Vec<f64>,
}

impl SrStructure {
    /// Validates: `s_i = 0` exactly for `i ∉ I`, consecutive parameters
    /// distinct, and `d` bracket generating.
    pub fn new(filtration: Filtration, index_set: Vec<usize>, s: Vec<f64>) -> Result<Self> {
        let links = filtration.depth();
        if s.len() != links + 1 {
            return Err(Error::DimensionMismatch(s.len(), links + 1));
        }
        for (i, &si) in s.iter().enumerate() {
            let in_set = index_set.contains(&i);
            if in_set && si == 0.0 {
                return Err(Error::InvalidParameters(format!(
                    "s_{i} = 0 but {i} is in the index set"
                )));
            }
            if !in_set && si != 0.0 {
                return Err(Error::InvalidParameters(format!(
                    "s_{i} = {si} but {i} is outside the index set"
                )));
            }
        }
        for i in 1..=links {
            if s[i] == s[i - 1] {
                return Err(Error::EqualConsecutiveParameters(i, i - 1));
            }
        }
        let mut seed: Vec<AlgebraElement> = Vec::new();
        for &i in &index_set {
            seed.extend(filtration.complement(i).iter().cloned());
        }
        if seed.is_empty() {
            return Err(Error::NotBracketGenerating(0, filtration.ambient().dim()));
        }
        let hull = lie_hull(filtration.ambient(), &seed);
        if hull.len() != filtration.ambient().dim() {
            return Err(Error::NotBracketGenerating(
                hull.len(),
                filtration.ambient().dim(),
            ));
        }
        Ok(SrStructure {
            filtration,
            index_set,
            s,
        })
    }

    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    pub fn index_set(&self) -> &[usize] {
        &self.index_set
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// `H_sR(x) = Σ_i (s_i / 2) ⟨x_i, x_i⟩`.
    pub fn hamiltonian(&self, x: &AlgebraElement) -> f64 {
        let dec = self.filtration.decompose(x);
        self.s
            .iter()
            .zip(dec.parts())
            .map(|(si, xi)| 0.5 * si * xi.coeffs().norm_squared())
            .sum()
    }
}

/// A named filtration with default index set and parameters.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub filtration: Filtration,
    pub index_set: Vec<usize>,
    pub s: Vec<f64>,
}

impl CatalogEntry {
    pub fn sr_structure(&self) -> Result<SrStructure> {
        SrStructure::new(self.filtration.clone(), self.index_set.clone(), self.s.clone())
    }
}

/// Names understood by [`catalog`].
pub const CATALOG_NAMES: &[&str] = &[
    "so2-so3-so4",
    "so2-so2so2-so4",
    "u1-su2-u2-so4",
    "rank2-so4",
    "su3-g2-so7",
    "lanci(n;l1,...,lp)",
    "stiefel(n)",
];

fn block_so(ambient: SoBasis, lo: usize, hi: usize) -> Vec<AlgebraElement> {
    // so(hi - lo + 1) embedded on indices lo..=hi
    let mut out = Vec::new();
    for i in lo..hi {
        for j in (i + 1)..=hi {
            out.push(ambient.element(i, j));
        }
    }
    out
}

fn lanci_chain(n: usize, parts: &[usize]) -> Result<Vec<Vec<AlgebraElement>>> {
    if parts.len() < 2
        || parts[0] < 2
        || parts.iter().any(|&l| l < 1)
        || parts.iter().sum::<usize>() != n
        || parts.len() >= n
    {
        return Err(Error::InvalidParameters(format!(
            "invalid lanci partition {parts:?} of {n}"
        )));
    }
    let ambient = SoBasis::new(n);
    let mut chain: Vec<Vec<AlgebraElement>> = Vec::new();
    let mut total = parts[0];
    chain.push(block_so(ambient, 1, total));
    for &l in &parts[1..] {
        if l >= 2 {
            // so(total) ⊕ so(l)
            let mut lvl = block_so(ambient, 1, total);
            lvl.extend(block_so(ambient, total + 1, total + l));
            chain.push(lvl);
        }
        total += l;
        chain.push(block_so(ambient, 1, total));
    }
    Ok(chain)
}

/// The g2 chain data of the su(3) < g2 < so(7) example: spanning sets for
/// su(3) (8 vectors), g2 (14 vectors) and so(7).
fn g2_chain() -> Vec<Vec<AlgebraElement>> {
    let b = SoBasis::new(7);
    let v = |pairs: &[(usize, usize)]| -> AlgebraElement {
        let mut out = AlgebraElement::zero(7);
        for &(i, j) in pairs {
            let term = if i < j {
                b.element(i, j)
            } else {
                b.element(j, i).scale(-1.0)
            };
            out = out.add(&term);
        }
        out
    };
    let p: Vec<AlgebraElement> = vec![
        v(&[(3, 2), (6, 7)]),
        v(&[(1, 3), (5, 7)]),
        v(&[(2, 1), (7, 4)]),
        v(&[(1, 4), (7, 2)]),
        v(&[(5, 1), (3, 7)]),
        v(&[(3, 5), (1, 7)]),
        v(&[(4, 3), (6, 1)]),
    ];
    let q: Vec<AlgebraElement> = vec![
        v(&[(4, 5), (6, 7)]),
        v(&[(6, 4), (5, 7)]),
        v(&[(6, 5), (7, 4)]),
        v(&[(3, 6), (7, 2)]),
        v(&[(2, 6), (3, 7)]),
        v(&[(3, 5), (4, 2)]),
        v(&[(4, 3), (5, 2)]),
    ];
    let r: Vec<AlgebraElement> = vec![
        v(&[(7, 1), (2, 4), (3, 5)]),
        v(&[(1, 6), (2, 5), (4, 3)]),
        v(&[(5, 1), (2, 6), (7, 3)]),
        v(&[(1, 4), (2, 7), (3, 6)]),
        v(&[(3, 2), (4, 5), (7, 6)]),
        v(&[(3, 1), (4, 6), (5, 7)]),
        v(&[(2, 1), (4, 7), (6, 5)]),
    ];
    let su3: Vec<AlgebraElement> = std::iter::once(p[0].clone()).chain(q.iter().cloned()).collect();
    let g2: Vec<AlgebraElement> = p.iter().chain(q.iter()).cloned().collect();
    let so7: Vec<AlgebraElement> = g2.iter().chain(r.iter()).cloned().collect();
    vec![su3, g2, so7]
}

/// Looks up a named filtration. Parametric names: `lanci(n;l1,l2,...)` and
/// `stiefel(n)`.
pub fn catalog(name: &str) -> Result<CatalogEntry> {
    let trimmed = name.trim();
    if let Some(rest) = trimmed.strip_prefix("lanci(") {
        let body = rest
            .strip_suffix(')')
            .ok_or_else(|| Error::UnknownCatalog(name.into()))?;
        let (ns, ls) = body
            .split_once(';')
            .ok_or_else(|| Error::UnknownCatalog(name.into()))?;
        let n: usize = ns
            .trim()
            .parse()
            .map_err(|_| Error::UnknownCatalog(name.into()))?;
        let parts: Vec<usize> = ls
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::UnknownCatalog(name.into()))?;
        let chain = lanci_chain(n, &parts)?;
        let filtration = Filtration::new(SoBasis::new(n), &chain)?;
        let links = filtration.depth();
        let index_set: Vec<usize> = (1..=links).collect();
        let s: Vec<f64> = (0..=links).map(|i| i as f64).collect();
        return Ok(CatalogEntry {
            name: trimmed.into(),
            filtration,
            index_set,
            s,
        });
    }
    if let Some(rest) = trimmed.strip_prefix("stiefel(") {
        let n: usize = rest
            .strip_suffix(')')
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| Error::UnknownCatalog(name.into()))?;
        if n < 4 {
            return Err(Error::InvalidParameters(
                "stiefel(n) needs n >= 4".into(),
            ));
        }
        let ambient = SoBasis::new(n);
        // k = so(n-2) in the lower-right block, then so(n-1), then so(n)
        let chain = vec![
            block_so(ambient, 3, n),
            block_so(ambient, 2, n),
            block_so(ambient, 1, n),
        ];
        let filtration = Filtration::new(ambient, &chain)?;
        return Ok(CatalogEntry {
            name: trimmed.into(),
            filtration,
            index_set: vec![1, 2],
            s: vec![0.0, 1.0, 2.0],
        });
    }
    let ambient4 = SoBasis::new(4);
    match trimmed {
        "so2-so3-so4" => {
            let chain = vec![
                vec![ambient4.element(1, 2)],
                vec![
                    ambient4.element(1, 2),
                    ambient4.element(1, 3),
                    ambient4.element(2, 3),
                ],
                ambient4.elements(),
            ];
            Ok(CatalogEntry {
                name: trimmed.into(),
                filtration: Filtration::new(ambient4, &chain)?,
                index_set: vec![1, 2],
                s: vec![0.0, 1.0, 2.0],
            })
        }
        "so2-so2so2-so4" => {
            let chain = vec![
                vec![ambient4.element(1, 2)],
                vec![ambient4.element(1, 2), ambient4.element(3, 4)],
                ambient4.elements(),
            ];
            Ok(CatalogEntry {
                name: trimmed.into(),
                filtration: Filtration::new(ambient4, &chain)?,
                index_set: vec![1, 2],
                s: vec![0.0, 1.0, 2.0],
            })
        }
        "u1-su2-u2-so4" => {
            let e = |i, j| ambient4.element(i, j);
            let u1 = vec![e(1, 2).sub(&e(3, 4))];
            let su2 = vec![
                e(1, 2).sub(&e(3, 4)),
                e(1, 4).sub(&e(2, 3)),
                e(1, 3).add(&e(2, 4)),
            ];
            let u2 = vec![e(1, 2), e(3, 4), e(1, 4).sub(&e(2, 3)), e(1, 3).add(&e(2, 4))];
            let chain = vec![u1, su2, u2, ambient4.elements()];
            Ok(CatalogEntry {
                name: trimmed.into(),
                filtration: Filtration::new(ambient4, &chain)?,
                index_set: vec![1, 3],
                s: vec![0.0, 1.0, 0.0, 2.0],
            })
        }
        "rank2-so4" => {
            // g_0 = span{e_23 + e_34} < so(3) on indices {2,3,4} < so(4)
            let e = |i, j| ambient4.element(i, j);
            let chain = vec![
                vec![e(2, 3).add(&e(3, 4))],
                vec![e(2, 3), e(2, 4), e(3, 4)],
                ambient4.elements(),
            ];
            Ok(CatalogEntry {
                name: trimmed.into(),
                filtration: Filtration::new(ambient4, &chain)?,
                index_set: vec![0, 2],
                s: vec![2.0, 0.0, 1.0],
            })
        }
        "su3-g2-so7" => {
            let chain = g2_chain();
            Ok(CatalogEntry {
                name: trimmed.into(),
                filtration: Filtration::new(SoBasis::new(7), &chain)?,
                index_set: vec![1, 2],
                s: vec![0.0, 1.0, 2.0],
            })
        }
        _ => Err(Error::UnknownCatalog(name.into())),
    }
}
