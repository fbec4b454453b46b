//! Tangent cones `G/H`: coset normal forms in a coordinate complement `S`,
//! the left action, horizontal frames, and the distinguished subspace at a point.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{gap_distance, graded_limit_fixed, kernel, Subspace, SubspaceDoc};
use crate::liealg::{AlgebraDoc, GradedLieAlgebra};
use crate::scalar::{Const, Dual, Scalar};
use crate::vfields::{FloatField, FloatPoly, NaturalMap};

pub const SUBALGEBRA_TOL: f64 = 1e-8;
const NEWTON_MAX_ITERS: usize = 50;

/// Element of `G/H`, stored by its coordinates in the complement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    pub coords: Vec<f64>,
}

impl ConePoint {
    pub fn new(coords: Vec<f64>) -> Self {
        ConePoint { coords }
    }
}

#[derive(Clone, Debug)]
pub struct TangentCone {
    algebra: GradedLieAlgebra,
    h: Subspace,
    complement: Vec<usize>,
    /// Inverse of `[H | E_S]`; rows `0..k` give h-coordinates, the rest S-coordinates.
    splitting: DMatrix<f64>,
    /// Polynomial action fields `ξ_{e_j}` in S-coordinates, when available.
    action: Option<Vec<FloatField>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeDoc {
    pub algebra: AlgebraDoc,
    pub h: SubspaceDoc,
    pub complement: Vec<usize>,
}

fn rank(vectors: &[Vec<f64>], n: usize) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i]);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-9 * smax.max(1e-300)).count()
}

fn min_singular(vectors: &[Vec<f64>], n: usize) -> f64 {
    let m = DMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i]);
    m.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Smallest singular value accepted for `[H | E_S]` when choosing `S`.
const SPLIT_CONDITION: f64 = 1e-4;

/// Builds `G/H`; `S` is spanned by coordinate directions picked greedily from
/// the highest weight down.
pub fn build_cone(algebra: &GradedLieAlgebra, h: &Subspace) -> Result<TangentCone> {
    let dim = algebra.dim();
    if h.ambient_dim() != dim {
        return Err(Error::AlgebraMismatch { expected: dim, got: h.ambient_dim() });
    }
    let rep = algebra.is_subalgebra(h, SUBALGEBRA_TOL)?;
    if !rep.is_subalgebra {
        return Err(Error::NotSubalgebra { residual: rep.residual });
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by_key(|&j| (std::cmp::Reverse(algebra.weights()[j]), j));
    let mut vectors = h.basis_vectors();
    let mut complement = Vec::new();
    // Well-conditioned directions first; near-dependent ones only if nothing else completes `S`.
    for strict in [true, false] {
        for &j in &order {
            if complement.contains(&j) || vectors.len() == dim {
                continue;
            }
            let mut cand = vectors.clone();
            cand.push(algebra.basis::<f64>(j));
            let ok = if strict { min_singular(&cand, dim) > SPLIT_CONDITION } else { rank(&cand, dim) == cand.len() };
            if ok {
                vectors = cand;
                complement.push(j);
            }
        }
    }
    complement.sort_unstable();
    let k = h.dim();
    let mut m = DMatrix::zeros(dim, dim);
    m.view_mut((0, 0), (dim, k)).copy_from(h.basis());
    for (c, &j) in complement.iter().enumerate() {
        m[(j, k + c)] = 1.0;
    }
    let splitting = m.try_inverse().ok_or_else(|| Error::Singular("complement does not split the algebra".into()))?;
    let mut cone = TangentCone { algebra: algebra.clone(), h: h.clone(), complement, splitting, action: None };
    cone.action = cone.symbolic_action();
    Ok(cone)
}

impl TangentCone {
    /// Cone whose codimension must equal `dim_m`.
    pub fn with_codim(algebra: &GradedLieAlgebra, h: &Subspace, dim_m: usize) -> Result<Self> {
        let c = build_cone(algebra, h)?;
        if c.dim() != dim_m {
            return Err(Error::CodimensionMismatch { expected: dim_m, got: c.dim() });
        }
        Ok(c)
    }

    pub fn algebra(&self) -> &GradedLieAlgebra {
        &self.algebra
    }

    pub fn h(&self) -> &Subspace {
        &self.h
    }

    /// Basis indices spanning the complement `S`.
    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    /// Dimension of `G/H`.
    pub fn dim(&self) -> usize {
        self.complement.len()
    }

    pub fn weight1_generators(&self) -> Vec<usize> {
        self.algebra.weight1_indices()
    }

    /// Weights of the complement coordinates.
    pub fn coord_weights(&self) -> Vec<u32> {
        self.complement.iter().map(|&j| self.algebra.weights()[j]).collect()
    }

    /// True when `α_λ 𝔥 = 𝔥`, i.e. `𝔥` is spanned by homogeneous vectors.
    pub fn is_graded(&self) -> bool {
        let w = self.algebra.weights();
        let lim = graded_limit_fixed(&self.h, w);
        lim.and_then(|l| gap_distance(&l, &self.h)).map(|g| g < 1e-9).unwrap_or(false)
    }

    pub fn base_point(&self) -> ConePoint {
        ConePoint::new(vec![0.0; self.dim()])
    }

    pub fn to_doc(&self) -> Result<ConeDoc> {
        Ok(ConeDoc { algebra: self.algebra.to_doc()?, h: self.h.to_doc(), complement: self.complement.clone() })
    }

    pub fn from_doc(doc: &ConeDoc) -> Result<Self> {
        let alg = GradedLieAlgebra::from_doc(&doc.algebra)?;
        let c = build_cone(&alg, &Subspace::from_doc(&doc.h)?)?;
        if c.complement != doc.complement {
            return Err(Error::InvalidArgument("stored complement differs from the rebuilt one".into()));
        }
        Ok(c)
    }

    fn check_point(&self, p: &ConePoint) -> Result<()> {
        if p.coords.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!("cone point of length {} for a cone of dimension {}", p.coords.len(), self.dim())));
        }
        Ok(())
    }

    fn check_vector(&self, g: &[f64]) -> Result<()> {
        if g.len() != self.algebra.dim() {
            return Err(Error::AlgebraMismatch { expected: self.algebra.dim(), got: g.len() });
        }
        Ok(())
    }

    /// `s ∈ S ⊂ 𝔤` from cone coordinates.
    pub fn embed(&self, p: &ConePoint) -> Vec<f64> {
        let mut v = vec![0.0; self.algebra.dim()];
        for (c, &j) in p.coords.iter().zip(&self.complement) {
            v[j] = *c;
        }
        v
    }

    fn split_generic<T: Scalar>(&self, g: &[T]) -> (Vec<T>, Vec<T>) {
        let dim = self.algebra.dim();
        let k = self.h.dim();
        let mut hc = vec![T::zero(); k];
        let mut sc = vec![T::zero(); dim - k];
        for r in 0..dim {
            let mut acc = T::zero();
            for (c, gc) in g.iter().enumerate() {
                let m = self.splitting[(r, c)];
                if m != 0.0 && !gc.is_zero() {
                    acc = acc + gc.clone() * T::from_f64(m);
                }
            }
            if r < k {
                hc[r] = acc;
            } else {
                sc[r - k] = acc;
            }
        }
        (hc, sc)
    }

    /// `(𝔥-coordinates, S-coordinates)` of `g` along `𝔤 = 𝔥 ⊕ S`.
    pub fn split(&self, g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let v = &self.splitting * DVector::from_column_slice(g);
        let k = self.h.dim();
        (v.rows(0, k).iter().cloned().collect(), v.rows(k, self.dim()).iter().cloned().collect())
    }

    fn h_vector<T: Scalar>(&self, eta: &[T]) -> Vec<T> {
        let dim = self.algebra.dim();
        (0..dim)
            .map(|i| {
                eta.iter().enumerate().fold(T::zero(), |acc, (j, e)| {
                    let b = self.h.basis()[(i, j)];
                    if b == 0.0 {
                        acc
                    } else {
                        acc + e.clone() * T::from_f64(b)
                    }
                })
            })
            .collect()
    }

    fn newton(&self, g: &[f64], eta0: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.h.dim();
        let scale = g.iter().map(|x| x.abs()).fold(1.0, f64::max);
        let tol = 1e-12 * scale;
        let mut eta = eta0;
        let mut last = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITERS {
            let prod = self.algebra.bch_product(g, &self.h_vector(&eta))?;
            let (fh, _) = self.split(&prod);
            let res = fh.iter().map(|x| x * x).sum::<f64>().sqrt();
            last = res;
            if res <= tol {
                return Ok((eta, prod));
            }
            let gd: Vec<Dual<f64>> = g.iter().map(|&x| Dual::constant(x)).collect();
            let mut jac = DMatrix::zeros(k, k);
            for c in 0..k {
                let ed: Vec<Dual<f64>> =
                    eta.iter().enumerate().map(|(i, &e)| Dual::new(e, if i == c { 1.0 } else { 0.0 })).collect();
                let pd = self.algebra.bch_product(&gd, &self.h_vector(&ed))?;
                let tang: Vec<f64> = pd.iter().map(|d| d.eps).collect();
                let (th, _) = self.split(&tang);
                for r in 0..k {
                    jac[(r, c)] = th[r];
                }
            }
            let step = jac
                .lu()
                .solve(&DVector::from_vec(fh))
                .ok_or_else(|| Error::Singular("coset Newton Jacobian".into()))?;
            for (e, s) in eta.iter_mut().zip(step.iter()) {
                *e -= s;
            }
        }
        Err(Error::NewtonFailed { residual: last })
    }

    /// The unique `s ∈ S` in the coset `g𝔥`.
    pub fn canonical_rep(&self, g: &[f64]) -> Result<ConePoint> {
        self.check_vector(g)?;
        let k = self.h.dim();
        if k == 0 {
            return Ok(ConePoint::new(self.split(g).1));
        }
        let (_, prod) = self.newton(g, vec![0.0; k])?;
        let (hg, _) = self.split(g);
        let (_, prod2) = self.newton(g, hg.iter().map(|x| -x).collect())?;
        let s1 = self.split(&prod).1;
        let s2 = self.split(&prod2).1;
        let scale = s1.iter().map(|x| x.abs()).fold(1.0, f64::max);
        let diff = s1.iter().zip(&s2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if diff > 1e-10 * scale {
            return Err(Error::NewtonFailed { residual: diff });
        }
        Ok(ConePoint::new(s1))
    }

    /// `g ⋆ p`.
    pub fn left_translate(&self, g: &[f64], p: &ConePoint) -> Result<ConePoint> {
        self.check_vector(g)?;
        self.check_point(p)?;
        let prod = self.algebra.bch_product(g, &self.embed(p))?;
        self.canonical_rep(&prod)
    }

    /// `d/dε canonical_rep(εe · p)` at `ε = 0`, by implicit differentiation.
    pub fn infinitesimal_action(&self, e: &[f64], p: &ConePoint) -> Result<Vec<f64>> {
        self.check_vector(e)?;
        self.check_point(p)?;
        let s = self.embed(p);
        let sd: Vec<Dual<f64>> = s.iter().map(|&x| Dual::constant(x)).collect();
        let ed: Vec<Dual<f64>> = e.iter().map(|&x| Dual::new(0.0, x)).collect();
        let a: Vec<f64> = self.algebra.bch_product(&ed, &sd)?.iter().map(|d| d.eps).collect();
        let k = self.h.dim();
        if k == 0 {
            return Ok(self.split(&a).1);
        }
        let mut jcols = Vec::with_capacity(k);
        let mut pj = DMatrix::zeros(k, k);
        for c in 0..k {
            let hd: Vec<Dual<f64>> = self.h.basis().column(c).iter().map(|&x| Dual::new(0.0, x)).collect();
            let col: Vec<f64> = self.algebra.bch_product(&sd, &hd)?.iter().map(|d| d.eps).collect();
            let (ch, _) = self.split(&col);
            for r in 0..k {
                pj[(r, c)] = ch[r];
            }
            jcols.push(col);
        }
        let (ah, _) = self.split(&a);
        let eta = pj
            .lu()
            .solve(&-DVector::from_vec(ah))
            .ok_or_else(|| Error::Singular("frame linear system".into()))?;
        let mut total = a;
        for (c, col) in jcols.iter().enumerate() {
            for (t, x) in total.iter_mut().zip(col) {
                *t += eta[c] * x;
            }
        }
        Ok(self.split(&total).1)
    }

    /// Frame `ξ_e(p)` for each weight-1 basis element, in S-coordinates.
    pub fn horizontal_frame(&self, p: &ConePoint) -> Result<Vec<Vec<f64>>> {
        self.weight1_generators()
            .into_iter()
            .map(|j| match &self.action {
                Some(f) => {
                    self.check_point(p)?;
                    Ok(f[j].eval(&p.coords))
                }
                None => self.infinitesimal_action(&self.algebra.basis(j), p),
            })
            .collect()
    }

    /// Action fields `ξ_{e_j}` for every basis element as polynomial fields, when the
    /// normal form is polynomial in the S-coordinates.
    pub fn action_fields(&self) -> Option<&[FloatField]> {
        self.action.as_deref()
    }

    fn symbolic_action(&self) -> Option<Vec<FloatField>> {
        let m = self.dim();
        let k = self.h.dim();
        let dim = self.algebra.dim();
        let mut s = vec![SymPoly::zero(); dim];
        for (c, &j) in self.complement.iter().enumerate() {
            s[j] = SymPoly::var(c);
        }
        let sd: Vec<Dual<SymPoly>> = s.iter().map(|x| Dual::constant(x.clone())).collect();
        let mut jcols = Vec::with_capacity(k);
        let mut nmat = vec![vec![SymPoly::zero(); k]; k];
        for c in 0..k {
            let hd: Vec<Dual<SymPoly>> =
                self.h.basis().column(c).iter().map(|&x| Dual::new(SymPoly::zero(), SymPoly::constant(x))).collect();
            let col: Vec<SymPoly> = self.algebra.bch_product(&sd, &hd).ok()?.into_iter().map(|d| d.eps).collect();
            let (ch, _) = self.split_generic(&col);
            for r in 0..k {
                let id = if r == c { SymPoly::one() } else { SymPoly::zero() };
                nmat[r][c] = (ch[r].clone() - id).cleaned();
            }
            jcols.push(col);
        }
        // (I + N)^{-1} = Σ (−N)^p, finite when N is nilpotent.
        let mut inv = identity_sym(k);
        let mut power = identity_sym(k);
        let mut nilpotent = k == 0;
        for p in 1..=(dim + 1) {
            power = mat_mul_sym(&power, &nmat);
            if power.iter().all(|r| r.iter().all(|x| x.is_zero())) {
                nilpotent = true;
                break;
            }
            let sign = if p % 2 == 1 { -1.0 } else { 1.0 };
            for r in 0..k {
                for c in 0..k {
                    inv[r][c] = (inv[r][c].clone() + power[r][c].scale(sign)).cleaned();
                }
            }
        }
        if !nilpotent {
            return None;
        }
        let mut fields = Vec::with_capacity(dim);
        for j in 0..dim {
            let ed: Vec<Dual<SymPoly>> = (0..dim)
                .map(|i| Dual::new(SymPoly::zero(), if i == j { SymPoly::one() } else { SymPoly::zero() }))
                .collect();
            let a: Vec<SymPoly> = self.algebra.bch_product(&ed, &sd).ok()?.into_iter().map(|d| d.eps).collect();
            let (ah, _) = self.split_generic(&a);
            let mut total = a;
            for r in 0..k {
                let mut eta = SymPoly::zero();
                for (c, ahc) in ah.iter().enumerate() {
                    eta = eta - inv[r][c].clone() * ahc.clone();
                }
                for (t, x) in total.iter_mut().zip(&jcols[r]) {
                    *t = t.clone() + eta.clone() * x.clone();
                }
            }
            let (_, sc) = self.split_generic(&total);
            fields.push(FloatField::new(sc.into_iter().map(|p| p.cleaned().to_float(m)).collect()));
        }
        Some(fields)
    }
}

fn identity_sym(k: usize) -> Vec<Vec<SymPoly>> {
    (0..k).map(|r| (0..k).map(|c| if r == c { SymPoly::one() } else { SymPoly::zero() }).collect()).collect()
}

fn mat_mul_sym(a: &[Vec<SymPoly>], b: &[Vec<SymPoly>]) -> Vec<Vec<SymPoly>> {
    let k = a.len();
    (0..k)
        .map(|r| {
            (0..k)
                .map(|c| (0..k).fold(SymPoly::zero(), |acc, i| acc + a[r][i].clone() * b[i][c].clone()).cleaned())
                .collect()
        })
        .collect()
}

/// Sparse polynomial with `f64` coefficients; exponent vectors carry no trailing zeros.
#[derive(Clone, Debug, PartialEq, Default)]
struct SymPoly {
    terms: BTreeMap<Vec<u32>, f64>,
}

impl SymPoly {
    fn var(i: usize) -> Self {
        let mut e = vec![0; i + 1];
        e[i] = 1;
        SymPoly { terms: BTreeMap::from([(e, 1.0)]) }
    }

    fn constant(c: f64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(Vec::new(), c);
        }
        SymPoly { terms }
    }

    fn scale(&self, s: f64) -> Self {
        SymPoly { terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect() }
    }

    fn cleaned(mut self) -> Self {
        self.terms.retain(|_, c| c.abs() > 1e-13);
        self
    }

    fn to_float(&self, nvars: usize) -> FloatPoly {
        FloatPoly::from_terms(
            self.terms
                .iter()
                .map(|(e, c)| {
                    let mut full = e.clone();
                    full.resize(nvars, 0);
                    (full, *c)
                })
                .collect(),
        )
    }
}

fn trim(mut e: Vec<u32>) -> Vec<u32> {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

impl Add for SymPoly {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for (e, c) in o.terms {
            *self.terms.entry(e).or_insert(0.0) += c;
        }
        self.terms.retain(|_, c| *c != 0.0);
        self
    }
}

impl Neg for SymPoly {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Sub for SymPoly {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Mul for SymPoly {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut terms: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let n = ea.len().max(eb.len());
                let e: Vec<u32> =
                    (0..n).map(|i| ea.get(i).copied().unwrap_or(0) + eb.get(i).copied().unwrap_or(0)).collect();
                *terms.entry(trim(e)).or_insert(0.0) += ca * cb;
            }
        }
        terms.retain(|_, c| *c != 0.0);
        SymPoly { terms }
    }
}

impl Zero for SymPoly {
    fn zero() -> Self {
        SymPoly::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for SymPoly {
    fn one() -> Self {
        SymPoly::constant(1.0)
    }
}

impl Scalar for SymPoly {
    fn from_const(c: &Const) -> Self {
        SymPoly::constant(c.float)
    }
    fn from_f64(x: f64) -> Self {
        SymPoly::constant(x)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RxReport {
    /// `ranks[i-1]` is the rank of the evaluations of all basis fields of weight `≤ i`.
    pub ranks: Vec<usize>,
    #[serde(skip)]
    pub subspace: Subspace,
    pub basis: Vec<Vec<f64>>,
    /// Gap to the graded limit of `ker ♮_{x,1}`.
    pub agreement_gap: f64,
}

/// `♮⁻¹(𝔯_x)`, assembled weight by weight from the evaluation filtration at `x`.
pub fn compute_rx(nm: &NaturalMap, x: &[f64]) -> Result<RxReport> {
    let alg = nm.algebra();
    let n = nm.dim_m();
    let dim = alg.dim();
    let w = alg.weights();
    let ev = nm.natural_at(x, 1.0)?;
    let col = |j: usize| -> Vec<f64> { ev.column(j).iter().cloned().collect() };
    let mut ranks = Vec::new();
    let mut kernel_vectors: Vec<Vec<f64>> = Vec::new();
    let mut lower: Vec<Vec<f64>> = Vec::new();
    for i in 1..=alg.depth() {
        let block: Vec<usize> = (0..dim).filter(|&j| w[j] == i).collect();
        let e = Subspace::span(n, &lower, 1e-9)?;
        if !block.is_empty() {
            let proj = DMatrix::from_fn(n, block.len(), |r, c| {
                let v = col(block[c]);
                let pv = e.project(&v);
                v[r] - pv[r]
            });
            let ker = kernel(&proj, 1e-9);
            for kv in ker.basis_vectors() {
                let mut full = vec![0.0; dim];
                for (c, &j) in block.iter().enumerate() {
                    full[j] = kv[c];
                }
                kernel_vectors.push(full);
            }
            lower.extend(block.iter().map(|&j| col(j)));
        }
        ranks.push(rank(&lower, n));
    }
    let last = *ranks.last().unwrap_or(&0);
    if last < n {
        return Err(Error::HormanderViolated { point: x.to_vec(), rank: last, dim: n });
    }
    let subspace = Subspace::span(dim, &kernel_vectors, 1e-9)?;
    let reference = graded_limit_fixed(&kernel(&ev, 1e-9), w)?;
    let agreement_gap = gap_distance(&subspace, &reference)?;
    if agreement_gap > 1e-6 {
        return Err(Error::Internal(format!("distinguished subspace disagrees with the graded limit (gap {agreement_gap:e})")));
    }
    Ok(RxReport { ranks, basis: subspace.basis_vectors(), subspace, agreement_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vfields::{build_natural_map, SubRiemannianStructure};

    fn grushin_alg() -> GradedLieAlgebra {
        GradedLieAlgebra::free_nilpotent(2, &[1, 1], 2).unwrap()
    }

    fn span(alg: &GradedLieAlgebra, vs: &[Vec<f64>]) -> Subspace {
        Subspace::span(alg.dim(), vs, 1e-9).unwrap()
    }

    #[test]
    fn grushin_origin_cone() {
        let alg = grushin_alg();
        let c = build_cone(&alg, &span(&alg, &[vec![0.0, 1.0, 0.0]])).unwrap();
        assert_eq!(c.complement(), &[0, 2]);
        let p = c.canonical_rep(&[1.0, 1.0, 0.0]).unwrap();
        assert!((p.coords[0] - 1.0).abs() < 1e-12 && (p.coords[1] - 0.5).abs() < 1e-12);
        let q = ConePoint::new(vec![0.7, -0.3]);
        let f = c.horizontal_frame(&q).unwrap();
        assert!((f[0][0] - 1.0).abs() < 1e-12 && f[0][1].abs() < 1e-12);
        assert!(f[1][0].abs() < 1e-12 && (f[1][1] - 0.7).abs() < 1e-12);
        let num = c.infinitesimal_action(&alg.basis(1), &q).unwrap();
        assert!((num[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn central_h_gives_flat_cone() {
        let alg = grushin_alg();
        let c = build_cone(&alg, &span(&alg, &[vec![0.0, 0.0, 1.0]])).unwrap();
        let f = c.horizontal_frame(&ConePoint::new(vec![0.4, 2.0])).unwrap();
        assert_eq!(f, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn non_subalgebra_rejected() {
        let alg = GradedLieAlgebra::heisenberg();
        let r = build_cone(&alg, &span(&alg, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]));
        assert!(matches!(r, Err(Error::NotSubalgebra { .. })));
    }

    #[test]
    fn line_cone_frame_matches_numeric() {
        let alg = grushin_alg();
        let lam = 1.5;
        let c = build_cone(&alg, &span(&alg, &[vec![0.0, 1.0, -lam]])).unwrap();
        assert!(c.action_fields().is_some());
        let p = ConePoint::new(vec![-2.0 * lam, 0.3]);
        let f = c.horizontal_frame(&p).unwrap();
        for (j, fj) in f.iter().enumerate() {
            let num = c.infinitesimal_action(&alg.basis(j), &p).unwrap();
            for (a, b) in fj.iter().zip(&num) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        assert!((f[1][1] - (p.coords[0] + lam)).abs() < 1e-12);
    }

    #[test]
    fn rx_examples() {
        let nm = build_natural_map(&SubRiemannianStructure::grushin(2)).unwrap();
        let r = compute_rx(&nm, &[0.0, 0.0]).unwrap();
        assert_eq!(r.ranks, vec![1, 2]);
        assert!(r.subspace.contains(&[0.0, 1.0, 0.0], 1e-12) && r.subspace.dim() == 1);
        let r = compute_rx(&nm, &[1.0, 0.0]).unwrap();
        assert_eq!(r.ranks, vec![2, 2]);
        assert!(r.subspace.contains(&[0.0, 0.0, 1.0], 1e-12) && r.subspace.dim() == 1);
    }
}
