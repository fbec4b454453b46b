//! Graded nilpotent Lie algebras.
//!
//! Elements are coefficient vectors in a fixed basis; group elements are the
//! same vectors under the truncated Baker-Campbell-Hausdorff product, with the
//! right-invariant sign convention
//! `u·v = u + v − ½[u,v] + 1/12[u,[u,v]] + …`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::Subspace;
use crate::scalar::{Const, Scalar};

pub type LieVector<T = f64> = Vec<T>;

/// Word in the free associative algebra, keyed by letter indices.
type Word = Vec<u8>;
type AssocPoly = BTreeMap<Word, BigRational>;

#[derive(Clone, Debug)]
struct BchTerm {
    word: Word,
    coef: Const,
}

/// How a basis element arises in a free nilpotent algebra.
#[derive(Clone, Debug, PartialEq)]
pub enum BasisOrigin {
    Generator(usize),
    /// `[e_a, e_b]`, the standard bracketing of a Lyndon word.
    Bracket(usize, usize),
    /// Supplied by the user with no bracket structure.
    Opaque,
}

#[derive(Clone, Debug)]
pub struct GradedLieAlgebra {
    weights: Vec<u32>,
    origins: Vec<BasisOrigin>,
    depth: u32,
    labels: Vec<String>,
    /// `table[i * dim + j]` lists `(k, c_ij^k)`.
    table: Vec<Vec<(usize, Const)>>,
    bch_terms: Vec<BchTerm>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Antisymmetry { i: usize, j: usize, k: usize },
    Grading { i: usize, j: usize, k: usize },
    Jacobi { i: usize, j: usize, k: usize, residual: f64 },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubalgebraReport {
    pub residual: f64,
    pub is_subalgebra: bool,
}

/// JSON form `{dim, weights, depth, constants: [[i,j,k,num,den]], labels}` (0-based indices).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AlgebraDoc {
    pub dim: usize,
    pub weights: Vec<u32>,
    pub depth: u32,
    pub constants: Vec<(usize, usize, usize, i64, i64)>,
    #[serde(default)]
    pub labels: Vec<String>,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn assoc_add_scaled(target: &mut AssocPoly, src: &AssocPoly, scale: &BigRational) {
    for (w, c) in src {
        let entry = target.entry(w.clone()).or_insert_with(BigRational::zero);
        *entry += c * scale;
        if entry.is_zero() {
            target.remove(w);
        }
    }
}

fn assoc_mul(a: &AssocPoly, b: &AssocPoly, max_len: usize) -> AssocPoly {
    let mut out = AssocPoly::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            if wa.len() + wb.len() > max_len {
                continue;
            }
            let mut w = wa.clone();
            w.extend_from_slice(wb);
            let entry = out.entry(w.clone()).or_insert_with(BigRational::zero);
            *entry += ca * cb;
            if entry.is_zero() {
                out.remove(&w);
            }
        }
    }
    out
}

fn assoc_commutator(a: &AssocPoly, b: &AssocPoly) -> AssocPoly {
    let mut out = assoc_mul(a, b, usize::MAX);
    assoc_add_scaled(&mut out, &assoc_mul(b, a, usize::MAX), &-BigRational::one());
    out
}

/// Dynkin-weighted coefficients of `log(e^X e^Y)` up to word length `max_len`
/// (letter 0 = X, letter 1 = Y); each coefficient is already divided by the word length.
fn bch_terms(max_len: usize) -> Vec<BchTerm> {
    let mut z = AssocPoly::new();
    for p in 0..=max_len {
        for q in 0..=(max_len - p) {
            if p + q == 0 {
                continue;
            }
            let mut w = vec![0u8; p];
            w.extend(std::iter::repeat_n(1u8, q));
            z.insert(w, BigRational::new(BigInt::one(), factorial(p) * factorial(q)));
        }
    }
    let mut log = AssocPoly::new();
    let mut power = z.clone();
    for k in 1..=max_len {
        let sign = if k % 2 == 1 { 1 } else { -1 };
        assoc_add_scaled(&mut log, &power, &rat(sign, k as i64));
        power = assoc_mul(&power, &z, max_len);
    }
    log.into_iter()
        .map(|(word, c)| {
            let n = word.len() as i64;
            BchTerm { word, coef: Const::new(c / rat(n, 1)) }
        })
        .collect()
}

/// All Lyndon words over `alphabet` letters of length at most `max_len`, in lexicographic order.
fn lyndon_words(alphabet: usize, max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    if alphabet == 0 || max_len == 0 {
        return out;
    }
    let top = (alphabet - 1) as u8;
    let mut w: Word = vec![0];
    loop {
        out.push(w.clone());
        let m = w.len();
        while w.len() < max_len {
            w.push(w[w.len() - m]);
        }
        while w.last() == Some(&top) {
            w.pop();
        }
        match w.last_mut() {
            Some(last) => *last += 1,
            None => break,
        }
    }
    out
}

fn is_lyndon(w: &[u8]) -> bool {
    (1..w.len()).all(|i| w < &w[i..])
}

/// Standard factorization `w = uv` with `v` the longest proper Lyndon suffix.
fn standard_split(w: &[u8]) -> usize {
    (1..w.len()).find(|&i| is_lyndon(&w[i..])).expect("Lyndon word of length >= 2")
}

fn bracketing_label(w: &[u8]) -> String {
    if w.len() == 1 {
        return format!("x{}", w[0] + 1);
    }
    let s = standard_split(w);
    format!("[{},{}]", bracketing_label(&w[..s]), bracketing_label(&w[s..]))
}

fn lyndon_expansion(w: &[u8], memo: &mut HashMap<Word, AssocPoly>) -> AssocPoly {
    if let Some(p) = memo.get(w) {
        return p.clone();
    }
    let p = if w.len() == 1 {
        let mut p = AssocPoly::new();
        p.insert(w.to_vec(), BigRational::one());
        p
    } else {
        let s = standard_split(w);
        let a = lyndon_expansion(&w[..s], memo);
        let b = lyndon_expansion(&w[s..], memo);
        assoc_commutator(&a, &b)
    };
    memo.insert(w.to_vec(), p.clone());
    p
}

fn add_into<T: Scalar>(acc: &mut [T], v: &[T]) {
    for (a, b) in acc.iter_mut().zip(v) {
        if !b.is_zero() {
            *a = a.clone() + b.clone();
        }
    }
}

fn scaled<T: Scalar>(v: &[T], s: &T) -> Vec<T> {
    v.iter().map(|x| x.clone() * s.clone()).collect()
}

pub fn negate<T: Scalar>(v: &[T]) -> Vec<T> {
    v.iter().map(|x| -x.clone()).collect()
}

pub fn add<T: Scalar>(u: &[T], v: &[T]) -> Vec<T> {
    u.iter().zip(v).map(|(a, b)| a.clone() + b.clone()).collect()
}

pub fn to_exact(v: &[i64]) -> Vec<BigRational> {
    v.iter().map(|&x| rat(x, 1)).collect()
}

impl GradedLieAlgebra {
    /// Builds an algebra from raw structure constants `(i, j, k, c_ij^k)`.
    ///
    /// The table is taken as given (no antisymmetrization); use
    /// [`GradedLieAlgebra::validate`] to check the Lie axioms.
    pub fn from_constants(
        weights: Vec<u32>,
        depth: u32,
        labels: Vec<String>,
        entries: &[(usize, usize, usize, BigRational)],
    ) -> Result<Self> {
        let dim = weights.len();
        if dim == 0 {
            return Err(Error::InvalidAlgebra("dimension must be positive".into()));
        }
        if weights.contains(&0) {
            return Err(Error::InvalidAlgebra("weights must be >= 1".into()));
        }
        let max_w = *weights.iter().max().unwrap();
        if depth < max_w {
            return Err(Error::InvalidAlgebra(format!("depth {depth} below maximal weight {max_w}")));
        }
        let labels = if labels.is_empty() {
            (1..=dim).map(|i| format!("e{i}")).collect()
        } else if labels.len() == dim {
            labels
        } else {
            return Err(Error::InvalidAlgebra(format!("{} labels for dimension {dim}", labels.len())));
        };
        let mut acc: BTreeMap<(usize, usize, usize), BigRational> = BTreeMap::new();
        for (i, j, k, c) in entries {
            if *i >= dim || *j >= dim || *k >= dim {
                return Err(Error::InvalidAlgebra(format!("index ({i},{j},{k}) out of range")));
            }
            *acc.entry((*i, *j, *k)).or_insert_with(BigRational::zero) += c;
        }
        let mut table = vec![Vec::new(); dim * dim];
        for ((i, j, k), c) in acc {
            if !c.is_zero() {
                table[i * dim + j].push((k, Const::new(c)));
            }
        }
        let min_w = *weights.iter().min().unwrap();
        let max_len = (depth / min_w).max(1) as usize;
        let origins = vec![BasisOrigin::Opaque; dim];
        Ok(GradedLieAlgebra { weights, origins, depth, labels, table, bch_terms: bch_terms(max_len) })
    }

    /// Free nilpotent algebra on `d` generators with the given weights, truncated at
    /// weighted degree `depth`. Basis: Lyndon words with their standard bracketing,
    /// generators first, then by length and lexicographically.
    pub fn free_nilpotent(d: usize, generator_weights: &[u32], depth: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("need at least one generator".into()));
        }
        if generator_weights.len() != d {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {d} generators",
                generator_weights.len()
            )));
        }
        if generator_weights.contains(&0) {
            return Err(Error::InvalidArgument("generator weights must be >= 1".into()));
        }
        let max_w = *generator_weights.iter().max().unwrap();
        if depth < max_w {
            return Err(Error::InvalidArgument(format!("depth {depth} below maximal weight {max_w}")));
        }
        if d > 255 {
            return Err(Error::InvalidArgument("at most 255 generators".into()));
        }
        let min_w = *generator_weights.iter().min().unwrap();
        let word_weight = |w: &[u8]| w.iter().map(|&l| generator_weights[l as usize]).sum::<u32>();
        let mut words: Vec<Word> = lyndon_words(d, (depth / min_w) as usize)
            .into_iter()
            .filter(|w| word_weight(w) <= depth)
            .collect();
        words.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        let dim = words.len();
        let index: HashMap<Word, usize> = words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let weights: Vec<u32> = words.iter().map(|w| word_weight(w)).collect();
        let labels: Vec<String> = words.iter().map(|w| bracketing_label(w)).collect();
        let mut memo = HashMap::new();
        let expansions: Vec<AssocPoly> = words.iter().map(|w| lyndon_expansion(w, &mut memo)).collect();

        let mut entries = Vec::new();
        for i in 0..dim {
            for j in (i + 1)..dim {
                if weights[i] + weights[j] > depth {
                    continue;
                }
                let mut q = assoc_commutator(&expansions[i], &expansions[j]);
                while let Some((w, c)) = q.iter().next().map(|(w, c)| (w.clone(), c.clone())) {
                    let k = *index.get(&w).ok_or_else(|| {
                        Error::Internal(format!("leading word {w:?} of a bracket is not a basis word"))
                    })?;
                    entries.push((i, j, k, c.clone()));
                    entries.push((j, i, k, -c.clone()));
                    assoc_add_scaled(&mut q, &expansions[k], &-c);
                }
            }
        }
        let mut alg = Self::from_constants(weights, depth, labels, &entries)?;
        alg.origins = words
            .iter()
            .map(|w| {
                if w.len() == 1 {
                    BasisOrigin::Generator(w[0] as usize)
                } else {
                    let s = standard_split(w);
                    BasisOrigin::Bracket(index[&w[..s]], index[&w[s..]])
                }
            })
            .collect();
        Ok(alg)
    }

    /// Three-dimensional Heisenberg algebra `e1, e2, e3 = [e1,e2]`.
    pub fn heisenberg() -> Self {
        Self::free_nilpotent(2, &[1, 1], 2).expect("valid parameters")
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn origins(&self) -> &[BasisOrigin] {
        &self.origins
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Basis indices of weight 1.
    pub fn weight1_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| self.weights[j] == 1).collect()
    }

    /// Structure constant `c_ij^k` as an exact rational.
    pub fn constant(&self, i: usize, j: usize, k: usize) -> BigRational {
        self.table[i * self.dim() + j]
            .iter()
            .find(|(kk, _)| *kk == k)
            .map(|(_, c)| c.exact.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn basis<T: Scalar>(&self, j: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim()];
        v[j] = T::one();
        v
    }

    pub fn zero<T: Scalar>(&self) -> Vec<T> {
        vec![T::zero(); self.dim()]
    }

    fn check<T>(&self, v: &[T]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::AlgebraMismatch { expected: self.dim(), got: v.len() });
        }
        Ok(())
    }

    pub(crate) fn bracket_raw<T: Scalar>(&self, u: &[T], v: &[T]) -> Vec<T> {
        let dim = self.dim();
        let mut out = vec![T::zero(); dim];
        for (i, ui) in u.iter().enumerate() {
            if ui.is_zero() {
                continue;
            }
            for (j, vj) in v.iter().enumerate() {
                if vj.is_zero() {
                    continue;
                }
                let entries = &self.table[i * dim + j];
                if entries.is_empty() {
                    continue;
                }
                let p = ui.clone() * vj.clone();
                for (k, c) in entries {
                    out[*k] = out[*k].clone() + p.clone() * T::from_const(c);
                }
            }
        }
        out
    }

    pub fn bracket<T: Scalar>(&self, u: &[T], v: &[T]) -> Result<Vec<T>> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.bracket_raw(u, v))
    }

    pub(crate) fn bch_raw<T: Scalar>(&self, u: &[T], v: &[T]) -> Vec<T> {
        // u·v equals log(e^v e^u) in the associative convention: X = v, Y = u.
        let letters = [v, u];
        let mut out = vec![T::zero(); self.dim()];
        let mut stack: Vec<(Vec<T>, bool)> = Vec::new();
        let mut prev: &[u8] = &[];
        for term in &self.bch_terms {
            let w = &term.word;
            let common = prev.iter().zip(w.iter()).take_while(|(a, b)| a == b).count();
            stack.truncate(common);
            for pos in stack.len()..w.len() {
                let letter = letters[w[pos] as usize];
                let next = if pos == 0 {
                    let z = letter.iter().all(|x| x.is_zero());
                    (letter.to_vec(), z)
                } else {
                    let (top, top_zero) = stack.last().unwrap();
                    if *top_zero {
                        (vec![T::zero(); self.dim()], true)
                    } else {
                        let b = self.bracket_raw(top, letter);
                        let z = b.iter().all(|x| x.is_zero());
                        (b, z)
                    }
                };
                stack.push(next);
            }
            let (val, zero) = stack.last().unwrap();
            if !zero {
                let c = T::from_const(&term.coef);
                add_into(&mut out, &scaled(val, &c));
            }
            prev = w;
        }
        out
    }

    /// Group product `u·v` (truncated BCH).
    pub fn bch_product<T: Scalar>(&self, u: &[T], v: &[T]) -> Result<Vec<T>> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.bch_raw(u, v))
    }

    fn dilate_with<T: Scalar>(&self, lambda: &T, v: &[T]) -> Vec<T> {
        let mut powers = vec![T::one()];
        for _ in 0..self.depth {
            let last = powers.last().unwrap().clone();
            powers.push(last * lambda.clone());
        }
        v.iter()
            .zip(&self.weights)
            .map(|(x, &w)| x.clone() * powers[w as usize].clone())
            .collect()
    }

    /// Graded dilation `α_λ`.
    pub fn dilate(&self, lambda: f64, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("dilation factor must be positive, got {lambda}")));
        }
        Ok(self.dilate_with(&lambda, v))
    }

    pub fn dilate_exact(&self, lambda: &BigRational, v: &[BigRational]) -> Result<Vec<BigRational>> {
        self.check(v)?;
        if !lambda.is_positive() {
            return Err(Error::InvalidArgument(format!("dilation factor must be positive, got {lambda}")));
        }
        Ok(self.dilate_with(lambda, v))
    }

    /// Group conjugation `g·v·g⁻¹`.
    ///
    /// With the right-invariant product this is `Σ_k (−ad_g)^k v / k!`.
    pub fn adjoint_conjugate<T: Scalar>(&self, g: &[T], v: &[T]) -> Result<Vec<T>> {
        self.check(g)?;
        self.check(v)?;
        let mut out = v.to_vec();
        let mut term = v.to_vec();
        for k in 1..=self.depth as i64 {
            term = negate(&self.bracket_raw(g, &term));
            if term.iter().all(|x| x.is_zero()) {
                break;
            }
            let inv = T::from_const(&Const::new(BigRational::new(BigInt::one(), factorial(k as usize))));
            add_into(&mut out, &scaled(&term, &inv));
        }
        Ok(out)
    }

    /// `max_i ‖v_i‖₂^{1/i}` over the weight blocks.
    pub fn quasi_norm(&self, v: &[f64]) -> Result<f64> {
        self.check(v)?;
        let mut sums = vec![0.0f64; self.depth as usize + 1];
        for (x, &w) in v.iter().zip(&self.weights) {
            sums[w as usize] += x * x;
        }
        Ok(sums
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, s)| s.sqrt().powf(1.0 / i as f64))
            .fold(0.0, f64::max))
    }

    /// Largest component of `[a,b]` orthogonal to `S` over orthonormal basis pairs of `S`.
    pub fn is_subalgebra(&self, s: &Subspace, tol: f64) -> Result<SubalgebraReport> {
        if s.ambient_dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "subspace lives in dimension {}, algebra has {}",
                s.ambient_dim(),
                self.dim()
            )));
        }
        let cols = s.basis_vectors();
        let mut residual = 0.0f64;
        for a in 0..cols.len() {
            for b in (a + 1)..cols.len() {
                let br = self.bracket_raw(&cols[a], &cols[b]);
                residual = residual.max(s.distance_to(&br));
            }
        }
        Ok(SubalgebraReport { residual, is_subalgebra: residual <= tol })
    }

    /// Checks antisymmetry, grading and the Jacobi identity exactly.
    pub fn validate(&self) -> ValidationReport {
        let dim = self.dim();
        let mut violations = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let c = self.constant(i, j, k);
                    if c != -self.constant(j, i, k) && (i < j || (i == j && !c.is_zero())) {
                        violations.push(Violation::Antisymmetry { i, j, k });
                    }
                    if !c.is_zero() && self.weights[k] != self.weights[i] + self.weights[j] {
                        violations.push(Violation::Grading { i, j, k });
                    }
                }
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                for k in (j + 1)..dim {
                    let ei: Vec<BigRational> = self.basis(i);
                    let ej: Vec<BigRational> = self.basis(j);
                    let ek: Vec<BigRational> = self.basis(k);
                    let t1 = self.bracket_raw(&ei, &self.bracket_raw(&ej, &ek));
                    let t2 = self.bracket_raw(&ej, &self.bracket_raw(&ek, &ei));
                    let t3 = self.bracket_raw(&ek, &self.bracket_raw(&ei, &ej));
                    let sum = add(&add(&t1, &t2), &t3);
                    let residual = sum.iter().map(|x| x.abs().to_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
                    if sum.iter().any(|x| !x.is_zero()) {
                        violations.push(Violation::Jacobi { i, j, k, residual });
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    pub fn to_doc(&self) -> Result<AlgebraDoc> {
        let dim = self.dim();
        let mut constants = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                for (k, c) in &self.table[i * dim + j] {
                    let num = c.exact.numer().to_i64();
                    let den = c.exact.denom().to_i64();
                    match (num, den) {
                        (Some(n), Some(d)) => constants.push((i, j, *k, n, d)),
                        _ => return Err(Error::InvalidAlgebra(format!("constant {} exceeds 64 bits", c.exact))),
                    }
                }
            }
        }
        Ok(AlgebraDoc {
            dim,
            weights: self.weights.clone(),
            depth: self.depth,
            constants,
            labels: self.labels.clone(),
        })
    }

    /// Loads a document; for an entry `(i,j,k)` whose partner `(j,i,k)` is absent the
    /// antisymmetric partner is filled in. Explicitly inconsistent entries are kept.
    pub fn from_doc(doc: &AlgebraDoc) -> Result<Self> {
        if doc.weights.len() != doc.dim {
            return Err(Error::InvalidAlgebra(format!("{} weights for dimension {}", doc.weights.len(), doc.dim)));
        }
        let mut present = std::collections::HashSet::new();
        let mut entries = Vec::new();
        for &(i, j, k, n, d) in &doc.constants {
            if d == 0 {
                return Err(Error::InvalidAlgebra(format!("zero denominator at ({i},{j},{k})")));
            }
            present.insert((i, j, k));
            entries.push((i, j, k, rat(n, d)));
        }
        for &(i, j, k, n, d) in &doc.constants {
            if i != j && !present.contains(&(j, i, k)) {
                entries.push((j, i, k, -rat(n, d)));
            }
        }
        Self::from_constants(doc.weights.clone(), doc.depth, doc.labels.clone(), &entries)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_doc()?).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: AlgebraDoc = serde_json::from_str(text).map_err(|e| Error::InvalidAlgebra(e.to_string()))?;
        Self::from_doc(&doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        rat(n, d)
    }

    #[test]
    fn lyndon_words_small() {
        let words = lyndon_words(2, 3);
        assert_eq!(words, vec![vec![0], vec![0, 0, 1], vec![0, 1], vec![0, 1, 1], vec![1]]);
    }

    #[test]
    fn standard_bracketing_labels() {
        let a = GradedLieAlgebra::free_nilpotent(2, &[1, 1], 3).unwrap();
        assert_eq!(a.labels(), &["x1", "x2", "[x1,x2]", "[x1,[x1,x2]]", "[[x1,x2],x2]"]);
        assert_eq!(a.weights(), &[1, 1, 2, 3, 3]);
    }

    #[test]
    fn heisenberg_bracket_and_bch() {
        let h = GradedLieAlgebra::heisenberg();
        let e1 = h.basis::<BigRational>(0);
        let e2 = h.basis::<BigRational>(1);
        assert_eq!(h.bracket(&e1, &e2).unwrap(), vec![q(0, 1), q(0, 1), q(1, 1)]);
        assert_eq!(h.bch_product(&e1, &e2).unwrap(), vec![q(1, 1), q(1, 1), q(-1, 2)]);
    }

    #[test]
    fn step3_bracket_signs() {
        let a = GradedLieAlgebra::free_nilpotent(2, &[1, 1], 3).unwrap();
        // [x2, [x1,x2]] = -[[x1,x2],x2]
        assert_eq!(a.constant(1, 2, 4), q(-1, 1));
        assert_eq!(a.constant(0, 2, 3), q(1, 1));
    }

    #[test]
    fn bch_degree_three_coefficient() {
        // u·v = u + v − ½[u,v] + 1/12[u,[u,v]] − 1/12[v,[u,v]] in the free step-3 algebra.
        let a = GradedLieAlgebra::free_nilpotent(2, &[1, 1], 3).unwrap();
        let u = a.basis::<BigRational>(0);
        let v = a.basis::<BigRational>(1);
        let p = a.bch_product(&u, &v).unwrap();
        assert_eq!(p, vec![q(1, 1), q(1, 1), q(-1, 2), q(1, 12), q(1, 12)]);
    }

    #[test]
    fn weighted_generators() {
        let a = GradedLieAlgebra::free_nilpotent(2, &[1, 2], 4).unwrap();
        let w: Vec<u32> = a.weights().to_vec();
        // x1, x2, [x1,x2] (3), [x1,[x1,x2]] (4)
        assert_eq!(w, vec![1, 2, 3, 4]);
        assert!(a.validate().is_valid());
    }

    #[test]
    fn abelian_when_depth_one() {
        let a = GradedLieAlgebra::free_nilpotent(2, &[1, 1], 1).unwrap();
        assert_eq!(a.dim(), 2);
        let e = a.basis::<f64>(0);
        assert_eq!(a.bracket(&e, &a.basis(1)).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GradedLieAlgebra::free_nilpotent(0, &[], 2).is_err());
        assert!(GradedLieAlgebra::free_nilpotent(2, &[1, 3], 2).is_err());
    }

    #[test]
    fn mismatch_detected() {
        let h = GradedLieAlgebra::heisenberg();
        assert!(matches!(
            h.bracket(&[1.0, 0.0], &[0.0, 1.0, 0.0]),
            Err(Error::AlgebraMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn conjugation_heisenberg() {
        let h = GradedLieAlgebra::heisenberg();
        let e1 = h.basis::<BigRational>(0);
        let e2 = h.basis::<BigRational>(1);
        assert_eq!(h.adjoint_conjugate(&e1, &e2).unwrap(), vec![q(0, 1), q(1, 1), q(-1, 1)]);
    }

    #[test]
    fn quasi_norm_examples() {
        let h = GradedLieAlgebra::heisenberg();
        assert!((h.quasi_norm(&[3.0, 4.0, 0.0]).unwrap() - 5.0).abs() < 1e-15);
        assert!((h.quasi_norm(&[0.0, 0.0, 9.0]).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(h.quasi_norm(&[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn dilate_example() {
        let h = GradedLieAlgebra::heisenberg();
        assert_eq!(h.dilate(2.0, &[1.0, 0.0, 1.0]).unwrap(), vec![2.0, 0.0, 4.0]);
        assert!(h.dilate(0.0, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn grading_violation_flagged() {
        let a = GradedLieAlgebra::from_constants(
            vec![1, 1, 2],
            2,
            vec![],
            &[(0, 1, 0, q(1, 1)), (1, 0, 0, q(-1, 1))],
        )
        .unwrap();
        let r = a.validate();
        assert!(r.violations.contains(&Violation::Grading { i: 0, j: 1, k: 0 }));
    }

    #[test]
    fn json_roundtrip() {
        let a = GradedLieAlgebra::free_nilpotent(2, &[1, 1], 3).unwrap();
        let b = GradedLieAlgebra::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(a.to_doc().unwrap(), b.to_doc().unwrap());
    }

    #[test]
    fn json_fills_partner_entries() {
        let doc = AlgebraDoc {
            dim: 3,
            weights: vec![1, 1, 2],
            depth: 2,
            constants: vec![(0, 1, 2, 1, 1)],
            labels: vec![],
        };
        let a = GradedLieAlgebra::from_doc(&doc).unwrap();
        assert!(a.validate().is_valid());
        assert_eq!(a.constant(1, 0, 2), q(-1, 1));
    }
}
