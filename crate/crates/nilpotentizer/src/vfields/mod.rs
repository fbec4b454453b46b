//! Polynomial vector fields, their flows, and the maps ♮ from a free nilpotent
//! algebra into vector fields.

mod flow;
mod poly;

pub use flow::{integrate, FlowOptions};
pub use poly::{FloatPoly, Polynomial};

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::liealg::{BasisOrigin, GradedLieAlgebra};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    components: Vec<Polynomial>,
}

impl VectorField {
    pub fn new(components: Vec<Polynomial>) -> Result<Self> {
        let n = components.len();
        if components.iter().any(|p| p.nvars() != n) {
            return Err(Error::DimensionMismatch(format!("components of a field on R^{n} must use {n} variables")));
        }
        Ok(VectorField { components })
    }

    pub fn parse(components: &[&str]) -> Result<Self> {
        let n = components.len();
        let ps = components.iter().map(|c| Polynomial::parse(c, n)).collect::<Result<Vec<_>>>()?;
        Self::new(ps)
    }

    pub fn zero(n: usize) -> Self {
        VectorField { components: vec![Polynomial::zero(n); n] }
    }

    /// Coordinate field `∂/∂x_i`.
    pub fn coordinate(n: usize, i: usize) -> Self {
        let mut f = Self::zero(n);
        f.components[i] = Polynomial::from_int(n, 1);
        f
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|p| p.is_zero())
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.dim() != o.dim() {
            return Err(Error::DimensionMismatch(format!("fields on R^{} and R^{}", self.dim(), o.dim())));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let components = self.components.iter().zip(&o.components).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
        Ok(VectorField { components })
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        VectorField { components: self.components.iter().map(|p| p.scale(s)).collect() }
    }

    /// `(X·∇)f`.
    fn apply(&self, f: &Polynomial) -> Result<Polynomial> {
        let mut acc = Polynomial::zero(self.dim());
        for (j, xj) in self.components.iter().enumerate() {
            if xj.is_zero() {
                continue;
            }
            acc = acc.add(&xj.mul(&f.derivative(j))?)?;
        }
        Ok(acc)
    }

    /// `[X,Y] = (X·∇)Y − (Y·∇)X`.
    pub fn lie_bracket(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let components = (0..self.dim())
            .map(|i| self.apply(&o.components[i])?.sub(&o.apply(&self.components[i])?))
            .collect::<Result<_>>()?;
        Ok(VectorField { components })
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval(x)).collect()
    }

    pub fn compile(&self) -> FloatField {
        FloatField::new(self.components.iter().map(FloatPoly::from_exact).collect())
    }

    /// Time-one flow.
    pub fn flow(&self, x: &[f64], opts: &FlowOptions) -> Result<Vec<f64>> {
        self.compile().flow(x, opts)
    }
}

impl std::fmt::Display for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.components.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Floating vector field with precomputed Jacobian entries.
#[derive(Clone, Debug)]
pub struct FloatField {
    components: Vec<FloatPoly>,
    /// `jacobian[i][j] = ∂X_i/∂x_j`.
    jacobian: Vec<Vec<FloatPoly>>,
}

impl FloatField {
    pub fn new(components: Vec<FloatPoly>) -> Self {
        let n = components.len();
        let jacobian = components.iter().map(|p| (0..n).map(|j| p.derivative(j)).collect()).collect();
        FloatField { components, jacobian }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[FloatPoly] {
        &self.components
    }

    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.components) {
            *o = p.eval(x);
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        out
    }

    /// Row-major Jacobian into `out` (length n²).
    #[inline]
    pub fn jacobian_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.jacobian[i][j].eval(x);
            }
        }
    }

    pub fn combine(parts: &[(f64, &FloatField)]) -> Self {
        let n = parts.first().map(|p| p.1.dim()).unwrap_or(0);
        let comps = (0..n)
            .map(|i| {
                let ps: Vec<(f64, &FloatPoly)> = parts.iter().map(|(c, f)| (*c, &f.components[i])).collect();
                FloatPoly::combine(&ps)
            })
            .collect();
        Self::new(comps)
    }

    pub fn flow(&self, x: &[f64], opts: &FlowOptions) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!("point in R^{} for a field on R^{}", x.len(), self.dim())));
        }
        integrate(|y, d| self.eval_into(y, d), x, 1.0, opts)
    }
}

/// Weighted polynomial generators on `R^n` with depth `N`.
#[derive(Clone, Debug)]
pub struct SubRiemannianStructure {
    dim_m: usize,
    generators: Vec<(VectorField, u32)>,
    depth: u32,
    gram: DMatrix<f64>,
}

impl SubRiemannianStructure {
    pub fn new(generators: Vec<(VectorField, u32)>, depth: u32) -> Result<Self> {
        let k1 = generators.iter().filter(|g| g.1 == 1).count();
        Self::with_gram(generators, depth, DMatrix::identity(k1, k1))
    }

    /// `gram` is a positive-definite form on the span of the weight-1 generators.
    pub fn with_gram(generators: Vec<(VectorField, u32)>, depth: u32, gram: DMatrix<f64>) -> Result<Self> {
        let n = generators.first().map(|g| g.0.dim()).ok_or_else(|| Error::InvalidArgument("no generators".into()))?;
        if n == 0 {
            return Err(Error::InvalidArgument("ambient dimension must be positive".into()));
        }
        for (i, (f, w)) in generators.iter().enumerate() {
            if f.dim() != n {
                return Err(Error::DimensionMismatch(format!("generator {i} lives on R^{}", f.dim())));
            }
            if *w == 0 || *w > depth {
                return Err(Error::InvalidArgument(format!("generator {i} has weight {w} outside [1, {depth}]")));
            }
        }
        let k1 = generators.iter().filter(|g| g.1 == 1).count();
        if gram.nrows() != k1 || gram.ncols() != k1 {
            return Err(Error::DimensionMismatch(format!("Gram matrix must be {k1}x{k1}")));
        }
        if k1 > 0 {
            let sym = (&gram - gram.transpose()).abs().max();
            if sym > 1e-12 * gram.abs().max().max(1.0) || gram.clone().cholesky().is_none() {
                return Err(Error::InvalidArgument("Gram matrix must be symmetric positive definite".into()));
            }
        }
        Ok(SubRiemannianStructure { dim_m: n, generators, depth, gram })
    }

    pub fn dim_m(&self) -> usize {
        self.dim_m
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn generators(&self) -> &[(VectorField, u32)] {
        &self.generators
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Generalized Grushin plane `∂x, x^{N-1}∂y` of depth `N`.
    pub fn grushin(n: u32) -> Self {
        let x = Polynomial::var(2, 0);
        let g2 = VectorField::new(vec![Polynomial::zero(2), x.pow(n - 1)]).expect("2 components");
        Self::new(vec![(VectorField::coordinate(2, 0), 1), (g2, 1)], n).expect("valid structure")
    }

    /// `∂x, ∂y + x∂z` of depth 2.
    pub fn heisenberg() -> Self {
        let f = VectorField::parse(&["0", "1", "x0"]).expect("valid field");
        Self::new(vec![(VectorField::coordinate(3, 0), 1), (f, 1)], 2).expect("valid structure")
    }

    /// `∂x, ∂y + x²∂z` of depth 3.
    pub fn martinet() -> Self {
        let f = VectorField::parse(&["0", "1", "x0^2"]).expect("valid field");
        Self::new(vec![(VectorField::coordinate(3, 0), 1), (f, 1)], 3).expect("valid structure")
    }

    /// Coordinate fields on `R^n`, depth 1.
    pub fn euclidean(n: usize) -> Self {
        Self::new((0..n).map(|i| (VectorField::coordinate(n, i), 1)).collect(), 1).expect("valid structure")
    }
}

#[derive(Clone, Debug)]
pub struct NaturalMap {
    algebra: GradedLieAlgebra,
    realization: Vec<VectorField>,
    compiled: Vec<FloatField>,
    dim_m: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HormanderReport {
    pub ranks: Vec<(Vec<f64>, usize)>,
    pub deficient: Vec<usize>,
    pub dim_m: usize,
}

impl HormanderReport {
    pub fn ok(&self) -> bool {
        self.deficient.is_empty()
    }
}

/// Free nilpotent algebra on the generators plus the realization ♮ of its basis.
pub fn build_natural_map(s: &SubRiemannianStructure) -> Result<NaturalMap> {
    let weights: Vec<u32> = s.generators.iter().map(|g| g.1).collect();
    let algebra = GradedLieAlgebra::free_nilpotent(weights.len(), &weights, s.depth)?;
    let mut realization: Vec<VectorField> = Vec::with_capacity(algebra.dim());
    for origin in algebra.origins() {
        let f = match origin {
            BasisOrigin::Generator(i) => s.generators[*i].0.clone(),
            BasisOrigin::Bracket(a, b) => realization[*a].lie_bracket(&realization[*b])?,
            BasisOrigin::Opaque => return Err(Error::Internal("free algebra without bracket structure".into())),
        };
        realization.push(f);
    }
    let dim = algebra.dim();
    let w = algebra.weights();
    for i in 0..dim {
        for j in (i + 1)..dim {
            if w[i] + w[j] > s.depth {
                continue;
            }
            let mut lhs = VectorField::zero(s.dim_m);
            for (k, rk) in realization.iter().enumerate() {
                let c = algebra.constant(i, j, k);
                if !c.is_zero() {
                    lhs = lhs.add(&rk.scale(&c))?;
                }
            }
            if lhs != realization[i].lie_bracket(&realization[j])? {
                return Err(Error::Internal(format!("bracket compatibility fails for basis pair ({i},{j})")));
            }
        }
    }
    let compiled = realization.iter().map(|f| f.compile()).collect();
    Ok(NaturalMap { algebra, realization, compiled, dim_m: s.dim_m })
}

impl NaturalMap {
    pub fn algebra(&self) -> &GradedLieAlgebra {
        &self.algebra
    }

    pub fn realization(&self) -> &[VectorField] {
        &self.realization
    }

    pub fn dim_m(&self) -> usize {
        self.dim_m
    }

    /// Floating copies of `♮(e_j)`.
    pub fn compiled(&self) -> &[FloatField] {
        &self.compiled
    }

    /// `♮_t(v) = Σ t^{w_j} v_j ♮(e_j)`, exactly.
    pub fn natural_t(&self, v: &[BigRational], t: &BigRational) -> Result<VectorField> {
        if v.len() != self.algebra.dim() {
            return Err(Error::AlgebraMismatch { expected: self.algebra.dim(), got: v.len() });
        }
        let mut out = VectorField::zero(self.dim_m);
        for (j, vj) in v.iter().enumerate() {
            if vj.is_zero() {
                continue;
            }
            let mut tw = BigRational::one();
            for _ in 0..self.algebra.weights()[j] {
                tw *= t;
            }
            out = out.add(&self.realization[j].scale(&(vj * tw)))?;
        }
        Ok(out)
    }

    /// Floating version of [`NaturalMap::natural_t`].
    pub fn natural_field(&self, v: &[f64], t: f64) -> Result<FloatField> {
        if v.len() != self.algebra.dim() {
            return Err(Error::AlgebraMismatch { expected: self.algebra.dim(), got: v.len() });
        }
        let parts: Vec<(f64, &FloatField)> = v
            .iter()
            .zip(self.algebra.weights())
            .zip(&self.compiled)
            .map(|((vj, &w), f)| (vj * t.powi(w as i32), f))
            .collect();
        Ok(FloatField::combine(&parts))
    }

    /// Column `j` is `t^{w_j} ♮(e_j)(x)`.
    pub fn natural_at(&self, x: &[f64], t: f64) -> Result<DMatrix<f64>> {
        if x.len() != self.dim_m {
            return Err(Error::DimensionMismatch(format!("point in R^{} for R^{}", x.len(), self.dim_m)));
        }
        let dim = self.algebra.dim();
        let mut m = DMatrix::zeros(self.dim_m, dim);
        for j in 0..dim {
            let s = t.powi(self.algebra.weights()[j] as i32);
            let col = self.compiled[j].eval(x);
            for i in 0..self.dim_m {
                m[(i, j)] = s * col[i];
            }
        }
        Ok(m)
    }

    /// `exp(♮_t v)·x`.
    pub fn flow(&self, v: &[f64], t: f64, x: &[f64], opts: &FlowOptions) -> Result<Vec<f64>> {
        self.natural_field(v, t)?.flow(x, opts)
    }
}

fn numeric_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Rank of `♮_{x,1}` at each point.
pub fn hormander_check(s: &SubRiemannianStructure, points: &[Vec<f64>]) -> Result<HormanderReport> {
    let nm = build_natural_map(s)?;
    let mut ranks = Vec::new();
    let mut deficient = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let r = numeric_rank(&nm.natural_at(p, 1.0)?, 1e-9);
        if r < s.dim_m {
            deficient.push(i);
        }
        ranks.push((p.clone(), r));
    }
    Ok(HormanderReport { ranks, deficient, dim_m: s.dim_m })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_examples() {
        let dx = VectorField::coordinate(2, 0);
        let xdy = VectorField::parse(&["0", "x0"]).unwrap();
        assert_eq!(dx.lie_bracket(&xdy).unwrap(), VectorField::coordinate(2, 1));
        assert!(dx.lie_bracket(&VectorField::coordinate(2, 1)).unwrap().is_zero());
    }

    #[test]
    fn grushin_realization() {
        let nm = build_natural_map(&SubRiemannianStructure::grushin(2)).unwrap();
        let r = nm.realization();
        assert_eq!(r[2], VectorField::coordinate(2, 1));
        let m = nm.natural_at(&[0.5, 3.0], 2.0).unwrap();
        assert_eq!(m.as_slice(), &[2.0, 0.0, 0.0, 1.0, 0.0, 4.0]);
    }

    #[test]
    fn natural_t_scaling() {
        let nm = build_natural_map(&SubRiemannianStructure::grushin(2)).unwrap();
        let e2: Vec<BigRational> = nm.algebra().basis(1);
        let two = BigRational::from_integer(2.into());
        assert_eq!(nm.natural_t(&e2, &two).unwrap(), VectorField::parse(&["0", "2*x0"]).unwrap());
        assert!(nm.natural_t(&e2, &BigRational::zero()).unwrap().is_zero());
    }

    #[test]
    fn single_field_not_hormander() {
        let s = SubRiemannianStructure::new(vec![(VectorField::coordinate(2, 0), 1)], 3).unwrap();
        let r = hormander_check(&s, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(r.ranks[0].1, 1);
        assert!(!r.ok());
    }

    #[test]
    fn rejects_bad_gram() {
        let g = vec![(VectorField::coordinate(2, 0), 1), (VectorField::coordinate(2, 1), 1)];
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(SubRiemannianStructure::with_gram(g, 1, bad).is_err());
    }
}
