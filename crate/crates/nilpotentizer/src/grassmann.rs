//! Subspaces of a graded algebra: kernels, graded dilations and their limits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liealg::GradedLieAlgebra;
use crate::vfields::NaturalMap;

pub const DEFAULT_RANK_TOL: f64 = 1e-9;
pub const DEFAULT_CAUCHY_TOL: f64 = 1e-7;
/// Gaps below this are indistinguishable from rounding and count as non-increasing.
const GAP_NOISE_FLOOR: f64 = 1e-12;

/// Linear subspace with an orthonormal basis stored column-wise.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: DMatrix<f64>,
    tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SubspaceDoc {
    pub ambient_dim: usize,
    pub tol: f64,
    /// Row-major: one row per basis vector.
    pub basis: Vec<Vec<f64>>,
}

fn full_svd_v(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    (svd.singular_values.iter().cloned().collect(), vt)
}

/// Left singular vectors padded to a square `U`.
fn full_svd_u(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    let padded = if n < m {
        let mut p = DMatrix::zeros(m, m);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(true, false);
    (svd.singular_values.iter().cloned().collect(), svd.u.expect("requested U"))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Modified Gram-Schmidt with one re-orthogonalization pass; drops vectors whose
/// remainder falls below `drop_tol` relative to their original norm.
fn orthonormalize(vectors: &[Vec<f64>], drop_tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let n0 = norm(v);
        if n0 == 0.0 || !n0.is_finite() {
            continue;
        }
        let mut w: Vec<f64> = v.iter().map(|x| x / n0).collect();
        for _ in 0..2 {
            for q in &out {
                let d: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= d * qi;
                }
            }
        }
        let n1 = norm(&w);
        if n1 > drop_tol {
            out.push(w.iter().map(|x| x / n1).collect());
        }
    }
    out
}

impl Subspace {
    /// Span of the given vectors (rank decided by SVD at `tol`·σ_max).
    pub fn span(ambient_dim: usize, vectors: &[Vec<f64>], tol: f64) -> Result<Self> {
        for v in vectors {
            if v.len() != ambient_dim {
                return Err(Error::DimensionMismatch(format!(
                    "vector of length {} in ambient dimension {ambient_dim}",
                    v.len()
                )));
            }
        }
        if vectors.is_empty() {
            return Ok(Self::zero(ambient_dim, tol));
        }
        let a = DMatrix::from_fn(ambient_dim, vectors.len(), |i, j| vectors[j][i]);
        let (sv, u) = full_svd_u(&a);
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let cols: Vec<usize> = (0..sv.len()).filter(|&i| smax > 0.0 && sv[i] > tol * smax).collect();
        let basis = DMatrix::from_fn(ambient_dim, cols.len(), |i, j| u[(i, cols[j])]);
        Ok(Subspace { basis, tol })
    }

    /// Wraps vectors assumed orthonormal; re-orthonormalizes defensively.
    pub fn from_orthonormal(ambient_dim: usize, vectors: &[Vec<f64>], tol: f64) -> Result<Self> {
        let q = orthonormalize(vectors, 1e-12);
        if q.len() != vectors.len() {
            return Err(Error::InvalidArgument("vectors are linearly dependent".into()));
        }
        Self::span(ambient_dim, &q, tol).map(|s| {
            let basis = DMatrix::from_fn(ambient_dim, q.len(), |i, j| q[j][i]);
            Subspace { basis, tol: s.tol }
        })
    }

    pub fn zero(ambient_dim: usize, tol: f64) -> Self {
        Subspace { basis: DMatrix::zeros(ambient_dim, 0), tol }
    }

    pub fn full(ambient_dim: usize, tol: f64) -> Self {
        Subspace { basis: DMatrix::identity(ambient_dim, ambient_dim), tol }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|j| self.basis.column(j).iter().cloned().collect()).collect()
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(v);
        let c = self.basis.transpose() * &x;
        (&self.basis * c).iter().cloned().collect()
    }

    /// Euclidean distance from `v` to the subspace.
    pub fn distance_to(&self, v: &[f64]) -> f64 {
        let p = self.project(v);
        v.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        self.distance_to(v) <= tol * norm(v).max(1.0)
    }

    pub fn to_doc(&self) -> SubspaceDoc {
        SubspaceDoc { ambient_dim: self.ambient_dim(), tol: self.tol, basis: self.basis_vectors() }
    }

    pub fn from_doc(doc: &SubspaceDoc) -> Result<Self> {
        Self::from_orthonormal(doc.ambient_dim, &doc.basis, doc.tol)
    }
}

/// Orthonormal kernel basis via SVD; singular values at most `tol`·σ_max count as zero.
pub fn kernel(a: &DMatrix<f64>, tol: f64) -> Subspace {
    let n = a.ncols();
    if n == 0 {
        return Subspace::zero(0, tol);
    }
    let (sv, vt) = full_svd_v(a);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let rows: Vec<usize> = (0..sv.len()).filter(|&i| smax == 0.0 || sv[i] <= tol * smax).collect();
    let basis = DMatrix::from_fn(n, rows.len(), |i, j| vt[(rows[j], i)]);
    Subspace { basis, tol }
}

/// Rotates an orthonormal family so that, weight by weight from the top, the
/// components in the current weight block are mutually orthogonal. Returns
/// `(leading weight, vector)` pairs; with `zero_below` set, block components of
/// vectors passed down to lower weights are cleared.
fn weight_echelon(vectors: Vec<Vec<f64>>, weights: &[u32], tol: f64, zero_below: bool) -> Vec<(u32, Vec<f64>)> {
    let max_w = weights.iter().cloned().max().unwrap_or(0);
    let mut remaining = vectors;
    let mut out = Vec::new();
    for w in (1..=max_w).rev() {
        if remaining.is_empty() {
            break;
        }
        let block: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] == w).collect();
        if block.is_empty() {
            continue;
        }
        let r = remaining.len();
        let m = DMatrix::from_fn(r, block.len(), |i, j| remaining[i][block[j]]);
        let (sv, u) = full_svd_u(&m);
        let rotated: Vec<Vec<f64>> = (0..r)
            .map(|a| {
                let mut v = vec![0.0; weights.len()];
                for (b, rv) in remaining.iter().enumerate() {
                    let c = u[(b, a)];
                    for (vi, x) in v.iter_mut().zip(rv) {
                        *vi += c * x;
                    }
                }
                v
            })
            .collect();
        let mut next = Vec::new();
        for (a, v) in rotated.into_iter().enumerate() {
            let s = sv.get(a).cloned().unwrap_or(0.0);
            if s > tol {
                out.push((w, v));
            } else {
                let mut v = v;
                if zero_below {
                    for &j in &block {
                        v[j] = 0.0;
                    }
                }
                next.push(v);
            }
        }
        remaining = next;
    }
    out
}

/// `α_λ S`: scales a weight-adapted basis by `λ^{w_j}` and re-orthonormalizes.
pub fn dilate_subspace(lambda: f64, s: &Subspace, weights: &[u32]) -> Result<Subspace> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("dilation factor must be positive, got {lambda}")));
    }
    if weights.len() != s.ambient_dim() {
        return Err(Error::DimensionMismatch("weights do not match ambient dimension".into()));
    }
    if s.dim() == 0 {
        return Ok(s.clone());
    }
    let groups = weight_echelon(s.basis_vectors(), weights, 1e-14, true);
    let lnl = lambda.ln();
    let scaled: Vec<Vec<f64>> = groups
        .iter()
        .map(|(lead, v)| {
            v.iter()
                .zip(weights)
                .map(|(x, &w)| x * ((w as f64 - *lead as f64) * lnl).exp())
                .collect()
        })
        .collect();
    let q = orthonormalize(&scaled, 1e-300);
    if q.len() != s.dim() {
        return Err(Error::Internal("dilation lost rank".into()));
    }
    let basis = DMatrix::from_fn(s.ambient_dim(), q.len(), |i, j| q[j][i]);
    Ok(Subspace { basis, tol: s.tol })
}

/// Sine of the largest principal angle.
pub fn gap_distance(a: &Subspace, b: &Subspace) -> Result<f64> {
    if a.ambient_dim() != b.ambient_dim() || a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "subspaces of dimensions {}/{} in {}/{}",
            a.dim(),
            b.dim(),
            a.ambient_dim(),
            b.ambient_dim()
        )));
    }
    if a.dim() == 0 || a.dim() == a.ambient_dim() {
        return Ok(0.0);
    }
    let proj = a.basis() * (a.basis().transpose() * b.basis());
    let resid = b.basis() - proj;
    let sv = resid.singular_values();
    Ok(sv.iter().cloned().fold(0.0, f64::max).min(1.0))
}

/// Limit of `α_{1/t} S` as `t → 0⁺`, spanned by the leading (highest-weight) parts
/// of a weight-echelonized basis.
pub fn graded_limit_fixed(s: &Subspace, weights: &[u32]) -> Result<Subspace> {
    if weights.len() != s.ambient_dim() {
        return Err(Error::DimensionMismatch("weights do not match ambient dimension".into()));
    }
    let groups = weight_echelon(s.basis_vectors(), weights, s.tol, true);
    let leads: Vec<Vec<f64>> = groups
        .into_iter()
        .map(|(lead, v)| v.iter().zip(weights).map(|(x, &w)| if w == lead { *x } else { 0.0 }).collect())
        .collect();
    let q = orthonormalize(&leads, 1e-14);
    if q.len() != s.dim() {
        return Err(Error::Internal("graded limit lost rank".into()));
    }
    let basis = DMatrix::from_fn(s.ambient_dim(), q.len(), |i, j| q[j][i]);
    Ok(Subspace { basis, tol: s.tol })
}

/// `g·S·g⁻¹`, the span of conjugated basis vectors.
pub fn conjugate_subspace(alg: &GradedLieAlgebra, g: &[f64], s: &Subspace) -> Result<Subspace> {
    let mut vs = Vec::new();
    for v in s.basis_vectors() {
        vs.push(alg.adjoint_conjugate(g, &v)?);
    }
    let q = orthonormalize(&vs, 1e-12);
    if q.len() != s.dim() {
        return Err(Error::Internal("conjugation lost rank".into()));
    }
    let basis = DMatrix::from_fn(s.ambient_dim(), q.len(), |i, j| q[j][i]);
    Ok(Subspace { basis, tol: s.tol })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Schedule {
    pub t0: f64,
    pub rho: f64,
    pub steps: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { t0: 0.1, rho: 0.5, steps: 40 }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0) || !(self.rho > 0.0 && self.rho < 1.0) || self.steps == 0 {
            return Err(Error::InvalidArgument(format!(
                "schedule needs t0 > 0, 0 < rho < 1, steps >= 1 (got {:?})",
                self
            )));
        }
        Ok(())
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t0 * self.rho.powi(k as i32)
    }
}

/// Closed-form curve `t ↦ x(t)` with a geometric schedule.
#[derive(Clone, Debug)]
pub struct ApproachPath {
    pub name: String,
    pub components: Vec<String>,
    pub schedule: Schedule,
    nodes: Vec<evalexpr::Node>,
}

/// Turns integer literals into float literals so `1/2` divides in floating point.
fn floatify(expr: &str) -> String {
    let chars: Vec<char> = expr.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let prev_ident = i > 0 && (chars[i - 1].is_alphanumeric() || chars[i - 1] == '_');
        if c.is_ascii_digit() && !prev_ident {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let mut s = match lit.parse::<f64>() {
                Ok(x) => format!("{x}"),
                Err(_) => lit,
            };
            if !s.contains('.') {
                s.push_str(".0");
            }
            out.push_str(&s);
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

fn path_context(t: f64) -> evalexpr::HashMapContext {
    use evalexpr::{ContextWithMutableFunctions, ContextWithMutableVariables, Function, Value};
    let mut ctx = evalexpr::HashMapContext::new();
    ctx.set_value("t".into(), Value::Float(t)).expect("set t");
    let unary: [(&str, fn(f64) -> f64); 7] = [
        ("sqrt", f64::sqrt),
        ("exp", f64::exp),
        ("ln", f64::ln),
        ("sin", f64::sin),
        ("cos", f64::cos),
        ("abs", f64::abs),
        ("cbrt", f64::cbrt),
    ];
    for (name, f) in unary {
        ctx.set_function(
            name.into(),
            Function::new(move |arg| Ok(Value::Float(f(arg.as_number()?)))),
        )
        .expect("set function");
    }
    ctx
}

impl ApproachPath {
    /// Components are expressions in `t` (`+ - * / ^`, `sqrt`, `exp`, `ln`, `sin`, `cos`, `abs`, `cbrt`).
    pub fn new(name: &str, components: &[String], schedule: Schedule) -> Result<Self> {
        schedule.validate()?;
        let mut nodes = Vec::new();
        for c in components {
            let node = evalexpr::build_operator_tree(&floatify(c))
                .map_err(|e| Error::Parse { pos: 0, msg: format!("path component '{c}': {e}") })?;
            nodes.push(node);
        }
        let path = ApproachPath { name: name.into(), components: components.to_vec(), schedule, nodes };
        for k in 0..=path.schedule.steps {
            path.eval(path.schedule.t(k))?;
        }
        Ok(path)
    }

    pub fn constant(name: &str, x0: &[f64], schedule: Schedule) -> Result<Self> {
        let comps: Vec<String> = x0.iter().map(|x| format!("{x:e}")).collect();
        Self::new(name, &comps, schedule)
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let ctx = path_context(t);
        let mut out = Vec::with_capacity(self.nodes.len());
        for (node, src) in self.nodes.iter().zip(&self.components) {
            let v = node
                .eval_with_context(&ctx)
                .and_then(|v| v.as_number())
                .map_err(|e| Error::InvalidArgument(format!("path component '{src}' at t={t}: {e}")))?;
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("path component '{src}' undefined at t={t}")));
            }
            out.push(v);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LimitDiagnostics {
    /// `(k, t_k, gap(S_{k-1}, S_k))` for `k ≥ 1`.
    pub gaps: Vec<(usize, f64, f64)>,
    pub converged_at: usize,
    pub subalgebra_residual: f64,
}

/// `α_{1/t}(ker ♮_{x,1})`.
///
/// Computed as `ker(♮_{x,1} ∘ α_t)` with equilibrated rows: dilating the kernel of
/// `♮_{x,1}` afterwards amplifies round-off by up to `t^{-Δw}`. The dimension is
/// taken from the undilated matrix.
pub fn dilated_kernel(nm: &NaturalMap, x: &[f64], t: f64, tol: f64) -> Result<Subspace> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("dilation parameter must be positive, got {t}")));
    }
    let k = kernel(&nm.natural_at(x, 1.0)?, tol).dim();
    let mut b = nm.natural_at(x, t)?;
    for mut row in b.row_iter_mut() {
        let m = row.amax();
        if m > 0.0 {
            row /= m;
        }
    }
    let n = b.ncols();
    let (sv, vt) = full_svd_v(&b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sv.get(i).cloned().unwrap_or(0.0).total_cmp(&sv.get(j).cloned().unwrap_or(0.0)));
    let vectors: Vec<Vec<f64>> = order[..k].iter().map(|&r| vt.row(r).iter().cloned().collect()).collect();
    Subspace::from_orthonormal(n, &vectors, tol)
}

/// Follows `S_k = α_{1/t_k}(ker ♮_{x(t_k),1})` until three consecutive gaps are below
/// `cauchy_tol` and non-increasing.
pub fn limit_along_path(
    nm: &NaturalMap,
    path: &ApproachPath,
    rank_tol: f64,
    cauchy_tol: f64,
) -> Result<(Subspace, LimitDiagnostics)> {
    if path.dim() != nm.dim_m() {
        return Err(Error::DimensionMismatch(format!(
            "path in dimension {}, structure in {}",
            path.dim(),
            nm.dim_m()
        )));
    }
    let sched = &path.schedule;
    let mut prev = dilated_kernel(nm, &path.eval(sched.t(0))?, sched.t(0), rank_tol)?;
    let mut gaps: Vec<(usize, f64, f64)> = Vec::new();
    let mut streak = 0usize;
    for k in 1..=sched.steps {
        let t = sched.t(k);
        let cur = dilated_kernel(nm, &path.eval(t)?, t, rank_tol)?;
        if cur.dim() != prev.dim() {
            return Err(Error::InvalidArgument(format!(
                "kernel dimension changed from {} to {} at t = {t:e}; Hormander condition fails along the path",
                prev.dim(),
                cur.dim()
            )));
        }
        let g = gap_distance(&prev, &cur)?;
        let monotone = match gaps.last() {
            Some(&(_, _, last)) => g <= last || g <= GAP_NOISE_FLOOR,
            None => true,
        };
        streak = if g < cauchy_tol && monotone { streak + 1 } else if g < cauchy_tol { 1 } else { 0 };
        gaps.push((k, t, g));
        prev = cur;
        if streak >= 3 {
            let residual = nm.algebra().is_subalgebra(&prev, 1e-8)?.residual;
            return Ok((prev, LimitDiagnostics { gaps, converged_at: k, subalgebra_residual: residual }));
        }
    }
    Err(Error::NoConvergence { gaps: gaps.iter().map(|g| g.2).collect() })
}

pub fn diagnostics_csv(d: &LimitDiagnostics) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "t", "gap"]).map_err(|e| Error::Internal(e.to_string()))?;
    for (k, t, g) in &d.gaps {
        w.write_record([k.to_string(), format!("{t:e}"), format!("{g:e}")])
            .map_err(|e| Error::Internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(vs: &[Vec<f64>]) -> Subspace {
        Subspace::span(vs[0].len(), vs, DEFAULT_RANK_TOL).unwrap()
    }

    #[test]
    fn kernel_grushin_point() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let k = kernel(&a, DEFAULT_RANK_TOL);
        assert_eq!(k.dim(), 1);
        assert!(gap_distance(&k, &sp(&[vec![0.0, 1.0, -1.0]])).unwrap() < 1e-14);
    }

    #[test]
    fn kernel_of_invertible_and_zero() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        assert_eq!(kernel(&a, DEFAULT_RANK_TOL).dim(), 0);
        assert_eq!(kernel(&DMatrix::zeros(2, 3), DEFAULT_RANK_TOL).dim(), 3);
    }

    #[test]
    fn gap_examples() {
        let a = sp(&[vec![1.0, 0.0]]);
        let b = sp(&[vec![0.0, 1.0]]);
        assert!((gap_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        assert!(gap_distance(&a, &a).unwrap() < 1e-15);
        let r = 3.0;
        let c = sp(&[vec![0.0, 1.0, -r]]);
        let d = sp(&[vec![0.0, 0.0, 1.0]]);
        let expect = 1.0 / (1.0 + r * r).sqrt();
        assert!((gap_distance(&c, &d).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn dilate_line() {
        let w = [1, 1, 2];
        let s = sp(&[vec![0.0, 1.0, -0.3]]);
        let t = 0.01;
        let d = dilate_subspace(1.0 / t, &s, &w).unwrap();
        let expect = sp(&[vec![0.0, 1.0, -0.3 / t]]);
        assert!(gap_distance(&d, &expect).unwrap() < 1e-13);
        assert!(gap_distance(&dilate_subspace(1.0, &s, &w).unwrap(), &s).unwrap() < 1e-15);
    }

    #[test]
    fn graded_limit_examples() {
        let w = [1, 1, 2];
        let e3 = sp(&[vec![0.0, 0.0, 1.0]]);
        let l = graded_limit_fixed(&sp(&[vec![0.0, 1.0, -1.0]]), &w).unwrap();
        assert!(gap_distance(&l, &e3).unwrap() < 1e-14);
        let l = graded_limit_fixed(&sp(&[vec![1.0, 0.0, 1.0]]), &w).unwrap();
        assert!(gap_distance(&l, &e3).unwrap() < 1e-14);
        let e2 = sp(&[vec![0.0, 1.0, 0.0]]);
        assert!(gap_distance(&graded_limit_fixed(&e2, &w).unwrap(), &e2).unwrap() < 1e-14);
    }

    #[test]
    fn floatify_literals() {
        assert_eq!(floatify("1/2*t^2"), "1.0/2.0*t^2.0");
        assert_eq!(floatify("cbrt(t)+0.5"), "cbrt(t)+0.5");
        assert_eq!(floatify("1e-3*t"), "0.001*t");
    }

    #[test]
    fn path_expressions() {
        let p = ApproachPath::new("p", &["sqrt(t)".into(), "1/2*t".into()], Schedule::default()).unwrap();
        let x = p.eval(0.04).unwrap();
        assert!((x[0] - 0.2).abs() < 1e-15 && (x[1] - 0.02).abs() < 1e-15);
        assert!(ApproachPath::new("bad", &["t +".into()], Schedule::default()).is_err());
    }
}
