//! Carnot-Carathéodory distances by direct transcription, quasi-norms of groupoid
//! points, and the quasi-norm/distance comparison scan.
//!
//! Controls are piecewise constant on `K` segments and the dynamics are integrated
//! by classical RK4 with a fixed number of substeps. The energy is minimized under
//! the endpoint constraint by an SQP iteration on the sensitivity Jacobian of the
//! RK4 map, falling back to an augmented Lagrangian with L-BFGS inner solves and
//! adjoint gradients when SQP stalls. Every returned value is
//! the length of an explicit control that reaches the target, so it is an upper
//! bound on the true distance.

use std::cell::RefCell;

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::neldermead::NelderMead;
use argmin::solver::quasinewton::LBFGS;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::cone::{ConePoint, TangentCone};
use crate::error::{Error, Result};
use crate::vfields::{integrate, FloatField, FlowOptions, NaturalMap, SubRiemannianStructure};

/// Absolute accuracy budget of distance estimates at unit scale.
pub const SOLVER_TOL: f64 = 1e-3;
/// Endpoint residual accepted as feasible, in the scaled chart at the target.
pub const ENDPOINT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceOptions {
    pub segments: usize,
    pub substeps: usize,
    pub starts: usize,
    pub outer_iters: usize,
    pub penalty: f64,
    pub penalty_growth: f64,
    pub inner_iters: u64,
    pub endpoint_tol: f64,
    pub seed: u64,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        DistanceOptions {
            segments: 24,
            substeps: 4,
            starts: 8,
            outer_iters: 6,
            penalty: 10.0,
            penalty_growth: 10.0,
            inner_iters: 200,
            endpoint_tol: ENDPOINT_TOL,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Converged,
    Unconverged,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceResult {
    /// Distance at the requested scale (an upper bound).
    pub value: f64,
    /// Length of `controls` for the unscaled generators.
    pub d1: f64,
    /// `K × k` controls on the weight-1 generators over unit time.
    pub controls: Vec<Vec<f64>>,
    /// States at segment boundaries.
    pub trajectory: Vec<Vec<f64>>,
    /// Best value after each restart.
    pub history: Vec<f64>,
    pub residual: f64,
    pub status: SolveStatus,
}

impl DistanceResult {
    fn zero(x: &[f64], k: usize, segments: usize) -> Self {
        DistanceResult {
            value: 0.0,
            d1: 0.0,
            controls: vec![vec![0.0; k]; segments],
            trajectory: vec![x.to_vec(); segments + 1],
            history: vec![0.0],
            residual: 0.0,
            status: SolveStatus::Converged,
        }
    }
}

/// Polynomial fields evaluated through a shared table of variable powers.
#[derive(Clone, Debug)]
struct Bundle {
    n: usize,
    count: usize,
    stride: usize,
    /// `(coefficient, start, end)` into `factors`, per polynomial.
    polys: Vec<Vec<(f64, usize, usize)>>,
    factors: Vec<usize>,
}

impl Bundle {
    fn new(fields: &[FloatField]) -> Self {
        let n = fields.first().map(|f| f.dim()).unwrap_or(0);
        let mut deg = 1;
        for f in fields {
            for p in f.components() {
                for (e, _) in p.terms() {
                    deg = deg.max(e.iter().copied().max().unwrap_or(0) as usize);
                }
            }
        }
        let stride = deg + 1;
        let mut b = Bundle { n, count: fields.len(), stride, polys: Vec::new(), factors: Vec::new() };
        for f in fields {
            for p in f.components() {
                b.push(p.terms());
            }
        }
        for f in fields {
            for p in f.components() {
                for j in 0..n {
                    b.push(p.derivative(j).terms());
                }
            }
        }
        b
    }

    fn push(&mut self, terms: &[(Vec<u32>, f64)]) {
        let mut out = Vec::with_capacity(terms.len());
        for (e, c) in terms {
            let start = self.factors.len();
            for (v, &k) in e.iter().enumerate() {
                if k > 0 {
                    self.factors.push(v * self.stride + k as usize);
                }
            }
            out.push((*c, start, self.factors.len()));
        }
        self.polys.push(out);
    }

    fn table_len(&self) -> usize {
        self.n * self.stride
    }

    #[inline]
    fn powers(&self, x: &[f64], table: &mut [f64]) {
        for (v, &xv) in x.iter().enumerate() {
            let row = &mut table[v * self.stride..(v + 1) * self.stride];
            row[0] = 1.0;
            for e in 1..self.stride {
                row[e] = row[e - 1] * xv;
            }
        }
    }

    #[inline]
    fn poly(&self, idx: usize, table: &[f64]) -> f64 {
        let mut s = 0.0;
        for &(c, a, b) in &self.polys[idx] {
            let mut m = c;
            for &f in &self.factors[a..b] {
                m *= table[f];
            }
            s += m;
        }
        s
    }

    #[inline]
    fn field(&self, i: usize, table: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.poly(i * self.n + r, table);
        }
    }

    /// Row-major Jacobian of field `i`.
    #[inline]
    fn jacobian(&self, i: usize, table: &[f64], out: &mut [f64]) {
        let base = self.count * self.n + i * self.n * self.n;
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.poly(base + r, table);
        }
    }
}

/// A driftless control system `ẋ = Σ u_i X_i(x)` plus the graded family of fields
/// used to measure endpoint residuals.
#[derive(Clone, Debug)]
pub struct ControlSystem {
    n: usize,
    /// Gram-orthonormalized horizontal fields `Y = L^{-T} X`.
    horizontal: Bundle,
    /// `L^{-T}`: internal controls to generator controls.
    to_generators: DMatrix<f64>,
    gram: DMatrix<f64>,
    scaling: Vec<FloatField>,
    weights: Vec<u32>,
}

impl ControlSystem {
    fn new(fields: &[FloatField], gram: &DMatrix<f64>, scaling: Vec<FloatField>, weights: Vec<u32>) -> Result<Self> {
        let k = fields.len();
        if gram.nrows() != k || gram.ncols() != k {
            return Err(Error::DimensionMismatch(format!("Gram matrix must be {k}x{k}")));
        }
        let chol = gram.clone().cholesky().ok_or_else(|| Error::InvalidArgument("Gram matrix not positive definite".into()))?;
        let l = chol.l();
        let to_generators = l
            .transpose()
            .try_inverse()
            .ok_or_else(|| Error::Singular("Gram factor".into()))?;
        let ortho: Vec<FloatField> = (0..k)
            .map(|j| {
                let parts: Vec<(f64, &FloatField)> = (0..k).map(|i| (to_generators[(i, j)], &fields[i])).collect();
                FloatField::combine(&parts)
            })
            .collect();
        let n = fields.first().map(|f| f.dim()).ok_or_else(|| Error::InvalidArgument("no horizontal fields".into()))?;
        Ok(ControlSystem { n, horizontal: Bundle::new(&ortho), to_generators, gram: gram.clone(), scaling, weights })
    }

    pub fn manifold(s: &SubRiemannianStructure, nm: &NaturalMap) -> Result<Self> {
        let fields: Vec<FloatField> =
            s.generators().iter().filter(|g| g.1 == 1).map(|g| g.0.compile()).collect();
        Self::new(&fields, s.gram(), nm.compiled().to_vec(), nm.algebra().weights().to_vec())
    }

    pub fn cone(c: &TangentCone, gram: &DMatrix<f64>) -> Result<Self> {
        let action = c
            .action_fields()
            .ok_or_else(|| Error::Internal("cone action is not polynomial in the complement coordinates".into()))?;
        let fields: Vec<FloatField> = c.weight1_generators().iter().map(|&j| action[j].clone()).collect();
        Self::new(&fields, gram, action.to_vec(), c.algebra().weights().to_vec())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn controls(&self) -> usize {
        self.horizontal.count
    }

    /// `M(x,τ)`: columns `τ^{w_j} F_j(x)`.
    fn chart_matrix(&self, x: &[f64], tau: f64) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.scaling.len());
        for (j, f) in self.scaling.iter().enumerate() {
            let s = tau.powi(self.weights[j] as i32);
            let col = f.eval(x);
            for i in 0..self.n {
                m[(i, j)] = s * col[i];
            }
        }
        m
    }

    /// Norm of the minimal `v` with `M(x,τ) v = r`.
    fn chart_norm(&self, x: &[f64], tau: f64, r: &[f64]) -> f64 {
        let m = self.chart_matrix(x, tau);
        match m.svd(true, true).solve(&DVector::from_column_slice(r), 1e-13) {
            Ok(v) => v.norm(),
            Err(_) => f64::INFINITY,
        }
    }

    /// Scale at which `y - x` has unit size in the chart at `x`.
    fn scale_for(&self, x: &[f64], y: &[f64]) -> f64 {
        let r: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let (mut lo, mut hi) = (-40.0f64, 20.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.chart_norm(x, mid.exp(), &r) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi.exp()
    }

    /// `(M Mᵀ)^{-1/2}` at `y`.
    fn residual_metric(&self, y: &[f64], tau: f64) -> Result<DMatrix<f64>> {
        let m = self.chart_matrix(y, tau);
        let mmt = &m * m.transpose();
        let eig = mmt.symmetric_eigen();
        let smax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        if eig.eigenvalues.iter().any(|&l| l <= 1e-24 * smax.max(1e-300)) {
            return Err(Error::HormanderViolated { point: y.to_vec(), rank: 0, dim: self.n });
        }
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
    }

    /// Endpoint of `ẋ = Σ u_i X_i` for piecewise-constant generator controls, by the
    /// same RK4 scheme the solver uses.
    pub fn integrate_controls(&self, x: &[f64], controls: &[Vec<f64>], substeps: usize) -> Result<Vec<f64>> {
        let k = self.controls();
        let inv = self
            .to_generators
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("Gram factor".into()))?;
        let mut w = Vec::with_capacity(controls.len() * k);
        for u in controls {
            if u.len() != k {
                return Err(Error::DimensionMismatch(format!("control row of length {} for {k} generators", u.len())));
            }
            let wi = &inv * DVector::from_column_slice(u);
            w.extend(wi.iter());
        }
        let tr = Transcription::new(self, x, controls.len(), substeps, 1.0);
        let mut ws = tr.workspace();
        Ok(tr.forward(&w, &mut ws))
    }

    /// `Σ_k |u_k|_G / K`.
    pub fn control_length(&self, controls: &[Vec<f64>]) -> f64 {
        let kk = controls.len().max(1) as f64;
        controls
            .iter()
            .map(|u| {
                let v = DVector::from_column_slice(u);
                (v.transpose() * &self.gram * &v)[(0, 0)].max(0.0).sqrt()
            })
            .sum::<f64>()
            / kk
    }

    /// Upper bound on the distance from `x` to `y` for the unscaled generators.
    pub fn distance(&self, x: &[f64], y: &[f64], opts: &DistanceOptions, warm: Option<&[Vec<f64>]>) -> Result<DistanceResult> {
        if x.len() != self.n || y.len() != self.n {
            return Err(Error::DimensionMismatch(format!("endpoints must lie in R^{}", self.n)));
        }
        if opts.segments == 0 || opts.substeps == 0 || opts.starts == 0 {
            return Err(Error::InvalidArgument("segments, substeps and starts must be positive".into()));
        }
        let k = self.controls();
        let sep = x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if sep == 0.0 {
            return Ok(DistanceResult::zero(x, k, opts.segments));
        }
        let tau = self.scale_for(x, y);
        let wmat = self.residual_metric(y, tau)?;
        let tr = Transcription::new(self, x, opts.segments, opts.substeps, tau);
        let solver = Solver { tr: &tr, y, wmat: &wmat, opts };
        let mut inits: Vec<Vec<f64>> = Vec::new();
        if let Some(wc) = warm {
            if wc.len() == opts.segments && wc.iter().all(|r| r.len() == k) {
                let lt = self.to_generators.clone().try_inverse().expect("invertible factor");
                let mut z = Vec::with_capacity(opts.segments * k);
                for u in wc {
                    z.extend((&lt * DVector::from_column_slice(u) / tau).iter());
                }
                inits.push(z);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let straight = solver.straight_line();
        if straight.iter().map(|x| x * x).sum::<f64>() > 1e-16 {
            inits.push(straight);
        }
        let (base, spread) = match inits.last() {
            Some(b) => (b.clone(), 0.5),
            None => (vec![0.0; opts.segments * k], 1.0),
        };
        while inits.len() < opts.starts.max(1) {
            let z: Vec<f64> = base
                .iter()
                .map(|b| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    b + spread * e
                })
                .collect();
            inits.push(z);
        }
        inits.truncate(opts.starts.max(1));
        let mut best: Option<(f64, Vec<f64>, f64)> = None;
        let mut history = Vec::new();
        for init in inits {
            let (z, res) = solver.run(init);
            let len = tr.length(&z);
            let feasible = res <= opts.endpoint_tol;
            let better = match &best {
                None => true,
                Some((bl, _, br)) => {
                    let best_feasible = *br <= opts.endpoint_tol;
                    (feasible && (!best_feasible || len < *bl)) || (!feasible && !best_feasible && res < *br)
                }
            };
            if better {
                best = Some((len, z, res));
            }
            history.push(best.as_ref().map(|b| b.0 * tau).unwrap_or(f64::INFINITY));
            if feasible && warm.is_some() && history.len() == 1 && opts.starts > 1 {
                // A converged warm start is accepted as the optimum of its basin; the
                // remaining starts only guard against a poor basin.
                let verified = solver.stationary(best.as_ref().map(|b| &b.1).unwrap());
                if verified {
                    break;
                }
            }
        }
        let (len, z, res) = best.ok_or_else(|| Error::Internal("no start evaluated".into()))?;
        let mut ws = tr.workspace();
        let trajectory = tr.trajectory(&z, &mut ws);
        let controls: Vec<Vec<f64>> = z
            .chunks(k)
            .map(|wk| (&self.to_generators * DVector::from_column_slice(wk) * tau).iter().cloned().collect())
            .collect();
        let d1 = len * tau;
        Ok(DistanceResult {
            value: d1,
            d1,
            controls,
            trajectory,
            history,
            residual: res,
            status: if res <= opts.endpoint_tol { SolveStatus::Converged } else { SolveStatus::Unconverged },
        })
    }
}

struct Workspace {
    table: Vec<f64>,
    /// Stage inputs, `steps × 4 × n`.
    stages: Vec<f64>,
    /// Field values at stage inputs, `steps × 4 × k × n`.
    values: Vec<f64>,
    jac: Vec<f64>,
    tmp: Vec<f64>,
}

struct Transcription<'a> {
    sys: &'a ControlSystem,
    x0: Vec<f64>,
    segments: usize,
    substeps: usize,
    tau: f64,
}

impl<'a> Transcription<'a> {
    fn new(sys: &'a ControlSystem, x0: &[f64], segments: usize, substeps: usize, tau: f64) -> Self {
        Transcription { sys, x0: x0.to_vec(), segments, substeps, tau }
    }

    fn workspace(&self) -> Workspace {
        let n = self.sys.n;
        let k = self.sys.controls();
        let steps = self.segments * self.substeps;
        Workspace {
            table: vec![0.0; self.sys.horizontal.table_len()],
            stages: vec![0.0; steps * 4 * n],
            values: vec![0.0; steps * 4 * k * n],
            jac: vec![0.0; n * n],
            tmp: vec![0.0; n],
        }
    }

    fn length(&self, z: &[f64]) -> f64 {
        let k = self.sys.controls();
        z.chunks(k).map(|w| w.iter().map(|x| x * x).sum::<f64>().sqrt()).sum::<f64>() / self.segments as f64
    }

    fn energy(&self, z: &[f64]) -> f64 {
        z.iter().map(|x| x * x).sum::<f64>() / self.segments as f64
    }

    /// Evaluates `f = τ Σ w_i Y_i` at `x`, caching the `Y_i(x)` into `vals`.
    #[inline]
    fn rhs(&self, x: &[f64], w: &[f64], table: &mut [f64], vals: &mut [f64], out: &mut [f64]) {
        let n = self.sys.n;
        let b = &self.sys.horizontal;
        b.powers(x, table);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &wi) in w.iter().enumerate() {
            let v = &mut vals[i * n..(i + 1) * n];
            b.field(i, table, v);
            for (o, vi) in out.iter_mut().zip(v.iter()) {
                *o += self.tau * wi * vi;
            }
        }
    }

    fn forward(&self, z: &[f64], ws: &mut Workspace) -> Vec<f64> {
        let n = self.sys.n;
        let k = self.sys.controls();
        let h = 1.0 / (self.segments * self.substeps) as f64;
        let mut x = self.x0.clone();
        let mut kk = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut input = vec![0.0; n];
        for s in 0..self.segments * self.substeps {
            let w = &z[(s / self.substeps) * k..(s / self.substeps + 1) * k];
            for q in 0..4 {
                match q {
                    0 => input.copy_from_slice(&x),
                    1 | 2 => {
                        for i in 0..n {
                            input[i] = x[i] + 0.5 * h * kk[q - 1][i];
                        }
                    }
                    _ => {
                        for i in 0..n {
                            input[i] = x[i] + h * kk[2][i];
                        }
                    }
                }
                let base = (s * 4 + q) * n;
                ws.stages[base..base + n].copy_from_slice(&input);
                let vbase = (s * 4 + q) * k * n;
                let (table, values) = (&mut ws.table, &mut ws.values);
                self.rhs(&input, w, table, &mut values[vbase..vbase + k * n], &mut kk[q]);
            }
            for i in 0..n {
                x[i] += h / 6.0 * (kk[0][i] + 2.0 * kk[1][i] + 2.0 * kk[2][i] + kk[3][i]);
            }
        }
        x
    }

    fn trajectory(&self, z: &[f64], ws: &mut Workspace) -> Vec<Vec<f64>> {
        let n = self.sys.n;
        self.forward(z, ws);
        let mut out: Vec<Vec<f64>> =
            (0..self.segments).map(|seg| ws.stages[seg * self.substeps * 4 * n..][..n].to_vec()).collect();
        out.push(self.forward(z, ws));
        out
    }

    /// Gradient of `λᵀ x_end` with respect to the controls; requires a preceding `forward`.
    fn backward(&self, z: &[f64], lam_end: &[f64], ws: &mut Workspace) -> Vec<f64> {
        let n = self.sys.n;
        let k = self.sys.controls();
        let h = 1.0 / (self.segments * self.substeps) as f64;
        let b = &self.sys.horizontal;
        let mut grad = vec![0.0; z.len()];
        let mut lam = lam_end.to_vec();
        let mut kbar = vec![0.0; n];
        let mut abar = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for s in (0..self.segments * self.substeps).rev() {
            let seg = s / self.substeps;
            let w = &z[seg * k..(seg + 1) * k];
            for q in (0..4).rev() {
                let (c, prev) = match q {
                    3 => (h / 6.0, None),
                    2 => (h / 3.0, Some((h, 3))),
                    1 => (h / 3.0, Some((0.5 * h, 2))),
                    _ => (h / 6.0, Some((0.5 * h, 1))),
                };
                for i in 0..n {
                    kbar[i] = c * lam[i];
                    if let Some((f, p)) = prev {
                        kbar[i] += f * abar[p][i];
                    }
                }
                let base = (s * 4 + q) * n;
                ws.tmp.copy_from_slice(&ws.stages[base..base + n]);
                b.powers(&ws.tmp, &mut ws.table);
                let vbase = (s * 4 + q) * k * n;
                abar[q].iter_mut().for_each(|a| *a = 0.0);
                for i in 0..k {
                    let vals = &ws.values[vbase + i * n..vbase + (i + 1) * n];
                    let dot: f64 = vals.iter().zip(&kbar).map(|(a, b)| a * b).sum();
                    grad[seg * k + i] += self.tau * dot;
                    if w[i] != 0.0 {
                        b.jacobian(i, &ws.table, &mut ws.jac);
                        let sc = self.tau * w[i];
                        for r in 0..n {
                            let kr = kbar[r] * sc;
                            if kr != 0.0 {
                                for cix in 0..n {
                                    abar[q][cix] += ws.jac[r * n + cix] * kr;
                                }
                            }
                        }
                    }
                }
            }
            for i in 0..n {
                lam[i] += abar[0][i] + abar[1][i] + abar[2][i] + abar[3][i];
            }
        }
        grad
    }
}

struct Solver<'a> {
    tr: &'a Transcription<'a>,
    y: &'a [f64],
    wmat: &'a DMatrix<f64>,
    opts: &'a DistanceOptions,
}

impl Solver<'_> {
    fn constraint(&self, end: &[f64]) -> Vec<f64> {
        let r: Vec<f64> = end.iter().zip(self.y).map(|(a, b)| a - b).collect();
        (self.wmat * DVector::from_vec(r)).iter().cloned().collect()
    }

    /// `c(z)` and its Jacobian, one adjoint sweep per row.
    fn constraint_jacobian(&self, z: &[f64], ws: &mut Workspace) -> (Vec<f64>, DMatrix<f64>) {
        let n = self.tr.sys.n;
        let end = self.tr.forward(z, ws);
        let c = self.constraint(&end);
        let mut j = DMatrix::zeros(n, z.len());
        for r in 0..n {
            let row: Vec<f64> = self.wmat.row(r).iter().cloned().collect();
            let g = self.tr.backward(z, &row, ws);
            for (cix, gv) in g.iter().enumerate() {
                j[(r, cix)] = *gv;
            }
        }
        (c, j)
    }

    fn straight_line(&self) -> Vec<f64> {
        let sys = self.tr.sys;
        let n = sys.n;
        let k = sys.controls();
        let mut table = vec![0.0; sys.horizontal.table_len()];
        sys.horizontal.powers(&self.tr.x0, &mut table);
        let mut bmat = DMatrix::zeros(n, k);
        let mut col = vec![0.0; n];
        for i in 0..k {
            sys.horizontal.field(i, &table, &mut col);
            for r in 0..n {
                bmat[(r, i)] = self.tr.tau * col[r];
            }
        }
        let d: Vec<f64> = self.y.iter().zip(&self.tr.x0).map(|(a, b)| a - b).collect();
        let w = bmat
            .svd(true, true)
            .solve(&DVector::from_vec(d), 1e-12)
            .map(|v| v.iter().cloned().collect::<Vec<f64>>())
            .unwrap_or_else(|_| vec![0.0; k]);
        (0..self.tr.segments).flat_map(|_| w.clone()).collect()
    }

    /// First-order multiplier estimate `argmin |∇E + Jᵀμ|`.
    fn multipliers(&self, z: &[f64], ws: &mut Workspace) -> Vec<f64> {
        let (_, j) = self.constraint_jacobian(z, ws);
        let ge = DVector::from_iterator(z.len(), z.iter().map(|x| 2.0 * x / self.tr.segments as f64));
        let jjt = &j * j.transpose();
        match jjt.lu().solve(&(-(&j * ge))) {
            Some(m) if m.iter().all(|v| v.is_finite()) => m.iter().cloned().collect(),
            _ => vec![0.0; self.tr.sys.n],
        }
    }

    /// Gradient of the Lagrangian at the estimated multipliers is small.
    fn stationary(&self, z: &[f64]) -> bool {
        let mut ws = self.tr.workspace();
        let (_, j) = self.constraint_jacobian(z, &mut ws);
        let ge = DVector::from_iterator(z.len(), z.iter().map(|x| 2.0 * x / self.tr.segments as f64));
        let jjt = &j * j.transpose();
        let Some(mu) = jjt.lu().solve(&(-(&j * &ge))) else { return false };
        let r = ge + j.transpose() * mu;
        r.norm() <= 1e-6 * (1.0 + self.tr.energy(z).sqrt())
    }

    fn run(&self, init: Vec<f64>) -> (Vec<f64>, f64) {
        let mut ws = self.tr.workspace();
        match self.sqp(init.clone(), &mut ws) {
            Some(z) => self.polish(z, &mut ws),
            None => self.augmented_lagrangian(init, &mut ws),
        }
    }

    /// Equality-constrained SQP with a damped BFGS model of the Lagrangian Hessian and
    /// an ℓ1 merit line search. Returns `None` when it fails to reach feasibility.
    fn sqp(&self, mut z: Vec<f64>, ws: &mut Workspace) -> Option<Vec<f64>> {
        let p = z.len();
        let n = self.tr.sys.n;
        let kk = self.tr.segments as f64;
        let grad_e = |z: &[f64]| DVector::from_iterator(z.len(), z.iter().map(|x| 2.0 * x / kk));
        let l1 = |c: &[f64]| c.iter().map(|v| v.abs()).sum::<f64>();
        let (mut c, mut j) = self.constraint_jacobian(&z, ws);
        if !c.iter().all(|v| v.is_finite()) {
            return None;
        }
        let mut b = DMatrix::identity(p, p) * (2.0 / kk);
        let mut nu = 1.0f64;
        for _ in 0..self.opts.inner_iters {
            let g = grad_e(&z);
            let mut kkt = DMatrix::zeros(p + n, p + n);
            kkt.view_mut((0, 0), (p, p)).copy_from(&b);
            kkt.view_mut((p, 0), (n, p)).copy_from(&j);
            kkt.view_mut((0, p), (p, n)).copy_from(&j.transpose());
            let mut rhs = DVector::zeros(p + n);
            rhs.rows_mut(0, p).copy_from(&(-&g));
            for i in 0..n {
                rhs[p + i] = -c[i];
            }
            let sol = kkt.lu().solve(&rhs)?;
            let d = sol.rows(0, p).into_owned();
            let mu = sol.rows(p, n).into_owned();
            let lag = &g + j.transpose() * &mu;
            let cn = l1(&c);
            if lag.norm() <= 1e-8 * (1.0 + g.norm()) && cn <= 1e-12 {
                return Some(z);
            }
            nu = nu.max(2.0 * mu.amax());
            let merit0 = self.tr.energy(&z) + nu * cn;
            let slope = g.dot(&d) - nu * cn;
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..30 {
                let trial: Vec<f64> = z.iter().zip(d.iter()).map(|(a, s)| a + alpha * s).collect();
                let end = self.tr.forward(&trial, ws);
                let ct = self.constraint(&end);
                let mt = self.tr.energy(&trial) + nu * l1(&ct);
                if mt.is_finite() && mt <= merit0 + 1e-4 * alpha * slope.min(0.0) {
                    accepted = Some(trial);
                    break;
                }
                alpha *= 0.5;
            }
            if accepted.is_none() {
                // Second-order correction against the Maratos effect.
                let full: Vec<f64> = z.iter().zip(d.iter()).map(|(a, s)| a + s).collect();
                let cf = self.constraint(&self.tr.forward(&full, ws));
                let jjt = &j * j.transpose();
                if let Some(y) = jjt.lu().solve(&DVector::from_column_slice(&cf)) {
                    let corr = j.transpose() * y;
                    let trial: Vec<f64> = full.iter().zip(corr.iter()).map(|(a, s)| a - s).collect();
                    let ct = self.constraint(&self.tr.forward(&trial, ws));
                    let mt = self.tr.energy(&trial) + nu * l1(&ct);
                    if mt.is_finite() && mt <= merit0 + 1e-4 * slope.min(0.0) {
                        accepted = Some(trial);
                    }
                }
            }
            let Some(znew) = accepted else {
                return (cn <= 1e-3 * self.opts.endpoint_tol).then_some(z);
            };
            let (cnew, jnew) = self.constraint_jacobian(&znew, ws);
            let s = DVector::from_iterator(p, znew.iter().zip(&z).map(|(a, b)| a - b));
            let y = (grad_e(&znew) + jnew.transpose() * &mu) - (&g + j.transpose() * &mu);
            let bs = &b * &s;
            let sbs = s.dot(&bs);
            let sy = s.dot(&y);
            if sbs > 1e-300 {
                let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
                let r = &y * theta + &bs * (1.0 - theta);
                let sr = s.dot(&r);
                if sr > 1e-300 {
                    b -= &bs * bs.transpose() / sbs;
                    b += &r * r.transpose() / sr;
                }
            }
            z = znew;
            c = cnew;
            j = jnew;
        }
        (l1(&c) <= 1e-3 * self.opts.endpoint_tol).then_some(z)
    }

    fn augmented_lagrangian(&self, init: Vec<f64>, ws: &mut Workspace) -> (Vec<f64>, f64) {
        let mut z = init;
        let mut mu = self.multipliers(&z, ws);
        let mut rho = self.opts.penalty;
        for _ in 0..self.opts.outer_iters {
            let problem = Lagrangian {
                solver: self,
                mu: mu.clone(),
                rho,
                ws: RefCell::new(self.tr.workspace()),
                cache: RefCell::new(None),
                best: RefCell::new(None),
            };
            z = problem.minimize(z, self.opts.inner_iters);
            let end = self.tr.forward(&z, ws);
            let c = self.constraint(&end);
            let cn = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if cn <= 1e-3 * self.opts.endpoint_tol {
                break;
            }
            for (m, ci) in mu.iter_mut().zip(&c) {
                *m += rho * ci;
            }
            rho *= self.opts.penalty_growth;
        }
        self.polish(z, ws)
    }

    /// Minimal-norm Gauss-Newton corrections onto the endpoint constraint.
    fn polish(&self, mut z: Vec<f64>, ws: &mut Workspace) -> (Vec<f64>, f64) {
        let norm = |c: &[f64]| c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (mut c, mut j) = self.constraint_jacobian(&z, ws);
        let mut cn = norm(&c);
        for _ in 0..12 {
            if !cn.is_finite() || cn <= 1e-13 {
                break;
            }
            let jjt = &j * j.transpose();
            let Some(y) = jjt.lu().solve(&DVector::from_column_slice(&c)) else { break };
            let step = j.transpose() * y;
            let mut alpha = 1.0;
            let mut improved = false;
            for _ in 0..8 {
                let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, s)| a - alpha * s).collect();
                let (ct, jt) = self.constraint_jacobian(&trial, ws);
                let tn = norm(&ct);
                if tn < cn {
                    z = trial;
                    c = ct;
                    j = jt;
                    cn = tn;
                    improved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (z, if cn.is_finite() { cn } else { f64::INFINITY })
    }
}

struct Lagrangian<'a> {
    solver: &'a Solver<'a>,
    mu: Vec<f64>,
    rho: f64,
    ws: RefCell<Workspace>,
    cache: RefCell<Option<(Vec<f64>, f64, Vec<f64>)>>,
    best: RefCell<Option<(f64, Vec<f64>)>>,
}

impl Lagrangian<'_> {
    fn evaluate(&self, z: &[f64]) -> (f64, Vec<f64>) {
        if let Some((p, f, g)) = self.cache.borrow().as_ref() {
            if p.as_slice() == z {
                return (*f, g.clone());
            }
        }
        let tr = self.solver.tr;
        let mut ws = self.ws.borrow_mut();
        let end = tr.forward(z, &mut ws);
        let c = self.solver.constraint(&end);
        let mut f = tr.energy(z);
        let mut lam_c = vec![0.0; c.len()];
        for (i, ci) in c.iter().enumerate() {
            f += self.mu[i] * ci + 0.5 * self.rho * ci * ci;
            lam_c[i] = self.mu[i] + self.rho * ci;
        }
        let (f, g) = if f.is_finite() {
            let lam = (self.solver.wmat.transpose() * DVector::from_vec(lam_c)).iter().cloned().collect::<Vec<f64>>();
            let mut g = tr.backward(z, &lam, &mut ws);
            for (gi, zi) in g.iter_mut().zip(z) {
                *gi += 2.0 * zi / tr.segments as f64;
            }
            (f, g)
        } else {
            (f64::INFINITY, vec![0.0; z.len()])
        };
        *self.cache.borrow_mut() = Some((z.to_vec(), f, g.clone()));
        let mut best = self.best.borrow_mut();
        if f.is_finite() && best.as_ref().map(|b| f < b.0).unwrap_or(true) {
            *best = Some((f, z.to_vec()));
        }
        (f, g)
    }

    fn minimize(self, z0: Vec<f64>, iters: u64) -> Vec<f64> {
        let fallback = z0.clone();
        let solver = LBFGS::new(MoreThuenteLineSearch::new(), 8);
        let solver = match solver.with_tolerance_grad(1e-10).and_then(|s| s.with_tolerance_cost(1e-16)) {
            Ok(s) => s,
            Err(_) => return fallback,
        };
        let best = |p: &Self| p.best.borrow().as_ref().map(|b| b.1.clone());
        let outcome = Executor::new(&self, solver).configure(|s| s.param(z0).max_iters(iters)).run();
        match outcome {
            Ok(res) => res.state().get_best_param().cloned().or_else(|| best(&self)).unwrap_or(fallback),
            Err(_) => best(&self).unwrap_or(fallback),
        }
    }
}

impl CostFunction for &Lagrangian<'_> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.evaluate(p).0)
    }
}

impl Gradient for &Lagrangian<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;
    fn gradient(&self, p: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.evaluate(p).1)
    }
}

/// Distances on `M` for a fixed structure.
#[derive(Clone, Debug)]
pub struct ManifoldMetric {
    system: ControlSystem,
}

impl ManifoldMetric {
    pub fn new(s: &SubRiemannianStructure, nm: &NaturalMap) -> Result<Self> {
        Ok(ManifoldMetric { system: ControlSystem::manifold(s, nm)? })
    }

    pub fn system(&self) -> &ControlSystem {
        &self.system
    }

    /// `d_t(x, y) = d_1(x, y) / t`.
    pub fn distance(&self, x: &[f64], y: &[f64], t: f64, opts: &DistanceOptions, warm: Option<&[Vec<f64>]>) -> Result<DistanceResult> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {t}")));
        }
        let mut r = self.system.distance(x, y, opts, warm)?;
        r.value = r.d1 / t;
        r.history.iter_mut().for_each(|h| *h /= t);
        Ok(r)
    }
}

/// Distances on a cone `G/H`.
#[derive(Clone, Debug)]
pub struct ConeMetric {
    cone: TangentCone,
    system: ControlSystem,
}

impl ConeMetric {
    pub fn new(c: &TangentCone) -> Result<Self> {
        let k = c.weight1_generators().len();
        Self::with_gram(c, &DMatrix::identity(k, k))
    }

    pub fn with_gram(c: &TangentCone, gram: &DMatrix<f64>) -> Result<Self> {
        Ok(ConeMetric { cone: c.clone(), system: ControlSystem::cone(c, gram)? })
    }

    pub fn cone(&self) -> &TangentCone {
        &self.cone
    }

    pub fn system(&self) -> &ControlSystem {
        &self.system
    }

    pub fn distance(&self, p: &ConePoint, q: &ConePoint, opts: &DistanceOptions, warm: Option<&[Vec<f64>]>) -> Result<DistanceResult> {
        self.system.distance(&p.coords, &q.coords, opts, warm)
    }
}

pub fn cc_distance_manifold(
    s: &SubRiemannianStructure,
    x: &[f64],
    y: &[f64],
    t: f64,
    opts: &DistanceOptions,
) -> Result<DistanceResult> {
    let nm = crate::vfields::build_natural_map(s)?;
    ManifoldMetric::new(s, &nm)?.distance(x, y, t, opts, None)
}

pub fn cc_distance_cone(c: &TangentCone, p: &ConePoint, q: &ConePoint, opts: &DistanceOptions) -> Result<DistanceResult> {
    ConeMetric::new(c)?.distance(p, q, opts, None)
}

/// A point of `M × M × (0,∞) ⊔ (G/H) × {0}`.
#[derive(Clone, Debug)]
pub enum GroupoidPoint {
    Manifold { y: Vec<f64>, x: Vec<f64>, t: f64 },
    Cone { cone: TangentCone, p: ConePoint, x: Vec<f64> },
}

impl GroupoidPoint {
    pub fn t(&self) -> f64 {
        match self {
            GroupoidPoint::Manifold { t, .. } => *t,
            GroupoidPoint::Cone { .. } => 0.0,
        }
    }

    /// `α_λ`: `t ↦ t/λ` on manifold points, dilation of the cone point otherwise.
    pub fn dilate(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("dilation factor must be positive, got {lambda}")));
        }
        Ok(match self {
            GroupoidPoint::Manifold { y, x, t } => GroupoidPoint::Manifold { y: y.clone(), x: x.clone(), t: t / lambda },
            GroupoidPoint::Cone { cone, p, x } => {
                let w = cone.coord_weights();
                let coords = p.coords.iter().zip(&w).map(|(c, &wi)| c * lambda.powi(wi as i32)).collect();
                GroupoidPoint::Cone { cone: cone.clone(), p: ConePoint::new(coords), x: x.clone() }
            }
        })
    }
}

/// `d_𝔾`: `d_t(y, x)` for `t > 0`, `d(p, base)` on the cone.
pub fn groupoid_distance(s: &SubRiemannianStructure, g: &GroupoidPoint, opts: &DistanceOptions) -> Result<DistanceResult> {
    match g {
        GroupoidPoint::Manifold { y, x, t } => cc_distance_manifold(s, y, x, *t, opts),
        GroupoidPoint::Cone { cone, p, .. } => {
            let k = cone.weight1_generators().len();
            let gram = if s.gram().nrows() == k { s.gram().clone() } else { DMatrix::identity(k, k) };
            ConeMetric::with_gram(cone, &gram)?.distance(p, &cone.base_point(), opts, None)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiNormResult {
    pub value: f64,
    pub minimizer: Vec<f64>,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuasiNormOptions {
    pub starts: usize,
    pub rel_tol: f64,
    pub endpoint_tol: f64,
    pub seed: u64,
}

impl Default for QuasiNormOptions {
    fn default() -> Self {
        QuasiNormOptions { starts: 3, rel_tol: 1e-4, endpoint_tol: ENDPOINT_TOL, seed: 0 }
    }
}

/// `v ↦ exp(♮_t v)·x` together with its Jacobian in `v`.
struct ChartFlow<'a> {
    nm: &'a NaturalMap,
    x: Vec<f64>,
    t: f64,
}

impl ChartFlow<'_> {
    fn eval(&self, v: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let n = self.nm.dim_m();
        let dim = v.len();
        let fields = self.nm.compiled();
        let w = self.nm.algebra().weights();
        let a: Vec<f64> = v.iter().zip(w).map(|(vj, &wj)| vj * self.t.powi(wj as i32)).collect();
        let sc: Vec<f64> = w.iter().map(|&wj| self.t.powi(wj as i32)).collect();
        let mut y0 = self.x.clone();
        y0.resize(n + n * dim, 0.0);
        let jac = RefCell::new(vec![0.0; n * n]);
        let vals = RefCell::new(vec![0.0; n]);
        let opts = FlowOptions::default();
        let out = integrate(
            |s, d| {
                let (y, sens) = s.split_at(n);
                let (dy, dsens) = d.split_at_mut(n);
                dy.iter_mut().for_each(|x| *x = 0.0);
                dsens.iter_mut().for_each(|x| *x = 0.0);
                let mut jac = jac.borrow_mut();
                let mut vals = vals.borrow_mut();
                for (j, f) in fields.iter().enumerate() {
                    f.eval_into(y, &mut vals);
                    for r in 0..n {
                        dy[r] += a[j] * vals[r];
                        dsens[r * dim + j] += sc[j] * vals[r];
                    }
                    if a[j] != 0.0 {
                        f.jacobian_into(y, &mut jac);
                        for r in 0..n {
                            for c in 0..n {
                                let jr = a[j] * jac[r * n + c];
                                if jr != 0.0 {
                                    for col in 0..dim {
                                        dsens[r * dim + col] += jr * sens[c * dim + col];
                                    }
                                }
                            }
                        }
                    }
                }
            },
            &y0,
            1.0,
            &opts,
        )?;
        let end = out[..n].to_vec();
        let j = DMatrix::from_row_slice(n, dim, &out[n..]);
        Ok((end, j))
    }
}

fn block_norms(v: &[f64], w: &[u32], depth: u32) -> Vec<f64> {
    let mut s = vec![0.0; depth as usize + 1];
    for (x, &wi) in v.iter().zip(w) {
        s[wi as usize] += x * x;
    }
    s.iter().map(|x| x.sqrt()).collect()
}

/// Projects onto `{‖z_i‖ ≤ 1}` blockwise.
fn project_unit(z: &mut [f64], w: &[u32], depth: u32) {
    let norms = block_norms(z, w, depth);
    for (x, &wi) in z.iter_mut().zip(w) {
        let nb = norms[wi as usize];
        if nb > 1.0 {
            *x /= nb;
        }
    }
}

/// `‖(y, x, t)‖ = inf { ‖v‖ : exp(♮_t v)·x = y }` (`t > 0`), or the infimum over
/// representatives of the coset at `t = 0`.
pub fn quasi_norm_element(nm: &NaturalMap, g: &GroupoidPoint, opts: &QuasiNormOptions) -> Result<QuasiNormResult> {
    match g {
        GroupoidPoint::Manifold { y, x, t } => quasi_norm_manifold(nm, y, x, *t, opts),
        GroupoidPoint::Cone { cone, p, .. } => quasi_norm_coset(cone, p),
    }
}

fn quasi_norm_manifold(nm: &NaturalMap, y: &[f64], x: &[f64], t: f64, opts: &QuasiNormOptions) -> Result<QuasiNormResult> {
    let alg = nm.algebra();
    let n = nm.dim_m();
    let dim = alg.dim();
    if x.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch(format!("endpoints must lie in R^{n}")));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {t}")));
    }
    if x == y {
        return Ok(QuasiNormResult { value: 0.0, minimizer: vec![0.0; dim], residual: 0.0 });
    }
    let w = alg.weights().to_vec();
    let depth = alg.depth();
    let chart = ChartFlow { nm, x: x.to_vec(), t };
    let m_y = nm.natural_at(y, t)?;
    let mmt = &m_y * m_y.transpose();
    let eig = mmt.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::HormanderViolated { point: y.to_vec(), rank: 0, dim: n });
    }
    let wmat = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt())) * eig.eigenvectors.transpose();
    let resid = |end: &[f64]| -> DVector<f64> {
        &wmat * DVector::from_iterator(n, end.iter().zip(y).map(|(a, b)| a - b))
    };
    // Feasible point by minimal-norm Newton from the first-order chart solution.
    let m_x = nm.natural_at(x, t)?;
    let d = DVector::from_iterator(n, y.iter().zip(x).map(|(a, b)| a - b));
    let mut v: Vec<f64> = m_x
        .svd(true, true)
        .solve(&d, 1e-13)
        .map_err(|e| Error::Singular(e.to_string()))?
        .iter()
        .cloned()
        .collect();
    let mut res = f64::INFINITY;
    for _ in 0..50 {
        let (end, j) = match chart.eval(&v) {
            Ok(r) => r,
            Err(_) => break,
        };
        let c = resid(&end);
        res = c.norm();
        if res <= 1e-12 {
            break;
        }
        let jw = &wmat * &j;
        let Ok(step) = jw.svd(true, true).solve(&c, 1e-13) else { break };
        for (vi, s) in v.iter_mut().zip(step.iter()) {
            *vi -= s;
        }
    }
    if !(res <= opts.endpoint_tol) {
        return Err(Error::Infeasible("no preimage found near the chart solution; the quasi-norm is possibly infinite".into()));
    }
    let mut best_v = v.clone();
    let mut best_res = res;
    let mut hi = alg.quasi_norm(&v)?;
    let mut lo = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let feasible_at = |r: f64, z0: Vec<f64>| -> Option<(Vec<f64>, f64)> {
        let dil: Vec<f64> = w.iter().map(|&wi| r.powi(wi as i32)).collect();
        let mut z = z0;
        project_unit(&mut z, &w, depth);
        let vz = |z: &[f64]| -> Vec<f64> { z.iter().zip(&dil).map(|(a, b)| a * b).collect() };
        let (end, j) = chart.eval(&vz(&z)).ok()?;
        let mut c = resid(&end);
        let mut jz = &wmat * j * DMatrix::from_diagonal(&DVector::from_column_slice(&dil));
        let mut damp = 1e-3;
        for _ in 0..60 {
            if c.norm() <= 0.1 * opts.endpoint_tol {
                break;
            }
            let jtj = jz.transpose() * &jz + DMatrix::identity(dim, dim) * damp;
            let step = jtj.lu().solve(&(jz.transpose() * &c))?;
            let mut trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
            project_unit(&mut trial, &w, depth);
            match chart.eval(&vz(&trial)) {
                Ok((e2, j2)) => {
                    let c2 = resid(&e2);
                    if c2.norm() < c.norm() {
                        z = trial;
                        c = c2;
                        jz = &wmat * j2 * DMatrix::from_diagonal(&DVector::from_column_slice(&dil));
                        damp = (damp * 0.3).max(1e-12);
                    } else {
                        damp *= 10.0;
                        if damp > 1e8 {
                            break;
                        }
                    }
                }
                Err(_) => damp *= 10.0,
            }
        }
        (c.norm() <= opts.endpoint_tol).then(|| (vz(&z), c.norm()))
    };
    for _ in 0..60 {
        if hi - lo <= opts.rel_tol * hi {
            break;
        }
        let r = 0.5 * (lo + hi);
        let warm: Vec<f64> = best_v.iter().zip(&w).map(|(a, &wi)| a / r.powi(wi as i32)).collect();
        let mut found = feasible_at(r, warm);
        for _ in 1..opts.starts {
            if found.is_some() {
                break;
            }
            let z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            found = feasible_at(r, z);
        }
        match found {
            Some((vf, rf)) => {
                hi = alg.quasi_norm(&vf)?.min(r);
                best_v = vf;
                best_res = rf;
            }
            None => lo = r,
        }
    }
    Ok(QuasiNormResult { value: hi, minimizer: best_v, residual: best_res })
}

struct CosetObjective<'a> {
    cone: &'a TangentCone,
    s: Vec<f64>,
}

impl CosetObjective<'_> {
    fn point(&self, eta: &[f64]) -> Vec<f64> {
        let h = self.cone.h().basis();
        let mut v = self.s.clone();
        for (c, e) in eta.iter().enumerate() {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi += e * h[(i, c)];
            }
        }
        v
    }
}

impl CostFunction for CosetObjective<'_> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, eta: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.cone.algebra().quasi_norm(&self.point(eta))?)
    }
}

/// `min ‖s + η‖` over `η ∈ 𝔥`, where `s` represents the coset.
fn quasi_norm_coset(cone: &TangentCone, p: &ConePoint) -> Result<QuasiNormResult> {
    let alg = cone.algebra();
    let s = cone.embed(p);
    let k = cone.h().dim();
    if k == 0 {
        return Ok(QuasiNormResult { value: alg.quasi_norm(&s)?, minimizer: s, residual: 0.0 });
    }
    let h = cone.h().basis();
    // Blockwise orthogonal projection: exact when 𝔥 is graded.
    let w = alg.weights();
    let mut eta0 = vec![0.0; k];
    for (c, e) in eta0.iter_mut().enumerate() {
        let num: f64 = (0..s.len()).map(|i| s[i] * h[(i, c)]).sum();
        *e = -num;
    }
    let obj = CosetObjective { cone, s: s.clone() };
    let graded = cone.is_graded();
    let eta = if graded {
        let mut v = s.clone();
        for d in 1..=alg.depth() {
            let idx: Vec<usize> = (0..s.len()).filter(|&i| w[i] == d).collect();
            let cols: Vec<Vec<f64>> = (0..k)
                .map(|c| idx.iter().map(|&i| h[(i, c)]).collect::<Vec<f64>>())
                .filter(|col| col.iter().any(|x| x.abs() > 1e-12))
                .collect();
            if cols.is_empty() {
                continue;
            }
            let sub = crate::grassmann::Subspace::span(idx.len(), &cols, 1e-9)?;
            let block: Vec<f64> = idx.iter().map(|&i| s[i]).collect();
            let pr = sub.project(&block);
            for (t, &i) in idx.iter().enumerate() {
                v[i] = block[t] - pr[t];
            }
        }
        return Ok(QuasiNormResult { value: alg.quasi_norm(&v)?, minimizer: v, residual: 0.0 });
    } else {
        let scale = alg.quasi_norm(&s)?.max(1e-3);
        let mut simplex = vec![eta0.clone()];
        for c in 0..k {
            let mut e = eta0.clone();
            e[c] += scale;
            simplex.push(e);
        }
        let nm = NelderMead::new(simplex).with_sd_tolerance(1e-12).map_err(|e| Error::Internal(e.to_string()))?;
        let res = Executor::new(obj, nm)
            .configure(|st| st.max_iters(2000))
            .run()
            .map_err(|e| Error::Internal(e.to_string()))?;
        res.state().get_best_param().cloned().unwrap_or(eta0)
    };
    let obj = CosetObjective { cone, s };
    let v = obj.point(&eta);
    Ok(QuasiNormResult { value: alg.quasi_norm(&v)?, minimizer: v, residual: 0.0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioSample {
    pub t: f64,
    pub quasi_norm: f64,
    pub distance: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    /// `max(ratio, 1/ratio)` over all accepted samples.
    pub c_hat: f64,
    /// `(decade d, Ĉ over t ∈ (10^{-d-1}, 10^{-d}])`, coarsest first.
    pub per_decade: Vec<(i32, f64)>,
    /// Relative change of Ĉ between the two finest decades.
    pub drift: f64,
    pub samples: Vec<RatioSample>,
    /// `(lower edge, upper edge, count)` of ratio bins.
    pub histogram: Vec<(f64, f64, usize)>,
    pub excluded_degenerate: usize,
    pub excluded_unconverged: usize,
}

#[derive(Clone, Debug)]
pub struct ComparisonOptions {
    pub samples: usize,
    /// Scales `10^{-j/2}` for `j` in this range.
    pub t_grid: Vec<f64>,
    pub seed: u64,
    pub distance: DistanceOptions,
    pub quasi: QuasiNormOptions,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        ComparisonOptions {
            samples: 6,
            t_grid: (2..=6).map(|j| 10f64.powf(-(j as f64) / 2.0)).collect(),
            seed: 0,
            distance: DistanceOptions::default(),
            quasi: QuasiNormOptions::default(),
        }
    }
}

/// Samples `(y, x, t)` with `y = exp(♮_t v)·x` for fixed `(x, v)` across the scale grid
/// and records `‖(y,x,t)‖ / d_t(y,x)`.
pub fn comparison_ratio_scan(
    nm: &NaturalMap,
    s: &SubRiemannianStructure,
    region: &[(f64, f64)],
    opts: &ComparisonOptions,
) -> Result<ComparisonReport> {
    let n = nm.dim_m();
    if region.len() != n || region.iter().any(|(a, b)| !(a <= b)) {
        return Err(Error::InvalidArgument(format!("region must be {n} ordered intervals")));
    }
    let alg = nm.algebra();
    let metric = ManifoldMetric::new(s, nm)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut samples = Vec::new();
    let (mut degenerate, mut unconverged) = (0, 0);
    for _ in 0..opts.samples {
        let x: Vec<f64> = region.iter().map(|&(a, b)| if a == b { a } else { rng.gen_range(a..b) }).collect();
        let raw: Vec<f64> = (0..alg.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let q = alg.quasi_norm(&raw)?;
        let radius = rng.gen_range(0.3..1.0);
        let v = alg.dilate(radius / q.max(1e-300), &raw)?;
        for &t in &opts.t_grid {
            let y = match nm.flow(&v, t, &x, &FlowOptions::default()) {
                Ok(y) => y,
                Err(_) => {
                    unconverged += 1;
                    continue;
                }
            };
            if y == x {
                degenerate += 1;
                continue;
            }
            let qn = quasi_norm_manifold(nm, &y, &x, t, &opts.quasi);
            let d = metric.distance(&y, &x, t, &opts.distance, None);
            match (qn, d) {
                (Ok(qn), Ok(d)) if d.status == SolveStatus::Converged && d.value > 0.0 => {
                    samples.push(RatioSample { t, quasi_norm: qn.value, distance: d.value, ratio: qn.value / d.value });
                }
                _ => unconverged += 1,
            }
        }
    }
    let sym = |r: f64| r.max(1.0 / r);
    let c_hat = samples.iter().map(|s| sym(s.ratio)).fold(0.0, f64::max);
    let mut per_decade: Vec<(i32, f64)> = Vec::new();
    for s in &samples {
        let d = (-s.t.log10() - 1e-9).floor() as i32;
        match per_decade.iter_mut().find(|e| e.0 == d) {
            Some(e) => e.1 = e.1.max(sym(s.ratio)),
            None => per_decade.push((d, sym(s.ratio))),
        }
    }
    per_decade.sort_by_key(|e| e.0);
    let drift = if per_decade.len() >= 2 {
        let a = per_decade[per_decade.len() - 1].1;
        let b = per_decade[per_decade.len() - 2].1;
        (a - b).abs() / b
    } else {
        0.0
    };
    let (lo, hi) = samples.iter().fold((f64::INFINITY, 0.0f64), |(l, h), s| (l.min(s.ratio), h.max(s.ratio)));
    let bins = 10;
    let mut histogram = Vec::new();
    if !samples.is_empty() {
        let width = ((hi - lo) / bins as f64).max(1e-12);
        for b in 0..bins {
            let a = lo + b as f64 * width;
            let e = a + width;
            let count = samples
                .iter()
                .filter(|s| s.ratio >= a && (s.ratio < e || (b == bins - 1 && s.ratio <= hi)))
                .count();
            histogram.push((a, e, count));
        }
    }
    Ok(ComparisonReport { c_hat, per_decade, drift, samples, histogram, excluded_degenerate: degenerate, excluded_unconverged: unconverged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vfields::build_natural_map;

    fn grushin() -> (SubRiemannianStructure, NaturalMap, ManifoldMetric) {
        let s = SubRiemannianStructure::grushin(2);
        let nm = build_natural_map(&s).unwrap();
        let m = ManifoldMetric::new(&s, &nm).unwrap();
        (s, nm, m)
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        let (_, _, m) = grushin();
        let sys = m.system();
        let tr = Transcription::new(sys, &[0.3, -0.2], 5, 3, 0.7);
        let mut ws = tr.workspace();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lam = [0.4, -1.3];
        tr.forward(&z, &mut ws);
        let g = tr.backward(&z, &lam, &mut ws);
        for i in 0..z.len() {
            let mut zp = z.clone();
            zp[i] += 1e-6;
            let mut zm = z.clone();
            zm[i] -= 1e-6;
            let fp: f64 = tr.forward(&zp, &mut ws).iter().zip(&lam).map(|(a, b)| a * b).sum();
            let fm: f64 = tr.forward(&zm, &mut ws).iter().zip(&lam).map(|(a, b)| a * b).sum();
            assert!(((fp - fm) / 2e-6 - g[i]).abs() < 1e-5, "component {i}");
        }
    }

    #[test]
    fn horizontal_segment_distance() {
        let (_, _, m) = grushin();
        let r = m.distance(&[0.0, 0.0], &[0.8, 0.0], 1.0, &DistanceOptions::default(), None).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!((r.value - 0.8).abs() < 1e-3, "{}", r.value);
        let end = m.system().integrate_controls(&[0.0, 0.0], &r.controls, 4).unwrap();
        assert!((end[0] - 0.8).abs() < 1e-6 && end[1].abs() < 1e-6);
        assert!((m.system().control_length(&r.controls) - r.d1).abs() < 1e-9);
    }

    #[test]
    fn scaled_distance_is_exact_quotient() {
        let (_, _, m) = grushin();
        let o = DistanceOptions { starts: 2, ..Default::default() };
        let d1 = m.distance(&[0.1, 0.0], &[0.3, 0.2], 1.0, &o, None).unwrap();
        for t in [0.5, 2.0] {
            let dt = m.distance(&[0.1, 0.0], &[0.3, 0.2], t, &o, None).unwrap();
            assert_eq!(dt.value, d1.value / t);
        }
    }

    #[test]
    fn euclidean_quasi_norm() {
        let s = SubRiemannianStructure::euclidean(2);
        let nm = build_natural_map(&s).unwrap();
        let g = GroupoidPoint::Manifold { y: vec![0.3, 0.4], x: vec![0.0, 0.0], t: 0.5 };
        let q = quasi_norm_element(&nm, &g, &QuasiNormOptions::default()).unwrap();
        assert!((q.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn grushin_unit_flow_quasi_norm_at_most_one() {
        let (_, nm, _) = grushin();
        let t = 0.1;
        let g = GroupoidPoint::Manifold { y: vec![0.5 + t, 0.2], x: vec![0.5, 0.2], t };
        let q = quasi_norm_element(&nm, &g, &QuasiNormOptions::default()).unwrap();
        assert!(q.value <= 1.0 + 1e-9 && q.value > 0.5);
    }
}
