//! Pointed Gromov-Hausdorff experiments: metric-ball nets on a cone, their images
//! under the flow chart `v ↦ exp(♮_t v)·x(t)`, and distortion tables along `t → 0`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::cone::{ConePoint, TangentCone};
use crate::error::{Error, Result};
use crate::grassmann::{dilated_kernel, gap_distance, limit_along_path, ApproachPath, LimitDiagnostics, Subspace};
use crate::grassmann::{DEFAULT_CAUCHY_TOL, DEFAULT_RANK_TOL};
use crate::metrics::{ConeMetric, DistanceOptions, ManifoldMetric, SolveStatus};
use crate::vfields::{FlowOptions, NaturalMap, SubRiemannianStructure};

/// Fraction of unconverged pairs above which a row is flagged.
pub const UNCONVERGED_FLAG: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct GhOptions {
    /// Solver settings for cone distances.
    pub distance: DistanceOptions,
    /// Restarts for manifold distances, the first being the transported cone geodesic.
    pub manifold_starts: usize,
    /// Candidate box is this factor times the extents reached by random horizontal curves.
    pub box_factor: f64,
    /// Number of fineness probes per net point.
    pub probe_factor: usize,
    /// Net points examined per probe, ordered by the box-norm proxy.
    pub probe_neighbours: usize,
    pub flow: FlowOptions,
    pub seed: u64,
}

impl Default for GhOptions {
    fn default() -> Self {
        GhOptions {
            distance: DistanceOptions { starts: 3, ..Default::default() },
            manifold_starts: 2,
            box_factor: 1.25,
            probe_factor: 4,
            probe_neighbours: 3,
            flow: FlowOptions::default(),
            seed: 0,
        }
    }
}

/// A finite sample of a closed ball with its pairwise distance matrix.
#[derive(Clone, Debug, Serialize)]
pub struct PointedNet {
    pub points: Vec<Vec<f64>>,
    pub base: usize,
    pub radius: f64,
    pub matrix: Vec<Vec<f64>>,
    /// Largest distance from a probe in the ball to the net; `0` when not estimated.
    pub fineness: f64,
    pub unconverged_pairs: usize,
    /// Candidates drawn before the net was filled.
    pub candidates: usize,
    #[serde(skip)]
    geodesics: Vec<Vec<Option<Vec<Vec<f64>>>>>,
}

impl PointedNet {
    /// Net with a given matrix and no stored geodesics.
    pub fn from_matrix(points: Vec<Vec<f64>>, base: usize, radius: f64, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if base >= n || matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!("net of {n} points needs an {n}x{n} matrix and a base index")));
        }
        Ok(PointedNet {
            points,
            base,
            radius,
            matrix,
            fineness: 0.0,
            unconverged_pairs: 0,
            candidates: n,
            geodesics: vec![vec![None; n]; n],
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Generator controls of the computed path from point `i` to point `j`, `i < j`.
    pub fn geodesic(&self, i: usize, j: usize) -> Option<&[Vec<f64>]> {
        self.geodesics.get(i).and_then(|r| r.get(j)).and_then(|g| g.as_deref())
    }

    /// Largest asymmetry `|m_ij − m_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.matrix[i][j] - self.matrix[j][i]).abs());
            }
        }
        worst
    }

    pub fn max_distance(&self) -> f64 {
        self.matrix.iter().flatten().cloned().fold(0.0, f64::max)
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Halton points in `[−e_j, e_j]`, starting at index `start + 1`.
fn halton_box(extents: &[f64], start: u64, count: usize) -> Result<Vec<Vec<f64>>> {
    if extents.len() > PRIMES.len() {
        return Err(Error::InvalidArgument(format!("Halton sampling supports at most {} dimensions", PRIMES.len())));
    }
    Ok((0..count as u64)
        .map(|i| {
            extents
                .iter()
                .zip(PRIMES)
                .map(|(e, p)| e * (2.0 * radical_inverse(start + i + 1, p) - 1.0))
                .collect()
        })
        .collect())
}

/// Coordinate extents of endpoints of random horizontal curves of length `radius`.
fn reachable_extents(metric: &ConeMetric, radius: f64, seed: u64) -> Result<Vec<f64>> {
    let sys = metric.system();
    let k = sys.controls();
    let base = metric.cone().base_point().coords;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut ext = vec![0.0f64; sys.dim()];
    for _ in 0..256 {
        let mut u: Vec<Vec<f64>> =
            (0..8).map(|_| (0..k).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let len = sys.control_length(&u);
        if len == 0.0 {
            continue;
        }
        u.iter_mut().flatten().for_each(|c| *c *= radius / len);
        let end = sys.integrate_controls(&base, &u, 4)?;
        for (e, v) in ext.iter_mut().zip(&end) {
            *e = e.max(v.abs());
        }
    }
    Ok(ext)
}

/// Box-norm of `p⁻¹q`, used only to rank candidate neighbours.
fn proxy(cone: &TangentCone, extents: &[f64], p: &[f64], q: &[f64]) -> f64 {
    let g: Vec<f64> = cone.embed(&ConePoint::new(p.to_vec())).iter().map(|c| -c).collect();
    let rel = match cone.left_translate(&g, &ConePoint::new(q.to_vec())) {
        Ok(r) => r.coords,
        Err(_) => return f64::INFINITY,
    };
    rel.iter()
        .zip(extents)
        .zip(cone.coord_weights())
        .map(|((c, e), w)| (c.abs() / e.max(1e-300)).powf(1.0 / w as f64))
        .fold(0.0, f64::max)
}

struct PairSolve {
    value: f64,
    converged: bool,
    controls: Vec<Vec<f64>>,
}

fn solve_cone(metric: &ConeMetric, p: &[f64], q: &[f64], opts: &DistanceOptions) -> Result<PairSolve> {
    let r = metric.distance(&ConePoint::new(p.to_vec()), &ConePoint::new(q.to_vec()), opts, None)?;
    Ok(PairSolve { value: r.value, converged: r.status == SolveStatus::Converged, controls: r.controls })
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Net of the cone ball of radius `radius` around the base point.
pub fn sample_ball(metric: &ConeMetric, radius: f64, n: usize, opts: &GhOptions) -> Result<PointedNet> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("net size must be at least 2, got {n}")));
    }
    let cone = metric.cone();
    let base = cone.base_point().coords;
    let extents: Vec<f64> = reachable_extents(metric, radius, opts.seed)?
        .into_iter()
        .map(|e| (e * opts.box_factor).max(1e-12))
        .collect();
    let dopts = DistanceOptions { seed: opts.seed, ..opts.distance.clone() };

    let mut points = vec![base.clone()];
    let mut base_solves: Vec<PairSolve> = Vec::new();
    let mut drawn = 0u64;
    let batch = 4 * n;
    for _attempt in 0..2 {
        let cands = halton_box(&extents, drawn, batch)?;
        drawn += batch as u64;
        let solved: Vec<Result<PairSolve>> = cands.par_iter().map(|c| solve_cone(metric, &base, c, &dopts)).collect();
        for (c, s) in cands.into_iter().zip(solved) {
            let s = s?;
            if points.len() < n && s.converged && s.value <= radius {
                points.push(c);
                base_solves.push(s);
            }
        }
        if points.len() >= n || points.len() >= n / 2 {
            break;
        }
    }
    if points.len() < n / 2 {
        return Err(Error::Infeasible(format!(
            "only {} of {n} net points found in the ball of radius {radius} after {drawn} candidates",
            points.len()
        )));
    }

    let m = points.len();
    let mut matrix = vec![vec![0.0; m]; m];
    let mut geodesics = vec![vec![None; m]; m];
    let mut unconverged = 0usize;
    for (j, s) in base_solves.into_iter().enumerate() {
        matrix[0][j + 1] = s.value;
        matrix[j + 1][0] = s.value;
        geodesics[0][j + 1] = Some(s.controls);
    }
    let pairs: Vec<(usize, usize)> = upper_pairs(m).into_iter().filter(|&(i, _)| i > 0).collect();
    let solved: Vec<Result<PairSolve>> =
        pairs.par_iter().map(|&(i, j)| solve_cone(metric, &points[i], &points[j], &dopts)).collect();
    for (&(i, j), s) in pairs.iter().zip(solved) {
        let s = s?;
        unconverged += usize::from(!s.converged);
        matrix[i][j] = s.value;
        matrix[j][i] = s.value;
        geodesics[i][j] = Some(s.controls);
    }

    let fineness = estimate_fineness(metric, &points, &extents, radius, drawn, opts)?;
    Ok(PointedNet { points, base: 0, radius, matrix, fineness, unconverged_pairs: unconverged, candidates: drawn as usize, geodesics })
}

/// Largest distance from a probe in the ball to its nearest net point.
fn estimate_fineness(
    metric: &ConeMetric,
    points: &[Vec<f64>],
    extents: &[f64],
    radius: f64,
    start: u64,
    opts: &GhOptions,
) -> Result<f64> {
    let cone = metric.cone();
    let base = &points[0];
    let probe_opts = DistanceOptions { starts: 1, seed: opts.seed, ..opts.distance.clone() };
    let probes = halton_box(extents, start, opts.probe_factor * points.len())?;
    let results: Vec<Result<Option<f64>>> = probes
        .par_iter()
        .map(|pr| {
            let to_base = solve_cone(metric, base, pr, &probe_opts)?;
            if !to_base.converged || to_base.value > radius {
                return Ok(None);
            }
            let mut order: Vec<(f64, usize)> =
                points.iter().enumerate().map(|(i, p)| (proxy(cone, extents, p, pr), i)).collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut best = to_base.value;
            for &(_, i) in order.iter().take(opts.probe_neighbours) {
                if i == 0 {
                    continue;
                }
                let s = solve_cone(metric, &points[i], pr, &probe_opts)?;
                if s.converged {
                    best = best.min(s.value);
                }
            }
            Ok(Some(best))
        })
        .collect();
    let mut worst = 0.0f64;
    for r in results {
        if let Some(v) = r? {
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

/// `sample_ball` with the generators of the cone orthonormal.
pub fn sample_ball_cone(c: &TangentCone, radius: f64, n: usize, seed: u64) -> Result<PointedNet> {
    let metric = ConeMetric::new(c)?;
    sample_ball(&metric, radius, n, &GhOptions { seed, ..Default::default() })
}

/// Images `exp(♮_t v)·x(t)` of the net points, with `v` their representatives in `S`.
pub fn correspondence_map(
    nm: &NaturalMap,
    cone: &TangentCone,
    path: &ApproachPath,
    t: f64,
    net: &PointedNet,
    flow: &FlowOptions,
) -> Result<Vec<Result<Vec<f64>>>> {
    let x = path.eval(t)?;
    if x.len() != nm.dim_m() {
        return Err(Error::DimensionMismatch(format!("path in dimension {}, structure in {}", x.len(), nm.dim_m())));
    }
    Ok(net
        .points
        .iter()
        .map(|p| {
            let v = cone.embed(&ConePoint::new(p.clone()));
            nm.flow(&v, t, &x, flow)
        })
        .collect())
}

/// `max |d_A(a_i, a_j) − d_B(b_i, b_j)|` under the index pairing.
pub fn distortion(a: &PointedNet, b: &PointedNet) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("nets of sizes {} and {}", a.len(), b.len())));
    }
    if a.base != b.base {
        return Err(Error::InvalidArgument("pairing must map base point to base point".into()));
    }
    let mut worst = 0.0f64;
    for (ra, rb) in a.matrix.iter().zip(&b.matrix) {
        for (x, y) in ra.iter().zip(rb) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConvergenceRow {
    pub t: f64,
    pub distortion: f64,
    /// Gap between `α_{1/t}(ker ♮_{x(t)})` and the limit subalgebra.
    pub gap: f64,
    pub net_size: usize,
    pub gh_bound: f64,
    pub unconverged_pairs: usize,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub path: String,
    pub radius: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log D` against `log t`.
    pub slope: Option<f64>,
    pub fineness: f64,
    /// Largest increase `D_{k+1} − D_k` past the first row.
    pub max_increase: f64,
    pub limit: Vec<Vec<f64>>,
    pub complement: Vec<usize>,
    pub diagnostics: LimitDiagnostics,
    #[serde(skip)]
    pub net: Option<PointedNet>,
}

impl ConvergenceTable {
    /// `D_{k+1} ≤ D_k + slack` for every `k ≥ 1`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.max_increase <= slack
    }

    pub fn final_distortion(&self) -> f64 {
        self.rows.last().map(|r| r.distortion).unwrap_or(f64::NAN)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Internal(e.to_string());
        w.write_record(["t", "D", "gap", "net_size", "gh_bound"]).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                format!("{:e}", r.t),
                format!("{:e}", r.distortion),
                format!("{:e}", r.gap),
                r.net_size.to_string(),
                format!("{:e}", r.gh_bound),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
    }
}

/// `t_k = 0.2·2^{−k}`, `k = 0..rows`.
pub fn default_schedule(rows: usize) -> Vec<f64> {
    (0..rows).map(|k| 0.2 * 0.5f64.powi(k as i32)).collect()
}

/// Distortions below this are round-off and excluded from the slope fit.
pub const DISTORTION_FLOOR: f64 = 1e-8;

fn loglog_slope(rows: &[ConvergenceRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.distortion > DISTORTION_FLOOR && r.distortion.is_finite()).map(|r| (r.t.ln(), r.distortion.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Manifold net at scale `t`: pairwise `d_1/t` between chart images, warm-started
/// from the cone geodesics.
fn manifold_row(
    metric: &ManifoldMetric,
    images: &[Result<Vec<f64>>],
    net: &PointedNet,
    t: f64,
    opts: &GhOptions,
) -> Result<(PointedNet, usize)> {
    let m = net.len();
    let dopts = DistanceOptions { starts: opts.manifold_starts.max(1), seed: opts.seed, ..opts.distance.clone() };
    let pairs = upper_pairs(m);
    let solved: Vec<Result<Option<(f64, bool)>>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (Ok(a), Ok(b)) = (&images[i], &images[j]) else { return Ok(None) };
            let warm: Option<Vec<Vec<f64>>> =
                net.geodesic(i, j).map(|g| g.iter().map(|r| r.iter().map(|c| c * t).collect()).collect());
            let r = metric.distance(a, b, t, &dopts, warm.as_deref())?;
            Ok(Some((r.value, r.status == SolveStatus::Converged)))
        })
        .collect();
    let mut matrix = vec![vec![0.0; m]; m];
    let mut unconverged = 0usize;
    for (&(i, j), s) in pairs.iter().zip(solved) {
        match s? {
            Some((v, ok)) => {
                unconverged += usize::from(!ok);
                matrix[i][j] = v;
                matrix[j][i] = v;
            }
            None => {
                unconverged += 1;
                matrix[i][j] = f64::NAN;
                matrix[j][i] = f64::NAN;
            }
        }
    }
    let points = images.iter().map(|r| r.as_ref().cloned().unwrap_or_default()).collect();
    let row = PointedNet::from_matrix(points, net.base, net.radius, matrix)?;
    Ok((row, unconverged))
}

/// Distortion of the flow chart between the cone ball and the rescaled manifold ball
/// along a schedule of scales.
pub fn convergence_study(
    nm: &NaturalMap,
    s: &SubRiemannianStructure,
    path: &ApproachPath,
    radius: f64,
    n: usize,
    schedule: &[f64],
    opts: &GhOptions,
) -> Result<ConvergenceTable> {
    if schedule.is_empty() || schedule.windows(2).any(|w| !(w[1] < w[0])) || schedule.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument("schedule must be positive and strictly decreasing".into()));
    }
    let (h, diagnostics) = limit_along_path(nm, path, DEFAULT_RANK_TOL, DEFAULT_CAUCHY_TOL)?;
    let cone = TangentCone::with_codim(nm.algebra(), &h, nm.dim_m())?;
    let cone_metric = ConeMetric::with_gram(&cone, s.gram())?;
    let net = sample_ball(&cone_metric, radius, n, opts)?;
    let manifold = ManifoldMetric::new(s, nm)?;
    let total_pairs = net.len() * (net.len() - 1) / 2;

    let mut rows = Vec::with_capacity(schedule.len());
    for &t in schedule {
        let images = correspondence_map(nm, &cone, path, t, &net, &opts.flow)?;
        let x = path.eval(t)?;
        let gap = gap_of(nm, &x, t, &h)?;
        let (mnet, unconverged) = manifold_row(&manifold, &images, &net, t, opts)?;
        let d = distortion(&net, &mnet)?;
        let d = if d.is_nan() || mnet.matrix.iter().flatten().any(|v| v.is_nan()) { f64::INFINITY } else { d };
        rows.push(ConvergenceRow {
            t,
            distortion: d,
            gap,
            net_size: net.len(),
            gh_bound: d / 2.0 + net.fineness,
            unconverged_pairs: unconverged,
            flagged: unconverged as f64 > UNCONVERGED_FLAG * total_pairs as f64,
        });
    }
    let max_increase = rows
        .windows(2)
        .skip(1)
        .map(|w| w[1].distortion - w[0].distortion)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    Ok(ConvergenceTable {
        path: path.name.clone(),
        radius,
        slope: loglog_slope(&rows),
        fineness: net.fineness,
        max_increase,
        limit: h.basis_vectors(),
        complement: cone.complement().to_vec(),
        diagnostics,
        rows,
        net: Some(net),
    })
}

fn gap_of(nm: &NaturalMap, x: &[f64], t: f64, h: &Subspace) -> Result<f64> {
    let k = dilated_kernel(nm, x, t, DEFAULT_RANK_TOL)?;
    if k.dim() != h.dim() {
        return Ok(1.0);
    }
    gap_distance(&k, h)
}

/// Euclidean distance matrix, used for closed-form checks.
pub fn euclidean_matrix(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            points
                .iter()
                .map(|q| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::Schedule;
    use crate::metrics::SOLVER_TOL;
    use crate::vfields::build_natural_map;

    fn grushin_origin_cone() -> (NaturalMap, TangentCone) {
        let nm = build_natural_map(&SubRiemannianStructure::grushin(2)).unwrap();
        let h = Subspace::span(3, &[vec![0.0, 1.0, 0.0]], 1e-9).unwrap();
        let c = crate::cone::build_cone(nm.algebra(), &h).unwrap();
        (nm, c)
    }

    #[test]
    fn halton_is_low_discrepancy() {
        let pts = halton_box(&[1.0, 1.0], 0, 256).unwrap();
        let q = pts.iter().filter(|p| p[0] > 0.0 && p[1] > 0.0).count();
        assert!((q as i64 - 64).abs() <= 4);
    }

    #[test]
    fn two_point_net() {
        let (_, c) = grushin_origin_cone();
        let net = sample_ball_cone(&c, 1.0, 2, 1).unwrap();
        assert_eq!(net.len(), 2);
        assert_eq!(net.matrix.len(), 2);
        assert_eq!(net.matrix[0][0], 0.0);
        assert!(net.matrix[0][1] <= 1.0 + SOLVER_TOL);
    }

    #[test]
    fn chart_on_grushin_flows() {
        let (nm, c) = grushin_origin_cone();
        let path = ApproachPath::new("offset", &["0.3".into(), "-0.2".into()], Schedule::default()).unwrap();
        let t = 0.1;
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let net = PointedNet::from_matrix(pts, 0, 1.0, vec![vec![0.0; 3]; 3]).unwrap();
        let img = correspondence_map(&nm, &c, &path, t, &net, &FlowOptions::default()).unwrap();
        let img: Vec<Vec<f64>> = img.into_iter().map(|r| r.unwrap()).collect();
        assert!((img[0][0] - 0.3).abs() < 1e-12 && (img[0][1] + 0.2).abs() < 1e-12);
        assert!((img[1][0] - 0.4).abs() < 1e-9 && (img[1][1] + 0.2).abs() < 1e-9);
        assert!((img[2][0] - 0.3).abs() < 1e-9 && (img[2][1] - (-0.2 + t * t)).abs() < 1e-9);
    }

    #[test]
    fn distortion_of_scaled_net() {
        let pts = vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 0.8]];
        let m = euclidean_matrix(&pts);
        let a = PointedNet::from_matrix(pts.clone(), 0, 1.0, m.clone()).unwrap();
        assert_eq!(distortion(&a, &a).unwrap(), 0.0);
        let lam = 1.5;
        let scaled: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|v| v * lam).collect()).collect();
        let b = PointedNet::from_matrix(pts, 0, 1.0, scaled).unwrap();
        let d = distortion(&a, &b).unwrap();
        assert!((d - (lam - 1.0) * a.max_distance()).abs() < 1e-12);
    }

    #[test]
    fn mismatched_nets_rejected() {
        let a = PointedNet::from_matrix(vec![vec![0.0]; 2], 0, 1.0, vec![vec![0.0; 2]; 2]).unwrap();
        let b = PointedNet::from_matrix(vec![vec![0.0]; 3], 0, 1.0, vec![vec![0.0; 3]; 3]).unwrap();
        assert!(distortion(&a, &b).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let rows: Vec<ConvergenceRow> = default_schedule(5)
            .into_iter()
            .map(|t| ConvergenceRow {
                t,
                distortion: 3.0 * t * t,
                gap: 0.0,
                net_size: 2,
                gh_bound: 0.0,
                unconverged_pairs: 0,
                flagged: false,
            })
            .collect();
        assert!((loglog_slope(&rows).unwrap() - 2.0).abs() < 1e-12);
    }
}
