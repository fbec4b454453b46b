//! The acceptance suite on the built-in structures, one record per criterion.

use std::time::Instant;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cone::{build_cone, compute_rx, ConePoint, TangentCone};
use crate::error::{Error, Result};
use crate::gh::{convergence_study, default_schedule, GhOptions};
use crate::grassmann::{
    conjugate_subspace, dilate_subspace, gap_distance, graded_limit_fixed, kernel, limit_along_path, ApproachPath,
    Schedule, Subspace, DEFAULT_CAUCHY_TOL, DEFAULT_RANK_TOL,
};
use crate::liealg::GradedLieAlgebra;
use crate::metrics::{
    comparison_ratio_scan, ComparisonOptions, ConeMetric, DistanceOptions, ManifoldMetric, SOLVER_TOL,
};
use crate::vfields::{build_natural_map, FloatField, FloatPoly, FlowOptions, NaturalMap, SubRiemannianStructure, VectorField};

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} [{}] {}: {} ({:.2} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

pub const NAMES: [&str; 11] = [
    "Grushin tangent-cone classification",
    "distinguished subspace consistency",
    "limits are subalgebras",
    "conjugation stability",
    "algebra exactness",
    "flow-composition decay",
    "closed-form flow regression",
    "cone geometry",
    "pointed GH convergence at desk scale",
    "quasi-norm/distance comparison",
    "scaling identities",
];

type Outcome = Result<(bool, String)>;

/// Runs criterion `id` (1 to 11).
pub fn run_criterion(id: u32) -> CriterionResult {
    let start = Instant::now();
    let mut limits = Vec::new();
    let (outcome, budget): (Outcome, Option<f64>) = match id {
        1 => (criterion_classification(&mut limits), Some(10.0)),
        2 => (criterion_rx(&mut limits), Some(5.0)),
        3 => (criterion_subalgebra(), None),
        4 => (criterion_conjugation(), None),
        5 => (criterion_exactness(), Some(5.0)),
        6 => (criterion_composition(), Some(30.0)),
        7 => (criterion_closed_form(), None),
        8 => (criterion_cone_geometry(), None),
        9 => (criterion_gh(), Some(300.0)),
        10 => (criterion_comparison(), None),
        11 => (criterion_scaling(), None),
        _ => (Err(Error::InvalidArgument(format!("no criterion {id}"))), None),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match outcome {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(b) = budget {
        if seconds > b {
            passed = false;
            detail.push_str(&format!("; runtime over {b} s"));
        }
    }
    let name = NAMES.get(id.wrapping_sub(1) as usize).copied().unwrap_or("unknown").to_string();
    CriterionResult { id, name, passed, detail, seconds }
}

pub fn run_all() -> Vec<CriterionResult> {
    (1..=11).map(run_criterion).collect()
}

fn sched() -> Schedule {
    Schedule::default()
}

fn path(name: &str, comps: &[&str]) -> Result<ApproachPath> {
    let c: Vec<String> = comps.iter().map(|s| s.to_string()).collect();
    ApproachPath::new(name, &c, sched())
}

/// `♮_{x,0}` of the Grushin realization in the classes `[∂x]`, `[x^i ∂y]`, `i < N`.
pub fn grushin_gr_matrix(nm: &NaturalMap, n: u32) -> Result<DMatrix<f64>> {
    let alg = nm.algebra();
    let mut a = DMatrix::zeros(n as usize + 1, alg.dim());
    for (j, f) in nm.realization().iter().enumerate() {
        let w = alg.weights()[j];
        let comps = f.components();
        for (e, c) in comps[0].terms() {
            if e.iter().any(|&p| p != 0) || w != 1 {
                return Err(Error::Internal("unexpected x-component in Grushin realization".into()));
            }
            a[(0, j)] = c.to_f64().unwrap_or(f64::NAN);
        }
        for (e, c) in comps[1].terms() {
            let i = e[0];
            if e[1] != 0 || i + w != n {
                return Err(Error::Internal("Grushin realization is not homogeneous".into()));
            }
            a[(1 + i as usize, j)] = c.to_f64().unwrap_or(f64::NAN);
        }
    }
    Ok(a)
}

/// Preimage of the limit subspace: `λ[x^{i−1}∂y] − [x^i∂y]` for finite `λ`,
/// `[x^i∂y]`, `i ≤ N−2`, otherwise.
pub fn grushin_expected(nm: &NaturalMap, n: u32, lambda: Option<f64>) -> Result<Subspace> {
    let a = grushin_gr_matrix(nm, n)?;
    let rows = n as usize + 1;
    let mut gens = Vec::new();
    match lambda {
        Some(l) => {
            for i in 1..n as usize {
                let mut v = vec![0.0; rows];
                v[i] = l; // class [x^{i-1}∂y] sits at index 1 + (i - 1)
                v[1 + i] = -1.0;
                gens.push(v);
            }
        }
        None => {
            for i in 0..(n as usize - 1) {
                let mut v = vec![0.0; rows];
                v[1 + i] = 1.0;
                gens.push(v);
            }
        }
    }
    let l = Subspace::span(rows, &gens, 1e-12)?;
    let p = DMatrix::identity(rows, rows) - l.basis() * l.basis().transpose();
    Ok(kernel(&(p * a), 1e-9))
}

fn criterion_classification(limits: &mut Vec<(GradedLieAlgebra, Subspace)>) -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in [2u32, 3] {
        let nm = build_natural_map(&SubRiemannianStructure::grushin(n))?;
        let mut run = |comps: &[&str], lambda: Option<f64>, schedule: Schedule| -> Result<()> {
            let c: Vec<String> = comps.iter().map(|s| s.to_string()).collect();
            let p = ApproachPath::new("p", &c, schedule)?;
            let (h, _) = limit_along_path(&nm, &p, DEFAULT_RANK_TOL, DEFAULT_CAUCHY_TOL)?;
            let expect = grushin_expected(&nm, n, lambda)?;
            worst = worst.max(gap_distance(&h, &expect)?);
            limits.push((nm.algebra().clone(), h));
            cases += 1;
            Ok(())
        };
        for lambda in [0.0, 1.0, -1.0, 2.0] {
            let comp = format!("{lambda}*t");
            run(&[comp.as_str(), "0"], Some(lambda), sched())?;
        }
        // Gaps shrink like sqrt(t) here, so the ratio is taken small.
        run(&["sqrt(t)", "0"], None, Schedule { t0: 0.1, rho: 0.1, steps: 30 })?;
    }
    Ok((worst <= 1e-6, format!("{cases} paths, max gap {worst:.2e} (tol 1e-6)")))
}

fn grid5() -> Vec<Vec<f64>> {
    let pts: Vec<f64> = (0..5).map(|i| -1.0 + 0.5 * i as f64).collect();
    pts.iter().flat_map(|&a| pts.iter().map(move |&b| vec![a, b])).collect()
}

fn criterion_rx(limits: &mut Vec<(GradedLieAlgebra, Subspace)>) -> Outcome {
    let mut worst = 0.0f64;
    for n in [2u32, 3] {
        let nm = build_natural_map(&SubRiemannianStructure::grushin(n))?;
        for x in grid5() {
            let fixed = graded_limit_fixed(&kernel(&nm.natural_at(&x, 1.0)?, DEFAULT_RANK_TOL), nm.algebra().weights())?;
            let rx = compute_rx(&nm, &x)?;
            worst = worst.max(gap_distance(&fixed, &rx.subspace)?);
            limits.push((nm.algebra().clone(), fixed));
        }
    }
    Ok((worst <= 1e-8, format!("50 grid points, max gap {worst:.2e} (tol 1e-8)")))
}

fn criterion_subalgebra() -> Outcome {
    let mut limits = Vec::new();
    criterion_classification(&mut limits)?;
    criterion_rx(&mut limits)?;
    let mut worst = 0.0f64;
    for (alg, s) in &limits {
        worst = worst.max(alg.is_subalgebra(s, 1e-8)?.residual);
    }
    Ok((worst <= 1e-8, format!("{} limits, max residual {worst:.2e} (tol 1e-8)", limits.len())))
}

fn criterion_conjugation() -> Outcome {
    let nm = build_natural_map(&SubRiemannianStructure::grushin(2))?;
    let alg = nm.algebra();
    let mut worst = 0.0f64;
    for lambda in [0.0, 1.0, -1.0, 2.0] {
        let base = path("line", &[&format!("{lambda}*t"), "0"])?;
        let (h, _) = limit_along_path(&nm, &base, DEFAULT_RANK_TOL, DEFAULT_CAUCHY_TOL)?;
        for gi in [0usize, 1] {
            let g = alg.basis::<f64>(gi);
            // The shifted path is evaluated pointwise, so it is limited along the schedule by hand.
            let flow = FlowOptions::default();
            let mut prev: Option<Subspace> = None;
            let mut last_gap = f64::INFINITY;
            let mut limit = None;
            for k in 0..=base.schedule.steps {
                let t = base.schedule.t(k);
                let x = base.eval(t)?;
                let y = nm.flow(&g, t, &x, &flow)?;
                let s = dilate_subspace(1.0 / t, &kernel(&nm.natural_at(&y, 1.0)?, DEFAULT_RANK_TOL), alg.weights())?;
                if let Some(p) = &prev {
                    last_gap = gap_distance(p, &s)?;
                }
                prev = Some(s.clone());
                limit = Some(s);
                if last_gap < DEFAULT_CAUCHY_TOL {
                    break;
                }
            }
            let limit = limit.ok_or_else(|| Error::Internal("empty schedule".into()))?;
            let expect = conjugate_subspace(alg, &g, &h)?;
            worst = worst.max(gap_distance(&limit, &expect)?);
        }
    }
    Ok((worst <= 1e-5, format!("8 shifted paths, max gap {worst:.2e} (tol 1e-5)")))
}

fn rand_rational(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(BigInt::from(rng.gen_range(-4i64..=4)), BigInt::from(rng.gen_range(1i64..=3)))
}

fn criterion_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let algebras = [GradedLieAlgebra::heisenberg(), GradedLieAlgebra::free_nilpotent(2, &[1, 1], 3)?];
    let mut failures = 0;
    let mut checks = 0;
    for alg in &algebras {
        for _ in 0..100 {
            let mut r = || (0..alg.dim()).map(|_| rand_rational(&mut rng)).collect::<Vec<_>>();
            let (u, v, w) = (r(), r(), r());
            let lam = BigRational::new(BigInt::from(rng.gen_range(1i64..=5)), BigInt::from(rng.gen_range(1i64..=4)));
            let assoc = alg.bch_product(&alg.bch_product(&u, &v)?, &w)? == alg.bch_product(&u, &alg.bch_product(&v, &w)?)?;
            let du = alg.dilate_exact(&lam, &u)?;
            let dv = alg.dilate_exact(&lam, &v)?;
            let dil_group = alg.dilate_exact(&lam, &alg.bch_product(&u, &v)?)? == alg.bch_product(&du, &dv)?;
            let dil_bracket = alg.dilate_exact(&lam, &alg.bracket(&u, &v)?)? == alg.bracket(&du, &dv)?;
            let ad = |x: &[BigRational]| alg.adjoint_conjugate(&w, x);
            let ad_bracket = ad(&alg.bracket(&u, &v)?)? == alg.bracket(&ad(&u)?, &ad(&v)?)?;
            for ok in [assoc, dil_group, dil_bracket, ad_bracket] {
                checks += 1;
                failures += usize::from(!ok);
            }
        }
    }
    Ok((failures == 0, format!("{checks} exact identities on Heisenberg and free step 3, {failures} failures")))
}

/// `∂x + y∂y, x∂y` of depth 2: its fields generate a solvable, non-nilpotent algebra.
pub fn solvable_control() -> Result<SubRiemannianStructure> {
    SubRiemannianStructure::new(
        vec![(VectorField::parse(&["1", "x1"])?, 1), (VectorField::parse(&["0", "x0"])?, 1)],
        2,
    )
}

/// Composition defect `|exp(♮_t v)exp(♮_t w)x − exp(♮_t(v·w))x|` over `t = 2^{-3..-10}`:
/// returns the smallest fitted log-log slope and the largest defect seen.
fn composition_slopes(s: &SubRiemannianStructure, scale: f64, seed: u64) -> Result<(f64, f64)> {
    let nm = build_natural_map(s)?;
    let alg = nm.algebra();
    let opts = FlowOptions { rtol: 1e-14, atol: 1e-16, ..FlowOptions::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slope = f64::INFINITY;
    let mut max_defect = 0.0f64;
    for _ in 0..20 {
        let v: Vec<f64> = (0..alg.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..alg.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..nm.dim_m()).map(|_| rng.gen_range(-scale..scale)).collect();
        let vw = alg.bch_product(&v, &w)?;
        let mut pts = Vec::new();
        for k in 3..=10 {
            let t = 0.5f64.powi(k);
            let lhs = nm.flow(&v, t, &nm.flow(&w, t, &x, &opts)?, &opts)?;
            let rhs = nm.flow(&vw, t, &x, &opts)?;
            let d = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            max_defect = max_defect.max(d);
            if d > COMPOSITION_FLOOR {
                pts.push((t.ln(), d.ln()));
            }
        }
        if pts.len() >= 3 {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            min_slope = min_slope.min(sxy / sxx);
        }
    }
    Ok((min_slope, max_defect))
}

/// Defects below this are integration round-off.
const COMPOSITION_FLOOR: f64 = 1e-13;

fn criterion_composition() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let cases: [(&str, SubRiemannianStructure, f64); 4] = [
        ("grushin2", SubRiemannianStructure::grushin(2), 1.0),
        ("heisenberg", SubRiemannianStructure::heisenberg(), 1.0),
        ("martinet", SubRiemannianStructure::martinet(), 1.0),
        ("solvable control", solvable_control()?, 0.3),
    ];
    for (i, (name, s, scale)) in cases.iter().enumerate() {
        let need = s.depth() as f64 + 0.5;
        let (slope, defect) = composition_slopes(s, *scale, 60 + i as u64)?;
        if slope.is_finite() {
            ok &= slope >= need;
            parts.push(format!("{name} min slope {slope:.2} (need {need})"));
        } else {
            // Realizations of nilpotent algebras compose exactly.
            ok &= defect <= COMPOSITION_FLOOR;
            parts.push(format!("{name} exact (max defect {defect:.1e})"));
        }
    }
    Ok((ok, parts.join(", ")))
}

/// `exp(μ∂x + Σλ_i x^i ∂y)·(x,y)` in closed form.
fn grushin_flow_exact(mu: f64, lambdas: &[f64], x: f64, y: f64) -> (f64, f64) {
    let mut dy = 0.0;
    for (i, l) in lambdas.iter().enumerate() {
        let p = i as i32 + 1;
        let term = if mu.abs() < 1e-12 {
            x.powi(i as i32)
        } else {
            ((x + mu).powi(p) - x.powi(p)) / (p as f64 * mu)
        };
        dy += l * term;
    }
    (x + mu, y + dy)
}

fn criterion_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let n = 2 + k % 2;
        let mu: f64 = rng.gen_range(-2.0..2.0);
        let lambdas: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (x, y) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let ycomp = FloatPoly::from_terms(lambdas.iter().enumerate().map(|(i, &l)| (vec![i as u32, 0], l)).collect());
        let field = FloatField::new(vec![FloatPoly::from_terms(vec![(vec![0, 0], mu)]), ycomp]);
        let got = field.flow(&[x, y], &FlowOptions::default())?;
        let (ex, ey) = grushin_flow_exact(mu, &lambdas, x, y);
        worst = worst.max((got[0] - ex).abs()).max((got[1] - ey).abs());
    }
    Ok((worst <= 1e-8, format!("100 random flows, max error {worst:.2e} (tol 1e-8)")))
}

fn frame_error(c: &TangentCone, expected: impl Fn(&[f64]) -> Vec<Vec<f64>>) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p: Vec<f64> = (0..c.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let got = c.horizontal_frame(&ConePoint::new(p.clone()))?;
        for (g, e) in got.iter().zip(expected(&p)) {
            for (a, b) in g.iter().zip(&e) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}

fn criterion_cone_geometry() -> Outcome {
    let nm = build_natural_map(&SubRiemannianStructure::grushin(2))?;
    let alg = nm.algebra();
    let origin = build_cone(alg, &Subspace::span(3, &[vec![0.0, 1.0, 0.0]], 1e-12)?)?;
    let flat = build_cone(alg, &Subspace::span(3, &[vec![0.0, 0.0, 1.0]], 1e-12)?)?;
    let e_origin = frame_error(&origin, |p| vec![vec![1.0, 0.0], vec![0.0, p[0]]])?;
    let e_flat = frame_error(&flat, |_| vec![vec![1.0, 0.0], vec![0.0, 1.0]])?;

    let heis_alg = GradedLieAlgebra::heisenberg();
    let heis = build_cone(&heis_alg, &Subspace::zero(3, 1e-12))?;
    let hm = ConeMetric::new(&heis)?;
    let opts = DistanceOptions::default();
    let d_e1 = hm.distance(&heis.base_point(), &ConePoint::new(vec![1.0, 0.0, 0.0]), &opts, None)?.value;

    let mut homog = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for cone in [&origin, &heis] {
        let m = ConeMetric::new(cone)?;
        let w = cone.coord_weights();
        for _ in 0..3 {
            let p: Vec<f64> = (0..cone.dim()).map(|_| rng.gen_range(-0.6..0.6)).collect();
            let d = m.distance(&cone.base_point(), &ConePoint::new(p.clone()), &opts, None)?.value;
            for lam in [0.5, 2.0] {
                let q: Vec<f64> = p.iter().zip(&w).map(|(c, &wi)| c * f64::powi(lam, wi as i32)).collect();
                let dq = m.distance(&cone.base_point(), &ConePoint::new(q), &opts, None)?.value;
                homog = homog.max((dq - lam * d).abs());
            }
        }
    }
    let ok = e_origin <= 1e-10 && e_flat <= 1e-10 && (d_e1 - 1.0).abs() <= 1e-3 && homog <= 2.0 * SOLVER_TOL;
    Ok((
        ok,
        format!(
            "origin frame err {e_origin:.1e}, flat frame err {e_flat:.1e}, Heisenberg d(0,e1) = {d_e1:.6}, homogeneity defect {homog:.1e} (tol {:.0e})",
            2.0 * SOLVER_TOL
        ),
    ))
}

/// Studies run for the convergence criterion: name, structure, path, self-similar.
pub fn gh_studies() -> Vec<(&'static str, SubRiemannianStructure, Vec<&'static str>, bool)> {
    vec![
        ("grushin2 (t,0)", SubRiemannianStructure::grushin(2), vec!["t", "0"], false),
        ("grushin2 origin", SubRiemannianStructure::grushin(2), vec!["0", "0"], true),
        ("grushin3 (t,0)", SubRiemannianStructure::grushin(3), vec!["t", "0"], false),
        ("grushin3 (1,0)", SubRiemannianStructure::grushin(3), vec!["1", "0"], false),
        ("heisenberg", SubRiemannianStructure::heisenberg(), vec!["0.5", "-0.3", "0.2"], false),
    ]
}

fn criterion_gh() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let radius = 1.0;
    for (name, s, comps, self_similar) in gh_studies() {
        let nm = build_natural_map(&s)?;
        let p = path(name, &comps)?;
        let table = convergence_study(&nm, &s, &p, radius, 30, &default_schedule(8), &GhOptions::default())?;
        let flagged = table.rows.iter().any(|r| r.flagged);
        let pass = if self_similar {
            table.rows.iter().all(|r| r.distortion <= 3.0 * SOLVER_TOL)
        } else {
            table.is_monotone(2.0 * SOLVER_TOL) && table.final_distortion() < 0.05 * 2.0 * radius
        } && !flagged;
        ok &= pass;
        parts.push(format!(
            "{name}: D {:.1e} -> {:.1e}{}",
            table.rows[0].distortion,
            table.final_distortion(),
            if pass { "" } else { " FAILED" }
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn criterion_comparison() -> Outcome {
    let e = SubRiemannianStructure::euclidean(2);
    let enm = build_natural_map(&e)?;
    let opts = ComparisonOptions { samples: 4, ..Default::default() };
    let er = comparison_ratio_scan(&enm, &e, &[(-1.0, 1.0), (-1.0, 1.0)], &opts)?;
    let e_dev = er.samples.iter().map(|s| (s.ratio - 1.0).abs()).fold(0.0, f64::max);

    let g = SubRiemannianStructure::grushin(2);
    let gnm = build_natural_map(&g)?;
    let gr = comparison_ratio_scan(&gnm, &g, &[(-0.5, 0.5), (-0.5, 0.5)], &ComparisonOptions::default())?;
    let ok = e_dev <= 1e-6 && !er.samples.is_empty() && gr.c_hat.is_finite() && gr.drift <= 0.1;
    Ok((
        ok,
        format!(
            "Euclidean max |ratio-1| {e_dev:.1e}; Grushin C = {:.3}, drift {:.1}% over the finest decades ({} samples, {} excluded)",
            gr.c_hat,
            100.0 * gr.drift,
            gr.samples.len(),
            gr.excluded_degenerate + gr.excluded_unconverged
        ),
    ))
}

fn criterion_scaling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut kernel_gap = 0.0f64;
    for s in [
        SubRiemannianStructure::grushin(2),
        SubRiemannianStructure::grushin(3),
        SubRiemannianStructure::heisenberg(),
        SubRiemannianStructure::martinet(),
        SubRiemannianStructure::euclidean(3),
    ] {
        let nm = build_natural_map(&s)?;
        for _ in 0..10 {
            let x: Vec<f64> = (0..nm.dim_m()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let t: f64 = 10f64.powf(rng.gen_range(-3.0..0.5));
            let direct = kernel(&nm.natural_at(&x, t)?, DEFAULT_RANK_TOL);
            let dilated = dilate_subspace(1.0 / t, &kernel(&nm.natural_at(&x, 1.0)?, DEFAULT_RANK_TOL), nm.algebra().weights())?;
            kernel_gap = kernel_gap.max(gap_distance(&direct, &dilated)?);
        }
    }

    let g = SubRiemannianStructure::grushin(2);
    let gnm = build_natural_map(&g)?;
    let m = ManifoldMetric::new(&g, &gnm)?;
    let opts = DistanceOptions { starts: 2, ..Default::default() };
    let (x, y) = ([0.1, -0.2], [0.5, 0.3]);
    let d1 = m.distance(&x, &y, 1.0, &opts, None)?.value;
    let mut exact = true;
    for t in [0.5, 2.0] {
        exact &= m.distance(&x, &y, t, &opts, None)?.value == d1 / t;
    }

    let mut homog = 0.0f64;
    for alg in [GradedLieAlgebra::heisenberg(), GradedLieAlgebra::free_nilpotent(2, &[1, 1], 3)?] {
        for _ in 0..20 {
            let v: Vec<f64> = (0..alg.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let q = alg.quasi_norm(&v)?;
            for lam in [0.5, 2.0, 10.0] {
                let ql = alg.quasi_norm(&alg.dilate(lam, &v)?)?;
                homog = homog.max((ql - lam * q).abs() / (lam * q).max(1e-300));
            }
        }
    }
    let ok = kernel_gap <= 1e-10 && exact && homog <= 1e-12;
    Ok((
        ok,
        format!("kernel dilation gap {kernel_gap:.1e}, d_t = d_1/t {}, quasi-norm homogeneity rel. defect {homog:.1e}", if exact { "exact" } else { "violated" }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_removable_singularity() {
        let (x, y) = grushin_flow_exact(0.0, &[1.0, 2.0], 0.5, 0.0);
        assert_eq!(x, 0.5);
        assert!((y - (1.0 + 2.0 * 0.5)).abs() < 1e-15);
        let (_, y2) = grushin_flow_exact(1e-7, &[1.0, 2.0], 0.5, 0.0);
        assert!((y2 - y).abs() < 1e-6);
    }

    #[test]
    fn grushin2_expected_limit() {
        let nm = build_natural_map(&SubRiemannianStructure::grushin(2)).unwrap();
        let s = grushin_expected(&nm, 2, Some(1.5)).unwrap();
        let want = Subspace::span(3, &[vec![0.0, 1.0, -1.5]], 1e-12).unwrap();
        assert!(gap_distance(&s, &want).unwrap() < 1e-12);
        let inf = grushin_expected(&nm, 2, None).unwrap();
        let want = Subspace::span(3, &[vec![0.0, 0.0, 1.0]], 1e-12).unwrap();
        assert!(gap_distance(&inf, &want).unwrap() < 1e-12);
    }
}
