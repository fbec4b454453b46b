//! Scenario files: JSON in, validated structures out, every problem located by a
//! JSON pointer.

use std::fmt;

use nalgebra::DMatrix;
use serde_json::{Map, Value};

use crate::error::Error;
use crate::grassmann::{ApproachPath, Schedule, DEFAULT_CAUCHY_TOL, DEFAULT_RANK_TOL};
use crate::metrics::ENDPOINT_TOL;
use crate::vfields::{Polynomial, SubRiemannianStructure, VectorField};

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ConfigIssue {
    pub pointer: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let at = if issue.pointer.is_empty() { "/" } else { &issue.pointer };
            write!(f, "{at}: {}", issue.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    pub rank: f64,
    pub cauchy: f64,
    pub endpoint: f64,
    pub subalgebra: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rank: DEFAULT_RANK_TOL, cauchy: DEFAULT_CAUCHY_TOL, endpoint: ENDPOINT_TOL, subalgebra: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidateStudy {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Default for ValidateStudy {
    fn default() -> Self {
        ValidateStudy { lo: -1.0, hi: 1.0, steps: 5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairStudy {
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
    pub t: f64,
    pub starts: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GhStudy {
    pub path: Option<String>,
    pub radius: f64,
    pub n: usize,
    pub rows: usize,
}

impl Default for GhStudy {
    fn default() -> Self {
        GhStudy { path: None, radius: 1.0, n: 30, rows: 8 }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Studies {
    pub validate: ValidateStudy,
    pub distance: Option<PairStudy>,
    pub quasinorm: Option<PairStudy>,
    pub gh: GhStudy,
}

#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub name: String,
    pub variables: Vec<String>,
    pub structure: SubRiemannianStructure,
    pub paths: Vec<ApproachPath>,
    pub points: Vec<Vec<f64>>,
    pub studies: Studies,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl ScenarioConfig {
    pub fn path(&self, name: &str) -> Option<&ApproachPath> {
        self.paths.iter().find(|p| p.name == name)
    }
}

struct Checker {
    issues: Vec<ConfigIssue>,
}

impl Checker {
    fn push(&mut self, pointer: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue { pointer: pointer.to_string(), message: message.into() });
    }

    fn object<'a>(&mut self, v: &'a Value, at: &str) -> Option<&'a Map<String, Value>> {
        let o = v.as_object();
        if o.is_none() {
            self.push(at, "expected an object");
        }
        o
    }

    fn array<'a>(&mut self, v: &'a Value, at: &str) -> Option<&'a Vec<Value>> {
        let a = v.as_array();
        if a.is_none() {
            self.push(at, "expected an array");
        }
        a
    }

    fn required<'a>(&mut self, o: &'a Map<String, Value>, key: &str, at: &str) -> Option<&'a Value> {
        let v = o.get(key);
        if v.is_none() {
            self.push(&format!("{at}/{key}"), "missing required field");
        }
        v
    }

    fn number(&mut self, v: &Value, at: &str) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.push(at, "expected a finite number");
                None
            }
        }
    }

    fn positive(&mut self, v: &Value, at: &str) -> Option<f64> {
        let x = self.number(v, at)?;
        if x <= 0.0 {
            self.push(at, format!("must be positive, got {x}"));
            return None;
        }
        Some(x)
    }

    fn integer(&mut self, v: &Value, at: &str, min: u64) -> Option<u64> {
        match v.as_u64() {
            Some(x) if x >= min => Some(x),
            Some(x) => {
                self.push(at, format!("must be at least {min}, got {x}"));
                None
            }
            None => {
                self.push(at, "expected a non-negative integer");
                None
            }
        }
    }

    fn string<'a>(&mut self, v: &'a Value, at: &str) -> Option<&'a str> {
        let s = v.as_str();
        if s.is_none() {
            self.push(at, "expected a string");
        }
        s
    }

    fn vector(&mut self, v: &Value, at: &str, len: usize) -> Option<Vec<f64>> {
        let a = self.array(v, at)?;
        if a.len() != len {
            self.push(at, format!("expected {len} coordinates, got {}", a.len()));
            return None;
        }
        let out: Vec<Option<f64>> = a.iter().enumerate().map(|(i, x)| self.number(x, &format!("{at}/{i}"))).collect();
        out.into_iter().collect()
    }

    fn strings(&mut self, v: &Value, at: &str, len: usize) -> Option<Vec<String>> {
        let a = self.array(v, at)?;
        if a.len() != len {
            self.push(at, format!("expected {len} entries, got {}", a.len()));
            return None;
        }
        let out: Vec<Option<String>> =
            a.iter().enumerate().map(|(i, x)| self.string(x, &format!("{at}/{i}")).map(str::to_string)).collect();
        out.into_iter().collect()
    }
}

fn parse_structure(c: &mut Checker, v: &Value) -> Option<(SubRiemannianStructure, Vec<String>, usize)> {
    let at = "/structure";
    let o = c.object(v, at)?;
    let dim = c.required(o, "dim", at).and_then(|d| c.integer(d, "/structure/dim", 1));
    let depth = c.required(o, "depth", at).and_then(|d| c.integer(d, "/structure/depth", 1));
    let dim = dim? as usize;
    let variables = match o.get("variables") {
        Some(v) => c.strings(v, "/structure/variables", dim)?,
        None => (0..dim).map(|i| format!("x{i}")).collect(),
    };
    let gens_v = c.required(o, "generators", at)?;
    let gens = c.array(gens_v, "/structure/generators")?;
    if gens.is_empty() {
        c.push("/structure/generators", "at least one generator is required");
        return None;
    }
    let mut generators = Vec::new();
    let mut ok = true;
    for (i, g) in gens.iter().enumerate() {
        let gat = format!("/structure/generators/{i}");
        let Some(go) = c.object(g, &gat) else {
            ok = false;
            continue;
        };
        let weight = c.required(go, "weight", &gat).and_then(|w| c.integer(w, &format!("{gat}/weight"), 1));
        if let (Some(w), Some(d)) = (weight, depth) {
            if w > d {
                c.push(&format!("{gat}/weight"), format!("weight {w} exceeds depth {d}"));
                ok = false;
            }
        }
        let comps = c.required(go, "components", &gat).and_then(|v| c.strings(v, &format!("{gat}/components"), dim));
        let mut polys = Vec::new();
        if let Some(comps) = &comps {
            for (j, text) in comps.iter().enumerate() {
                match Polynomial::parse(text, dim) {
                    Ok(p) => polys.push(p),
                    Err(Error::Parse { pos, msg }) => {
                        c.push(&format!("{gat}/components/{j}"), format!("parse error at position {pos}: {msg}"));
                    }
                    Err(e) => c.push(&format!("{gat}/components/{j}"), e.to_string()),
                }
            }
        }
        match (weight, comps) {
            (Some(w), Some(comps)) if polys.len() == comps.len() => {
                generators.push((VectorField::new(polys).ok()?, w as u32));
            }
            _ => ok = false,
        }
    }
    let depth = depth?;
    if !ok {
        return None;
    }
    Some((SubRiemannianStructure::new(generators, depth as u32).ok()?, variables, dim))
}

fn parse_gram(c: &mut Checker, v: &Value, k: usize) -> Option<DMatrix<f64>> {
    let rows = c.array(v, "/gram")?;
    if rows.len() != k {
        c.push("/gram", format!("expected a {k}x{k} matrix over the weight-1 generators"));
        return None;
    }
    let mut m = DMatrix::zeros(k, k);
    for (i, r) in rows.iter().enumerate() {
        let row = c.vector(r, &format!("/gram/{i}"), k)?;
        for (j, x) in row.into_iter().enumerate() {
            m[(i, j)] = x;
        }
    }
    Some(m)
}

fn parse_paths(c: &mut Checker, v: &Value, dim: usize) -> Vec<ApproachPath> {
    let Some(a) = c.array(v, "/paths") else { return Vec::new() };
    let mut out = Vec::new();
    for (i, p) in a.iter().enumerate() {
        let at = format!("/paths/{i}");
        let Some(o) = c.object(p, &at) else { continue };
        let name = c.required(o, "name", &at).and_then(|n| c.string(n, &format!("{at}/name")).map(str::to_string));
        let comps = c.required(o, "components", &at).and_then(|v| c.strings(v, &format!("{at}/components"), dim));
        let schedule = match o.get("schedule") {
            None => Some(Schedule::default()),
            Some(s) => match serde_json::from_value::<Schedule>(s.clone()) {
                Ok(s) => match s.validate() {
                    Ok(()) => Some(s),
                    Err(e) => {
                        c.push(&format!("{at}/schedule"), e.to_string());
                        None
                    }
                },
                Err(e) => {
                    c.push(&format!("{at}/schedule"), e.to_string());
                    None
                }
            },
        };
        if let (Some(name), Some(comps), Some(schedule)) = (name, comps, schedule) {
            if out.iter().any(|q: &ApproachPath| q.name == name) {
                c.push(&format!("{at}/name"), format!("duplicate path name {name:?}"));
                continue;
            }
            match ApproachPath::new(&name, &comps, schedule) {
                Ok(p) => out.push(p),
                Err(e) => c.push(&format!("{at}/components"), e.to_string()),
            }
        }
    }
    out
}

fn parse_pairs(c: &mut Checker, v: &Value, at: &str, dim: usize) -> Option<PairStudy> {
    let o = c.object(v, at)?;
    let t = match o.get("t") {
        Some(t) => c.positive(t, &format!("{at}/t"))?,
        None => 1.0,
    };
    let starts = match o.get("starts") {
        Some(s) => c.integer(s, &format!("{at}/starts"), 1)? as usize,
        None => 8,
    };
    let pv = c.required(o, "pairs", at)?;
    let pa = c.array(pv, &format!("{at}/pairs"))?;
    let mut pairs = Vec::new();
    for (i, p) in pa.iter().enumerate() {
        let pat = format!("{at}/pairs/{i}");
        let Some(po) = c.object(p, &pat) else { continue };
        let x = c.required(po, "x", &pat).and_then(|x| c.vector(x, &format!("{pat}/x"), dim));
        let y = c.required(po, "y", &pat).and_then(|y| c.vector(y, &format!("{pat}/y"), dim));
        if let (Some(x), Some(y)) = (x, y) {
            pairs.push((x, y));
        }
    }
    Some(PairStudy { pairs, t, starts })
}

fn parse_studies(c: &mut Checker, v: &Value, dim: usize) -> Studies {
    let mut st = Studies::default();
    let Some(o) = c.object(v, "/studies") else { return st };
    if let Some(val) = o.get("validate") {
        let at = "/studies/validate";
        if let Some(vo) = c.object(val, at) {
            if let Some(x) = vo.get("lo").and_then(|x| c.number(x, &format!("{at}/lo"))) {
                st.validate.lo = x;
            }
            if let Some(x) = vo.get("hi").and_then(|x| c.number(x, &format!("{at}/hi"))) {
                st.validate.hi = x;
            }
            if let Some(x) = vo.get("steps").and_then(|x| c.integer(x, &format!("{at}/steps"), 1)) {
                st.validate.steps = x as usize;
            }
            if st.validate.lo > st.validate.hi {
                c.push(at, "lo must not exceed hi");
            }
        }
    }
    if let Some(d) = o.get("distance") {
        st.distance = parse_pairs(c, d, "/studies/distance", dim);
    }
    if let Some(d) = o.get("quasinorm") {
        st.quasinorm = parse_pairs(c, d, "/studies/quasinorm", dim);
    }
    if let Some(g) = o.get("gh") {
        let at = "/studies/gh";
        if let Some(go) = c.object(g, at) {
            if let Some(p) = go.get("path").and_then(|p| c.string(p, &format!("{at}/path"))) {
                st.gh.path = Some(p.to_string());
            }
            if let Some(r) = go.get("radius").and_then(|r| c.positive(r, &format!("{at}/radius"))) {
                st.gh.radius = r;
            }
            if let Some(n) = go.get("n").and_then(|n| c.integer(n, &format!("{at}/n"), 2)) {
                st.gh.n = n as usize;
            }
            if let Some(r) = go.get("rows").and_then(|r| c.integer(r, &format!("{at}/rows"), 1)) {
                st.gh.rows = r as usize;
            }
        }
    }
    st
}

fn parse_tolerances(c: &mut Checker, v: &Value) -> Tolerances {
    let mut tol = Tolerances::default();
    let Some(o) = c.object(v, "/tolerances") else { return tol };
    for (key, slot) in [
        ("rank", &mut tol.rank),
        ("cauchy", &mut tol.cauchy),
        ("endpoint", &mut tol.endpoint),
        ("subalgebra", &mut tol.subalgebra),
    ] {
        if let Some(x) = o.get(key).and_then(|x| c.positive(x, &format!("/tolerances/{key}"))) {
            *slot = x;
        }
    }
    for key in o.keys() {
        if !["rank", "cauchy", "endpoint", "subalgebra"].contains(&key.as_str()) {
            c.push(&format!("/tolerances/{key}"), "unknown tolerance");
        }
    }
    tol
}

/// Parses and validates a scenario; all problems found are reported together.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ConfigError {
        issues: vec![ConfigIssue {
            pointer: String::new(),
            message: format!("invalid JSON at line {} column {}: {e}", e.line(), e.column()),
        }],
    })?;
    let mut c = Checker { issues: Vec::new() };
    let Some(o) = c.object(&root, "") else { return Err(ConfigError { issues: c.issues }) };
    const KNOWN: [&str; 8] = ["name", "structure", "gram", "paths", "points", "studies", "seed", "tolerances"];
    for key in o.keys() {
        if !KNOWN.contains(&key.as_str()) {
            c.push(&format!("/{key}"), "unknown field");
        }
    }
    let name = match o.get("name") {
        Some(n) => c.string(n, "/name").unwrap_or("").to_string(),
        None => "scenario".to_string(),
    };
    let parsed = c.required(o, "structure", "").and_then(|s| parse_structure(&mut c, s));
    let dim = parsed.as_ref().map(|p| p.2);
    let mut structure = parsed.map(|(s, vars, _)| (s, vars));
    if let (Some(g), Some((s, _))) = (o.get("gram"), structure.as_mut()) {
        let k = s.generators().iter().filter(|g| g.1 == 1).count();
        if let Some(m) = parse_gram(&mut c, g, k) {
            match SubRiemannianStructure::with_gram(s.generators().to_vec(), s.depth(), m) {
                Ok(with) => *s = with,
                Err(e) => c.push("/gram", e.to_string()),
            }
        }
    }
    let (paths, points, studies) = match dim {
        Some(dim) => {
            let paths = o.get("paths").map(|p| parse_paths(&mut c, p, dim)).unwrap_or_default();
            let mut points = Vec::new();
            if let Some(pv) = o.get("points") {
                if let Some(a) = c.array(pv, "/points") {
                    for (i, p) in a.iter().enumerate() {
                        if let Some(v) = c.vector(p, &format!("/points/{i}"), dim) {
                            points.push(v);
                        }
                    }
                }
            }
            let studies = o.get("studies").map(|s| parse_studies(&mut c, s, dim)).unwrap_or_default();
            (paths, points, studies)
        }
        None => (Vec::new(), Vec::new(), Studies::default()),
    };
    if let Some(p) = &studies.gh.path {
        if !paths.iter().any(|q| &q.name == p) {
            c.push("/studies/gh/path", format!("no path named {p:?}"));
        }
    }
    let seed = match o.get("seed") {
        Some(s) => c.integer(s, "/seed", 0).unwrap_or(0),
        None => 0,
    };
    let tolerances = o.get("tolerances").map(|t| parse_tolerances(&mut c, t)).unwrap_or_default();
    match structure {
        Some((structure, variables)) if c.issues.is_empty() => Ok(ScenarioConfig {
            name,
            variables,
            structure,
            paths,
            points,
            studies,
            seed,
            tolerances,
        }),
        _ => {
            if c.issues.is_empty() {
                c.push("/structure", "invalid structure");
            }
            Err(ConfigError { issues: c.issues })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grushin_text(weight: i64, comp: &str) -> String {
        format!(
            r#"{{"structure": {{"dim": 2, "depth": 2, "generators": [
                {{"weight": {weight}, "components": ["1", "0"]}},
                {{"weight": 1, "components": ["0", "{comp}"]}}]}}}}"#
        )
    }

    #[test]
    fn minimal_config_parses() {
        let c = parse_config(&grushin_text(1, "x0")).unwrap();
        assert_eq!(c.structure.dim_m(), 2);
        assert_eq!(c.structure.depth(), 2);
        assert_eq!(c.variables, vec!["x0", "x1"]);
    }

    #[test]
    fn zero_weight_located() {
        let e = parse_config(&grushin_text(0, "x0")).unwrap_err();
        assert_eq!(e.issues[0].pointer, "/structure/generators/0/weight");
    }

    #[test]
    fn bad_polynomial_located_with_position() {
        let e = parse_config(&grushin_text(1, "x0^")).unwrap_err();
        assert_eq!(e.issues[0].pointer, "/structure/generators/1/components/1");
        assert!(e.issues[0].message.contains("position"));
    }

    #[test]
    fn weight_above_depth_rejected() {
        let e = parse_config(&grushin_text(3, "x0")).unwrap_err();
        assert!(e.issues[0].message.contains("exceeds depth"));
    }

    #[test]
    fn malformed_json_reported() {
        let e = parse_config("{").unwrap_err();
        assert!(e.issues[0].message.contains("invalid JSON"));
    }

    #[test]
    fn unknown_gh_path_rejected() {
        let text = r#"{"structure": {"dim": 1, "depth": 1, "generators": [{"weight": 1, "components": ["1"]}]},
                       "studies": {"gh": {"path": "nowhere"}}}"#;
        let e = parse_config(text).unwrap_err();
        assert_eq!(e.issues[0].pointer, "/studies/gh/path");
    }
}
