//! On-disk formats: the versioned space file, function and coefficient
//! CSVs, cube/net/spline dumps, and JSON report shells. All writers go
//! through `write_atomic` (write to a temp file, then rename), so failed
//! runs leave no partial files.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicSystem;
use crate::error::{Error, Result};
use crate::mra::SplineBasis;
use crate::space::{shortest_path_fixpoint, MetricMeasureSpace, PointFn};
use crate::wavelet::{CoeffSeq, WaveletBasis};

pub const SPACE_SCHEMA: &str = "space/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub schema: String,
    pub metric: String,
    pub points: Vec<SpacePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<SpaceEdge>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_point: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacePoint {
    pub id: String,
    pub weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceEdge {
    pub a: String,
    pub b: String,
    pub len: f64,
}

/// Parses and validates a space file. Exactly the fields the declared
/// metric mode requires may be present.
pub fn load_space_str(text: &str) -> Result<MetricMeasureSpace> {
    let file: SpaceFile = serde_json::from_str(text)?;
    if file.schema != SPACE_SCHEMA {
        return Err(Error::Schema(format!(
            "schema `{}`, expected `{SPACE_SCHEMA}`",
            file.schema
        )));
    }
    let n = file.points.len();
    if n == 0 {
        return Err(Error::Schema("no points".into()));
    }
    let ids: Vec<String> = file.points.iter().map(|p| p.id.clone()).collect();
    let weights: Vec<f64> = file.points.iter().map(|p| p.weight).collect();

    let require_no_coords = |mode: &str| -> Result<()> {
        if file.points.iter().any(|p| p.coords.is_some()) {
            return Err(Error::Schema(format!("{mode} mode forbids point coords")));
        }
        Ok(())
    };

    let dist = match file.metric.as_str() {
        "euclidean" => {
            if file.matrix.is_some() || file.edges.is_some() {
                return Err(Error::Schema(
                    "euclidean mode forbids `matrix` and `edges`".into(),
                ));
            }
            let coords: Vec<Vec<f64>> = file
                .points
                .iter()
                .map(|p| {
                    p.coords
                        .clone()
                        .ok_or_else(|| Error::Schema(format!("point `{}` lacks coords", p.id)))
                })
                .collect::<Result<_>>()?;
            let dim = coords[0].len();
            if dim == 0 || coords.iter().any(|c| c.len() != dim) {
                return Err(Error::Schema("inconsistent coordinate dimensions".into()));
            }
            let mut dist = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let d2: f64 = coords[i]
                        .iter()
                        .zip(&coords[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    dist[i * n + j] = d2.sqrt();
                }
            }
            shortest_path_fixpoint(&mut dist, n);
            dist
        }
        "matrix" => {
            if file.edges.is_some() {
                return Err(Error::Schema("matrix mode forbids `edges`".into()));
            }
            require_no_coords("matrix")?;
            let m = file
                .matrix
                .ok_or_else(|| Error::Schema("matrix mode needs `matrix`".into()))?;
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(Error::Schema(format!("matrix is not {n} x {n}")));
            }
            m.into_iter().flatten().collect()
        }
        "graph" => {
            if file.matrix.is_some() {
                return Err(Error::Schema("graph mode forbids `matrix`".into()));
            }
            require_no_coords("graph")?;
            let edges = file
                .edges
                .ok_or_else(|| Error::Schema("graph mode needs `edges`".into()))?;
            let index: BTreeMap<&str, usize> = ids
                .iter()
                .enumerate()
                .map(|(i, id)| (id.as_str(), i))
                .collect();
            let mut dist = vec![f64::INFINITY; n * n];
            for i in 0..n {
                dist[i * n + i] = 0.0;
            }
            let mut seen = std::collections::BTreeSet::new();
            for e in &edges {
                let a = *index
                    .get(e.a.as_str())
                    .ok_or_else(|| Error::Schema(format!("edge endpoint `{}` unknown", e.a)))?;
                let b = *index
                    .get(e.b.as_str())
                    .ok_or_else(|| Error::Schema(format!("edge endpoint `{}` unknown", e.b)))?;
                if a == b {
                    return Err(Error::Schema(format!("self-loop at `{}`", e.a)));
                }
                if !(e.len > 0.0) || !e.len.is_finite() {
                    return Err(Error::Schema(format!(
                        "edge ({}, {}) has nonpositive length {}",
                        e.a, e.b, e.len
                    )));
                }
                let key = (a.min(b), a.max(b));
                if !seen.insert(key) {
                    return Err(Error::Schema(format!("duplicate edge ({}, {})", e.a, e.b)));
                }
                dist[a * n + b] = e.len;
                dist[b * n + a] = e.len;
            }
            // all-pairs shortest paths
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let via = dist[i * n + k] + dist[k * n + j];
                        if via < dist[i * n + j] {
                            dist[i * n + j] = via;
                        }
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    if !dist[i * n + j].is_finite() {
                        return Err(Error::Disconnected {
                            from: ids[i].clone(),
                            to: ids[j].clone(),
                        });
                    }
                }
            }
            shortest_path_fixpoint(&mut dist, n);
            dist
        }
        other => {
            return Err(Error::Schema(format!(
                "metric mode `{other}` (expected euclidean | matrix | graph)"
            )))
        }
    };

    MetricMeasureSpace::new(ids, dist, weights, file.base_point.as_deref())
}

pub fn load_space_path(path: &Path) -> Result<MetricMeasureSpace> {
    load_space_str(&std::fs::read_to_string(path)?)
}

/// Serializes a space as an explicit-matrix space file.
pub fn space_to_file(space: &MetricMeasureSpace) -> SpaceFile {
    let n = space.len();
    SpaceFile {
        schema: SPACE_SCHEMA.into(),
        metric: "matrix".into(),
        points: (0..n)
            .map(|i| SpacePoint {
                id: space.id(i).to_string(),
                weight: space.weight(i),
                coords: None,
            })
            .collect(),
        matrix: Some(
            (0..n)
                .map(|i| (0..n).map(|j| space.dist(i, j)).collect())
                .collect(),
        ),
        edges: None,
        base_point: Some(space.id(space.base_point()).to_string()),
    }
}

/// Writes bytes through a temp file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Function CSV: header `point_id,value`, one row per point.
pub fn read_function_csv(space: &MetricMeasureSpace, text: &str) -> Result<PointFn> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    {
        let headers = reader.headers()?;
        if headers.len() != 2 || &headers[0] != "point_id" || &headers[1] != "value" {
            return Err(Error::Schema(
                "function CSV header must be `point_id,value`".into(),
            ));
        }
    }
    let mut values = vec![f64::NAN; space.len()];
    let mut seen = vec![false; space.len()];
    for row in reader.records() {
        let row = row?;
        let id = &row[0];
        let idx = space
            .index_of(id)
            .ok_or_else(|| Error::Schema(format!("unknown point id `{id}`")))?;
        if seen[idx] {
            return Err(Error::Schema(format!("duplicate row for `{id}`")));
        }
        seen[idx] = true;
        values[idx] = row[1]
            .parse::<f64>()
            .map_err(|_| Error::Schema(format!("bad value `{}` for `{id}`", &row[1])))?;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Schema(format!(
            "missing row for `{}`",
            space.id(missing)
        )));
    }
    space.point_fn(values)
}

pub fn function_to_csv(space: &MetricMeasureSpace, f: &PointFn) -> Result<String> {
    space.check_fn(f)?;
    let mut out = String::from("point_id,value\n");
    for i in 0..space.len() {
        out.push_str(&format!("{},{}\n", space.id(i), fmt_f64(f.value(i))));
    }
    Ok(out)
}

/// Coefficient CSV: `kind,level,beta_id,value`; kinds are `wavelet` and
/// `coarse` (coarse rows carry the coarse center id at the coarsest level).
pub fn coeffs_to_csv(basis: &WaveletBasis, coeffs: &CoeffSeq) -> String {
    let space = &basis.splines.system.space;
    let mut out = String::from("kind,level,beta_id,value\n");
    for (j, &alpha) in basis
        .splines
        .system
        .net(basis.k_min())
        .iter()
        .enumerate()
    {
        out.push_str(&format!(
            "coarse,{},{},{}\n",
            basis.k_min(),
            space.id(alpha),
            fmt_f64(coeffs.coarse.get(j).copied().unwrap_or(0.0))
        ));
    }
    for (&(k, beta), &v) in &coeffs.entries {
        out.push_str(&format!(
            "wavelet,{},{},{}\n",
            k,
            space.id(beta),
            fmt_f64(v)
        ));
    }
    out
}

pub fn read_coeffs_csv(basis: &WaveletBasis, text: &str) -> Result<CoeffSeq> {
    let space = &basis.splines.system.space;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    {
        let headers = reader.headers()?;
        if headers.len() != 4
            || &headers[0] != "kind"
            || &headers[1] != "level"
            || &headers[2] != "beta_id"
            || &headers[3] != "value"
        {
            return Err(Error::Schema(
                "coefficient CSV header must be `kind,level,beta_id,value`".into(),
            ));
        }
    }
    let mut coeffs = basis.zero_coeffs();
    let coarse_net: Vec<usize> = basis.splines.system.net(basis.k_min()).to_vec();
    for row in reader.records() {
        let row = row?;
        let level: i32 = row[1]
            .parse()
            .map_err(|_| Error::Schema(format!("bad level `{}`", &row[1])))?;
        let idx = space
            .index_of(&row[2])
            .ok_or_else(|| Error::Schema(format!("unknown point id `{}`", &row[2])))?;
        let value: f64 = row[3]
            .parse()
            .map_err(|_| Error::Schema(format!("bad value `{}`", &row[3])))?;
        match &row[0] {
            "coarse" => {
                let j = coarse_net
                    .iter()
                    .position(|&c| c == idx)
                    .ok_or_else(|| Error::Schema(format!("`{}` is not a coarse center", &row[2])))?;
                coeffs.coarse[j] = value;
            }
            "wavelet" => {
                if !coeffs.entries.contains_key(&(level, idx)) {
                    return Err(Error::MissingCoefficient {
                        level,
                        id: row[2].to_string(),
                    });
                }
                coeffs.entries.insert((level, idx), value);
            }
            other => return Err(Error::Schema(format!("unknown kind `{other}`"))),
        }
    }
    Ok(coeffs)
}

/// Cube dump CSV: `level,center_id,point_id`.
pub fn cubes_to_csv(system: &DyadicSystem) -> String {
    let space = &system.space;
    let mut out = String::from("level,center_id,point_id\n");
    for k in system.levels() {
        for &alpha in system.net(k) {
            for x in system.cube_points(k, alpha) {
                out.push_str(&format!("{},{},{}\n", k, space.id(alpha), space.id(x)));
            }
        }
    }
    out
}

/// Net dump CSV: `level,center_id`.
pub fn nets_to_csv(system: &DyadicSystem) -> String {
    let space = &system.space;
    let mut out = String::from("level,center_id\n");
    for k in system.levels() {
        for &alpha in system.net(k) {
            out.push_str(&format!("{},{}\n", k, space.id(alpha)));
        }
    }
    out
}

/// Spline dump CSV: `level,center_id,point_id,value`, support only.
pub fn splines_to_csv(basis: &SplineBasis) -> String {
    let system = &basis.system;
    let space = &system.space;
    let mut out = String::from("level,center_id,point_id,value\n");
    for k in system.levels() {
        for (ci, &alpha) in system.net(k).iter().enumerate() {
            for x in 0..space.len() {
                let v = basis.value(k, ci, x);
                if v != 0.0 {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        k,
                        space.id(alpha),
                        space.id(x),
                        fmt_f64(v)
                    ));
                }
            }
        }
    }
    out
}

/// Serialized Gram report: level plus spectrum summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GramReportJson {
    pub schema: String,
    pub level: i32,
    pub dim: usize,
    pub riesz_lower: f64,
    pub riesz_upper: f64,
    pub condition: f64,
}

impl GramReportJson {
    pub fn new(report: &crate::mra::GramReport) -> Self {
        GramReportJson {
            schema: "gram-report/v1".into(),
            level: report.level,
            dim: report.dim,
            riesz_lower: report.riesz_lower,
            riesz_upper: report.riesz_upper,
            condition: report.condition,
        }
    }
}

/// Norm report shell: `{schema, norm, value, witness, params}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormReport {
    pub schema: String,
    pub norm: String,
    pub value: f64,
    pub witness: serde_json::Value,
    pub params: serde_json::Value,
}

impl NormReport {
    pub fn new(norm: &str, value: f64, witness: serde_json::Value, params: serde_json::Value) -> Self {
        NormReport {
            schema: "norm-report/v1".into(),
            norm: norm.to_string(),
            value,
            witness,
            params,
        }
    }
}

fn fmt_f64(v: f64) -> String {
    // shortest round-trip representation, deterministic
    format!("{v}")
}

/// Convenience: fixture or file reference used by the CLI and experiments.
pub fn space_from_source(source: &str) -> Result<Arc<MetricMeasureSpace>> {
    if let Ok(fix) = crate::space::Fixture::parse(source) {
        return Ok(Arc::new(fix.build()?));
    }
    Ok(Arc::new(load_space_path(Path::new(source))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{build_cubes, build_nets, TieBreak};
    use crate::mra::{build_splines, SplineMode};
    use crate::space::Fixture;
    use crate::wavelet::build_wavelets;

    fn line4_json() -> String {
        serde_json::json!({
            "schema": "space/v1",
            "metric": "euclidean",
            "points": [
                {"id": "p0", "weight": 1.0, "coords": [0.0]},
                {"id": "p1", "weight": 1.0, "coords": [1.0]},
                {"id": "p2", "weight": 1.0, "coords": [2.0]},
                {"id": "p3", "weight": 1.0, "coords": [3.0]}
            ]
        })
        .to_string()
    }

    #[test]
    fn euclidean_file_matches_fixture() {
        let s = load_space_str(&line4_json()).unwrap();
        let fix = Fixture::Line4.build().unwrap();
        assert_eq!(s.len(), 4);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(s.dist(i, j), fix.dist(i, j));
            }
        }
    }

    #[test]
    fn matrix_file_round_trips() {
        let fix = Fixture::Line4.build().unwrap();
        let file = space_to_file(&fix);
        let text = serde_json::to_string(&file).unwrap();
        let back = load_space_str(&text).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(back.dist(i, j), fix.dist(i, j));
            }
        }
    }

    #[test]
    fn graph_path_distances() {
        let text = serde_json::json!({
            "schema": "space/v1",
            "metric": "graph",
            "points": [
                {"id": "p0", "weight": 1.0},
                {"id": "p1", "weight": 1.0},
                {"id": "p2", "weight": 1.0},
                {"id": "p3", "weight": 1.0}
            ],
            "edges": [
                {"a": "p0", "b": "p1", "len": 1.0},
                {"a": "p1", "b": "p2", "len": 1.0},
                {"a": "p2", "b": "p3", "len": 1.0}
            ]
        })
        .to_string();
        let s = load_space_str(&text).unwrap();
        // hand oracle for the path graph: d(i, j) = |i - j|
        for i in 0..4usize {
            for j in 0..4usize {
                assert_eq!(s.dist(i, j), i.abs_diff(j) as f64);
            }
        }
    }

    #[test]
    fn graph_disconnected_is_an_error() {
        let text = serde_json::json!({
            "schema": "space/v1",
            "metric": "graph",
            "points": [
                {"id": "a", "weight": 1.0},
                {"id": "b", "weight": 1.0},
                {"id": "c", "weight": 1.0}
            ],
            "edges": [ {"a": "a", "b": "b", "len": 2.0} ]
        })
        .to_string();
        assert!(matches!(
            load_space_str(&text),
            Err(Error::Disconnected { .. })
        ));
    }

    #[test]
    fn schema_strictness() {
        // euclidean with a matrix field
        let bad = serde_json::json!({
            "schema": "space/v1",
            "metric": "euclidean",
            "points": [{"id": "a", "weight": 1.0, "coords": [0.0]},
                        {"id": "b", "weight": 1.0, "coords": [1.0]}],
            "matrix": [[0.0, 1.0], [1.0, 0.0]]
        })
        .to_string();
        assert!(load_space_str(&bad).is_err());
        // matrix mode with coords
        let bad = serde_json::json!({
            "schema": "space/v1",
            "metric": "matrix",
            "points": [{"id": "a", "weight": 1.0, "coords": [0.0]},
                        {"id": "b", "weight": 1.0}],
            "matrix": [[0.0, 1.0], [1.0, 0.0]]
        })
        .to_string();
        assert!(load_space_str(&bad).is_err());
        // asymmetric matrix
        let bad = serde_json::json!({
            "schema": "space/v1",
            "metric": "matrix",
            "points": [{"id": "a", "weight": 1.0}, {"id": "b", "weight": 1.0}],
            "matrix": [[0.0, 1.0], [2.0, 0.0]]
        })
        .to_string();
        assert!(matches!(load_space_str(&bad), Err(Error::Metric(_))));
        // nonpositive weight
        let bad = serde_json::json!({
            "schema": "space/v1",
            "metric": "matrix",
            "points": [{"id": "a", "weight": 0.0}, {"id": "b", "weight": 1.0}],
            "matrix": [[0.0, 1.0], [1.0, 0.0]]
        })
        .to_string();
        assert!(matches!(
            load_space_str(&bad),
            Err(Error::NonpositiveWeight { .. })
        ));
    }

    #[test]
    fn function_csv_round_trip() {
        let s = Fixture::Line4.build().unwrap();
        let f = s.point_fn(vec![0.5, -1.25, 3.0, 0.0]).unwrap();
        let text = function_to_csv(&s, &f).unwrap();
        let back = read_function_csv(&s, &text).unwrap();
        assert_eq!(f.values(), back.values());
        assert!(read_function_csv(&s, "point_id,value\np0,1.0\n").is_err()); // missing rows
    }

    #[test]
    fn coefficient_csv_round_trip() {
        let s = std::sync::Arc::new(Fixture::Line4.build().unwrap());
        let nets = build_nets(s, 0.5).unwrap();
        let d = std::sync::Arc::new(build_cubes(&nets, TieBreak::Deterministic).unwrap());
        let b = std::sync::Arc::new(build_splines(d, SplineMode::Haar).unwrap());
        let w = build_wavelets(b).unwrap();
        let f = w
            .splines
            .system
            .space
            .point_fn(vec![0.0, 1.0, 2.0, 3.0])
            .unwrap();
        let c = w.analyze(&f).unwrap();
        let text = coeffs_to_csv(&w, &c);
        let back = read_coeffs_csv(&w, &text).unwrap();
        assert_eq!(c.entries, back.entries);
        assert_eq!(c.coarse, back.coarse);
    }

    #[test]
    fn atomic_write_creates_file(){
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_json(&path, &serde_json::json!({"ok": true})).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("ok"));
    }
}
