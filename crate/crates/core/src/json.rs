//! JSON formats for complexes, algebras, presymplectic complexes, theories
//! and surfaces.
//!
//! Rationals are strings `"p/q"` or `"p"`. Matrices and tensors are sparse
//! lists of index tuples ending in a coefficient. Object keys come out sorted,
//! so equal values serialise to identical text.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::algebras::{DgAlgebra, PresymplecticComplex};
use crate::cherns::{CsDiagram, SurfaceMorphism, TriangulatedSurface};
use crate::complexes::{ChainComplex, ChainMap, Degree};
use crate::exact::{format_rational, parse_rational, Rational, RationalMatrix, SparseVec};
use crate::fieldtheory::{default_pair, FieldTheory, OrthCategory};
use crate::operads::{named_presentation, parse_element, NamedOperad, OperadElement, StructureTensor};

/// Parse or schema error, located by a JSON path such as `$.carrier.d.0[2]`.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{path}: {message}")]
pub struct JsonError {
    pub path: String,
    pub message: String,
}

fn fail<T>(path: &str, message: impl Into<String>) -> Result<T, JsonError> {
    Err(JsonError {
        path: path.to_string(),
        message: message.into(),
    })
}

/// Parses text, reporting syntax errors by line and column.
pub fn parse_text(text: &str) -> Result<Value, JsonError> {
    serde_json::from_str(text).map_err(|e| JsonError {
        path: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })
}

/// Pretty-printed text with a trailing newline.
pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, JsonError> {
    v.as_object().map_or_else(|| fail(path, "expected an object"), Ok)
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, JsonError> {
    v.as_array().map_or_else(|| fail(path, "expected an array"), Ok)
}

fn field<'a>(m: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, JsonError> {
    m.get(key).map_or_else(|| fail(path, format!("missing key `{key}`")), Ok)
}

fn string<'a>(v: &'a Value, path: &str) -> Result<&'a str, JsonError> {
    v.as_str().map_or_else(|| fail(path, "expected a string"), Ok)
}

fn index(v: &Value, path: &str) -> Result<usize, JsonError> {
    v.as_u64().map_or_else(|| fail(path, "expected a non-negative integer"), |n| Ok(n as usize))
}

fn degree_key(k: &str, path: &str) -> Result<Degree, JsonError> {
    k.parse().or_else(|_| fail(path, format!("`{k}` is not a degree")))
}

pub fn rational_to_json(q: &Rational) -> Value {
    Value::String(format_rational(q))
}

pub fn rational_from_json(v: &Value, path: &str) -> Result<Rational, JsonError> {
    match v {
        Value::String(s) => parse_rational(s).or_else(|e| fail(path, e.0)),
        Value::Number(n) if n.is_i64() => Ok(crate::exact::int(n.as_i64().unwrap())),
        _ => fail(path, "expected a rational string"),
    }
}

fn triplets_to_json(m: &RationalMatrix) -> Value {
    Value::Array(
        m.triplets()
            .map(|(r, c, x)| json!([r, c, format_rational(x)]))
            .collect(),
    )
}

fn triplets_from_json(v: &Value, rows: usize, cols: usize, path: &str) -> Result<RationalMatrix, JsonError> {
    let mut m = RationalMatrix::zeros(rows, cols);
    for (k, t) in array(v, path)?.iter().enumerate() {
        let p = format!("{path}[{k}]");
        let t = array(t, &p)?;
        if t.len() != 3 {
            return fail(&p, "expected [row, column, coefficient]");
        }
        let (r, c) = (index(&t[0], &p)?, index(&t[1], &p)?);
        if r >= rows || c >= cols {
            return fail(&p, format!("entry ({r}, {c}) outside a {rows}×{cols} matrix"));
        }
        m.add_to(r, c, rational_from_json(&t[2], &p)?);
    }
    Ok(m)
}

pub fn complex_to_json(c: &ChainComplex) -> Value {
    let dims: Map<String, Value> = c.dims().iter().map(|(n, d)| (n.to_string(), json!(d))).collect();
    let d: Map<String, Value> = c
        .differentials()
        .iter()
        .map(|(n, m)| (n.to_string(), triplets_to_json(m)))
        .collect();
    json!({ "dims": dims, "d": d })
}

pub fn complex_from_json(v: &Value, path: &str) -> Result<ChainComplex, JsonError> {
    let o = object(v, path)?;
    let dims_path = format!("{path}.dims");
    let mut dims = BTreeMap::new();
    for (k, d) in object(field(o, "dims", path)?, &dims_path)? {
        let p = format!("{dims_path}.{k}");
        dims.insert(degree_key(k, &p)?, index(d, &p)?);
    }
    let dim = |n: Degree| dims.get(&n).copied().unwrap_or(0);
    let mut d = BTreeMap::new();
    if let Some(dv) = o.get("d") {
        let d_path = format!("{path}.d");
        for (k, m) in object(dv, &d_path)? {
            let p = format!("{d_path}.{k}");
            let n = degree_key(k, &p)?;
            d.insert(n, triplets_from_json(m, dim(n - 1), dim(n), &p)?);
        }
    }
    ChainComplex::new(dims, d).or_else(|e| fail(path, e.to_string()))
}

/// Components keyed by degree, as sparse triplets.
pub fn chain_map_to_json(f: &ChainMap) -> Value {
    let m: Map<String, Value> = f
        .components()
        .iter()
        .filter(|(_, m)| !m.is_zero())
        .map(|(n, m)| (n.to_string(), triplets_to_json(m)))
        .collect();
    Value::Object(m)
}

pub fn chain_map_from_json(
    v: &Value,
    source: &ChainComplex,
    target: &ChainComplex,
    path: &str,
) -> Result<ChainMap, JsonError> {
    let mut comps = BTreeMap::new();
    for (k, m) in object(v, path)? {
        let p = format!("{path}.{k}");
        let n = degree_key(k, &p)?;
        comps.insert(n, triplets_from_json(m, target.dim(n), source.dim(n), &p)?);
    }
    ChainMap::new(source.clone(), target.clone(), comps).or_else(|e| fail(path, e.to_string()))
}

/// Key under which an operation's tensor is stored.
fn op_key(op: &str) -> &str {
    if op == "eta" {
        "unit"
    } else {
        op
    }
}

fn tensor_to_json(t: &StructureTensor) -> Value {
    let mut rows = Vec::new();
    for (inputs, out) in &t.entries {
        for (k, c) in out {
            let mut row: Vec<Value> = inputs.iter().map(|&i| json!(i)).collect();
            row.push(json!(k));
            row.push(rational_to_json(c));
            rows.push(Value::Array(row));
        }
    }
    Value::Array(rows)
}

fn tensor_from_json(v: &Value, arity: usize, path: &str) -> Result<StructureTensor, JsonError> {
    let mut t = StructureTensor::new(arity);
    for (k, row) in array(v, path)?.iter().enumerate() {
        let p = format!("{path}[{k}]");
        let row = array(row, &p)?;
        if row.len() != arity + 2 {
            return fail(&p, format!("expected {} inputs, an output index and a coefficient", arity));
        }
        let inputs = row[..arity].iter().map(|x| index(x, &p)).collect::<Result<Vec<_>, _>>()?;
        t.add(inputs, index(&row[arity], &p)?, rational_from_json(&row[arity + 1], &p)?);
    }
    Ok(t)
}

pub fn algebra_to_json(a: &DgAlgebra) -> Value {
    let mut m = Map::new();
    m.insert("kind".into(), json!(a.kind().name()));
    m.insert("carrier".into(), complex_to_json(a.carrier()));
    for (op, t) in a.structure() {
        m.insert(op_key(op).into(), tensor_to_json(t));
    }
    Value::Object(m)
}

pub fn algebra_from_json(v: &Value, path: &str) -> Result<DgAlgebra, JsonError> {
    let o = object(v, path)?;
    let kind_path = format!("{path}.kind");
    let kind_name = string(field(o, "kind", path)?, &kind_path)?;
    let kind = NamedOperad::from_name(kind_name)
        .map_or_else(|| fail(&kind_path, format!("unknown operad `{kind_name}`")), Ok)?;
    let carrier = complex_from_json(field(o, "carrier", path)?, &format!("{path}.carrier"))?;
    let pres = named_presentation(kind);
    let mut structure = BTreeMap::new();
    for (key, val) in o {
        if key == "kind" || key == "carrier" {
            continue;
        }
        let op = if key == "unit" { "eta" } else { key.as_str() };
        let p = format!("{path}.{key}");
        let g = pres
            .alphabet
            .get(op)
            .map_or_else(|| fail(&p, format!("{} has no operation `{key}`", kind.name())), Ok)?;
        structure.insert(op.to_string(), tensor_from_json(val, g.arity(), &p)?);
    }
    DgAlgebra::new(kind, carrier, structure).or_else(|e| fail(path, e.to_string()))
}

pub fn presymplectic_to_json(p: &PresymplecticComplex) -> Value {
    let omega: Vec<Value> = p
        .entries()
        .iter()
        .map(|((i, j), c)| json!([i, j, format_rational(c)]))
        .collect();
    json!({ "carrier": complex_to_json(&p.carrier), "omega": omega })
}

pub fn presymplectic_from_json(v: &Value, path: &str) -> Result<PresymplecticComplex, JsonError> {
    let o = object(v, path)?;
    let carrier = complex_from_json(field(o, "carrier", path)?, &format!("{path}.carrier"))?;
    let dim = carrier.total_dim();
    let omega_path = format!("{path}.omega");
    let m = triplets_from_json(field(o, "omega", path)?, dim, dim, &omega_path)?;
    let entries: Vec<((usize, usize), Rational)> = m.triplets().map(|(i, j, c)| ((i, j), c.clone())).collect();
    PresymplecticComplex::new(carrier, entries).or_else(|e| fail(path, e.to_string()))
}

fn names_from_json(v: &Value, width: usize, path: &str) -> Result<Vec<Vec<String>>, JsonError> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let p = format!("{path}[{k}]");
            let row = array(row, &p)?;
            if row.len() != width {
                return fail(&p, format!("expected {width} names"));
            }
            row.iter().map(|x| string(x, &p).map(str::to_string)).collect()
        })
        .collect()
}

pub fn category_to_json(c: &OrthCategory) -> Value {
    let objects = c.objects();
    let ms = c.morphisms();
    let morphisms: Vec<Value> = ms
        .iter()
        .enumerate()
        .filter(|(k, _)| !c.is_identity(*k))
        .map(|(_, m)| json!({ "name": m.name, "src": objects[m.source], "tgt": objects[m.target] }))
        .collect();
    let mut compose = Vec::new();
    for g in 0..ms.len() {
        for f in 0..ms.len() {
            if c.is_identity(g) || c.is_identity(f) {
                continue;
            }
            if let Some(gf) = c.compose(g, f) {
                compose.push(json!([ms[g].name, ms[f].name, ms[gf].name]));
            }
        }
    }
    let orth: Vec<Value> = c
        .orth()
        .iter()
        .filter(|(a, b)| a <= b)
        .map(|&(a, b)| json!([ms[a].name, ms[b].name]))
        .collect();
    json!({ "objects": objects, "morphisms": morphisms, "compose": compose, "orth": orth })
}

pub fn category_from_json(o: &Map<String, Value>, path: &str) -> Result<OrthCategory, JsonError> {
    let objects: Vec<String> = array(field(o, "objects", path)?, &format!("{path}.objects"))?
        .iter()
        .enumerate()
        .map(|(k, x)| string(x, &format!("{path}.objects[{k}]")).map(str::to_string))
        .collect::<Result<_, _>>()?;
    let mut morphisms = Vec::new();
    if let Some(ms) = o.get("morphisms") {
        for (k, m) in array(ms, &format!("{path}.morphisms"))?.iter().enumerate() {
            let p = format!("{path}.morphisms[{k}]");
            let mo = object(m, &p)?;
            let get = |key: &str| -> Result<String, JsonError> {
                string(field(mo, key, &p)?, &format!("{p}.{key}")).map(str::to_string)
            };
            morphisms.push((get("name")?, get("src")?, get("tgt")?));
        }
    }
    let compose = match o.get("compose") {
        Some(v) => names_from_json(v, 3, &format!("{path}.compose"))?
            .into_iter()
            .map(|r| (r[0].clone(), r[1].clone(), r[2].clone()))
            .collect(),
        None => Vec::new(),
    };
    let orth = match o.get("orth") {
        Some(v) => names_from_json(v, 2, &format!("{path}.orth"))?
            .into_iter()
            .map(|r| (r[0].clone(), r[1].clone()))
            .collect(),
        None => Vec::new(),
    };
    OrthCategory::new(objects, morphisms, compose, orth).or_else(|e| fail(path, e.to_string()))
}

/// A linear or algebraic field theory: the category, the distinguished pair
/// as tree expressions, and algebras and actions keyed by name.
pub fn theory_to_json(t: &FieldTheory<DgAlgebra>) -> Value {
    let mut m = match category_to_json(&t.base) {
        Value::Object(m) => m,
        _ => unreachable!(),
    };
    m.insert("kind".into(), json!(t.kind.name()));
    m.insert("pair".into(), json!([t.pair.0.to_string(), t.pair.1.to_string()]));
    let algebras: Map<String, Value> = t
        .base
        .objects()
        .iter()
        .zip(t.algebras())
        .map(|(o, a)| (o.clone(), algebra_to_json(a)))
        .collect();
    m.insert("algebras".into(), Value::Object(algebras));
    let actions: Map<String, Value> = t
        .base
        .morphisms()
        .iter()
        .enumerate()
        .filter(|(k, _)| !t.base.is_identity(*k))
        .map(|(k, mo)| (mo.name.clone(), chain_map_to_json(t.action(k))))
        .collect();
    m.insert("actions".into(), Value::Object(actions));
    Value::Object(m)
}

pub fn theory_from_json(v: &Value, path: &str) -> Result<FieldTheory<DgAlgebra>, JsonError> {
    let o = object(v, path)?;
    let base = category_from_json(o, path)?;
    let alg_path = format!("{path}.algebras");
    let alg_obj = object(field(o, "algebras", path)?, &alg_path)?;
    let algebras = base
        .objects()
        .iter()
        .map(|name| {
            let p = format!("{alg_path}.{name}");
            algebra_from_json(field(alg_obj, name, &alg_path)?, &p)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let kind = match o.get("kind") {
        Some(k) => {
            let p = format!("{path}.kind");
            let name = string(k, &p)?;
            NamedOperad::from_name(name).map_or_else(|| fail(&p, format!("unknown operad `{name}`")), Ok)?
        }
        None => match algebras.first() {
            Some(a) => a.kind(),
            None => return fail(path, "cannot infer the kind of an empty theory"),
        },
    };
    let pair = match o.get("pair") {
        Some(p) => {
            let pp = format!("{path}.pair");
            let names = names_from_json(&json!([p]), 2, &pp)?.remove(0);
            let alphabet = named_presentation(kind).alphabet;
            let parse = |s: &str, k: usize| -> Result<OperadElement, JsonError> {
                parse_element(&alphabet, s).or_else(|e| fail(&format!("{pp}[{k}]"), e.to_string()))
            };
            (parse(&names[0], 0)?, parse(&names[1], 1)?)
        }
        None => default_pair(kind),
    };
    let act_path = format!("{path}.actions");
    let empty = Map::new();
    let act_obj = match o.get("actions") {
        Some(a) => object(a, &act_path)?,
        None => &empty,
    };
    for key in act_obj.keys() {
        if base.morphism_index(key).is_none() {
            return fail(&format!("{act_path}.{key}"), "no such morphism");
        }
    }
    let mut actions = Vec::with_capacity(base.morphisms().len());
    for (k, mo) in base.morphisms().iter().enumerate() {
        let p = format!("{act_path}.{}", mo.name);
        actions.push(match act_obj.get(&mo.name) {
            Some(a) => Some(chain_map_from_json(
                a,
                algebras[mo.source].carrier(),
                algebras[mo.target].carrier(),
                &p,
            )?),
            None if base.is_identity(k) => None,
            None => return fail(&act_path, format!("missing action of `{}`", mo.name)),
        });
    }
    FieldTheory::new(base, kind, pair, algebras, actions).or_else(|e| fail(path, e.to_string()))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceRepr {
    vertices: usize,
    #[serde(default)]
    vertex_order: Option<Vec<usize>>,
    triangles: Vec<[usize; 3]>,
    #[serde(default)]
    boundary_edges: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MorphismRepr {
    name: String,
    src: String,
    tgt: String,
    vertex_map: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagramRepr {
    surfaces: BTreeMap<String, SurfaceRepr>,
    #[serde(default)]
    morphisms: Vec<MorphismRepr>,
}

fn serde_fail<T>(path: &str, e: serde_json::Error) -> Result<T, JsonError> {
    fail(path, e.to_string())
}

impl From<SurfaceRepr> for TriangulatedSurface {
    fn from(r: SurfaceRepr) -> Self {
        TriangulatedSurface {
            vertices: r.vertices,
            vertex_order: r.vertex_order.unwrap_or_else(|| (0..r.vertices).collect()),
            triangles: r.triangles,
            boundary_edges: r.boundary_edges,
        }
    }
}

fn surface_repr(s: &TriangulatedSurface) -> SurfaceRepr {
    SurfaceRepr {
        vertices: s.vertices,
        vertex_order: Some(s.vertex_order.clone()),
        triangles: s.triangles.clone(),
        boundary_edges: s.boundary_edges.clone(),
    }
}

/// Surface without validation; `vertex_order` defaults to `0..vertices`.
pub fn surface_from_json(v: &Value, path: &str) -> Result<TriangulatedSurface, JsonError> {
    SurfaceRepr::deserialize(v).map(Into::into).or_else(|e| serde_fail(path, e))
}

pub fn surface_to_json(s: &TriangulatedSurface) -> Value {
    serde_json::to_value(surface_repr(s)).expect("serialisable")
}

pub fn diagram_from_json(v: &Value, path: &str) -> Result<CsDiagram, JsonError> {
    let r = DiagramRepr::deserialize(v).or_else(|e| serde_fail(path, e))?;
    Ok(CsDiagram {
        surfaces: r.surfaces.into_iter().map(|(k, s)| (k, s.into())).collect(),
        morphisms: r
            .morphisms
            .into_iter()
            .map(|m| SurfaceMorphism {
                name: m.name,
                source: m.src,
                target: m.tgt,
                vertex_map: m.vertex_map,
            })
            .collect(),
    })
}

pub fn diagram_to_json(d: &CsDiagram) -> Value {
    let r = DiagramRepr {
        surfaces: d.surfaces.iter().map(|(k, s)| (k.clone(), surface_repr(s))).collect(),
        morphisms: d
            .morphisms
            .iter()
            .map(|m| MorphismRepr {
                name: m.name.clone(),
                src: m.source.clone(),
                tgt: m.target.clone(),
                vertex_map: m.vertex_map.clone(),
            })
            .collect(),
    };
    serde_json::to_value(r).expect("serialisable")
}

/// A surface file or a diagram file; a bare surface becomes a one-object
/// diagram named `M`.
pub fn diagram_or_surface_from_json(v: &Value) -> Result<CsDiagram, JsonError> {
    if v.get("surfaces").is_some() {
        diagram_from_json(v, "$")
    } else {
        Ok(crate::cherns::single_surface("M", surface_from_json(v, "$")?))
    }
}

/// Sparse vector as `{"index": "coefficient"}`.
pub fn sparse_to_json(v: &SparseVec) -> Value {
    Value::Object(v.iter().map(|(i, c)| (i.to_string(), rational_to_json(c))).collect())
}
