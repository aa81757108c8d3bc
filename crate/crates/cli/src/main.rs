//! `opft`: validate, compute and quantize from JSON files.
//!
//! Reports are JSON with sorted keys. Exit codes: 0 when every check
//! passes, 1 when a check fails, 2 for unreadable or malformed input, 3 for
//! internal errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use opft_core::algebras::{heisenberg, validate_algebra, DgAlgebra, PresymplecticComplex};
use opft_core::cherns::{build_bcs, quantized_relation_defects, CsDiagram, CsModel};
use opft_core::complexes::{ChainComplex, QuasiIsoFailure};
use opft_core::envelope::{envelope, filtration_dim, PBWElement, TruncatedEnvelope};
use opft_core::exact::format_rational;
use opft_core::fieldtheory::{CausalityReport, FunctorReport, FieldTheory, TheoryAlgebra, WMode, WReport, WWitness};
use opft_core::json::{self as js, JsonError};

#[derive(Parser)]
#[command(name = "opft", version, about = "Operadic field theories over exact rationals")]
struct Cli {
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a complex, algebra, presymplectic complex, theory, surface or diagram.
    Validate { file: PathBuf },
    /// Homology dimensions of a complex or of an algebra's carrier.
    Homology { file: PathBuf },
    /// Filtration-stage dimensions of the truncated envelope, with the PBW count.
    EnvelopeDims {
        file: Option<PathBuf>,
        #[arg(long)]
        algebra: Option<PathBuf>,
        #[arg(long)]
        n: usize,
    },
    /// The truncated CCR algebra of a presymplectic complex.
    Ccr {
        file: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Einstein causality of a theory, optionally after quantization.
    CheckCausality {
        file: PathBuf,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Quantize a linear theory.
    Quantize {
        file: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// W-constancy along the listed morphisms (default: all).
    CheckW {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "strict")]
        mode: Mode,
        /// Comma-separated morphism names
        #[arg(long, value_delimiter = ',')]
        w: Vec<String>,
        /// Check the quantized theory stagewise at this truncation.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Linear Chern-Simons theory on a surface or a diagram of surfaces.
    Cs {
        #[command(subcommand)]
        cmd: CsCmd,
    },
}

#[derive(Subcommand)]
enum CsCmd {
    /// Homology dimensions of 𝔏(M) in degrees −1, 0 and 1
    Homology { file: PathBuf },
    /// The pairing on 𝔏(M) and its rank on homology
    Pairing { file: PathBuf },
    /// Quantize and check generator relations, d² = 0, Leibniz and causality
    Quantize {
        file: PathBuf,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Strict,
    Homotopy,
}

enum Failure {
    Input(String),
    Internal(String),
}

impl From<JsonError> for Failure {
    fn from(e: JsonError) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(Value, bool), Failure>;

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure::Internal(e.to_string())
}

fn input(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn read(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    js::parse_text(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn dims_json(d: &BTreeMap<i64, usize>) -> Value {
    Value::Object(d.iter().map(|(k, v)| (k.to_string(), json!(v))).collect())
}

fn word_name(w: &[usize]) -> String {
    w.iter().map(|g| format!("e{}", g + 1)).collect::<Vec<_>>().join("*")
}

/// Canonical text of an envelope element in generators `e1, e2, …`.
fn pbw_text(e: &PBWElement) -> String {
    if e.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, (w, c)) in e.terms().iter().enumerate() {
        let neg = c < &num_zero();
        let a = if neg { -c.clone() } else { c.clone() };
        let body = match (w.is_empty(), a == num_one()) {
            (true, _) => format_rational(&a),
            (false, true) => word_name(w),
            (false, false) => format!("{}*{}", format_rational(&a), word_name(w)),
        };
        out.push_str(match (k, neg) {
            (0, true) => "-",
            (0, false) => "",
            (_, true) => " - ",
            (_, false) => " + ",
        });
        out.push_str(&body);
    }
    out
}

fn num_zero() -> opft_core::Rational {
    opft_core::exact::int(0)
}

fn num_one() -> opft_core::Rational {
    opft_core::exact::int(1)
}

fn quasi_iso_json(f: &QuasiIsoFailure) -> Value {
    json!({
        "degree": f.degree,
        "source_homology": f.source_homology,
        "target_homology": f.target_homology,
        "rank": f.rank,
    })
}

fn causality_json(r: &CausalityReport) -> Value {
    let v: Vec<Value> = r
        .violations
        .iter()
        .map(|v| json!({"f1": v.f1, "f2": v.f2, "x": v.x, "y": v.y, "difference": js::sparse_to_json(&v.difference)}))
        .collect();
    json!({"ok": r.is_ok(), "checked": r.checked, "skipped": r.skipped, "violations": v})
}

fn w_json(r: &WReport) -> Value {
    let entries: Vec<Value> = r
        .entries
        .iter()
        .map(|e| {
            let witness = match &e.witness {
                None => Value::Null,
                Some(WWitness::NotInvertible(n)) => json!({"not_invertible_in_degree": n}),
                Some(WWitness::Homology(f)) => json!({"homology": quasi_iso_json(f)}),
            };
            json!({"morphism": e.morphism, "stage": e.stage, "ok": e.ok, "witness": witness})
        })
        .collect();
    let mode = match r.mode {
        WMode::Strict => "strict",
        WMode::Homotopy => "homotopy",
    };
    json!({"mode": mode, "ok": r.is_ok(), "entries": entries})
}

fn algebra_report(a: &DgAlgebra) -> Result<(Vec<Value>, bool), Failure> {
    let r = validate_algebra(a).map_err(internal)?;
    let mut problems = Vec::new();
    for n in &r.invalid_carrier {
        problems.push(json!({"d_squared_nonzero_at": n}));
    }
    for f in &r.derivation_failures {
        problems.push(json!({"leibniz": {"op": f.op, "inputs": f.inputs}}));
    }
    for v in &r.relations.violations {
        problems.push(json!({"relation": {"name": v.relation, "inputs": v.inputs, "difference": js::sparse_to_json(&v.difference)}}));
    }
    let ok = problems.is_empty();
    Ok((problems, ok))
}

fn presymplectic_report(p: &PresymplecticComplex) -> (Vec<Value>, bool) {
    let r = p.validate();
    let mut problems = Vec::new();
    for n in &r.invalid_carrier {
        problems.push(json!({"d_squared_nonzero_at": n}));
    }
    for (name, pairs) in [("degree", &r.degree), ("antisymmetry", &r.antisymmetry), ("chain_map", &r.chain_map)] {
        for (i, j) in pairs {
            problems.push(json!({ name: [i, j] }));
        }
    }
    let ok = problems.is_empty();
    (problems, ok)
}

fn functor_json(r: &FunctorReport) -> Value {
    json!({
        "not_chain_maps": r.not_chain_maps,
        "not_algebra_maps": r.not_algebra_maps,
        "identities": r.identities,
        "composition": r.composition,
    })
}

fn validity(problems: Vec<Value>, ok: bool) -> Outcome {
    let mut m = Map::new();
    m.insert("valid".into(), json!(ok));
    if !ok {
        m.insert("problems".into(), Value::Array(problems));
    }
    Ok((Value::Object(m), ok))
}

fn validate(v: &Value) -> Outcome {
    if v.get("surfaces").is_some() {
        let d = js::diagram_from_json(v, "$")?;
        return match build_bcs(&d) {
            Ok(b) => {
                let r = b.theory.validate();
                validity(vec![functor_json(&r)], r.is_ok())
            }
            Err(e) => validity(vec![json!(e.to_string())], false),
        };
    }
    if v.get("triangles").is_some() {
        let s = js::surface_from_json(v, "$")?;
        return match s.validate() {
            Ok(()) => validity(vec![], true),
            Err(e) => validity(vec![json!(e.to_string())], false),
        };
    }
    if v.get("objects").is_some() {
        let t = js::theory_from_json(v, "$")?;
        let mut problems = Vec::new();
        for (name, a) in t.base.objects().iter().zip(t.algebras()) {
            let (p, ok) = algebra_report(a)?;
            if !ok {
                problems.push(json!({ name: p }));
            }
        }
        let r = t.validate();
        if !r.is_ok() {
            problems.push(functor_json(&r));
        }
        let ok = problems.is_empty();
        return validity(problems, ok);
    }
    if v.get("omega").is_some() {
        let (p, ok) = presymplectic_report(&js::presymplectic_from_json(v, "$")?);
        return validity(p, ok);
    }
    if v.get("kind").is_some() {
        let (p, ok) = algebra_report(&js::algebra_from_json(v, "$")?)?;
        return validity(p, ok);
    }
    let c = js::complex_from_json(v, "$")?;
    let bad = c.validate();
    validity(bad.iter().map(|n| json!({"d_squared_nonzero_at": n})).collect(), bad.is_empty())
}

/// A uLie algebra file, or a presymplectic file through its Heisenberg algebra.
fn ulie_from(v: &Value) -> Result<DgAlgebra, Failure> {
    if v.get("omega").is_some() {
        Ok(heisenberg(&js::presymplectic_from_json(v, "$")?))
    } else {
        Ok(js::algebra_from_json(v, "$")?)
    }
}

fn carrier_from(v: &Value) -> Result<ChainComplex, Failure> {
    if v.get("omega").is_some() {
        Ok(js::presymplectic_from_json(v, "$")?.carrier)
    } else if v.get("kind").is_some() {
        Ok(js::algebra_from_json(v, "$")?.carrier().clone())
    } else {
        Ok(js::complex_from_json(v, "$")?)
    }
}

fn envelope_dims(v: &Value, n: usize) -> Outcome {
    let a = ulie_from(v)?;
    let env = envelope(&a, n).map_err(input)?;
    let mut stages = Map::new();
    let mut oracle = Map::new();
    let mut agrees = true;
    for k in 0..=n {
        let got = env.stage_dims(k);
        let want = filtration_dim(&a, k).map_err(internal)?;
        agrees &= got == want;
        stages.insert(k.to_string(), dims_json(&got));
        oracle.insert(k.to_string(), dims_json(&want));
    }
    Ok((json!({"n": n, "stages": stages, "pbw_count": oracle, "agrees": agrees}), agrees))
}

fn ccr_report(v: &Value, n: usize) -> Outcome {
    let p = js::presymplectic_from_json(v, "$")?;
    let env = opft_core::envelope::ccr(&p, n).map_err(input)?;
    let k = env.generators().len();
    let mut commutators = Map::new();
    if n >= 2 {
        for i in 0..k {
            for j in 0..k {
                let c = env.commutator(&env.generator(i), &env.generator(j)).map_err(internal)?;
                commutators.insert(format!("[e{},e{}]", i + 1, j + 1), json!(pbw_text(&c)));
            }
        }
    }
    let basis: Vec<Value> = env
        .basis()
        .iter()
        .map(|w| json!(if w.is_empty() { "1".to_string() } else { word_name(w) }))
        .collect();
    let degrees: Vec<Value> = env.generator_degrees().iter().map(|d| json!(d)).collect();
    Ok((
        json!({
            "n": n,
            "generator_degrees": degrees,
            "basis": basis,
            "dims": dims_json(env.complex().dims()),
            "commutators": commutators,
        }),
        true,
    ))
}

fn quantized_summary(t: &FieldTheory<TruncatedEnvelope>) -> Value {
    let objects: Map<String, Value> = t
        .base
        .objects()
        .iter()
        .zip(t.algebras())
        .map(|(name, env)| {
            (
                name.clone(),
                json!({"basis": env.basis().len(), "dims": dims_json(env.complex().dims())}),
            )
        })
        .collect();
    json!({"truncation": t.truncation(), "objects": objects})
}

/// A theory file, or the linear Chern-Simons theory of a diagram file.
fn theory_from(v: &Value) -> Result<FieldTheory<DgAlgebra>, Failure> {
    if v.get("surfaces").is_some() {
        let d = js::diagram_from_json(v, "$")?;
        Ok(build_bcs(&d).map_err(input)?.theory)
    } else {
        Ok(js::theory_from_json(v, "$")?)
    }
}

fn check_causality(v: &Value, n: Option<usize>) -> Outcome {
    let t = theory_from(v)?;
    let linear = t.check_causality().map_err(internal)?;
    let mut out = json!({"theory": causality_json(&linear)});
    let mut ok = linear.is_ok();
    if let (Some(n), true) = (n, ok) {
        let q = t.quantize(n).map_err(internal)?;
        let r = q.check_causality().map_err(internal)?;
        ok &= r.is_ok();
        out["quantized"] = causality_json(&r);
    }
    Ok((out, ok))
}

fn quantize(v: &Value, n: usize) -> Outcome {
    let t = theory_from(v)?;
    let linear = t.check_causality().map_err(internal)?;
    if !linear.is_ok() {
        return Ok((json!({"quantized": false, "causality": causality_json(&linear)}), false));
    }
    let q = t.quantize(n).map_err(internal)?;
    let r = q.check_causality().map_err(internal)?;
    let mut out = quantized_summary(&q);
    out["causality"] = causality_json(&r);
    out["quantized"] = json!(true);
    Ok((out, r.is_ok()))
}

fn w_indices<A: TheoryAlgebra>(t: &FieldTheory<A>, names: &[String]) -> Result<Vec<usize>, Failure> {
    if names.is_empty() {
        return Ok((0..t.base.morphisms().len()).filter(|&k| !t.base.is_identity(k)).collect());
    }
    names
        .iter()
        .map(|n| {
            t.base
                .morphism_index(n)
                .ok_or_else(|| Failure::Input(format!("--w: unknown morphism `{n}`")))
        })
        .collect()
}

fn check_w(v: &Value, mode: Mode, w: &[String], n: Option<usize>) -> Outcome {
    let t = theory_from(v)?;
    let mode = match mode {
        Mode::Strict => WMode::Strict,
        Mode::Homotopy => WMode::Homotopy,
    };
    let idx = w_indices(&t, w)?;
    let r = match n {
        None => t.check_w_constancy(&idx, mode).map_err(internal)?,
        Some(n) => t
            .quantize(n)
            .map_err(internal)?
            .check_w_stagewise(&idx, mode)
            .map_err(internal)?,
    };
    Ok((w_json(&r), r.is_ok()))
}

fn diagram(v: &Value) -> Result<(CsDiagram, bool), Failure> {
    let single = v.get("surfaces").is_none();
    Ok((js::diagram_or_surface_from_json(v)?, single))
}

fn per_surface(
    d: &CsDiagram,
    single: bool,
    mut f: impl FnMut(&CsModel) -> Result<(Value, bool), Failure>,
) -> Outcome {
    let mut out = Map::new();
    let mut ok = true;
    for (name, s) in &d.surfaces {
        let m = CsModel::new(s).map_err(input)?;
        let (v, good) = f(&m)?;
        ok &= good;
        if single {
            return Ok((v, ok));
        }
        out.insert(name.clone(), v);
    }
    Ok((Value::Object(out), ok))
}

fn cs(cmd: &CsCmd) -> Outcome {
    match cmd {
        CsCmd::Homology { file } => {
            let (d, single) = diagram(&read(file)?)?;
            per_surface(&d, single, |m| {
                let h = m.complex().homology_dims();
                let all: BTreeMap<i64, usize> = (-1..=1).map(|n| (n, h.get(&n).copied().unwrap_or(0))).collect();
                Ok((dims_json(&all), true))
            })
        }
        CsCmd::Pairing { file } => {
            let (d, single) = diagram(&read(file)?)?;
            per_surface(&d, single, |m| {
                let mut hp = Map::new();
                for n in m.complex().support() {
                    let mat = m.homology_pairing(n);
                    let rows: Vec<Value> = (0..mat.nrows())
                        .map(|r| (0..mat.ncols()).map(|c| json!(format_rational(&mat.get(r, c)))).collect())
                        .collect();
                    hp.insert(n.to_string(), Value::Array(rows));
                }
                let mut v = js::presymplectic_to_json(m.presymplectic());
                v["homology_pairing"] = Value::Object(hp);
                let (problems, ok) = presymplectic_report(m.presymplectic());
                v["valid"] = json!(ok);
                if !ok {
                    v["problems"] = Value::Array(problems);
                }
                Ok((v, ok))
            })
        }
        CsCmd::Quantize { file, n } => {
            let (d, single) = diagram(&read(file)?)?;
            let b = build_bcs(&d).map_err(input)?;
            let causal = b.theory.check_causality().map_err(internal)?;
            if !causal.is_ok() {
                return Ok((json!({"quantized": false, "causality": causality_json(&causal)}), false));
            }
            let q = b.theory.quantize(*n).map_err(internal)?;
            let mut objects = Map::new();
            let mut ok = true;
            for ((name, m), env) in b.theory.base.objects().iter().zip(&b.models).zip(q.algebras()) {
                let rel = quantized_relation_defects(m, env).map_err(internal)?;
                let d2 = env.complex().is_valid();
                let leibniz = env.leibniz_failures().map_err(internal)?.len();
                ok &= rel.is_ok() && d2 && leibniz == 0;
                let v = json!({
                    "basis": env.basis().len(),
                    "dims": dims_json(env.complex().dims()),
                    "generator_differential_failures": rel.differential.len(),
                    "commutator_failures": rel.commutators.len(),
                    "d_squared_zero": d2,
                    "leibniz_failures": leibniz,
                });
                objects.insert(name.clone(), v);
            }
            let r = q.check_causality().map_err(internal)?;
            ok &= r.is_ok();
            let body = if single {
                objects.into_iter().next().map(|(_, v)| v).unwrap_or(Value::Null)
            } else {
                Value::Object(objects)
            };
            Ok((json!({"truncation": n, "surfaces": body, "causality": causality_json(&r)}), ok))
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.cmd {
        Cmd::Validate { file } => validate(&read(file)?),
        Cmd::Homology { file } => {
            let c = carrier_from(&read(file)?)?;
            Ok((dims_json(&c.homology_dims()), true))
        }
        Cmd::EnvelopeDims { file, algebra, n } => {
            let path = algebra
                .as_ref()
                .or(file.as_ref())
                .ok_or_else(|| Failure::Input("envelope-dims needs an algebra file".into()))?;
            envelope_dims(&read(path)?, *n)
        }
        Cmd::Ccr { file, n } => ccr_report(&read(file)?, *n),
        Cmd::CheckCausality { file, n } => check_causality(&read(file)?, *n),
        Cmd::Quantize { file, n } => quantize(&read(file)?, *n),
        Cmd::CheckW { file, mode, w, n } => check_w(&read(file)?, *mode, w, *n),
        Cmd::Cs { cmd } => cs(cmd),
    }
}

fn emit(cli: &Cli, v: &Value) -> Result<(), String> {
    let text = js::to_text(v);
    match &cli.out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(|| run(&cli)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(Failure::Internal(msg))
    });
    let (report, code) = match outcome {
        Ok((v, true)) => (v, 0),
        Ok((v, false)) => (v, 1),
        Err(Failure::Input(m)) => (json!({"error": m}), 2),
        Err(Failure::Internal(m)) => (json!({"error": m, "internal": true}), 3),
    };
    if code >= 2 {
        if let Some(e) = report.get("error").and_then(Value::as_str) {
            eprintln!("opft: {e}");
        }
    }
    if let Err(e) = emit(&cli, &report) {
        eprintln!("opft: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
