//! Acceptance checks, one line per criterion. Runs as a plain binary so the
//! report is always printed.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use opft_core::algebras::{abelian, heisenberg, matrix_algebra, DgAlgebra};
use opft_core::cherns::{build_bcs, quantized_relation_defects, Cochain, CsModel, TriangulatedSurface};
use opft_core::complexes::{ChainComplex, ChainMap, Degree};
use opft_core::envelope::{
    adjunction_backward, adjunction_forward, ccr, envelope, envelope_map, filtration_dim, stage_map,
    stagewise_quasi_iso_failure, PBWElement,
};
use opft_core::exact::{int, RationalMatrix, SparseVec};
use opft_core::fieldtheory::{FieldTheory, WMode};
use opft_core::json::{diagram_or_surface_from_json, parse_text, surface_from_json, theory_from_json};
use opft_core::operads::{evaluate, named_presentation, phi_ulie_to_as, relations_hold, NamedOperad};
use support::*;

const RELATIONS_LIMIT: Duration = Duration::from_secs(5);
const PBW_LIMIT: Duration = Duration::from_secs(1);
const SURFACE_LIMIT: Duration = Duration::from_secs(2);
const COMPLEX_LIMIT: Duration = Duration::from_secs(30);
const DETERMINISM_RUNS: usize = 3;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn load(rel: &str) -> serde_json::Value {
    parse_text(&std::fs::read_to_string(data(rel)).unwrap()).unwrap()
}

fn within(t: Instant, limit: Duration) -> Check {
    let e = t.elapsed();
    if e < limit {
        Ok(format!("{:.2}s < {}s", e.as_secs_f64(), limit.as_secs()))
    } else {
        Err(format!("took {:.2}s, limit {}s", e.as_secs_f64(), limit.as_secs()))
    }
}

fn sound(a: &DgAlgebra) -> bool {
    relations_hold(&named_presentation(a.kind()), a).unwrap()
}

fn presentation_soundness() -> Check {
    let t = Instant::now();
    let mut r = rng(101);
    let mut checked = 0;
    let mut samples = vec![
        ("matrices", matrix_algebra(2)),
        ("gl2 Lie", gl2(NamedOperad::Lie)),
        ("gl2 uLie", gl2(NamedOperad::ULie)),
        ("poisson", truncated_poisson()),
    ];
    for degrees in [vec![0, 0], vec![0, 0, 0, 0], vec![-1, 0, 0, 1]] {
        samples.push(("heisenberg", heisenberg(&random_presymplectic(&mut r, &degrees))));
    }
    for (name, a) in &samples {
        ensure!(sound(a), "{name} has violations");
    }
    for (name, a) in &samples[..3] {
        for (op, tuple, k, b) in single_defects(a) {
            ensure!(!sound(&b), "{name}: {op}{tuple:?} -> e{k} undetected");
            checked += 1;
        }
    }
    // x·x or y·y moved to another quadratic monomial is again a Poisson algebra
    let quadratic = |op: &str, t: &[usize], k: usize| op == "mu" && t.len() == 2 && t[0] == t[1] && (1..=2).contains(&t[0]) && k >= 3;
    for (op, tuple, k, b) in single_defects(&samples[3].1) {
        if quadratic(&op, &tuple, k) {
            ensure!(sound(&b), "poisson: {op}{tuple:?} -> e{k} should remain valid");
        } else {
            ensure!(!sound(&b), "poisson: {op}{tuple:?} -> e{k} undetected");
            checked += 1;
        }
    }
    let timing = within(t, RELATIONS_LIMIT)?;
    Ok(format!("{} sound algebras, {checked} defects detected, {timing}", samples.len()))
}

fn phi_well_defined() -> Check {
    let images = phi_ulie_to_as().relation_images().map_err(|e| e.to_string())?;
    ensure!(images.len() == 3, "{} relation images", images.len());
    let mut r = rng(202);
    let mut evaluations = 0;
    for _ in 0..50 {
        let (name, a) = random_associative(&mut r);
        let n = a.carrier().total_dim();
        ensure!(n <= 4, "{name} has dimension {n}");
        for (rel, e) in &images {
            let arity = e.arity().unwrap_or(0);
            let mut tuple = vec![0usize; arity];
            loop {
                let x: Vec<SparseVec> = tuple.iter().map(|&i| SparseVec::from([(i, int(1))])).collect();
                let v = evaluate(e, &a, &x).map_err(|err| format!("{name}: {rel}: {err}"))?;
                ensure!(v.is_empty(), "{name}: {rel} on {tuple:?} gives {v:?}");
                evaluations += 1;
                if !advance(&mut tuple, n) {
                    break;
                }
            }
        }
    }
    Ok(format!("50 algebras, {evaluations} exact zeros"))
}

fn pbw_oracle() -> Check {
    let t = Instant::now();
    let h = heisenberg(&plane());
    let u = envelope(&h, 6).map_err(|e| e.to_string())?;
    for n in 0..=6 {
        let (got, want) = (u.stage_dims(n), filtration_dim(&h, n).map_err(|e| e.to_string())?);
        ensure!(got == want, "plane stage {n}: {got:?} vs {want:?}");
    }
    let total = u.basis().len();
    ensure!(total == 28, "plane total {total}");
    let odd = ChainComplex::new(BTreeMap::from([(0, 1), (1, 1)]), BTreeMap::new()).unwrap();
    let v = abelian(NamedOperad::ULie, odd).map_err(|e| e.to_string())?;
    for n in 1..=6 {
        let b = envelope(&v, n).map_err(|e| e.to_string())?.basis().len();
        let f: usize = filtration_dim(&v, n).map_err(|e| e.to_string())?.values().sum();
        ensure!(b == 2 && f == 2, "odd generator at n = {n}: basis {b}, oracle {f}");
    }
    let timing = within(t, PBW_LIMIT)?;
    Ok(format!("plane total 28, odd generator total 2, {timing}"))
}

fn ccr_relations() -> Check {
    let u = ccr(&plane(), 2).map_err(|e| e.to_string())?;
    let c = u.commutator(&u.generator(0), &u.generator(1)).map_err(|e| e.to_string())?;
    ensure!(c == PBWElement::one(), "plane: e1·e2 − e2·e1 = {c:?}");
    let p = random_presymplectic(&mut rng(303), &[-1, 0, 0, 1]);
    let u = ccr(&p, 2).map_err(|e| e.to_string())?;
    let mut pairs = 0;
    for i in 0..4 {
        for j in 0..4 {
            let c = u.commutator(&u.generator(i), &u.generator(j)).map_err(|e| e.to_string())?;
            ensure!(c == PBWElement::one().scale(&p.omega(i, j)), "[e{i}, e{j}] = {c:?}");
            pairs += 1;
        }
    }
    Ok(format!("plane commutator 1, {pairs} graded pairs"))
}

fn adjunction_roundtrip() -> Check {
    let a = associative_families().into_iter().find(|(n, _)| *n == "dual numbers").unwrap().1;
    let v = abelian(NamedOperad::ULie, ChainComplex::concentrated(0, 2)).unwrap();
    let mut tested = 0;
    for n in 1..=3 {
        let u = envelope(&v, n).map_err(|e| e.to_string())?;
        for scale in [0, 1, -2, 5] {
            let rho = ChainMap::new(
                v.carrier().clone(),
                a.carrier().clone(),
                BTreeMap::from([(0, RationalMatrix::from_i64(&[&[1, 0], &[0, scale]]))]),
            )
            .unwrap();
            let kappa = adjunction_backward(&rho, &u, &a).map_err(|e| e.to_string())?;
            let rho2 = adjunction_forward(&kappa, &u, &a).map_err(|e| e.to_string())?;
            ensure!(rho2 == rho, "forward∘backward differs at n = {n}, scale {scale}");
            let kappa2 = adjunction_backward(&rho2, &u, &a).map_err(|e| e.to_string())?;
            ensure!(kappa2 == kappa, "backward∘forward differs at n = {n}, scale {scale}");
            tested += 1;
        }
    }
    Ok(format!("{tested} morphisms round trip"))
}

fn causality() -> Check {
    let t = theory_from_json(&load("theories/toy.json"), "$").map_err(|e| e.to_string())?;
    ensure!(t.base.objects().len() == 3, "toy has {} objects", t.base.objects().len());
    ensure!(t.check_causality().map_err(|e| e.to_string())?.is_ok(), "linear theory is not causal");
    let q = t.quantize(3).map_err(|e| e.to_string())?;
    ensure!(q.validate().is_ok(), "quantized theory is not a functor");
    ensure!(q.check_causality().map_err(|e| e.to_string())?.is_ok(), "quantized theory is not causal");
    let bad = theory_from_json(&load("theories/planted_defect.json"), "$").map_err(|e| e.to_string())?;
    ensure!(!bad.check_causality().map_err(|e| e.to_string())?.is_ok(), "planted defect went unnoticed");
    Ok("toy causal before and after n = 3, planted defect caught".into())
}

fn w_indices<A>(t: &FieldTheory<A>, name: &str) -> Vec<usize> {
    vec![t.base.morphism_index(name).unwrap()]
}

fn w_constancy() -> Check {
    let t = theory_from_json(&load("theories/invertible.json"), "$").map_err(|e| e.to_string())?;
    let w = w_indices(&t, "evolve");
    ensure!(t.check_w_constancy(&w, WMode::Strict).map_err(|e| e.to_string())?.is_ok(), "linear action not invertible");
    for n in 0..=4 {
        let r = t.quantize(n).map_err(|e| e.to_string())?.check_w_stagewise(&w, WMode::Strict).map_err(|e| e.to_string())?;
        ensure!(r.is_ok(), "stage not invertible at n = {n}: {r:?}");
    }
    let d = diagram_or_surface_from_json(&load("diagrams/annulus_collar.json")).map_err(|e| e.to_string())?;
    let b = build_bcs(&d).map_err(|e| e.to_string())?;
    let w = w_indices(&b.theory, "collar");
    let h = b.theory.check_w_constancy(&w, WMode::Homotopy).map_err(|e| e.to_string())?;
    ensure!(h.is_ok(), "collar is not a quasi-isomorphism: {h:?}");
    let s = b.theory.check_w_constancy(&w, WMode::Strict).map_err(|e| e.to_string())?;
    ensure!(!s.is_ok(), "collar unexpectedly strictly invertible");
    let hq = b.theory.quantize(2).map_err(|e| e.to_string())?.check_w_stagewise(&w, WMode::Homotopy).map_err(|e| e.to_string())?;
    ensure!(hq.is_ok(), "quantized collar fails: {hq:?}");
    Ok("evolve invertible on stages of n ≤ 4, collar quasi-iso (linear and stages of n = 2)".into())
}

fn filtration_lemma() -> Check {
    let carrier = ChainComplex::new(
        BTreeMap::from([(0, 2), (1, 1)]),
        BTreeMap::from([(1, RationalMatrix::from_i64(&[&[0], &[1]]))]),
    )
    .unwrap();
    let v = abelian(NamedOperad::ULie, carrier).unwrap();
    let w = abelian(NamedOperad::ULie, ChainComplex::unit()).unwrap();
    let rho = ChainMap::new(
        v.carrier().clone(),
        w.carrier().clone(),
        BTreeMap::from([(0, RationalMatrix::from_i64(&[&[1, 0]]))]),
    )
    .unwrap();
    ensure!(rho.is_quasi_iso(), "acyclic-to-unit is not a quasi-isomorphism");
    let (uv, uw) = (envelope(&v, 4).unwrap(), envelope(&w, 4).unwrap());
    let f = envelope_map(&rho, &uv, &uw).map_err(|e| e.to_string())?;
    for k in 0..=4 {
        let s = stage_map(&f, &uv, &uw, k).map_err(|e| e.to_string())?;
        ensure!(s.is_quasi_iso(), "acyclic-to-unit fails at stage {k}");
    }
    // ℚ ↪ ℚ² on the non-unit summands
    let v = abelian(NamedOperad::ULie, ChainComplex::concentrated(0, 2)).unwrap();
    let w = abelian(NamedOperad::ULie, ChainComplex::concentrated(0, 3)).unwrap();
    let rho = ChainMap::new(
        v.carrier().clone(),
        w.carrier().clone(),
        BTreeMap::from([(0, RationalMatrix::from_i64(&[&[1, 0], &[0, 1], &[0, 0]]))]),
    )
    .unwrap();
    let (uv, uw) = (envelope(&v, 2).unwrap(), envelope(&w, 2).unwrap());
    let f = envelope_map(&rho, &uv, &uw).map_err(|e| e.to_string())?;
    let second = stage_map(&f, &uv, &uw, 2).map_err(|e| e.to_string())?;
    let fail = second.quasi_iso_failure().map_err(|e| e.to_string())?;
    let Some(fail) = fail else {
        return Err("ℚ ↪ ℚ² passes at stage 2".into());
    };
    ensure!(fail.source_homology != fail.target_homology, "witness without a dimension mismatch");
    let first = stagewise_quasi_iso_failure(&f, &uv, &uw).map_err(|e| e.to_string())?.map(|(k, _)| k);
    Ok(format!(
        "acyclic-to-unit stages 0..4 quasi-iso; ℚ ↪ ℚ² stage 2 fails in degree {} ({} vs {}), first failure at stage {}",
        fail.degree,
        fail.source_homology,
        fail.target_homology,
        first.map_or("none".into(), |k| k.to_string())
    ))
}

fn surface(rel: &str) -> TriangulatedSurface {
    surface_from_json(&load(rel), "$").unwrap()
}

fn dims(m: &CsModel) -> [usize; 3] {
    let h = m.complex().homology_dims();
    [-1, 0, 1].map(|n: Degree| h.get(&n).copied().unwrap_or(0))
}

fn cs_homology() -> Check {
    let t = Instant::now();
    let mut out = Vec::new();
    for (rel, want) in [
        ("surfaces/tetrahedron.json", [1, 0, 1]),
        ("surfaces/torus.json", [1, 2, 1]),
        ("surfaces/disk.json", [1, 0, 0]),
    ] {
        let s = surface(rel);
        let m = CsModel::new(&s).map_err(|e| e.to_string())?;
        let got = dims(&m);
        ensure!(got == want, "{rel}: {got:?}, expected {want:?}");
        out.push(format!("{got:?}"));
    }
    ensure!(surface("surfaces/torus.json").vertices == 9, "torus is not the 9-vertex one");
    let timing = within(t, SURFACE_LIMIT)?;
    Ok(format!("sphere {}, torus {}, disk {}, {timing}", out[0], out[1], out[2]))
}

/// Seam cocycles `a*`, `b*` of the `k × k` torus, crossing `i = k−1 → 0` and `j = k−1 → 0`.
fn seams(k: usize) -> (Cochain, Cochain) {
    let v = |i: usize, j: usize| k * (i % k) + (j % k);
    let mut a = Cochain::new();
    let mut b = Cochain::new();
    for t in 0..k {
        a.insert(vec![v(k - 1, t), v(0, t)], int(1));
        a.insert(vec![v(k - 1, t), v(0, t + 1)], int(1));
        b.insert(vec![v(t, k - 1), v(t, 0)], int(1));
        b.insert(vec![v(t, k - 1), v(t + 1, 0)], int(1));
    }
    (a, b)
}

fn seam_commutator(s: &TriangulatedSurface) -> Result<opft_core::exact::Rational, String> {
    let m = CsModel::new(s).map_err(|e| e.to_string())?;
    let env = ccr(m.presymplectic(), 2).map_err(|e| e.to_string())?;
    let (a, b) = seams(3);
    let lift = |c: &Cochain| -> Result<PBWElement, String> {
        let x = m.from_cochain(c).ok_or("seam touches the boundary")?;
        let layout = opft_core::algebras::HeisenbergLayout::of(m.complex());
        Ok(env.embed(&x.iter().map(|(&i, q)| (layout.embedding[i], q.clone())).collect()))
    };
    let c = env.commutator(&lift(&a)?, &lift(&b)?).map_err(|e| e.to_string())?;
    let w = c.coefficient(&[]);
    ensure!(c == PBWElement::one().scale(&w), "[Â(a*), Â(b*)] is not central: {c:?}");
    Ok(w)
}

fn cs_relations() -> Check {
    let s = surface("surfaces/torus.json");
    let m = CsModel::new(&s).map_err(|e| e.to_string())?;
    let env = ccr(m.presymplectic(), 2).map_err(|e| e.to_string())?;
    let report = quantized_relation_defects(&m, &env).map_err(|e| e.to_string())?;
    ensure!(report.is_ok(), "generator relations fail: {report:?}");
    ensure!(env.complex().is_valid(), "d² ≠ 0");
    let leibniz = env.leibniz_failures().map_err(|e| e.to_string())?;
    ensure!(leibniz.is_empty(), "Leibniz fails on {} pairs", leibniz.len());
    let w = seam_commutator(&s)?;
    ensure!(w == int(1) || w == int(-1), "[Â(a*), Â(b*)] = {w}·𝟙");
    let mut flipped = s.clone();
    for t in &mut flipped.triangles {
        t.swap(1, 2);
    }
    let w_flip = seam_commutator(&flipped)?;
    ensure!(w_flip == -w.clone(), "reversed orientation gives {w_flip}, expected {}", -w.clone());
    Ok(format!(
        "{} generators, basis {}, [Â(a*), Â(b*)] = {w}·𝟙 ({w_flip} reversed)",
        m.complex().total_dim(),
        env.basis().len()
    ))
}

fn complex_properties() -> Check {
    let t = Instant::now();
    let mut r = rng(404);
    for case in 0..100 {
        let a = random_complex(&mut r, 12).complex;
        let from_homology: i64 = a
            .homology_dims()
            .iter()
            .map(|(n, d)| if n % 2 == 0 { *d as i64 } else { -(*d as i64) })
            .sum();
        ensure!(a.euler_characteristic() == from_homology, "Euler identity fails in case {case}");
        let b = random_complex(&mut r, 12).complex;
        let mut want = BTreeMap::new();
        for (p, x) in a.homology_dims() {
            for (q, y) in b.homology_dims() {
                *want.entry(p + q).or_insert(0) += x * y;
            }
        }
        want.retain(|_, d| *d > 0);
        let mut got = a.tensor(&b).homology_dims();
        got.retain(|_, d| *d > 0);
        ensure!(got == want, "Künneth fails in case {case}: {got:?} vs {want:?}");
    }
    let timing = within(t, COMPLEX_LIMIT)?;
    Ok(format!("100 complexes, {timing}"))
}

fn cli_runs() -> Vec<Vec<String>> {
    let mut runs: Vec<Vec<String>> = Vec::new();
    let mut all = Vec::new();
    for dir in ["", "algebras", "diagrams", "surfaces", "theories"] {
        let mut files: Vec<PathBuf> = std::fs::read_dir(data(dir))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        all.extend(files);
    }
    let s = |p: &Path| p.to_string_lossy().into_owned();
    for f in &all {
        runs.push(vec!["validate".into(), s(f)]);
    }
    let d = |rel: &str| s(&data(rel));
    let args = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    runs.push(args(&["homology", &d("complex.json")]));
    for a in ["algebras/heisenberg_plane.json", "algebras/odd_line.json"] {
        runs.push(args(&["envelope-dims", &d(a), "--n", "3"]));
    }
    runs.push(args(&["ccr", &d("plane.json"), "--n", "2"]));
    for t in ["theories/toy.json", "theories/planted_defect.json"] {
        runs.push(args(&["check-causality", &d(t), "--n", "2"]));
        runs.push(args(&["quantize", &d(t), "--n", "2"]));
    }
    runs.push(args(&["check-w", &d("theories/invertible.json"), "--mode", "strict", "--w", "evolve", "--n", "2"]));
    runs.push(args(&["check-w", &d("diagrams/annulus_collar.json"), "--mode", "homotopy", "--w", "collar"]));
    runs.push(args(&["check-w", &d("diagrams/annulus_collar.json"), "--mode", "strict", "--w", "collar"]));
    runs.push(args(&["check-causality", &d("diagrams/disks_in_sphere.json")]));
    for f in ["surfaces/tetrahedron.json", "surfaces/torus.json", "surfaces/disk.json", "surfaces/annulus.json"] {
        runs.push(args(&["cs", "homology", &d(f)]));
        runs.push(args(&["cs", "pairing", &d(f)]));
    }
    for f in ["diagrams/disks_in_sphere.json", "diagrams/annulus_collar.json"] {
        runs.push(args(&["cs", "homology", &d(f)]));
        runs.push(args(&["cs", "quantize", &d(f), "--n", "2"]));
    }
    runs.push(args(&["cs", "quantize", &d("surfaces/torus.json"), "--n", "2"]));
    runs
}

fn determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_opft");
    let runs = cli_runs();
    for args in &runs {
        let mut first: Option<(Option<i32>, Vec<u8>)> = None;
        for _ in 0..DETERMINISM_RUNS {
            let out = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
            let code = out.status.code();
            ensure!(matches!(code, Some(0) | Some(1)), "`opft {}` exited with {code:?}", args.join(" "));
            let got = (code, out.stdout);
            match &first {
                None => first = Some(got),
                Some(f) => ensure!(*f == got, "`opft {}` output differs between runs", args.join(" ")),
            }
        }
    }
    Ok(format!("{} invocations × {DETERMINISM_RUNS} runs byte-identical", runs.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("presentation soundness", presentation_soundness),
        ("φ well-definedness", phi_well_defined),
        ("PBW filtration oracle", pbw_oracle),
        ("CCR relations", ccr_relations),
        ("adjunction round trip", adjunction_roundtrip),
        ("quantization preserves causality", causality),
        ("W-constancy preservation", w_constancy),
        ("filtration stages and quasi-isomorphisms", filtration_lemma),
        ("Chern-Simons homology", cs_homology),
        ("Chern-Simons quantized relations", cs_relations),
        ("complex identities", complex_properties),
        ("CLI determinism", determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
