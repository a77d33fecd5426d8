//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if
//! any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cdiag::bn::{attach_model, VerifyOptions};
use cdiag::graph::is_d_separated;
use cdiag::report::analyze_and_verify;
use cdiag::taxonomy::{
    advise_learning_strategies, analyze_selection, classify_direction, detect_dataset_shifts, DirectionKind,
    Factor, InducedBias, SelectionType, ShiftType, SslAdvice,
};
use cdiag::{parse_dsl, serialize_dsl};
use common::*;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn subsets_up_to(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &x in pool {
        let grown: Vec<Vec<usize>> = out
            .iter()
            .filter(|s| s.len() < k)
            .map(|s| {
                let mut t = s.clone();
                t.push(x);
                t
            })
            .collect();
        out.extend(grown);
    }
    out
}

fn random_dag(rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let n = rng.random_range(2..=6);
    let density: f64 = rng.random_range(0.2..0.7);
    (0..n).map(|v| (0..v).filter(|_| rng.random::<f64>() < density).collect()).collect()
}

fn c1_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut separated, mut connected) = (0usize, 0usize);
    let mut worst_sep = 0.0f64;
    for g in 0..100 {
        let parents = random_dag(&mut rng);
        let n = parents.len();
        let diagram = parse_dsl(&dag_dsl(&parents)).map_err(|e| format!("{e:?}"))?;
        let models: Vec<_> = (0..20)
            .map(|_| {
                let probs: Vec<Vec<f64>> = parents
                    .iter()
                    .map(|ps| (0..1usize << ps.len()).map(|_| rng.random_range(0.05..0.95)).collect())
                    .collect();
                attach_model(&diagram, &dag_cpt(&parents, &probs)).expect("random model attaches")
            })
            .collect();
        for a in 0..n {
            for b in a + 1..n {
                let rest: Vec<usize> = (0..n).filter(|&v| v != a && v != b).collect();
                for c in subsets_up_to(&rest, 2) {
                    let given: Vec<String> = c.iter().map(|v| format!("N{v}")).collect();
                    let given: Vec<&str> = given.iter().map(String::as_str).collect();
                    let (an, bn) = (format!("N{a}"), format!("N{b}"));
                    let sep = is_d_separated(&diagram, &[a], &[b], &c);
                    let cmis: Vec<f64> = models
                        .iter()
                        .map(|m| m.conditional_mutual_information(&an, &bn, &given).unwrap())
                        .collect();
                    let max = cmis.iter().cloned().fold(0.0, f64::max);
                    if sep {
                        separated += 1;
                        worst_sep = worst_sep.max(max);
                        check(max <= 1e-9, format!("graph {g}: {an} _||_ {bn} | {given:?} but CMI {max:e}"))?;
                    } else {
                        connected += 1;
                        check(max > 1e-6, format!("graph {g}: {an}, {bn} | {given:?} connected but CMI {max:e}"))?;
                    }
                }
            }
        }
    }
    Ok(format!(
        "{separated} separated triples (max CMI {worst_sep:.1e}), {connected} connected triples all dependent"
    ))
}

fn c2_brute_force() -> Outcome {
    let mut checked = 0usize;
    for n in 1..=5usize {
        let slots: Vec<(usize, usize)> = (0..n).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
        for mask in 0u32..(1 << slots.len()) {
            let mut parents = vec![vec![]; n];
            for (k, &(i, j)) in slots.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    parents[j].push(i);
                }
            }
            let diagram = parse_dsl(&dag_dsl(&parents)).map_err(|e| format!("{e:?}"))?;
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    let rest: Vec<usize> = (0..n).filter(|&v| v != a && v != b).collect();
                    for z in subsets_up_to(&rest, rest.len()) {
                        let fast = is_d_separated(&diagram, &[a], &[b], &z);
                        let slow = brute_force_separated(&parents, a, b, &z);
                        check(fast == slow, format!("n={n} mask={mask:#b} a={a} b={b} z={z:?}: {fast} vs {slow}"))?;
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{checked} (graph, a, b, Z) cases agree"))
}

fn c3_taxonomy() -> Outcome {
    use DirectionKind::*;
    use ShiftType::*;
    let shifts = [
        ("shift_a", Causal, PopulationShift, Factor::AnatomyMarginal),
        ("shift_b", Causal, AcquisitionShift, Factor::ImageGivenAnatomy),
        ("shift_c", Causal, AnnotationShift, Factor::TargetGivenImage),
        ("shift_d", Anticausal, PrevalenceShift, Factor::TargetMarginal),
        ("shift_e", Anticausal, ManifestationShift, Factor::AnatomyGivenTarget),
        ("shift_f", Anticausal, AcquisitionShift, Factor::ImageGivenAnatomy),
    ];
    for (name, dir, ty, factor) in shifts {
        let scan = detect_dataset_shifts(&corpus_diagram(name)).map_err(|e| e.to_string())?;
        check(scan.direction.kind == dir, format!("{name}: direction {:?}", scan.direction.kind))?;
        check(scan.findings.len() == 1, format!("{name}: {} findings", scan.findings.len()))?;
        let f = &scan.findings[0];
        check(f.shift_type == ty && f.changed_factor == factor, format!("{name}: {:?} {:?}", f.shift_type, f.changed_factor))?;
    }
    let selections = [
        ("selection_a", SelectionType::Random, InducedBias::None),
        ("selection_b", SelectionType::ImageDependent, InducedBias::PopulationShiftLike),
        ("selection_c", SelectionType::TargetDependent, InducedBias::PrevalenceShiftLike),
        ("selection_d", SelectionType::JointDependent, InducedBias::SpuriousAssociation),
    ];
    for (name, ty, bias) in selections {
        let found = analyze_selection(&corpus_diagram(name)).map_err(|e| e.to_string())?;
        check(found.len() == 1, format!("{name}: {} selection findings", found.len()))?;
        check(
            found[0].selection_type == ty && found[0].induced_bias == bias,
            format!("{name}: {:?} {:?}", found[0].selection_type, found[0].induced_bias),
        )?;
    }
    Ok("6 shift and 4 selection diagrams match both tables".into())
}

fn c4_examples() -> Outcome {
    let skin = corpus_diagram("skin_lesion");
    let dir = classify_direction(&skin).map_err(|e| e.to_string())?;
    check(dir.kind == DirectionKind::Anticausal, format!("skin_lesion direction {:?}", dir.kind))?;
    let sel = analyze_selection(&skin).map_err(|e| e.to_string())?;
    check(
        sel.len() == 1
            && sel[0].selection_type == SelectionType::ImageDependent
            && sel[0].recoverable_predictive_relation,
        format!("skin_lesion selection {sel:?}"),
    )?;

    let brain = corpus_diagram("brain_tumour");
    let scan = detect_dataset_shifts(&brain).map_err(|e| e.to_string())?;
    check(scan.direction.kind == DirectionKind::Causal, format!("brain_tumour direction {:?}", scan.direction.kind))?;
    let mut types: Vec<ShiftType> = scan.findings.iter().map(|f| f.shift_type).collect();
    types.sort_by_key(|t| format!("{t:?}"));
    check(
        types == [ShiftType::AcquisitionShift, ShiftType::PopulationShift],
        format!("brain_tumour shifts {types:?}"),
    )?;
    let ssl = advise_learning_strategies(&scan.direction).ssl;
    check(ssl == SslAdvice::TheoreticallyFutile, format!("brain_tumour ssl {ssl:?}"))?;
    Ok("skin_lesion anticausal + recoverable image selection; brain_tumour causal + acquisition/population, SSL futile".into())
}

fn c5_transportability() -> Outcome {
    let model = corpus_model("shift_a");
    let o = Oracle::new(&model);
    let (d, x, y, z) = (o.index("D"), o.index("X"), o.index("Y"), o.index("Z"));
    let (tr, te) = (o.state("D", "train"), o.state("D", "test"));
    let mut worst: f64 = 0.0;
    for xs in 0..o.vars[x].1.len() {
        if o.mass(&[(d, tr), (x, xs)]) > 0.0 && o.mass(&[(d, te), (x, xs)]) > 0.0 {
            worst = worst.max(tv(&o.conditional(y, &[(d, tr), (x, xs)]), &o.conditional(y, &[(d, te), (x, xs)])));
        }
    }
    let zshift = tv(&o.conditional(z, &[(d, tr)]), &o.conditional(z, &[(d, te)]));
    check(worst <= 1e-9, format!("max TV P(Y|X) = {worst:e}"))?;
    check(zshift >= 0.05, format!("TV P(Z) = {zshift}"))?;
    // the library's own check must agree
    let report = analyze_and_verify(&model, &VerifyOptions::default()).map_err(|e| e.to_string())?;
    let v = report.verification.as_ref().ok_or("no verification")?;
    check(v.passed, "library verification did not pass")?;
    Ok(format!("max TV P(Y|X) = {worst:.1e}, TV P(Z) = {zshift:.3}"))
}

fn c6_reweighting() -> Outcome {
    let model = corpus_model("shift_d");
    let o = Oracle::new(&model);
    let (d, x, y) = (o.index("D"), o.index("X"), o.index("Y"));
    let (tr, te) = (o.state("D", "train"), o.state("D", "test"));
    let (nx, ny) = (o.vars[x].1.len(), o.vars[y].1.len());
    // 0-1 loss of the train Bayes classifier
    let h: Vec<usize> = (0..nx)
        .map(|xs| {
            let p = o.conditional(y, &[(d, tr), (x, xs)]);
            (0..ny).fold(0, |best, k| if p[k] > p[best] { k } else { best })
        })
        .collect();
    let loss = |xs: usize, ys: usize| if h[xs] == ys { 0.0 } else { 1.0 };
    let py_tr = o.conditional(y, &[(d, tr)]);
    let py_te = o.conditional(y, &[(d, te)]);
    let (mut e_tr, mut e_tr_w, mut e_te) = (0.0, 0.0, 0.0);
    for xs in 0..nx {
        for ys in 0..ny {
            let p_tr = o.mass(&[(d, tr), (x, xs), (y, ys)]) / o.mass(&[(d, tr)]);
            let p_te = o.mass(&[(d, te), (x, xs), (y, ys)]) / o.mass(&[(d, te)]);
            e_tr += p_tr * loss(xs, ys);
            e_tr_w += p_tr * py_te[ys] / py_tr[ys] * loss(xs, ys);
            e_te += p_te * loss(xs, ys);
        }
    }
    let (gap, corrected) = ((e_tr - e_te).abs(), (e_tr_w - e_te).abs());
    check(corrected <= 1e-9, format!("corrected gap {corrected:e}"))?;
    check(gap >= 0.02, format!("uncorrected gap {gap}"))?;
    let report = analyze_and_verify(&model, &VerifyOptions::default()).map_err(|e| e.to_string())?;
    let v = report.verification.as_ref().ok_or("no verification")?;
    let c = v.corrections.first().ok_or("no correction check")?;
    check(
        c.passed && (c.uncorrected_bias - gap).abs() <= 1e-12,
        format!("library correction {c:?} disagrees with oracle gap {gap}"),
    )?;
    Ok(format!("uncorrected gap {gap:.4}, reweighted gap {corrected:.1e}"))
}

/// I(X;Y|S) for two fair coins with S = X or Y.
const BERKSON_CMI: f64 = 0.130_812_035_941_136_83;

fn c7_berkson() -> Outcome {
    let model = corpus_model("selection_d");
    let o = Oracle::new(&model);
    let (x, y, s) = (o.index("X"), o.index("Y"), o.index("S"));
    let marginal = o.cmi(x, y, &[]);
    let given_s = o.cmi(x, y, &[s]);
    let h = |p: f64| -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
    let closed_form = 0.75 * (2.0 * h(1.0 / 3.0) - 3f64.ln());
    check((closed_form - BERKSON_CMI).abs() < 1e-12, "closed form drifted")?;
    check((given_s - BERKSON_CMI).abs() < 1e-12, format!("oracle CMI(X;Y|S) = {given_s}"))?;
    let lib_m = model.conditional_mutual_information("X", "Y", &[]).map_err(|e| e.to_string())?;
    let lib_s = model.conditional_mutual_information("X", "Y", &["S"]).map_err(|e| e.to_string())?;
    check(lib_m <= 1e-9 && marginal <= 1e-9, format!("CMI(X;Y) = {lib_m:e} / oracle {marginal:e}"))?;
    check(lib_s >= 0.05 && (lib_s - given_s).abs() < 1e-12, format!("library CMI(X;Y|S) = {lib_s}"))?;
    Ok(format!("CMI(X;Y) = {lib_m:.1e}, CMI(X;Y|S) = {lib_s:.6} nats"))
}

fn c8_recoverability() -> Outcome {
    let model = corpus_model("selection_b");
    let o = Oracle::new(&model);
    let (x, y, s) = (o.index("X"), o.index("Y"), o.index("S"));
    let inside = o.state("S", "in");
    let mut worst: f64 = 0.0;
    for xs in 0..o.vars[x].1.len() {
        if o.mass(&[(x, xs), (s, inside)]) > 0.0 {
            worst = worst.max(tv(&o.conditional(y, &[(x, xs), (s, inside)]), &o.conditional(y, &[(x, xs)])));
        }
    }
    check(worst <= 1e-9, format!("max TV = {worst:e}"))?;
    let report = analyze_and_verify(&model, &VerifyOptions::default()).map_err(|e| e.to_string())?;
    let v = report.verification.as_ref().ok_or("no verification")?;
    let rec = v.checks.iter().find(|c| c.discrepancy.is_some()).ok_or("no recoverability check")?;
    check(rec.discrepancy.unwrap() <= 1e-9, format!("library discrepancy {:?}", rec.discrepancy))?;
    Ok(format!("max TV P(Y|X,S=in) vs P(Y|X) = {worst:.1e}"))
}

const FUZZ_CASES: usize = 100_000;
const FUZZ_LIMIT: Duration = Duration::from_millis(100);

fn mutate(rng: &mut ChaCha8Rng, seeds: &[Vec<u8>]) -> Vec<u8> {
    const ALPHABET: &[u8] = b"diagram node edge kind role label = -> { } \" # \n\t abcXYZ_019 .,:;()[]\\";
    let mut buf = match rng.random_range(0..4) {
        0 => (0..rng.random_range(0..512)).map(|_| rng.random()).collect(),
        1 => (0..rng.random_range(0..1024))
            .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())])
            .collect(),
        _ => seeds[rng.random_range(0..seeds.len())].clone(),
    };
    for _ in 0..rng.random_range(0..8) {
        if buf.is_empty() {
            break;
        }
        let i = rng.random_range(0..buf.len());
        match rng.random_range(0..4) {
            0 => buf[i] = rng.random(),
            1 => {
                buf.remove(i);
            }
            2 => buf.insert(i, ALPHABET[rng.random_range(0..ALPHABET.len())]),
            _ => {
                let j = rng.random_range(i..buf.len());
                let chunk = buf[i..j].to_vec();
                let k = rng.random_range(0..buf.len());
                buf.splice(k..k, chunk);
            }
        }
    }
    buf.truncate(4096);
    buf
}

fn c9_parser() -> Outcome {
    for name in CORPUS {
        let text = corpus_text(name, "cdsl");
        let once = serialize_dsl(&parse_dsl(&text).map_err(|e| format!("{name}: {e:?}"))?);
        let twice = serialize_dsl(&parse_dsl(&once).map_err(|e| format!("{name} reparse: {e:?}"))?);
        check(once == twice, format!("{name}: serialization not byte-stable"))?;
    }
    let seeds: Vec<Vec<u8>> = CORPUS
        .iter()
        .flat_map(|n| [corpus_text(n, "cdsl").into_bytes(), corpus_text(n, "cpt").into_bytes()])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut slowest = Duration::ZERO;
    let mut accepted = 0usize;
    for case in 0..FUZZ_CASES {
        let bytes = mutate(&mut rng, &seeds);
        let text = String::from_utf8_lossy(&bytes).into_owned();
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| match parse_dsl(&text) {
            Ok(d) => {
                let again = parse_dsl(&serialize_dsl(&d)).is_ok();
                let _ = attach_model(&d, &text);
                (true, again)
            }
            Err(_) => {
                let _ = attach_model(&corpus_diagram("shift_a"), &text);
                (false, true)
            }
        }));
        let took = start.elapsed();
        slowest = slowest.max(took);
        let (ok, reparsed) = result.map_err(|_| format!("case {case} panicked on {text:?}"))?;
        check(reparsed, format!("case {case}: serialized output does not reparse"))?;
        check(took < FUZZ_LIMIT, format!("case {case} took {took:?}"))?;
        accepted += ok as usize;
    }
    Ok(format!(
        "{} corpus files byte-stable; {FUZZ_CASES} fuzz inputs, {accepted} accepted, no panics, slowest {slowest:?}",
        CORPUS.len()
    ))
}

fn c10_sampling() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in CORPUS {
        let model = corpus_model(name);
        let a = model.sample(1000, 7, &[]).map_err(|e| e.to_string())?.to_csv();
        let b = model.sample(1000, 7, &[]).map_err(|e| e.to_string())?.to_csv();
        check(a == b, format!("{name}: seeded samples differ"))?;
        let data = model.sample(100_000, 42, &[]).map_err(|e| e.to_string())?;
        let o = Oracle::new(&model);
        for (i, (id, _)) in o.vars.iter().enumerate() {
            let exact = o.conditional(i, &[]);
            let empirical = data.empirical_marginal(id).ok_or("missing column")?;
            let d = tv(&exact, &empirical);
            worst = worst.max(d);
            check(d <= 0.01, format!("{name}.{id}: TV {d}"))?;
        }
    }
    Ok(format!("{} models deterministic; worst marginal TV {worst:.4}", CORPUS.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("d-separation soundness", c1_soundness),
        ("brute-force equivalence", c2_brute_force),
        ("taxonomy fidelity", c3_taxonomy),
        ("worked examples", c4_examples),
        ("transportability identity", c5_transportability),
        ("reweighting exactness", c6_reweighting),
        ("Berkson demonstration", c7_berkson),
        ("recoverability identity", c8_recoverability),
        ("parser robustness", c9_parser),
        ("sampling determinism and consistency", c10_sampling),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
