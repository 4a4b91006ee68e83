//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

use semifree_core::classify::{classify_isolated, small_data_bootstrap, weak_classification_check, WeakVerdict};
use semifree_core::fingerprint::ClassFingerprint;
use semifree_core::io::scenario_to_json;
use semifree_core::lattice::{exceptional_classes, IntersectionLattice, LatticeClass};
use semifree_core::rational::{format_rational, int, ratio, Rational};
use semifree_core::scenario::{FixedPointData, LevelLattice, Mode};
use semifree_core::walk::{compose_traces, run_walk, split_trace, CrossingAction, CrossingMap, WalkTrace};

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_semifree"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn y3(l: [Rational; 3]) -> FixedPointData {
    FixedPointData::y3(l[0], l[1], l[2])
}

fn y3i(a: i64, b: i64, c: i64) -> FixedPointData {
    y3([int(a), int(b), int(c)])
}

fn walk(d: &FixedPointData) -> Result<WalkTrace, String> {
    run_walk(d).map_err(|e| format!("{}: {e}", d.name()))
}

fn random_triples(runner: &mut TestRunner, n: usize) -> Vec<[Rational; 3]> {
    let q = (1i128..=12, 1i128..=4).prop_map(|(p, q)| Rational::new(p, q));
    let strategy = [q.clone(), q.clone(), q];
    (0..n).map(|_| strategy.new_tree(runner).unwrap().current()).collect()
}

fn cls(v: &[i64]) -> LatticeClass {
    LatticeClass::new(v.to_vec())
}

/// Convolution of three uniform densities: `½ Σ_S (-1)^|S| (t - λ_S)₊²`.
fn dh_oracle(l: &[Rational; 3], t: &Rational) -> Rational {
    let mut v = Rational::from_integer(0);
    for mask in 0..8u32 {
        let shift: Rational = (0..3).filter(|i| mask & (1 << i) != 0).map(|i| l[i]).sum();
        let x = *t - shift;
        if x > Rational::from_integer(0) {
            let term = x * x / Rational::from_integer(2);
            v += if mask.count_ones() % 2 == 0 { term } else { -term };
        }
    }
    v
}

fn criterion_1() -> Check {
    let t = walk(&y3i(2, 3, 4))?;
    ensure(t.k_sequence() == vec![0, 1, 2, 3, 2, 1, 0], || {
        format!("k sequence {:?}", t.k_sequence())
    })?;
    ensure(t.walls() == (2..=7).map(int).collect::<Vec<_>>(), || "walls".into())?;
    ensure(t.end.value == int(9) && t.passed(), || "maximum at 9".into())?;
    let lambda = [int(2), int(3), int(4)];
    for s in [ratio(1, 3), int(1), ratio(19, 10)] {
        let a = t.states[0].family.area(&cls(&[1]), &s).map_err(|e| e.to_string())?;
        ensure(a == s, || {
            format!("area(L)({}) = {}", format_rational(&s), format_rational(&a))
        })?;
    }
    let st = &t.states[3];
    ensure(st.interval().lo == int(4) && st.interval().hi == Some(int(5)), || {
        "interval (4,5)".into()
    })?;
    for s in [ratio(41, 10), ratio(9, 2), ratio(49, 10)] {
        let area = |v: &[i64]| st.family.area(&cls(v), &s).map_err(|e| e.to_string());
        ensure(area(&[1, 0, 0, 0])? == s, || "area(L)".into())?;
        for i in 0..3 {
            let mut e = vec![0; 4];
            e[i + 1] = 1;
            ensure(area(&e)? == s - lambda[i], || format!("area(E{})", i + 1))?;
        }
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let mut c = vec![1, 0, 0, 0];
            c[i + 1] = -1;
            c[j + 1] = -1;
            let expect = lambda[i] + lambda[j] - s;
            ensure(area(&c)? == expect, || format!("area(L-E{}-E{})", i + 1, j + 1))?;
        }
    }
    Ok(())
}

fn criterion_2() -> Check {
    let t = walk(&y3i(2, 3, 4))?;
    let line = cls(&[1]);
    let first = t
        .initial()
        .lattice()
        .pair(&t.initial().euler.class, &line)
        .map_err(|e| e.to_string())?;
    let last = t
        .final_state()
        .lattice()
        .pair(&t.final_state().euler.class, &line)
        .map_err(|e| e.to_string())?;
    ensure(first == -1 && last == 1, || {
        format!("e.L initial {first}, final {last}")
    })
}

fn criterion_3() -> Check {
    let t = walk(&y3i(1, 2, 4))?;
    ensure(t.k_sequence() == vec![0, 1, 2, 1, 2, 1, 0], || {
        format!("Y3(1,2,4): {:?}", t.k_sequence())
    })?;
    let t = walk(&y3i(1, 1, 1))?;
    ensure(t.k_sequence() == vec![0, 3, 0], || {
        format!("Y3(1,1,1): {:?}", t.k_sequence())
    })?;
    ensure(t.events.iter().all(|e| e.actions.len() == 3), || "triple levels".into())?;
    let cert = classify_isolated(&y3i(1, 1, 1));
    let c = cert.certificate().ok_or_else(|| format!("{:?}", cert.refusal()))?;
    ensure(
        c.certification.facts.iter().any(|f| f == "cp2-blowup-le3-equal-areas"),
        || format!("facts {:?}", c.certification.facts),
    )
}

fn dh_check(l: [Rational; 3]) -> Check {
    let t = walk(&y3(l))?;
    let total = l[0] + l[1] + l[2];
    let product = l[0] * l[1] * l[2];
    for (i, ev) in t.events.iter().enumerate() {
        let (a, b) = (
            t.states[i].volume().eval(&ev.value),
            t.states[i + 1].volume().eval(&ev.value),
        );
        ensure(a == b, || format!("discontinuous at {}", format_rational(&ev.value)))?;
    }
    let zero = Rational::from_integer(0);
    ensure(
        t.volume_at(&zero) == Some(zero) && t.volume_at(&total) == Some(zero),
        || "endpoints".into(),
    )?;
    let mut symbolic = zero;
    let mut simpson = zero;
    for s in &t.states {
        let (lo, hi) = (s.interval().lo, s.interval().hi.unwrap_or(total));
        let mid = (lo + hi) / Rational::from_integer(2);
        for x in [lo, mid, hi] {
            ensure(s.volume().eval(&x) == dh_oracle(&l, &x), || {
                format!("volume at {}", format_rational(&x))
            })?;
        }
        symbolic += s.volume().integrate(&lo, &hi);
        simpson += (hi - lo) / Rational::from_integer(6)
            * (dh_oracle(&l, &lo) + Rational::from_integer(4) * dh_oracle(&l, &mid) + dh_oracle(&l, &hi));
    }
    ensure(symbolic == product && simpson == product, || {
        format!(
            "integral {} (oracle {}), expected {}",
            format_rational(&symbolic),
            format_rational(&simpson),
            format_rational(&product)
        )
    })
}

fn criterion_4(runner: &mut TestRunner) -> Check {
    dh_check([int(2), int(3), int(4)])?;
    for l in random_triples(runner, 20) {
        dh_check(l)?;
    }
    Ok(())
}

fn box_oracle(k: usize) -> Vec<LatticeClass> {
    let lattice = IntersectionLattice::blowup_plane(k);
    let canonical = lattice.canonical().unwrap().clone();
    let mut out = Vec::new();
    let mut coeffs = vec![-3i64; k + 1];
    loop {
        let c = LatticeClass::new(coeffs.clone());
        if lattice.pair(&c, &c).unwrap() == -1 && lattice.pair(&c, &canonical).unwrap() == -1 {
            out.push(c);
        }
        match coeffs.iter().position(|&a| a < 3) {
            Some(i) => {
                coeffs[..i].iter_mut().for_each(|a| *a = -3);
                coeffs[i] += 1;
            }
            None => break,
        }
    }
    out.sort();
    out
}

fn criterion_5() -> Check {
    let start = Instant::now();
    for k in 0..=3 {
        let mut fast = exceptional_classes(k).classes;
        fast.sort();
        let slow = box_oracle(k);
        ensure(fast == slow, || {
            format!("k={k}: {} vs {} classes", fast.len(), slow.len())
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed.as_secs_f64() < 1.0, || format!("took {elapsed:?}"))
}

fn criterion_6(runner: &mut TestRunner) -> Check {
    let mut blow_downs = 0;
    let class_strategy = |rank: usize| proptest::collection::vec(-9i64..=9, rank).prop_map(LatticeClass::new);
    for l in random_triples(runner, 100) {
        let t = walk(&y3(l))?;
        for (i, ev) in t.events.iter().enumerate() {
            let below = &t.states[i];
            for a in &ev.actions {
                if let CrossingAction::BlowDown {
                    euler_pairing, class, ..
                } = a
                {
                    ensure(*euler_pairing == 1, || format!("e.C = {euler_pairing}"))?;
                    if let Ok(p) = below.lattice().pair(&below.euler.class, class) {
                        ensure(p == 1 || ev.actions.len() > 1, || format!("recomputed e.C = {p}"))?;
                    }
                }
            }
            for m in &ev.maps {
                if let CrossingMap::BlowDown(map) = m {
                    blow_downs += 1;
                    let rank = map.downstairs().rank();
                    for _ in 0..50 {
                        let x = class_strategy(rank).new_tree(runner).unwrap().current();
                        let back = map
                            .pullback(&x)
                            .and_then(|u| map.pushforward(&u))
                            .map_err(|e| e.to_string())?;
                        ensure(back == x, || {
                            format!("push(pull({:?})) = {:?}", x.coeffs(), back.coeffs())
                        })?;
                    }
                }
            }
        }
    }
    ensure(blow_downs >= 300, || format!("only {blow_downs} blow-downs executed"))
}

fn criterion_7(runner: &mut TestRunner) -> Check {
    let frac = (1i128..1000).prop_map(|n| Rational::new(n, 1000));
    for l in random_triples(runner, 20) {
        let t = walk(&y3(l))?;
        let fp = t.fingerprint();
        let mut cuts = 0;
        while cuts < 5 {
            let s = t.end.value * frac.new_tree(runner).unwrap().current();
            if t.walls().contains(&s) {
                continue;
            }
            cuts += 1;
            let (a, b) = split_trace(&t, s).map_err(|e| e.to_string())?;
            let glued = compose_traces(&a, &b).map_err(|e| e.to_string())?;
            ensure(glued.fingerprint() == fp, || {
                format!("{} split at {}", t.name, format_rational(&s))
            })?;
        }
    }
    Ok(())
}

fn criterion_8(runner: &mut TestRunner) -> Check {
    for l in random_triples(runner, 50) {
        let d = y3(l);
        let t = walk(&d)?;
        let reversed = walk(&d.time_reversed().map_err(|e| e.to_string())?)?;
        ensure(
            reversed.fingerprint() == t.fingerprint().time_reversed(d.max_value()),
            || format!("time reversal of {}", d.name()),
        )?;
        let permuted = walk(&y3([l[2], l[0], l[1]]))?;
        ensure(permuted.fingerprint() == t.fingerprint(), || {
            format!("permutation of {}", d.name())
        })?;
    }
    Ok(())
}

fn criterion_9() -> Check {
    let dir = scenarios();
    let path = |n: &str| dir.join(n).to_string_lossy().into_owned();
    let (code, out, _) = cli(&["validate", &path("bad_values.json")]);
    ensure(code == 2, || format!("validate bad_values: exit {code}\n{out}"))?;
    let (code, _, _) = cli(&["classify", &path("bad_values.json")]);
    ensure(code == 2, || format!("classify bad_values: exit {code}"))?;
    let (code, _, err) = cli(&["walk", &path("max_at_8.json")]);
    ensure(code == 2 && err.contains("area(L)(8) = 1"), || {
        format!("walk max_at_8: exit {code}: {err}")
    })?;

    let full = small_data_bootstrap(&y3i(2, 3, 4)).map_err(|e| e.to_string())?;
    let mut levels = full.levels().to_vec();
    let e = levels[4].euler_minus.as_mut().unwrap();
    *e = &*e + &cls(&[0, 0, 1, 0]);
    let corrupted = full.with_levels(Mode::Full, levels).map_err(|e| e.to_string())?;
    let verdict = weak_classification_check(&full, &corrupted);
    ensure(matches!(verdict, WeakVerdict::DistinctData { .. }), || {
        format!("{verdict}")
    })?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let write = |name: &str, d: &FixedPointData| -> Result<String, String> {
        let p = tmp.path().join(name);
        std::fs::write(&p, scenario_to_json(d)).map_err(|e| e.to_string())?;
        Ok(p.to_string_lossy().into_owned())
    };
    let (a, b) = (write("full.json", &full)?, write("corrupted.json", &corrupted)?);
    let (code, out, _) = cli(&["classify", &a, "--against", &b]);
    ensure(code == 2 && out.starts_with("distinct_data"), || {
        format!("classify --against: exit {code}: {out}")
    })
}

fn criterion_10() -> Check {
    let full = small_data_bootstrap(&y3i(2, 3, 4)).map_err(|e| e.to_string())?;
    // Euler classes below each interior level, written out by hand.
    let expected: [(i64, &[i64]); 6] = [
        (2, &[-1]),
        (3, &[-1, 1]),
        (4, &[-1, 1, 1]),
        (5, &[-1, 1, 1, 1]),
        (6, &[1, -1, -1]),
        (7, &[1, -1]),
    ];
    for (value, e) in expected {
        let level = full
            .levels()
            .iter()
            .find(|l| l.value == int(value))
            .ok_or_else(|| format!("no level at {value}"))?;
        let got = level
            .euler_minus
            .as_ref()
            .ok_or_else(|| format!("no euler_minus at {value}"))?;
        let lattice = IntersectionLattice::blowup_plane(e.len() - 1);
        let fp = |x: &LatticeClass| ClassFingerprint::of(&lattice, x).map_err(|e| e.to_string());
        ensure(
            level.lattice == LevelLattice::BlowupPlane && fp(got)? == fp(&cls(e))?,
            || format!("level {value}: {:?} vs {:?}", got.coeffs(), e),
        )?;
    }
    let again = small_data_bootstrap(&full).map_err(|e| e.to_string())?;
    ensure(again == full, || "bootstrap is not idempotent".into())?;
    let (t1, t2) = (walk(&y3i(2, 3, 4))?, walk(&full)?);
    ensure(t1.fingerprint() == t2.fingerprint(), || {
        "walk of recovered data differs".into()
    })?;
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let target = out.path().join("full.json");
    let src = scenarios().join("y3_234.json");
    let (code, _, err) = cli(&["bootstrap", &src.to_string_lossy(), "-o", &target.to_string_lossy()]);
    ensure(code == 0, || format!("bootstrap exit {code}: {err}"))?;
    let written = std::fs::read_to_string(Path::new(&target)).map_err(|e| e.to_string())?;
    ensure(written == scenario_to_json(&full), || {
        "CLI bootstrap output differs".into()
    })
}

fn main() {
    let mut runner = TestRunner::deterministic();
    let results: Vec<(u32, &str, Check)> = vec![
        (1, "Y3(2,3,4) walk: k sequence, walls, area tables", criterion_1()),
        (2, "Euler class flips from -L to +L", criterion_2()),
        (3, "case split Y3(1,2,4) and equal case Y3(1,1,1)", criterion_3()),
        (
            4,
            "DH volume continuity, endpoints and integral",
            criterion_4(&mut runner),
        ),
        (5, "exceptional classes equal box search for k <= 3", criterion_5()),
        (6, "blow-down law on 100 random walks", criterion_6(&mut runner)),
        (
            7,
            "split and recompose at random regular values",
            criterion_7(&mut runner),
        ),
        (8, "time reversal and permutation invariance", criterion_8(&mut runner)),
        (9, "negative suite refuses bad data", criterion_9()),
        (10, "small data bootstrap recovers Euler classes", criterion_10()),
    ];
    let mut failed = 0;
    for (n, label, r) in &results {
        match r {
            Ok(()) => println!("criterion {n:>2}: PASS  {label}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL  {label}: {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
