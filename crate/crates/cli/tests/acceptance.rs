//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stratswitch::cert::{certify, partition, simplex_grid, Bounds, Certification, CertifyOptions};
use stratswitch::exec::{self, Mode};
use stratswitch::fixtures;
use stratswitch::model::{normalize_info, write_game, GameStructure, InfoVector, SpecTask};
use stratswitch::rational::{rat, Cost, Rational};
use stratswitch::sim::{run_resynthesis_oracle, run_switching, run_uninformed, AdversaryModel, InfoStream, SimGame};
use stratswitch::switching::liveness_bound;
use stratswitch::synthesis::{eval_cost, Synthesizer};

const CORPUS: usize = 200;
const GRID: u32 = 6;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Duration, Box<dyn Fn() -> Outcome + 'a>);

struct Case {
    seed: u64,
    game: GameStructure,
    spec: SpecTask,
    synth: Synthesizer,
}

fn corpus() -> Vec<Case> {
    fixtures::winning_corpus(CORPUS, 1, &fixtures::corpus_params())
        .into_iter()
        .map(|(seed, game, spec)| {
            let synth = Synthesizer::new(&game, &spec).expect("corpus games are realizable");
            Case { seed, game, spec, synth }
        })
        .collect()
}

/// Two to four seeded grid candidates, the last one uniform.
fn candidates(case: &Case) -> Vec<InfoVector> {
    let n = case.synth.num_scenarios();
    let grid = simplex_grid(n, GRID);
    let mut rng = ChaCha8Rng::seed_from_u64(case.seed);
    let count = rng.gen_range(2..=4);
    let mut out: Vec<InfoVector> = (1..count).map(|_| grid[rng.gen_range(0..grid.len())].clone()).collect();
    out.push(InfoVector::uniform(n));
    out
}

fn certified(case: &Case, epsilon: Option<Rational>) -> Result<Certification, String> {
    let opts = CertifyOptions { epsilon, grid: GRID, mode: Mode::Sequential };
    certify(&case.synth, candidates(case), &opts).map_err(|e| format!("seed {}: {e}", case.seed))
}

fn finite(c: Cost, what: &str) -> Result<Rational, String> {
    c.finite().cloned().ok_or_else(|| format!("{what}: infinite cost"))
}

/// Runs `check` on every corpus case in parallel and reports the first failure.
fn over_corpus<F>(cases: &[Case], check: F) -> Result<Vec<String>, String>
where
    F: Fn(&Case) -> Result<String, String> + Sync + Send,
{
    exec::map(Mode::Parallel, cases, check).into_iter().collect()
}

fn sum_counts(notes: &[String]) -> u64 {
    notes.iter().filter_map(|s| s.parse::<u64>().ok()).sum()
}

fn sandwich(cases: &[Case]) -> Outcome {
    let notes = over_corpus(cases, |case| {
        let mut checked = 0u64;
        let base = certified(case, None)?;
        let wide = base.cert.epsilon.clone() + rat(2, 1);
        for c in [base, certified(case, Some(wide))?] {
            let cert = &c.cert;
            let mut oracle = case.synth.oracle().map_err(|e| e.to_string())?;
            for p in simplex_grid(cert.dim(), GRID) {
                let members: Vec<usize> =
                    (0..cert.len()).filter(|&i| cert.nonempty[i] && cert.membership(i, &p).unwrap()).collect();
                if members.is_empty() {
                    continue;
                }
                let best = finite(oracle.optimal_cost(&p).map_err(|e| e.to_string())?, "oracle")?;
                for i in members {
                    let ci = cert.cost(i, &p);
                    if !(&ci - &cert.epsilon <= best && best <= ci) {
                        return Err(format!(
                            "seed {}: p {:?}, strategy {i}: C {ci}, eps {}, C* {best}",
                            case.seed, p, cert.epsilon
                        ));
                    }
                    checked += 1;
                }
            }
        }
        Ok(checked.to_string())
    })?;
    Ok(format!("{} games, {} (point, polytope) pairs", cases.len(), sum_counts(&notes)))
}

fn nonempty_at_min_epsilon(cases: &[Case]) -> Outcome {
    let notes = over_corpus(cases, |case| {
        let c = certified(case, None)?;
        let cert = &c.cert;
        for i in 0..cert.len() {
            if !cert.membership(i, &cert.candidates[i]).unwrap() || !cert.check_nonempty(i).unwrap() {
                return Err(format!("seed {}: S_{i} misses its candidate at eps_min", case.seed));
            }
        }
        if !cert.epsilon.is_positive() {
            return Ok("-".into());
        }
        let half = cert.epsilon.clone() / rat(2, 1);
        let tight = certified(case, Some(half))?.cert;
        let grid = simplex_grid(tight.dim(), GRID);
        let mut misses = 0u64;
        for i in 0..tight.len() {
            if !tight.membership(i, &tight.candidates[i]).unwrap() {
                misses += 1;
            }
            let claim = tight.check_nonempty(i).unwrap();
            let sys = &tight.systems[i];
            if claim {
                let w = sys.feasible_point().ok_or_else(|| format!("seed {}: nonempty without witness", case.seed))?;
                let w = InfoVector::new(w).map_err(|e| format!("seed {}: witness off simplex: {e}", case.seed))?;
                if !sys.contains(&w) {
                    return Err(format!("seed {}: witness outside S_{i}", case.seed));
                }
            } else if let Some(p) = grid.iter().find(|p| sys.contains(p)) {
                return Err(format!("seed {}: S_{i} reported empty but contains {p:?}", case.seed));
            }
        }
        Ok(misses.to_string())
    })?;
    let tightened = notes.iter().filter(|n| *n != "-").count();
    Ok(format!(
        "{} games, {tightened} with eps_min > 0, {} candidate misses at eps/2, no false nonempty claims",
        cases.len(),
        sum_counts(&notes)
    ))
}

fn dominance(cases: &[Case]) -> Outcome {
    let notes = over_corpus(cases, |case| {
        let c = certified(case, None)?;
        let cert = &c.cert;
        let mut checked = 0u64;
        for p in simplex_grid(cert.dim(), GRID) {
            for i in 0..cert.len() {
                if !cert.in_dominance(i, &p).unwrap() {
                    continue;
                }
                let ci = cert.cost(i, &p);
                if let Some(k) = (0..cert.len()).find(|&k| cert.cost(k, &p) < ci) {
                    return Err(format!("seed {}: p {p:?} in T_{i} but strategy {k} is cheaper", case.seed));
                }
                checked += 1;
            }
        }
        Ok(checked.to_string())
    })?;
    Ok(format!("{} (point, polytope) pairs", sum_counts(&notes)))
}

fn star_regression() -> Outcome {
    let (game, spec) = fixtures::star();
    let synth = Synthesizer::new(&game, &spec).map_err(|e| e.to_string())?;
    let basis: Vec<InfoVector> = (0..3).map(|j| InfoVector::basis(3, j)).collect();
    let exact = |opts: CertifyOptions| certify(&synth, basis.clone(), &opts).map_err(|e| e.to_string());
    let c0 = exact(CertifyOptions { grid: 2, ..CertifyOptions::default() })?;
    let ints = |xs: &[i64]| xs.iter().map(|&x| rat(x, 1)).collect::<Vec<_>>();
    let want = vec![ints(&[1, 4, 9]), ints(&[5, 2, 9]), ints(&[7, 10, 3])];
    if c0.cert.basis_costs != want {
        return Err(format!("basis costs {:?}", c0.cert.basis_costs));
    }
    if c0.cert.ell != ints(&[1, 2, 3]) {
        return Err(format!("ell {:?}", c0.cert.ell));
    }
    if !c0.cert.epsilon.is_zero() {
        return Err(format!("eps_min {}", c0.cert.epsilon));
    }
    let half = InfoVector::new(vec![rat(1, 2), rat(1, 2), rat(0, 1)]).unwrap();
    if !c0.cert.gaps.contains(&half) {
        return Err(format!("gap [1/2,1/2,0] missing from {:?}", c0.cert.gaps));
    }
    let c2 = exact(CertifyOptions { epsilon: Some(rat(2, 1)), ..CertifyOptions::default() })?;
    let p = InfoVector::new(vec![rat(3, 5), rat(3, 10), rat(1, 10)]).unwrap();
    let b = c2.cert.bounds_for(&p).map_err(|e| e.to_string())?;
    if b != (Bounds::Certified { index: 0, lower: rat(7, 10), upper: rat(27, 10) }) {
        return Err(format!("bounds {b:?}"));
    }
    let best = finite(synth.optimal_cost(&p).map_err(|e| e.to_string())?, "oracle")?;
    let mut oracle = synth.oracle().map_err(|e| e.to_string())?;
    let independent = finite(oracle.optimal_cost(&p).map_err(|e| e.to_string())?, "oracle")?;
    if best != rat(27, 10) || independent != rat(27, 10) {
        return Err(format!("C* {best} / {independent}"));
    }
    Ok("basis costs, ell, eps_min, bounds, C* and gap match".into())
}

fn fuzzed_stream(rng: &mut ChaCha8Rng, n: usize, horizon: usize) -> InfoStream {
    let mut events = vec![(0, InfoVector::uniform(n))];
    let mut step = 0;
    loop {
        // short gaps flip the information mid-tour, long ones let it settle
        step += if rng.gen_bool(0.5) { rng.gen_range(1..8) } else { rng.gen_range(50..4000) };
        if step >= horizon {
            break;
        }
        let raw: Vec<Rational> = (0..n).map(|_| rat(rng.gen_range(0..5), 1)).collect();
        let p = normalize_info(&raw).unwrap_or_else(|_| InfoVector::basis(n, rng.gen_range(0..n)));
        events.push((step, p));
    }
    InfoStream::Scripted(events)
}

fn switching_liveness(cases: &[Case]) -> Outcome {
    const RUNS: usize = 100;
    const HORIZON: usize = 100_000;
    let runs: Vec<usize> = (0..RUNS).collect();
    let results = exec::map(Mode::Parallel, &runs, |&r| -> Result<(u128, usize), String> {
        let case = &cases[r * cases.len() / RUNS];
        let c = certified(case, None)?;
        let sim = SimGame::new(&case.game, &case.spec).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(case.seed ^ (r as u64) << 32);
        let stream = fuzzed_stream(&mut rng, case.spec.num_scenarios(), HORIZON);
        let adversary = if r % 4 == 3 { AdversaryModel::Greedy } else { AdversaryModel::Uniform(rng.gen()) };
        let t = run_switching(&sim, &c.strategies, &c.cert, &stream, &adversary, HORIZON)
            .map_err(|e| format!("run {r}: {e}"))?;
        let d = liveness_bound(&c.strategies, case.game.states.len(), case.spec.num_guarantees());
        for (j, g) in t.metrics().guarantees.iter().enumerate() {
            if g.max_gap_steps as u128 > d {
                return Err(format!("run {r}: guarantee {j} gap {} exceeds {d}", g.max_gap_steps));
            }
        }
        let mut switches = 0;
        for s in &t.steps {
            if s.switched {
                if !(s.prior_full && s.next_in_w) {
                    return Err(format!("run {r}: illegal switch at step {}", s.step));
                }
                switches += 1;
            }
        }
        let worst = t.metrics().guarantees.iter().map(|g| g.max_gap_steps as u128).max().unwrap_or(0);
        Ok((worst, switches))
    });
    let results: Vec<(u128, usize)> = results.into_iter().collect::<Result<_, _>>()?;
    let switches: usize = results.iter().map(|r| r.1).sum();
    let worst = results.iter().map(|r| r.0).max().unwrap_or(0);
    Ok(format!("{RUNS} runs x {HORIZON} steps, {switches} legal switches, longest gap {worst} steps"))
}

fn synthesis_equivalence(cases: &[Case]) -> Outcome {
    let notes = over_corpus(cases, |case| {
        let mut oracle = case.synth.oracle().map_err(|e| e.to_string())?;
        let mut checked = 0u64;
        for p in simplex_grid(case.synth.num_scenarios(), GRID) {
            let st = case.synth.synthesize(&p).map_err(|e| format!("seed {}: {e}", case.seed))?;
            let got = eval_cost(&case.synth.eval_cost_basis(&st), &p);
            let want = oracle.optimal_cost(&p).map_err(|e| e.to_string())?;
            if got != want {
                return Err(format!("seed {}: p {p:?}: synthesized {got:?}, oracle {want:?}", case.seed));
            }
            checked += 1;
        }
        Ok(checked.to_string())
    })?;
    Ok(format!("{} games, {} info vectors", cases.len(), sum_counts(&notes)))
}

fn baseline_ordering() -> Outcome {
    const RUNS: u64 = 50;
    const HORIZON: usize = 300;
    let (game, spec) = fixtures::star();
    let synth = Synthesizer::new(&game, &spec).map_err(|e| e.to_string())?;
    let mut cands: Vec<InfoVector> = (0..3).map(|j| InfoVector::basis(3, j)).collect();
    cands.push(InfoVector::uniform(3));
    let c = certify(&synth, cands, &CertifyOptions::default()).map_err(|e| e.to_string())?;
    let sim = SimGame::new(&game, &spec).map_err(|e| e.to_string())?;
    let seeds: Vec<u64> = (0..RUNS).collect();
    let rows = exec::map(Mode::Parallel, &seeds, |&seed| -> Result<[Rational; 3], String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = rng.gen_range(5..60);
        let stream = InfoStream::Scripted(vec![(0, InfoVector::basis(3, 0)), (shift, InfoVector::basis(3, 2))]);
        let adversary = AdversaryModel::Uniform(seed);
        let err = |e: stratswitch::sim::SimError| e.to_string();
        let sw = run_switching(&sim, &c.strategies, &c.cert, &stream, &adversary, HORIZON).map_err(err)?;
        let un = run_uninformed(&sim, &c.strategies, &stream, &adversary, HORIZON).map_err(err)?;
        let or = run_resynthesis_oracle(&sim, &synth, &stream, &adversary, HORIZON, 1).map_err(err)?;
        Ok([or.metrics().total_cost, sw.metrics().total_cost, un.metrics().total_cost])
    });
    let rows: Vec<[Rational; 3]> = rows.into_iter().collect::<Result<_, _>>()?;
    let mean = |k: usize| rows.iter().map(|r| r[k].clone()).sum::<Rational>() / rat(RUNS as i64, 1);
    let (oracle, switching, uninformed) = (mean(0), mean(1), mean(2));
    let strict = rows.iter().filter(|r| r[1] < r[2]).count();
    let note = format!(
        "means oracle {}, switching {}, uninformed {}; switching < uninformed in {strict}/{RUNS}",
        oracle.to_decimal_string(2),
        switching.to_decimal_string(2),
        uninformed.to_decimal_string(2)
    );
    if oracle <= switching && switching <= uninformed && strict >= 45 {
        Ok(note)
    } else {
        Err(note)
    }
}

fn partition_export(cases: &[Case]) -> Outcome {
    let notes = over_corpus(cases, |case| {
        let c = certified(case, None)?;
        let cert = &c.cert;
        let rows = partition(cert, GRID);
        for row in &rows {
            let costs: Vec<Rational> = cert.basis_costs.iter().map(|b| row.point.dot(b)).collect();
            let min = costs.iter().min().unwrap();
            let argmin = costs.iter().position(|x| x == min).unwrap();
            let member = (0..cert.len()).any(|i| cert.membership(i, &row.point).unwrap());
            if row.winner != argmin || row.certified != member {
                return Err(format!("seed {}: row {row:?}", case.seed));
            }
        }
        Ok(rows.len().to_string())
    })?;
    Ok(format!("{} rows", sum_counts(&notes)))
}

fn cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_stratswitch")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn dir_contents(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    let (game, spec) = fixtures::star();
    let write = |name: &str, text: &str| std::fs::write(tmp.path().join(name), text).map_err(|e| e.to_string());
    write("star.json", &write_game(&game, &spec))?;
    write("cands.txt", "1,0,0\n0,1,0\n0,0,1\n1/3,1/3,1/3\n")?;
    write("stream.json", r#"{"mode":"scripted","events":[[0,"1,0,0"],[7,"1/2,0,1/2"],[31,"0,0,1"]]}"#)?;
    let certify = |out: &str, sequential: bool| {
        let (g, c, o) = (path("star.json"), path("cands.txt"), path(out));
        let mut args = vec!["certify", "--game", &g, "--candidates", &c, "--out", &o, "--expand", "5", "--grid", "6"];
        if sequential {
            args.push("--sequential");
        }
        cli(&args)
    };
    let first = certify("c1.json", false)?;
    let second = certify("c2.json", false)?;
    let third = certify("c3.json", true)?;
    let files: Vec<Vec<u8>> =
        ["c1.json", "c2.json", "c3.json"].iter().map(|f| std::fs::read(tmp.path().join(f)).unwrap()).collect();
    if first != second || first != third || files[0] != files[1] || files[0] != files[2] {
        return Err("certify output differs between invocations".into());
    }
    let simulate = |dir: &str| -> Result<Vec<(String, Vec<u8>)>, String> {
        let out = path(dir);
        let args = [
            "simulate",
            "--game",
            &path("star.json"),
            "--cert",
            &path("c1.json"),
            "--stream",
            &path("stream.json"),
            "--adversary",
            "uniform:11",
            "--horizon",
            "500",
            "--runs",
            "3",
            "--run",
            "switching,uninformed,oracle",
            "--out-dir",
            &out,
        ];
        let stdout = cli(&args)?;
        let mut files = dir_contents(Path::new(&out))?;
        files.push(("stdout".into(), stdout));
        Ok(files)
    };
    let a = simulate("sim_a")?;
    let b = simulate("sim_b")?;
    if a != b {
        return Err("simulate output differs between invocations".into());
    }
    Ok(format!("certify x3 and simulate x2 byte-identical ({} files)", a.len()))
}

fn main() {
    let started = Instant::now();
    let cases = corpus();
    println!("corpus: {} games built in {:.1?}", cases.len(), started.elapsed());
    let criteria: Vec<Criterion> = vec![
        ("1 sandwich", Duration::from_secs(180), Box::new(|| sandwich(&cases))),
        ("2 nonempty at eps_min", Duration::from_secs(60), Box::new(|| nonempty_at_min_epsilon(&cases))),
        ("3 dominance", Duration::from_secs(60), Box::new(|| dominance(&cases))),
        ("4 star regression", Duration::from_secs(1), Box::new(star_regression)),
        ("5 switching liveness", Duration::from_secs(300), Box::new(|| switching_liveness(&cases))),
        ("6 synthesis = oracle", Duration::from_secs(120), Box::new(|| synthesis_equivalence(&cases))),
        ("7 baseline ordering", Duration::from_secs(120), Box::new(baseline_ordering)),
        ("8 partition export", Duration::from_secs(30), Box::new(|| partition_export(&cases))),
        ("9 determinism", Duration::from_secs(30), Box::new(determinism)),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let t = Instant::now();
        let outcome = check();
        let took = t.elapsed();
        let (status, note) = match outcome {
            Ok(note) => ("PASS", note),
            Err(note) => {
                failed += 1;
                ("FAIL", note)
            }
        };
        let over = if took > budget { format!(" (over {budget:?} budget)") } else { String::new() };
        println!("{status} criterion {name}: {note} [{took:.2?}{over}]");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
