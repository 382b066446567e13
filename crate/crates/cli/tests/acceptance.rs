//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use povm_core::codec::Decode;
use povm_core::hashcash::{expected_attempts, mine, Difficulty, HashMeter};
use povm_core::hashchain::{
    dump_chain_bin, validate_chain, verify_chain_file, Block, Chain, ChainValidator, PovmRecord,
    RecordVerdict, Seal, Transaction,
};
use povm_core::jobvm::{
    coinflip_program, execute, execute_with_fault, expected_flips, Fault, Job, Sla, SplitMix64,
};
use povm_core::lottery::{
    commit, draw_winner, Commitment, LotteryProof, Reveal, TicketTable, TicketWindow,
};
use povm_core::redundancy::{
    compare_checkpoints, majority_vote, quorum, record_outcomes, update_reputation, Reputation,
};
use povm_core::simnet::{
    job_groups, replay_reputation, run_scenario, Adversary, Behavior, ScenarioConfig, Workload,
};
use povm_core::{Digest256, NodeId};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(name: &str, elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || {
        format!("{name} took {elapsed:.2?}, limit {limit:?}")
    })
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn smoke_path() -> PathBuf {
    repo_root().join("scenarios/smoke.json")
}

fn smoke() -> ScenarioConfig {
    ScenarioConfig::from_json(&std::fs::read_to_string(smoke_path()).unwrap()).unwrap()
}

fn povm(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_povm"))
        .args(args)
        .output()
        .expect("povm binary runs");
    assert!(
        out.status.success(),
        "povm {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

// 1
fn coinflip_expectation() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    for k in 1..=3u32 {
        let program = coinflip_program(k);
        let n = 100_000u64;
        let mut sum = 0u64;
        for seed in 0..n {
            let job = Job {
                id: seed,
                program: program.clone(),
                input: vec![],
                sla: Sla::default(),
                customer: NodeId(0),
                seed,
            };
            let t = execute(&job);
            sum += t
                .output
                .ok_or_else(|| format!("k={k} seed={seed}: {:?}", t.status))?
                as u64;
        }
        let mean = sum as f64 / n as f64;
        let want = expected_flips(k);
        let rel = (mean - want).abs() / want;
        check(rel < 0.02, || {
            format!("k={k}: mean {mean:.4} vs {want}, rel err {rel:.4}")
        })?;
        lines.push(format!("k={k} mean={mean:.3}"));
    }
    within_budget("coin-flip sweep", start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{} in {:.2?}", lines.join(", "), start.elapsed()))
}

// 2
fn hashcash_attempts() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0x5eed);
    let mut lines = Vec::new();
    for d in [4u8, 8, 12] {
        let d = Difficulty(d);
        let trials = 1000u64;
        let mut total = 0u64;
        for trial in 0..trials {
            let block = format!("trial block {trial} at difficulty {}", d.0);
            let mut meter = HashMeter::default();
            let out = mine(block.as_bytes(), d, rng.next_u64(), u64::MAX, &mut meter)
                .map_err(|e| e.to_string())?;
            check(meter.hash_ops == out.attempts, || {
                "meter disagrees with attempts".into()
            })?;
            total += out.attempts;
        }
        let mean = total as f64 / trials as f64;
        let want = expected_attempts(d).unwrap() as f64;
        let rel = (mean - want).abs() / want;
        check(rel < 0.10, || {
            format!("d={}: mean {mean:.1} vs {want}, rel err {rel:.3}", d.0)
        })?;
        lines.push(format!("d={} mean={mean:.1}", d.0));
    }
    within_budget("hashcash trials", start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{} in {:.2?}", lines.join(", "), start.elapsed()))
}

/// Brute-force vote counter: the output holding a quorum, if any.
fn brute_force(outputs: &[i64]) -> Option<(i64, usize)> {
    let q = outputs.len().div_ceil(2);
    outputs
        .iter()
        .map(|&o| (o, outputs.iter().filter(|&&x| x == o).count()))
        .find(|&(_, c)| c >= q)
}

fn vote_matches(outputs: &[i64]) -> Result<(), String> {
    let ballots: Vec<_> = outputs
        .iter()
        .enumerate()
        .map(|(i, &o)| (NodeId(i as u32), o))
        .collect();
    let v = majority_vote(&ballots).map_err(|e| e.to_string())?;
    let want = brute_force(outputs);
    check(v.accepted_output == want.map(|w| w.0), || {
        format!("{outputs:?}: got {:?}, want {want:?}", v.accepted_output)
    })?;
    if let Some((_, c)) = want {
        check(v.votes_for == c && c >= quorum(outputs.len()), || {
            format!("{outputs:?}: votes {}", v.votes_for)
        })?;
    }
    Ok(())
}

// 3
fn quorum_correctness() -> Outcome {
    let mut multisets = BTreeSet::new();
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let outs = [a, b, c];
                vote_matches(&outs)?;
                let mut sorted = outs;
                sorted.sort();
                multisets.insert(sorted);
            }
        }
    }
    check(multisets.len() == 10, || {
        format!("{} multisets", multisets.len())
    })?;
    let mut runner = TestRunner::new(Config {
        cases: 2000,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = prop::sample::select(vec![1usize, 3, 5, 7])
        .prop_flat_map(|k| prop::collection::vec(0i64..4, k));
    runner
        .run(&strategy, |outs| {
            vote_matches(&outs).map_err(TestCaseError::fail)?;
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(
        "27 ordered ballots (10 multisets) for k=3 and 2000 random multisets for k in {1,3,5,7}"
            .into(),
    )
}

// 4
fn lottery_fairness() -> Outcome {
    let mut rng = SplitMix64::new(0xfa1e);
    let window = TicketWindow { start: 0, end: 1 };
    let table = TicketTable {
        entries: [(NodeId(0), 3), (NodeId(1), 1)].into(),
        window,
    };
    let n = 10_000u64;
    let mut wins = [0u64; 2];
    let mut salt = [0u8; 16];
    for _ in 0..n {
        let mut commitments = Vec::new();
        let mut reveals = Vec::new();
        for m in 0..2 {
            let seed = rng.next_u64();
            rng.fill(&mut salt);
            commitments.push(commit(NodeId(m), seed, salt));
            reveals.push(Reveal {
                miner: NodeId(m),
                seed,
                salt,
            });
        }
        let w = draw_winner(&reveals, &commitments, &table).map_err(|e| e.to_string())?;
        wins[w.0 as usize] += 1;
    }
    let mut parts = Vec::new();
    for (i, p) in [(0usize, 0.75f64), (1, 0.25)] {
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        let dev = (wins[i] as f64 - n as f64 * p).abs();
        check(dev <= 3.0 * sigma, || {
            format!(
                "miner {i}: {} wins, expected {} +- {:.1}",
                wins[i],
                n as f64 * p,
                3.0 * sigma
            )
        })?;
        parts.push(format!("{}/{n}", wins[i]));
    }

    // Two fixed (colluding) participants and one honest random one.
    let residues = 16u64;
    let mut hist = vec![0u64; residues as usize];
    let fixed: Vec<Reveal> = (1..3)
        .map(|m| Reveal {
            miner: NodeId(m),
            seed: 7,
            salt: [m as u8; 16],
        })
        .collect();
    for _ in 0..n {
        let mut reveals = fixed.clone();
        rng.fill(&mut salt);
        reveals.push(Reveal {
            miner: NodeId(0),
            seed: rng.next_u64(),
            salt,
        });
        let r = povm_core::lottery::combined_randomness(&reveals).mod_u64(residues);
        hist[r as usize] += 1;
    }
    let expected = n as f64 / residues as f64;
    let stat: f64 = hist
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum();
    let critical = ChiSquared::new((residues - 1) as f64)
        .unwrap()
        .inverse_cdf(0.99);
    check(stat < critical, || {
        format!("chi-square {stat:.2} >= {critical:.2}")
    })?;
    Ok(format!(
        "wins {} (3:1 tickets), residue chi-square {stat:.2} < {critical:.2}",
        parts.join(" vs ")
    ))
}

fn record(rng: &mut SplitMix64, job_id: u64, miner: NodeId) -> PovmRecord {
    let votes_total = 2 * rng.below(3) as u32 + 1;
    let votes_for = rng.below(votes_total as u64 + 1) as u32;
    let sla_ok = rng.below(5) != 0;
    let accepted = votes_for as usize >= quorum(votes_total as usize) && sla_ok;
    PovmRecord {
        job_id,
        miner,
        result_digest: Digest256::of(&rng.next_u64().to_le_bytes()),
        checkpoint_root: Digest256::of(&rng.next_u64().to_le_bytes()),
        verdict: if accepted {
            RecordVerdict::Accepted
        } else {
            RecordVerdict::Rejected
        },
        votes_for,
        votes_total,
        sla_ok,
    }
}

fn lottery_seal(rng: &mut SplitMix64, height: u64) -> (NodeId, Seal) {
    let miners = 2 + rng.below(3) as u32;
    let mut commitments: Vec<Commitment> = Vec::new();
    let mut reveals = Vec::new();
    let mut entries = BTreeMap::new();
    for m in 0..miners {
        let mut salt = [0u8; 16];
        rng.fill(&mut salt);
        let seed = rng.next_u64();
        commitments.push(commit(NodeId(m), seed, salt));
        reveals.push(Reveal {
            miner: NodeId(m),
            seed,
            salt,
        });
        entries.insert(NodeId(m), 1 + rng.below(4));
    }
    let tickets = TicketTable {
        entries,
        window: TicketWindow {
            start: height.saturating_sub(10),
            end: height,
        },
    };
    let winner = draw_winner(&reveals, &commitments, &tickets).unwrap();
    (
        winner,
        Seal::Lottery(LotteryProof {
            commitments,
            reveals,
            tickets,
            bootstrap: false,
            winner,
        }),
    )
}

/// A 20-block chain: even seeds are hashcash-sealed at difficulty 4, odd
/// seeds carry lottery transcripts.
fn random_chain(seed: u64) -> Chain {
    let mut rng = SplitMix64::new(seed);
    let pow = seed.is_multiple_of(2);
    let mut chain = Chain::new(Difficulty(if pow { 4 } else { 0 }));
    let (mut tx, mut job) = (0u64, 0u64);
    for h in 1..=20u64 {
        let mut b = Block {
            height: h,
            prev_digest: chain.tip().digest,
            timestamp: h * 12,
            ..Block::genesis()
        };
        for _ in 0..rng.below(3) {
            tx += 1;
            b.transactions.push(Transaction {
                id: tx,
                payer: NodeId(rng.below(6) as u32),
                payee: NodeId(rng.below(6) as u32),
                amount: rng.below(500),
                timestamp: h * 12,
            });
        }
        for _ in 0..rng.below(3) {
            job += 1;
            let miner = NodeId(rng.below(5) as u32);
            b.povm_records.push(record(&mut rng, job, miner));
        }
        if pow {
            b.producer = NodeId(rng.below(5) as u32);
            let mut meter = HashMeter::default();
            let found = mine(
                &b.pow_preimage(),
                chain.difficulty,
                rng.next_u64(),
                u64::MAX,
                &mut meter,
            )
            .unwrap();
            b.seal = Seal::Nonce(found.nonce);
        } else {
            let (winner, seal) = lottery_seal(&mut rng, h * 12);
            b.producer = winner;
            b.seal = seal;
        }
        chain.append_block(b).unwrap();
    }
    chain
}

/// First failing height when frame `i` of `c` is replaced by `(stored, body)`,
/// resuming from the validator state after frames `0..i`.
fn first_failure_with(
    c: &Chain,
    prefix: &ChainValidator,
    i: usize,
    stored: Digest256,
    body: &[u8],
) -> Option<usize> {
    let mut v = prefix.clone();
    let block = Block::from_bytes(body).map_err(|e| e.to_string());
    if !v
        .push(stored, block.as_ref().map_err(Clone::clone))
        .is_empty()
    {
        return Some(i);
    }
    for e in &c.entries()[i + 1..] {
        let at = v.next_index();
        if !v.push(e.digest, Ok(&e.block)).is_empty() {
            return Some(at);
        }
    }
    None
}

// 5
fn chain_integrity() -> Outcome {
    let chains: Vec<Chain> = (0..100).map(random_chain).collect();
    let start = Instant::now();
    let (mut mutations, mut cross_checked) = (0u64, 0u64);
    let mut rng = SplitMix64::new(0xb17e);
    for (ci, c) in chains.iter().enumerate() {
        check(c.len() == 21, || {
            format!("chain {ci} has {} blocks", c.len())
        })?;
        check(validate_chain(c).is_valid(), || {
            format!("chain {ci} does not validate")
        })?;
        let bin = dump_chain_bin(c);
        check(
            verify_chain_file(&bin)
                .map(|r| r.is_valid())
                .unwrap_or(false),
            || format!("chain {ci} file invalid"),
        )?;

        // magic, difficulty and block count precede the block frames
        let mut off = 8 + 1 + 4;
        let mut prefix = ChainValidator::new(c.difficulty);
        let mut m = bin.clone();
        for (i, entry) in c.entries().iter().enumerate() {
            let body_len = u32::from_le_bytes(bin[off..off + 4].try_into().unwrap()) as usize;
            let frame = off..off + 4 + 32 + body_len;
            for at in frame.clone() {
                let x = 1 + rng.below(255) as u8;
                m[at] ^= x;
                let full = || {
                    verify_chain_file(&m)
                        .ok()
                        .and_then(|r| r.first_invalid_index())
                };
                let detected = if at < off + 4 {
                    // a length change reframes the rest of the file
                    verify_chain_file(&m).map(|r| !r.is_valid()).unwrap_or(true)
                } else {
                    let stored = Digest256(m[off + 4..off + 36].try_into().unwrap());
                    let got = first_failure_with(c, &prefix, i, stored, &m[off + 36..frame.end]);
                    if mutations % 101 == 0 {
                        check(got == full(), || {
                            format!("chain {ci} byte {at}: resumed {got:?} vs full {:?}", full())
                        })?;
                        cross_checked += 1;
                    }
                    check(got.is_none_or(|h| h <= i + 1), || {
                        format!("chain {ci} byte {at}: flagged late at {got:?}")
                    })?;
                    got.is_some()
                };
                m[at] ^= x;
                check(detected, || {
                    format!("chain {ci}: mutation at byte {at} (xor {x:#04x}) undetected")
                })?;
                mutations += 1;
            }
            check(
                prefix.push(entry.digest, Ok(&entry.block)).is_empty(),
                || format!("chain {ci} block {i}"),
            )?;
            off = frame.end;
        }
        check(off == bin.len(), || format!("chain {ci}: trailing bytes"))?;
    }
    let elapsed = start.elapsed();
    within_budget("mutation sweep", elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "100 chains x 20 blocks valid; {mutations} single-byte mutations all detected ({cross_checked} cross-checked against a full file verify) in {elapsed:.2?}"
    ))
}

// 6
fn end_to_end_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = smoke_path();
    let mut docs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let out = dir.path().join(name);
        povm(&[
            "run",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "42",
            "--threads",
            threads,
        ]);
        docs.push(std::fs::read(out.join("chain.json")).map_err(|e| e.to_string())?);
    }
    check(docs[0] == docs[1], || {
        "same seed gave different chain.json".into()
    })?;
    check(docs[0] == docs[2], || {
        "thread count changed chain.json".into()
    })?;
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a/report.json")).unwrap()).unwrap();
    check(report["chain_height"] == 50, || {
        format!("height {}", report["chain_height"])
    })?;
    check(report["jobs"]["accepted"] == 20, || {
        format!("jobs {}", report["jobs"])
    })?;
    Ok(format!(
        "chain.json identical across 2 runs and threads 1/3 ({} bytes, 50 blocks)",
        docs[0].len()
    ))
}

// 7
fn ledger_completeness() -> Outcome {
    let bad = NodeId(4);
    let cfg = ScenarioConfig {
        horizon: 900,
        workload: Workload {
            jobs: 40,
            ..smoke().workload
        },
        adversaries: vec![Adversary {
            miner: bad,
            behavior: Behavior::WrongOutput,
        }],
        ..smoke()
    };
    let r = run_scenario(&cfg).map_err(|e| e.to_string())?;
    check(validate_chain(&r.chain).is_valid(), || {
        "chain invalid".into()
    })?;

    let mut blocks_of: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    let mut accepted_digest = BTreeMap::new();
    for b in r.chain.blocks() {
        for x in &b.povm_records {
            blocks_of.entry(x.job_id).or_default().insert(b.height);
            if x.verdict == RecordVerdict::Accepted {
                accepted_digest.insert(x.job_id, x.result_digest);
            }
        }
    }
    check(accepted_digest.len() as u64 == r.jobs.accepted, || {
        "accepted count mismatch".into()
    })?;
    for job in accepted_digest.keys() {
        check(blocks_of[job].len() == 1, || {
            format!("job {job} in blocks {:?}", blocks_of[job])
        })?;
    }

    // Outvoted on every job it served, in chain order.
    let mut rep = Reputation::default();
    let mut dissents = 0;
    let mut dissents_to_low = None;
    for b in r.chain.blocks() {
        for records in job_groups(&b.povm_records).values() {
            let Some(x) = records.iter().find(|x| x.miner == bad) else {
                continue;
            };
            check(x.verdict == RecordVerdict::Rejected, || {
                format!("job {}: adversary accepted", x.job_id)
            })?;
            let honest = accepted_digest.get(&x.job_id);
            check(honest.is_some_and(|d| *d != x.result_digest), || {
                format!("job {}: adversary not outvoted", x.job_id)
            })?;
            let outcome = record_outcomes(records)
                .into_iter()
                .find(|(m, _)| *m == bad)
                .and_then(|(_, o)| o);
            if let Some(o) = outcome {
                dissents += 1;
                rep = update_reputation(rep, o);
                if rep.score() < 0.1 && dissents_to_low.is_none() {
                    dissents_to_low = Some(dissents);
                }
            }
        }
    }
    let needed = dissents_to_low
        .ok_or_else(|| format!("reputation {} after {dissents} dissents", rep.score()))?;
    check(needed <= 5, || {
        format!("took {needed} dissents to fall below 0.1")
    })?;

    check(!r.ticket_tables.is_empty(), || {
        "no earned ticket tables".into()
    })?;
    for t in &r.ticket_tables {
        let reps = replay_reputation(&r.chain, t.window.end);
        check(reps.get(bad).score() < 0.1 || t.window.start == 0, || {
            format!("reputation high in {:?}", t.window)
        })?;
        check(t.get(bad) == 0, || {
            format!("adversary holds {} tickets in {:?}", t.get(bad), t.window)
        })?;
        let honest_min = (0..4)
            .map(|m| t.get(NodeId(m)))
            .filter(|&n| n > 0)
            .min()
            .unwrap_or(0);
        check(honest_min > 0, || {
            format!("no honest tickets in {:?}", t.window)
        })?;
    }
    Ok(format!(
        "{} jobs accepted once each; adversary outvoted on {dissents} jobs, reputation < 0.1 after {needed} dissents, 0 tickets in {} windows",
        r.jobs.accepted,
        r.ticket_tables.len()
    ))
}

// 8
fn tau_reporting() -> Outcome {
    let out = povm(&["compare", smoke_path().to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let u = |x: &serde_json::Value| x.as_u64().ok_or_else(|| format!("not an integer: {x}"));
    let c = &v["povm"]["counters"];
    let m = &v["model"];
    let (k, vm, clones, msgs, miners) = (
        u(&c["k"])?,
        u(&c["vm_instructions"])?,
        u(&c["clone_executions"])?,
        u(&c["dispatch_messages"])?,
        u(&c["miners"])?,
    );
    let (pj_i, pj_m, pj_h) = (
        u(&m["pj_per_instruction"])?,
        u(&m["pj_per_message"])?,
        u(&m["pj_per_hash_op"])?,
    );
    check(clones > 0, || "no clone executions".into())?;
    let mean = vm / clones;
    let by_hand = k as i128 * (mean as i128 * pj_i as i128) + msgs as i128 * pj_m as i128
        - pj_h as i128 * miners as i128;
    let reported: i128 = v["tau"]["tau_pj"]
        .to_string()
        .parse()
        .map_err(|e| format!("tau_pj: {e}"))?;
    check(reported == by_hand, || {
        format!("tau {reported} vs hand {by_hand}")
    })?;
    let base = &v["baseline"]["counters"];
    let base_pj = u(&base["hash_ops"])? as u128 * pj_h as u128;
    check(
        v["total_pj_baseline"].as_u64().map(u128::from) == Some(base_pj),
        || "baseline energy mismatch".into(),
    )?;
    check(
        u(&base["hash_ops"])? >= u(&v["baseline"]["chain_height"])?,
        || "baseline hashed less than once per block".into(),
    )?;
    Ok(format!(
        "tau = {k}*({mean}*{pj_i}) + {msgs}*{pj_m} - {pj_h}*{miners} = {by_hand} pJ"
    ))
}

// 9
/// A memory cell the coin-flip program never touches, so a perturbation
/// there persists into every later checkpoint.
const SCRATCH: u32 = 7;

fn fault_localization() -> Outcome {
    let mut checked = 0u64;
    for (k, seed, interval) in [(8u32, 42u64, 97u64), (8, 7, 250), (6, 3, 64), (3, 42, 10)] {
        let sla = Sla {
            checkpoint_interval: interval,
            ..Sla::default()
        };
        let job = Job {
            id: 1,
            program: coinflip_program(k),
            input: vec![],
            sla,
            customer: NodeId(0),
            seed,
        };
        let honest = execute(&job);
        let explicit: Vec<u64> = honest
            .checkpoints
            .iter()
            .filter(|c| c.kind == povm_core::jobvm::CheckpointKind::Explicit)
            .map(|c| c.instruction)
            .collect();
        let last = honest.checkpoints.last().map_or(0, |c| c.instruction);
        for n in 0..last {
            let faulty = execute_with_fault(
                &job,
                Some(Fault::PerturbMemory {
                    at_instruction: n,
                    cell: SCRATCH,
                    delta: 1,
                }),
            );
            let got = compare_checkpoints(&[&honest, &faulty]).map_err(|e| e.to_string())?;
            let offset = explicit.iter().filter(|&&i| i <= n).count();
            let want = (n / interval) as usize + offset;
            check(got == Some(want), || {
                format!("k={k} seed={seed} n={n}: diverged at {got:?}, want {want}")
            })?;
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} perturbation points localized to floor(n/interval) plus explicit checkpoints"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("coin-flip expectation", coinflip_expectation),
        ("hashcash attempt statistics", hashcash_attempts),
        ("quorum correctness", quorum_correctness),
        ("lottery fairness", lottery_fairness),
        ("chain integrity", chain_integrity),
        ("end-to-end determinism", end_to_end_determinism),
        ("ledger completeness", ledger_completeness),
        ("tau reporting", tau_reporting),
        ("checkpoint fault localization", fault_localization),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
