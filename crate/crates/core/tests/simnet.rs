use std::collections::BTreeSet;

use povm_core::hashchain::{dump_chain_json, validate_chain, RecordVerdict};
use povm_core::jobvm::{coinflip_program, Job, Sla};
use povm_core::simnet::*;
use povm_core::NodeId;

fn smoke() -> ScenarioConfig {
    ScenarioConfig {
        miners: 5,
        customers: 1,
        k: 3,
        block_interval: 12,
        epoch_length: 120,
        horizon: 50 * 12,
        seed: 42,
        workload: Workload {
            jobs: 20,
            k_heads: 3,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn single_miner_single_job() {
    let cfg = ScenarioConfig {
        miners: 1,
        customers: 1,
        k: 1,
        horizon: 60,
        workload: Workload {
            jobs: 1,
            ..Default::default()
        },
        ..Default::default()
    };
    let r = run_scenario(&cfg).unwrap();
    assert!(r.chain.len() >= 2);
    assert_eq!(r.jobs.accepted, 1);
    assert_eq!(
        r.blocks_per_producer.keys().collect::<Vec<_>>(),
        vec![&NodeId(0)]
    );
    assert!(validate_chain(&r.chain).is_valid());
}

#[test]
fn smoke_scenario_settles_every_job() {
    let r = run_scenario(&smoke()).unwrap();
    assert_eq!(r.chain_height, 50);
    assert_eq!(
        r.jobs,
        JobCounts {
            submitted: 20,
            accepted: 20,
            rejected: 0,
            requeued: 0,
            pending: 0
        }
    );
    assert!(validate_chain(&r.chain).is_valid());
    let settled = settled_jobs(&r.chain);
    assert_eq!(settled.len(), 20);
    assert!(settled.values().all(|&a| a));
    // each job's records sit in exactly one block
    for job in 0..20 {
        let blocks = r
            .chain
            .blocks()
            .filter(|b| b.povm_records.iter().any(|x| x.job_id == job))
            .count();
        assert_eq!(blocks, 1, "job {job}");
    }
}

#[test]
fn same_seed_same_chain() {
    let a = run_scenario(&smoke()).unwrap();
    let b = run_scenario(&smoke()).unwrap();
    assert_eq!(dump_chain_json(&a.chain), dump_chain_json(&b.chain));
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    let mut other = smoke();
    other.seed = 43;
    assert_ne!(run_scenario(&other).unwrap().tip_digest, a.tip_digest);
}

#[test]
fn thread_count_does_not_matter() {
    let digests: BTreeSet<_> = [1, 2, 4]
        .into_iter()
        .map(|n| {
            run_scenario(&ScenarioConfig {
                threads: Some(n),
                ..smoke()
            })
            .unwrap()
            .tip_digest
        })
        .collect();
    assert_eq!(digests.len(), 1);
}

#[test]
fn step_on_empty_queue_is_idle() {
    let cfg = ScenarioConfig {
        horizon: 0,
        workload: Workload {
            jobs: 0,
            ..Default::default()
        },
        ..Default::default()
    };
    let mut w = World::new(cfg).unwrap();
    assert_eq!(w.pending_events(), 0);
    assert_eq!(w.step().unwrap(), Step::Idle);
}

#[test]
fn same_tick_events_follow_seq() {
    let cfg = ScenarioConfig {
        horizon: 0,
        ..Default::default()
    };
    let mut w = World::new(cfg).unwrap();
    let tx = |id| {
        Payload::TxSubmit(povm_core::hashchain::Transaction {
            id,
            payer: NodeId(1),
            payee: NodeId(2),
            amount: 1,
            timestamp: 0,
        })
    };
    let s5 = w.push_event(3, NodeId(1), NodeId(0), tx(5));
    let s7 = w.push_event(3, NodeId(1), NodeId(0), tx(7));
    assert!(s5 < s7);
    let mut q = EventQueue::default();
    q.push(3, NodeId(0), NodeId(0), tx(7));
    q.push(3, NodeId(0), NodeId(0), tx(5));
    assert_eq!(q.pop().unwrap().seq, 0);
    assert!(matches!(
        w.step().unwrap(),
        Step::Delivered {
            at: 3,
            kind: "tx_submit"
        }
    ));
}

#[test]
fn synchronous_network_never_forks_and_keeps_cadence() {
    for seed in 0..100 {
        let cfg = ScenarioConfig {
            miners: 4,
            k: 3,
            latency: Latency { min: 1, max: 1 },
            horizon: 20 * 12,
            seed,
            workload: Workload {
                jobs: 6,
                ..Default::default()
            },
            ..Default::default()
        };
        let r = run_scenario(&cfg).unwrap();
        assert_eq!(r.forks_observed, 0, "seed {seed}");
        assert_eq!(r.agreed_height, r.chain_height);
        let ts: Vec<_> = r.chain.blocks().skip(1).map(|b| b.timestamp).collect();
        assert!(
            ts.windows(2).all(|w| w[1] - w[0] == cfg.block_interval),
            "seed {seed}"
        );
    }
}

#[test]
fn job_queues_agree_at_quiescence() {
    for seed in 0..20 {
        let cfg = ScenarioConfig {
            customers: 3,
            seed,
            latency: Latency { min: 1, max: 9 },
            workload: Workload {
                jobs: 15,
                submit_interval: 1,
                ..Default::default()
            },
            horizon: 120,
            ..Default::default()
        };
        let mut w = World::new(cfg).unwrap();
        while let Step::Delivered { .. } = w.step().unwrap() {}
        let first = w.nodes()[0].queue().ids();
        assert_eq!(first.len(), 15);
        for n in w.nodes() {
            assert_eq!(n.queue().ids(), first, "seed {seed} node {}", n.id);
        }
    }
}

#[test]
fn enqueue_order_and_duplicates() {
    let job = |id, c| Job {
        id,
        program: coinflip_program(1),
        input: vec![],
        sla: Sla::default(),
        customer: NodeId(c),
        seed: 0,
    };
    let mut q = JobQueue::default();
    enqueue_job(&mut q, job(1, 2), 5).unwrap();
    enqueue_job(&mut q, job(2, 1), 5).unwrap();
    assert_eq!(q.ids(), vec![2, 1]);
    assert_eq!(
        enqueue_job(&mut q, job(2, 1), 6),
        Err(QueueError::DuplicateJob(2))
    );
}

#[test]
fn tight_reveal_gap_forks_and_heals() {
    let mut forked = false;
    for seed in 0..6 {
        let cfg = ScenarioConfig {
            latency: Latency { min: 1, max: 4 },
            reveal_gap: Some(4),
            seed,
            ..smoke()
        };
        let r = run_scenario(&cfg).unwrap();
        forked |= r.forks_observed > 0;
        assert!(r.agreed_height + 1 >= r.chain_height, "seed {seed}");
        assert!(validate_chain(&r.chain).is_valid());
        assert_eq!(r.jobs.accepted, 20);
    }
    assert!(forked);
}

#[test]
fn wrong_output_miner_is_outvoted_and_loses_tickets() {
    let cfg = ScenarioConfig {
        horizon: 900,
        adversaries: vec![Adversary {
            miner: NodeId(4),
            behavior: Behavior::WrongOutput,
        }],
        workload: Workload {
            jobs: 40,
            ..Default::default()
        },
        ..smoke()
    };
    let r = run_scenario(&cfg).unwrap();
    assert_eq!(r.jobs.accepted, 40);
    let records: Vec<_> = r
        .chain
        .blocks()
        .flat_map(|b| b.povm_records.clone())
        .collect();
    let bad: Vec<_> = records.iter().filter(|x| x.miner == NodeId(4)).collect();
    assert!(bad.len() >= 5);
    assert!(bad.iter().all(|x| x.verdict == RecordVerdict::Rejected));
    assert!(r.nodes[4].reputation < 0.1);
    for t in &r.ticket_tables {
        assert_eq!(t.get(NodeId(4)), 0);
        assert!(t.get(NodeId(0)) > 0);
    }
}

#[test]
fn sla_breaching_miner_is_penalised() {
    let cfg = ScenarioConfig {
        adversaries: vec![Adversary {
            miner: NodeId(2),
            behavior: Behavior::SlaBreach,
        }],
        ..smoke()
    };
    let r = run_scenario(&cfg).unwrap();
    let recs: Vec<_> = r
        .chain
        .blocks()
        .flat_map(|b| b.povm_records.clone())
        .filter(|x| x.miner == NodeId(2))
        .collect();
    assert!(!recs.is_empty());
    assert!(recs
        .iter()
        .all(|x| !x.sla_ok && x.verdict == RecordVerdict::Rejected));
    assert!(r.nodes[2].reputation < 0.5);
}

#[test]
fn withheld_reveals_void_tickets_but_chain_continues() {
    let cfg = ScenarioConfig {
        adversaries: vec![Adversary {
            miner: NodeId(1),
            behavior: Behavior::WithholdReveal,
        }],
        ..smoke()
    };
    let r = run_scenario(&cfg).unwrap();
    assert_eq!(r.chain_height, 50);
    assert!(!r.blocks_per_producer.contains_key(&NodeId(1)));
    assert!(validate_chain(&r.chain).is_valid());
}

#[test]
fn ticket_conservation() {
    let r = run_scenario(&smoke()).unwrap();
    assert!(!r.ticket_tables.is_empty());
    for t in &r.ticket_tables {
        let rep = replay_reputation(&r.chain, t.window.end);
        let mut accepted = std::collections::BTreeMap::new();
        for b in r.chain.blocks().filter(|b| t.window.contains(b.timestamp)) {
            for x in b
                .povm_records
                .iter()
                .filter(|x| x.verdict == RecordVerdict::Accepted && x.sla_ok)
            {
                *accepted.entry(x.miner).or_insert(0u64) += 1;
            }
        }
        let expected: u64 = accepted
            .iter()
            .map(|(m, n)| (rep.get(*m).score() * *n as f64).floor() as u64)
            .sum();
        assert_eq!(t.total(), expected);
    }
}

#[test]
fn baseline_mode() {
    let mut cfg = ScenarioConfig {
        mode: Mode::HashcashBaseline,
        difficulty: povm_core::hashcash::Difficulty(0),
        ..smoke()
    };
    let r = run_scenario(&cfg).unwrap();
    assert_eq!(r.counters.hash_ops, r.chain_height);
    assert_eq!(r.counters.vm_instructions, 0);
    cfg.difficulty = povm_core::hashcash::Difficulty(6);
    let r = run_scenario(&cfg).unwrap();
    assert!(r.counters.hash_ops > r.chain_height);
    assert!(validate_chain(&r.chain).is_valid());
    assert!(r.energy.pow_pj > 0);
}

#[test]
fn zero_jobs_povm_uses_no_vm_energy() {
    let cfg = ScenarioConfig {
        workload: Workload {
            jobs: 0,
            ..Default::default()
        },
        ..smoke()
    };
    let r = run_scenario(&cfg).unwrap();
    assert_eq!(r.energy.povm_pj + r.energy.pow_pj, 0);
    assert_eq!(r.bootstrap_blocks, r.chain_height);
}

#[test]
fn invalid_configs_are_refused() {
    let r = run_scenario(&ScenarioConfig { k: 4, ..smoke() });
    assert!(
        matches!(r, Err(SimError::InvalidConfig(ConfigError { ref field, .. })) if field == "k")
    );
    let r = run_scenario(&ScenarioConfig {
        latency: Latency { min: 3, max: 1 },
        ..smoke()
    });
    assert!(matches!(r, Err(SimError::InvalidConfig(_))));
}

#[test]
fn metrics_rows_are_cumulative() {
    let r = run_scenario(&smoke()).unwrap();
    let csv = r.metrics_csv();
    assert!(csv.starts_with(
        "tick,blocks,jobs_accepted,jobs_rejected,vm_instructions,hash_ops,tickets_issued\n"
    ));
    assert!(r
        .metrics
        .windows(2)
        .all(|w| w[0].tick < w[1].tick && w[0].blocks <= w[1].blocks));
    let last = r.metrics.last().unwrap();
    assert_eq!(last.blocks, r.chain_height);
    assert_eq!(last.jobs_accepted, 20);
    assert_eq!(last.tickets_issued, r.tickets_issued);
}
