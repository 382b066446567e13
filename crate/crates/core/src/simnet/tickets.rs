//! Ticket tables and reputation derived from a chain, so every node with
//! the same chain computes the same lottery inputs.

use std::collections::BTreeMap;

use crate::hashchain::{Chain, PovmRecord};
use crate::lottery::{issue_tickets, TicketTable, TicketWindow};
use crate::redundancy::{record_outcomes, ReputationLedger};
use crate::types::{JobId, Tick};

/// The last epoch completed before tick `t`; empty during the first epoch.
pub fn ticket_window(t: Tick, epoch_length: Tick) -> TicketWindow {
    let e = t / epoch_length;
    if e == 0 {
        return TicketWindow { start: 0, end: 0 };
    }
    TicketWindow {
        start: (e - 1) * epoch_length,
        end: e * epoch_length,
    }
}

/// Records grouped per job, in job-id order within each block.
pub fn job_groups(records: &[PovmRecord]) -> BTreeMap<JobId, Vec<PovmRecord>> {
    let mut groups: BTreeMap<JobId, Vec<PovmRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.job_id).or_default().push(*r);
    }
    groups
}

/// Reputation after applying, in chain order, the outcomes of every job
/// recorded in a block stamped before `before`.
pub fn replay_reputation(chain: &Chain, before: Tick) -> ReputationLedger {
    let mut ledger = ReputationLedger::default();
    for b in chain.blocks().filter(|b| b.timestamp < before) {
        for records in job_groups(&b.povm_records).values() {
            for (miner, outcome) in record_outcomes(records) {
                if let Some(o) = outcome {
                    ledger.apply(miner, o);
                }
            }
        }
    }
    ledger
}

/// Tickets for a block stamped `t` on top of `chain`. Records count by the
/// timestamp of the block that carries them. Tickets are issued when their
/// window closes, weighted by reputation at that moment, so the table stays
/// fixed for the whole following epoch.
pub fn expected_tickets(chain: &Chain, t: Tick, epoch_length: Tick) -> TicketTable {
    let window = ticket_window(t, epoch_length);
    let ledger = replay_reputation(chain, window.end);
    let stamped = chain
        .blocks()
        .flat_map(|b| b.povm_records.iter().map(move |r| (b.timestamp, r)));
    issue_tickets(stamped, window, |m| ledger.get(m))
}
