use std::collections::{BTreeMap, BTreeSet};

use crate::jobvm::Job;
use crate::types::{JobId, NodeId, Tick};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueueError {
    #[error("job {0} already queued")]
    DuplicateJob(JobId),
}

/// Replicated job queue. Every node inserts submissions as they arrive; the
/// total order `(submit tick, customer, job id)` makes the contents identical
/// everywhere once all submissions have been delivered.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JobQueue {
    jobs: BTreeMap<(Tick, NodeId, JobId), Job>,
    ids: BTreeSet<JobId>,
}

impl JobQueue {
    pub fn get(&self, id: JobId) -> Option<&Job> {
        self.iter().find(|(_, j)| j.id == id).map(|(_, j)| j)
    }

    pub fn contains(&self, id: JobId) -> bool {
        self.ids.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    /// Jobs in queue order with their submit ticks.
    pub fn iter(&self) -> impl Iterator<Item = (Tick, &Job)> {
        self.jobs.iter().map(|(&(t, _, _), j)| (t, j))
    }

    pub fn ids(&self) -> Vec<JobId> {
        self.jobs.keys().map(|&(_, _, id)| id).collect()
    }
}

pub fn enqueue_job(q: &mut JobQueue, job: Job, submit_tick: Tick) -> Result<(), QueueError> {
    if !q.ids.insert(job.id) {
        return Err(QueueError::DuplicateJob(job.id));
    }
    q.jobs.insert((submit_tick, job.customer, job.id), job);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jobvm::{coinflip_program, Sla};

    fn job(id: JobId, customer: u32) -> Job {
        Job {
            id,
            program: coinflip_program(1),
            input: vec![],
            sla: Sla::default(),
            customer: NodeId(customer),
            seed: id,
        }
    }

    #[test]
    fn total_order() {
        let mut q = JobQueue::default();
        enqueue_job(&mut q, job(10, 2), 4).unwrap();
        enqueue_job(&mut q, job(11, 1), 4).unwrap();
        enqueue_job(&mut q, job(3, 9), 1).unwrap();
        assert_eq!(q.ids(), vec![3, 11, 10]);
        assert_eq!(
            enqueue_job(&mut q, job(10, 1), 0),
            Err(QueueError::DuplicateJob(10))
        );
        assert_eq!(q.len(), 3);
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let jobs: Vec<_> = (0..20u64)
            .map(|i| (job(i, (i % 3) as u32), i / 4))
            .collect();
        let mut a = JobQueue::default();
        let mut b = JobQueue::default();
        for (j, t) in &jobs {
            enqueue_job(&mut a, j.clone(), *t).unwrap();
        }
        for (j, t) in jobs.iter().rev() {
            enqueue_job(&mut b, j.clone(), *t).unwrap();
        }
        assert_eq!(a, b);
    }
}
