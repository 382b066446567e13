use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::digest::Digest256;
use crate::hashchain::{digest_block, resolve_fork, Block, Chain, ForkSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    /// Ties at the tip height, counted when a second head appears.
    pub forks_observed: u64,
    pub reorgs: u64,
    /// Valid blocks that arrived below the tip height.
    pub stale_blocks: u64,
    pub rejected_blocks: u64,
    pub orphaned_blocks: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Inserted {
    Extended,
    Reorganized { depth: u64 },
    ForkJoined,
    Stale,
    Orphaned,
    Known,
    Rejected(String),
}

/// One node's view of the block graph: a canonical chain plus the side
/// blocks and unresolved ties around its tip.
///
/// The first block seen at a height stays canonical. A competing block at
/// the tip height joins the fork set; whichever head is extended first wins.
/// Side blocks are kept for one height past their own and then dropped.
#[derive(Clone, Debug)]
pub struct BlockTree {
    chain: Chain,
    side: BTreeMap<Digest256, Block>,
    forks: Option<ForkSet>,
    orphans: BTreeMap<Digest256, Vec<Block>>,
    pub stats: TreeStats,
}

impl BlockTree {
    pub fn new(chain: Chain) -> Self {
        BlockTree {
            chain,
            side: BTreeMap::new(),
            forks: None,
            orphans: BTreeMap::new(),
            stats: TreeStats::default(),
        }
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn forks(&self) -> Option<&ForkSet> {
        self.forks.as_ref()
    }

    fn canonical_index(&self, d: &Digest256) -> Option<usize> {
        // canonical digests are only looked up near the tip in practice
        self.chain.entries().iter().rposition(|e| e.digest == *d)
    }

    fn known(&self, d: &Digest256) -> bool {
        self.side.contains_key(d) || self.canonical_index(d).is_some()
    }

    /// The chain ending at `parent`, if `parent` is known.
    fn chain_to(&self, parent: &Digest256) -> Option<Chain> {
        let mut path = Vec::new();
        let mut cur = *parent;
        let anchor = loop {
            if let Some(i) = self.canonical_index(&cur) {
                break i;
            }
            let b = self.side.get(&cur)?;
            path.push(b.clone());
            cur = b.prev_digest;
        };
        let mut c = self.chain.clone();
        c.truncate(anchor as u64);
        for b in path.into_iter().rev() {
            c.append_block(b).ok()?;
        }
        Some(c)
    }

    /// Inserts `block` and any orphans it unblocks. `validate` sees the
    /// chain the block would extend and may reject it.
    pub fn insert(
        &mut self,
        block: Block,
        validate: &impl Fn(&Chain, &Block) -> Result<(), String>,
    ) -> Vec<Inserted> {
        let mut out = Vec::new();
        let mut work = vec![block];
        while let Some(b) = work.pop() {
            let d = digest_block(&b);
            let r = self.insert_one(b, d, validate);
            if !matches!(
                r,
                Inserted::Orphaned | Inserted::Known | Inserted::Rejected(_)
            ) {
                if let Some(children) = self.orphans.remove(&d) {
                    work.extend(children.into_iter().rev());
                }
            }
            out.push(r);
        }
        self.prune();
        out
    }

    fn insert_one(
        &mut self,
        block: Block,
        d: Digest256,
        validate: &impl Fn(&Chain, &Block) -> Result<(), String>,
    ) -> Inserted {
        if self.known(&d) {
            return Inserted::Known;
        }
        let parent = block.prev_digest;
        if !self.known(&parent) {
            self.stats.orphaned_blocks += 1;
            self.orphans.entry(parent).or_default().push(block);
            return Inserted::Orphaned;
        }
        let tip_height = self.chain.height();

        if parent == self.chain.tip().digest {
            if let Err(e) = self
                .chain
                .check_append(&block)
                .map_err(|e| e.to_string())
                .and_then(|_| validate(&self.chain, &block))
            {
                self.stats.rejected_blocks += 1;
                return Inserted::Rejected(e);
            }
            if let Some(f) = self.forks.take() {
                // the canonical head was extended first; the others are abandoned
                debug_assert!(resolve_fork(&f, &block).is_ok());
            }
            self.chain.append_block(block).expect("checked");
            return Inserted::Extended;
        }

        let Some(mut branch) = self.chain_to(&parent) else {
            self.stats.rejected_blocks += 1;
            return Inserted::Rejected("parent chain unavailable".into());
        };
        if let Err(e) = branch
            .check_append(&block)
            .map_err(|e| e.to_string())
            .and_then(|_| validate(&branch, &block))
        {
            self.stats.rejected_blocks += 1;
            return Inserted::Rejected(e);
        }

        if block.height > tip_height {
            if let Some(f) = self.forks.take() {
                if let Ok(res) = resolve_fork(&f, &block) {
                    log::debug!(
                        "fork at height {} resolved in favour of {}",
                        f.height(),
                        res.winner
                    );
                }
            }
            let ancestor = (0..branch.len().min(self.chain.len()))
                .rev()
                .find(|&i| branch.entries()[i].digest == self.chain.entries()[i].digest)
                .expect("chains share genesis");
            for e in &self.chain.entries()[ancestor + 1..] {
                self.side.insert(e.digest, e.block.clone());
            }
            for e in &branch.entries()[ancestor + 1..] {
                self.side.remove(&e.digest);
            }
            branch.append_block(block).expect("checked");
            let depth = tip_height - ancestor as u64;
            self.chain = branch;
            self.stats.reorgs += 1;
            return Inserted::Reorganized { depth };
        }

        if block.height == tip_height {
            let forks = self.forks.get_or_insert_with(|| {
                self.stats.forks_observed += 1;
                ForkSet::new(self.chain.tip().block.clone())
            });
            forks.insert(block.clone()).expect("same height");
            self.side.insert(d, block);
            return Inserted::ForkJoined;
        }

        self.stats.stale_blocks += 1;
        self.side.insert(d, block);
        Inserted::Stale
    }

    fn prune(&mut self) {
        let tip = self.chain.height();
        // a side block stays while it, or a side block built on it, is
        // within one height of the tip
        let mut keep = BTreeSet::new();
        for (d, b) in self.side.iter().filter(|(_, b)| b.height + 2 > tip) {
            keep.insert(*d);
            let mut parent = b.prev_digest;
            while let Some(p) = self.side.get(&parent) {
                if !keep.insert(parent) {
                    break;
                }
                parent = p.prev_digest;
            }
        }
        self.side.retain(|d, _| keep.contains(d));
        self.orphans.retain(|_, bs| {
            bs.retain(|b| b.height + 2 > tip);
            !bs.is_empty()
        });
        if self.forks.as_ref().is_some_and(|f| f.height() != tip) {
            self.forks = None;
        }
    }

    pub fn side_blocks(&self) -> usize {
        self.side.len()
    }
}
