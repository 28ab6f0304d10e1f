//! Structural canonical form behind the symmetric fingerprint.
//!
//! Nodes that some unresolved task prefers keep their position. The remaining
//! nodes are anonymous: their sub-states (daemon flags and the multiset of
//! occupying attempts) are sorted, so any permutation of them gives the same key.
//! The search hashes this form incrementally instead of building it; the key is
//! used to test that the two agree.

use crate::model::state::task_words;
use crate::model::GlobalState;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeKey {
    pub datanode_on: bool,
    pub tracker_on: bool,
    /// Sorted `(original << 8 | attempt)` words of the occupants.
    pub occupants: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalKey {
    pub clock: u64,
    pub daemons: [u64; 4],
    /// Sorted per-attempt words, placement excluded.
    pub tasks: Vec<[u64; 13]>,
    pub pinned: Vec<(usize, NodeKey)>,
    pub anonymous: Vec<NodeKey>,
}

pub fn canonicalize(state: &GlobalState) -> CanonicalKey {
    let mut tasks: Vec<[u64; 13]> = state.tasks().iter().map(|t| task_words(t, false)).collect();
    tasks.sort_unstable();
    let mut pinned = Vec::new();
    let mut anonymous = Vec::new();
    for (i, n) in state.nodes().iter().enumerate() {
        let mut occupants: Vec<u64> = n.slots.iter().flatten().map(|a| state.task(*a).id_word()).collect();
        occupants.sort_unstable();
        let key = NodeKey { datanode_on: n.datanode_on, tracker_on: n.tracker_on, occupants };
        if n.is_pinned() {
            pinned.push((i, key));
        } else {
            anonymous.push(key);
        }
    }
    anonymous.sort();
    CanonicalKey { clock: state.clock(), daemons: state.kernel_sig, tasks, pinned, anonymous }
}
