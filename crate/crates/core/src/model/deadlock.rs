//! Resource-deadlock detection over a job-level wait-for graph.
//!
//! The check only fires when the cluster is fully up, every slot is taken by a
//! scheduled attempt that cannot start, and some queued task would be eligible
//! if a slot were free. Blocked jobs wait for the jobs holding slots; a stuck
//! holder waits for the maps of its own job. Blocked tasks whose job sits on a
//! cycle get the sticky deadlock flag.

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;

use super::state::GlobalState;
use super::Phase;

impl GlobalState {
    pub(crate) fn detect_deadlock(&mut self) {
        if self.free_slots > 0 || self.trackercount() as usize != self.nodes.len() {
            return;
        }
        let mut holders: Vec<u32> = Vec::new();
        for n in &self.nodes {
            for a in n.slots.iter().flatten() {
                if self.tasks[*a as usize].phase != Phase::Scheduled || self.is_runnable(*a) {
                    return;
                }
                holders.push(self.tasks[*a as usize].job);
            }
        }
        let blocked: Vec<u32> = self
            .queue
            .iter()
            .take(self.model.config.max_queue)
            .take_while(|(s, _)| *s <= self.clock)
            .map(|(_, a)| *a)
            .filter(|&a| self.is_eligible(a))
            .collect();
        if blocked.is_empty() {
            return;
        }

        let mut g: DiGraphMap<u32, ()> = DiGraphMap::new();
        for &b in &blocked {
            for &h in &holders {
                g.add_edge(self.tasks[b as usize].job, h, ());
            }
        }
        for &h in &holders {
            g.add_edge(h, h, ());
        }
        let mut on_cycle = std::collections::HashSet::new();
        for scc in tarjan_scc(&g) {
            if scc.len() > 1 || g.contains_edge(scc[0], scc[0]) {
                on_cycle.extend(scc);
            }
        }
        for b in blocked {
            let t = &self.tasks[b as usize];
            if on_cycle.contains(&t.job) && !t.deadlocked {
                self.mark_waiting(b, true);
            }
        }
    }
}
