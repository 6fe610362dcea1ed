//! The bipartite graph between the blocks of a pattern and the users, and
//! maximum matching on it.
//!
//! Block `b` is adjacent to user `u` iff `u` is authorised for every step in
//! `b`. A pattern is authorised iff some matching saturates all blocks.

use crate::instance::{AuthorisationFunction, Plan, UserId, UserSet};
use crate::patterns::{blocks, Pattern};

#[derive(Clone, Debug)]
pub struct BlockUserGraph {
    n: usize,
    adjacency: Vec<UserSet>,
}

impl BlockUserGraph {
    pub fn new(n: usize, adjacency: Vec<UserSet>) -> Self {
        BlockUserGraph { n, adjacency }
    }

    pub fn block_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbours(&self, block: usize) -> &UserSet {
        &self.adjacency[block]
    }

    pub fn has_edge(&self, block: usize, user: usize) -> bool {
        self.adjacency[block].contains(user)
    }
}

/// A partial map from blocks to distinct users.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub block_to_user: Vec<Option<UserId>>,
}

impl Matching {
    pub fn size(&self) -> usize {
        self.block_to_user.iter().flatten().count()
    }

    pub fn is_saturating(&self) -> bool {
        self.block_to_user.iter().all(Option::is_some)
    }
}

/// `G_p` for pattern `p` under authorisation `a`.
pub fn build_gp(p: &Pattern, a: &AuthorisationFunction) -> BlockUserGraph {
    let adjacency = blocks(p)
        .into_iter()
        .map(|steps| {
            let mut adj = UserSet::full(a.n());
            for s in steps {
                adj.intersect_with(a.users(s));
            }
            adj
        })
        .collect();
    BlockUserGraph::new(a.n(), adjacency)
}

const UNSEEN: u32 = u32::MAX;

struct HopcroftKarp<'g> {
    adj: Vec<Vec<usize>>,
    graph: &'g BlockUserGraph,
    block_user: Vec<Option<usize>>,
    user_block: Vec<Option<usize>>,
    dist: Vec<u32>,
    cursor: Vec<usize>,
}

impl HopcroftKarp<'_> {
    fn bfs(&mut self) -> bool {
        let mut queue = Vec::with_capacity(self.adj.len());
        for b in 0..self.adj.len() {
            if self.block_user[b].is_none() {
                self.dist[b] = 0;
                queue.push(b);
            } else {
                self.dist[b] = UNSEEN;
            }
        }
        let mut found = false;
        let mut head = 0;
        while head < queue.len() {
            let b = queue[head];
            head += 1;
            for &u in &self.adj[b] {
                match self.user_block[u] {
                    None => found = true,
                    Some(other) if self.dist[other] == UNSEEN => {
                        self.dist[other] = self.dist[b] + 1;
                        queue.push(other);
                    }
                    Some(_) => {}
                }
            }
        }
        found
    }

    fn dfs(&mut self, b: usize) -> bool {
        while self.cursor[b] < self.adj[b].len() {
            let u = self.adj[b][self.cursor[b]];
            self.cursor[b] += 1;
            let free = match self.user_block[u] {
                None => true,
                Some(other) => self.dist[other] == self.dist[b] + 1 && self.dfs(other),
            };
            if free {
                self.block_user[b] = Some(u);
                self.user_block[u] = Some(b);
                return true;
            }
        }
        self.dist[b] = UNSEEN;
        false
    }

    fn run(mut self) -> Matching {
        while self.bfs() {
            self.cursor.iter_mut().for_each(|c| *c = 0);
            for b in 0..self.adj.len() {
                if self.block_user[b].is_none() {
                    self.dfs(b);
                }
            }
        }
        debug_assert!(self
            .block_user
            .iter()
            .enumerate()
            .all(|(b, u)| u.is_none_or(|u| self.graph.has_edge(b, u))));
        Matching {
            block_to_user: self.block_user.into_iter().map(|u| u.map(UserId)).collect(),
        }
    }
}

/// Maximum-cardinality matching by Hopcroft–Karp. Blocks are processed in
/// ascending label order and users in ascending index order, so the result
/// is reproducible.
pub fn max_matching(g: &BlockUserGraph) -> Matching {
    let blocks = g.block_count();
    HopcroftKarp {
        adj: g.adjacency.iter().map(UserSet::to_vec).collect(),
        graph: g,
        block_user: vec![None; blocks],
        user_block: vec![None; g.n],
        dist: vec![UNSEEN; blocks],
        cursor: vec![0; blocks],
    }
    .run()
}

/// A plan with pattern `p` authorised by `a`, if one exists.
pub fn authorised_plan_for(p: &Pattern, a: &AuthorisationFunction) -> Option<Plan> {
    let g = build_gp(p, a);
    let m = max_matching(&g);
    plan_from_matching(p, &m)
}

/// The plan corresponding to a saturating matching.
pub fn plan_from_matching(p: &Pattern, m: &Matching) -> Option<Plan> {
    if !m.is_saturating() {
        return None;
    }
    Some(Plan::new(
        p.rgs()
            .iter()
            .map(|&b| m.block_to_user[b].expect("saturating"))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{running_example, running_plan, user_set};
    use crate::generator::rng::SplitMix64;
    use crate::instance::is_authorised;
    use crate::patterns::{enumerate_patterns, pattern_of};

    // Exhaustive search over injective block-to-user choices.
    fn brute_force_size(g: &BlockUserGraph) -> usize {
        fn go(g: &BlockUserGraph, b: usize, used: &mut Vec<bool>) -> usize {
            if b == g.block_count() {
                return 0;
            }
            let mut best = go(g, b + 1, used);
            for u in g.neighbours(b).iter() {
                if !used[u] {
                    used[u] = true;
                    best = best.max(1 + go(g, b + 1, used));
                    used[u] = false;
                }
            }
            best
        }
        go(g, 0, &mut vec![false; g.n()])
    }

    #[test]
    fn running_example_graph() {
        let inst = running_example();
        let p = pattern_of(&running_plan());
        let g = build_gp(&p, inst.auth());
        assert_eq!(g.neighbours(0).to_vec(), vec![0]);
        assert_eq!(g.neighbours(1).to_vec(), vec![1, 2]);
        assert_eq!(g.neighbours(4).to_vec(), vec![4, 5, 6]);
        let m = max_matching(&g);
        assert_eq!(m.size(), 5);
        let plan = authorised_plan_for(&p, inst.auth()).unwrap();
        assert!(is_authorised(&plan, inst.auth()).unwrap());
        assert_eq!(pattern_of(&plan), p);
    }

    #[test]
    fn degenerate_graphs() {
        let p: Pattern = "0,1,2".parse().unwrap();
        let mut a = AuthorisationFunction::full(3, 4);
        *a.users_mut(crate::StepId(1)) = UserSet::empty(4);
        let g = build_gp(&p, &a);
        assert!(g.neighbours(1).is_empty());
        assert_eq!(max_matching(&g).size(), 2);
        assert!(authorised_plan_for(&p, &a).is_none());

        let empty = BlockUserGraph::new(3, vec![UserSet::empty(3); 2]);
        assert_eq!(max_matching(&empty).size(), 0);

        let full = build_gp(&p, &AuthorisationFunction::full(3, 4));
        assert_eq!(max_matching(&full).size(), 3);

        let single: Pattern = "0,0,0".parse().unwrap();
        let plan = authorised_plan_for(&single, &AuthorisationFunction::full(3, 4)).unwrap();
        assert_eq!(plan.indices(), vec![0, 0, 0]);
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..400 {
            let blocks = rng.inclusive(1, 6);
            let n = rng.inclusive(1, 10);
            let adjacency = (0..blocks)
                .map(|_| {
                    let users: Vec<usize> = (0..n).filter(|_| rng.below(100) < 35).collect();
                    user_set(n, &users)
                })
                .collect();
            let g = BlockUserGraph::new(n, adjacency);
            let m = max_matching(&g);
            assert_eq!(m.size(), brute_force_size(&g));
            let mut seen = std::collections::HashSet::new();
            for (b, u) in m.block_to_user.iter().enumerate() {
                if let Some(u) = u {
                    assert!(g.has_edge(b, u.0));
                    assert!(seen.insert(u.0));
                }
            }
        }
    }

    #[test]
    fn plans_have_requested_pattern() {
        let mut rng = SplitMix64::new(5);
        for k in 1..=6 {
            let n = 6;
            let lists: Vec<Vec<usize>> = (0..k)
                .map(|_| (0..n).filter(|_| rng.below(100) < 50).collect())
                .collect();
            let a = AuthorisationFunction::from_lists(n, &lists).unwrap();
            for p in enumerate_patterns(k) {
                if let Some(plan) = authorised_plan_for(&p, &a) {
                    assert!(a.authorises(plan.users()));
                    assert_eq!(pattern_of(&plan), p);
                }
            }
        }
    }

    #[test]
    fn adding_users_never_shrinks_matching() {
        let mut rng = SplitMix64::new(23);
        for _ in 0..200 {
            let k = 5;
            let n = 6;
            let lists: Vec<Vec<usize>> = (0..k)
                .map(|_| (0..n).filter(|_| rng.below(100) < 40).collect())
                .collect();
            let a = AuthorisationFunction::from_lists(n, &lists).unwrap();
            let mut bigger = a.clone();
            let s = rng.below_usize(k);
            bigger.users_mut(crate::StepId(s)).insert(rng.below_usize(n));
            for p in enumerate_patterns(k) {
                let before = max_matching(&build_gp(&p, &a)).size();
                let after = max_matching(&build_gp(&p, &bigger)).size();
                assert!(after >= before);
            }
        }
    }
}
