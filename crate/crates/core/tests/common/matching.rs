//! Reference implementations of the cell assignment.

use std::collections::BTreeMap;

use nbdeck_core::matcher::{
    EvidenceChannel, LeafScore, Ranking, SectionAssignment, SectionRanking,
};
use nbdeck_core::tree::NodeId;

/// section id -> assigned leaf ids, ascending.
pub type Picks = BTreeMap<String, Vec<NodeId>>;

pub fn picks_of(a: &SectionAssignment) -> Picks {
    a.sections
        .iter()
        .map(|s| {
            let mut v: Vec<NodeId> = s.leaves.iter().map(|p| p.leaf_id).collect();
            v.sort_unstable();
            (s.section_id.clone(), v)
        })
        .collect()
}

/// Walk every (section, leaf) pair by descending score, earlier section,
/// lower cell index, and place it while the leaf is free and the section has
/// room.
pub fn greedy(ranking: &Ranking, tau: f64) -> Picks {
    let mut pairs: Vec<(usize, &LeafScore)> = ranking
        .sections
        .iter()
        .enumerate()
        .flat_map(|(si, s)| s.scores.iter().map(move |l| (si, l)))
        .filter(|(_, l)| l.score >= tau)
        .collect();
    pairs.sort_by(|a, b| {
        b.1.score
            .total_cmp(&a.1.score)
            .then(a.0.cmp(&b.0))
            .then(a.1.cell_index.cmp(&b.1.cell_index))
    });
    let mut taken = std::collections::BTreeSet::new();
    let mut out: Vec<Vec<NodeId>> = vec![Vec::new(); ranking.sections.len()];
    for (si, l) in pairs {
        if out[si].len() < ranking.sections[si].k && taken.insert(l.leaf_id) {
            out[si].push(l.leaf_id);
        }
    }
    finish(ranking, out)
}

fn finish(ranking: &Ranking, out: Vec<Vec<NodeId>>) -> Picks {
    ranking
        .sections
        .iter()
        .zip(out)
        .map(|(s, mut v)| {
            v.sort_unstable();
            (s.section_id.clone(), v)
        })
        .collect()
}

/// Every capacity-respecting assignment with no blocking pair, found by
/// enumeration. Small instances only.
pub fn stable_assignments(ranking: &Ranking, tau: f64) -> Vec<Picks> {
    let sections = &ranking.sections;
    let leaves: Vec<(NodeId, usize)> = {
        let mut v: Vec<_> = sections[0]
            .scores
            .iter()
            .map(|l| (l.leaf_id, l.cell_index))
            .collect();
        v.sort_unstable();
        v
    };
    let score = |si: usize, leaf: NodeId| {
        sections[si]
            .scores
            .iter()
            .find(|l| l.leaf_id == leaf)
            .unwrap()
            .score
    };
    let cell = |leaf: NodeId| leaves.iter().find(|l| l.0 == leaf).unwrap().1;
    // leaf prefers a over b
    let leaf_prefers = |leaf: NodeId, a: usize, b: Option<usize>| match b {
        None => true,
        Some(b) => score(a, leaf) > score(b, leaf) || (score(a, leaf) == score(b, leaf) && a < b),
    };
    // section prefers leaf x over y
    let section_prefers = |si: usize, x: NodeId, y: NodeId| {
        score(si, x) > score(si, y) || (score(si, x) == score(si, y) && cell(x) < cell(y))
    };

    let n = leaves.len();
    let m = sections.len();
    let mut found = Vec::new();
    let mut choice = vec![0usize; n]; // 0 = none, s + 1 = section s
    loop {
        let feasible = (0..m).all(|si| {
            let held: Vec<usize> = (0..n).filter(|&i| choice[i] == si + 1).collect();
            held.len() <= sections[si].k && held.iter().all(|&i| score(si, leaves[i].0) >= tau)
        });
        if feasible {
            let blocked = (0..n).any(|i| {
                let leaf = leaves[i].0;
                let current = choice[i].checked_sub(1);
                (0..m).any(|si| {
                    if current == Some(si)
                        || score(si, leaf) < tau
                        || !leaf_prefers(leaf, si, current)
                    {
                        return false;
                    }
                    let held: Vec<NodeId> = (0..n)
                        .filter(|&j| choice[j] == si + 1)
                        .map(|j| leaves[j].0)
                        .collect();
                    held.len() < sections[si].k
                        || held.iter().any(|&h| section_prefers(si, leaf, h))
                })
            });
            if !blocked {
                let out = (0..m)
                    .map(|si| {
                        (0..n)
                            .filter(|&i| choice[i] == si + 1)
                            .map(|i| leaves[i].0)
                            .collect()
                    })
                    .collect();
                found.push(finish(ranking, out));
            }
        }
        // next assignment in base m + 1
        let mut i = 0;
        while i < n {
            choice[i] += 1;
            if choice[i] <= m {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == n {
            return found;
        }
    }
}

/// A ranking from a raw score matrix `scores[section][leaf]`. Leaf `i` gets
/// id `i + 1` and cell index `2 * i`.
pub fn ranking_from(scores: &[Vec<f64>], ks: &[usize]) -> Ranking {
    let sections = scores
        .iter()
        .zip(ks)
        .enumerate()
        .map(|(si, (row, &k))| {
            let mut scores: Vec<LeafScore> = row
                .iter()
                .enumerate()
                .map(|(i, &score)| LeafScore {
                    leaf_id: i + 1,
                    cell_index: 2 * i,
                    section_id: format!("s{si}"),
                    score,
                    best_evidence: EvidenceChannel::Code,
                    evidence_text: String::new(),
                })
                .collect();
            nbdeck_core::matcher::sort_scores(&mut scores);
            SectionRanking {
                section_id: format!("s{si}"),
                k,
                scores,
            }
        })
        .collect();
    Ranking { sections }
}
