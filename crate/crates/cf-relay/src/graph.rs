//! Sparse bipartite graphs sampled from edge-degree distributions, and the
//! persistent code-instance format.
//!
//! Construction is a configuration-model socket shuffle with duplicate-edge
//! repair by socket swapping. Degree sequences come from largest-remainder
//! rounding of the node-perspective fractions, after which the edge budget is
//! reconciled by moving single nodes between degree classes (at most one node
//! sits outside the nominal support afterwards). Everything is deterministic
//! in the seed.

use crate::dist::EdgeDegreeDistribution;
use crate::error::{Error, Result};
use crate::rng::Rng;
use std::io::{BufRead, Write};

/// Sparse bipartite graph stored as per-left-node sorted right-index lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    pub n_left: usize,
    pub n_right: usize,
    adjacency: Vec<Vec<u32>>,
    edge_count: usize,
}

impl BipartiteGraph {
    fn new(n_left: usize, n_right: usize, adjacency: Vec<Vec<u32>>) -> Result<Self> {
        if adjacency.len() != n_left {
            return Err(Error::Construction(format!(
                "adjacency rows {} != n_left {n_left}",
                adjacency.len()
            )));
        }
        let mut edge_count = 0;
        for (i, row) in adjacency.iter().enumerate() {
            edge_count += row.len();
            for w in row.windows(2) {
                if w[1] <= w[0] {
                    return Err(Error::Construction(format!(
                        "row {i} not strictly sorted (duplicate edge?)"
                    )));
                }
            }
            if let Some(&last) = row.last() {
                if last as usize >= n_right {
                    return Err(Error::Construction(format!(
                        "row {i} references right node {last} >= {n_right}"
                    )));
                }
            }
        }
        Ok(BipartiteGraph {
            n_left,
            n_right,
            adjacency,
            edge_count,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Right-node neighbor list of one left node, sorted ascending.
    pub fn neighbors(&self, left: usize) -> &[u32] {
        &self.adjacency[left]
    }

    pub fn left_degree(&self, left: usize) -> usize {
        self.adjacency[left].len()
    }

    /// Adjacency seen from the right side, computed on demand.
    pub fn transpose(&self) -> Vec<Vec<u32>> {
        let mut t = vec![Vec::new(); self.n_right];
        for (l, row) in self.adjacency.iter().enumerate() {
            for &r in row {
                t[r as usize].push(l as u32);
            }
        }
        t
    }

    /// Edge-perspective degree fractions recomputed from the left side.
    pub fn left_edge_fractions(&self) -> Vec<(usize, f64)> {
        let mut by_degree: std::collections::BTreeMap<usize, usize> = Default::default();
        for row in &self.adjacency {
            *by_degree.entry(row.len()).or_insert(0) += row.len();
        }
        by_degree
            .into_iter()
            .map(|(d, e)| (d, e as f64 / self.edge_count as f64))
            .collect()
    }
}

/// Right-side specification for [`sample_bipartite`].
#[derive(Debug, Clone)]
pub enum RightSide {
    /// All right nodes carry the same degree; the node count follows from
    /// the edge budget.
    Regular(usize),
    /// `count` right nodes with degrees drawn from the distribution.
    Dist {
        count: usize,
        dist: EdgeDegreeDistribution,
    },
}

/// Largest-remainder rounding of the node-perspective fractions to `n_nodes`
/// integer counts.
fn node_degree_counts(n_nodes: usize, dist: &EdgeDegreeDistribution) -> Vec<(usize, usize)> {
    let fracs = dist.node_fractions();
    let mut counts: Vec<(usize, usize, f64)> = fracs
        .iter()
        .map(|&(d, f)| {
            let exact = f * n_nodes as f64;
            (d, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = counts.iter().map(|c| c.1).sum();
    let mut leftover = n_nodes.saturating_sub(assigned);
    // hand leftovers to the largest remainders; ties go to lower degrees
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        counts[b]
            .2
            .partial_cmp(&counts[a].2)
            .unwrap()
            .then(counts[a].0.cmp(&counts[b].0))
    });
    for &i in order.iter().cycle().take(counts.len() * 2) {
        if leftover == 0 {
            break;
        }
        counts[i].1 += 1;
        leftover -= 1;
    }
    counts
        .into_iter()
        .filter(|&(_, c, _)| c > 0)
        .map(|(d, c, _)| (d, c))
        .collect()
}

/// Adjusts node counts so the total edge budget hits `target`, moving one
/// node at a time between degree classes (preferring existing classes, and
/// creating at most a single off-support class when no gap fits).
fn repair_edge_budget(counts: &mut Vec<(usize, usize)>, target: usize) -> Result<()> {
    let total_nodes: usize = counts.iter().map(|&(_, c)| c).sum();
    if target < total_nodes {
        return Err(Error::DegreeBudget(format!(
            "edge target {target} below one edge per node ({total_nodes})"
        )));
    }
    for _ in 0..1000 {
        let current: i64 = counts.iter().map(|&(d, c)| (d * c) as i64).sum();
        let delta = target as i64 - current;
        if delta == 0 {
            counts.retain(|&(_, c)| c > 0);
            counts.sort_by_key(|&(d, _)| d);
            return Ok(());
        }
        // best single-node move between existing classes
        let mut best: Option<(usize, usize, i64)> = None; // (from, to, gain)
        for i in 0..counts.len() {
            if counts[i].1 == 0 {
                continue;
            }
            for j in 0..counts.len() {
                if i == j {
                    continue;
                }
                let gain = counts[j].0 as i64 - counts[i].0 as i64;
                if gain.signum() == delta.signum()
                    && gain.abs() <= delta.abs()
                    && best.map_or(true, |(_, _, g)| gain.abs() > g.abs())
                {
                    best = Some((i, j, gain));
                }
            }
        }
        match best {
            Some((i, j, _)) => {
                counts[i].1 -= 1;
                counts[j].1 += 1;
            }
            None => {
                // no existing pair fits: move one node from the largest
                // class to a fresh degree absorbing the whole residual
                let (idx, _) = counts
                    .iter()
                    .enumerate()
                    .filter(|(_, &(_, c))| c > 0)
                    .max_by_key(|(_, &(d, _))| d)
                    .ok_or_else(|| Error::DegreeBudget("no nodes to adjust".into()))?;
                let new_degree = (counts[idx].0 as i64 + delta).max(1) as usize;
                counts[idx].1 -= 1;
                if let Some(slot) = counts.iter_mut().find(|(d, _)| *d == new_degree) {
                    slot.1 += 1;
                } else {
                    counts.push((new_degree, 1));
                }
            }
        }
    }
    Err(Error::DegreeBudget(
        "edge-budget repair failed to converge".into(),
    ))
}

fn expand_degrees(counts: &[(usize, usize)]) -> Vec<usize> {
    let mut v = Vec::new();
    for &(d, c) in counts {
        v.extend(std::iter::repeat(d).take(c));
    }
    v
}

/// Pairs left and right sockets uniformly at random and repairs duplicate
/// edges by swapping sockets. Degrees are taken as given.
pub fn sample_from_degrees(
    left_degrees: &[usize],
    right_degrees: &[usize],
    seed: u64,
) -> Result<BipartiteGraph> {
    let e_left: usize = left_degrees.iter().sum();
    let e_right: usize = right_degrees.iter().sum();
    if e_left != e_right {
        return Err(Error::DegreeBudget(format!(
            "left sockets {e_left} != right sockets {e_right}"
        )));
    }
    let mut rng = Rng::from_seed(seed);
    let mut left_sockets: Vec<u32> = Vec::with_capacity(e_left);
    for (i, &d) in left_degrees.iter().enumerate() {
        left_sockets.extend(std::iter::repeat(i as u32).take(d));
    }
    let mut right_sockets: Vec<u32> = Vec::with_capacity(e_right);
    for (i, &d) in right_degrees.iter().enumerate() {
        right_sockets.extend(std::iter::repeat(i as u32).take(d));
    }
    rng.shuffle(&mut right_sockets);

    // duplicate repair: sort edge ids by endpoints, then swap offenders'
    // right sockets with random partners until the multigraph is simple
    let budget = 200 + 20 * e_left;
    let mut attempts = 0usize;
    loop {
        let mut order: Vec<u32> = (0..e_left as u32).collect();
        order.sort_by_key(|&i| (left_sockets[i as usize], right_sockets[i as usize]));
        let duplicates: Vec<u32> = order
            .windows(2)
            .filter(|w| {
                left_sockets[w[0] as usize] == left_sockets[w[1] as usize]
                    && right_sockets[w[0] as usize] == right_sockets[w[1] as usize]
            })
            .map(|w| w[1])
            .collect();
        if duplicates.is_empty() {
            break;
        }
        for &e in &duplicates {
            attempts += 1;
            if attempts > budget {
                return Err(Error::Construction(format!(
                    "duplicate-edge repair exceeded its budget ({budget} swaps)"
                )));
            }
            let other = rng.gen_range(e_left);
            right_sockets.swap(e as usize, other);
        }
    }

    let mut adjacency = vec![Vec::new(); left_degrees.len()];
    for (l, r) in left_sockets.iter().zip(&right_sockets) {
        adjacency[*l as usize].push(*r);
    }
    for row in &mut adjacency {
        row.sort_unstable();
    }
    BipartiteGraph::new(left_degrees.len(), right_degrees.len(), adjacency)
}

/// Breaks every length-4 cycle between two degree-2 left nodes (a pair
/// sharing both right neighbors) by swapping sockets with randomly chosen
/// partner edges. Such pairs are weight-2 stopping sets of a check graph and
/// weight-2 null vectors of a syndrome graph, so instances scrub them. Pairs
/// involving higher-degree nodes are harmless and left alone; touching them
/// relocates too many neighbor pairs for the swap process to settle.
pub fn remove_four_cycles(graph: &BipartiteGraph, seed: u64) -> Result<BipartiteGraph> {
    let mut rng = Rng::from_seed(seed);
    // flat edge arrays
    let mut left_of: Vec<u32> = Vec::with_capacity(graph.edge_count());
    let mut right_of: Vec<u32> = Vec::with_capacity(graph.edge_count());
    for l in 0..graph.n_left {
        for &r in graph.neighbors(l) {
            left_of.push(l as u32);
            right_of.push(r);
        }
    }
    let e_total = left_of.len();
    let budget = 200 + 20 * e_total;
    let mut attempts = 0usize;
    loop {
        let mut per_left: Vec<Vec<(u32, u32)>> = vec![Vec::new(); graph.n_left];
        for e in 0..e_total {
            per_left[left_of[e] as usize].push((right_of[e], e as u32));
        }
        // one offending edge per duplicated degree-2 neighborhood, plus any
        // duplicate edges anywhere
        let mut pair_seen: std::collections::BTreeMap<(u32, u32), u32> = Default::default();
        let mut offenders: Vec<u32> = Vec::new();
        let mut dup_edges: std::collections::BTreeSet<u32> = Default::default();
        for edges in &mut per_left {
            edges.sort_unstable();
            for i in 1..edges.len() {
                if edges[i].0 == edges[i - 1].0 {
                    dup_edges.insert(edges[i].1);
                }
            }
            if edges.len() == 2 && edges[0].0 != edges[1].0 {
                let key = (edges[0].0, edges[1].0);
                match pair_seen.get(&key) {
                    None => {
                        pair_seen.insert(key, edges[1].1);
                    }
                    Some(_) => offenders.push(edges[1].1),
                }
            }
        }
        offenders.extend(dup_edges.iter().copied());
        if offenders.is_empty() {
            break;
        }
        for &e in &offenders {
            attempts += 1;
            if attempts > budget {
                return Err(Error::Construction(
                    "four-cycle removal exceeded its budget".into(),
                ));
            }
            let other = rng.gen_range(e_total);
            right_of.swap(e as usize, other);
        }
    }
    let mut adjacency = vec![Vec::new(); graph.n_left];
    for e in 0..e_total {
        adjacency[left_of[e] as usize].push(right_of[e]);
    }
    for row in &mut adjacency {
        row.sort_unstable();
    }
    BipartiteGraph::new(graph.n_left, graph.n_right, adjacency)
}

/// Scrubs short cycles from a syndrome graph whose left side is dominated
/// by degree-2 nodes. Each degree-2 left node acts as an edge between its
/// two checks, so every cycle of the projected check graph is a null vector
/// of the syndrome map; the short ones (projected length <= 5, i.e. weight
/// <= 5 null vectors) are likely to slip past the destination's pair
/// constraints and are swapped away here.
pub fn scrub_projection_cycles(graph: &BipartiteGraph, seed: u64) -> Result<BipartiteGraph> {
    let mut rng = Rng::from_seed(seed);
    let mut left_of: Vec<u32> = Vec::with_capacity(graph.edge_count());
    let mut right_of: Vec<u32> = Vec::with_capacity(graph.edge_count());
    for l in 0..graph.n_left {
        for &r in graph.neighbors(l) {
            left_of.push(l as u32);
            right_of.push(r);
        }
    }
    let e_total = left_of.len();
    let budget = 400 + 40 * e_total;
    let mut attempts = 0usize;
    'outer: for _round in 0..10_000 {
        // projected adjacency among checks via degree-2 left nodes
        let mut per_left: Vec<Vec<(u32, u32)>> = vec![Vec::new(); graph.n_left];
        for e in 0..e_total {
            per_left[left_of[e] as usize].push((right_of[e], e as u32));
        }
        let mut proj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); graph.n_right]; // (peer, via edge)
        for edges in &per_left {
            if edges.len() == 2 {
                let (r0, e0) = edges[0];
                let (r1, _) = edges[1];
                proj[r0 as usize].push((r1, e0));
                proj[r1 as usize].push((r0, e0));
            }
        }
        for list in &mut proj {
            list.sort_unstable();
        }
        // an offender is a degree-2 left node whose two checks are joined by
        // another projected path of length <= 3 (projected cycle <= 4)
        let mut offender: Option<u32> = None;
        'scan: for edges in &per_left {
            if edges.len() != 2 {
                continue;
            }
            let (r0, e0) = edges[0];
            let (r1, _) = edges[1];
            if r0 == r1 {
                offender = Some(e0);
                break 'scan;
            }
            // BFS from r0 to depth 4, not using this left node's own link
            let mut dist: std::collections::BTreeMap<u32, u8> = Default::default();
            dist.insert(r0, 0);
            let mut frontier = vec![r0];
            for depth in 1..=4u8 {
                let mut next = Vec::new();
                for &p in &frontier {
                    for &(peer, via) in &proj[p as usize] {
                        if via == e0 {
                            continue;
                        }
                        if peer == r1 {
                            offender = Some(e0);
                            break 'scan;
                        }
                        if let std::collections::btree_map::Entry::Vacant(slot) =
                            dist.entry(peer)
                        {
                            slot.insert(depth);
                            next.push(peer);
                        }
                    }
                }
                frontier = next;
            }
        }
        let Some(e) = offender else { break 'outer };
        attempts += 1;
        if attempts > budget {
            return Err(Error::Construction(
                "projection-cycle scrub exceeded its budget".into(),
            ));
        }
        let other = rng.gen_range(e_total);
        right_of.swap(e as usize, other);
    }
    let mut adjacency = vec![Vec::new(); graph.n_left];
    for e in 0..e_total {
        adjacency[left_of[e] as usize].push(right_of[e]);
    }
    for row in &mut adjacency {
        row.sort_unstable();
    }
    // swapping may reintroduce duplicate edges; the degree-2 pass cleans up
    let rebuilt = BipartiteGraph {
        n_left: graph.n_left,
        n_right: graph.n_right,
        edge_count: e_total,
        adjacency,
    };
    remove_four_cycles(&rebuilt, seed ^ 0x5eed)
}

/// Samples a bipartite graph with `n_left` left nodes drawn from an edge
/// distribution and the given right side. The realized node-degree histogram
/// matches the largest-remainder target within one node per class before the
/// edge-budget repair.
pub fn sample_bipartite(
    n_left: usize,
    left_dist: &EdgeDegreeDistribution,
    right: &RightSide,
    seed: u64,
) -> Result<BipartiteGraph> {
    if n_left == 0 {
        return Err(Error::DegreeBudget("empty left side".into()));
    }
    let mut left_counts = node_degree_counts(n_left, left_dist);
    match right {
        RightSide::Regular(r) => {
            if *r == 0 {
                return Err(Error::DegreeBudget("right degree 0".into()));
            }
            let e_prov: usize = left_counts.iter().map(|&(d, c)| d * c).sum();
            let n_right = ((e_prov as f64 / *r as f64).round() as usize).max(1);
            repair_edge_budget(&mut left_counts, n_right * r)?;
            let left_degrees = expand_degrees(&left_counts);
            let right_degrees = vec![*r; n_right];
            sample_from_degrees(&left_degrees, &right_degrees, seed)
        }
        RightSide::Dist { count, dist } => {
            let e_left: usize = left_counts.iter().map(|&(d, c)| d * c).sum();
            let mut right_counts = node_degree_counts(*count, dist);
            repair_edge_budget(&mut right_counts, e_left)?;
            let left_degrees = expand_degrees(&left_counts);
            let right_degrees = expand_degrees(&right_counts);
            sample_from_degrees(&left_degrees, &right_degrees, seed)
        }
    }
}

/// A concrete source-code instance: the check graph (checks on the left) and
/// the ensemble it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct C1Instance {
    /// Checks on the left, codeword bits on the right.
    pub graph: BipartiteGraph,
    pub dist: EdgeDegreeDistribution,
    pub d_s: usize,
    /// Design rate (n - k) / n.
    pub rate: f64,
}

/// A concrete nested-compression instance: the quantizer graph G and the
/// syndrome graph H, sharing their b side.
#[derive(Debug, Clone, PartialEq)]
pub struct C2Instance {
    /// b on the left (regular d_b), mapped bits c on the right (2n of them).
    pub ldgm: BipartiteGraph,
    /// b on the left (v_bd), syndrome checks p on the right (v_pd).
    pub syndrome: BipartiteGraph,
    pub v_cd: EdgeDegreeDistribution,
    pub v_bd: EdgeDegreeDistribution,
    pub v_pd: EdgeDegreeDistribution,
    pub d_b: usize,
    pub rate_b: f64,
    pub rate_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceBody {
    C1(C1Instance),
    C2(C2Instance),
}

/// A persisted code instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeInstance {
    /// Source block length.
    pub n: usize,
    pub graph_seed: u64,
    pub dither_seed: u64,
    pub body: InstanceBody,
}

impl CodeInstance {
    pub fn kind(&self) -> &'static str {
        match self.body {
            InstanceBody::C1(_) => "C1",
            InstanceBody::C2(_) => "C2",
        }
    }

    pub fn as_c1(&self) -> Result<&C1Instance> {
        match &self.body {
            InstanceBody::C1(c) => Ok(c),
            _ => Err(Error::Domain("expected a C1 instance".into())),
        }
    }

    pub fn as_c2(&self) -> Result<&C2Instance> {
        match &self.body {
            InstanceBody::C2(c) => Ok(c),
            _ => Err(Error::Domain("expected a C2 instance".into())),
        }
    }

    /// Number of parity checks (C1) or quantizer b-nodes (C2).
    pub fn m(&self) -> usize {
        match &self.body {
            InstanceBody::C1(c) => c.graph.n_left,
            InstanceBody::C2(c) => c.ldgm.n_left,
        }
    }

    /// Number of syndrome bits (C2 only).
    pub fn t(&self) -> usize {
        match &self.body {
            InstanceBody::C1(_) => 0,
            InstanceBody::C2(c) => c.syndrome.n_right,
        }
    }
}

/// Builds a source-code instance at block length `n`. The check count lands
/// within rounding of `n (1 - rate)`.
pub fn instantiate_c1(
    dist: &EdgeDegreeDistribution,
    d_s: usize,
    rate: f64,
    n: usize,
    graph_seed: u64,
) -> Result<CodeInstance> {
    let qs = sample_bipartite(n, dist, &RightSide::Regular(d_s), graph_seed)?;
    // two codeword bits sharing two checks would be a two-bit stopping set;
    // scrub those cycles before orienting the graph
    let qs = remove_four_cycles(&qs, crate::rng::derive_seed(graph_seed, "c1-girth", 0))?;
    // store checks on the left
    let checks = BipartiteGraph::new(qs.n_right, qs.n_left, {
        let mut t = qs.transpose();
        for row in &mut t {
            row.sort_unstable();
        }
        t
    })?;
    let realized = (n as f64 - checks.n_left as f64) / n as f64;
    if (realized - rate).abs() > 2.0 / n as f64 + 1e-12 {
        return Err(Error::Construction(format!(
            "realized rate {realized} strays from design rate {rate}"
        )));
    }
    Ok(CodeInstance {
        n,
        graph_seed,
        dither_seed: 0,
        body: InstanceBody::C1(C1Instance {
            graph: checks,
            dist: dist.clone(),
            d_s,
            rate,
        }),
    })
}

/// Builds a nested-compression instance: the quantizer graph pairs the two
/// mapped bits of each observation symbol at equal degree, b-nodes are
/// d_b-regular, and the syndrome graph follows (v_bd, v_pd).
#[allow(clippy::too_many_arguments)]
pub fn instantiate_c2(
    v_cd: &EdgeDegreeDistribution,
    d_b: usize,
    v_bd: &EdgeDegreeDistribution,
    v_pd: &EdgeDegreeDistribution,
    rate_b: f64,
    rate_p: f64,
    n: usize,
    graph_seed: u64,
    dither_seed: u64,
) -> Result<CodeInstance> {
    let mut m = (n as f64 * rate_b).round() as usize;
    if (m * d_b) % 2 != 0 {
        m += 1; // the paired c side needs an even socket count
    }
    let t = (n as f64 * rate_p).round() as usize;

    // y-node c-degrees by largest remainder, repaired to half the b sockets
    let mut y_counts = node_degree_counts(n, v_cd);
    repair_edge_budget(&mut y_counts, m * d_b / 2)?;
    let y_degrees = expand_degrees(&y_counts);
    if y_degrees.len() != n {
        return Err(Error::DegreeBudget(format!(
            "y-node degree sequence has {} entries, expected {n}",
            y_degrees.len()
        )));
    }
    // both mapped bits of symbol i share the degree: c-bits 2i and 2i+1
    let mut c_degrees = Vec::with_capacity(2 * n);
    for &d in &y_degrees {
        c_degrees.push(d);
        c_degrees.push(d);
    }
    let b_degrees = vec![d_b; m];
    let ldgm = sample_from_degrees(
        &b_degrees,
        &c_degrees,
        crate::rng::derive_seed(graph_seed, "ldgm", 0),
    )?;

    // syndrome graph: left b from v_bd over m nodes, right p from v_pd over t
    let b_counts = node_degree_counts(m, v_bd);
    let e_b: usize = b_counts.iter().map(|&(d, c)| d * c).sum();
    let mut p_counts = node_degree_counts(t, v_pd);
    repair_edge_budget(&mut p_counts, e_b)?;
    let syndrome = sample_from_degrees(
        &expand_degrees(&b_counts),
        &expand_degrees(&p_counts),
        crate::rng::derive_seed(graph_seed, "syndrome", 0),
    )?;
    let syndrome = remove_four_cycles(
        &syndrome,
        crate::rng::derive_seed(graph_seed, "syndrome-girth", 0),
    )?;
    let syndrome = scrub_projection_cycles(
        &syndrome,
        crate::rng::derive_seed(graph_seed, "syndrome-girth", 1),
    )?;

    for (name, realized, design) in [
        ("m/n", m as f64 / n as f64, rate_b),
        ("t/n", t as f64 / n as f64, rate_p),
    ] {
        if (realized - design).abs() > 2.0 / n as f64 + 1e-12 {
            return Err(Error::Construction(format!(
                "{name} = {realized} strays from design rate {design}"
            )));
        }
    }

    Ok(CodeInstance {
        n,
        graph_seed,
        dither_seed,
        body: InstanceBody::C2(C2Instance {
            ldgm,
            syndrome,
            v_cd: v_cd.clone(),
            v_bd: v_bd.clone(),
            v_pd: v_pd.clone(),
            d_b,
            rate_b,
            rate_p,
        }),
    })
}

const MAGIC: &str = "cfrelay-instance";
const VERSION: &str = "v1";

pub(crate) fn write_dist<W: Write>(w: &mut W, name: &str, dist: &EdgeDegreeDistribution) -> Result<()> {
    write!(w, "ensemble {name} {} :", dist.iter().count())?;
    for (d, v) in dist.iter() {
        write!(w, " {d} {v}")?;
    }
    writeln!(w)?;
    Ok(())
}

fn write_graph<W: Write>(w: &mut W, name: &str, g: &BipartiteGraph) -> Result<()> {
    writeln!(w, "graph {name} {} {}", g.n_left, g.n_right)?;
    for l in 0..g.n_left {
        let row = g.neighbors(l);
        let mut line = String::with_capacity(row.len() * 7);
        for (i, &r) in row.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&r.to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Writes an instance in the line-oriented text format: a magic/version
/// line, a header line of scalar fields, the ensembles as `degree fraction`
/// pairs, then each graph as one left node per line listing its sorted
/// 0-based right indices. ASCII throughout with `\n` line endings. Lines
/// starting with `#` are comments and ignored on load.
pub fn save_instance<W: Write>(inst: &CodeInstance, sink: &mut W) -> Result<()> {
    writeln!(sink, "{MAGIC} {VERSION}")?;
    match &inst.body {
        InstanceBody::C1(c) => {
            writeln!(
                sink,
                "kind C1 n {} m {} t 0 graph_seed {} dither_seed {} d_s {} rate {}",
                inst.n, c.graph.n_left, inst.graph_seed, inst.dither_seed, c.d_s, c.rate
            )?;
            write_dist(sink, "v_qd", &c.dist)?;
            write_graph(sink, "s_q", &c.graph)?;
        }
        InstanceBody::C2(c) => {
            writeln!(
                sink,
                "kind C2 n {} m {} t {} graph_seed {} dither_seed {} d_b {} rate_b {} rate_p {}",
                inst.n,
                c.ldgm.n_left,
                c.syndrome.n_right,
                inst.graph_seed,
                inst.dither_seed,
                c.d_b,
                c.rate_b,
                c.rate_p
            )?;
            write_dist(sink, "v_cd", &c.v_cd)?;
            write_dist(sink, "v_bd", &c.v_bd)?;
            write_dist(sink, "v_pd", &c.v_pd)?;
            write_graph(sink, "b_c", &c.ldgm)?;
            write_graph(sink, "b_p", &c.syndrome)?;
        }
    }
    Ok(())
}

struct LineReader<'a, R: BufRead> {
    inner: &'a mut R,
    line_no: usize,
}

impl<'a, R: BufRead> LineReader<'a, R> {
    fn next_line(&mut self) -> Result<Option<(usize, String)>> {
        loop {
            let mut buf = String::new();
            let read = self.inner.read_line(&mut buf)?;
            if read == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            let trimmed = buf.trim_end_matches(['\n', '\r']).to_string();
            if trimmed.trim_start().starts_with('#') || trimmed.trim().is_empty() {
                continue;
            }
            return Ok(Some((self.line_no, trimmed)));
        }
    }

    fn expect_line(&mut self, what: &str) -> Result<(usize, String)> {
        self.next_line()?.ok_or(Error::Parse {
            line: self.line_no + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        msg: msg.into(),
    })
}

pub(crate) fn parse_dist(line_no: usize, line: &str, expect_name: &str) -> Result<EdgeDegreeDistribution> {
    let mut it = line.split_whitespace();
    if it.next() != Some("ensemble") {
        return parse_err(line_no, "expected an ensemble line");
    }
    let name = it.next().unwrap_or("");
    if name != expect_name {
        return parse_err(line_no, format!("expected ensemble {expect_name}, got {name}"));
    }
    let count: usize = it.next().and_then(|s| s.parse().ok()).ok_or(Error::Parse {
        line: line_no,
        msg: "bad ensemble entry count".into(),
    })?;
    if it.next() != Some(":") {
        return parse_err(line_no, "expected `:` after the entry count");
    }
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        let d: usize = it.next().and_then(|s| s.parse().ok()).ok_or(Error::Parse {
            line: line_no,
            msg: "bad ensemble degree".into(),
        })?;
        let v: f64 = it.next().and_then(|s| s.parse().ok()).ok_or(Error::Parse {
            line: line_no,
            msg: "bad ensemble fraction".into(),
        })?;
        pairs.push((d, v));
    }
    if it.next().is_some() {
        return parse_err(line_no, "trailing tokens after ensemble entries");
    }
    EdgeDegreeDistribution::from_pairs(&pairs).map_err(|e| Error::Parse {
        line: line_no,
        msg: format!("invalid ensemble: {e}"),
    })
}

fn parse_graph<R: BufRead>(
    reader: &mut LineReader<'_, R>,
    expect_name: &str,
) -> Result<BipartiteGraph> {
    let (line_no, header) = reader.expect_line("a graph header")?;
    let mut it = header.split_whitespace();
    if it.next() != Some("graph") {
        return parse_err(line_no, "expected a graph header");
    }
    let name = it.next().unwrap_or("");
    if name != expect_name {
        return parse_err(line_no, format!("expected graph {expect_name}, got {name}"));
    }
    let n_left: usize = it.next().and_then(|s| s.parse().ok()).ok_or(Error::Parse {
        line: line_no,
        msg: "bad left count".into(),
    })?;
    let n_right: usize = it.next().and_then(|s| s.parse().ok()).ok_or(Error::Parse {
        line: line_no,
        msg: "bad right count".into(),
    })?;
    let mut adjacency = Vec::with_capacity(n_left);
    for _ in 0..n_left {
        let (row_no, row_line) = reader.expect_line("an adjacency row")?;
        let mut row = Vec::new();
        for tok in row_line.split_whitespace() {
            let r: u32 = tok.parse().map_err(|_| Error::Parse {
                line: row_no,
                msg: format!("bad right index {tok:?}"),
            })?;
            row.push(r);
        }
        adjacency.push(row);
    }
    BipartiteGraph::new(n_left, n_right, adjacency).map_err(|e| Error::Parse {
        line: reader.line_no,
        msg: format!("invalid graph: {e}"),
    })
}

/// Loads an instance written by [`save_instance`].
pub fn load_instance<R: BufRead>(source: &mut R) -> Result<CodeInstance> {
    let mut reader = LineReader {
        inner: source,
        line_no: 0,
    };
    let (line_no, magic) = reader.expect_line("the magic line")?;
    let mut it = magic.split_whitespace();
    if it.next() != Some(MAGIC) {
        return parse_err(line_no, "not a code-instance file");
    }
    let version = it.next().unwrap_or("");
    if version != VERSION {
        return Err(Error::VersionMismatch {
            found: version.to_string(),
            expected: VERSION.to_string(),
        });
    }

    let (hline, header) = reader.expect_line("the header line")?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let field = |key: &str| -> Result<&str> {
        fields
            .iter()
            .position(|&f| f == key)
            .and_then(|i| fields.get(i + 1).copied())
            .ok_or(Error::Parse {
                line: hline,
                msg: format!("missing header field {key}"),
            })
    };
    if fields.first() != Some(&"kind") {
        return parse_err(hline, "header must start with `kind`");
    }
    let kind = field("kind")?;
    let n: usize = field("n")?.parse().map_err(|_| Error::Parse {
        line: hline,
        msg: "bad n".into(),
    })?;
    let graph_seed: u64 = field("graph_seed")?.parse().map_err(|_| Error::Parse {
        line: hline,
        msg: "bad graph_seed".into(),
    })?;
    let dither_seed: u64 = field("dither_seed")?.parse().map_err(|_| Error::Parse {
        line: hline,
        msg: "bad dither_seed".into(),
    })?;

    match kind {
        "C1" => {
            let d_s: usize = field("d_s")?.parse().map_err(|_| Error::Parse {
                line: hline,
                msg: "bad d_s".into(),
            })?;
            let rate: f64 = field("rate")?.parse().map_err(|_| Error::Parse {
                line: hline,
                msg: "bad rate".into(),
            })?;
            let (dline, dist_line) = reader.expect_line("the v_qd ensemble")?;
            let dist = parse_dist(dline, &dist_line, "v_qd")?;
            let graph = parse_graph(&mut reader, "s_q")?;
            if graph.n_right != n {
                return parse_err(
                    reader.line_no,
                    format!(
                        "check graph claims {} codeword bits, header says {n}",
                        graph.n_right
                    ),
                );
            }
            Ok(CodeInstance {
                n,
                graph_seed,
                dither_seed,
                body: InstanceBody::C1(C1Instance {
                    graph,
                    dist,
                    d_s,
                    rate,
                }),
            })
        }
        "C2" => {
            let d_b: usize = field("d_b")?.parse().map_err(|_| Error::Parse {
                line: hline,
                msg: "bad d_b".into(),
            })?;
            let rate_b: f64 = field("rate_b")?.parse().map_err(|_| Error::Parse {
                line: hline,
                msg: "bad rate_b".into(),
            })?;
            let rate_p: f64 = field("rate_p")?.parse().map_err(|_| Error::Parse {
                line: hline,
                msg: "bad rate_p".into(),
            })?;
            let (l1, s1) = reader.expect_line("the v_cd ensemble")?;
            let v_cd = parse_dist(l1, &s1, "v_cd")?;
            let (l2, s2) = reader.expect_line("the v_bd ensemble")?;
            let v_bd = parse_dist(l2, &s2, "v_bd")?;
            let (l3, s3) = reader.expect_line("the v_pd ensemble")?;
            let v_pd = parse_dist(l3, &s3, "v_pd")?;
            let ldgm = parse_graph(&mut reader, "b_c")?;
            let syndrome = parse_graph(&mut reader, "b_p")?;
            if ldgm.n_right != 2 * n {
                return parse_err(
                    reader.line_no,
                    format!(
                        "quantizer graph has {} c bits, expected {}",
                        ldgm.n_right,
                        2 * n
                    ),
                );
            }
            if ldgm.n_left != syndrome.n_left {
                return parse_err(reader.line_no, "the two graphs disagree on the b-node count");
            }
            Ok(CodeInstance {
                n,
                graph_seed,
                dither_seed,
                body: InstanceBody::C2(C2Instance {
                    ldgm,
                    syndrome,
                    v_cd,
                    v_bd,
                    v_pd,
                    d_b,
                    rate_b,
                    rate_p,
                }),
            })
        }
        other => parse_err(hline, format!("unknown instance kind {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(pairs: &[(usize, f64)]) -> EdgeDegreeDistribution {
        EdgeDegreeDistribution::from_pairs(pairs).unwrap()
    }

    #[test]
    fn regular_toy_graph() {
        let g = sample_bipartite(4, &dist(&[(2, 1.0)]), &RightSide::Regular(2), 7).unwrap();
        assert_eq!(g.n_left, 4);
        assert_eq!(g.n_right, 4);
        assert_eq!(g.edge_count(), 8);
        for l in 0..4 {
            assert_eq!(g.left_degree(l), 2);
        }
        let t = g.transpose();
        assert!(t.iter().all(|row| row.len() == 2));
    }

    #[test]
    fn socket_counts_balance() {
        let d = dist(&[(2, 0.5), (3, 0.3), (7, 0.2)]);
        let g = sample_bipartite(500, &d, &RightSide::Regular(5), 11).unwrap();
        let left_sum: usize = (0..g.n_left).map(|l| g.left_degree(l)).sum();
        let right_sum: usize = g.transpose().iter().map(|r| r.len()).sum();
        assert_eq!(left_sum, g.edge_count());
        assert_eq!(right_sum, g.edge_count());
        assert_eq!(g.edge_count() % 5, 0);
    }

    #[test]
    fn no_duplicate_edges() {
        let d = dist(&[(2, 0.6), (8, 0.4)]);
        let g = sample_bipartite(300, &d, &RightSide::Regular(4), 3).unwrap();
        for l in 0..g.n_left {
            let row = g.neighbors(l);
            for w in row.windows(2) {
                assert!(w[1] > w[0]);
            }
        }
    }

    #[test]
    fn determinism_in_seed() {
        let d = dist(&[(2, 0.5), (4, 0.5)]);
        let a = sample_bipartite(200, &d, &RightSide::Regular(3), 42).unwrap();
        let b = sample_bipartite(200, &d, &RightSide::Regular(3), 42).unwrap();
        assert_eq!(a, b);
        let c = sample_bipartite(200, &d, &RightSide::Regular(3), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn edge_fractions_track_target() {
        let d = dist(&[(2, 0.4), (3, 0.35), (10, 0.25)]);
        let g = sample_bipartite(5000, &d, &RightSide::Regular(6), 5).unwrap();
        let measured = g.left_edge_fractions();
        let l1: f64 = measured
            .iter()
            .map(|&(deg, frac)| (frac - d.fraction(deg)).abs())
            .sum();
        assert!(
            l1 <= 10.0 / g.edge_count() as f64,
            "L1 error {l1} too large for {} edges",
            g.edge_count()
        );
    }

    #[test]
    fn degree_histogram_matches_largest_remainder() {
        let d = dist(&[(2, 0.45), (5, 0.3), (9, 0.25)]);
        let counts = node_degree_counts(1000, &d);
        let total: usize = counts.iter().map(|&(_, c)| c).sum();
        assert_eq!(total, 1000);
        for &(deg, count) in &counts {
            let f = d
                .node_fractions()
                .iter()
                .find(|&&(dd, _)| dd == deg)
                .unwrap()
                .1;
            assert!((count as f64 - f * 1000.0).abs() <= 1.0, "degree {deg}");
        }
    }

    #[test]
    fn budget_repair_hits_target() {
        let d = dist(&[(2, 0.5), (3, 0.5)]);
        let mut counts = node_degree_counts(100, &d);
        let base: usize = counts.iter().map(|&(d, c)| d * c).sum();
        repair_edge_budget(&mut counts, base + 7).unwrap();
        let fixed: usize = counts.iter().map(|&(d, c)| d * c).sum();
        assert_eq!(fixed, base + 7);
        let nodes: usize = counts.iter().map(|&(_, c)| c).sum();
        assert_eq!(nodes, 100);
    }

    #[test]
    fn budget_repair_rejects_impossible() {
        let mut counts = vec![(2usize, 10usize)];
        assert!(repair_edge_budget(&mut counts, 5).is_err());
    }

    #[test]
    fn c1_instance_rate_and_regular_checks() {
        let d = dist(&[(2, 0.3), (3, 0.4), (6, 0.3)]);
        let inv: f64 = d.inv_degree_mean();
        let rate = 1.0 - (1.0 / 5.0) / inv;
        let inst = instantiate_c1(&d, 5, rate, 2000, 9).unwrap();
        let c1 = inst.as_c1().unwrap();
        let k = c1.graph.n_left;
        assert!((k as f64 - 2000.0 * (1.0 - rate)).abs() <= 1.0 + 5.0 / 2.0);
        for check in 0..k {
            assert_eq!(c1.graph.left_degree(check), 5);
        }
        // determinism
        let again = instantiate_c1(&d, 5, rate, 2000, 9).unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn c2_instance_shapes() {
        let v_cd = dist(&[(2, 0.6), (3, 0.2), (6, 0.2)]);
        let v_bd = dist(&[(2, 1.0)]);
        let v_pd = dist(&[(1, 0.02), (2, 0.68), (6, 0.3)]);
        let n = 1500;
        let inst = instantiate_c2(&v_cd, 6, &v_bd, &v_pd, 1.51, 1.28, n, 77, 88).unwrap();
        let c2 = inst.as_c2().unwrap();
        assert_eq!(c2.ldgm.n_right, 2 * n);
        assert_eq!(c2.ldgm.n_left, c2.syndrome.n_left);
        assert!((inst.m() as f64 / n as f64 - 1.51).abs() <= 2.0 / n as f64 + 1e-12);
        assert!((inst.t() as f64 / n as f64 - 1.28).abs() <= 2.0 / n as f64 + 1e-12);
        // b-nodes regular on the quantizer graph
        for b in 0..c2.ldgm.n_left {
            assert_eq!(c2.ldgm.left_degree(b), 6);
        }
        // the two mapped bits of every symbol share their degree
        let t = c2.ldgm.transpose();
        for i in 0..n {
            assert_eq!(t[2 * i].len(), t[2 * i + 1].len(), "symbol {i}");
        }
    }

    #[test]
    fn save_load_round_trip() {
        let v_cd = dist(&[(2, 0.7), (5, 0.3)]);
        let v_bd = dist(&[(2, 0.8), (3, 0.2)]);
        let v_pd = dist(&[(1, 0.05), (2, 0.95)]);
        let inst = instantiate_c2(&v_cd, 4, &v_bd, &v_pd, 1.5, 1.3, 200, 5, 6).unwrap();
        let mut buf = Vec::new();
        save_instance(&inst, &mut buf).unwrap();
        let loaded = load_instance(&mut &buf[..]).unwrap();
        assert_eq!(inst, loaded);

        let d = dist(&[(3, 1.0)]);
        let c1 = instantiate_c1(&d, 6, 1.0 - (1.0 / 6.0) / d.inv_degree_mean(), 120, 3).unwrap();
        let mut buf = Vec::new();
        save_instance(&c1, &mut buf).unwrap();
        let loaded = load_instance(&mut &buf[..]).unwrap();
        assert_eq!(c1, loaded);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let d = dist(&[(3, 1.0)]);
        let rate = 1.0 - (1.0 / 6.0) / d.inv_degree_mean();
        let c1 = instantiate_c1(&d, 6, rate, 120, 3).unwrap();
        let mut buf = Vec::new();
        save_instance(&c1, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut = text.len() / 2;
        let result = load_instance(&mut text[..cut].as_bytes());
        assert!(matches!(result, Err(Error::Parse { .. })), "{result:?}");
    }

    #[test]
    fn version_mismatch_is_reported() {
        let text =
            "cfrelay-instance v9\nkind C1 n 3 m 1 t 0 graph_seed 0 dither_seed 0 d_s 3 rate 0.5\n";
        let result = load_instance(&mut text.as_bytes());
        assert!(matches!(result, Err(Error::VersionMismatch { .. })));
    }

    #[test]
    fn minimal_hand_written_file() {
        // the documented five-line example: one degree-3 check over three bits
        let text = "cfrelay-instance v1\n\
                    kind C1 n 3 m 1 t 0 graph_seed 0 dither_seed 0 d_s 3 rate 0.6666666666666666\n\
                    ensemble v_qd 1 : 3 1\n\
                    graph s_q 1 3\n\
                    0 1 2\n";
        let inst = load_instance(&mut text.as_bytes()).unwrap();
        let c1 = inst.as_c1().unwrap();
        assert_eq!(inst.n, 3);
        assert_eq!(c1.graph.n_left, 1);
        assert_eq!(c1.graph.neighbors(0), &[0, 1, 2]);
    }

    #[test]
    fn comments_are_ignored() {
        let text = "# provenance: test\ncfrelay-instance v1\n\
                    kind C1 n 3 m 1 t 0 graph_seed 0 dither_seed 0 d_s 3 rate 0.5\n\
                    ensemble v_qd 1 : 3 1\n\
                    graph s_q 1 3\n\
                    0 1 2\n";
        assert!(load_instance(&mut text.as_bytes()).is_ok());
    }
}
