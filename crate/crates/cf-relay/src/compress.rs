//! Relay-side compression of the ternary observation and destination-side
//! joint reconstruction.
//!
//! The relay maps each received symbol to two constrained bits (an intact
//! bit pins both, an erasure pins only the first and leaves the second free),
//! dithers them, quantizes the constraint pattern onto the short sequence b
//! through the quantizer graph, and ships the syndrome of b plus the list of
//! positions where decimation painted itself into a corner and the constraint
//! had to be flipped.
//!
//! The destination reruns the same graph as an erasure-style message passing
//! problem: syndrome checks pin b-bits, the graph relates b to the mapped
//! bits, and each destination-side symbol restricts its bit pair to the set
//! compatible with what the destination saw. Messages are hard values
//! (known / unknown) with set intersection at the observation nodes, which
//! is exact for erasure-type uncertainty. Contradictions are never repaired
//! silently: a corrupted payload surfaces as an integrity error.

use crate::channel::TernarySymbol;
use crate::error::{Error, Result};
use crate::graph::{C2Instance, CodeInstance};
use crate::rng::Rng;

/// Constraint on one mapped bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitConstraint {
    ForcedZero,
    ForcedOne,
    DontCare,
}

impl BitConstraint {
    fn forced(bit: bool) -> Self {
        if bit {
            BitConstraint::ForcedOne
        } else {
            BitConstraint::ForcedZero
        }
    }

    pub fn value(self) -> Option<bool> {
        match self {
            BitConstraint::ForcedZero => Some(false),
            BitConstraint::ForcedOne => Some(true),
            BitConstraint::DontCare => None,
        }
    }
}

/// The shared pseudo-random dither, reproducible from its seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DitherSequence {
    pub bits: Vec<bool>,
    pub seed: u64,
}

impl DitherSequence {
    pub fn generate(seed: u64, len: usize) -> Self {
        let mut rng = Rng::from_seed(crate::rng::derive_seed(seed, "dither", 0));
        DitherSequence {
            bits: (0..len).map(|_| rng.gen_bool(0.5)).collect(),
            seed,
        }
    }
}

/// Everything the relay sends: the syndrome bits and the flipped positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedPayload {
    /// Syndrome of b, length t.
    pub p: Vec<bool>,
    /// Sorted mapped-bit indices whose constraint the quantizer violated.
    pub zeta: Vec<u32>,
    pub n: usize,
    pub m: usize,
    pub t: usize,
    /// Seed identifying the shared dither.
    pub dither_seed: u64,
}

/// Maps the relay observation into per-bit constraints: an intact 0 fixes
/// the dithered pair to (0,0), an intact 1 to (0,1), and an erasure fixes
/// the first bit to 1 and leaves the second free. The forcing is then
/// translated through the dither by XOR.
pub fn map_constraints(y_r: &[TernarySymbol], v: &DitherSequence) -> Vec<BitConstraint> {
    assert_eq!(
        v.bits.len(),
        2 * y_r.len(),
        "dither length must be twice the symbol count"
    );
    let mut out = Vec::with_capacity(2 * y_r.len());
    for (i, &sym) in y_r.iter().enumerate() {
        let (v0, v1) = (v.bits[2 * i], v.bits[2 * i + 1]);
        match sym {
            TernarySymbol::Zero => {
                out.push(BitConstraint::forced(v0));
                out.push(BitConstraint::forced(v1));
            }
            TernarySymbol::One => {
                out.push(BitConstraint::forced(v0));
                out.push(BitConstraint::forced(!v1));
            }
            TernarySymbol::Erased => {
                out.push(BitConstraint::forced(!v0));
                out.push(BitConstraint::DontCare);
            }
        }
    }
    out
}

/// Quantizer statistics.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuantizeStats {
    /// Number of decimation events (stalls resolved by fixing a b-bit).
    pub decimations: usize,
    /// Number of flipped constraints, |zeta|.
    pub flips: usize,
}

/// Finds b such that the graph image of b meets every forced constraint
/// except the returned flip set. Propagation resolves b-bits implied by
/// constraints with a single unknown; on stalls the undetermined b-bit with
/// the most forced constraint neighbors is fixed to the majority vote of
/// their residual parities (ties to zero, lowest index first); forced
/// constraints that complete violated are flipped and recorded. Always
/// terminates with every b fixed.
pub fn quantize(
    inst: &CodeInstance,
    constraints: &[BitConstraint],
) -> Result<(Vec<bool>, Vec<u32>, QuantizeStats)> {
    let c2 = inst.as_c2()?;
    let g = &c2.ldgm;
    let m = g.n_left;
    let n_c = g.n_right;
    if constraints.len() != n_c {
        return Err(Error::Domain(format!(
            "constraint count {} does not match the mapped bits {n_c}",
            constraints.len()
        )));
    }
    let by_c = g.transpose();

    let mut b_val: Vec<Option<bool>> = vec![None; m];
    // per forced constraint: remaining unknown b-neighbors and the parity
    // still to be produced by them
    let mut unknown: Vec<u32> = vec![0; n_c];
    let mut acc: Vec<bool> = vec![false; n_c];
    let mut active: Vec<bool> = vec![false; n_c];
    for j in 0..n_c {
        if let Some(target) = constraints[j].value() {
            active[j] = true;
            unknown[j] = by_c[j].len() as u32;
            acc[j] = target;
        }
    }

    // static decimation scores: forced constraint neighbors per b-bit
    let max_score = (0..m).map(|b| g.left_degree(b)).max().unwrap_or(0);
    let mut buckets: Vec<std::collections::BTreeSet<u32>> =
        vec![Default::default(); max_score + 1];
    for b in 0..m {
        let score = g
            .neighbors(b)
            .iter()
            .filter(|&&c| active[c as usize])
            .count();
        buckets[score].insert(b as u32);
    }

    let mut zeta: Vec<u32> = Vec::new();
    let mut stats = QuantizeStats::default();
    let mut queue: Vec<u32> = (0..n_c as u32)
        .filter(|&j| active[j as usize] && unknown[j as usize] == 1)
        .collect();
    let mut fixed = 0usize;

    let assign = |b: usize,
                      value: bool,
                      b_val: &mut Vec<Option<bool>>,
                      unknown: &mut Vec<u32>,
                      acc: &mut Vec<bool>,
                      queue: &mut Vec<u32>,
                      zeta: &mut Vec<u32>| {
        debug_assert!(b_val[b].is_none());
        b_val[b] = Some(value);
        for &c in g.neighbors(b) {
            let j = c as usize;
            if !active[j] {
                continue;
            }
            unknown[j] -= 1;
            if value {
                acc[j] = !acc[j];
            }
            match unknown[j] {
                1 => queue.push(c),
                0 => {
                    if acc[j] {
                        // the completed constraint came out wrong: flip it
                        zeta.push(c);
                    }
                }
                _ => {}
            }
        }
    };

    while fixed < m {
        if let Some(j) = queue.pop() {
            let j = j as usize;
            if unknown[j] != 1 {
                continue;
            }
            let b = *by_c[j]
                .iter()
                .find(|&&b| b_val[b as usize].is_none())
                .expect("one unknown neighbor") as usize;
            let value = acc[j];
            assign(
                b, value, &mut b_val, &mut unknown, &mut acc, &mut queue, &mut zeta,
            );
            fixed += 1;
            continue;
        }
        // stall: decimate the most constrained undetermined b-bit
        stats.decimations += 1;
        let mut chosen: Option<usize> = None;
        'outer: for bucket in buckets.iter_mut().rev() {
            while let Some(&b) = bucket.iter().next() {
                bucket.remove(&b);
                if b_val[b as usize].is_none() {
                    chosen = Some(b as usize);
                    break 'outer;
                }
            }
        }
        let b = chosen.expect("an undetermined b-bit exists");
        // majority vote over the residual parities of its forced neighbors,
        // treating other unknowns as zero; ties go to zero
        let mut ones = 0usize;
        let mut votes = 0usize;
        for &c in g.neighbors(b) {
            let j = c as usize;
            if active[j] && unknown[j] >= 1 {
                votes += 1;
                if acc[j] {
                    ones += 1;
                }
            }
        }
        let value = 2 * ones > votes;
        assign(
            b, value, &mut b_val, &mut unknown, &mut acc, &mut queue, &mut zeta,
        );
        fixed += 1;
    }

    let mut zeta: Vec<u32> = zeta;
    zeta.sort_unstable();
    stats.flips = zeta.len();
    let b: Vec<bool> = b_val.into_iter().map(|v| v.unwrap()).collect();
    debug_assert!(verify_quantization(inst, constraints, &b, &zeta).unwrap_or(false));
    Ok((b, zeta, stats))
}

/// The quantizer's contract, checked independently: the graph image of `b`
/// meets every forced constraint not in `zeta` and misses every one in it.
pub fn verify_quantization(
    inst: &CodeInstance,
    constraints: &[BitConstraint],
    b: &[bool],
    zeta: &[u32],
) -> Result<bool> {
    let c = ldgm_image(inst, b)?;
    let mut zi = 0usize;
    for (j, constraint) in constraints.iter().enumerate() {
        let flipped = if zi < zeta.len() && zeta[zi] as usize == j {
            zi += 1;
            true
        } else {
            false
        };
        match constraint.value() {
            Some(target) => {
                let ok = if flipped {
                    c[j] != target
                } else {
                    c[j] == target
                };
                if !ok {
                    return Ok(false);
                }
            }
            None => {
                if flipped {
                    return Ok(false); // flips only make sense on forced bits
                }
            }
        }
    }
    Ok(zi == zeta.len())
}

/// c = bG: XOR of the b-neighbors of every mapped bit.
pub fn ldgm_image(inst: &CodeInstance, b: &[bool]) -> Result<Vec<bool>> {
    let c2 = inst.as_c2()?;
    if b.len() != c2.ldgm.n_left {
        return Err(Error::Domain(format!(
            "b length {} does not match the instance ({})",
            b.len(),
            c2.ldgm.n_left
        )));
    }
    let mut c = vec![false; c2.ldgm.n_right];
    for (bi, &bit) in b.iter().enumerate() {
        if bit {
            for &cj in c2.ldgm.neighbors(bi) {
                c[cj as usize] = !c[cj as usize];
            }
        }
    }
    Ok(c)
}

/// Syndrome of b on the syndrome graph: one parity per check node.
pub fn compute_syndrome(inst: &CodeInstance, b: &[bool]) -> Result<Vec<bool>> {
    let c2 = inst.as_c2()?;
    if b.len() != c2.syndrome.n_left {
        return Err(Error::Domain(format!(
            "b length {} does not match the instance ({})",
            b.len(),
            c2.syndrome.n_left
        )));
    }
    let mut p = vec![false; c2.syndrome.n_right];
    for (bi, &bit) in b.iter().enumerate() {
        if bit {
            for &pk in c2.syndrome.neighbors(bi) {
                p[pk as usize] = !p[pk as usize];
            }
        }
    }
    Ok(p)
}

/// Runs the relay side end to end: map, quantize, syndrome, payload.
pub fn compress(
    inst: &CodeInstance,
    y_r: &[TernarySymbol],
    dither_seed: u64,
) -> Result<(CompressedPayload, QuantizeStats)> {
    let c2 = inst.as_c2()?;
    let v = DitherSequence::generate(dither_seed, 2 * inst.n);
    let constraints = map_constraints(y_r, &v);
    let (b, zeta, stats) = quantize(inst, &constraints)?;
    let p = compute_syndrome(inst, &b)?;
    Ok((
        CompressedPayload {
            p,
            zeta,
            n: inst.n,
            m: c2.ldgm.n_left,
            t: c2.syndrome.n_right,
            dither_seed,
        },
        stats,
    ))
}

/// Reconstruction outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReconstructOutcome {
    Recovered(Vec<TernarySymbol>),
    /// Message passing reached a fixpoint with this many b-bits unresolved.
    Failed { residual_b: usize },
}

/// Reconstruction statistics.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReconstructStats {
    /// Message-passing iterations spent in total.
    pub rounds: usize,
    /// Decoder-side decimations needed after message passing stalled.
    pub decimations: usize,
}

/// Joint reconstruction of the relay observation at the destination from the
/// payload, the destination's own observation and the shared dither.
///
/// This is sum-product belief propagation over the joint factor graph: the
/// syndrome checks are parity factors with known targets, the quantizer
/// graph ties each mapped bit to the XOR of its b-neighbors, and each
/// destination symbol contributes a pair factor ruling out the one dithered
/// pair its observation excludes (an erased observation says nothing). When
/// the beliefs stagnate short of a consistent assignment, the most confident
/// undecided b-bit is decimated and propagation resumes. The decision is
/// accepted only if the hard assignment reproduces the syndrome exactly and
/// every pair lands in its allowed set, so a reported success is an exact
/// reconstruction of a consistent relay word, never a guess.
pub fn reconstruct_yr(
    inst: &CodeInstance,
    payload: &CompressedPayload,
    y_d: &[TernarySymbol],
    v: &DitherSequence,
) -> Result<(ReconstructOutcome, ReconstructStats)> {
    const MAX_ITERS: usize = 1600;
    const STALL_WINDOW: usize = 48;
    const DECIMATION_BUDGET: usize = 128;
    const LLR_CAP: f64 = 30.0;
    /// Damping on the variable-to-factor messages; loopy oscillations die
    /// out with a little inertia.
    const DAMPING: f64 = 0.4;

    let c2 = inst.as_c2()?;
    let n = inst.n;
    let m = c2.ldgm.n_left;
    let n_c = c2.ldgm.n_right;
    let t = c2.syndrome.n_right;
    if payload.n != n || payload.m != m || payload.t != t || payload.p.len() != t {
        return Err(Error::Domain(
            "payload dimensions do not match the instance".into(),
        ));
    }
    if y_d.len() != n {
        return Err(Error::Domain(format!(
            "side information length {} does not match block length {n}",
            y_d.len()
        )));
    }
    if v.bits.len() != n_c {
        return Err(Error::Domain("dither length mismatch".into()));
    }
    for w in payload.zeta.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Domain("flip list must be strictly ascending".into()));
        }
    }
    if payload.zeta.last().is_some_and(|&z| z as usize >= n_c) {
        return Err(Error::Domain("flip index out of range".into()));
    }
    let mut flip = vec![false; n_c];
    for &z in &payload.zeta {
        flip[z as usize] = true;
    }

    // flat edge indexing for the two graphs, LLR convention
    // L = ln P(bit = 0) / P(bit = 1) in the raw (undithered) bit domain
    let g_graph = &c2.ldgm;
    let p_graph = &c2.syndrome;
    let mut g_edge_of: Vec<u32> = Vec::with_capacity(g_graph.edge_count());
    let mut g_start = vec![0u32; m + 1];
    for b in 0..m {
        g_start[b + 1] = g_start[b] + g_graph.left_degree(b) as u32;
        for &c in g_graph.neighbors(b) {
            g_edge_of.push(c);
        }
    }
    let mut p_start = vec![0u32; m + 1];
    let mut p_edge_of: Vec<u32> = Vec::with_capacity(p_graph.edge_count());
    for b in 0..m {
        p_start[b + 1] = p_start[b] + p_graph.left_degree(b) as u32;
        for &pk in p_graph.neighbors(b) {
            p_edge_of.push(pk);
        }
    }
    // incident edge lists from the factor sides
    let mut c_edges: Vec<Vec<u32>> = vec![Vec::new(); n_c];
    for b in 0..m {
        for e in g_start[b]..g_start[b + 1] {
            c_edges[g_edge_of[e as usize] as usize].push(e);
        }
    }
    let mut p_edges: Vec<Vec<u32>> = vec![Vec::new(); t];
    for b in 0..m {
        for e in p_start[b]..p_start[b + 1] {
            p_edges[p_edge_of[e as usize] as usize].push(e);
        }
    }

    let ne_g = g_edge_of.len();
    let ne_p = p_edge_of.len();
    let mut m_bg = vec![0.0_f64; ne_g]; // b -> graph factor of c
    let mut m_gb = vec![0.0_f64; ne_g]; // graph factor of c -> b
    let mut m_bp = vec![0.0_f64; ne_p];
    let mut m_pb = vec![0.0_f64; ne_p];
    // pair-factor message into each mapped bit's graph factor (c domain)
    let mut m_pair = vec![0.0_f64; n_c];
    let mut m_to_pair = vec![0.0_f64; n_c]; // graph side -> pair factor

    let clamp = |x: f64| x.clamp(-LLR_CAP, LLR_CAP);
    let safe_atanh = |p: f64| -> f64 {
        let p = p.clamp(-(1.0 - 1e-15), 1.0 - 1e-15);
        clamp(2.0 * p.atanh())
    };
    let mut scratch_t: Vec<f64> = Vec::new();
    let mut scratch_suffix: Vec<f64> = Vec::new();

    let mut stats = ReconstructStats::default();
    let mut b_hat = vec![false; m];
    let mut b_total = vec![0.0_f64; m];
    let mut pinned = vec![0.0_f64; m];
    let mut verified = false;
    let mut best_violations = usize::MAX;
    let mut since_improvement = 0usize;

    for _iter in 0..MAX_ITERS {
        stats.rounds += 1;

        // graph factors -> pair side (full combine of b messages per c bit)
        for j in 0..n_c {
            let mut prod = 1.0_f64;
            for &e in &c_edges[j] {
                prod *= (0.5 * m_bg[e as usize]).tanh();
            }
            m_to_pair[j] = safe_atanh(prod);
        }

        // pair factors: for every observed symbol, message to each bit from
        // the sibling's graph-side belief; erased observations say nothing
        for i in 0..n {
            let j0 = 2 * i;
            let j1 = 2 * i + 1;
            match y_d[i].bit() {
                None => {
                    m_pair[j0] = 0.0;
                    m_pair[j1] = 0.0;
                }
                Some(d_bit) => {
                    // move to the dithered pair domain
                    let off0 = v.bits[j0] ^ flip[j0];
                    let off1 = v.bits[j1] ^ flip[j1];
                    let l1 = if off1 { -m_to_pair[j1] } else { m_to_pair[j1] };
                    let l0 = if off0 { -m_to_pair[j0] } else { m_to_pair[j0] };
                    // q(x) = probability the dithered bit equals x
                    let q1_zero = sigmoid(l1);
                    let q0_zero = sigmoid(l0);
                    // table: weight 1 for (0, d), 1/2 for (1, 0) and (1, 1)
                    let q1_d = if d_bit { 1.0 - q1_zero } else { q1_zero };
                    let mu0_zero = q1_d; // (0, d) needs the sibling at d
                    let mu0_one = 0.5;
                    let l_pair0 = clamp((mu0_zero.max(1e-300) / mu0_one).ln());
                    let mu1_d = q0_zero + 0.5 * (1.0 - q0_zero);
                    let mu1_other = 0.5 * (1.0 - q0_zero);
                    let mut l_pair1 = clamp((mu1_d.max(1e-300) / mu1_other.max(1e-300)).ln());
                    if d_bit {
                        // expressed for bit value d; flip into the 0-vs-1 form
                        l_pair1 = -l_pair1;
                    }
                    // back to the raw bit domain
                    m_pair[j0] = if off0 { -l_pair0 } else { l_pair0 };
                    m_pair[j1] = if off1 { -l_pair1 } else { l_pair1 };
                }
            }
        }

        // graph factors -> b: combine the pair prior with the other b legs
        // via prefix/suffix products so each node costs linear work
        for j in 0..n_c {
            let edges = &c_edges[j];
            let k = edges.len();
            scratch_t.clear();
            scratch_t.push((0.5 * m_pair[j]).tanh());
            for &e in edges {
                scratch_t.push((0.5 * m_bg[e as usize]).tanh());
            }
            scratch_suffix.clear();
            scratch_suffix.resize(k + 2, 1.0);
            for idx in (0..=k).rev() {
                scratch_suffix[idx] = scratch_suffix[idx + 1] * scratch_t[idx];
            }
            let mut prefix = scratch_t[0]; // the pair leg always participates
            for (idx, &e) in edges.iter().enumerate() {
                let others = prefix * scratch_suffix[idx + 2];
                m_gb[e as usize] = safe_atanh(others);
                prefix *= scratch_t[idx + 1];
            }
        }

        // syndrome factors -> b, sign set by the target parity
        for pk in 0..t {
            let edges = &p_edges[pk];
            let k = edges.len();
            let sign = if payload.p[pk] { -1.0 } else { 1.0 };
            scratch_t.clear();
            for &e in edges {
                scratch_t.push((0.5 * m_bp[e as usize]).tanh());
            }
            scratch_suffix.clear();
            scratch_suffix.resize(k + 1, 1.0);
            for idx in (0..k).rev() {
                scratch_suffix[idx] = scratch_suffix[idx + 1] * scratch_t[idx];
            }
            let mut prefix = 1.0_f64;
            for (idx, &e) in edges.iter().enumerate() {
                let others = prefix * scratch_suffix[idx + 1];
                m_pb[e as usize] = sign * safe_atanh(others);
                prefix *= scratch_t[idx];
            }
        }

        // b variables: totals (with decimation pins) and damped replies
        for b in 0..m {
            let mut total = pinned[b];
            for e in g_start[b]..g_start[b + 1] {
                total += m_gb[e as usize];
            }
            for e in p_start[b]..p_start[b + 1] {
                total += m_pb[e as usize];
            }
            for e in g_start[b]..g_start[b + 1] {
                let fresh = clamp(total - m_gb[e as usize]);
                m_bg[e as usize] = DAMPING * m_bg[e as usize] + (1.0 - DAMPING) * fresh;
            }
            for e in p_start[b]..p_start[b + 1] {
                let fresh = clamp(total - m_pb[e as usize]);
                m_bp[e as usize] = DAMPING * m_bp[e as usize] + (1.0 - DAMPING) * fresh;
            }
            b_hat[b] = total < 0.0;
            b_total[b] = total;
        }

        let violations = count_violations(c2, payload, y_d, v, &flip, &b_hat);
        if violations == 0 {
            verified = true;
            break;
        }

        // progress watchdog: when the violation count refuses to improve,
        // decimate the most confident unpinned bit and keep going
        if violations < best_violations {
            best_violations = violations;
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if since_improvement >= STALL_WINDOW {
            since_improvement = 0;
            if stats.decimations >= DECIMATION_BUDGET {
                break;
            }
            let mut best: Option<(usize, f64)> = None;
            for b in 0..m {
                if pinned[b] == 0.0 {
                    let conf = b_total[b].abs();
                    if best.map_or(true, |(_, c)| conf > c) {
                        best = Some((b, conf));
                    }
                }
            }
            let Some((bit, _)) = best else { break };
            pinned[bit] = if b_total[bit] < 0.0 { -LLR_CAP } else { LLR_CAP };
            stats.decimations += 1;
        }
    }

    if !verified {
        // undecided bits: beliefs that never left zero
        let residual_b = b_total.iter().filter(|&&t| t == 0.0).count().max(1);
        return Ok((ReconstructOutcome::Failed { residual_b }, stats));
    }

    let c = ldgm_image(inst, &b_hat)?;
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let cp0 = c[2 * i] ^ v.bits[2 * i] ^ flip[2 * i];
        let cp1 = c[2 * i + 1] ^ v.bits[2 * i + 1] ^ flip[2 * i + 1];
        y.push(match (cp0, cp1) {
            (false, false) => TernarySymbol::Zero,
            (false, true) => TernarySymbol::One,
            (true, _) => TernarySymbol::Erased,
        });
    }
    Ok((ReconstructOutcome::Recovered(y), stats))
}

#[inline]
fn sigmoid(llr: f64) -> f64 {
    // probability of the bit being 0 under the LLR convention used here
    1.0 / (1.0 + (-llr).exp())
}

/// Exact consistency measure of a hard assignment: syndrome mismatches plus
/// observed symbols whose dithered pair falls outside its allowed set. Zero
/// means the assignment is a valid reconstruction.
fn count_violations(
    c2: &C2Instance,
    payload: &CompressedPayload,
    y_d: &[TernarySymbol],
    v: &DitherSequence,
    flip: &[bool],
    b_hat: &[bool],
) -> usize {
    let mut bad = 0usize;
    let mut p = vec![false; c2.syndrome.n_right];
    let mut c = vec![false; c2.ldgm.n_right];
    for (b, &bit) in b_hat.iter().enumerate() {
        if bit {
            for &pk in c2.syndrome.neighbors(b) {
                p[pk as usize] = !p[pk as usize];
            }
            for &cj in c2.ldgm.neighbors(b) {
                c[cj as usize] = !c[cj as usize];
            }
        }
    }
    bad += p.iter().zip(&payload.p).filter(|(a, b)| a != b).count();
    for (i, sym) in y_d.iter().enumerate() {
        if let Some(d_bit) = sym.bit() {
            let cp0 = c[2 * i] ^ v.bits[2 * i] ^ flip[2 * i];
            let cp1 = c[2 * i + 1] ^ v.bits[2 * i + 1] ^ flip[2 * i + 1];
            if !cp0 && cp1 != d_bit {
                bad += 1; // the excluded pair (0, 1 - d)
            }
        }
    }
    bad
}


const PAYLOAD_MAGIC: &[u8; 4] = b"CFRP";
const PAYLOAD_VERSION: u16 = 1;

impl CompressedPayload {
    /// Serializes the payload: magic, version, little-endian lengths
    /// (n, m, t, |zeta|, dither seed), syndrome bits packed LSB-first, then
    /// the sorted flip indices as little-endian u32.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 2 + 40 + self.p.len() / 8 + 4 * self.zeta.len());
        out.extend_from_slice(PAYLOAD_MAGIC);
        out.extend_from_slice(&PAYLOAD_VERSION.to_le_bytes());
        for v in [
            self.n as u64,
            self.m as u64,
            self.t as u64,
            self.zeta.len() as u64,
            self.dither_seed,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let mut byte = 0u8;
        for (i, &bit) in self.p.iter().enumerate() {
            if bit {
                byte |= 1 << (i & 7);
            }
            if i & 7 == 7 {
                out.push(byte);
                byte = 0;
            }
        }
        if self.p.len() % 8 != 0 {
            out.push(byte);
        }
        for &z in &self.zeta {
            out.extend_from_slice(&z.to_le_bytes());
        }
        out
    }

    /// Parses bytes written by [`CompressedPayload::to_bytes`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fail = |msg: &str| Error::Parse {
            line: 0,
            msg: msg.into(),
        };
        if bytes.len() < 4 + 2 + 40 {
            return Err(fail("payload too short for its header"));
        }
        if &bytes[..4] != PAYLOAD_MAGIC {
            return Err(fail("bad payload magic"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != PAYLOAD_VERSION {
            return Err(Error::VersionMismatch {
                found: format!("payload v{version}"),
                expected: format!("payload v{PAYLOAD_VERSION}"),
            });
        }
        let u64_at = |off: usize| -> u64 {
            let mut a = [0u8; 8];
            a.copy_from_slice(&bytes[off..off + 8]);
            u64::from_le_bytes(a)
        };
        let n = u64_at(6) as usize;
        let m = u64_at(14) as usize;
        let t = u64_at(22) as usize;
        let zeta_len = u64_at(30) as usize;
        let dither_seed = u64_at(38);
        let p_bytes = t.div_ceil(8);
        let need = 46 + p_bytes + 4 * zeta_len;
        if bytes.len() != need {
            return Err(fail(&format!(
                "payload length {} does not match header (need {need})",
                bytes.len()
            )));
        }
        let mut p = Vec::with_capacity(t);
        for i in 0..t {
            p.push(bytes[46 + (i >> 3)] >> (i & 7) & 1 == 1);
        }
        let mut zeta = Vec::with_capacity(zeta_len);
        let base = 46 + p_bytes;
        for i in 0..zeta_len {
            let mut a = [0u8; 4];
            a.copy_from_slice(&bytes[base + 4 * i..base + 4 * i + 4]);
            zeta.push(u32::from_le_bytes(a));
        }
        for w in zeta.windows(2) {
            if w[1] <= w[0] {
                return Err(fail("flip indices must ascend strictly"));
            }
        }
        if zeta.last().is_some_and(|&z| z as usize >= 2 * n) {
            return Err(fail("flip index out of range"));
        }
        Ok(CompressedPayload {
            p,
            zeta,
            n,
            m,
            t,
            dither_seed,
        })
    }
}

/// Test helper shared with the integration suites: a deterministic small C2
/// instance built from fixed distributions.
pub fn toy_c2_instance(n: usize, seed: u64) -> Result<CodeInstance> {
    let v_cd = crate::dist::EdgeDegreeDistribution::from_pairs(&[(2, 0.6), (3, 0.25), (6, 0.15)])?;
    let v_bd = crate::dist::EdgeDegreeDistribution::from_pairs(&[(2, 1.0)])?;
    let v_pd = crate::dist::EdgeDegreeDistribution::from_pairs(&[(1, 0.03), (2, 0.77), (8, 0.2)])?;
    crate::graph::instantiate_c2(&v_cd, 4, &v_bd, &v_pd, 1.6, 1.4, n, seed, seed ^ 1)
}

fn _c2_field_check(c2: &C2Instance) -> usize {
    c2.d_b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::{self, BitMatrix};
    use crate::graph::load_instance;

    #[test]
    fn mapping_examples() {
        let v = DitherSequence {
            bits: vec![false, false],
            seed: 0,
        };
        assert_eq!(
            map_constraints(&[TernarySymbol::Zero], &v),
            vec![BitConstraint::ForcedZero, BitConstraint::ForcedZero]
        );
        assert_eq!(
            map_constraints(&[TernarySymbol::Erased], &v),
            vec![BitConstraint::ForcedOne, BitConstraint::DontCare]
        );
        let v = DitherSequence {
            bits: vec![true, false],
            seed: 0,
        };
        assert_eq!(
            map_constraints(&[TernarySymbol::One], &v),
            vec![BitConstraint::ForcedOne, BitConstraint::ForcedOne]
        );
    }

    #[test]
    fn quantize_all_dont_care_defaults_to_zero() {
        let inst = toy_c2_instance(40, 3).unwrap();
        let constraints = vec![BitConstraint::DontCare; 80];
        let (b, zeta, _) = quantize(&inst, &constraints).unwrap();
        assert!(zeta.is_empty());
        assert!(b.iter().all(|&x| !x));
    }

    #[test]
    fn quantize_satisfiable_toy_matches_elimination() {
        // a hand-written 3-symbol instance: 4 b-bits, 6 mapped bits
        let text = "cfrelay-instance v1\n\
                    kind C2 n 3 m 4 t 2 graph_seed 0 dither_seed 0 d_b 3 rate_b 1.34 rate_p 0.67\n\
                    ensemble v_cd 1 : 2 1\n\
                    ensemble v_bd 1 : 2 1\n\
                    ensemble v_pd 1 : 4 1\n\
                    graph b_c 4 6\n\
                    0 1 2\n\
                    1 3 4\n\
                    2 3 5\n\
                    4 5\n\
                    graph b_p 4 2\n\
                    0 1\n\
                    0 1\n\
                    0 1\n\
                    0 1\n";
        let inst = load_instance(&mut text.as_bytes()).unwrap();
        // choose a ground-truth b and force the full image
        let b_true = vec![true, false, true, true];
        let image = ldgm_image(&inst, &b_true).unwrap();
        let constraints: Vec<BitConstraint> =
            image.iter().map(|&x| BitConstraint::forced(x)).collect();
        let (b, zeta, _) = quantize(&inst, &constraints).unwrap();
        assert!(zeta.is_empty());
        // elimination oracle: the full image determines b uniquely here
        let mut a = BitMatrix::zero(6, 4);
        let by_c = inst.as_c2().unwrap().ldgm.transpose();
        for (j, row) in by_c.iter().enumerate() {
            for &bb in row {
                a.set(j, bb as usize, true);
            }
        }
        match gf2::solve(&a, &image) {
            gf2::SolveOutcome::Unique(x) => {
                assert_eq!(b, x);
                assert_eq!(b, b_true);
            }
            other => panic!("expected a unique solution, got {other:?}"),
        }
    }

    #[test]
    fn quantizer_verifier_closure_on_random_instances() {
        let mut rng = crate::rng::Rng::from_seed(71);
        for trial in 0..50 {
            let n = 30 + rng.gen_range(40);
            let inst = toy_c2_instance(n, 1000 + trial).unwrap();
            let y_r: Vec<TernarySymbol> = (0..n)
                .map(|_| match rng.gen_range(4) {
                    0 => TernarySymbol::Erased,
                    1 => TernarySymbol::One,
                    _ => TernarySymbol::Zero,
                })
                .collect();
            let v = DitherSequence::generate(trial, 2 * n);
            let constraints = map_constraints(&y_r, &v);
            let (b, zeta, _) = quantize(&inst, &constraints).unwrap();
            assert!(
                verify_quantization(&inst, &constraints, &b, &zeta).unwrap(),
                "trial {trial}"
            );
        }
    }

    #[test]
    fn syndrome_examples_and_dense_oracle() {
        let inst = toy_c2_instance(50, 9).unwrap();
        let c2 = inst.as_c2().unwrap();
        let m = c2.ldgm.n_left;
        // all-zero b gives the all-zero syndrome
        let p = compute_syndrome(&inst, &vec![false; m]).unwrap();
        assert!(p.iter().all(|&x| !x));
        // random b against a dense matrix-vector product
        let mut rng = crate::rng::Rng::from_seed(12);
        let b: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.5)).collect();
        let p = compute_syndrome(&inst, &b).unwrap();
        let by_p = c2.syndrome.transpose();
        for (k, row) in by_p.iter().enumerate() {
            let want = row.iter().fold(false, |acc, &bb| acc ^ b[bb as usize]);
            assert_eq!(p[k], want, "check {k}");
        }
        assert!(compute_syndrome(&inst, &vec![false; m + 1]).is_err());
    }

    #[test]
    fn single_check_xor() {
        let text = "cfrelay-instance v1\n\
                    kind C2 n 1 m 2 t 1 graph_seed 0 dither_seed 0 d_b 1 rate_b 2 rate_p 1\n\
                    ensemble v_cd 1 : 1 1\n\
                    ensemble v_bd 1 : 1 1\n\
                    ensemble v_pd 1 : 2 1\n\
                    graph b_c 2 2\n\
                    0\n\
                    1\n\
                    graph b_p 2 1\n\
                    0\n\
                    0\n";
        let inst = load_instance(&mut text.as_bytes()).unwrap();
        let p = compute_syndrome(&inst, &[true, true]).unwrap();
        assert_eq!(p, vec![false]);
        let p = compute_syndrome(&inst, &[true, false]).unwrap();
        assert_eq!(p, vec![true]);
    }

    #[test]
    fn payload_round_trip_and_truncation() {
        let payload = CompressedPayload {
            p: (0..19).map(|i| i % 3 == 0).collect(),
            zeta: vec![2, 7, 40],
            n: 25,
            m: 37,
            t: 19,
            dither_seed: 777,
        };
        let bytes = payload.to_bytes();
        let back = CompressedPayload::from_bytes(&bytes).unwrap();
        assert_eq!(payload, back);
        assert!(CompressedPayload::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(CompressedPayload::from_bytes(&bad).is_err());
    }

    /// Toy with enough syndrome rate that plain check peeling resolves
    /// every b-bit; exercises the full mechanics without a designed code.
    fn dense_toy_c2(n: usize, seed: u64) -> crate::graph::CodeInstance {
        let v_cd =
            crate::dist::EdgeDegreeDistribution::from_pairs(&[(2, 0.6), (3, 0.25), (6, 0.15)])
                .unwrap();
        let v_bd =
            crate::dist::EdgeDegreeDistribution::from_pairs(&[(2, 0.5), (3, 0.5)]).unwrap();
        let v_pd =
            crate::dist::EdgeDegreeDistribution::from_pairs(&[(1, 0.1), (2, 0.6), (3, 0.3)])
                .unwrap();
        crate::graph::instantiate_c2(&v_cd, 4, &v_bd, &v_pd, 1.6, 1.9, n, seed, seed ^ 1).unwrap()
    }

    #[test]
    fn reconstruct_round_trip_with_erasures() {
        let n = 120;
        let inst = dense_toy_c2(n, 30);
        let params = crate::channel::ChannelParams::new(0.3, 44).unwrap();
        let mut rng = crate::rng::Rng::from_seed(8);
        let x_s: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let (y_r, y_d) = crate::channel::broadcast_transmit(&x_s, params);
        let (payload, stats) = compress(&inst, &y_r, 55).unwrap();
        assert_eq!(stats.flips, payload.zeta.len());
        let v = DitherSequence::generate(55, 2 * n);
        let (outcome, _) = reconstruct_yr(&inst, &payload, &y_d, &v).unwrap();
        match outcome {
            ReconstructOutcome::Recovered(y) => assert_eq!(y, y_r),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reconstruct_intact_channel_round_trip() {
        // no erasures at either receiver
        let n = 120;
        let inst = dense_toy_c2(n, 31);
        let mut rng = crate::rng::Rng::from_seed(9);
        let y_r: Vec<TernarySymbol> = (0..n)
            .map(|_| TernarySymbol::from_bit(rng.gen_bool(0.5)))
            .collect();
        let (payload, _) = compress(&inst, &y_r, 56).unwrap();
        let v = DitherSequence::generate(56, 2 * n);
        let (outcome, _) = reconstruct_yr(&inst, &payload, &y_r, &v).unwrap();
        match outcome {
            ReconstructOutcome::Recovered(y) => assert_eq!(y, y_r),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reconstruct_rejects_corrupt_payload_dimensions() {
        let n = 40;
        let inst = toy_c2_instance(n, 31).unwrap();
        let y_r = vec![TernarySymbol::Zero; n];
        let (mut payload, _) = compress(&inst, &y_r, 5).unwrap();
        payload.t += 1;
        let v = DitherSequence::generate(5, 2 * n);
        assert!(reconstruct_yr(&inst, &payload, &y_r, &v).is_err());
    }

    #[test]
    fn dither_is_reproducible() {
        let a = DitherSequence::generate(9, 100);
        let b = DitherSequence::generate(9, 100);
        assert_eq!(a, b);
        let c = DitherSequence::generate(10, 100);
        assert_ne!(a, c);
    }
}
