//! Set partitions of the conditioning indices and hitting scenarios.
//!
//! Partitions of `{0, .., k-1}` are kept in standardized form: blocks ordered
//! by their minimal elements. The canonical encoding is the restricted growth
//! string (RGS) `a`, where `a[i]` is the index of the block containing `i` and
//! `a[i] <= max(a[0..i]) + 1`; enumeration is in lexicographic RGS order, so
//! `k = 3` starts with `0 0 0` (one block) and ends with `0 1 2` (singletons).

use serde::{Deserialize, Serialize};

use crate::atoms::{AtomFunction, PointMeasureRealization};
use crate::error::{CoreError, Result};

/// Hard cap on the universe size; Bell(13) > 2.7e7 makes enumeration useless.
pub const MAX_PARTITION_K: usize = 12;

/// A set partition in standardized form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    k: usize,
}

impl Partition {
    /// Build from explicit blocks; re-orders into standardized form and
    /// validates disjointness and coverage of `{0, .., k-1}`.
    pub fn new(mut blocks: Vec<Vec<usize>>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(CoreError::InvalidPartition("empty universe".into()));
        }
        let mut seen = vec![false; k];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(CoreError::InvalidPartition("empty block".into()));
            }
            block.sort_unstable();
            for &i in block.iter() {
                if i >= k {
                    return Err(CoreError::InvalidPartition(format!(
                        "element {i} outside universe of size {k}"
                    )));
                }
                if seen[i] {
                    return Err(CoreError::InvalidPartition(format!("element {i} repeated")));
                }
                seen[i] = true;
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(CoreError::InvalidPartition(
                "blocks do not cover the universe".into(),
            ));
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Self { blocks, k })
    }

    pub fn from_rgs(rgs: &[usize]) -> Result<Self> {
        if rgs.is_empty() {
            return Err(CoreError::InvalidPartition("empty RGS".into()));
        }
        let mut max = 0usize;
        for (i, &a) in rgs.iter().enumerate() {
            let cap = if i == 0 { 0 } else { max + 1 };
            if a > cap {
                return Err(CoreError::InvalidPartition(format!(
                    "not a restricted growth string at position {i}"
                )));
            }
            max = max.max(a);
        }
        let mut blocks = vec![Vec::new(); max + 1];
        for (i, &a) in rgs.iter().enumerate() {
            blocks[a].push(i);
        }
        Self::new(blocks, rgs.len())
    }

    /// Restricted growth string; `rgs()[i]` is the block index of element `i`.
    pub fn rgs(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                out[i] = b;
            }
        }
        out
    }

    /// Space-separated RGS used in CSV/JSON outputs, e.g. `"0 0 1"`.
    pub fn rgs_string(&self) -> String {
        self.rgs()
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn parse_rgs(s: &str) -> Result<Self> {
        let rgs: Vec<usize> = s
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| CoreError::InvalidPartition(format!("bad RGS token {tok:?}")))
            })
            .collect::<Result<_>>()?;
        Self::from_rgs(&rgs)
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of blocks (the length of the hitting scenario).
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn universe(&self) -> usize {
        self.k
    }

    /// Elements outside block `j`, in increasing order.
    pub fn complement(&self, j: usize) -> Vec<usize> {
        let mut in_block = vec![false; self.k];
        for &i in &self.blocks[j] {
            in_block[i] = true;
        }
        (0..self.k).filter(|&i| !in_block[i]).collect()
    }

    /// Partition of all singletons.
    pub fn singletons(k: usize) -> Self {
        Self {
            blocks: (0..k).map(|i| vec![i]).collect(),
            k,
        }
    }

    /// Partition with one block.
    pub fn one_block(k: usize) -> Self {
        Self {
            blocks: vec![(0..k).collect()],
            k,
        }
    }

    /// Map elements through `perm` (new index = position of old index in perm)
    /// and re-standardize. `perm[new] = old`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k {
            return Err(CoreError::InvalidPartition(
                "permutation length mismatch".into(),
            ));
        }
        let mut old_to_new = vec![usize::MAX; self.k];
        for (new, &old) in perm.iter().enumerate() {
            if old >= self.k || old_to_new[old] != usize::MAX {
                return Err(CoreError::InvalidPartition("not a permutation".into()));
            }
            old_to_new[old] = new;
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.iter().map(|&i| old_to_new[i]).collect())
            .collect();
        Self::new(blocks, self.k)
    }
}

/// Bell numbers by the triangle recurrence; `bell_number(12) = 4_213_597`.
pub fn bell_number(k: usize) -> Result<u64> {
    if k > MAX_PARTITION_K {
        return Err(CoreError::PartitionCapacity {
            k,
            limit: MAX_PARTITION_K,
        });
    }
    // B(0) = 1; row-based Bell triangle.
    let mut row = vec![1u64];
    for _ in 0..k {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &v in &row {
            next.push(next.last().unwrap() + v);
        }
        row = next;
    }
    Ok(row[0])
}

/// All partitions of `{0, .., k-1}` in lexicographic RGS order.
pub fn enumerate_partitions(k: usize) -> Result<Vec<Partition>> {
    if k == 0 {
        return Err(CoreError::InvalidPartition("empty universe".into()));
    }
    if k > MAX_PARTITION_K {
        return Err(CoreError::PartitionCapacity {
            k,
            limit: MAX_PARTITION_K,
        });
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; k];
    // maxima[i] = max(rgs[0..=i]); rgs[0] is fixed at 0.
    let mut maxima = vec![0usize; k];
    loop {
        out.push(Partition::from_rgs(&rgs).expect("generated RGS is valid"));
        // advance to the next RGS in lexicographic order
        let mut i = k;
        loop {
            if i <= 1 {
                return Ok(out);
            }
            i -= 1;
            if rgs[i] <= maxima[i - 1] {
                break;
            }
        }
        rgs[i] += 1;
        maxima[i] = maxima[i - 1].max(rgs[i]);
        for j in (i + 1)..k {
            rgs[j] = 0;
            maxima[j] = maxima[j - 1];
        }
    }
}

/// Group equal labels into blocks and standardize.
pub fn partition_from_assignment(labels: &[u64]) -> Result<Partition> {
    if labels.is_empty() {
        return Err(CoreError::InvalidPartition("empty assignment".into()));
    }
    if labels.len() > MAX_PARTITION_K {
        return Err(CoreError::PartitionCapacity {
            k: labels.len(),
            limit: MAX_PARTITION_K,
        });
    }
    let mut blocks: Vec<(u64, Vec<usize>)> = Vec::new();
    for (i, &lab) in labels.iter().enumerate() {
        match blocks.iter_mut().find(|(l, _)| *l == lab) {
            Some((_, b)) => b.push(i),
            None => blocks.push((lab, vec![i])),
        }
    }
    Partition::new(blocks.into_iter().map(|(_, b)| b).collect(), labels.len())
}

/// A hitting scenario: which conditioning sites share an extremal atom, and
/// the atoms themselves (one per block, values exceeding all other extremal
/// atoms on their own block's sites).
#[derive(Clone, Debug)]
pub struct HittingScenario {
    pub partition: Partition,
    pub extremal_atoms: Vec<AtomFunction>,
}

/// Extract the hitting scenario of a realization over the conditioning sites
/// `k_sites` (grid site ids, in observation order).
///
/// Sites are grouped by the atom attaining the maximum there. A second atom
/// within `tie_tol` of the argmax at some site raises `TieDetected`: exact ties
/// are a null event for the models shipped here, so a tie is evidence of a
/// degenerate setup that silent breaking would bias.
pub fn scenario_from_realization(
    real: &PointMeasureRealization,
    k_sites: &[usize],
    tie_tol: f64,
) -> Result<HittingScenario> {
    if k_sites.is_empty() {
        return Err(CoreError::InvalidObservation("empty site list".into()));
    }
    if real.is_empty() {
        return Err(CoreError::InvalidObservation(
            "realization has no atoms on the conditioning sites".into(),
        ));
    }
    let mut argmax = vec![0usize; k_sites.len()];
    for (pos, &site) in k_sites.iter().enumerate() {
        let mut best = f64::NEG_INFINITY;
        let mut best_idx = usize::MAX;
        let mut tie = false;
        for (idx, atom) in real.atoms.iter().enumerate() {
            let v = atom.values[site];
            if v > best + tie_tol {
                best = v;
                best_idx = idx;
                tie = false;
            } else if v >= best - tie_tol {
                // within tolerance of the current maximum
                if v > best {
                    best = v;
                    best_idx = idx;
                }
                tie = true;
            }
        }
        if !(best > 0.0) {
            return Err(CoreError::InvalidObservation(format!(
                "maximum over conditioning site {site} is not strictly positive"
            )));
        }
        if tie {
            return Err(CoreError::TieDetected {
                site: pos,
                tol: tie_tol,
            });
        }
        debug_assert_ne!(best_idx, usize::MAX);
        argmax[pos] = best_idx;
    }
    let partition =
        partition_from_assignment(&argmax.iter().map(|&i| i as u64).collect::<Vec<_>>())?;
    let extremal_atoms = partition
        .blocks()
        .iter()
        .map(|b| real.atoms[argmax[b[0]]].clone())
        .collect();
    Ok(HittingScenario {
        partition,
        extremal_atoms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::AtomOrigin;
    use proptest::prelude::*;

    #[test]
    fn bell_numbers_match_reference() {
        let expect = [
            1u64, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115_975, 678_570, 4_213_597,
        ];
        for (k, &b) in expect.iter().enumerate() {
            assert_eq!(bell_number(k).unwrap(), b, "Bell({k})");
        }
        assert!(bell_number(13).is_err());
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(enumerate_partitions(1).unwrap().len(), 1);
        let p3 = enumerate_partitions(3).unwrap();
        assert_eq!(p3.len(), 5);
        // lexicographic RGS order starts at the single block
        assert_eq!(p3[0].blocks(), &[vec![0, 1, 2]]);
        assert_eq!(p3[4].blocks(), &[vec![0], vec![1], vec![2]]);
        let rgs: Vec<String> = p3.iter().map(|p| p.rgs_string()).collect();
        assert_eq!(rgs, vec!["0 0 0", "0 0 1", "0 1 0", "0 1 1", "0 1 2"]);
        assert_eq!(enumerate_partitions(5).unwrap().len(), 52);
        assert!(enumerate_partitions(13).is_err());
    }

    #[test]
    fn enumeration_has_no_duplicates_and_counts_bell() {
        for k in 1..=8 {
            let parts = enumerate_partitions(k).unwrap();
            assert_eq!(parts.len() as u64, bell_number(k).unwrap());
            let mut set = std::collections::HashSet::new();
            for p in &parts {
                assert!(set.insert(p.rgs()), "duplicate partition for k={k}");
            }
        }
    }

    #[test]
    fn assignment_standardizes() {
        let p = partition_from_assignment(&[7, 7, 2]).unwrap();
        assert_eq!(p.blocks(), &[vec![0, 1], vec![2]]);
        let p = partition_from_assignment(&[0, 1, 0, 1]).unwrap();
        assert_eq!(p.blocks(), &[vec![0, 2], vec![1, 3]]);
        let p = partition_from_assignment(&[3, 1, 4, 1, 5]).unwrap();
        assert_eq!(p.blocks(), &[vec![0], vec![1, 3], vec![2], vec![4]]);
        assert!(partition_from_assignment(&[]).is_err());
    }

    #[test]
    fn rgs_string_round_trip() {
        let p = Partition::parse_rgs("0 0 1").unwrap();
        assert_eq!(p.blocks(), &[vec![0, 1], vec![2]]);
        assert_eq!(p.rgs_string(), "0 0 1");
        assert!(Partition::parse_rgs("0 2").is_err());
    }

    #[test]
    fn complement_lists_other_elements() {
        let p = Partition::parse_rgs("0 1 0 2").unwrap();
        assert_eq!(p.complement(0), vec![1, 3]);
        assert_eq!(p.complement(1), vec![0, 2, 3]);
    }

    fn atom(values: Vec<f64>) -> AtomFunction {
        AtomFunction::new(values, 1.0, AtomOrigin::Simulated).unwrap()
    }

    #[test]
    fn scenario_single_atom_dominates() {
        let real = PointMeasureRealization::exact(vec![atom(vec![2.0, 3.0, 1.0])], 0.0);
        let s = scenario_from_realization(&real, &[0, 1, 2], 0.0).unwrap();
        assert_eq!(s.partition.blocks(), &[vec![0, 1, 2]]);
        assert_eq!(s.extremal_atoms.len(), 1);
    }

    #[test]
    fn scenario_disjoint_supports_split() {
        let real =
            PointMeasureRealization::exact(vec![atom(vec![2.0, 0.0]), atom(vec![0.0, 3.0])], 0.0);
        let s = scenario_from_realization(&real, &[0, 1], 0.0).unwrap();
        assert_eq!(s.partition.blocks(), &[vec![0], vec![1]]);
    }

    #[test]
    fn scenario_detects_bitwise_tie() {
        let real =
            PointMeasureRealization::exact(vec![atom(vec![2.0, 1.0]), atom(vec![2.0, 0.5])], 0.0);
        match scenario_from_realization(&real, &[0, 1], 0.0) {
            Err(CoreError::TieDetected { site, .. }) => assert_eq!(site, 0),
            other => panic!("expected tie, got {other:?}"),
        }
    }

    #[test]
    fn scenario_requires_positive_maximum() {
        let real = PointMeasureRealization::exact(vec![atom(vec![1.0, 0.0])], 0.0);
        assert!(scenario_from_realization(&real, &[1], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn enumerated_partitions_round_trip_assignment(k in 1usize..=7) {
            for p in enumerate_partitions(k).unwrap() {
                let labels: Vec<u64> = p.rgs().iter().map(|&a| a as u64).collect();
                let q = partition_from_assignment(&labels).unwrap();
                prop_assert_eq!(p, q);
            }
        }

        #[test]
        fn scenario_invariant_under_atom_permutation_and_scaling(
            seed in 0u64..500,
            swap in any::<bool>(),
            pow in -8i32..8,
        ) {
            let mut rng = crate::rng::SplitRng::new(seed, 0);
            let atoms: Vec<AtomFunction> = (0..4)
                .map(|_| {
                    atom((0..3).map(|_| rng.next_f64() + 0.01).collect())
                })
                .collect();
            let real = PointMeasureRealization::exact(atoms.clone(), 0.0);
            let base = scenario_from_realization(&real, &[0, 1, 2], 0.0).unwrap();

            // permute the atom list
            let mut permuted = atoms.clone();
            if swap {
                permuted.reverse();
            }
            let s2 = scenario_from_realization(
                &PointMeasureRealization::exact(permuted, 0.0),
                &[0, 1, 2],
                0.0,
            )
            .unwrap();
            prop_assert_eq!(&base.partition, &s2.partition);

            // scale all atoms by a power of two (exact in floating point)
            let c = (2.0f64).powi(pow);
            let scaled: Vec<AtomFunction> = atoms
                .iter()
                .map(|a| atom(a.values.iter().map(|&v| v * c).collect()))
                .collect();
            let s3 = scenario_from_realization(
                &PointMeasureRealization::exact(scaled, 0.0),
                &[0, 1, 2],
                0.0,
            )
            .unwrap();
            prop_assert_eq!(&base.partition, &s3.partition);
        }
    }
}
