//! Level matching between two spectra.
//!
//! Eigenvalues closer than a relative `1e-8` are grouped into one level
//! with multiplicity; levels are then paired greedily by distance.

use serde::{Deserialize, Serialize};

/// Relative spread within which eigenvalues count as one degenerate level.
pub const DEGENERACY_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub value: f64,
    pub multiplicity: usize,
    /// Index of the first eigenvalue of the level in the side's list.
    pub first: usize,
}

/// Eigenvalue pairing `(plus index, minus index, |difference|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub plus: usize,
    pub minus: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub tol: f64,
    pub max_levels: usize,
    pub eigs_plus: Vec<f64>,
    pub eigs_minus: Vec<f64>,
    pub levels_plus: Vec<Level>,
    pub levels_minus: Vec<Level>,
    pub matched_pairs: Vec<MatchedPair>,
    pub unmatched_plus: Vec<Level>,
    pub unmatched_minus: Vec<Level>,
    /// Unmatched eigenvalues (with multiplicity) not above the top of
    /// either window; leftovers above it may have partners outside the window.
    pub low_lying_unmatched: usize,
}

impl SpectralReport {
    pub fn matched_minus_of(&self, plus: usize) -> Option<usize> {
        self.matched_pairs
            .iter()
            .find(|p| p.plus == plus)
            .map(|p| p.minus)
    }

    pub fn matched_plus_of(&self, minus: usize) -> Option<usize> {
        self.matched_pairs
            .iter()
            .find(|p| p.minus == minus)
            .map(|p| p.plus)
    }
}

fn group_levels(eigs: &[f64]) -> Vec<Level> {
    let mut out: Vec<Level> = Vec::new();
    for (i, &e) in eigs.iter().enumerate() {
        if let Some(last) = out.last_mut() {
            let anchor = eigs[last.first];
            if (e - anchor).abs() <= DEGENERACY_RTOL * anchor.abs().max(1.0) {
                let m = last.multiplicity as f64;
                last.value = (last.value * m + e) / (m + 1.0);
                last.multiplicity += 1;
                continue;
            }
        }
        out.push(Level {
            value: e,
            multiplicity: 1,
            first: i,
        });
    }
    out
}

/// Greedy nearest-neighbor matching of the lowest `max_levels` eigenvalues
/// of each ascending list; a pair is accepted when `|Δ| <= tol`, ties go to
/// the lower indices.
pub fn match_spectra(plus: &[f64], minus: &[f64], tol: f64, max_levels: usize) -> SpectralReport {
    let eigs_plus: Vec<f64> = plus.iter().copied().take(max_levels).collect();
    let eigs_minus: Vec<f64> = minus.iter().copied().take(max_levels).collect();
    let levels_plus = group_levels(&eigs_plus);
    let levels_minus = group_levels(&eigs_minus);

    let mut candidates = Vec::new();
    for (i, lp) in levels_plus.iter().enumerate() {
        for (j, lm) in levels_minus.iter().enumerate() {
            let d = (lp.value - lm.value).abs();
            if d <= tol {
                candidates.push((d, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut used_plus = vec![0usize; levels_plus.len()];
    let mut used_minus = vec![0usize; levels_minus.len()];
    let mut taken_plus = vec![false; levels_plus.len()];
    let mut taken_minus = vec![false; levels_minus.len()];
    let mut matched_pairs = Vec::new();
    for (_, i, j) in candidates {
        if taken_plus[i] || taken_minus[j] {
            continue;
        }
        taken_plus[i] = true;
        taken_minus[j] = true;
        let (lp, lm) = (&levels_plus[i], &levels_minus[j]);
        let k = lp.multiplicity.min(lm.multiplicity);
        for t in 0..k {
            let (a, b) = (lp.first + t, lm.first + t);
            matched_pairs.push(MatchedPair {
                plus: a,
                minus: b,
                delta: (eigs_plus[a] - eigs_minus[b]).abs(),
            });
        }
        used_plus[i] = k;
        used_minus[j] = k;
    }
    matched_pairs.sort_by_key(|p| p.plus);

    let leftovers = |levels: &[Level], used: &[usize]| -> Vec<Level> {
        levels
            .iter()
            .zip(used)
            .filter(|(l, u)| l.multiplicity > **u)
            .map(|(l, u)| Level {
                value: l.value,
                multiplicity: l.multiplicity - u,
                first: l.first + u,
            })
            .collect()
    };
    let unmatched_plus = leftovers(&levels_plus, &used_plus);
    let unmatched_minus = leftovers(&levels_minus, &used_minus);

    let top = match (eigs_plus.last(), eigs_minus.last()) {
        (Some(a), Some(b)) => a.min(*b) + tol,
        _ => f64::INFINITY,
    };
    let low_lying_unmatched = unmatched_plus
        .iter()
        .chain(&unmatched_minus)
        .filter(|l| l.value <= top)
        .map(|l| l.multiplicity)
        .sum();

    SpectralReport {
        tol,
        max_levels,
        eigs_plus,
        eigs_minus,
        levels_plus,
        levels_minus,
        matched_pairs,
        unmatched_plus,
        unmatched_minus,
        low_lying_unmatched,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_lists() {
        let e = [0.5, 1.5, 2.5, 3.5];
        let r = match_spectra(&e, &e, 1e-6, 10);
        assert_eq!(r.matched_pairs.len(), 4);
        assert!(r.unmatched_plus.is_empty() && r.unmatched_minus.is_empty());
        assert_eq!(r.low_lying_unmatched, 0);
    }

    #[test]
    fn disjoint_lists() {
        let r = match_spectra(&[0.0, 1.0, 2.0], &[10.0, 11.0], 1e-2, 10);
        assert!(r.matched_pairs.is_empty());
        assert_eq!(r.unmatched_plus.len(), 3);
        assert_eq!(r.unmatched_minus.len(), 2);
    }

    #[test]
    fn degenerate_levels_shift() {
        let plus = [-0.5, -0.5, 0.5, 0.5, 1.5, 1.5 + 1e-12, 2.5, 2.5];
        let minus = [1.5, 1.5, 2.5, 2.5, 3.5, 3.5, 4.5, 4.5];
        let r = match_spectra(&plus, &minus, 1e-2, 8);
        assert_eq!(r.levels_plus.len(), 4);
        let lows: Vec<f64> = r.unmatched_plus.iter().map(|l| l.value).collect();
        assert_eq!(lows, vec![-0.5, 0.5]);
        assert_eq!(r.matched_pairs.len(), 4);
        assert_eq!(r.matched_minus_of(4), Some(0));
        assert_eq!(r.low_lying_unmatched, 4);
    }

    #[test]
    fn greedy_prefers_closest_then_lower_index() {
        let r = match_spectra(&[1.0, 1.05], &[1.04], 0.1, 5);
        assert_eq!(r.matched_pairs[0].plus, 1);
        let r = match_spectra(&[1.0, 1.25], &[1.125], 0.2, 5);
        assert_eq!(r.matched_pairs[0].plus, 0);
    }

    #[test]
    fn multiplicity_mismatch_leaves_remainder() {
        let r = match_spectra(&[1.0, 1.0], &[1.0], 1e-6, 5);
        assert_eq!(r.matched_pairs.len(), 1);
        assert_eq!(r.unmatched_plus[0].multiplicity, 1);
        assert_eq!(r.unmatched_plus[0].first, 1);
    }
}
