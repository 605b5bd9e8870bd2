//! Slow, literal reference computations.
//!
//! Every function here follows the textbook definition as directly as
//! possible and shares no code with `dqclean-core`. They exist only to pin
//! expected values in tests. Inputs use plain types: `bool` for a yes/no
//! verdict or a positive label, `Vec<Vec<f64>>` for distance matrices.

/// Largest `n` with `(1 - p_plus)^n >= p_chance`, found by repeated
/// multiplication. Equals `floor(ln p_chance / ln(1 - p_plus))`.
pub fn n_clean_by_multiplication(p_plus: f64, p_chance: f64) -> u64 {
    if p_plus >= 1.0 || p_chance >= 1.0 {
        return 0;
    }
    let mut n = 0u64;
    let mut p_seq = 1.0f64;
    loop {
        let next = p_seq * (1.0 - p_plus);
        if next < p_chance {
            return n;
        }
        p_seq = next;
        n += 1;
    }
}

/// Number of verdicts consumed before `n_clean` consecutive "no" answers,
/// by checking every window.
pub fn first_clean_window(verdicts: &[bool], n_clean: usize) -> Option<usize> {
    if n_clean == 0 {
        return Some(0);
    }
    (n_clean..=verdicts.len()).find(|&end| verdicts[end - n_clean..end].iter().all(|v| !v))
}

/// Cohen's kappa from the explicit 2x2 confusion table.
pub fn kappa_from_table(a: &[bool], b: &[bool]) -> Option<f64> {
    let mut table = [[0u32; 2]; 2];
    for (&x, &y) in a.iter().zip(b) {
        table[x as usize][y as usize] += 1;
    }
    let n = a.len() as f64;
    let p_o = (table[0][0] + table[1][1]) as f64 / n;
    let row = |r: usize| (table[r][0] + table[r][1]) as f64 / n;
    let col = |c: usize| (table[0][c] + table[1][c]) as f64 / n;
    let p_e = row(0) * col(0) + row(1) * col(1);
    (p_e < 1.0).then(|| (p_o - p_e) / (1.0 - p_e))
}

/// Krippendorff's alpha (nominal) from the pairwise definition: observed
/// disagreement over ordered value pairs within units, weighted by
/// `1 / (m_u - 1)`, against expected disagreement over all ordered pairs of
/// pairable values.
pub fn alpha_by_definition(units: &[Vec<Option<bool>>]) -> Option<f64> {
    let pairable: Vec<Vec<bool>> =
        units.iter().map(|u| u.iter().flatten().copied().collect::<Vec<_>>()).filter(|u| u.len() >= 2).collect();
    let values: Vec<bool> = pairable.iter().flatten().copied().collect();
    let n = values.len() as f64;
    if n < 2.0 {
        return None;
    }
    let mut observed = 0.0;
    for unit in &pairable {
        let m = unit.len();
        for i in 0..m {
            for j in 0..m {
                if i != j && unit[i] != unit[j] {
                    observed += 1.0 / (m - 1) as f64;
                }
            }
        }
    }
    let mut expected = 0.0;
    for i in 0..values.len() {
        for j in 0..values.len() {
            if i != j && values[i] != values[j] {
                expected += 1.0;
            }
        }
    }
    let d_o = observed / n;
    let d_e = expected / (n * (n - 1.0));
    (d_e > 0.0).then(|| 1.0 - d_o / d_e)
}

/// AUROC by comparing every positive with every negative.
pub fn auroc_by_pairs(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    (pairs > 0.0).then(|| wins / pairs)
}

fn thresholds_descending(scores: &[f64]) -> Vec<f64> {
    let mut t = scores.to_vec();
    t.sort_by(|a, b| b.partial_cmp(a).unwrap());
    t.dedup();
    t
}

fn counts_at(scores: &[f64], labels: &[bool], threshold: f64) -> (f64, f64) {
    let tp = scores.iter().zip(labels).filter(|(s, l)| **s >= threshold && **l).count();
    let fp = scores.iter().zip(labels).filter(|(s, l)| **s >= threshold && !**l).count();
    (tp as f64, fp as f64)
}

/// Average precision by sweeping every distinct threshold and summing
/// `(recall_k - recall_{k-1}) * precision_k`.
pub fn ap_by_threshold_sweep(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let p = labels.iter().filter(|l| **l).count() as f64;
    if p == 0.0 {
        return None;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds_descending(scores) {
        let (tp, fp) = counts_at(scores, labels, t);
        let recall = tp / p;
        let precision = tp / (tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Some(ap)
}

/// AUPRG by sweeping thresholds: precision and recall at each threshold are
/// mapped to gains, the point where recall equals the prevalence is found by
/// linear interpolation of the confusion counts, and the curve is integrated
/// with trapezoids over recall gain in `[0, 1]`.
pub fn auprg_by_threshold_sweep(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let p = labels.iter().filter(|l| **l).count() as f64;
    let n = labels.len() as f64 - p;
    if p == 0.0 || n == 0.0 {
        return None;
    }
    let pi = p / (p + n);
    let gain = |x: f64| (x - pi) / ((1.0 - pi) * x);

    let mut counts = vec![(0.0, 0.0)];
    counts.extend(thresholds_descending(scores).into_iter().map(|t| counts_at(scores, labels, t)));

    let mut curve: Vec<(f64, f64)> = Vec::new();
    for w in counts.windows(2) {
        let ((tp0, fp0), (tp1, fp1)) = (w[0], w[1]);
        let (r0, r1) = (tp0 / p, tp1 / p);
        if r0 < pi && r1 > pi {
            let t = (pi - r0) / (r1 - r0);
            let tp = tp0 + t * (tp1 - tp0);
            let fp = fp0 + t * (fp1 - fp0);
            curve.push((0.0, gain(tp / (tp + fp))));
        }
        if r1 >= pi {
            curve.push((gain(r1), gain(tp1 / (tp1 + fp1))));
        }
    }
    let mut area = 0.0;
    for w in curve.windows(2) {
        area += (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0;
    }
    Some(area)
}

/// Exact one-sided sign-flip p-value as `(count, 2^n)`: the number of sign
/// assignments whose sum is at least the observed sum.
pub fn permutation_count(differences: &[f64]) -> (u64, u64) {
    let n = differences.len();
    let observed: f64 = differences.iter().sum();
    let scale: f64 = differences.iter().map(|d| d.abs()).sum();
    let mut count = 0;
    for mask in 0u64..(1 << n) {
        let mut s = 0.0;
        for (i, d) in differences.iter().enumerate() {
            s += if mask & (1 << i) != 0 { -d } else { *d };
        }
        if s >= observed - 1e-12 * scale {
            count += 1;
        }
    }
    (count, 1 << n)
}

/// Single-linkage merges by repeatedly joining the two clusters with the
/// smallest minimum inter-point distance. Returns, for every merge, the
/// height and both clusters' member lists.
pub fn single_linkage_by_repeated_merging(dist: &[Vec<f64>]) -> Vec<(f64, Vec<usize>, Vec<usize>)> {
    let mut clusters: Vec<Vec<usize>> = (0..dist.len()).map(|i| vec![i]).collect();
    let mut merges = Vec::new();
    while clusters.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let d = clusters[a]
                    .iter()
                    .flat_map(|&i| clusters[b].iter().map(move |&j| (i, j)))
                    .map(|(i, j)| dist[i][j])
                    .fold(f64::INFINITY, f64::min);
                if d < best.0 {
                    best = (d, a, b);
                }
            }
        }
        let (h, a, b) = best;
        let right = clusters.remove(b);
        let left = clusters[a].clone();
        clusters[a].extend(right.iter().copied());
        merges.push((h, left, right));
    }
    merges
}

/// Irrelevance score per sample: height of the latest merge where the
/// sample's cluster was the minority side, over the largest height.
pub fn irrelevance_scores_by_repeated_merging(dist: &[Vec<f64>]) -> Vec<f64> {
    let merges = single_linkage_by_repeated_merging(dist);
    let max = merges.last().map(|m| m.0).unwrap_or(0.0);
    let n = dist.len();
    let mut score = vec![0.0; n];
    // Height at which each current cluster was formed, keyed by member.
    let mut formed = vec![0.0; n];
    for (h, left, right) in &merges {
        let (hl, hr) = (formed[left[0]], formed[right[0]]);
        let left_minor = left.len() < right.len() || (left.len() == right.len() && hl >= hr);
        let right_minor = right.len() < left.len() || (left.len() == right.len() && hr >= hl);
        for (side, minor) in [(left, left_minor), (right, right_minor)] {
            if minor {
                for &i in side {
                    score[i] = *h;
                }
            }
        }
        for &i in left.iter().chain(right) {
            formed[i] = *h;
        }
    }
    score.iter().map(|s| s / max).collect()
}

/// `intra / (intra + extra)` per sample from exhaustive nearest-neighbour
/// scans, with the dataset's largest distance standing in for a missing
/// same-label neighbour.
pub fn label_scores_by_scan(dist: &[Vec<f64>], labels: &[&str]) -> Vec<f64> {
    let max = dist.iter().flatten().copied().fold(0.0, f64::max);
    (0..dist.len())
        .map(|i| {
            let mut intra = f64::INFINITY;
            let mut extra = f64::INFINITY;
            for j in 0..dist.len() {
                if j == i {
                    continue;
                }
                if labels[j] == labels[i] {
                    intra = intra.min(dist[i][j]);
                } else {
                    extra = extra.min(dist[i][j]);
                }
            }
            if intra.is_infinite() {
                intra = max;
            }
            if intra + extra == 0.0 {
                0.5
            } else {
                intra / (intra + extra)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        assert_eq!(n_clean_by_multiplication(0.05, 0.05), 58);
        assert_eq!(n_clean_by_multiplication(0.10, 0.05), 28);
        assert_eq!(n_clean_by_multiplication(0.5, 0.5), 1);
        assert_eq!(kappa_from_table(&[true, true, false, false], &[true, false, false, false]), Some(0.5));
        let units = vec![vec![Some(true), Some(true)], vec![Some(false), Some(false)], vec![Some(false), Some(true)]];
        assert!((alpha_by_definition(&units).unwrap() - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(permutation_count(&[1.0, 2.0, 3.0]), (1, 8));
        let (s, l) = ([0.9, 0.8, 0.3], [true, false, true]);
        assert_eq!(auroc_by_pairs(&s, &l), Some(0.5));
        assert!((ap_by_threshold_sweep(&s, &l).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert!((auprg_by_threshold_sweep(&s, &l).unwrap() + 0.25).abs() < 1e-12);
        assert_eq!(first_clean_window(&[true, false, false, true], 2), Some(3));
    }
}
