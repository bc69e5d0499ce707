//! Central-moment features of measurement trajectories.

use crate::error::{QrcError, Result};
use crate::reservoir::TrajectoryRecord;
use serde::{Deserialize, Serialize};

/// Histograms are used for codes of at most this many bits.
const MAX_HISTOGRAM_BITS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentFeatureSpec {
    pub max_order: usize,
    /// Largest allowed distance between indices of one moment; `None` keeps all.
    pub d_h: Option<usize>,
    /// Bits per trajectory.
    pub m: usize,
}

impl Default for MomentFeatureSpec {
    fn default() -> Self {
        Self { max_order: 3, d_h: Some(3), m: 8 }
    }
}

impl MomentFeatureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.max_order) {
            return Err(QrcError::Config(format!("max_order must be 1..=3, got {}", self.max_order)));
        }
        if self.m == 0 || self.m > 64 {
            return Err(QrcError::Config(format!("m must be 1..=64, got {}", self.m)));
        }
        Ok(())
    }

    /// Index multisets `i1 <= ... <= ip` kept by this spec: all of order 1,
    /// then order 2, then order 3, each block in lexicographic order.
    pub fn index_sets(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for p in 1..=self.max_order {
            let mut cur = Vec::with_capacity(p);
            self.push_sets(p, 0, &mut cur, &mut out);
        }
        out
    }

    fn push_sets(&self, p: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..self.m {
            if let (Some(d), Some(&first)) = (self.d_h, cur.first()) {
                if i - first > d {
                    break;
                }
            }
            cur.push(i);
            self.push_sets(p, i, cur, out);
            cur.pop();
        }
    }

    /// Column names `p:i[,j[,k]]`.
    pub fn names(&self) -> Vec<String> {
        self.index_sets()
            .iter()
            .map(|s| {
                let idx: Vec<String> = s.iter().map(|i| i.to_string()).collect();
                format!("{}:{}", s.len(), idx.join(","))
            })
            .collect()
    }
}

pub fn feature_dimension(spec: &MomentFeatureSpec) -> usize {
    spec.index_sets().len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub spec: MomentFeatureSpec,
    pub n_shots: usize,
}

/// Central moments over shots of the bits of `records`.
pub fn central_moments(records: &[TrajectoryRecord], spec: &MomentFeatureSpec) -> Result<FeatureVector> {
    let rows: Vec<&[u8]> = records.iter().map(|r| r.bits.as_slice()).collect();
    moments_of(&rows, spec)
}

/// The same moments for real-valued records, such as homodyne samples.
pub fn central_moments_real(records: &[Vec<f64>], spec: &MomentFeatureSpec) -> Result<FeatureVector> {
    let rows: Vec<&[f64]> = records.iter().map(Vec::as_slice).collect();
    moments_of(&rows, spec)
}

fn moments_of<T: Copy + Into<f64>>(records: &[&[T]], spec: &MomentFeatureSpec) -> Result<FeatureVector> {
    spec.validate()?;
    if records.len() < 2 {
        return Err(QrcError::TooFewShots(records.len()));
    }
    if let Some(r) = records.iter().find(|r| r.len() != spec.m) {
        return Err(QrcError::Shape(format!("record has {} values, spec expects {}", r.len(), spec.m)));
    }
    let n = records.len() as f64;
    let mut mean = vec![0.0; spec.m];
    for r in records {
        for (acc, &b) in mean.iter_mut().zip(r.iter()) {
            *acc += b.into();
        }
    }
    mean.iter_mut().for_each(|x| *x /= n);
    let sets = spec.index_sets();
    let mut values = vec![0.0; sets.len()];
    let mut dev = vec![0.0; spec.m];
    for r in records {
        for ((d, &b), mu) in dev.iter_mut().zip(r.iter()).zip(&mean) {
            *d = b.into() - mu;
        }
        for (v, set) in values.iter_mut().zip(&sets) {
            *v += set.iter().map(|&i| dev[i]).product::<f64>();
        }
    }
    for (v, set) in values.iter_mut().zip(&sets) {
        *v = if set.len() == 1 { mean[set[0]] } else { *v / n };
    }
    Ok(FeatureVector { values, spec: *spec, n_shots: records.len() })
}

/// Same moments computed from bitstring codes (first bit most significant).
/// Codes are binned first, so the result does not depend on shot order.
pub fn moments_from_codes(codes: &[u32], spec: &MomentFeatureSpec) -> Result<FeatureVector> {
    spec.validate()?;
    if spec.m > MAX_HISTOGRAM_BITS {
        let records: Vec<TrajectoryRecord> = codes.iter().map(|&c| TrajectoryRecord::from_code(c as usize, spec.m, 0)).collect();
        return central_moments(&records, spec);
    }
    let mut counts = vec![0u64; 1 << spec.m];
    for &c in codes {
        let slot = counts.get_mut(c as usize).ok_or_else(|| QrcError::Shape(format!("code {c} does not fit in {} bits", spec.m)))?;
        *slot += 1;
    }
    moments_from_counts(&counts, spec)
}

/// Moments from a histogram over all `2^m` codes.
pub fn moments_from_counts(counts: &[u64], spec: &MomentFeatureSpec) -> Result<FeatureVector> {
    spec.validate()?;
    if counts.len() != 1 << spec.m {
        return Err(QrcError::Shape(format!("histogram needs {} bins, got {}", 1usize << spec.m, counts.len())));
    }
    let total: u64 = counts.iter().sum();
    if total < 2 {
        return Err(QrcError::TooFewShots(total as usize));
    }
    let n = total as f64;
    let m = spec.m;
    let bit = |c: usize, i: usize| ((c >> (m - 1 - i)) & 1) as f64;
    let mut mean = vec![0.0; m];
    for (c, &k) in counts.iter().enumerate() {
        if k == 0 {
            continue;
        }
        for (i, mu) in mean.iter_mut().enumerate() {
            *mu += k as f64 * bit(c, i);
        }
    }
    mean.iter_mut().for_each(|x| *x /= n);
    let sets = spec.index_sets();
    let mut values = vec![0.0; sets.len()];
    let mut dev = vec![0.0; m];
    for (c, &k) in counts.iter().enumerate() {
        if k == 0 {
            continue;
        }
        for (i, d) in dev.iter_mut().enumerate() {
            *d = bit(c, i) - mean[i];
        }
        let w = k as f64;
        for (v, set) in values.iter_mut().zip(&sets) {
            if set.len() > 1 {
                *v += w * set.iter().map(|&i| dev[i]).product::<f64>();
            }
        }
    }
    for (v, set) in values.iter_mut().zip(&sets) {
        *v = if set.len() == 1 { mean[set[0]] } else { *v / n };
    }
    Ok(FeatureVector { values, spec: *spec, n_shots: total as usize })
}

/// Normalized histogram over bitstring codes (first bit most significant).
pub fn sample_distribution(records: &[TrajectoryRecord], m: usize) -> Result<Vec<f64>> {
    if m > MAX_HISTOGRAM_BITS {
        return Err(QrcError::Config(format!("sample distribution needs m <= {MAX_HISTOGRAM_BITS}")));
    }
    let mut p = vec![0.0; 1 << m];
    if records.is_empty() {
        return Ok(p);
    }
    for r in records {
        if r.bits.len() != m {
            return Err(QrcError::Shape(format!("record has {} bits, expected {m}", r.bits.len())));
        }
        p[r.code()] += 1.0;
    }
    let n = records.len() as f64;
    p.iter_mut().for_each(|x| *x /= n);
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(bits: &[u8]) -> TrajectoryRecord {
        TrajectoryRecord { bits: bits.to_vec(), shot_seed: 0 }
    }

    #[test]
    fn dimensions() {
        let full = MomentFeatureSpec { d_h: None, ..Default::default() };
        assert_eq!(feature_dimension(&full), 164);
        assert_eq!(feature_dimension(&MomentFeatureSpec::default()), 94);
        let counts: Vec<usize> =
            (1..=3).map(|p| MomentFeatureSpec::default().index_sets().iter().filter(|s| s.len() == p).count()).collect();
        assert_eq!(counts, vec![8, 26, 60]);
        for d in [None, Some(0), Some(5)] {
            assert_eq!(feature_dimension(&MomentFeatureSpec { max_order: 1, d_h: d, m: 1 }), 1);
        }
    }

    #[test]
    fn names_follow_index_sets() {
        let spec = MomentFeatureSpec { max_order: 3, d_h: Some(1), m: 3 };
        assert_eq!(
            spec.names(),
            vec![
                "1:0", "1:1", "1:2", "2:0,0", "2:0,1", "2:1,1", "2:1,2", "2:2,2", "3:0,0,0", "3:0,0,1", "3:0,1,1", "3:1,1,1", "3:1,1,2",
                "3:1,2,2", "3:2,2,2"
            ]
        );
    }

    #[test]
    fn two_record_example() {
        let spec = MomentFeatureSpec { max_order: 2, d_h: None, m: 2 };
        let f = central_moments(&[rec(&[0, 1]), rec(&[1, 0])], &spec).unwrap();
        // 1:0, 1:1, 2:0,0, 2:0,1, 2:1,1
        assert_eq!(f.values, vec![0.5, 0.5, 0.25, -0.25, 0.25]);
    }

    #[test]
    fn constant_bits_give_zero_moments() {
        let spec = MomentFeatureSpec::default();
        let f = central_moments(&vec![rec(&[0; 8]); 10], &spec).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn too_few_shots() {
        let spec = MomentFeatureSpec::default();
        assert!(matches!(central_moments(&[rec(&[0; 8])], &spec), Err(QrcError::TooFewShots(1))));
        assert!(matches!(moments_from_codes(&[3], &spec), Err(QrcError::TooFewShots(1))));
    }

    #[test]
    fn sample_distribution_basics() {
        let p = sample_distribution(&[rec(&[0, 0, 0])], 3).unwrap();
        assert_eq!(p[0], 1.0);
        let p = sample_distribution(&[rec(&[1, 0, 1]), rec(&[0, 1, 1]), rec(&[1, 0, 1])], 3).unwrap();
        assert_eq!(p.iter().sum::<f64>(), 1.0);
        assert!((p[5] - 2.0 / 3.0).abs() < 1e-15);
    }
}
