//! Binned mobility feature matrix and principal component analysis.

mod eigen;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use eigen::{symmetric_eigen, SymmetricEigen};

use crate::calendar::DayType;
use crate::error::{Error, Result};
use crate::ingest::SimKey;
use crate::ses::{QuartileGroup, SesAssignment, SubscriberProfile};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub rg_bins: usize,
    pub rg_start_km: f64,
    pub rg_width_km: f64,
    pub entropy_bins: usize,
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec {
            rg_bins: 40,
            rg_start_km: 0.5,
            rg_width_km: 0.5,
            entropy_bins: 20,
        }
    }
}

impl BinSpec {
    pub fn width(&self) -> usize {
        self.rg_bins + self.entropy_bins
    }

    /// 1-based bin of a radius of gyration; intervals are open below and
    /// closed above.
    pub fn rg_bin(&self, rg_km: f64) -> Option<usize> {
        right_closed_bin((rg_km - self.rg_start_km) / self.rg_width_km, self.rg_bins)
    }

    pub fn entropy_bin(&self, entropy: f64) -> Option<usize> {
        right_closed_bin(entropy * self.entropy_bins as f64, self.entropy_bins)
    }

    pub fn rg_edges(&self, bin: usize) -> (f64, f64) {
        let lo = self.rg_start_km + (bin - 1) as f64 * self.rg_width_km;
        (lo, lo + self.rg_width_km)
    }

    pub fn entropy_edges(&self, bin: usize) -> (f64, f64) {
        let w = 1.0 / self.entropy_bins as f64;
        ((bin - 1) as f64 * w, bin as f64 * w)
    }
}

/// `x` is the position in bin-width units; values within rounding noise of
/// an edge are snapped onto it so that e.g. 0.05 lands in the first
/// entropy bin.
fn right_closed_bin(x: f64, bins: usize) -> Option<usize> {
    if !x.is_finite() {
        return None;
    }
    let r = x.round();
    let x = if (x - r).abs() < 1e-9 { r } else { x };
    let b = x.ceil();
    (b >= 1.0 && b <= bins as f64).then_some(b as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FeatureKey {
    pub home_price_category: u8,
    pub quartile_group: QuartileGroup,
    pub day_type: DayType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRow {
    pub key: FeatureKey,
    pub sims: u64,
    pub rg: Vec<f64>,
    pub entropy: Vec<f64>,
}

impl FeatureRow {
    pub fn features(&self) -> Vec<f64> {
        self.rg.iter().chain(&self.entropy).copied().collect()
    }
}

/// Rows are ordered workday keys first, then holiday keys, each by
/// (category, group).
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub bins: BinSpec,
    pub rows: Vec<FeatureRow>,
    pub dropped_rg: u64,
    pub dropped_entropy: u64,
    /// SIMs without a home category or work-price group.
    pub unkeyed: u64,
}

impl FeatureMatrix {
    pub fn data(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(FeatureRow::features).collect()
    }
}

#[derive(Clone, Debug, Default)]
struct Tally {
    rows: BTreeMap<(DayType, u8, QuartileGroup), (u64, Vec<u64>, Vec<u64>)>,
    dropped_rg: u64,
    dropped_entropy: u64,
    unkeyed: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (k, (n, rg, en)) in other.rows {
            let e = self.rows.entry(k).or_insert_with(|| (0, vec![0; rg.len()], vec![0; en.len()]));
            e.0 += n;
            e.1.iter_mut().zip(rg).for_each(|(a, b)| *a += b);
            e.2.iter_mut().zip(en).for_each(|(a, b)| *a += b);
        }
        self.dropped_rg += other.dropped_rg;
        self.dropped_entropy += other.dropped_entropy;
        self.unkeyed += other.unkeyed;
        self
    }
}

/// Counts SIM indicators into per-key histograms and normalizes each metric
/// block to sum 1.
pub fn build_matrix(
    profiles: &[SubscriberProfile],
    assignments: &[SesAssignment],
    bins: BinSpec,
) -> Result<FeatureMatrix> {
    let keys: BTreeMap<SimKey, (u8, QuartileGroup)> = assignments
        .iter()
        .filter_map(|a| Some((a.sim, (a.home_price_category?, a.quartile_group?))))
        .collect();

    let tally = profiles
        .par_iter()
        .fold(Tally::default, |mut t, p| {
            let Some(&(cat, group)) = keys.get(&p.sim) else {
                t.unkeyed += 1;
                return t;
            };
            for dt in DayType::ALL {
                let Some(ind) = p.indicators(dt) else { continue };
                let e = t
                    .rows
                    .entry((dt, cat, group))
                    .or_insert_with(|| (0, vec![0; bins.rg_bins], vec![0; bins.entropy_bins]));
                e.0 += 1;
                match bins.rg_bin(ind.rg_km) {
                    Some(b) => e.1[b - 1] += 1,
                    None => t.dropped_rg += 1,
                }
                match bins.entropy_bin(ind.entropy) {
                    Some(b) => e.2[b - 1] += 1,
                    None => t.dropped_entropy += 1,
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);

    if tally.rows.is_empty() {
        return Err(Error::InvalidArgument("feature matrix is empty: no SIM has a complete key".into()));
    }
    let normalize = |counts: &[u64]| -> Vec<f64> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            vec![0.0; counts.len()]
        } else {
            counts.iter().map(|&c| c as f64 / total as f64).collect()
        }
    };
    let rows = tally
        .rows
        .into_iter()
        .map(|((day_type, cat, group), (sims, rg, en))| FeatureRow {
            key: FeatureKey {
                home_price_category: cat,
                quartile_group: group,
                day_type,
            },
            sims,
            rg: normalize(&rg),
            entropy: normalize(&en),
        })
        .collect();
    Ok(FeatureMatrix {
        bins,
        rows,
        dropped_rg: tally.dropped_rg,
        dropped_entropy: tally.dropped_entropy,
        unkeyed: tally.unkeyed,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcaResult {
    pub mean: Vec<f64>,
    /// Unit loading vectors, one per component, strongest first.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// One row of component coordinates per input row.
    pub scores: Vec<Vec<f64>>,
}

/// Principal components from the eigendecomposition of the sample
/// covariance of the column-centered data. Every loading vector is signed
/// so its largest-magnitude entry is positive.
pub fn run_pca(data: &[Vec<f64>]) -> Result<PcaResult> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("PCA needs at least 2 rows, got {n}")));
    }
    let d = data[0].len();
    if d == 0 || data.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidArgument("PCA rows must be non-empty and of equal width".into()));
    }
    let mut mean = vec![0.0; d];
    for row in data {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = data
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();

    let mut cov = vec![vec![0.0; d]; d];
    for row in &centered {
        for i in 0..d {
            if row[i] == 0.0 {
                continue;
            }
            for j in i..d {
                cov[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= (n - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }

    let SymmetricEigen { values, mut vectors } = symmetric_eigen(cov);
    let eigenvalues: Vec<f64> = values.into_iter().map(|v| v.max(0.0)).collect();
    for v in &mut vectors {
        let mut pivot = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let trace: f64 = eigenvalues.iter().sum();
    let explained_variance_ratio = eigenvalues
        .iter()
        .map(|&v| if trace > 0.0 { v / trace } else { 0.0 })
        .collect();
    let scores = centered
        .iter()
        .map(|r| vectors.iter().map(|c| dot(r, c)).collect())
        .collect();
    Ok(PcaResult {
        mean,
        components: vectors,
        eigenvalues,
        explained_variance_ratio,
        scores,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParetoRow {
    pub component: usize,
    pub ratio: f64,
    pub cumulative: f64,
}

pub fn pareto(result: &PcaResult) -> Vec<ParetoRow> {
    let mut cumulative = 0.0;
    result
        .explained_variance_ratio
        .iter()
        .enumerate()
        .map(|(i, &ratio)| {
            cumulative += ratio;
            ParetoRow {
                component: i + 1,
                ratio,
                cumulative,
            }
        })
        .collect()
}

/// Whether some straight line strictly separates the two labelled point
/// sets in the plane. Exact: candidate directions are taken between the
/// critical angles at which two points project to the same value.
pub fn linearly_separable(points: &[[f64; 2]], labels: &[bool]) -> bool {
    assert_eq!(points.len(), labels.len());
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return true;
    }
    let mut angles = vec![0.0];
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let (dx, dy) = (points[j][0] - points[i][0], points[j][1] - points[i][1]);
            if dx != 0.0 || dy != 0.0 {
                angles.push((dy.atan2(dx) + std::f64::consts::FRAC_PI_2).rem_euclid(std::f64::consts::PI));
            }
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    angles.push(angles[0] + std::f64::consts::PI);
    let separates = |theta: f64| {
        let (c, s) = (theta.cos(), theta.sin());
        let (mut a_min, mut a_max, mut b_min, mut b_max) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for (p, &l) in points.iter().zip(labels) {
            let t = p[0] * c + p[1] * s;
            if l {
                a_min = a_min.min(t);
                a_max = a_max.max(t);
            } else {
                b_min = b_min.min(t);
                b_max = b_max.max(t);
            }
        }
        a_max < b_min || b_max < a_min
    };
    angles.windows(2).any(|w| separates(w[0]) || separates(0.5 * (w[0] + w[1])))
}

fn key_fields(k: &FeatureKey) -> String {
    format!("{},{},{}", k.home_price_category, k.quartile_group, k.day_type)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_feature_matrix(path: &Path, m: &FeatureMatrix) -> Result<()> {
    let mut s = String::from("home_price_category,quartile_group,day_type,sims");
    for b in 1..=m.bins.rg_bins {
        let _ = write!(s, ",rg_{b:02}");
    }
    for b in 1..=m.bins.entropy_bins {
        let _ = write!(s, ",entropy_{b:02}");
    }
    s.push('\n');
    for r in &m.rows {
        let _ = write!(s, "{},{}", key_fields(&r.key), r.sims);
        for x in r.features() {
            let _ = write!(s, ",{x:.9}");
        }
        s.push('\n');
    }
    write_text(path, &s)
}

pub fn write_loadings(path: &Path, bins: &BinSpec, result: &PcaResult) -> Result<()> {
    let mut s = String::from("feature");
    for c in 1..=result.components.len() {
        let _ = write!(s, ",pc{c}");
    }
    s.push('\n');
    let names = (1..=bins.rg_bins)
        .map(|b| format!("rg_{b:02}"))
        .chain((1..=bins.entropy_bins).map(|b| format!("entropy_{b:02}")));
    for (i, name) in names.enumerate() {
        s.push_str(&name);
        for c in &result.components {
            let _ = write!(s, ",{:.9}", c[i]);
        }
        s.push('\n');
    }
    write_text(path, &s)
}

pub fn write_ratios(path: &Path, result: &PcaResult) -> Result<()> {
    let mut s = String::from("component,eigenvalue,ratio,cumulative\n");
    for (row, ev) in pareto(result).iter().zip(&result.eigenvalues) {
        let _ = writeln!(s, "{},{ev:.12},{:.9},{:.9}", row.component, row.ratio, row.cumulative);
    }
    write_text(path, &s)
}

pub fn write_scores(path: &Path, keys: &[FeatureKey], result: &PcaResult) -> Result<()> {
    let mut s = String::from("home_price_category,quartile_group,day_type");
    for c in 1..=result.components.len() {
        let _ = write!(s, ",pc{c}");
    }
    s.push('\n');
    for (k, row) in keys.iter().zip(&result.scores) {
        s.push_str(&key_fields(k));
        for x in row {
            let _ = write!(s, ",{x:.9}");
        }
        s.push('\n');
    }
    write_text(path, &s)
}
