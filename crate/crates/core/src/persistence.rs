//! Persistence of a cross-sectional distribution: Pearson correlation of the
//! same entities between two years, its geometric decay with lag, and the
//! implied half-life.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{fmt_f64, PanelTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistenceEntry {
    /// Later year of the pair.
    pub t: i32,
    pub tau: i32,
    pub rho: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceMatrix {
    pub entries: Vec<PersistenceEntry>,
    /// Year pairs whose correlation could not be computed.
    pub failed_pairs: Vec<(i32, i32)>,
}

/// Pearson correlation between two years over the entities present in both.
pub fn cross_section_corr(p: &PanelTable, t1: i32, t2: i32) -> Result<(f64, usize)> {
    let a = p.cross_section(t1);
    let b = p.cross_section(t2);
    let pairs: Vec<(f64, f64)> = a.iter().filter_map(|(k, x)| b.get(k).map(|y| (*x, *y))).collect();
    let n = pairs.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "years {t1} and {t2} share {n} entities (need >= 3)"
        )));
    }
    let rho = pearson(&pairs).ok_or_else(|| Error::ZeroVariance(format!("cross-section {t1} or {t2}")))?;
    Ok((if t1 == t2 { 1.0 } else { rho }, n))
}

fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// One entry per unordered pair of distinct observation years.
pub fn persistence_matrix(p: &PanelTable, observation_years: &[i32]) -> Result<PersistenceMatrix> {
    let mut years = observation_years.to_vec();
    years.sort_unstable();
    years.dedup();
    if years.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 observation years".into()));
    }
    let mut m = PersistenceMatrix::default();
    for (k, &early) in years.iter().enumerate() {
        for &late in &years[k + 1..] {
            match cross_section_corr(p, late, early) {
                Ok((rho, n)) => m.entries.push(PersistenceEntry {
                    t: late,
                    tau: late - early,
                    rho,
                    n,
                }),
                Err(_) => m.failed_pairs.push((early, late)),
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DeltaWeighting {
    #[default]
    Unweighted,
    /// Weight each correlation by its number of common entities.
    ByCount,
    /// Weight each correlation by its lag.
    ByLag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    /// Regression standard error of the log-slope, propagated to delta.
    pub stderr: f64,
    pub n_pairs: usize,
    /// Entries dropped because rho <= 0.
    pub excluded: usize,
}

/// Fits `ln rho = tau ln(1 - delta)` through the origin.
///
/// A positive fitted slope (persistence growing with lag) is reported as
/// `delta = 0`.
pub fn estimate_delta(m: &PersistenceMatrix, weighting: DeltaWeighting) -> Result<DeltaEstimate> {
    let used: Vec<&PersistenceEntry> = m.entries.iter().filter(|e| e.rho > 0.0).collect();
    let excluded = m.entries.len() - used.len();
    let mut lags: Vec<i32> = used.iter().map(|e| e.tau).collect();
    lags.sort_unstable();
    lags.dedup();
    if lags.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "delta fit needs >= 2 distinct lags with rho > 0 (have {})",
            lags.len()
        )));
    }
    let weight = |e: &PersistenceEntry| match weighting {
        DeltaWeighting::Unweighted => 1.0,
        DeltaWeighting::ByCount => e.n as f64,
        DeltaWeighting::ByLag => e.tau as f64,
    };
    let (mut swxy, mut swxx) = (0.0, 0.0);
    for e in &used {
        let (w, x, y) = (weight(e), e.tau as f64, e.rho.ln());
        swxy += w * x * y;
        swxx += w * x * x;
    }
    let slope = swxy / swxx;
    let n = used.len();
    let ssr: f64 = used
        .iter()
        .map(|e| weight(e) * (e.rho.ln() - slope * e.tau as f64).powi(2))
        .sum();
    let se_slope = (ssr / ((n as f64 - 1.0) * swxx)).sqrt();

    let delta = (1.0 - slope.exp()).max(0.0);
    Ok(DeltaEstimate {
        delta,
        stderr: slope.exp() * se_slope,
        n_pairs: n,
        excluded,
    })
}

pub fn half_life(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParams(format!(
            "half-life needs 0 < delta < 1 (got {delta})"
        )));
    }
    Ok(0.5f64.ln() / (1.0 - delta).ln())
}

/// Per-year erosion `1 - rho^(1/tau)` of every entry with positive rho.
pub fn erosions(m: &PersistenceMatrix) -> Vec<f64> {
    m.entries
        .iter()
        .filter(|e| e.rho > 0.0 && e.tau > 0)
        .map(|e| 1.0 - e.rho.powf(1.0 / e.tau as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width histogram over the observed range.
pub fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            lo: lo + k as f64 * width,
            hi: lo + (k + 1) as f64 * width,
            count,
        })
        .collect()
}

pub fn write_matrix_csv<W: Write>(sink: W, m: &PersistenceMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["t", "tau", "rho", "n"])?;
    for e in &m.entries {
        w.write_record([e.t.to_string(), e.tau.to_string(), fmt_f64(e.rho), e.n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_histogram_csv<W: Write>(sink: W, bins: &[HistogramBin]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["lo", "hi", "count"])?;
    for b in bins {
        w.write_record([fmt_f64(b.lo), fmt_f64(b.hi), b.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON summary: `delta`, `stderr`, `n_pairs`, `half_life_years`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub delta: f64,
    pub stderr: f64,
    pub n_pairs: usize,
    pub half_life_years: Option<f64>,
    pub excluded_nonpositive: usize,
}

impl From<&DeltaEstimate> for DeltaReport {
    fn from(d: &DeltaEstimate) -> Self {
        Self {
            delta: d.delta,
            stderr: d.stderr,
            n_pairs: d.n_pairs,
            half_life_years: half_life(d.delta).ok(),
            excluded_nonpositive: d.excluded,
        }
    }
}

/// Builds a matrix whose correlations decay exactly as `(1 - delta)^tau`.
pub fn exact_matrix(delta: f64, years: &[i32], n: usize) -> PersistenceMatrix {
    let mut m = PersistenceMatrix::default();
    for (k, &a) in years.iter().enumerate() {
        for &b in &years[k + 1..] {
            let tau = (b - a).abs();
            m.entries.push(PersistenceEntry {
                t: a.max(b),
                tau,
                rho: (1.0 - delta).powi(tau),
                n,
            });
        }
    }
    m
}

/// `exact_matrix` with each entry multiplied by `exp(sigma z)`, `z` standard
/// normal, drawn from the run's generator.
pub fn perturbed_matrix(delta: f64, years: &[i32], n: usize, sigma: f64, seed: u64) -> PersistenceMatrix {
    let mut rng = crate::simulate::entity_rng(seed, 0);
    let mut m = exact_matrix(delta, years, n);
    for e in &mut m.entries {
        let z: f64 = rng.sample(StandardNormal);
        e.rho *= (sigma * z).exp();
    }
    m
}

/// Panel whose year-to-year cross-sections have Pearson correlation exactly
/// `(1 - delta)^tau` for every pair. Built from orthonormal components: year
/// `t` is `sum_k c_k(t) u_k` with an AR(1)-style recursion on the weights.
pub fn exact_persistence_panel(delta: f64, years: &[i32], entities: usize) -> Result<PanelTable> {
    let span = years.len();
    if entities < span + 2 {
        return Err(Error::InvalidParams(format!(
            "need at least {} entities for {} years",
            span + 2,
            span
        )));
    }
    let basis = orthonormal_centered_basis(entities, span);
    let r = 1.0 - delta;
    let mut coeffs: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    // x_t = r^(dt) x_{t-1} + sqrt(1 - r^(2 dt)) u_t keeps unit norm and the
    // required correlation with every earlier year.
    coeffs.insert(0, {
        let mut c = vec![0.0; span];
        c[0] = 1.0;
        c
    });
    for t in 1..span {
        let dt = years[t] - years[t - 1];
        let decay = r.powi(dt);
        let mut c: Vec<f64> = coeffs[&(t - 1)].iter().map(|v| v * decay).collect();
        c[t] = (1.0 - decay * decay).sqrt();
        coeffs.insert(t, c);
    }
    let mut table = PanelTable::new();
    for (t, year) in years.iter().enumerate() {
        for e in 0..entities {
            let v: f64 = (0..span).map(|k| coeffs[&t][k] * basis[k][e]).sum();
            table.insert(&crate::simulate::entity_code(e), *year, v)?;
        }
    }
    Ok(table)
}

/// `m` mutually orthonormal, zero-mean vectors of length `n` (Gram-Schmidt on
/// a fixed deterministic sequence).
fn orthonormal_centered_basis(n: usize, m: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut k = 1usize;
    while out.len() < m {
        let mut v: Vec<f64> = (0..n)
            .map(|i| ((i as f64 + 1.0) * (k as f64) * 0.754_877_666).sin())
            .collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= mean);
        for _ in 0..2 {
            for b in &out {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        k += 1;
        if norm < 1e-6 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        out.push(v);
    }
    out
}
