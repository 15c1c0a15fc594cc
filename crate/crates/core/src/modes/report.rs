use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gmm::{select_modes, transform_deltas, GmmOptions, ModeModel};
use crate::error::{Error, Result};
use crate::jointdiag::{joint_diagonalise, reconstruct_average, JdOptions, JdResult};
use crate::netcore::SymMatrix;
use crate::sampler::{BatchSource, SampleBatch};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeOptions {
    pub k_max: usize,
    /// Fit the mixture on `ln(1 + δ)` instead of raw δ.
    pub log_transform: bool,
    pub gmm: GmmOptions,
    pub jd: JdOptions,
    /// Width of start-time histogram bins, in seconds.
    pub bin_width: f64,
    pub seed: u64,
}

impl Default for ModeOptions {
    fn default() -> Self {
        ModeOptions {
            k_max: 8,
            log_transform: false,
            gmm: GmmOptions::default(),
            jd: JdOptions::default(),
            bin_width: 1.0,
            seed: 0,
        }
    }
}

/// Start-time histograms, one row per mode, with bins aligned to the trace
/// start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeHistogram {
    pub origin: f64,
    pub bin_width: f64,
    pub counts: Vec<Vec<usize>>,
}

fn time_window(batch: &SampleBatch) -> (f64, f64) {
    match batch.source {
        BatchSource::Temporal { origin, span_end, .. } => (origin, span_end),
        BatchSource::Static => {
            let t = batch.start_times();
            let lo = t.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() {
                (lo, hi)
            } else {
                (0.0, 0.0)
            }
        }
    }
}

pub fn mode_time_histogram(model: &ModeModel, batch: &SampleBatch, bin_width: f64) -> Result<TimeHistogram> {
    histogram_for(&model.assignments, model.k, batch, bin_width)
}

fn histogram_for(assignments: &[usize], k: usize, batch: &SampleBatch, bin_width: f64) -> Result<TimeHistogram> {
    if assignments.len() != batch.len() {
        return Err(Error::DimensionMismatch {
            expected: batch.len(),
            got: assignments.len(),
        });
    }
    if !(bin_width > 0.0) {
        return Err(Error::invalid(format!("bin width must be positive, got {bin_width}")));
    }
    let (origin, end) = time_window(batch);
    let bins = (((end - origin) / bin_width).ceil() as usize).max(1);
    let mut counts = vec![vec![0; bins]; k];
    for (s, &a) in batch.samples.iter().zip(assignments) {
        let b = (((s.start_time - origin) / bin_width).floor().max(0.0) as usize).min(bins - 1);
        counts[a][b] += 1;
    }
    Ok(TimeHistogram {
        origin,
        bin_width,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEntry {
    /// Component index in the mixture (sorted by mean deviation).
    pub mode: usize,
    /// Indices into the analysed batch.
    pub members: Vec<usize>,
    pub histogram: Vec<usize>,
    pub hbar: SymMatrix,
    /// First column of the mode's average basis.
    pub centrality: Vec<f64>,
    pub converged: bool,
    /// The mode had a single member, so `hbar` is that sample's matrix.
    pub single_sample: bool,
}

impl ModeEntry {
    pub fn count(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub overall_hbar: SymMatrix,
    pub overall_converged: bool,
    /// Deviation of each sample in the overall basis.
    pub deltas: Vec<f64>,
    pub model: ModeModel,
    pub histogram: TimeHistogram,
    /// Nonempty modes only, in component order.
    pub modes: Vec<ModeEntry>,
}

impl ModeReport {
    pub fn all_converged(&self) -> bool {
        self.overall_converged && self.modes.iter().all(|m| m.converged)
    }

    pub fn entry(&self, mode: usize) -> Option<&ModeEntry> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

fn centrality(jd: &JdResult) -> Vec<f64> {
    jd.basis.column(0)
}

fn reconstruct(mats: &[SymMatrix], opts: &JdOptions) -> Result<(SymMatrix, Vec<f64>, bool)> {
    let jd = joint_diagonalise(mats, *opts)?;
    let hbar = reconstruct_average(&jd, true)?;
    Ok((hbar, centrality(&jd), jd.converged))
}

/// Runs JD and mixture selection over a whole batch and reconstructs one
/// average graph per mode.
pub fn decompose(batch: &SampleBatch, opts: &ModeOptions) -> Result<ModeReport> {
    decompose_with_basis(batch, opts).map(|(report, _)| report)
}

/// [`decompose`], also returning the overall JD result.
pub fn decompose_with_basis(batch: &SampleBatch, opts: &ModeOptions) -> Result<(ModeReport, JdResult)> {
    let mats: Vec<SymMatrix> = batch.samples.par_iter().map(|s| s.matrix()).collect();
    let jd = joint_diagonalise(&mats, opts.jd)?;
    let x = transform_deltas(&jd.deviations, opts.log_transform);
    let model = select_modes(&x, opts.k_max, opts.seed, &opts.gmm)?;
    let report = build_report(&mats, batch, &jd, model, opts)?;
    Ok((report, jd))
}

/// Per-mode average graphs for an already fitted model. The overall basis
/// is recomputed from the batch.
pub fn per_mode_reconstruction(model: &ModeModel, batch: &SampleBatch, opts: &ModeOptions) -> Result<ModeReport> {
    if model.assignments.len() != batch.len() {
        return Err(Error::DimensionMismatch {
            expected: batch.len(),
            got: model.assignments.len(),
        });
    }
    let mats: Vec<SymMatrix> = batch.samples.par_iter().map(|s| s.matrix()).collect();
    let jd = joint_diagonalise(&mats, opts.jd)?;
    build_report(&mats, batch, &jd, model.clone(), opts)
}

fn build_report(
    mats: &[SymMatrix],
    batch: &SampleBatch,
    jd: &JdResult,
    model: ModeModel,
    opts: &ModeOptions,
) -> Result<ModeReport> {
    let overall_hbar = reconstruct_average(jd, true)?;
    let histogram = mode_time_histogram(&model, batch, opts.bin_width)?;
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &a) in model.assignments.iter().enumerate() {
        groups.entry(a).or_default().push(i);
    }
    for mode in (0..model.k).filter(|m| !groups.contains_key(m)) {
        log::warn!("mode {mode} has no members and is dropped");
    }
    let modes = groups
        .into_par_iter()
        .map(|(mode, members)| {
            let sub: Vec<SymMatrix> = members.iter().map(|&i| mats[i].clone()).collect();
            let (hbar, centrality, converged, single) = if sub.len() < 2 {
                log::warn!("mode {mode} has a single member; its average is that sample");
                (sub[0].clone(), Vec::new(), true, true)
            } else {
                let (h, c, ok) = reconstruct(&sub, &opts.jd)?;
                (h, c, ok, false)
            };
            Ok(ModeEntry {
                mode,
                histogram: histogram.counts[mode].clone(),
                members,
                hbar,
                centrality,
                converged,
                single_sample: single,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeReport {
        overall_hbar,
        overall_converged: jd.converged,
        deltas: jd.deviations.clone(),
        model,
        histogram,
        modes,
    })
}

/// Reruns the whole decomposition on one mode's members: a fresh JD basis,
/// fresh deviations and a fresh mixture. Member indices in the result refer
/// to the original batch.
pub fn submode_decompose(
    report: &ModeReport,
    batch: &SampleBatch,
    mode: usize,
    opts: &ModeOptions,
) -> Result<ModeReport> {
    let entry = report
        .entry(mode)
        .ok_or_else(|| Error::invalid(format!("no mode {mode} in report")))?;
    let needed = 2 * opts.k_max;
    if entry.count() < needed {
        return Err(Error::TooFewSamples {
            needed,
            have: entry.count(),
        });
    }
    let sub = batch.select(&entry.members);
    let mut inner = decompose(&sub, opts)?;
    for m in &mut inner.modes {
        for i in &mut m.members {
            *i = entry.members[*i];
        }
    }
    Ok(inner)
}

/// Maps each predicted mode to the true label it most often coincides with
/// (over samples where `mask` is true) and returns the fraction of masked
/// samples whose mapped label is correct. Ties go to the smaller label.
pub fn majority_accuracy(predicted: &[usize], truth: &[usize], mask: &[bool]) -> f64 {
    let mut votes: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for ((&p, &t), _) in predicted.iter().zip(truth).zip(mask).filter(|(_, &m)| m) {
        *votes.entry(p).or_default().entry(t).or_default() += 1;
    }
    let mapping: BTreeMap<usize, usize> = votes
        .iter()
        .map(|(&p, v)| {
            let best = v
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(&t, _)| t)
                .unwrap();
            (p, best)
        })
        .collect();
    let total = mask.iter().filter(|&&m| m).count();
    if total == 0 {
        return 0.0;
    }
    let right = predicted
        .iter()
        .zip(truth)
        .zip(mask)
        .filter(|((p, t), &m)| m && mapping.get(p) == Some(t))
        .count();
    right as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::{NodeId, StaticGraph};
    use crate::sampler::{sample_batch, Source, TreeSample};

    fn star_and_path(m: usize) -> SampleBatch {
        let star = StaticGraph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let path = StaticGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let a = sample_batch(Source::Static(&star), m, 1, f64::INFINITY).unwrap();
        let b = sample_batch(Source::Static(&path), m, 2, f64::INFINITY).unwrap();
        let mut samples = a.samples;
        samples.extend(b.samples);
        SampleBatch { samples, ..a }
    }

    #[test]
    fn histogram_of_single_mode_is_overall() {
        let mut batch = star_and_path(10);
        for (i, s) in batch.samples.iter_mut().enumerate() {
            s.start_time = i as f64;
        }
        let assignments = vec![0; batch.len()];
        let h = histogram_for(&assignments, 1, &batch, 5.0).unwrap();
        assert_eq!(h.counts.len(), 1);
        assert_eq!(h.counts[0].iter().sum::<usize>(), 20);
        assert_eq!(h.counts[0], vec![5, 5, 5, 5]);
    }

    #[test]
    fn planted_generators_split_into_modes() {
        let batch = star_and_path(60);
        let opts = ModeOptions {
            k_max: 4,
            ..Default::default()
        };
        let report = decompose(&batch, &opts).unwrap();
        let mut covered: Vec<usize> = report.modes.iter().flat_map(|m| m.members.clone()).collect();
        covered.sort();
        assert_eq!(covered, (0..batch.len()).collect::<Vec<_>>());
        assert!(report.all_converged());
    }

    #[test]
    fn single_member_mode_uses_sample_matrix() {
        let t = TreeSample::from_edges(3, NodeId(0), 0.0, &[(NodeId(1), NodeId(0)), (NodeId(2), NodeId(0))]).unwrap();
        let u = TreeSample::from_edges(3, NodeId(1), 0.0, &[(NodeId(0), NodeId(1)), (NodeId(2), NodeId(0))]).unwrap();
        let v = TreeSample::from_edges(3, NodeId(2), 0.0, &[(NodeId(0), NodeId(2)), (NodeId(1), NodeId(0))]).unwrap();
        let batch = SampleBatch {
            samples: vec![t.clone(), u, v],
            n_nodes: 3,
            seed: 0,
            source: BatchSource::Static,
        };
        let mut model = super::super::gmm::fit_gmm_1d(&[0.0, 1.0, 1.1], 1, 0, &GmmOptions::default()).unwrap();
        model.k = 2;
        model.assignments = vec![1, 0, 0];
        let report = per_mode_reconstruction(&model, &batch, &ModeOptions::default()).unwrap();
        let single = report.entry(1).unwrap();
        assert!(single.single_sample);
        assert_eq!(single.hbar, t.matrix());
    }

    #[test]
    fn submode_needs_enough_members() {
        let batch = star_and_path(3);
        let opts = ModeOptions {
            k_max: 8,
            ..Default::default()
        };
        let report = decompose(&batch, &opts).unwrap();
        let mode = report.modes[0].mode;
        assert!(matches!(
            submode_decompose(&report, &batch, mode, &opts),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn majority_accuracy_maps_labels() {
        let pred = [0, 0, 1, 1, 1, 2];
        let truth = [5, 5, 7, 7, 5, 7];
        let mask = [true; 6];
        assert!((majority_accuracy(&pred, &truth, &mask) - 5.0 / 6.0).abs() < 1e-12);
        let mask = [true, true, true, true, false, true];
        assert_eq!(majority_accuracy(&pred, &truth, &mask), 1.0);
    }
}
