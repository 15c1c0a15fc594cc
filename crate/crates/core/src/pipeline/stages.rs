use serde::Serialize;

use super::config::{InputSpec, PipelineConfig};
use super::run::RunDir;
use crate::cluster::{
    clamp_weights, fiedler_dendrogram, shortest_path_graph, threshold_graph, write_dot, write_edges_csv,
    write_nodes_csv,
};
use crate::epidemic::{rank_by_time_to_half, sir_experiment, write_curves_csv};
use crate::error::{Error, Result};
use crate::jointdiag::JdExport;
use crate::modes::{
    decompose_with_basis, kde, majority_accuracy, submode_decompose, GaussComponent, ModeOptions, ModeReport,
};
use crate::netcore::trace::{ingest_trace_with_labels, load_label_map, write_trace_csv};
use crate::netcore::{StaticGraph, SymMatrix, TemporalNetwork};
use crate::rng::{derive_seed, stream};
use crate::sampler::io::{load_batch, write_batch};
use crate::sampler::{filter_indices, prefer_without_edge, sample_batch, BatchSource, SampleBatch, Source};
use crate::synthgen::{gen_switching, write_labels};

/// Histogram bins per 100 trace steps when no bin width is configured.
const DEFAULT_BIN_STEPS: f64 = 100.0;
/// Samples starting within this many steps of a segment switch count as
/// near a boundary.
pub const BOUNDARY_MARGIN_STEPS: usize = 50;

/// Loaded input data.
#[derive(Debug, Clone)]
pub enum Loaded {
    Trace {
        net: TemporalNetwork,
        /// Generating segment of every step, for synthetic schedules.
        segments: Option<Vec<usize>>,
    },
    Graph(StaticGraph),
    Batch(SampleBatch),
}

impl Loaded {
    pub fn labels(&self) -> Option<&[String]> {
        match self {
            Loaded::Trace { net, .. } => Some(net.labels()),
            _ => None,
        }
    }
}

pub(crate) fn path(prefix: &str, name: &str) -> String {
    format!("{prefix}{name}")
}

pub fn load_input(cfg: &PipelineConfig) -> Result<Loaded> {
    let synth_seed = derive_seed(cfg.seed, "synth", 0);
    Ok(match &cfg.input {
        InputSpec::Trace {
            path,
            format,
            granularity,
            label_map,
        } => {
            let map = label_map.as_deref().map(load_label_map).transpose()?;
            let net = ingest_trace_with_labels(path, *format, *granularity, map.as_ref())?;
            Loaded::Trace { net, segments: None }
        }
        InputSpec::Batch { path } => Loaded::Batch(load_batch(path)?),
        InputSpec::Graph { n_nodes, edges } => Loaded::Graph(StaticGraph::from_edges(*n_nodes, edges)?),
        InputSpec::Generator { generator, steps } => Loaded::Trace {
            net: generator.generate(*steps, synth_seed)?,
            segments: None,
        },
        InputSpec::Schedule { schedule } => {
            let (net, labels) = gen_switching(schedule, synth_seed)?;
            Loaded::Trace {
                net,
                segments: Some(labels),
            }
        }
    })
}

/// Writes a generated trace and its segment labels.
pub fn write_synthetic(run: &mut RunDir, prefix: &str, loaded: &Loaded) -> Result<()> {
    let Loaded::Trace { net, segments } = loaded else {
        return Err(Error::invalid("synthetic input did not produce a trace"));
    };
    run.write_with(&path(prefix, "trace.csv"), |buf| write_trace_csv(net, buf))?;
    if let Some(seg) = segments {
        run.write_with(&path(prefix, "segments.csv"), |buf| {
            write_labels(seg, buf).map_err(|e| Error::io("<segments>", e))
        })?;
    }
    Ok(())
}

/// Draws the configured batch, or passes a loaded batch through.
pub fn sample_stage(cfg: &PipelineConfig, loaded: &Loaded) -> Result<SampleBatch> {
    let seed = derive_seed(cfg.seed, "sample", 0);
    let horizon = cfg.sample.horizon.unwrap_or(f64::INFINITY);
    let m = cfg.sample.m;
    match loaded {
        Loaded::Trace { net, .. } => sample_batch(Source::Temporal(net), m, seed, horizon),
        Loaded::Graph(g) => sample_batch(Source::Static(g), m, seed, horizon),
        Loaded::Batch(b) => Ok(b.clone()),
    }
}

pub fn write_batch_file(run: &mut RunDir, prefix: &str, batch: &SampleBatch) -> Result<()> {
    run.write_with(&path(prefix, "batch.csv"), |buf| {
        write_batch(batch, buf).map_err(|e| Error::io("<batch>", e))
    })
}

/// Indices of the batch samples that go into the analysis: the edge filter
/// first, then the completeness filter.
pub fn analysed_indices(cfg: &PipelineConfig, batch: &SampleBatch) -> Vec<usize> {
    let mut idx: Vec<usize> = match cfg.sample.avoid_edge {
        Some(f) => {
            let keep = prefer_without_edge(f.a.into(), f.b.into(), f.keep);
            filter_indices(batch, keep, &mut stream(cfg.seed, "filter", 0))
        }
        None => (0..batch.len()).collect(),
    };
    if cfg.sample.complete_only {
        idx.retain(|&i| !batch.samples[i].partial);
    }
    idx
}

pub fn mode_options(cfg: &PipelineConfig, batch: &SampleBatch) -> ModeOptions {
    let a = &cfg.analysis;
    let granularity = match batch.source {
        BatchSource::Temporal { granularity, .. } => granularity,
        BatchSource::Static => 1.0,
    };
    ModeOptions {
        k_max: a.k_max,
        log_transform: a.log_transform,
        gmm: a.gmm,
        jd: a.jd,
        bin_width: a.bin_width.unwrap_or(DEFAULT_BIN_STEPS * granularity),
        seed: derive_seed(cfg.seed, "modes", 0),
    }
}

#[derive(Debug, Serialize)]
struct ModeSummary {
    mode: usize,
    count: usize,
    component: GaussComponent,
    converged: bool,
    single_sample: bool,
    centrality: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct ReportSummary {
    samples_in_batch: usize,
    samples_analysed: usize,
    k: usize,
    bic_table: Vec<(usize, f64)>,
    log_likelihood: f64,
    gmm_iterations: usize,
    degenerate: bool,
    overall_converged: bool,
    modes: Vec<ModeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    segments: Option<SegmentAgreement>,
}

/// Agreement between modes and the generating segments.
#[derive(Debug, Clone, Serialize)]
pub struct SegmentAgreement {
    pub margin_steps: usize,
    /// Majority-vote accuracy over samples away from every switch.
    pub accuracy_away: f64,
    pub error_near: f64,
    pub error_away: f64,
    pub near: usize,
    pub away: usize,
}

/// Segment of each sample's start step and whether it starts within
/// `margin` steps of a switch.
pub fn sample_segments(batch: &SampleBatch, segments: &[usize], margin: usize) -> Result<(Vec<usize>, Vec<bool>)> {
    let BatchSource::Temporal {
        origin, granularity, ..
    } = batch.source
    else {
        return Err(Error::invalid("segment labels need a temporal batch"));
    };
    if segments.is_empty() {
        return Err(Error::EmptyInput("no segment labels".into()));
    }
    let switches: Vec<usize> = (1..segments.len())
        .filter(|&t| segments[t] != segments[t - 1])
        .collect();
    let mut seg = Vec::with_capacity(batch.len());
    let mut near = Vec::with_capacity(batch.len());
    for s in &batch.samples {
        let step = (((s.start_time - origin) / granularity).floor().max(0.0) as usize).min(segments.len() - 1);
        seg.push(segments[step]);
        near.push(switches.iter().any(|&b| step.abs_diff(b) <= margin));
    }
    Ok((seg, near))
}

fn agreement(assign: &[usize], seg: &[usize], near: &[bool], margin: usize) -> SegmentAgreement {
    let away: Vec<bool> = near.iter().map(|&n| !n).collect();
    let acc_away = majority_accuracy(assign, seg, &away);
    // misassignment judged by the majority mapping learned away from switches
    let mut votes = std::collections::BTreeMap::<usize, std::collections::BTreeMap<usize, usize>>::new();
    for i in 0..assign.len() {
        if away[i] {
            *votes.entry(assign[i]).or_default().entry(seg[i]).or_default() += 1;
        }
    }
    let map = |p: usize| {
        votes
            .get(&p)
            .and_then(|v| v.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(&t, _)| t))
    };
    let err = |want_near: bool| {
        let idx: Vec<usize> = (0..assign.len()).filter(|&i| near[i] == want_near).collect();
        let wrong = idx.iter().filter(|&&i| map(assign[i]) != Some(seg[i])).count();
        (wrong as f64 / idx.len().max(1) as f64, idx.len())
    };
    let (error_near, n_near) = err(true);
    let (error_away, n_away) = err(false);
    SegmentAgreement {
        margin_steps: margin,
        accuracy_away: acc_away,
        error_near,
        error_away,
        near: n_near,
        away: n_away,
    }
}

fn matrix_csv(m: &SymMatrix) -> Vec<u8> {
    let mut out = String::new();
    for i in 0..m.n() {
        let row: Vec<String> = (0..m.n()).map(|j| m.get(i, j).to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

/// Average graph, presentation graphs and dendrogram under `dir`.
fn write_graph_bundle(
    run: &mut RunDir,
    dir: &str,
    hbar: &SymMatrix,
    cfg: &PipelineConfig,
    labels: Option<&[String]>,
) -> Result<()> {
    let a = &cfg.analysis;
    run.write(&path(dir, "hbar.csv"), &matrix_csv(hbar))?;
    let clamped = clamp_weights(hbar);
    let thresholded = StaticGraph::from_adjacency(threshold_graph(&clamped, a.threshold)?)?;
    let sp = shortest_path_graph(hbar, a.epsilon, a.distance)?;
    let io = |e: std::io::Error| Error::io("<dot>", e);
    run.write_with(&path(dir, "threshold.dot"), |b| {
        write_dot(&thresholded, labels, b).map_err(io)
    })?;
    run.write_with(&path(dir, "threshold_edges.csv"), |b| {
        write_edges_csv(&thresholded, labels, b)
    })?;
    run.write_with(&path(dir, "shortest_path.dot"), |b| {
        write_dot(&sp, labels, b).map_err(io)
    })?;
    run.write_with(&path(dir, "shortest_path_edges.csv"), |b| {
        write_edges_csv(&sp, labels, b)
    })?;
    run.write_with(&path(dir, "nodes.csv"), |b| {
        write_nodes_csv(&StaticGraph::from_adjacency(clamped.clone())?, labels, b)
    })?;
    match fiedler_dendrogram(&clamped, a.min_block) {
        Ok(d) => run.write(&path(dir, "dendrogram.nwk"), (d.to_newick(labels) + "\n").as_bytes())?,
        Err(e) => run.warn(format!("{dir}: no dendrogram: {e}")),
    }
    Ok(())
}

/// Writes a mode report whose sample `j` is batch sample `origin[j]`.
#[allow(clippy::too_many_arguments)]
fn write_report(
    run: &mut RunDir,
    prefix: &str,
    report: &ModeReport,
    origin: &[usize],
    batch_len: usize,
    analysed: &SampleBatch,
    cfg: &PipelineConfig,
    labels: Option<&[String]>,
    truth: Option<(&[usize], &[bool])>,
) -> Result<()> {
    if !report.overall_converged {
        run.flag_not_converged(&format!("{prefix}overall joint diagonalisation"));
    }
    for m in &report.modes {
        if !m.converged {
            run.flag_not_converged(&format!("{prefix}joint diagonalisation of mode {}", m.mode));
        }
        if m.single_sample {
            run.warn(format!("{prefix}mode {} has a single sample", m.mode));
        }
    }
    if report.model.degenerate {
        run.warn(format!("{prefix}mixture fit hit the variance floor"));
    }

    let mut deltas = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["sample", "root", "start_time", "delta", "mode"];
    if truth.is_some() {
        header.extend(["segment", "near_switch"]);
    }
    deltas.write_record(&header)?;
    for (j, &i) in origin.iter().enumerate() {
        let s = &analysed.samples[j];
        let mut rec = vec![
            i.to_string(),
            s.root.to_string(),
            s.start_time.to_string(),
            report.deltas[j].to_string(),
            report.model.assignments[j].to_string(),
        ];
        if let Some((seg, near)) = truth {
            rec.push(seg[j].to_string());
            rec.push(near[j].to_string());
        }
        deltas.write_record(&rec)?;
    }
    let bytes = deltas.into_inner().map_err(|e| Error::io("<deltas>", e.into_error()))?;
    run.write(&path(prefix, "deltas.csv"), &bytes)?;

    match kde(&report.deltas, cfg.analysis.kde_points) {
        Ok(curve) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["delta", "density"])?;
            for (x, d) in curve {
                w.write_record([x.to_string(), d.to_string()])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::io("<kde>", e.into_error()))?;
            run.write(&path(prefix, "delta_kde.csv"), &bytes)?;
        }
        Err(e) => run.warn(format!("{prefix}no density estimate: {e}")),
    }

    let mut bic = String::from("k,bic\n");
    for (k, b) in &report.model.bic_table {
        bic.push_str(&format!("{k},{b}\n"));
    }
    run.write(&path(prefix, "bic.csv"), bic.as_bytes())?;

    let h = &report.histogram;
    let mut hist = String::from("mode,bin_start,count\n");
    for (mode, row) in h.counts.iter().enumerate() {
        for (b, c) in row.iter().enumerate() {
            hist.push_str(&format!("{mode},{},{c}\n", h.origin + b as f64 * h.bin_width));
        }
    }
    run.write(&path(prefix, "histogram.csv"), hist.as_bytes())?;

    let summary = ReportSummary {
        samples_in_batch: batch_len,
        samples_analysed: origin.len(),
        k: report.model.k,
        bic_table: report.model.bic_table.clone(),
        log_likelihood: report.model.log_likelihood,
        gmm_iterations: report.model.iterations,
        degenerate: report.model.degenerate,
        overall_converged: report.overall_converged,
        modes: report
            .modes
            .iter()
            .map(|m| ModeSummary {
                mode: m.mode,
                count: m.count(),
                component: report.model.components[m.mode],
                converged: m.converged,
                single_sample: m.single_sample,
                centrality: m.centrality.clone(),
            })
            .collect(),
        segments: truth.map(|(seg, near)| agreement(&report.model.assignments, seg, near, BOUNDARY_MARGIN_STEPS)),
    };
    run.write_json(&path(prefix, "modes.json"), &summary)?;

    write_graph_bundle(run, &path(prefix, "overall/"), &report.overall_hbar, cfg, labels)?;
    for m in &report.modes {
        write_graph_bundle(run, &path(prefix, &format!("mode_{}/", m.mode)), &m.hbar, cfg, labels)?;
    }
    Ok(())
}

/// Joint diagonalisation, mode selection, per-mode graphs and any requested
/// submodes.
pub fn analyse_stage(
    run: &mut RunDir,
    prefix: &str,
    cfg: &PipelineConfig,
    batch: &SampleBatch,
    loaded: &Loaded,
) -> Result<ModeReport> {
    let idx = analysed_indices(cfg, batch);
    let analysed = batch.select(&idx);
    if analysed.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            have: analysed.len(),
        });
    }
    log::info!("{prefix}analysing {} of {} trees", analysed.len(), batch.len());
    let opts = mode_options(cfg, batch);
    let (report, jd) = decompose_with_basis(&analysed, &opts)?;
    log::info!("{prefix}k = {}, JD sweeps {}", report.model.k, jd.sweeps);
    run.write_json(&path(prefix, "jd.json"), &JdExport::from(&jd))?;

    let labels = loaded.labels();
    let truth = match loaded {
        Loaded::Trace {
            segments: Some(seg), ..
        } => Some(sample_segments(&analysed, seg, BOUNDARY_MARGIN_STEPS)?),
        _ => None,
    };
    let truth_ref = truth.as_ref().map(|(s, n)| (s.as_slice(), n.as_slice()));
    write_report(
        run,
        prefix,
        &report,
        &idx,
        batch.len(),
        &analysed,
        cfg,
        labels,
        truth_ref,
    )?;

    for &mode in &cfg.analysis.submodes {
        let sub = match submode_decompose(&report, &analysed, mode, &opts) {
            Ok(s) => s,
            Err(e) => {
                run.warn(format!("{prefix}submodes of mode {mode} skipped: {e}"));
                continue;
            }
        };
        let members = &report.entry(mode).expect("submode_decompose checked the mode").members;
        let origin: Vec<usize> = members.iter().map(|&j| idx[j]).collect();
        let sub_batch = analysed.select(members);
        let sub_truth = truth.as_ref().map(|(s, n)| {
            (
                members.iter().map(|&j| s[j]).collect::<Vec<_>>(),
                members.iter().map(|&j| n[j]).collect::<Vec<_>>(),
            )
        });
        let sub_ref = sub_truth.as_ref().map(|(s, n)| (s.as_slice(), n.as_slice()));
        let sub_prefix = path(prefix, &format!("submode_{mode}/"));
        write_report(
            run,
            &sub_prefix,
            &sub,
            &origin,
            batch.len(),
            &sub_batch,
            cfg,
            labels,
            sub_ref,
        )?;
    }
    Ok(report)
}

/// SIR curves from every seed node and the time-to-half ranking.
pub fn sir_stage(run: &mut RunDir, prefix: &str, cfg: &PipelineConfig, loaded: &Loaded) -> Result<()> {
    let Loaded::Trace { net, .. } = loaded else {
        return Err(Error::invalid(
            "the SIR stage needs a contact trace, not a graph or batch",
        ));
    };
    let sir = cfg.sir.clone().unwrap_or_default();
    log::info!("{prefix}SIR: {} runs from each of {} nodes", sir.runs, net.n_nodes());
    let curves = sir_experiment(
        net,
        &sir.params,
        sir.runs,
        sir.bootstrap,
        derive_seed(cfg.seed, "sir", 0),
    )?;
    run.write_with(&path(prefix, "sir_curves.csv"), |b| {
        write_curves_csv(&curves, Some(net.labels()), b)
    })?;
    let ranking = rank_by_time_to_half(&curves, net.n_nodes(), Some(net.labels()));
    run.write_json(&path(prefix, "sir_ranking.json"), &ranking)
}
