//! Batch scoring with a saved model, and MLP weight-graph export.

use std::fs;
use std::path::Path;

use lendrisk_core::grid::Model;
use serde::{Deserialize, Serialize};

use crate::artifact::{load_pair, read_json, ModelArtifact};
use crate::config::Phase;
use crate::error::{Error, Result, StageExt};
use crate::ingest::{phase1_features, phase2_features, ParseSummary, RecordReader, SetBuilder, Source};
use crate::report::write_rows;
use crate::schema::ColumnMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictSummary {
    pub model_id: String,
    pub preprocess_id: String,
    pub source: Source,
    pub parse: ParseSummary,
    pub scored: usize,
}

/// Opens `input` in the schema the model's phase reads. Phase-one models accept
/// either file layout; the accepted layout is tried first.
fn open_input(phase: Phase, input: &Path, columns: &ColumnMap) -> Result<RecordReader<fs::File>> {
    match RecordReader::open(input, Source::Accepted, columns) {
        Err(Error::MissingColumns { .. }) if phase == Phase::One => {
            RecordReader::open(input, Source::Rejected, columns)
        }
        r => r,
    }
}

/// Appends `score` and `predicted_class` to every row of `input` that has a
/// parseable date. The preprocess state is applied as saved, never refit.
pub fn predict(
    model_path: &Path,
    preprocess_path: Option<&Path>,
    input: &Path,
    output: &Path,
    columns: &ColumnMap,
) -> Result<PredictSummary> {
    let (model, preprocess) = load_pair(model_path, preprocess_path).stage("load")?;
    let mut reader = open_input(model.phase, input, columns).stage("ingest")?;
    let source = reader.summary().source;
    let mut header: Vec<String> = reader.headers().stage("ingest")?.iter().map(str::to_string).collect();
    header.extend(["score".to_string(), "predicted_class".to_string()]);

    let mut builder = match model.phase {
        Phase::One => SetBuilder::phase1(),
        Phase::Two => SetBuilder::phase2(),
    };
    let mut raw_rows = Vec::new();
    while let Some(next) = reader.next_raw() {
        let (raw, rec) = next.stage("ingest")?;
        let Some(rec) = rec else { continue };
        match model.phase {
            Phase::One => {
                let (num, cat) = phase1_features(&rec);
                builder.push(&num, &cat, rec.date, 0);
            }
            Phase::Two => {
                let (num, cat) = phase2_features(&rec);
                builder.push(&num, &cat, rec.date, 0);
            }
        }
        raw_rows.push(raw);
    }
    let set = builder.finish().stage("preprocess")?;
    let (x, _) = preprocess.state.apply(&set).map_err(Error::from).stage("preprocess")?;
    let scores = model.model.scores(&x).map_err(Error::from).stage("score")?;
    let threshold = model.model.threshold();

    let rows = raw_rows.into_iter().zip(&scores).map(|(raw, &s)| {
        let mut row: Vec<String> = raw.iter().map(str::to_string).collect();
        row.push(s.to_string());
        row.push(u8::from(s >= threshold).to_string());
        row
    });
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(output, &header_refs, rows).stage("write")?;
    Ok(PredictSummary {
        model_id: model.model_id,
        preprocess_id: model.preprocess_id,
        source,
        parse: reader.summary().clone(),
        scored: scores.len(),
    })
}

/// Node list and edge list of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode {
    pub id: usize,
    pub layer: usize,
    pub index: usize,
    pub name: String,
    /// Sum of absolute weights on edges leaving this node.
    pub outgoing: f64,
    /// `outgoing` divided by the largest `outgoing` in the graph (0 if all are 0).
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEdge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

pub fn weight_graph(artifact: &ModelArtifact) -> Result<WeightGraph> {
    let Model::Mlp(params) = &artifact.model else {
        return Err(Error::NotMlp(artifact.hyperparams.label()));
    };
    let sizes = &params.layer_sizes;
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut total = 0;
    for &s in sizes {
        offsets.push(total);
        total += s;
    }
    let last = sizes.len() - 1;
    let mut nodes: Vec<GraphNode> = sizes
        .iter()
        .enumerate()
        .flat_map(|(layer, &n)| (0..n).map(move |index| (layer, index)))
        .map(|(layer, index)| GraphNode {
            id: offsets[layer] + index,
            layer,
            index,
            name: match layer {
                0 => artifact.feature_names.get(index).cloned().unwrap_or_else(|| format!("x{index}")),
                l if l == last => "output".to_string(),
                l => format!("h{l}_{index}"),
            },
            outgoing: 0.0,
            normalized: 0.0,
        })
        .collect();
    let mut edges = Vec::new();
    for (l, layer) in params.layers.iter().enumerate() {
        for j in 0..layer.inputs {
            for i in 0..layer.outputs {
                let w = layer.weights[i * layer.inputs + j];
                let source = offsets[l] + j;
                nodes[source].outgoing += w.abs();
                edges.push(GraphEdge { source, target: offsets[l + 1] + i, weight: w });
            }
        }
    }
    let max = nodes.iter().map(|n| n.outgoing).fold(0.0, f64::max);
    if max > 0.0 {
        for n in &mut nodes {
            n.normalized = n.outgoing / max;
        }
    }
    Ok(WeightGraph { nodes, edges })
}

pub const NODES_FILE: &str = "nodes.csv";
pub const EDGES_FILE: &str = "edges.csv";

/// Writes `nodes.csv` and `edges.csv` for an MLP artifact into `out_dir`.
pub fn export_network_weights(model_path: &Path, out_dir: &Path) -> Result<WeightGraph> {
    let artifact: ModelArtifact = read_json(model_path).stage("load")?;
    let graph = weight_graph(&artifact).stage("load")?;
    let written = (|| -> Result<()> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let nodes = graph.nodes.iter().map(|n| {
            vec![
                n.id.to_string(),
                n.layer.to_string(),
                n.index.to_string(),
                n.name.clone(),
                n.outgoing.to_string(),
                n.normalized.to_string(),
            ]
        });
        write_rows(
            &out_dir.join(NODES_FILE),
            &["id", "layer", "index", "name", "outgoing_abs_weight", "normalized"],
            nodes,
        )?;
        let edges = graph.edges.iter().map(|e| vec![e.source.to_string(), e.target.to_string(), e.weight.to_string()]);
        write_rows(&out_dir.join(EDGES_FILE), &["source", "target", "weight"], edges)
    })();
    written.stage("write")?;
    Ok(graph)
}
