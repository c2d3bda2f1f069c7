//! Recording the first-order equivalent sources during an ordinary run.
//!
//! E-type sources use `H^{n+1/2}` (sampled right after the H update) and
//! H-type sources use `E^n` (sampled right before it), so sample `n` is
//! exactly the inhomogeneous term the differentiated update adds at step `n`.

use crate::fdtd::{FieldState, Node, StepObserver};
use crate::param_map::SourceNode;

/// Time series of one parameter's first-order equivalent sources.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalentSourceRecord {
    pub parameter: String,
    pub nodes: Vec<Node>,
    /// `series[i][n]`: source at `nodes[i]`, step `n`. E nodes carry J, H nodes K.
    pub series: Vec<Vec<f64>>,
}

impl EquivalentSourceRecord {
    /// Index of the first step where `|J| + |K|` summed over nodes exceeds
    /// `rel` times its maximum; `None` for an all-zero record.
    pub fn first_arrival(&self, rel: f64) -> Option<usize> {
        let len = self.series.first().map_or(0, Vec::len);
        let total: Vec<f64> = (0..len).map(|n| self.series.iter().map(|s| s[n].abs()).sum()).collect();
        let peak = total.iter().cloned().fold(0.0f64, f64::max);
        if peak == 0.0 {
            return None;
        }
        total.iter().position(|&v| v > rel * peak)
    }

    /// Rows of `step, cell, component, kind, value` for CSV export.
    pub fn csv_rows(&self) -> impl Iterator<Item = String> + '_ {
        self.nodes.iter().zip(&self.series).flat_map(|(node, s)| {
            let kind = if node.comp.is_electric() { "J" } else { "K" };
            s.iter().enumerate().map(move |(n, v)| format!("{n},{},{},{kind},{v:e}", node.idx + 1, node.comp.name()))
        })
    }
}

/// Records the stencil inputs of a set of source nodes at every step.
///
/// The stored value is `c_n = sum w F`; the first-order source is `D' c_n`.
#[derive(Clone, Debug)]
pub struct StencilRecorder {
    nodes: Vec<SourceNode>,
    /// One series per node.
    pub samples: Vec<Vec<f64>>,
}

impl StencilRecorder {
    pub fn new(nodes: Vec<SourceNode>, nsteps: usize) -> Self {
        let samples = nodes.iter().map(|_| Vec::with_capacity(nsteps)).collect();
        StencilRecorder { nodes, samples }
    }

    pub fn nodes(&self) -> &[SourceNode] {
        &self.nodes
    }

    fn sample(&mut self, f: &FieldState, electric: bool) {
        for (node, out) in self.nodes.iter().zip(self.samples.iter_mut()) {
            if node.node.comp.is_electric() == electric {
                out.push(node.apply(|n| f.get(n)));
            }
        }
    }

    /// First-order equivalent-source record for the recorded nodes.
    pub fn into_record(self, parameter: &str) -> EquivalentSourceRecord {
        let nodes = self.nodes.iter().map(|n| n.node).collect();
        let series = self
            .nodes
            .iter()
            .zip(self.samples)
            .map(|(n, s)| s.into_iter().map(|v| n.factor[1] * v).collect())
            .collect();
        EquivalentSourceRecord { parameter: parameter.to_string(), nodes, series }
    }
}

impl StepObserver for StencilRecorder {
    fn before_h(&mut self, _n: usize, fields: &FieldState) {
        self.sample(fields, false);
    }

    fn after_h(&mut self, _n: usize, fields: &FieldState) {
        self.sample(fields, true);
    }
}

/// Fans one run's observer hooks out to several recorders.
pub struct Recorders<'a>(pub Vec<&'a mut StencilRecorder>);

impl StepObserver for Recorders<'_> {
    fn before_h(&mut self, n: usize, fields: &FieldState) {
        for r in self.0.iter_mut() {
            r.before_h(n, fields);
        }
    }

    fn after_h(&mut self, n: usize, fields: &FieldState) {
        for r in self.0.iter_mut() {
            r.after_h(n, fields);
        }
    }
}
