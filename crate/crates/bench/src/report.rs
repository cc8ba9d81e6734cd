use attrbench_core::{Direction, EvaluationScore, Explanation, Method, Metric};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// One explainer's output on one instance, with its metric scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<Explanation>,
    #[serde(default)]
    pub metrics: Vec<EvaluationScore>,
    /// Set when the explainer or a metric failed; other methods are unaffected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Fresh model evaluations (including gradient requests) for this method.
    pub model_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl MethodReport {
    pub fn metric(&self, metric: Metric) -> Option<f64> {
        self.metrics
            .iter()
            .find(|s| s.metric == metric)
            .and_then(|s| s.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub id: String,
    pub text: String,
    /// Content tokens the scores refer to.
    pub tokens: Vec<String>,
    pub target: usize,
    pub target_label: String,
    /// Model probabilities for the unperturbed input.
    pub probabilities: Vec<f64>,
    /// Token-level human rationale, when one was supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_rationale: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub methods: Vec<MethodReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl InstanceReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn model_calls(&self) -> usize {
        self.methods.iter().map(|m| m.model_calls).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: Metric,
    pub direction: Direction,
    /// Mean over instances where the metric is defined.
    pub mean: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub metrics: Vec<MetricSummary>,
    /// Instances on which this method failed.
    pub failures: usize,
}

impl MethodSummary {
    pub fn metric(&self, metric: Metric) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.metric == metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub corpus: String,
    pub model_id: String,
    pub config: RunConfig,
    /// Rationale length used to discretize explanations for IOU and F1.
    pub top_k: usize,
    /// Ids of the evaluated instances, in processing order.
    pub selected: Vec<String>,
    pub summary: Vec<MethodSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<Vec<InstanceReport>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl DatasetReport {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.summary.iter().find(|m| m.method == method)
    }
}

/// Per-method, per-metric means over the non-missing instance values.
pub fn summarize(methods: &[Method], metrics: &[Metric], instances: &[InstanceReport]) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&method| {
            let runs: Vec<&MethodReport> = instances.iter().filter_map(|r| r.method(method)).collect();
            let metrics = metrics
                .iter()
                .map(|&metric| {
                    let values: Vec<f64> = runs.iter().filter_map(|r| r.metric(metric)).collect();
                    let mean = (!values.is_empty())
                        .then(|| values.iter().sum::<f64>() / values.len() as f64);
                    MetricSummary {
                        metric,
                        direction: metric.direction(),
                        mean,
                        count: values.len(),
                    }
                })
                .collect();
            MethodSummary {
                method,
                metrics,
                failures: runs.iter().filter(|r| r.error.is_some()).count(),
            }
        })
        .collect()
}
