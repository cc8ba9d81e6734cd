//! Explain-then-evaluate workflows over single texts and annotated corpora.
//!
//! ```
//! use attrbench::{run_instance, InstanceInput, ModelSpec, RunConfig, TargetPolicy};
//! use attrbench_core::{Method, Metric};
//!
//! let spec: ModelSpec = "builtin:lexicon".parse().unwrap();
//! let model = spec.load().unwrap();
//! let mut config = RunConfig::new(spec);
//! config.methods = vec![Method::Loo, Method::PartitionShap];
//! config.metrics = vec![Metric::AopcCompr];
//! config.target = TargetPolicy::Fixed(1);
//! let report = run_instance(model.as_ref(), &config, &InstanceInput::text("ex", "great movie"), None).unwrap();
//! let shap = report.methods[1].metric(Metric::AopcCompr).unwrap();
//! assert!((shap - 0.3808).abs() < 1e-4);
//! ```

pub mod config;
pub mod render;
pub mod report;
pub mod run;

pub use config::{parse_list, ModelSpec, RunConfig, SampleSpec, TargetPolicy, MODEL_URL_ENV};
pub use render::{render_dataset, render_instance, Format};
pub use report::{DatasetReport, InstanceReport, MethodReport, MethodSummary, MetricSummary};
pub use run::{map_label, run_dataset, run_instance, select_instances, InstanceInput};
