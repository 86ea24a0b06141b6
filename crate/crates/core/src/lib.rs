//! Circuits as bond graphs, and a graph convolutional network that
//! classifies them.
//!
//! The pipeline runs netlist text through [`netlist`] (parsing and
//! validation), [`bondgraph`] (junction structure, switch cells and the DCM
//! virtual switch) and [`mod@featurize`] (node features and weighted adjacency)
//! into a [`GraphSample`]. [`datagen`] builds and persists whole datasets from
//! built-in circuit classes, [`gcn`] trains the classifier and [`metrics`]
//! scores it. [`cli`] wires these into the `circuit-graph` binary.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod bondgraph;
pub mod cli;
pub mod datagen;
pub mod experiments;
pub mod featurize;
pub mod gcn;
pub mod metrics;
pub mod netlist;
pub mod scalar;

pub use bondgraph::{to_bond_graph, BondGraph};
pub use datagen::{Dataset, Suite};
pub use featurize::{featurize, FeatureConfig, GraphSample};
pub use gcn::{GcnModel, TrainConfig};
pub use metrics::EvalReport;
pub use netlist::{parse_netlist, Circuit};
pub use scalar::Scalar;

pub type GraphSampleF32 = GraphSample<f32>;
pub type GraphSampleF64 = GraphSample<f64>;
pub type GcnModelF32 = GcnModel<f32>;
pub type GcnModelF64 = GcnModel<f64>;
pub type GradientsF32 = gcn::Gradients<f32>;
pub type GradientsF64 = gcn::Gradients<f64>;
pub type PreparedGraphF32 = gcn::PreparedGraph<f32>;
pub type PreparedGraphF64 = gcn::PreparedGraph<f64>;
