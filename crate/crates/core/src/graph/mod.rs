//! Movement ingestion, temporal networks, splits and adjacency structures.

mod ingest;
mod network;
mod sparse;
mod universe;

pub use ingest::{
    ingest_movements, write_movements, ColumnSchema, IngestOptions, IngestReport, MovementRecord,
    RowDiagnostic, RowErrorPolicy,
};
pub use network::{
    build_adjacency, build_network, temporal_split, AdjacencyMode, CoordinateConflict, Edge,
    NodeRegistry, SplitSpec, Splits, TemporalNetwork, YearRange,
};
pub use sparse::SparseMatrix;
pub use universe::{candidate_pairs, CandidateUniverse};
