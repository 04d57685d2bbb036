use thiserror::Error;

/// Errors raised anywhere in the lattice construction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid graph: {message}")]
    Validation {
        message: String,
        node: Option<u64>,
        edge: Option<u64>,
    },

    #[error("unknown node id {0}")]
    UnknownNode(u64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "invalid cut on edge {edge} at node {node}: cut length {cut_length} leaves no strut \
         (available {available})"
    )]
    InvalidCut {
        edge: u64,
        node: u64,
        cut_length: f64,
        available: f64,
    },

    #[error("degenerate input at node {node:?}: {message}")]
    Degenerate { node: Option<u64>, message: String },

    #[error("projection fold on the end circle of edge {edge} at node {node}")]
    ProjectionFold { node: u64, edge: u64 },

    #[error("ray from node {node} does not meet the strut of edge {edge}")]
    NoIntersection { node: u64, edge: u64 },

    #[error("non-manifold mesh: {0}")]
    NonManifold(String),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("seam mismatch: {0}")]
    SeamMismatch(String),

    #[error("nothing to export")]
    NothingToExport,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(message: impl Into<String>) -> Self {
        Error::Validation {
            message: message.into(),
            node: None,
            edge: None,
        }
    }

    pub(crate) fn invalid_node(node: u64, message: impl Into<String>) -> Self {
        Error::Validation {
            message: message.into(),
            node: Some(node),
            edge: None,
        }
    }

    pub(crate) fn invalid_edge(edge: u64, message: impl Into<String>) -> Self {
        Error::Validation {
            message: message.into(),
            node: None,
            edge: Some(edge),
        }
    }

    /// True for failures caused by the caller's input rather than by a broken
    /// internal invariant.
    pub fn is_user_error(&self) -> bool {
        !matches!(
            self,
            Error::NonManifold(_) | Error::Solver(_) | Error::SeamMismatch(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Validation { .. } => "validation",
            Error::UnknownNode(_) => "unknown_node",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidCut { .. } => "invalid_cut",
            Error::Degenerate { .. } => "degenerate",
            Error::ProjectionFold { .. } => "projection_fold",
            Error::NoIntersection { .. } => "no_intersection",
            Error::NonManifold(_) => "non_manifold",
            Error::Solver(_) => "solver",
            Error::SeamMismatch(_) => "seam_mismatch",
            Error::NothingToExport => "nothing_to_export",
            Error::Io(_) => "io",
        }
    }

    /// Offending node id, when the error names one.
    pub fn node_id(&self) -> Option<u64> {
        match self {
            Error::Validation { node, .. } => *node,
            Error::UnknownNode(n) => Some(*n),
            Error::InvalidCut { node, .. }
            | Error::ProjectionFold { node, .. }
            | Error::NoIntersection { node, .. } => Some(*node),
            Error::Degenerate { node, .. } => *node,
            _ => None,
        }
    }

    /// Offending edge id, when the error names one.
    pub fn edge_id(&self) -> Option<u64> {
        match self {
            Error::Validation { edge, .. } => *edge,
            Error::InvalidCut { edge, .. }
            | Error::ProjectionFold { edge, .. }
            | Error::NoIntersection { edge, .. } => Some(*edge),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
