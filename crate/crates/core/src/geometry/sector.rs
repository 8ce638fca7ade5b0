use std::fmt;
use std::sync::Arc;

use super::{Domain, PointClassification};
use crate::linalg::{dot, to_frame};

pub type SectorPredicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Set of unit inward directions at a point. Every variant is a cone
/// condition, so membership may be queried with unnormalized vectors.
#[derive(Clone)]
pub enum Sector {
    Full {
        dim: usize,
    },
    HalfSpace {
        nu: Vec<f64>,
    },
    Orthant {
        normals: Vec<Vec<f64>>,
    },
    Predicate {
        dim: usize,
        membership: SectorPredicate,
    },
}

impl fmt::Debug for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sector::Full { dim } => write!(f, "Full {{ dim: {dim} }}"),
            Sector::HalfSpace { nu } => write!(f, "HalfSpace {{ nu: {nu:?} }}"),
            Sector::Orthant { normals } => write!(f, "Orthant {{ normals: {normals:?} }}"),
            Sector::Predicate { dim, .. } => write!(f, "Predicate {{ dim: {dim} }}"),
        }
    }
}

impl Sector {
    pub fn dim(&self) -> usize {
        match self {
            Sector::Full { dim } | Sector::Predicate { dim, .. } => *dim,
            Sector::HalfSpace { nu } => nu.len(),
            Sector::Orthant { normals } => normals[0].len(),
        }
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        match self {
            Sector::Full { .. } => true,
            Sector::HalfSpace { nu } => dot(nu, theta) >= 0.0,
            Sector::Orthant { normals } => normals.iter().all(|n| dot(n, theta) >= 0.0),
            Sector::Predicate { membership, .. } => membership(theta),
        }
    }

    /// Whether moments are available in closed form.
    pub fn has_closed_form(&self) -> bool {
        !matches!(self, Sector::Predicate { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Sector::Full { .. } => "full",
            Sector::HalfSpace { .. } => "half_space",
            Sector::Orthant { .. } => "orthant",
            Sector::Predicate { .. } => "predicate",
        }
    }
}

/// Inward sector for a classified point of `domain`.
pub fn sector_at(domain: &Domain, cls: &PointClassification) -> Sector {
    let dim = domain.dim();
    match cls {
        PointClassification::Interior => Sector::Full { dim },
        PointClassification::C1Boundary { inner_normal } => Sector::HalfSpace {
            nu: inner_normal.clone(),
        },
        PointClassification::CornerDepthK { inward_normals, .. } => Sector::Orthant {
            normals: inward_normals.clone(),
        },
        PointClassification::LcddKink { frame, derivative }
        | PointClassification::Cusp { frame, derivative } => {
            let frame = frame.clone();
            let derivative = derivative.clone();
            Sector::Predicate {
                dim,
                membership: Arc::new(move |theta: &[f64]| {
                    let c = to_frame(&frame, theta);
                    c[dim - 1] >= derivative.eval(&c[..dim - 1])
                }),
            }
        }
    }
}
