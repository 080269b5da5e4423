//! Great-circle distances between nodes and the distance-derived edge weights
//! used by the spatial Katz variants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeRegistry, SparseMatrix};

/// Mean Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Node count at or below which [`distance_matrix`] materializes all pairs.
pub const DEFAULT_DENSE_MAX_NODES: usize = 5000;

/// A latitude/longitude position in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidArgument(format!(
                "latitude {lat} outside [-90, 90]"
            )));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidArgument(format!(
                "longitude {lon} outside [-180, 180]"
            )));
        }
        Ok(GeoPoint { lat, lon })
    }
}

/// Haversine great-circle distance in kilometers.
pub fn haversine(p: GeoPoint, q: GeoPoint) -> f64 {
    let (phi1, phi2) = (p.lat.to_radians(), q.lat.to_radians());
    let dphi = (q.lat - p.lat).to_radians();
    let dlambda = (q.lon - p.lon).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    // Rounding can push `a` marginally past 1 for antipodal points.
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// Exponential distance decay `exp(-gamma * d)`.
pub fn decay_weight(distance_km: f64, gamma: f64) -> Result<f64> {
    if !(distance_km >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distance must be non-negative, got {distance_km}"
        )));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "decay rate must be non-negative, got {gamma}"
        )));
    }
    Ok((-gamma * distance_km).exp())
}

/// Symmetric pairwise distances aligned to a [`NodeRegistry`].
///
/// Small registries are materialized up front; large ones compute each
/// distance on request. Both paths return identical values.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    coords: Vec<GeoPoint>,
    dense: Option<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn from_points(coords: Vec<GeoPoint>, dense_max_nodes: usize) -> Self {
        let n = coords.len();
        let dense = (n <= dense_max_nodes).then(|| {
            let mut d = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = haversine(coords[i], coords[j]);
                    d[i * n + j] = v;
                    d[j * n + i] = v;
                }
            }
            d
        });
        DistanceMatrix { coords, dense }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        let n = self.coords.len();
        match &self.dense {
            Some(d) => d[u * n + v],
            None if u == v => 0.0,
            // Argument order is canonicalized so d(u,v) and d(v,u) agree bitwise.
            None => haversine(self.coords[u.min(v)], self.coords[u.max(v)]),
        }
    }
}

/// Pairwise haversine distances for every node of `registry`.
pub fn distance_matrix(registry: &NodeRegistry, dense_max_nodes: usize) -> Result<DistanceMatrix> {
    let coords = (0..registry.len())
        .map(|i| {
            registry
                .coord(i)
                .ok_or_else(|| Error::MissingCoordinates(registry.id(i).to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DistanceMatrix::from_points(coords, dense_max_nodes))
}

/// Mapping from inter-node distance to an adjacency weight.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightTransform {
    /// The distance itself.
    #[default]
    Raw,
    /// `1 / (1 + d)`
    Inverse,
    /// `exp(-gamma * d)`
    Decay { gamma: f64 },
    /// Distance rescaled to `[0, 1]` over the edges present in the matrix.
    MinMax,
}


/// Replaces every entry of a binary adjacency matrix by a weight derived
/// from the distance between its endpoints. The sparsity pattern is kept.
pub fn weighted_adjacency(
    adjacency: &SparseMatrix,
    distances: &DistanceMatrix,
    transform: WeightTransform,
) -> Result<SparseMatrix> {
    if adjacency.dim() != distances.dim() {
        return Err(Error::DimensionMismatch {
            expected: adjacency.dim(),
            found: distances.dim(),
        });
    }
    if !adjacency.is_binary() {
        return Err(Error::InvalidArgument(
            "weighted_adjacency expects a binary adjacency matrix".into(),
        ));
    }
    match transform {
        WeightTransform::Raw => adjacency.map_values(|u, v, _| distances.get(u, v)),
        WeightTransform::Inverse => {
            adjacency.map_values(|u, v, _| 1.0 / (1.0 + distances.get(u, v)))
        }
        WeightTransform::Decay { gamma } => {
            decay_weight(0.0, gamma)?;
            adjacency.map_values(|u, v, _| (-gamma * distances.get(u, v)).exp())
        }
        WeightTransform::MinMax => {
            let (lo, hi) = adjacency
                .entries()
                .map(|(u, v, _)| distances.get(u, v))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
                    (lo.min(d), hi.max(d))
                });
            if hi > lo {
                adjacency.map_values(|u, v, _| (distances.get(u, v) - lo) / (hi - lo))
            } else {
                // All edges equally long: fall back to the unweighted pattern.
                Ok(adjacency.clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    /// Spherical law of cosines, independent of the haversine formulation.
    fn cosine_law(p: GeoPoint, q: GeoPoint) -> f64 {
        let (a, b) = (p.lat.to_radians(), q.lat.to_radians());
        let dl = (q.lon - p.lon).to_radians();
        let c = (a.sin() * b.sin() + a.cos() * b.cos() * dl.cos()).clamp(-1.0, 1.0);
        EARTH_RADIUS_KM * c.acos()
    }

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn coincident_and_antipodal() {
        let p = pt(51.5, -3.2);
        assert_eq!(haversine(p, p), 0.0);
        let d = haversine(pt(0.0, 0.0), pt(0.0, 180.0));
        assert!((d - PI * EARTH_RADIUS_KM).abs() < 1e-9);
        assert!((d - 20015.09).abs() < 0.01);
    }

    #[test]
    fn london_paris_matches_cosine_law() {
        let (l, p) = (pt(51.5074, -0.1278), pt(48.8566, 2.3522));
        let oracle = cosine_law(l, p);
        assert!((oracle - 343.556).abs() < 0.01, "oracle {oracle}");
        assert!((haversine(l, p) - oracle).abs() < 0.1);
    }

    #[test]
    fn rejects_out_of_range_coordinates() {
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -180.5).is_err());
    }

    #[test]
    fn decay_weight_values() {
        assert_eq!(decay_weight(0.0, 0.3).unwrap(), 1.0);
        assert_eq!(decay_weight(123.0, 0.0).unwrap(), 1.0);
        assert!((decay_weight(LN_2 / 0.01, 0.01).unwrap() - 0.5).abs() < 1e-15);
        assert!(decay_weight(-1.0, 0.1).is_err());
        assert!(decay_weight(1.0, -0.1).is_err());
    }

    #[test]
    fn dense_and_lazy_agree() {
        let pts = vec![pt(50.0, -4.0), pt(52.1, 0.3), pt(53.4, -2.2), pt(51.0, 1.0)];
        let dense = DistanceMatrix::from_points(pts.clone(), 10);
        let lazy = DistanceMatrix::from_points(pts, 0);
        assert!(dense.is_dense() && !lazy.is_dense());
        for u in 0..4 {
            for v in 0..4 {
                assert_eq!(dense.get(u, v).to_bits(), lazy.get(u, v).to_bits());
                assert_eq!(dense.get(u, v), dense.get(v, u));
            }
        }
    }

    fn two_nodes_10km_apart() -> (SparseMatrix, DistanceMatrix) {
        // 10 km along a meridian.
        let dlat = (10.0 / EARTH_RADIUS_KM).to_degrees();
        let d = DistanceMatrix::from_points(vec![pt(0.0, 0.0), pt(dlat, 0.0)], 10);
        let a = SparseMatrix::from_triplets(2, vec![(0, 1, 1.0)]).unwrap();
        (a, d)
    }

    #[test]
    fn weighted_adjacency_transforms() {
        let (a, d) = two_nodes_10km_apart();
        let raw = weighted_adjacency(&a, &d, WeightTransform::Raw).unwrap();
        assert!((raw.get(0, 1).unwrap() - 10.0).abs() < 1e-9);
        assert_eq!(raw.get(1, 0), None);

        let unit = weighted_adjacency(&a, &d, WeightTransform::Decay { gamma: 0.0 }).unwrap();
        assert_eq!(unit, a);

        let inv = weighted_adjacency(&a, &d, WeightTransform::Inverse).unwrap();
        assert!((inv.get(0, 1).unwrap() - 1.0 / 11.0).abs() < 1e-9);

        let same = DistanceMatrix::from_points(vec![pt(0.0, 0.0), pt(0.0, 0.0)], 10);
        let inv0 = weighted_adjacency(&a, &same, WeightTransform::Inverse).unwrap();
        assert_eq!(inv0.get(0, 1), Some(1.0));
    }

    #[test]
    fn minmax_spans_unit_interval() {
        let pts = vec![pt(0.0, 0.0), pt(0.0, 1.0), pt(0.0, 3.0)];
        let d = DistanceMatrix::from_points(pts, 10);
        let a = SparseMatrix::from_triplets(3, vec![(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])
            .unwrap();
        let w = weighted_adjacency(&a, &d, WeightTransform::MinMax).unwrap();
        assert_eq!(w.get(0, 1), Some(0.0));
        assert_eq!(w.get(0, 2), Some(1.0));
        assert!((w.get(1, 2).unwrap() - 0.5).abs() < 1e-9);
        assert_eq!(w.nnz(), 3);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let (a, _) = two_nodes_10km_apart();
        let d = DistanceMatrix::from_points(vec![pt(0.0, 0.0)], 10);
        assert!(matches!(
            weighted_adjacency(&a, &d, WeightTransform::Raw),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
