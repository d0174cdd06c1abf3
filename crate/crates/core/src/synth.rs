//! Synthetic street grids with matching mock scene features.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::{SceneFeatures, SceneTable};
use crate::road_network::{Edge, Node, RoadNetwork, EARTH_RADIUS_M};

pub const GRID_ORIGIN: (f64, f64) = (22.30, 114.17);

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 2×2 nodes, got {rows}×{cols}")]
    InvalidDimensions { rows: usize, cols: usize },
    #[error("grid spacing must be positive and finite, got {0}")]
    InvalidSpacing(f64),
    #[error("unknown shade pattern `{0}` (expected uniform, shaded-perimeter or random)")]
    UnknownPattern(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShadePattern {
    Uniform,
    ShadedPerimeter,
    Random,
}

impl FromStr for ShadePattern {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(ShadePattern::Uniform),
            "shaded-perimeter" => Ok(ShadePattern::ShadedPerimeter),
            "random" => Ok(ShadePattern::Random),
            other => Err(GridError::UnknownPattern(other.to_string())),
        }
    }
}

impl fmt::Display for ShadePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShadePattern::Uniform => "uniform",
            ShadePattern::ShadedPerimeter => "shaded-perimeter",
            ShadePattern::Random => "random",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    pub pattern: ShadePattern,
    pub seed: u64,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, spacing_m: f64, pattern: ShadePattern) -> Self {
        GridSpec {
            rows,
            cols,
            spacing_m,
            pattern,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn pad_width(n: usize) -> usize {
    (n.saturating_sub(1)).to_string().len()
}

/// Node id of grid cell `(r, c)`; zero-padded so ids sort row-major.
pub fn grid_node_id(spec: &GridSpec, r: usize, c: usize) -> String {
    format!(
        "r{r:0rw$}c{c:0cw$}",
        rw = pad_width(spec.rows),
        cw = pad_width(spec.cols)
    )
}

/// Scene reference attached to grid cell `(r, c)`.
pub fn grid_scene_id(spec: &GridSpec, r: usize, c: usize) -> String {
    format!("s_{}", grid_node_id(spec, r, c))
}

pub fn is_perimeter(spec: &GridSpec, r: usize, c: usize) -> bool {
    r == 0 || c == 0 || r + 1 == spec.rows || c + 1 == spec.cols
}

/// A `rows × cols` lattice with 4-neighbour edges of exactly `spacing_m`
/// metres, one scene per node, and the scene features of `pattern`.
pub fn generate_grid(spec: &GridSpec) -> Result<(RoadNetwork, SceneTable), GridError> {
    if spec.rows < 2 || spec.cols < 2 {
        return Err(GridError::InvalidDimensions {
            rows: spec.rows,
            cols: spec.cols,
        });
    }
    if !(spec.spacing_m.is_finite() && spec.spacing_m > 0.0) {
        return Err(GridError::InvalidSpacing(spec.spacing_m));
    }
    let deg_per_m = 180.0 / (std::f64::consts::PI * EARTH_RADIUS_M);
    let dlat = spec.spacing_m * deg_per_m;
    let dlon = dlat / GRID_ORIGIN.0.to_radians().cos();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut nodes = Vec::with_capacity(spec.rows * spec.cols);
    let mut scenes = SceneTable::new();
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let mut n = Node::new(
                grid_node_id(spec, r, c),
                GRID_ORIGIN.0 + r as f64 * dlat,
                GRID_ORIGIN.1 + c as f64 * dlon,
            );
            let scene = grid_scene_id(spec, r, c);
            let features = match spec.pattern {
                ShadePattern::Uniform => SceneFeatures::new(0.5, 0.5, 0.5, 0.5),
                ShadePattern::ShadedPerimeter if is_perimeter(spec, r, c) => SceneFeatures::new(1.0, 0.6, 0.0, 0.4),
                ShadePattern::ShadedPerimeter => SceneFeatures::new(0.0, 0.3, 1.0, 0.7),
                ShadePattern::Random => SceneFeatures::new(rng.gen(), rng.gen(), rng.gen(), rng.gen()),
            };
            n.svi_refs.push(scene.clone());
            scenes.insert(scene, features);
            nodes.push(n);
        }
    }
    let mut edges = Vec::with_capacity(2 * spec.rows * spec.cols);
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let here = grid_node_id(spec, r, c);
            if c + 1 < spec.cols {
                edges.push(Edge::new(here.clone(), grid_node_id(spec, r, c + 1), spec.spacing_m));
            }
            if r + 1 < spec.rows {
                edges.push(Edge::new(here, grid_node_id(spec, r + 1, c), spec.spacing_m));
            }
        }
    }
    let net = RoadNetwork::new(nodes, edges).expect("generated grid is valid");
    Ok((net, scenes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn two_by_two() {
        let (net, scenes) = generate_grid(&GridSpec::new(2, 2, 100.0, ShadePattern::Uniform)).unwrap();
        assert_eq!(net.node_count(), 4);
        assert_eq!(net.edge_count(), 4);
        assert_eq!(scenes.len(), 4);
        assert!(net.edges().iter().all(|e| e.length_m == 100.0));
    }

    #[test]
    fn four_by_four_degrees() {
        let (net, _) = generate_grid(&GridSpec::new(4, 4, 50.0, ShadePattern::Uniform)).unwrap();
        assert_eq!(net.degree_histogram(), BTreeMap::from([(2, 4), (3, 8), (4, 4)]));
    }

    #[test]
    fn shaded_perimeter_pattern() {
        let spec = GridSpec::new(4, 4, 100.0, ShadePattern::ShadedPerimeter);
        let (_, scenes) = generate_grid(&spec).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let f = scenes[&grid_scene_id(&spec, r, c)];
                assert_eq!(f.shade, if is_perimeter(&spec, r, c) { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn random_pattern_is_seeded() {
        let spec = GridSpec::new(3, 5, 80.0, ShadePattern::Random).with_seed(9);
        let (a, sa) = generate_grid(&spec).unwrap();
        let (b, sb) = generate_grid(&spec).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(a.to_document().nodes, b.to_document().nodes);
        let (_, sc) = generate_grid(&spec.with_seed(10)).unwrap();
        assert_ne!(sa, sc);
    }

    #[test]
    fn ids_are_padded() {
        let spec = GridSpec::new(12, 3, 10.0, ShadePattern::Uniform);
        assert_eq!(grid_node_id(&spec, 3, 2), "r03c2");
        assert_eq!(grid_scene_id(&spec, 11, 0), "s_r11c0");
    }

    #[test]
    fn rejects_bad_specs() {
        assert_eq!(
            generate_grid(&GridSpec::new(1, 5, 10.0, ShadePattern::Uniform)).unwrap_err(),
            GridError::InvalidDimensions { rows: 1, cols: 5 }
        );
        assert!(generate_grid(&GridSpec::new(2, 2, 0.0, ShadePattern::Uniform)).is_err());
        assert!("stripes".parse::<ShadePattern>().is_err());
    }
}
