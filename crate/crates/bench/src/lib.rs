//! Shared fixtures for the benchmarks.

use torusflow_core::geometry::{Direction, Polytope};

pub fn silver() -> Direction {
    Direction::parse(&["sqrt(2)-1", "1"]).expect("literal parses")
}

pub fn triangle() -> Polytope {
    Polytope::from_vertices(vec![vec![0.1, 0.1], vec![0.9, 0.1], vec![0.1, 0.9]]).expect("triangle is valid")
}

pub fn spatial() -> Direction {
    Direction::parse(&["sqrt(2)-1", "sqrt(3)-1", "1"]).expect("literal parses")
}
