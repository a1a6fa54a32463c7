//! Fixtures shared by the benchmarks.

use twisted_core::assembly::{assemble_all, overlap_matrix, quadrature_nodes};
use twisted_core::{BranchSystem, OverlapMatrix, QuadratureRule, TruncatedOperator, Weight};

pub struct Fixture {
    pub system: BranchSystem,
    pub quadrature: QuadratureRule,
    pub ops: Vec<TruncatedOperator>,
    pub h: OverlapMatrix,
}

/// Gauss branches `j = 2, 3` on `D(1, 3/2)` at truncation `order`, 64×128 quadrature.
pub fn gauss23(order: usize) -> Fixture {
    let system = BranchSystem::gauss(&[2, 3], Weight::Zero)
        .and_then(|s| s.validated(1024))
        .expect("Gauss system validates");
    let quadrature = quadrature_nodes(system.domain(), 64, 128).expect("valid rule");
    let ops = assemble_all(&system, order, &quadrature).expect("assembly");
    let h = overlap_matrix(&system, &quadrature).expect("overlap");
    Fixture { system, quadrature, ops, h }
}
