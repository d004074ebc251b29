use std::collections::VecDeque;

use thiserror::Error;

use super::{GraphError, MarkovGraph};
use crate::Scalar;

pub const DEFAULT_EPS: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Bound on `‖xᵀ(I − Q) − eᵢᵀ‖∞` for the returned row.
    pub eps: f64,
    /// Sweep cap before giving up.
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("fundamental row did not converge after {iterations} sweeps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("singular diagonal at state {0}")]
    Singular(usize),
}

/// Row `source` of the fundamental matrix `N = (I − Q)⁻¹`.
///
/// Solves `xᵀ(I − Q) = eᵢᵀ` by Gauss–Seidel sweeps over the states reachable
/// from `source`, visited in breadth-first order. `x[j]` is the expected
/// number of visits to `j` before absorption when starting in `source`.
pub fn fundamental_row<T: Scalar>(
    graph: &MarkovGraph<T>,
    source: usize,
    config: &SolverConfig,
) -> Result<Vec<T>, SolveError> {
    graph.require_transient(source)?;
    let n = graph.state_count();
    let order = reachable_from(graph, source);
    let eps = T::from_f64_lossy(config.eps);

    let mut diagonal = vec![T::zero(); n];
    for &j in &order {
        let q_jj = graph.transition(j, j);
        let d = T::one() - q_jj;
        if d <= T::zero() {
            return Err(SolveError::Singular(j));
        }
        diagonal[j] = d;
    }

    let mut x = vec![T::zero(); n];
    let mut residual = T::infinity();
    for _ in 0..config.max_iterations {
        for &j in &order {
            let mut acc = if j == source { T::one() } else { T::zero() };
            for &(k, q) in graph.incoming(j) {
                if k != j {
                    acc = acc + x[k] * q;
                }
            }
            x[j] = acc / diagonal[j];
        }
        residual = row_residual(graph, source, &order, &x);
        if residual <= eps {
            return Ok(x);
        }
        if !residual.is_finite() {
            break;
        }
    }
    Err(SolveError::NotConverged {
        iterations: config.max_iterations,
        residual: residual.to_f64_lossy(),
    })
}

fn reachable_from<T: Scalar>(graph: &MarkovGraph<T>, source: usize) -> Vec<usize> {
    let mut seen = vec![false; graph.state_count()];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([source]);
    seen[source] = true;
    while let Some(state) = queue.pop_front() {
        order.push(state);
        for &(next, _) in graph.transient_row(state) {
            if !seen[next] {
                seen[next] = true;
                queue.push_back(next);
            }
        }
    }
    order
}

/// `max_j |x_j − δ_ij − Σ_k x_k q_kj|` over the reachable set; entries outside
/// it are zero on both sides.
fn row_residual<T: Scalar>(graph: &MarkovGraph<T>, source: usize, order: &[usize], x: &[T]) -> T {
    let mut worst = T::zero();
    for &j in order {
        let mut inflow = if j == source { T::one() } else { T::zero() };
        for &(k, q) in graph.incoming(j) {
            inflow = inflow + x[k] * q;
        }
        worst = worst.max((x[j] - inflow).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{EdgeCounts, StateSpace};
    use crate::session::parse_hypothesis;

    fn space(n: usize) -> StateSpace {
        StateSpace::new((0..n).map(|i| parse_hypothesis(&format!("D|I|S:{i}")).unwrap()))
    }

    #[test]
    fn deterministic_chain() {
        // h0 → h1 → s⁺: N row of h0 is [1, 1].
        let g = MarkovGraph::<f64>::from_counts(
            space(2),
            EdgeCounts::from([((0, 1), 1), ((1, 2), 1)]),
            None,
        )
        .unwrap();
        let row = fundamental_row(&g, 0, &SolverConfig::default()).unwrap();
        assert_eq!(row, vec![1.0, 1.0]);
    }

    #[test]
    fn immediate_absorption() {
        let g = MarkovGraph::<f64>::from_counts(
            space(3),
            EdgeCounts::from([((0, 3), 4), ((1, 0), 1), ((1, 4), 1), ((2, 4), 1)]),
            None,
        )
        .unwrap();
        let row = fundamental_row(&g, 0, &SolverConfig::default()).unwrap();
        assert_eq!(row, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn self_loop_closed_form() {
        // q00 = 1/2, q01 = 1/4, q0s = 1/4; q11 = 1/3, q1s = 2/3.
        // N00 = 2, N01 = N00·q01 / (1 − q11) = 2·(1/4)·(3/2) = 3/4.
        let g = MarkovGraph::<f64>::from_counts(
            space(2),
            EdgeCounts::from([((0, 0), 2), ((0, 1), 1), ((0, 2), 1), ((1, 1), 1), ((1, 2), 2)]),
            None,
        )
        .unwrap();
        let row = fundamental_row(&g, 0, &SolverConfig::default()).unwrap();
        assert!((row[0] - 2.0).abs() < 1e-12);
        assert!((row[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rejects_absorbing_source() {
        let g = MarkovGraph::<f64>::from_counts(space(1), EdgeCounts::from([((0, 1), 1)]), None)
            .unwrap();
        assert!(matches!(
            fundamental_row(&g, 1, &SolverConfig::default()),
            Err(SolveError::Graph(GraphError::NotTransient(1)))
        ));
    }

    #[test]
    fn iteration_cap_reports_residual() {
        // Slowly absorbing two-cycle needs many sweeps.
        let g = MarkovGraph::<f64>::from_counts(
            space(2),
            EdgeCounts::from([((0, 1), 999), ((0, 2), 1), ((1, 0), 999), ((1, 2), 1)]),
            None,
        )
        .unwrap();
        let err = fundamental_row(
            &g,
            0,
            &SolverConfig {
                eps: 1e-12,
                max_iterations: 3,
            },
        )
        .unwrap_err();
        match err {
            SolveError::NotConverged { iterations, residual } => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn works_in_single_precision() {
        let g = MarkovGraph::<f32>::from_counts(
            space(2),
            EdgeCounts::from([((0, 0), 2), ((0, 1), 1), ((0, 2), 1), ((1, 1), 1), ((1, 2), 2)]),
            None,
        )
        .unwrap();
        let row = fundamental_row(
            &g,
            0,
            &SolverConfig {
                eps: 1e-5,
                max_iterations: 1000,
            },
        )
        .unwrap();
        assert!((row[0] - 2.0).abs() < 1e-4);
        assert!((row[1] - 0.75).abs() < 1e-4);
    }
}
