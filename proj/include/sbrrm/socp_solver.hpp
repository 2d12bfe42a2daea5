#pragma once

#include "sbrrm/conic.hpp"

namespace sbrrm::conic {

/// Default backend behind the solve contract: a primal-dual interior-point
/// method on the homogeneous self-dual embedding with Nesterov-Todd scaling
/// and Mehrotra predictor-corrector steps. The KKT system is reduced to dense
/// normal equations; cone scalings enter as diagonal-plus-rank-one updates.
///
/// Auxiliary cone variables introduced by the builder and variables pinned by
/// equal bounds are eliminated up front, so the iteration works on the
/// compact problem. Infeasibility and unboundedness are certified through the
/// embedding and reported via the status, never by failure.
SolveReport solve(const ConicProgram& program, const SolverOptions& opts = {});

}  // namespace sbrrm::conic
