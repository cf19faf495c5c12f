#pragma once

#include <Eigen/Dense>

namespace hamdesc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Phase-space point evolved by every integrator.
struct State {
    Vector x;
    Vector p;
};

}  // namespace hamdesc
