#pragma once

#include <stdexcept>
#include <string>

namespace hamdesc {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Value outside the range of a map being inverted.
class RangeError : public std::range_error {
public:
    using std::range_error::range_error;
};

/// Required data (certificate field, minimizer value, ...) is missing.
class UnavailableError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// The implicit step's inner solver missed its tolerance.
class SubsolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adaptive ODE step size fell below the representable minimum.
class StiffnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shooting could not classify a trajectory before the horizon.
class ClassificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hamdesc
