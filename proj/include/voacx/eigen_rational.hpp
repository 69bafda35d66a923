#pragma once

#include "voacx/rational.hpp"

#include <Eigen/Core>

// Lets Eigen store and multiply exact rationals (no decompositions are used on them).
namespace Eigen {

template <>
struct NumTraits<voacx::Rational> : GenericNumTraits<voacx::Rational> {
    using Real = voacx::Rational;
    using NonInteger = voacx::Rational;
    using Nested = voacx::Rational;
    enum {
        IsComplex = 0,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 1,
        ReadCost = 1,
        AddCost = 8,
        MulCost = 16
    };
    static inline Real epsilon() { return Real(0); }
    static inline Real dummy_precision() { return Real(0); }
    static inline int digits10() { return 0; }
};

} // namespace Eigen

namespace voacx {

using RationalMatrix = Eigen::Matrix<Rational, Eigen::Dynamic, Eigen::Dynamic>;

} // namespace voacx
