#pragma once

#include <stdexcept>
#include <string>

namespace qreturn {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define QRETURN_DEFINE_ERROR(Name)                      \
    class Name : public Error {                        \
    public:                                            \
        using Error::Error;                            \
    }

QRETURN_DEFINE_ERROR(DimensionMismatch);
QRETURN_DEFINE_ERROR(NotHermitian);
QRETURN_DEFINE_ERROR(NegativeEigenvalue);
QRETURN_DEFINE_ERROR(NotNormalized);
QRETURN_DEFINE_ERROR(NotStochastic);
QRETURN_DEFINE_ERROR(RateOutOfRange);
QRETURN_DEFINE_ERROR(IndexOutOfRange);
QRETURN_DEFINE_ERROR(ZeroHopping);
QRETURN_DEFINE_ERROR(NonConvergent);
QRETURN_DEFINE_ERROR(NonRecurrent);
QRETURN_DEFINE_ERROR(UndefinedBand);
QRETURN_DEFINE_ERROR(ParseError);

#undef QRETURN_DEFINE_ERROR

/// Raised when a Psi-unital walk produces an expected return time that
/// differs from the relevant-subspace dimension by more than the
/// quantization tolerance. This always signals a numerical defect, never
/// valid physics, so it carries the observed defect magnitude.
class TheoremViolation : public Error {
public:
    TheoremViolation(const std::string& msg, double defect_magnitude)
        : Error(msg), defect(defect_magnitude) {}

    double defect;
};

} // namespace qreturn
