#pragma once

#include <stdexcept>
#include <string>

namespace peierls {

// Base for every named numerical/contract failure. `kind()` returns the
// error name used in reports and CLI diagnostics.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define PEIERLS_DEFINE_ERROR(Name)                                      \
    class Name : public Error {                                         \
    public:                                                             \
        explicit Name(const std::string& what) : Error(#Name, what) {}  \
    };

PEIERLS_DEFINE_ERROR(IncommensurateFlux)
PEIERLS_DEFINE_ERROR(ShapeMismatch)
PEIERLS_DEFINE_ERROR(NotIsolated)
PEIERLS_DEFINE_ERROR(EigenvalueOnContour)
PEIERLS_DEFINE_ERROR(NotTwoDimensional)
PEIERLS_DEFINE_ERROR(AliasRisk)
PEIERLS_DEFINE_ERROR(FrameDeficient)
PEIERLS_DEFINE_ERROR(NotTranslationInvariant)
PEIERLS_DEFINE_ERROR(PaddingInsufficient)
PEIERLS_DEFINE_ERROR(NoSpectralDichotomy)
PEIERLS_DEFINE_ERROR(ProjectionsTooFar)
PEIERLS_DEFINE_ERROR(StructureViolation)
PEIERLS_DEFINE_ERROR(SpectrumOnContour)
PEIERLS_DEFINE_ERROR(SingularBlock)
PEIERLS_DEFINE_ERROR(ConditionTwoFails)
PEIERLS_DEFINE_ERROR(SupportViolation)
PEIERLS_DEFINE_ERROR(OneSideEmpty)
PEIERLS_DEFINE_ERROR(InvalidModel)

#undef PEIERLS_DEFINE_ERROR

}  // namespace peierls
