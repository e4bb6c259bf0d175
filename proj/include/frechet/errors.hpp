#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace frechet {

// Base class for all library failures. kind() names the violated contract so
// callers (in particular the CLI) can report which case was hit.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define FRECHET_DEFINE_ERROR(Name)                         \
    class Name : public Error {                            \
    public:                                                \
        explicit Name(const std::string& what)             \
            : Error(#Name, what) {}                        \
    }

// metric_space
FRECHET_DEFINE_ERROR(VariantMismatch);
FRECHET_DEFINE_ERROR(NotSpd);
FRECHET_DEFINE_ERROR(NotSymmetric);
FRECHET_DEFINE_ERROR(EmptySample);
FRECHET_DEFINE_ERROR(NoConvergence);
FRECHET_DEFINE_ERROR(DegenerateSphereSample);
FRECHET_DEFINE_ERROR(NotTangent);
FRECHET_DEFINE_ERROR(AntipodalPair);
FRECHET_DEFINE_ERROR(InvalidPoint);

// manifold_graph
FRECHET_DEFINE_ERROR(TooFewPoints);
FRECHET_DEFINE_ERROR(DimensionMismatch);

// regression
FRECHET_DEFINE_ERROR(EmptyNeighborhood);
FRECHET_DEFINE_ERROR(IsolatedQuery);
FRECHET_DEFINE_ERROR(NotEnoughReachable);
FRECHET_DEFINE_ERROR(AllCandidatesFailed);
FRECHET_DEFINE_ERROR(DegenerateDistances);

// io / cli
FRECHET_DEFINE_ERROR(ParseError);
FRECHET_DEFINE_ERROR(ConfigError);

#undef FRECHET_DEFINE_ERROR

}  // namespace frechet
