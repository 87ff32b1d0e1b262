#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace mcflab {

// Largest Cartesian model dimension any catalog space uses (HEISENBERG(3) -> 7).
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

enum class ErrorCode {
    ConstraintViolation,
    StencilError,
    IntegrationError,
    UnsupportedSpace,
    DegenerateNeighborhood,
    NotInvariant,
    MeshCollapse,
    CflViolation,
    InvalidArgument,
    ConfigError,
    HypothesisFailed,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace mcflab
