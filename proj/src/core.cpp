#include "mcflab/core.hpp"

namespace mcflab {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::ConstraintViolation: return "CONSTRAINT_VIOLATION";
        case ErrorCode::StencilError: return "STENCIL_ERROR";
        case ErrorCode::IntegrationError: return "INTEGRATION_ERROR";
        case ErrorCode::UnsupportedSpace: return "UNSUPPORTED_SPACE";
        case ErrorCode::DegenerateNeighborhood: return "DEGENERATE_NEIGHBORHOOD";
        case ErrorCode::NotInvariant: return "NOT_INVARIANT";
        case ErrorCode::MeshCollapse: return "MESH_COLLAPSE";
        case ErrorCode::CflViolation: return "CFL_VIOLATION";
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::ConfigError: return "CONFIG_ERROR";
        case ErrorCode::HypothesisFailed: return "HYPOTHESIS_FAILED";
    }
    return "UNKNOWN";
}

}  // namespace mcflab
