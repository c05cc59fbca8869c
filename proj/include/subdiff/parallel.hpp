#pragma once

namespace subdiff {

/// Selects the OpenMP kernel or its serial reference.
enum class Execution { serial, parallel };

}  // namespace subdiff
