#pragma once

namespace siot {

/// Selects between the OpenMP kernels and the serial reference path. Both
/// must produce bit-identical results.
enum class Execution { Serial, Parallel };

}  // namespace siot
