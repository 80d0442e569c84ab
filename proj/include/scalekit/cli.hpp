#pragma once

namespace scalekit::cli {

/// Entry point behind the `scalekit` binary. Exit codes: 0 success,
/// 1 usage error, 2 data/validation error, 3 numerical failure.
int run(int argc, const char* const* argv);

}  // namespace scalekit::cli
