#pragma once

#include <iosfwd>

namespace barcoder {

/// Entry point behind the `barcoder` executable. Subcommands: synth,
/// binarize, optimize, evaluate, benchmark, stats. Returns 0 on success and a
/// nonzero status with a diagnostic on `err` otherwise.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace barcoder
