#pragma once

#include <ostream>

namespace plexus::cli {

/// Entry point of the `plexus` tool. Diagnostics go to `err` as
/// `plexus: error[<category>]: <message>`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace plexus::cli
