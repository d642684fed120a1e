#pragma once

#include "config.hpp"

#include <string>
#include <vector>

namespace helmopt::cli {

enum ExitCode { kOk = 0, kError = 1, kValidationFailure = 2 };

const std::vector<std::string>& command_names();

/// Runs one command on a fully merged config, writes its artifacts into
/// output.dir and fills `summary`. Returns the exit code.
int run_command(const std::string& command, const Json& config, Json& summary);

/// RFC-4180 field quoting.
std::string csv_field(const std::string& text);

}  // namespace helmopt::cli
