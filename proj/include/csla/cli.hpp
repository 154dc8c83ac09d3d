#pragma once

namespace csla {

// Exit codes: 0 success, 1 runtime failure, 2 usage error. Failures print a
// single JSON line {"error": kind, "message": ...} to stderr.
int cli_dispatch(int argc, char** argv);

} // namespace csla
