#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace semidfl {

/// Entry point behind the `semidfl` executable. args excludes argv[0].
/// Returns 0 on success, 2 on usage or config errors, 1 on run failures.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semidfl
