#ifndef COBRA_TOOLS_CLI_H_
#define COBRA_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace cobra {

// Entry point of the `cobra` tool; args[0] is the program name. Returns 0 on
// success, 1 on a domain error and 2 on a usage error.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace cobra

#endif  // COBRA_TOOLS_CLI_H_
