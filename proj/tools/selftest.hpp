#pragma once

#include <iosfwd>
#include <string>

// runs the example table of the module behind a subcommand; returns the number of failures
int run_selftest(const std::string& subcommand, std::ostream& os);
