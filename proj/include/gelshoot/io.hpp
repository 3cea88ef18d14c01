#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gelshoot/params.hpp"

namespace gelshoot {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

// read once from GELSHOOT_LOG (quiet, info, debug); defaults to quiet
LogLevel log_level();
void set_log_level(LogLevel l);
void log(LogLevel at, const std::string& msg);

nlohmann::json to_json(const ModelParams& p);

// shortest decimal that round-trips
std::string shortest(double v);

// 17 significant digits, used for CSV columns
std::string csv_num(double v);

void write_csv_row(std::ostream& os, const std::vector<double>& row);

}  // namespace gelshoot
