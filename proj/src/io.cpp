#include "gelshoot/io.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace gelshoot {

namespace {

int level_from_env() {
    const char* e = std::getenv("GELSHOOT_LOG");
    if (!e) return 0;
    const std::string s(e);
    if (s == "debug") return 2;
    if (s == "info") return 1;
    return 0;
}

std::atomic<int>& level_slot() {
    static std::atomic<int> lvl{level_from_env()};
    return lvl;
}

}  // namespace

LogLevel log_level() { return static_cast<LogLevel>(level_slot().load()); }
void set_log_level(LogLevel l) { level_slot() = static_cast<int>(l); }

void log(LogLevel at, const std::string& msg) {
    if (at == LogLevel::Quiet || static_cast<int>(at) > level_slot().load()) return;
    static std::mutex m;
    std::lock_guard<std::mutex> g(m);
    std::cerr << (at == LogLevel::Debug ? "[debug] " : "[info] ") << msg << '\n';
}

nlohmann::json to_json(const ModelParams& p) {
    return {{"gamma", p.gamma}, {"b", p.b},         {"a", p.a},
            {"sigma", p.sigma}, {"q", p.q},         {"d", p.d},
            {"theta", p.theta}, {"b0", p.b0},       {"eps_delay", p.eps_delay},
            {"phi_inf", p.phi_inf}};
}

std::string shortest(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string csv_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv_row(std::ostream& os, const std::vector<double>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_num(row[i]);
    os << '\n';
}

}  // namespace gelshoot
