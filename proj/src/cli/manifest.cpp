#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>

#include "proxguard/cli.hpp"
#include "proxguard/error.hpp"

namespace proxguard {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = v.find(',');
    out.push_back(trim(v.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    v = v.substr(comma + 1);
  }
  return out;
}

struct LineContext {
  std::size_t line;
  std::string key;
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("manifest line " + std::to_string(line) + ": " + key + ": " + what);
  }
};

template <typename T>
T number(std::string_view token, const LineContext& ctx) {
  T v{};
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
    ctx.fail("invalid number '" + std::string(token) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) ctx.fail("non-finite number");
  }
  return v;
}

bool boolean(std::string_view token, const LineContext& ctx) {
  if (token == "true" || token == "yes" || token == "1") return true;
  if (token == "false" || token == "no" || token == "0") return false;
  ctx.fail("expected true or false, got '" + std::string(token) + "'");
}

template <typename T>
std::vector<T> number_list(std::string_view v, const LineContext& ctx) {
  std::vector<T> out;
  for (const auto item : split_list(v)) out.push_back(number<T>(item, ctx));
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    out += f(items[i]);
  }
  return out;
}

}  // namespace

RunManifest parse_manifest(std::istream& in) {
  RunManifest m;
  ScenarioConfig& c = m.base;
  std::set<std::string> seen;

  using Setter = std::function<void(std::string_view, const LineContext&)>;
  const std::map<std::string, Setter, std::less<>> setters{
      {"users", [&](auto v, auto& x) { c.users = number<std::uint32_t>(v, x); }},
      {"buddies", [&](auto v, auto& x) { m.buddies = number_list<std::uint32_t>(v, x); }},
      {"domain_width", [&](auto v, auto& x) { c.domain_width = number<double>(v, x); }},
      {"domain_height", [&](auto v, auto& x) { c.domain_height = number<double>(v, x); }},
      {"delta", [&](auto v, auto& x) { m.deltas = number_list<double>(v, x); }},
      {"cell_edge", [&](auto v, auto& x) { m.cell_edges = number_list<double>(v, x); }},
      {"update_interval", [&](auto v, auto& x) { c.update_interval = number<double>(v, x); }},
      {"request_period", [&](auto v, auto& x) { c.request_period = number<double>(v, x); }},
      {"duration", [&](auto v, auto& x) { c.duration = number<double>(v, x); }},
      {"sampling_period", [&](auto v, auto& x) { c.sampling_period = number<double>(v, x); }},
      {"v_min", [&](auto v, auto& x) { c.v_min = number<double>(v, x); }},
      {"v_max", [&](auto v, auto& x) { c.v_max = number<double>(v, x); }},
      {"pause_max", [&](auto v, auto& x) { c.pause_max = number<double>(v, x); }},
      {"seed", [&](auto v, auto& x) { c.seed = number<std::uint64_t>(v, x); }},
      {"latency", [&](auto v, auto& x) { c.latency = number<double>(v, x); }},
      {"freeze_positions", [&](auto v, auto& x) { c.freeze_positions = boolean(v, x); }},
      {"max_velocity", [&](auto v, auto& x) { c.max_velocity = number<double>(v, x); }},
      {"group", [&](auto v, auto&) { c.group = std::string(v); }},
      {"trace_file", [&](auto v, auto&) { c.trace_file = std::string(v); }},
      {"output_dir", [&](auto v, auto&) { m.output_dir = std::string(v); }},
      {"event_log", [&](auto v, auto& x) { m.event_log = boolean(v, x); }},
      {"jobs", [&](auto v, auto& x) { m.jobs = number<unsigned>(v, x); }},
      {"protocols",
       [&](auto v, auto&) {
         m.protocols.clear();
         for (const auto p : split_list(v)) m.protocols.push_back(parse_protocol(p));
       }},
      {"semantics",
       [&](auto v, auto&) {
         m.semantics.clear();
         for (const auto s : split_list(v)) {
           try {
             m.semantics.push_back(parse_semantics(s));
           } catch (const ParameterError& e) {
             throw UsageError(e.what());
           }
         }
       }},
  };

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key(trim(line.substr(0, eq)));
    if (key == "protocol") key = "protocols";
    const LineContext ctx{line_no, key};
    const auto it = setters.find(key);
    if (it == setters.end()) ctx.fail("unknown key");
    if (!seen.insert(key).second) ctx.fail("duplicate key");
    const std::string_view value = trim(line.substr(eq + 1));
    if (value.empty() && key != "trace_file") ctx.fail("empty value");
    try {
      it->second(value, ctx);
    } catch (const ParseError&) {
      throw;
    } catch (const UsageError&) {
      throw;
    } catch (const Error& e) {
      ctx.fail(e.what());
    }
  }
  if (m.jobs == 0) throw ParseError("manifest: jobs must be at least 1");
  return m;
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path + "'");
  return parse_manifest(in);
}

void write_manifest(std::ostream& out, const RunManifest& m) {
  const ScenarioConfig& c = m.base;
  out << "protocols = " << join(m.protocols, [](ProtocolKind p) { return std::string(to_string(p)); }) << '\n'
      << "semantics = " << join(m.semantics, [](Semantics s) { return std::string(to_string(s)); }) << '\n'
      << "cell_edge = " << join(m.cell_edges, fmt) << '\n'
      << "delta = " << join(m.deltas, fmt) << '\n'
      << "buddies = " << join(m.buddies, [](std::uint32_t b) { return std::to_string(b); }) << '\n'
      << "users = " << c.users << '\n'
      << "domain_width = " << fmt(c.domain_width) << '\n'
      << "domain_height = " << fmt(c.domain_height) << '\n'
      << "update_interval = " << fmt(c.update_interval) << '\n'
      << "request_period = " << fmt(c.request_period) << '\n'
      << "duration = " << fmt(c.duration) << '\n'
      << "sampling_period = " << fmt(c.sampling_period) << '\n'
      << "v_min = " << fmt(c.v_min) << '\n'
      << "v_max = " << fmt(c.v_max) << '\n'
      << "pause_max = " << fmt(c.pause_max) << '\n'
      << "seed = " << c.seed << '\n'
      << "latency = " << fmt(c.latency) << '\n'
      << "freeze_positions = " << (c.freeze_positions ? "true" : "false") << '\n'
      << "max_velocity = " << fmt(c.max_velocity) << '\n'
      << "group = " << c.group << '\n'
      << "trace_file = " << c.trace_file << '\n'
      << "output_dir = " << m.output_dir << '\n'
      << "event_log = " << (m.event_log ? "true" : "false") << '\n'
      << "jobs = " << m.jobs << '\n';
}

void apply_seed_override(RunManifest& m) {
  const char* env = std::getenv("PROXGUARD_SEED");
  if (env == nullptr || *env == '\0') return;
  const std::string_view v = env;
  std::uint64_t seed = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), seed);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw UsageError("PROXGUARD_SEED must be an unsigned integer, got '" + std::string(v) + "'");
  }
  m.base.seed = seed;
}

std::vector<ScenarioConfig> expand(const RunManifest& m) {
  if (m.protocols.empty() || m.semantics.empty() || m.cell_edges.empty() || m.deltas.empty() ||
      m.buddies.empty()) {
    throw UsageError("every sweep axis needs at least one value");
  }
  std::vector<ScenarioConfig> out;
  for (const auto p : m.protocols) {
    for (const auto s : m.semantics) {
      for (const double l : m.cell_edges) {
        for (const double d : m.deltas) {
          for (const auto b : m.buddies) {
            ScenarioConfig c = m.base;
            c.protocol = p;
            c.semantics = s;
            c.cell_edge = l;
            c.delta = d;
            c.buddies = b;
            out.push_back(std::move(c));
          }
        }
      }
    }
  }
  return out;
}

std::string scenario_label(std::size_t index) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "run-%04zu", index);
  return buf;
}

}  // namespace proxguard
