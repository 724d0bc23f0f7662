#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "proxguard/error.hpp"
#include "proxguard/simulator.hpp"

namespace proxguard {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(std::size_t line) { return "trace line " + std::to_string(line) + ": "; }

template <typename T>
T parse_field(std::string_view token, std::size_t line, const char* what) {
  token = trim(token);
  T v{};
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
    throw ParseError(where(line) + "invalid " + what + " '" + std::string(token) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) throw ParseError(where(line) + "non-finite " + what);
  }
  return v;
}

}  // namespace

std::vector<Trajectory> parse_traces(std::istream& in, const std::optional<Rect>& bounds) {
  std::map<UserId, Trajectory> by_user;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kTraceHeader) {
        throw ParseError(where(line_no) + "expected header '" + std::string(kTraceHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (line.front() == '#') continue;

    std::string_view fields[4];
    std::string_view rest = line;
    for (int k = 0; k < 4; ++k) {
      const auto comma = rest.find(',');
      if ((k < 3) == (comma == std::string_view::npos)) {
        throw ParseError(where(line_no) + "expected 4 comma-separated fields");
      }
      fields[k] = rest.substr(0, comma);
      if (comma != std::string_view::npos) rest = rest.substr(comma + 1);
    }
    const auto user = parse_field<UserId>(fields[0], line_no, "user id");
    const auto t = parse_field<double>(fields[1], line_no, "time");
    const Point p{parse_field<double>(fields[2], line_no, "x"), parse_field<double>(fields[3], line_no, "y")};

    if (bounds && (p.x < bounds->x_lo || p.x > bounds->x_hi || p.y < bounds->y_lo || p.y > bounds->y_hi)) {
      throw ValidationError(where(line_no) + "point outside the domain");
    }
    Trajectory& tr = by_user[user];
    tr.user = user;
    if (!tr.samples.empty() && !(t > tr.samples.back().t)) {
      throw ValidationError(where(line_no) + "timestamp of user " + std::to_string(user) +
                            " is not increasing");
    }
    tr.samples.push_back({t, p});
  }
  std::vector<Trajectory> out;
  out.reserve(by_user.size());
  for (auto& [_, tr] : by_user) out.push_back(std::move(tr));
  return out;
}

std::vector<Trajectory> ingest_traces(const std::string& path, const std::optional<Rect>& bounds) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file '" + path + "'");
  return parse_traces(in, bounds);
}

void export_traces(std::ostream& out, const std::vector<Trajectory>& trajectories) {
  out << kTraceHeader << '\n';
  // 17 significant digits round-trip every double exactly.
  out << std::setprecision(17);
  for (const auto& tr : trajectories) {
    for (const auto& s : tr.samples) out << tr.user << ',' << s.t << ',' << s.p.x << ',' << s.p.y << '\n';
  }
}

}  // namespace proxguard
