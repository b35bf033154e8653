#pragma once

#include <cctype>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace threatrank {

struct TimeParseError : std::runtime_error {
  explicit TimeParseError(const std::string& what) : std::runtime_error(what) {}
};

// UTC instant with second resolution. All timestamps in the system are
// normalized to UTC at ingestion and carried as this type.
struct UtcTime {
  std::int64_t secs = 0;  // seconds since 1970-01-01T00:00:00Z

  auto operator<=>(const UtcTime&) const = default;

  UtcTime plus_days(double days) const {
    return UtcTime{secs + static_cast<std::int64_t>(days * 86400.0)};
  }
  double days_until(UtcTime later) const {
    return static_cast<double>(later.secs - secs) / 86400.0;
  }
};

namespace detail {

// Howard Hinnant's civil-date algorithms.
inline std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yr + (m <= 2));
}

inline bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < len; ++i) {
    char c = s[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

}  // namespace detail

// Accepts "YYYY-MM-DD" and "YYYY-MM-DDTHH:MM:SS" with optional fractional
// seconds (discarded) and optional "Z" or "+hh:mm"/"-hh:mm" offset. A bare
// date is midnight UTC.
inline std::optional<UtcTime> try_parse_iso8601(std::string_view s) {
  int y, mo, d;
  if (!detail::read_int(s, 0, 4, y)) return std::nullopt;
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!detail::read_int(s, 5, 2, mo) || !detail::read_int(s, 8, 2, d)) return std::nullopt;
  if (mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;

  int h = 0, mi = 0, sec = 0, off_min = 0;
  std::size_t pos = 10;
  if (pos < s.size()) {
    char sep = s[pos];
    if (sep != 'T' && sep != ' ') return std::nullopt;
    ++pos;
    if (!detail::read_int(s, pos, 2, h)) return std::nullopt;
    if (pos + 2 >= s.size() || s[pos + 2] != ':') return std::nullopt;
    if (!detail::read_int(s, pos + 3, 2, mi)) return std::nullopt;
    pos += 5;
    if (pos < s.size() && s[pos] == ':') {
      if (!detail::read_int(s, pos + 1, 2, sec)) return std::nullopt;
      pos += 3;
    }
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    if (pos < s.size()) {
      char c = s[pos];
      if (c == 'Z') {
        ++pos;
      } else if (c == '+' || c == '-') {
        int oh, om;
        if (!detail::read_int(s, pos + 1, 2, oh)) return std::nullopt;
        if (pos + 3 >= s.size() || s[pos + 3] != ':') return std::nullopt;
        if (!detail::read_int(s, pos + 4, 2, om)) return std::nullopt;
        off_min = (oh * 60 + om) * (c == '+' ? 1 : -1);
        pos += 6;
      }
    }
    if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;

  std::int64_t days = detail::days_from_civil(y, mo, d);
  std::int64_t t = days * 86400 + h * 3600 + mi * 60 + sec - off_min * 60;
  return UtcTime{t};
}

inline UtcTime parse_iso8601(std::string_view s) {
  auto t = try_parse_iso8601(s);
  if (!t) throw TimeParseError("not an ISO 8601 timestamp: '" + std::string(s) + "'");
  return *t;
}

inline std::string format_iso8601(UtcTime t) {
  std::int64_t days = t.secs / 86400;
  std::int64_t rem = t.secs % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  int y, m, d;
  detail::civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                static_cast<int>(rem / 3600), static_cast<int>((rem % 3600) / 60),
                static_cast<int>(rem % 60));
  return buf;
}

inline std::string format_iso8601_date(UtcTime t) {
  return format_iso8601(t).substr(0, 10);
}

}  // namespace threatrank
