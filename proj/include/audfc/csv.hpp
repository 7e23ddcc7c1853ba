#pragma once

// CSV ingestion and emission for transaction logs.
//
// Format: header `timestamp,attr1,attr2,...`, one event per line. The
// timestamp column accepts epoch seconds or ISO-8601 (date, optional time,
// optional fractional seconds which are truncated, optional `Z` / `±HH:MM`).

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "audfc/dataset.hpp"
#include "audfc/error.hpp"

namespace audfc {

namespace detail {

// Days since 1970-01-01 for a proleptic Gregorian date (H. Hinnant).
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) noexcept {
  y -= m <= 2 ? 1 : 0;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr bool leap_year(std::int64_t y) noexcept {
  return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

constexpr unsigned days_in_month(std::int64_t y, unsigned m) noexcept {
  constexpr unsigned days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && leap_year(y) ? 29 : days[m - 1];
}

inline bool read_fixed(std::string_view s, std::size_t& pos, std::size_t width, int& out) {
  if (pos + width > s.size()) return false;
  out = 0;
  for (std::size_t i = 0; i < width; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    out = out * 10 + (c - '0');
  }
  pos += width;
  return true;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t c = line.find(',', pos);
    if (c == std::string_view::npos) {
      out.push_back(trim(line.substr(pos)));
      return out;
    }
    out.push_back(trim(line.substr(pos, c - pos)));
    pos = c + 1;
  }
}

}  // namespace detail

/// Parses epoch seconds or an ISO-8601 timestamp into UTC epoch seconds.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  s = detail::trim(s);
  if (s.empty()) return std::nullopt;

  // Pure integer (optionally signed) is epoch seconds.
  {
    Timestamp v = 0;
    auto body = s.front() == '+' ? s.substr(1) : s;
    auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec == std::errc() && p == body.data() + body.size()) return v;
  }

  std::size_t pos = 0;
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!detail::read_fixed(s, pos, 4, year) || pos >= s.size() || s[pos++] != '-' ||
      !detail::read_fixed(s, pos, 2, month) || pos >= s.size() || s[pos++] != '-' ||
      !detail::read_fixed(s, pos, 2, day)) {
    return std::nullopt;
  }
  if (month < 1 || month > 12 || day < 1 ||
      static_cast<unsigned>(day) > detail::days_in_month(year, static_cast<unsigned>(month))) {
    return std::nullopt;
  }
  std::int64_t offset = 0;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    ++pos;
    if (!detail::read_fixed(s, pos, 2, hour) || pos >= s.size() || s[pos++] != ':' ||
        !detail::read_fixed(s, pos, 2, minute)) {
      return std::nullopt;
    }
    if (pos < s.size() && s[pos] == ':') {
      ++pos;
      if (!detail::read_fixed(s, pos, 2, second)) return std::nullopt;
      if (pos < s.size() && s[pos] == '.') {
        ++pos;
        std::size_t digits = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos, ++digits;
        if (digits == 0) return std::nullopt;
      }
    }
    if (hour > 23 || minute > 59 || second > 60) return std::nullopt;
    if (pos < s.size()) {
      if (s[pos] == 'Z' && pos + 1 == s.size()) {
        ++pos;
      } else if (s[pos] == '+' || s[pos] == '-') {
        const int sign = s[pos] == '-' ? -1 : 1;
        ++pos;
        int oh = 0, om = 0;
        if (!detail::read_fixed(s, pos, 2, oh)) return std::nullopt;
        if (pos < s.size() && s[pos] == ':') ++pos;
        if (!detail::read_fixed(s, pos, 2, om)) return std::nullopt;
        if (oh > 23 || om > 59) return std::nullopt;
        offset = sign * (oh * 3600 + om * 60);
      } else {
        return std::nullopt;
      }
    }
    if (pos != s.size()) return std::nullopt;
  }
  const std::int64_t days =
      detail::days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  return days * kSecondsPerDay + hour * 3600 + minute * 60 + second - offset;
}

/// Reads a log from CSV text. With `declared` set, the header must name the
/// declared attributes in order and every value must exist in that schema;
/// otherwise the schema is inferred with values in first-seen order.
inline TransactionLog read_csv(std::istream& in, const AttributeSchema* declared = nullptr) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header row", 1);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = detail::split_commas(line);
  if (header.size() < 2) throw ParseError("header needs a timestamp and at least one attribute", 1);

  AttributeSchema schema;
  if (declared) {
    if (declared->k() != header.size() - 1) {
      throw SchemaError("header has " + std::to_string(header.size() - 1) +
                        " attributes, declared schema has " + std::to_string(declared->k()));
    }
    for (std::size_t a = 0; a < declared->k(); ++a) {
      if (header[a + 1] != declared->attribute(a).name) {
        throw SchemaError("header column '" + std::string(header[a + 1]) +
                          "' does not match declared attribute '" + declared->attribute(a).name +
                          "'");
      }
    }
    schema = *declared;
  } else {
    for (std::size_t a = 1; a < header.size(); ++a) {
      try {
        schema.add_attribute(std::string(header[a]));
      } catch (const SchemaError& e) {
        throw ParseError(e.what(), 1);
      }
    }
  }
  const std::size_t k = schema.k();

  std::vector<Timestamp> timestamps;
  std::vector<std::uint32_t> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_commas(line);
    if (fields.size() != k + 1) {
      throw ParseError("expected " + std::to_string(k + 1) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    auto ts = parse_timestamp(fields[0]);
    if (!ts) throw ParseError("malformed timestamp '" + std::string(fields[0]) + "'", line_no);
    for (std::uint32_t a = 0; a < k; ++a) {
      if (fields[a + 1].empty()) {
        throw ParseError("missing value for attribute '" + schema.attribute(a).name + "'", line_no);
      }
      if (declared) {
        auto v = schema.find_value(a, fields[a + 1]);
        if (!v) {
          throw SchemaError("line " + std::to_string(line_no) + ": value '" +
                            std::string(fields[a + 1]) + "' not in declared schema for '" +
                            schema.attribute(a).name + "'");
        }
        values.push_back(*v);
      } else {
        values.push_back(schema.intern_value(a, fields[a + 1]));
      }
    }
    timestamps.push_back(*ts);
  }
  if (timestamps.empty()) return TransactionLog(std::move(schema));
  return TransactionLog(std::move(schema), std::move(timestamps), std::move(values));
}

enum class SchemaMode { inferred, declared };

inline TransactionLog load_csv(const std::filesystem::path& path,
                               const AttributeSchema* declared = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return read_csv(in, declared);
}

/// Writes the log with epoch-second timestamps.
inline void write_csv(std::ostream& out, const TransactionLog& log) {
  const auto& schema = log.schema();
  out << "timestamp";
  for (const auto& a : schema.attributes()) out << ',' << a.name;
  out << '\n';
  std::string buf;
  for (std::size_t r = 0; r < log.size(); ++r) {
    buf = std::to_string(log.timestamp(r));
    for (std::size_t a = 0; a < log.k(); ++a) {
      buf += ',';
      buf += schema.attribute(a).values[log.value(r, a)];
    }
    buf += '\n';
    out << buf;
  }
}

inline void save_csv(const std::filesystem::path& path, const TransactionLog& log) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_csv(out, log);
}

}  // namespace audfc
