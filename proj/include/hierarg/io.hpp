#pragma once

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>

#include "hierarg/error.hpp"
#include "json.hpp"

#ifndef HIERARG_VERSION
#define HIERARG_VERSION "0.0.0"
#endif

namespace hierarg::io {

inline constexpr std::string_view version = HIERARG_VERSION;

/// Locale-independent shortest-safe rendering with 17 significant digits.
inline std::string format_number(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

class csv_writer {
 public:
  explicit csv_writer(std::ostream& out) : out_(out) {}

  void comment(std::string_view text) { out_ << "# " << text << '\n'; }

  void header(std::initializer_list<std::string_view> columns) {
    bool first = true;
    for (auto c : columns) {
      if (!first) out_ << ',';
      out_ << c;
      first = false;
    }
    out_ << '\n';
  }

  template <class... Ts>
  void row(const Ts&... fields) {
    bool first = true;
    ((emit(fields, first)), ...);
    out_ << '\n';
  }

 private:
  void emit(double v, bool& first) { sep(first); out_ << format_number(v); }
  void emit(int v, bool& first) { sep(first); out_ << v; }
  void emit(long v, bool& first) { sep(first); out_ << v; }
  void emit(std::size_t v, bool& first) { sep(first); out_ << v; }
  void emit(std::string_view v, bool& first) { sep(first); out_ << v; }
  void emit(const char* v, bool& first) { sep(first); out_ << v; }
  void sep(bool& first) {
    if (!first) out_ << ',';
    first = false;
  }

  std::ostream& out_;
};

inline std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw error("cannot open output file '" + path + "'");
  return f;
}

/// Embeds provenance into an exported JSON document.
inline nlohmann::ordered_json with_provenance(nlohmann::ordered_json doc,
                                              const nlohmann::ordered_json& config) {
  doc["code_version"] = std::string(version);
  doc["config"] = config;
  return doc;
}

inline void write_json(const std::string& path, const nlohmann::ordered_json& doc) {
  auto f = open_output(path);
  f << doc.dump(2) << '\n';
}

}  // namespace hierarg::io
