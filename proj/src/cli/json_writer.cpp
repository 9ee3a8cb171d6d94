#include "carnot/cli/json_writer.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace carnot::cli {

namespace {

void write_value(std::ostream& out, const Report& v, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (v.type()) {
    case Report::value_t::object: {
      if (v.empty()) {
        out << "{}";
        return;
      }
      out << '{' << nl;
      bool first = true;
      for (const auto& [key, item] : v.items()) {
        if (!first) out << ',' << nl;
        first = false;
        out << pad << Report(key).dump() << (indent > 0 ? ": " : ":");
        write_value(out, item, indent, depth + 1);
      }
      out << nl << close_pad << '}';
      return;
    }
    case Report::value_t::array: {
      if (v.empty()) {
        out << "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& item : v) flat = flat && !item.is_structured();
      out << '[';
      if (!flat) out << nl;
      bool first = true;
      for (const auto& item : v) {
        if (!first) out << (flat ? ", " : ",") << (flat ? "" : nl);
        first = false;
        if (!flat) out << pad;
        write_value(out, item, indent, depth + 1);
      }
      if (!flat) out << nl << close_pad;
      out << ']';
      return;
    }
    case Report::value_t::number_float:
      out << format_double(v.get<double>());
      return;
    default:
      out << v.dump();
      return;
  }
}

}  // namespace

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_json(std::ostream& out, const Report& doc, int indent) {
  write_value(out, doc, indent, 0);
  out << '\n';
}

std::string to_json_string(const Report& doc, int indent) {
  std::ostringstream out;
  write_json(out, doc, indent);
  return out.str();
}

}  // namespace carnot::cli
