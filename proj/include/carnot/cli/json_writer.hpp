#pragma once

#include <json.hpp>

#include <ostream>
#include <string>

namespace carnot::cli {

using Report = nlohmann::ordered_json;

// Serializes with every floating-point number printed to 17 significant
// digits ("%.17g"), so identical inputs give byte-identical output.
// Non-finite numbers become null.
void write_json(std::ostream& out, const Report& doc, int indent = 2);
std::string to_json_string(const Report& doc, int indent = 2);

std::string format_double(double v);

}  // namespace carnot::cli
