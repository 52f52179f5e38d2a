#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "geopinn/grid.hpp"

namespace geopinn::io {

/// Shortest decimal representation that parses back to the identical double.
std::string format_double(double v);

/// Strict decimal parse; throws UsageError naming `what` on failure.
double parse_double(std::string_view s, std::string_view what = "number");
long parse_long(std::string_view s, std::string_view what = "integer");

/// Whitespace tokenizer; '#' starts a comment.
std::vector<std::string> tokenize(std::string_view line);

std::string read_text(const std::filesystem::path& p);
void write_text(const std::filesystem::path& p, std::string_view text);

/// Field file: header `field <n_channels> <n_xi> <n_eta> <names...>` followed by
/// each channel's rows (eta-major), one row of n_xi values per line.
std::string format_field(const GridField& f);
GridField parse_field(std::string_view text);
void write_field(const std::filesystem::path& p, const GridField& f);
GridField read_field(const std::filesystem::path& p);

}  // namespace geopinn::io
