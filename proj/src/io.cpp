#include "geopinn/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace geopinn::io {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw UsageError("invalid " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

long parse_long(std::string_view s, std::string_view what) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw UsageError("invalid " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

std::vector<std::string> tokenize(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<std::string> out;
  std::size_t k = 0;
  while (k < line.size()) {
    while (k < line.size() && std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    std::size_t start = k;
    while (k < line.size() && !std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    if (k > start) out.emplace_back(line.substr(start, k - start));
  }
  return out;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& p, std::string_view text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + p.string() + "'");
  out << text;
}

std::string format_field(const GridField& f) {
  if (f.n_channels() == 0) throw UsageError("field has no channels");
  const auto rows = f[0].rows(), cols = f[0].cols();
  std::string s = "field " + std::to_string(f.n_channels()) + " " + std::to_string(cols) + " " +
                  std::to_string(rows);
  for (const auto& n : f.names) s += " " + n;
  s += "\n";
  for (const auto& ch : f.channels) {
    if (ch.rows() != rows || ch.cols() != cols) throw UsageError("field channels differ in shape");
    for (std::size_t j = 0; j < rows; ++j) {
      for (std::size_t i = 0; i < cols; ++i) {
        if (i) s += ' ';
        s += format_double(ch(j, i));
      }
      s += '\n';
    }
  }
  return s;
}

GridField parse_field(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw UsageError("empty field file");
  auto head = tokenize(line);
  if (head.size() < 4 || head[0] != "field") throw UsageError("field file: bad header");
  const auto nch = static_cast<std::size_t>(parse_long(head[1], "channel count"));
  const auto nxi = static_cast<std::size_t>(parse_long(head[2], "n_xi"));
  const auto neta = static_cast<std::size_t>(parse_long(head[3], "n_eta"));
  if (head.size() != 4 + nch) throw UsageError("field file: expected one name per channel");
  GridField f;
  std::vector<double> values;
  values.reserve(nch * nxi * neta);
  std::string tok;
  while (in >> tok) values.push_back(parse_double(tok, "field value"));
  if (values.size() != nch * nxi * neta)
    throw UsageError("field file: expected " + std::to_string(nch * nxi * neta) + " values, got " +
                     std::to_string(values.size()));
  for (std::size_t c = 0; c < nch; ++c) {
    Array2 a(neta, nxi);
    std::copy_n(values.begin() + static_cast<long>(c * nxi * neta), nxi * neta, a.data());
    f.add(head[4 + c], std::move(a));
  }
  return f;
}

void write_field(const std::filesystem::path& p, const GridField& f) { write_text(p, format_field(f)); }
GridField read_field(const std::filesystem::path& p) { return parse_field(read_text(p)); }

}  // namespace geopinn::io
