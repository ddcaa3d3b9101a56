#include "fluctsel/io/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include <Eigen/Core>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/version.hpp>

#include "fluctsel/core/error.hpp"

namespace fluctsel {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

[[noreturn]] void row_error(const std::string& what, long line) {
  fail(Errc::ParseError, "line " + std::to_string(line) + ": " + what);
}

template <class T>
T parse_number(const std::string& s, const char* field, long line) {
  T v{};
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e || s.empty())
    row_error(std::string(field) + " is not a valid number: '" + s + "'", line);
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Errc::IoError, "cannot open for writing: " + path.string());
  return f;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::vector<Brood> read_broods_csv(std::istream& in) {
  std::string line;
  long lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) fail(Errc::ParseError, "empty brood file: missing header");
  int iy = -1, iz = -1, ix = -1;
  for (int k = 0; k < static_cast<int>(header.size()); ++k) {
    if (header[k] == "year") iy = k;
    else if (header[k] == "laying_date") iz = k;
    else if (header[k] == "n_fledglings") ix = k;
  }
  if (iy < 0 || iz < 0 || ix < 0)
    row_error("header must contain year, laying_date and n_fledglings", lineno);
  const std::size_t need = static_cast<std::size_t>(std::max({iy, iz, ix})) + 1;
  std::vector<Brood> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < need)
      row_error("expected at least " + std::to_string(need) + " fields, got " + std::to_string(f.size()),
                lineno);
    Brood b;
    b.year = parse_number<int>(f[iy], "year", lineno);
    b.laying_date = parse_number<double>(f[iz], "laying_date", lineno);
    if (!std::isfinite(b.laying_date)) row_error("laying_date is not finite", lineno);
    b.n_fledglings = parse_number<int>(f[ix], "n_fledglings", lineno);
    if (b.n_fledglings < 0)
      row_error("n_fledglings must be non-negative, got " + std::to_string(b.n_fledglings), lineno);
    out.push_back(b);
  }
  if (out.empty()) fail(Errc::ParseError, "brood file has no data rows");
  return out;
}

std::vector<Brood> read_broods_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::IoError, "cannot open brood file: " + path.string());
  return read_broods_csv(f);
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  return Dataset::from_broods(read_broods_csv(path));
}

void write_broods_csv(std::ostream& out, const Dataset& d) {
  out << "year,laying_date,n_fledglings\n";
  for (const auto& y : d.years())
    for (std::size_t i = 0; i < y.z.size(); ++i)
      out << y.year << ',' << format_double(y.z[i]) << ',' << y.x[i] << '\n';
}

void write_broods_csv(const std::filesystem::path& path, const Dataset& d) {
  auto f = open_out(path);
  write_broods_csv(f, d);
}

void write_latents_csv(const std::filesystem::path& path, const Dataset& d, const LatentStates& u) {
  if (static_cast<std::size_t>(u.tmax()) != d.num_years())
    fail(Errc::DimensionMismatch, "write_latents_csv: latent rows differ from years");
  auto f = open_out(path);
  f << "year,alpha,theta,omega\n";
  for (std::size_t t = 0; t < d.num_years(); ++t) {
    f << d.year(t).year;
    for (int k = 0; k < 3; ++k) f << ',' << format_double(u.states(t, k));
    f << '\n';
  }
}

IniMap read_ini(std::istream& in, const std::string& origin) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(Errc::ConfigError, origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  IniMap out;
  for (const auto& [k, v] : tree) {
    if (v.empty()) {
      out[k] = trim(v.data());
    } else {
      for (const auto& [k2, v2] : v) out[k + "." + k2] = trim(v2.data());
    }
  }
  return out;
}

IniMap read_ini(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) fail(Errc::ConfigError, "cannot open config: " + path.string());
  return read_ini(f, path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto f = open_out(path);
  f << text;
  if (!f) fail(Errc::IoError, "write failed: " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json build_info() {
  nlohmann::json j;
  j["fluctsel"] = FLUCTSEL_VERSION;
  j["compiler"] = __VERSION__;
  j["cxx_standard"] = static_cast<long>(__cplusplus);
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  j["boost"] = BOOST_LIB_VERSION;
#ifdef _OPENMP
  j["openmp"] = _OPENMP;
#endif
  j["hardware_threads"] = std::thread::hardware_concurrency();
  return j;
}

}  // namespace fluctsel
