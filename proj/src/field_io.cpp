#include "fattenlab/field_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace fattenlab {

namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xFFu) << (8 * (7 - i));
    return r;
  }
  return v;
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_field(const std::filesystem::path& stem, const Field& f) {
  const Grid& g = f.grid();
  {
    std::ofstream out(with_suffix(stem, ".f64"), std::ios::binary);
    if (!out) throw ValidationError("cannot write " + with_suffix(stem, ".f64").string());
    std::vector<std::uint64_t> raw(static_cast<std::size_t>(f.size()));
    for (Index n = 0; n < f.size(); ++n)
      raw[static_cast<std::size_t>(n)] = to_little_endian(std::bit_cast<std::uint64_t>(f[n]));
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 8));
  }
  std::ofstream meta(with_suffix(stem, ".meta"));
  if (!meta) throw ValidationError("cannot write " + with_suffix(stem, ".meta").string());
  meta << "dim = " << g.dim() << "\n";
  meta << "points_per_axis = " << g.points() << "\n";
  meta << "extent_lo =";
  for (int a = 0; a < g.dim(); ++a) meta << ' ' << format_double(g.lo(a));
  meta << "\nextent_hi =";
  for (int a = 0; a < g.dim(); ++a) meta << ' ' << format_double(g.hi(a));
  meta << "\ntime = " << format_double(f.time()) << "\n";
  if (g.periodic())
    meta << "boundary = periodic\n";
  else
    meta << "boundary = far_field " << format_double(g.boundary().value) << "\n";
}

Field read_field(const std::filesystem::path& stem) {
  std::ifstream meta(with_suffix(stem, ".meta"));
  if (!meta) throw ValidationError("cannot read " + with_suffix(stem, ".meta").string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  for (const char* key : {"dim", "points_per_axis", "extent_lo", "extent_hi", "time", "boundary"})
    if (!kv.count(key)) throw ValidationError(std::string("field metadata missing ") + key);

  const int dim = std::stoi(kv["dim"]);
  const int points = std::stoi(kv["points_per_axis"]);
  std::istringstream lo_in(kv["extent_lo"]), hi_in(kv["extent_hi"]);
  Point lo = Point::Zero();
  double hi0 = 0.0;
  for (int a = 0; a < dim; ++a) {
    double hi = 0.0;
    lo_in >> lo[a];
    hi_in >> hi;
    if (a == 0) hi0 = hi - lo[0];
  }
  Boundary b = Boundary::periodic();
  if (kv["boundary"].rfind("far_field", 0) == 0) b = Boundary::far_field(std::stod(kv["boundary"].substr(9)));
  Grid g(dim, lo, hi0, points, b);

  std::ifstream in(with_suffix(stem, ".f64"), std::ios::binary);
  if (!in) throw ValidationError("cannot read " + with_suffix(stem, ".f64").string());
  std::vector<std::uint64_t> raw(static_cast<std::size_t>(g.size()));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 8));
  if (in.gcount() != static_cast<std::streamsize>(raw.size() * 8)) throw ValidationError("truncated field data");
  Field f(g, 0.0, std::stod(kv["time"]));
  for (Index n = 0; n < f.size(); ++n) f[n] = std::bit_cast<double>(to_little_endian(raw[static_cast<std::size_t>(n)]));
  return f;
}

void write_pgm(const std::filesystem::path& path, const Field& f) {
  const Grid& g = f.grid();
  require(g.dim() == 2, "image export needs a 2-D field");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  const Index p = g.points();
  out << "P5\n" << p << ' ' << p << "\n255\n";
  std::vector<unsigned char> px(static_cast<std::size_t>(p * p));
  // image rows run top to bottom, i.e. decreasing y
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i) {
      const double v = std::clamp(f.at(i, p - 1 - j), -1.0, 1.0);
      px[static_cast<std::size_t>(j * p + i)] = static_cast<unsigned char>(std::lround((v + 1.0) * 127.5));
    }
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

}  // namespace fattenlab
