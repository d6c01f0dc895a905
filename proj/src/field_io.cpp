#include "pmcf/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pmcf/error.hpp"

namespace pmcf {

namespace {

auto to_le(double v) -> std::uint64_t {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return bits;
}

auto from_le(std::uint64_t bits) -> double {
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

auto describe_grid(const TorusGrid& grid) -> std::string {
  std::ostringstream s;
  s << "dims (";
  for (int a = 0; a < grid.dim(); ++a) s << (a ? "," : "") << grid.n(a);
  s << ") extents (";
  for (int a = 0; a < grid.dim(); ++a) s << (a ? "," : "") << grid.extent(a);
  s << ")";
  return s.str();
}

void save_field(const ScalarField& u, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::format, "cannot open " + path + " for writing");
  const auto& g = u.grid();
  std::ostringstream header;
  header << "PMCF1 " << g.dim();
  for (int a = 0; a < g.dim(); ++a) header << ' ' << g.n(a);
  header << std::setprecision(17);
  for (int a = 0; a < g.dim(); ++a) header << ' ' << g.extent(a);
  header << '\n';
  out << header.str();
  std::vector<std::uint64_t> raw(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) raw[i] = to_le(u[i]);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(std::uint64_t)));
  require(static_cast<bool>(out), ErrorKind::format, "write failed for " + path);
}

auto load_field(const std::string& path, const std::optional<TorusGrid>& expected) -> ScalarField {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::format, "cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::format, path + ": missing header");
  std::istringstream hs(line);
  std::string magic;
  int d = 0;
  hs >> magic >> d;
  require(magic == "PMCF1", ErrorKind::format, path + ": bad magic '" + magic + "'");
  require(hs && d >= 1 && d <= 3, ErrorKind::format, path + ": bad dimension in header");
  std::vector<int> dims(d);
  std::vector<double> extents(d);
  for (auto& n : dims) hs >> n;
  for (auto& e : extents) hs >> e;
  require(static_cast<bool>(hs), ErrorKind::format, path + ": truncated header");
  std::optional<TorusGrid> grid;
  try {
    grid.emplace(dims, extents);
  } catch (const Error& e) {
    fail(ErrorKind::format, path + ": invalid grid in header: " + e.what());
  }
  if (expected && !(*expected == *grid)) {
    fail(ErrorKind::format, path + ": grid mismatch, file has " + describe_grid(*grid) + " but config has " +
                                describe_grid(*expected));
  }
  std::vector<std::uint64_t> raw(grid->size());
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(std::uint64_t)));
  require(in.gcount() == static_cast<std::streamsize>(raw.size() * sizeof(std::uint64_t)), ErrorKind::format,
          path + ": data shorter than the header promises");
  in.peek();
  require(in.eof(), ErrorKind::format, path + ": trailing bytes after field data");
  std::vector<double> values(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) values[i] = from_le(raw[i]);
  return ScalarField(*grid, std::move(values));
}

}  // namespace pmcf
