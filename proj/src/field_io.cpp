#include "critdrift/field_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "critdrift/error.hpp"

namespace critdrift {
namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

void write_components(const std::filesystem::path& path, const TorusGrid& grid,
                      const std::vector<const ScalarField*>& comps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  const std::int32_t header[2] = {to_little<std::int32_t>(grid.dim()), to_little<std::int32_t>(grid.n())};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (const ScalarField* c : comps) {
    for (double v : c->values()) {
      const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
  }
  if (!out) throw InvalidInput("write failed for " + path.string());
}

void write_csv_components(const std::filesystem::path& path, const TorusGrid& grid,
                          const std::vector<const ScalarField*>& comps) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw InvalidInput("cannot open " + path.string() + " for writing");
  std::fprintf(fp, "%d,%d\n", grid.dim(), grid.n());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    for (std::size_t c = 0; c < comps.size(); ++c) {
      std::fprintf(fp, c == 0 ? "%.17g" : ",%.17g", (*comps[c])[j]);
    }
    std::fputc('\n', fp);
  }
  if (std::fclose(fp) != 0) throw InvalidInput("write failed for " + path.string());
}

struct RawField {
  int dim = 0;
  int n = 0;
  std::vector<std::vector<double>> components;
};

bool looks_binary(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext != ".csv" && ext != ".txt";
}

RawField read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::int32_t header[2];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) throw InvalidInput(path.string() + ": truncated header");
  RawField raw;
  raw.dim = to_little(header[0]);
  raw.n = to_little(header[1]);
  const TorusGrid grid(raw.dim, raw.n);  // validates
  std::vector<char> rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t per = grid.size() * sizeof(double);
  if (rest.empty() || rest.size() % per != 0) {
    throw InvalidInput(path.string() + ": payload is not a whole number of components for the header grid");
  }
  const std::size_t ncomp = rest.size() / per;
  raw.components.assign(ncomp, std::vector<double>(grid.size()));
  for (std::size_t c = 0; c < ncomp; ++c) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      std::uint64_t bits;
      std::memcpy(&bits, rest.data() + c * per + j * sizeof(double), sizeof(bits));
      raw.components[c][j] = std::bit_cast<double>(to_little(bits));
    }
  }
  return raw;
}

RawField read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path.string() + ": missing header line");
  RawField raw;
  if (std::sscanf(line.c_str(), "%d,%d", &raw.dim, &raw.n) != 2) {
    throw InvalidInput(path.string() + ":1: header must be \"d,n\"");
  }
  const TorusGrid grid(raw.dim, raw.n);
  std::size_t lineno = 1;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto* b = cell.data();
      const auto [ptr, ec] = std::from_chars(b, b + cell.size(), v);
      if (ec != std::errc{} || ptr != b + cell.size()) {
        throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      vals.push_back(v);
    }
    if (raw.components.empty()) raw.components.assign(vals.size(), std::vector<double>(grid.size()));
    if (vals.size() != raw.components.size()) {
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": inconsistent column count");
    }
    if (row >= grid.size()) throw InvalidInput(path.string() + ": more rows than grid points");
    for (std::size_t c = 0; c < vals.size(); ++c) raw.components[c][row] = vals[c];
    ++row;
  }
  if (row != grid.size()) throw InvalidInput(path.string() + ": expected " + std::to_string(grid.size()) + " rows");
  return raw;
}

RawField read_any(const std::filesystem::path& path) {
  return looks_binary(path) ? read_binary(path) : read_csv(path);
}

}  // namespace

void write_field_binary(const std::filesystem::path& path, const ScalarField& f) {
  write_components(path, f.grid(), {&f});
}

void write_field_binary(const std::filesystem::path& path, const VectorField& b) {
  std::vector<const ScalarField*> comps;
  for (int a = 0; a < b.dim(); ++a) comps.push_back(&b[a]);
  write_components(path, b.grid(), comps);
}

void write_field_csv(const std::filesystem::path& path, const ScalarField& f) {
  write_csv_components(path, f.grid(), {&f});
}

void write_field_csv(const std::filesystem::path& path, const VectorField& b) {
  std::vector<const ScalarField*> comps;
  for (int a = 0; a < b.dim(); ++a) comps.push_back(&b[a]);
  write_csv_components(path, b.grid(), comps);
}

ScalarField read_scalar_field(const std::filesystem::path& path) {
  RawField raw = read_any(path);
  if (raw.components.size() != 1) throw InvalidInput(path.string() + ": expected a scalar field (one component)");
  return ScalarField(TorusGrid(raw.dim, raw.n), std::move(raw.components.front()));
}

VectorField read_vector_field(const std::filesystem::path& path) {
  RawField raw = read_any(path);
  const TorusGrid grid(raw.dim, raw.n);
  if (static_cast<int>(raw.components.size()) != raw.dim) {
    throw InvalidInput(path.string() + ": expected " + std::to_string(raw.dim) + " components");
  }
  std::vector<ScalarField> comps;
  for (auto& c : raw.components) comps.emplace_back(grid, std::move(c));
  return VectorField(std::move(comps));
}

}  // namespace critdrift
