#pragma once
// Field file formats shared by the CLI and external consumers.
//
// Binary: int32 d, int32 n, then the row-major values of each component as
// IEEE-754 float64; everything little-endian. A scalar field has one
// component, a vector field d components stored back to back.
//
// CSV: a first line "d,n", then one line per grid point in row-major order
// holding the component values separated by commas (17 significant digits).

#include <filesystem>

#include "critdrift/grid.hpp"

namespace critdrift {

void write_field_binary(const std::filesystem::path& path, const ScalarField& f);
void write_field_binary(const std::filesystem::path& path, const VectorField& b);
void write_field_csv(const std::filesystem::path& path, const ScalarField& f);
void write_field_csv(const std::filesystem::path& path, const VectorField& b);

ScalarField read_scalar_field(const std::filesystem::path& path);
VectorField read_vector_field(const std::filesystem::path& path);

}  // namespace critdrift
