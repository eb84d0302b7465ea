#pragma once

// JSON field files: {"kind", "n", "N", "data"} with data flat and row-major
// over cells. Strides per cell: scalar 1, vec2 2, rotation n*n, skew_potential
// n*n*2 (matrix index-major, then direction).

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cgauge/grid.hpp"
#include "cgauge/lie_fields.hpp"

namespace cgauge {

enum class FieldKind { Scalar, Vec2, Rotation, SkewPotential };
std::string to_string(FieldKind kind);

struct FieldDocument {
  FieldKind kind;
  int n;
  int N;
  std::vector<double> data;
};

/// Parses and validates a field document. `source` names the input in errors.
/// Throws FieldFormatError with the byte offset of the offending token.
FieldDocument parse_field(std::string_view text, const std::string& source);
FieldDocument read_field(const std::filesystem::path& path);

std::string field_json(const ScalarField& f);
std::string field_json(const VecField& f);
std::string field_json(const RotationField& P);
std::string field_json(const SkewPotential& omega);

void write_field(const std::filesystem::path& path, const ScalarField& f);
void write_field(const std::filesystem::path& path, const VecField& f);
void write_field(const std::filesystem::path& path, const RotationField& P);
void write_field(const std::filesystem::path& path, const SkewPotential& omega);

/// Typed readers; throw FieldFormatError when the kind differs.
ScalarField read_scalar_field(const std::filesystem::path& path);
VecField read_vec2_field(const std::filesystem::path& path);
RotationField read_rotation_field(const std::filesystem::path& path);
SkewPotential read_skew_potential(const std::filesystem::path& path);

/// Writes text to path, creating parent directories.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace cgauge
