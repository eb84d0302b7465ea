#include "cgauge/field_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cgauge/errors.hpp"

namespace cgauge {

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::Scalar:
      return "scalar";
    case FieldKind::Vec2:
      return "vec2";
    case FieldKind::Rotation:
      return "rotation";
    case FieldKind::SkewPotential:
      return "skew_potential";
  }
  return "unknown";
}

namespace {

std::size_t key_offset(std::string_view text, std::string_view key) {
  const std::string quoted = "\"" + std::string(key) + "\"";
  const auto pos = text.find(quoted);
  return pos == std::string_view::npos ? 0 : pos;
}

// Byte offset of element k of the "data" array; falls back to the key.
std::size_t element_offset(std::string_view text, std::size_t k) {
  std::size_t pos = key_offset(text, "data");
  pos = text.find('[', pos);
  if (pos == std::string_view::npos) return key_offset(text, "data");
  ++pos;
  for (std::size_t idx = 0; pos < text.size(); ++idx) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (idx == k) return pos;
    while (pos < text.size() && text[pos] != ',' && text[pos] != ']') ++pos;
    if (pos >= text.size() || text[pos] == ']') break;
    ++pos;
  }
  return key_offset(text, "data");
}

std::size_t stride(FieldKind kind, int n) {
  switch (kind) {
    case FieldKind::Scalar:
      return 1;
    case FieldKind::Vec2:
      return 2;
    case FieldKind::Rotation:
      return static_cast<std::size_t>(n * n);
    case FieldKind::SkewPotential:
      return static_cast<std::size_t>(n * n * 2);
  }
  return 1;
}

int required_n(FieldKind kind) {
  if (kind == FieldKind::Scalar) return 1;
  if (kind == FieldKind::Vec2) return 2;
  return 0;
}

std::string format_double(double v) {
  if (!std::isfinite(v)) throw Error("field_json: non-finite entry");
  // "-0" would parse back as the integer 0 and lose the sign.
  if (v == 0.0 && std::signbit(v)) return "-0.0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string document(FieldKind kind, int n, int N, std::span<const double> data) {
  std::string out = "{\"kind\": \"" + to_string(kind) + "\", \"n\": " + std::to_string(n) +
                    ", \"N\": " + std::to_string(N) + ", \"data\": [";
  const std::size_t row = static_cast<std::size_t>(N) * stride(kind, n);
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (k > 0) out += (k % row == 0) ? ",\n" : ", ";
    out += format_double(data[k]);
  }
  out += "]}\n";
  return out;
}

}  // namespace

FieldDocument parse_field(std::string_view text, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw FieldFormatError(source, e.byte, "malformed JSON");
  }
  if (!j.is_object()) throw FieldFormatError(source, 0, "top level must be an object");
  for (const auto& item : j.items()) {
    const auto& k = item.key();
    if (k != "kind" && k != "n" && k != "N" && k != "data") {
      throw FieldFormatError(source, key_offset(text, k), "unknown key \"" + k + "\"");
    }
  }
  for (const char* k : {"kind", "n", "N", "data"}) {
    if (!j.contains(k)) throw FieldFormatError(source, 0, std::string("missing key \"") + k + "\"");
  }

  FieldDocument doc{};
  const auto& kind = j["kind"];
  if (!kind.is_string()) throw FieldFormatError(source, key_offset(text, "kind"), "\"kind\" must be a string");
  const std::string ks = kind.get<std::string>();
  if (ks == "scalar") {
    doc.kind = FieldKind::Scalar;
  } else if (ks == "vec2") {
    doc.kind = FieldKind::Vec2;
  } else if (ks == "rotation") {
    doc.kind = FieldKind::Rotation;
  } else if (ks == "skew_potential") {
    doc.kind = FieldKind::SkewPotential;
  } else {
    throw FieldFormatError(source, key_offset(text, "kind"), "unknown kind \"" + ks + "\"");
  }

  if (!j["n"].is_number_integer()) throw FieldFormatError(source, key_offset(text, "n"), "\"n\" must be an integer");
  if (!j["N"].is_number_integer()) throw FieldFormatError(source, key_offset(text, "N"), "\"N\" must be an integer");
  doc.n = j["n"].get<int>();
  doc.N = j["N"].get<int>();
  if (doc.N < 4) throw FieldFormatError(source, key_offset(text, "N"), "\"N\" must be >= 4");
  if (const int req = required_n(doc.kind); req != 0) {
    if (doc.n != req) {
      throw FieldFormatError(source, key_offset(text, "n"), "\"n\" must be " + std::to_string(req) + " for " + ks);
    }
  } else if (doc.n < 2 || doc.n > kMaxN) {
    throw FieldFormatError(source, key_offset(text, "n"), "\"n\" must lie in [2, " + std::to_string(kMaxN) + "]");
  }

  const auto& data = j["data"];
  if (!data.is_array()) throw FieldFormatError(source, key_offset(text, "data"), "\"data\" must be an array");
  const std::size_t expected = static_cast<std::size_t>(doc.N) * doc.N * stride(doc.kind, doc.n);
  if (data.size() != expected) {
    throw FieldFormatError(
        source, key_offset(text, "data"),
        "\"data\" has " + std::to_string(data.size()) + " entries, expected " + std::to_string(expected));
  }
  doc.data.resize(expected);
  for (std::size_t k = 0; k < expected; ++k) {
    if (!data[k].is_number()) throw FieldFormatError(source, element_offset(text, k), "entry is not a number");
    doc.data[k] = data[k].get<double>();
    if (!std::isfinite(doc.data[k])) throw FieldFormatError(source, element_offset(text, k), "entry is not finite");
  }

  if (doc.kind == FieldKind::SkewPotential) {
    const int n = doc.n;
    const std::size_t cell_stride = stride(doc.kind, n);
    for (std::size_t c = 0; c < expected / cell_stride; ++c) {
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
          for (int dir = 0; dir < 2; ++dir) {
            const std::size_t ab = c * cell_stride + (a * n + b) * 2 + dir;
            const std::size_t ba = c * cell_stride + (b * n + a) * 2 + dir;
            if (doc.data[ab] != -doc.data[ba]) {
              throw FieldFormatError(source, element_offset(text, ba), "skew_potential entry is not antisymmetric");
            }
          }
        }
      }
    }
  }
  return doc;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed for " + path.string());
}

FieldDocument read_field(const std::filesystem::path& path) { return parse_field(read_text(path), path.string()); }

std::string field_json(const ScalarField& f) {
  return document(FieldKind::Scalar, 1, f.grid().N(), std::span<const double>(f.values()));
}

std::string field_json(const VecField& f) {
  std::vector<double> flat;
  flat.reserve(f.grid().cells() * 2);
  for (std::size_t c = 0; c < f.grid().cells(); ++c) {
    flat.push_back(f[c][0]);
    flat.push_back(f[c][1]);
  }
  return document(FieldKind::Vec2, 2, f.grid().N(), flat);
}

std::string field_json(const RotationField& P) { return document(FieldKind::Rotation, P.n(), P.grid().N(), P.raw()); }

std::string field_json(const SkewPotential& omega) {
  const int n = omega.n();
  std::vector<double> flat;
  flat.reserve(omega.grid().cells() * n * n * 2);
  for (std::size_t c = 0; c < omega.grid().cells(); ++c) {
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        for (int dir = 0; dir < 2; ++dir) flat.push_back(omega.get(c, dir, a, b));
      }
    }
  }
  return document(FieldKind::SkewPotential, n, omega.grid().N(), flat);
}

void write_field(const std::filesystem::path& path, const ScalarField& f) { write_text(path, field_json(f)); }
void write_field(const std::filesystem::path& path, const VecField& f) { write_text(path, field_json(f)); }
void write_field(const std::filesystem::path& path, const RotationField& P) { write_text(path, field_json(P)); }
void write_field(const std::filesystem::path& path, const SkewPotential& omega) { write_text(path, field_json(omega)); }

namespace {

FieldDocument read_kind(const std::filesystem::path& path, FieldKind kind) {
  const std::string text = read_text(path);
  FieldDocument doc = parse_field(text, path.string());
  if (doc.kind != kind) {
    throw FieldFormatError(path.string(), key_offset(text, "kind"),
                           "expected kind " + to_string(kind) + ", found " + to_string(doc.kind));
  }
  return doc;
}

}  // namespace

ScalarField read_scalar_field(const std::filesystem::path& path) {
  const FieldDocument doc = read_kind(path, FieldKind::Scalar);
  ScalarField f(Grid(doc.N));
  for (std::size_t c = 0; c < doc.data.size(); ++c) f[c] = doc.data[c];
  return f;
}

VecField read_vec2_field(const std::filesystem::path& path) {
  const FieldDocument doc = read_kind(path, FieldKind::Vec2);
  VecField f(Grid(doc.N));
  for (std::size_t c = 0; c < f.grid().cells(); ++c) f[c] = {doc.data[2 * c], doc.data[2 * c + 1]};
  return f;
}

RotationField read_rotation_field(const std::filesystem::path& path) {
  const FieldDocument doc = read_kind(path, FieldKind::Rotation);
  RotationField P(Grid(doc.N), doc.n, false);
  std::copy(doc.data.begin(), doc.data.end(), P.raw().begin());
  if (!validate_rotation(P).ok) {
    throw FieldFormatError(path.string(), key_offset(read_text(path), "data"), "matrices are not rotations");
  }
  return P;
}

SkewPotential read_skew_potential(const std::filesystem::path& path) {
  const FieldDocument doc = read_kind(path, FieldKind::SkewPotential);
  const int n = doc.n;
  SkewPotential omega(Grid(doc.N), n);
  const std::size_t cell_stride = static_cast<std::size_t>(n * n * 2);
  for (std::size_t c = 0; c < omega.grid().cells(); ++c) {
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        for (int dir = 0; dir < 2; ++dir) omega.set(c, dir, a, b, doc.data[c * cell_stride + (a * n + b) * 2 + dir]);
      }
    }
  }
  return omega;
}

}  // namespace cgauge
