#pragma once

#include <cstdint>
#include <string>

#include "conespectra/disorder.hpp"
#include "conespectra/substitution.hpp"

namespace conespectra {

struct ModelFile {
    SubstitutionModel model;
    bool has_disorder = false;
    DisorderSpec disorder;
};

/// Parse a model file (JSON: alphabet, matrix, v_per, root_label, optional
/// disorder). Throws ParseError with line/column on malformed input.
ModelFile read_model_file(const std::string& path);
ModelFile parse_model_text(const std::string& text);

/// Serialize with integers exact and reals at 17 significant digits, so a
/// write/read round trip is bit-exact.
std::string model_to_text(const ModelFile& mf);
void write_model_file(const std::string& path, const ModelFile& mf);

/// Shortest decimal that round-trips the double, using 17 significant digits.
std::string format_double(double x);

/// FNV-1a 64-bit digest, hex encoded; used for output fingerprints.
std::string fnv1a_hex(const std::string& payload);

std::string mode_name(DisorderMode mode);
DisorderMode mode_from_name(const std::string& name);
std::string law_name(LawKind kind);
LawKind law_from_name(const std::string& name);

}  // namespace conespectra
