#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "phn/em.hpp"
#include "phn/model.hpp"

namespace phn::io {

/// Model specification from a JSON document of the form
/// {"p":[...], "P":[[...]], "v":[...], "alpha":..., "beta":...};
/// array order is phase index 1..d. The phase type is mean-1 normalized
/// before the model is built.
DiffusionModel load_model_json(const std::string& json_text);
DiffusionModel load_model_file(const std::filesystem::path& path);

/// Provenance header written as the first line of every output file:
/// "# phnlab <version> config=<fnv64 hex> seed=<master seed>".
std::string file_header(std::uint64_t config_hash, std::uint64_t master_seed);

/// FNV-1a 64-bit hash used for config fingerprints.
std::uint64_t fnv1a64(const std::string& text);

/// Fixed 17-significant-digit float formatting used in all CSV output.
std::string format_double(double value);

/// Sample/trajectory CSV: header line, then "chain_id,step_index,x_1..x_d".
void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples,
                       std::uint64_t config_hash);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory,
                          std::uint64_t config_hash, std::uint64_t master_seed);

/// Compact binary dump: 8-byte magic "PHNEM001", then little-endian u64 row
/// and column counts followed by row-major little-endian f64 payload.
void write_matrix_binary(const std::filesystem::path& path, const Mat& matrix);
void write_samples_binary(const std::filesystem::path& path, const SampleSet& samples);
void write_trajectory_binary(const std::filesystem::path& path, const Trajectory& trajectory);
Mat read_matrix_binary(const std::filesystem::path& path);

}  // namespace phn::io
