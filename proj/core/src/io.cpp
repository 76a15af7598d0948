#include "phn/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "phn/errors.hpp"

namespace phn::io {

namespace {
using nlohmann::json;

Vec vec_from_json(const json& arr, const char* name) {
  if (!arr.is_array()) throw InvalidArgument(std::string(name) + " must be an array");
  Vec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<int>(i)) = arr[i].get<double>();
  return v;
}

Mat mat_from_json(const json& arr, const char* name) {
  if (!arr.is_array() || arr.empty())
    throw InvalidArgument(std::string(name) + " must be a non-empty array of arrays");
  const std::size_t rows = arr.size();
  const std::size_t cols = arr[0].size();
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (arr[i].size() != cols)
      throw InvalidArgument(std::string(name) + " rows have inconsistent lengths");
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = arr[i][j].get<double>();
  }
  return m;
}
}  // namespace

DiffusionModel load_model_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("model JSON parse error: ") + e.what());
  }
  for (const char* key : {"p", "P", "v", "alpha", "beta"})
    if (!doc.contains(key)) throw InvalidArgument(std::string("model JSON missing ") + key);

  const Vec p = vec_from_json(doc["p"], "p");
  const Mat P = mat_from_json(doc["P"], "P");
  const Vec v = vec_from_json(doc["v"], "v");
  const PhaseTypeService pt = normalize_mean(build_phase_type(p, P, v));
  return build_model(pt, doc["alpha"].get<double>(), doc["beta"].get<double>());
}

DiffusionModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open model file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return load_model_json(buf.str());
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string file_header(std::uint64_t config_hash, std::uint64_t master_seed) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "# phnlab %s config=%016llx seed=%llu", PHN_VERSION,
                static_cast<unsigned long long>(config_hash),
                static_cast<unsigned long long>(master_seed));
  return buf;
}

void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples,
                       std::uint64_t config_hash) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << file_header(config_hash, samples.provenance.master_seed) << "\n";
  out << "chain_id,step_index";
  for (int k = 1; k <= samples.dim(); ++k) out << ",x_" << k;
  out << "\n";

  // samples pool chains contiguously in chain_id order
  const auto n_chains = static_cast<std::int64_t>(samples.provenance.chain_seeds.size());
  const std::int64_t n = samples.size();
  std::int64_t row = 0;
  for (std::int64_t c = 0; c < std::max<std::int64_t>(n_chains, 1); ++c) {
    const std::int64_t share =
        n_chains > 0 ? n / n_chains + (c < n % n_chains ? 1 : 0) : n;
    for (std::int64_t i = 0; i < share && row < n; ++i, ++row) {
      const std::int64_t step =
          samples.provenance.burn_in + (i + 1) * samples.provenance.gap;
      out << c << "," << step;
      for (int k = 0; k < samples.dim(); ++k)
        out << "," << format_double(samples.points(row, k));
      out << "\n";
    }
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory,
                          std::uint64_t config_hash, std::uint64_t master_seed) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << file_header(config_hash, master_seed) << "\n";
  out << "chain_id,step_index";
  for (int k = 1; k <= trajectory.states.cols(); ++k) out << ",x_" << k;
  out << "\n";
  for (std::int64_t i = 0; i < trajectory.n_kept(); ++i) {
    out << trajectory.chain_id << "," << i;
    for (int k = 0; k < trajectory.states.cols(); ++k)
      out << "," << format_double(trajectory.states(i, k));
    out << "\n";
  }
}

namespace {
void put_u64_le(std::ofstream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64_le(std::ifstream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}
}  // namespace

void write_matrix_binary(const std::filesystem::path& path, const Mat& matrix) {
  static_assert(std::endian::native == std::endian::little,
                "binary dump assumes a little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out.write("PHNEM001", 8);
  put_u64_le(out, static_cast<std::uint64_t>(matrix.rows()));
  put_u64_le(out, static_cast<std::uint64_t>(matrix.cols()));
  for (std::int64_t i = 0; i < matrix.rows(); ++i) {
    for (std::int64_t j = 0; j < matrix.cols(); ++j) {
      const double v = matrix(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
  }
}

void write_samples_binary(const std::filesystem::path& path, const SampleSet& samples) {
  write_matrix_binary(path, samples.points);
}

void write_trajectory_binary(const std::filesystem::path& path, const Trajectory& trajectory) {
  write_matrix_binary(path, trajectory.states);
}

Mat read_matrix_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "PHNEM001", 8) != 0)
    throw InvalidArgument("bad magic header in " + path.string());
  const std::uint64_t rows = get_u64_le(in);
  const std::uint64_t cols = get_u64_le(in);
  Mat m(rows, cols);
  for (std::uint64_t i = 0; i < rows; ++i) {
    for (std::uint64_t j = 0; j < cols; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof(double));
      m(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) = v;
    }
  }
  if (!in) throw InvalidArgument("truncated binary dump " + path.string());
  return m;
}

}  // namespace phn::io
