#include <cstdint>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "tempcov/dlr.hpp"
#include "tempcov/errors.hpp"
#include "tempcov/model.hpp"
#include "tempcov/version.hpp"

namespace tempcov {

namespace {

using nlohmann::json;

// Above this many stored doubles kAuto switches to the binary sidecar.
constexpr std::size_t kSidecarThreshold = 65536;

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_rows(const json& rows, Eigen::Index want_rows,
                                 Eigen::Index want_cols,
                                 const std::string& what) {
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != want_rows) {
    throw CorruptFileError("model file: " + what + " has wrong row count");
  }
  Eigen::MatrixXd out(want_rows, want_cols);
  for (Eigen::Index r = 0; r < want_rows; ++r) {
    const json& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() ||
        static_cast<Eigen::Index>(row.size()) != want_cols) {
      throw CorruptFileError("model file: " + what + " has wrong column count");
    }
    for (Eigen::Index c = 0; c < want_cols; ++c) {
      const json& cell = row[static_cast<std::size_t>(c)];
      if (!cell.is_number()) {
        throw CorruptFileError("model file: " + what + " has a non-numeric entry");
      }
      out(r, c) = cell.get<double>();
    }
  }
  return out;
}

json config_to_json(const FitConfig& cfg) {
  return json{{"m", cfg.m},
              {"lambda", cfg.lambda},
              {"beta", cfg.beta},
              {"phi", penalty_name(cfg.phi)},
              {"anneal_schedule", cfg.anneal_schedule},
              {"steps_per_round", cfg.steps_per_round},
              {"init_steps_per_round", cfg.init_steps_per_round},
              {"adam_lr", cfg.adam_lr},
              {"adam_beta1", cfg.adam_beta1},
              {"adam_beta2", cfg.adam_beta2},
              {"adam_eps", cfg.adam_eps},
              {"seed", cfg.seed},
              {"weight_cutoff", cfg.weight_cutoff},
              {"convergence_tol", cfg.convergence_tol},
              {"convergence_window", cfg.convergence_window}};
}

template <typename T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw CorruptFileError(std::string("model file: missing field '") + key +
                           "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw CorruptFileError(std::string("model file: field '") + key +
                           "' has the wrong type");
  }
}

FitConfig config_from_json(const json& j) {
  FitConfig cfg;
  cfg.m = require<int>(j, "m");
  cfg.lambda = require<double>(j, "lambda");
  cfg.beta = require<double>(j, "beta");
  cfg.phi = penalty_from_name(require<std::string>(j, "phi"));
  cfg.anneal_schedule = require<std::vector<double>>(j, "anneal_schedule");
  cfg.steps_per_round = require<int>(j, "steps_per_round");
  cfg.init_steps_per_round = require<int>(j, "init_steps_per_round");
  cfg.adam_lr = require<double>(j, "adam_lr");
  cfg.adam_beta1 = require<double>(j, "adam_beta1");
  cfg.adam_beta2 = require<double>(j, "adam_beta2");
  cfg.adam_eps = require<double>(j, "adam_eps");
  cfg.seed = require<std::uint64_t>(j, "seed");
  cfg.weight_cutoff = require<double>(j, "weight_cutoff");
  cfg.convergence_tol = require<double>(j, "convergence_tol");
  cfg.convergence_window = require<int>(j, "convergence_window");
  return cfg;
}

struct Section {
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

void append_section(json& list, std::ostringstream& sidecar,
                    const std::string& bytes) {
  const std::uint64_t offset = static_cast<std::uint64_t>(sidecar.tellp());
  sidecar.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  list.push_back(json{{"offset", offset}, {"length", bytes.size()}});
}

Section read_section(const json& j, const std::string& what) {
  if (!j.is_object()) {
    throw CorruptFileError("model file: " + what +
                           " must be a sidecar section {offset, length}");
  }
  Section s;
  s.offset = require<std::uint64_t>(j, "offset");
  s.length = require<std::uint64_t>(j, "length");
  return s;
}

std::string slice_bytes(const std::string& blob, const Section& s,
                        const std::string& what) {
  if (s.offset > blob.size() || blob.size() - s.offset < s.length) {
    throw CorruptFileError("model sidecar: section for " + what +
                           " extends past the end of the file");
  }
  return blob.substr(s.offset, s.length);
}

std::string weights_to_bytes(const Eigen::MatrixXd& w) {
  std::string bytes(static_cast<std::size_t>(w.size()) * sizeof(double), '\0');
  double* out = reinterpret_cast<double*>(bytes.data());
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) *out++ = w(r, c);
  }
  return bytes;
}

Eigen::MatrixXd weights_from_bytes(const std::string& bytes, Eigen::Index rows,
                                   Eigen::Index cols,
                                   const std::string& what) {
  if (bytes.size() != static_cast<std::size_t>(rows * cols) * sizeof(double)) {
    throw CorruptFileError("model sidecar: " + what + " has wrong byte length");
  }
  Eigen::MatrixXd w(rows, cols);
  const double* in = reinterpret_cast<const double*>(bytes.data());
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = *in++;
  }
  return w;
}

}  // namespace

void save_model(const TCorexModel& model, const std::string& path,
                SidecarPolicy policy) {
  model.validate();
  const Eigen::Index T = model.num_periods();
  const Eigen::Index p = model.num_variables();
  const Eigen::Index m = model.num_factors();

  std::size_t payload_doubles = 0;
  for (const auto& w : model.weights) {
    payload_doubles += static_cast<std::size_t>(w.size());
  }
  for (const auto& cov : model.covariances) {
    payload_doubles += static_cast<std::size_t>(cov.d.size() + cov.u.size());
  }
  const bool use_sidecar =
      policy == SidecarPolicy::kSidecar ||
      (policy == SidecarPolicy::kAuto && payload_doubles > kSidecarThreshold);

  json j;
  j["format"] = "tcorex-model";
  j["version"] = kFormatVersion;
  j["config"] = config_to_json(model.config);
  j["T"] = T;
  j["p"] = p;
  j["m"] = m;
  j["period_means"] = matrix_rows(model.period_means);
  j["period_stds"] = matrix_rows(model.period_stds);

  if (use_sidecar) {
    const std::string sidecar_name =
        std::filesystem::path(path).filename().string() + ".bin";
    std::ostringstream sidecar(std::ios::binary);
    json weight_sections = json::array();
    for (const auto& w : model.weights) {
      append_section(weight_sections, sidecar, weights_to_bytes(w));
    }
    json cov_sections = json::array();
    for (const auto& cov : model.covariances) {
      std::ostringstream record(std::ios::binary);
      write_dlr_binary(record, cov);
      append_section(cov_sections, sidecar, record.str());
    }
    j["sidecar"] = sidecar_name;
    j["weights"] = std::move(weight_sections);
    j["covariances"] = std::move(cov_sections);

    const std::filesystem::path sidecar_path =
        std::filesystem::path(path).parent_path() / sidecar_name;
    std::ofstream bin(sidecar_path, std::ios::binary | std::ios::trunc);
    if (!bin) {
      throw IoError("cannot open " + sidecar_path.string() + " for writing");
    }
    const std::string blob = sidecar.str();
    bin.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!bin) throw IoError("failed writing " + sidecar_path.string());
  } else {
    json weight_rows = json::array();
    for (const auto& w : model.weights) weight_rows.push_back(matrix_rows(w));
    j["weights"] = std::move(weight_rows);
    json covs = json::array();
    for (const auto& cov : model.covariances) {
      covs.push_back(json::parse(dlr_to_json_string(cov)));
    }
    j["covariances"] = std::move(covs);
  }

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

TCorexModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();

  const json j = json::parse(buffer.str(), nullptr, false);
  if (j.is_discarded()) {
    throw CorruptFileError("model file " + path + " is not valid JSON");
  }
  if (require<std::string>(j, "format") != "tcorex-model") {
    throw CorruptFileError("model file " + path +
                           " does not declare format 'tcorex-model'");
  }
  const int version = require<int>(j, "version");
  if (version > kFormatVersion) {
    throw UnsupportedVersionError("model file " + path + " has version " +
                                  std::to_string(version) +
                                  "; this build reads up to version " +
                                  std::to_string(kFormatVersion));
  }
  if (version < 1) {
    throw CorruptFileError("model file " + path + " has invalid version");
  }

  TCorexModel model;
  model.config = config_from_json(require<json>(j, "config"));
  const Eigen::Index T = require<Eigen::Index>(j, "T");
  const Eigen::Index p = require<Eigen::Index>(j, "p");
  const Eigen::Index m = require<Eigen::Index>(j, "m");
  if (T <= 0 || p <= 0 || m < 0) {
    throw CorruptFileError("model file " + path + " has invalid dimensions");
  }
  model.period_means =
      matrix_from_rows(require<json>(j, "period_means"), T, p, "period_means");
  model.period_stds =
      matrix_from_rows(require<json>(j, "period_stds"), T, p, "period_stds");

  const json weights = require<json>(j, "weights");
  const json covariances = require<json>(j, "covariances");
  if (static_cast<Eigen::Index>(weights.size()) != T ||
      static_cast<Eigen::Index>(covariances.size()) != T) {
    throw CorruptFileError("model file " + path +
                           " has weight/covariance lists of the wrong length");
  }

  if (j.contains("sidecar")) {
    const std::string sidecar_name = require<std::string>(j, "sidecar");
    const std::filesystem::path sidecar_path =
        std::filesystem::path(path).parent_path() / sidecar_name;
    std::ifstream bin(sidecar_path, std::ios::binary);
    if (!bin) {
      throw IoError("cannot open model sidecar " + sidecar_path.string());
    }
    std::ostringstream bin_buffer(std::ios::binary);
    bin_buffer << bin.rdbuf();
    const std::string blob = bin_buffer.str();

    for (Eigen::Index t = 0; t < T; ++t) {
      const std::string what = "weights[" + std::to_string(t) + "]";
      const Section s = read_section(weights[static_cast<std::size_t>(t)], what);
      model.weights.push_back(
          weights_from_bytes(slice_bytes(blob, s, what), m, p, what));
    }
    for (Eigen::Index t = 0; t < T; ++t) {
      const std::string what = "covariances[" + std::to_string(t) + "]";
      const Section s =
          read_section(covariances[static_cast<std::size_t>(t)], what);
      std::istringstream record(slice_bytes(blob, s, what), std::ios::binary);
      model.covariances.push_back(read_dlr_binary(record));
    }
  } else {
    for (Eigen::Index t = 0; t < T; ++t) {
      model.weights.push_back(
          matrix_from_rows(weights[static_cast<std::size_t>(t)], m, p,
                           "weights[" + std::to_string(t) + "]"));
    }
    for (Eigen::Index t = 0; t < T; ++t) {
      model.covariances.push_back(dlr_from_json_string(
          covariances[static_cast<std::size_t>(t)].dump()));
    }
  }

  for (const auto& cov : model.covariances) {
    if (cov.p() != p || cov.m() != m) {
      throw CorruptFileError("model file " + path +
                             " has a covariance with mismatched dimensions");
    }
  }
  model.validate();
  return model;
}

}  // namespace tempcov
