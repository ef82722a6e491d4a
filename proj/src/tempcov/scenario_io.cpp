#include "tempcov/scenario_io.hpp"

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "tempcov/csv.hpp"
#include "tempcov/errors.hpp"
#include "tempcov/version.hpp"

namespace tempcov {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string period_dir(Eigen::Index t) {
  return "period_" + std::to_string(t + 1);
}

template <typename T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw CorruptFileError(std::string("scenario.json: missing field '") +
                           key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw CorruptFileError(std::string("scenario.json: field '") + key +
                           "' has the wrong type");
  }
}

}  // namespace

void write_scenario(const ScenarioDataset& scenario, const std::string& dir) {
  scenario.validate();
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root / "truth", ec);
  if (ec) {
    throw IoError("cannot create scenario directory " + root.string() + ": " +
                  ec.message());
  }

  const Eigen::Index T = scenario.num_periods();
  for (Eigen::Index t = 0; t < T; ++t) {
    const fs::path pdir = root / period_dir(t);
    fs::create_directories(pdir, ec);
    if (ec) {
      throw IoError("cannot create " + pdir.string() + ": " + ec.message());
    }
    const std::size_t ti = static_cast<std::size_t>(t);
    write_csv_matrix((pdir / "train.csv").string(), scenario.train[ti]);
    write_csv_matrix((pdir / "val.csv").string(), scenario.val[ti]);
    write_csv_matrix((pdir / "test.csv").string(), scenario.test[ti]);
    save_dlr_json(scenario.truth[ti],
                  (root / "truth" / (period_dir(t) + ".dlr.json")).string());
  }

  // Parent labels are 1-based on disk.
  const Eigen::MatrixXd disk_labels =
      (scenario.labels.array() + 1).cast<double>();
  write_csv_matrix((root / "truth" / "labels.csv").string(), disk_labels);

  json j;
  j["version"] = kFormatVersion;
  j["kind"] = scenario_kind_name(scenario.config.kind);
  j["p"] = scenario.config.p;
  j["m"] = scenario.config.m;
  j["s"] = scenario.config.s;
  j["T"] = scenario.config.T;
  j["seed"] = scenario.config.seed;
  j["val_samples"] = scenario.config.val_samples;
  j["test_samples"] = scenario.config.test_samples;
  std::ofstream out(root / "scenario.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (root / "scenario.json").string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + (root / "scenario.json").string());
}

ScenarioDataset read_scenario(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream in(root / "scenario.json");
  if (!in) {
    throw IoError("cannot open " + (root / "scenario.json").string() +
                  " (not a scenario directory?)");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const json j = json::parse(buffer.str(), nullptr, false);
  if (j.is_discarded()) {
    throw CorruptFileError("scenario.json is not valid JSON");
  }
  const int version = require<int>(j, "version");
  if (version > kFormatVersion) {
    throw UnsupportedVersionError("scenario.json has version " +
                                  std::to_string(version) +
                                  "; this build reads up to version " +
                                  std::to_string(kFormatVersion));
  }

  ScenarioDataset scenario;
  scenario.config.kind = scenario_kind_from_name(require<std::string>(j, "kind"));
  scenario.config.p = require<int>(j, "p");
  scenario.config.m = require<int>(j, "m");
  scenario.config.s = require<int>(j, "s");
  scenario.config.T = require<int>(j, "T");
  scenario.config.seed = require<std::uint64_t>(j, "seed");
  scenario.config.val_samples = require<int>(j, "val_samples");
  scenario.config.test_samples = require<int>(j, "test_samples");
  scenario.config.validate();

  const Eigen::Index T = scenario.config.T;
  for (Eigen::Index t = 0; t < T; ++t) {
    const fs::path pdir = root / period_dir(t);
    scenario.train.push_back(read_csv_matrix((pdir / "train.csv").string()));
    scenario.val.push_back(read_csv_matrix((pdir / "val.csv").string()));
    scenario.test.push_back(read_csv_matrix((pdir / "test.csv").string()));
    scenario.truth.push_back(load_dlr_json(
        (root / "truth" / (period_dir(t) + ".dlr.json")).string()));
  }

  const Eigen::MatrixXd raw_labels =
      read_csv_matrix((root / "truth" / "labels.csv").string());
  if (raw_labels.rows() != T || raw_labels.cols() != scenario.config.p) {
    throw CorruptFileError("truth/labels.csv has the wrong shape");
  }
  scenario.labels.resize(T, scenario.config.p);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < scenario.config.p; ++i) {
      const double value = raw_labels(t, i);
      const int label = static_cast<int>(value);
      if (static_cast<double>(label) != value || label < 1 ||
          label > scenario.config.m) {
        throw CorruptFileError("truth/labels.csv has an invalid label at row " +
                               std::to_string(t + 1));
      }
      scenario.labels(t, i) = label - 1;
    }
  }
  scenario.validate();
  return scenario;
}

}  // namespace tempcov
