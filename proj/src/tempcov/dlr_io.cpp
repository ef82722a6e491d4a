#include <bit>
#include <cstdint>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "tempcov/dlr.hpp"
#include "tempcov/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary format is little-endian");

namespace tempcov {

namespace {

using nlohmann::json;

json dlr_to_json(const DiagLowRank& a) {
  a.validate();
  json j;
  j["p"] = a.p();
  j["m"] = a.m();
  j["sign"] = a.sign;
  j["d"] = std::vector<double>(a.d.data(), a.d.data() + a.d.size());
  json rows = json::array();
  for (Eigen::Index r = 0; r < a.m(); ++r) {
    std::vector<double> row(a.p());
    for (Eigen::Index c = 0; c < a.p(); ++c) row[c] = a.u(r, c);
    rows.push_back(std::move(row));
  }
  j["u"] = std::move(rows);
  return j;
}

DiagLowRank dlr_from_json(const json& j) {
  if (!j.is_object() || !j.contains("p") || !j.contains("m") ||
      !j.contains("sign") || !j.contains("d") || !j.contains("u")) {
    throw CorruptFileError("diag-low-rank JSON is missing required fields");
  }
  const auto p = j.at("p").get<Eigen::Index>();
  const auto m = j.at("m").get<Eigen::Index>();
  if (p < 0 || m < 0) {
    throw CorruptFileError("diag-low-rank JSON has negative dimensions");
  }
  DiagLowRank a;
  a.sign = j.at("sign").get<int>();
  const auto& d = j.at("d");
  const auto& u = j.at("u");
  if (!d.is_array() || static_cast<Eigen::Index>(d.size()) != p ||
      !u.is_array() || static_cast<Eigen::Index>(u.size()) != m) {
    throw CorruptFileError("diag-low-rank JSON arrays disagree with p/m");
  }
  a.d.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) a.d[i] = d.at(i).get<double>();
  a.u.resize(m, p);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& row = u.at(r);
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != p) {
      throw CorruptFileError("diag-low-rank JSON row length disagrees with p");
    }
    for (Eigen::Index c = 0; c < p; ++c) a.u(r, c) = row.at(c).get<double>();
  }
  try {
    a.validate();
  } catch (const Error& e) {
    throw CorruptFileError(std::string("diag-low-rank JSON invalid: ") +
                           e.what());
  }
  return a;
}

template <typename T>
void write_raw(std::ostream& out, const T* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void read_raw(std::istream& in, T* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(count * sizeof(T)));
  if (!in) throw CorruptFileError("diag-low-rank binary is truncated");
}

constexpr char kMagic[4] = {'D', 'L', 'R', '1'};

}  // namespace

std::string dlr_to_json_string(const DiagLowRank& a) {
  return dlr_to_json(a).dump();
}

DiagLowRank dlr_from_json_string(const std::string& text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    throw CorruptFileError("diag-low-rank JSON does not parse");
  }
  return dlr_from_json(j);
}

void save_dlr_json(const DiagLowRank& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << dlr_to_json(a).dump(2) << '\n';
  if (!out.flush()) throw IoError("write failed: " + path);
}

DiagLowRank load_dlr_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return dlr_from_json_string(buffer.str());
}

void write_dlr_binary(std::ostream& out, const DiagLowRank& a) {
  a.validate();
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t p = static_cast<std::uint32_t>(a.p());
  const std::uint32_t m = static_cast<std::uint32_t>(a.m());
  const std::int8_t sign = static_cast<std::int8_t>(a.sign);
  write_raw(out, &p, 1);
  write_raw(out, &m, 1);
  write_raw(out, &sign, 1);
  write_raw(out, a.d.data(), static_cast<std::size_t>(a.p()));
  // u is stored row-major on disk; Eigen matrices are column-major.
  for (Eigen::Index r = 0; r < a.m(); ++r) {
    Eigen::VectorXd row = a.u.row(r);
    write_raw(out, row.data(), static_cast<std::size_t>(a.p()));
  }
}

DiagLowRank read_dlr_binary(std::istream& in) {
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, 4) != std::string(kMagic, 4)) {
    throw CorruptFileError("diag-low-rank binary has bad magic");
  }
  std::uint32_t p = 0, m = 0;
  std::int8_t sign = 0;
  read_raw(in, &p, 1);
  read_raw(in, &m, 1);
  read_raw(in, &sign, 1);
  DiagLowRank a;
  a.sign = sign;
  a.d.resize(p);
  read_raw(in, a.d.data(), p);
  a.u.resize(m, p);
  Eigen::VectorXd row(p);
  for (std::uint32_t r = 0; r < m; ++r) {
    read_raw(in, row.data(), p);
    a.u.row(r) = row;
  }
  try {
    a.validate();
  } catch (const Error& e) {
    throw CorruptFileError(std::string("diag-low-rank binary invalid: ") +
                           e.what());
  }
  return a;
}

void save_dlr_binary(const DiagLowRank& a, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_dlr_binary(out, a);
  if (!out.flush()) throw IoError("write failed: " + path);
}

DiagLowRank load_dlr_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return read_dlr_binary(in);
}

}  // namespace tempcov
