#include "relurec/dataset.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace relurec {

namespace {

using nlohmann::json;

constexpr char kDataMagic[6] = {'H', 'D', 'A', 'T', 'A', '1'};

static_assert(std::endian::native == std::endian::little,
              "HDATA1 writer assumes a little-endian host");

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

void save_network(const std::filesystem::path& path, const ReluNetwork& net) {
  json j;
  j["d"] = net.d;
  j["m"] = net.m;
  j["B"] = net.B;
  j["a"] = vector_to_json(net.a);
  j["b"] = vector_to_json(net.b);
  json w = json::array();
  for (int c = 0; c < net.m; ++c) {
    for (int r = 0; r < net.d; ++r) w.push_back(net.W(r, c));
  }
  j["W_colmajor"] = w;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

ReluNetwork load_network(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  json j = json::parse(is);
  ReluNetwork net;
  net.d = j.at("d").get<int>();
  net.m = j.at("m").get<int>();
  net.B = j.at("B").get<double>();
  const auto a = j.at("a").get<std::vector<double>>();
  const auto b = j.at("b").get<std::vector<double>>();
  const auto w = j.at("W_colmajor").get<std::vector<double>>();
  if (static_cast<int>(a.size()) != net.m || static_cast<int>(b.size()) != net.m ||
      static_cast<int>(w.size()) != net.d * net.m) {
    throw std::runtime_error("network JSON arrays do not match d, m");
  }
  net.a = Eigen::Map<const Eigen::VectorXd>(a.data(), net.m);
  net.b = Eigen::Map<const Eigen::VectorXd>(b.data(), net.m);
  net.W.resize(net.d, net.m);
  for (int c = 0; c < net.m; ++c) {
    for (int r = 0; r < net.d; ++r) net.W(r, c) = w[c * net.d + r];
  }
  net.validate();
  return net;
}

void save_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.precision(17);
  for (int j = 0; j < data.d; ++j) os << "x_" << (j + 1) << ',';
  os << "y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.d; ++j) os << data.xs[i * data.d + j] << ',';
    os << data.ys[i] << '\n';
  }
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("empty dataset CSV");
  int d = 0;
  for (char c : header) {
    if (c == ',') ++d;
  }
  Dataset data;
  data.d = d;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    for (int j = 0; j < d; ++j) {
      if (!std::getline(row, field, ',')) throw std::runtime_error("short CSV row");
      data.xs.push_back(std::stod(field));
    }
    if (!std::getline(row, field)) throw std::runtime_error("CSV row missing label");
    data.ys.push_back(std::stod(field));
  }
  return data;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kDataMagic, sizeof(kDataMagic));
  const std::uint64_t n = data.size();
  const std::uint64_t d = static_cast<std::uint64_t>(data.d);
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  os.write(reinterpret_cast<const char*>(&d), sizeof(d));
  for (std::size_t i = 0; i < data.size(); ++i) {
    os.write(reinterpret_cast<const char*>(data.xs.data() + i * data.d),
             static_cast<std::streamsize>(sizeof(double) * data.d));
    os.write(reinterpret_cast<const char*>(&data.ys[i]), sizeof(double));
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[6];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kDataMagic, sizeof(kDataMagic)) != 0) {
    throw std::runtime_error(path.string() + " is not an HDATA1 dataset");
  }
  std::uint64_t n = 0, d = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  is.read(reinterpret_cast<char*>(&d), sizeof(d));
  Dataset data;
  data.d = static_cast<int>(d);
  data.xs.resize(n * d);
  data.ys.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    is.read(reinterpret_cast<char*>(data.xs.data() + i * d),
            static_cast<std::streamsize>(sizeof(double) * d));
    is.read(reinterpret_cast<char*>(&data.ys[i]), sizeof(double));
  }
  if (!is) throw std::runtime_error("truncated dataset " + path.string());
  return data;
}

void save_dataset_auto(const std::filesystem::path& path, const Dataset& data) {
  if (path.extension() == ".csv") {
    save_dataset_csv(path, data);
  } else {
    save_dataset(path, data);
  }
}

Dataset load_dataset_auto(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return load_dataset_csv(path);
  return load_dataset(path);
}

}  // namespace relurec
