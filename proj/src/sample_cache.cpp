#include "committor/sample_cache.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace committor {

namespace {

constexpr char kSampleMagic[8] = {'C', 'M', 'T', 'S', 'A', 'M', 'P', '1'};
constexpr char kPointMagic[8] = {'C', 'M', 'T', 'P', 'N', 'T', 'S', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

std::ifstream open_checked(const std::string& path, const char* magic) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cache: cannot open " + path);
  char got[8];
  is.read(got, sizeof(got));
  if (!is || std::memcmp(got, magic, 8) != 0)
    throw std::runtime_error("cache: bad magic in " + path);
  std::uint32_t version = 0;
  read_pod(is, version);
  if (version != 1) throw std::runtime_error("cache: unsupported version in " + path);
  return is;
}

}  // namespace

void save_samples(const std::vector<TransitionSample>& samples, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_samples: cannot open " + path);
  os.write(kSampleMagic, 8);
  write_pod(os, std::uint32_t{1});
  const std::uint32_t dim = samples.empty() ? 0u : static_cast<std::uint32_t>(samples[0].x.size());
  write_pod(os, dim);
  write_pod(os, static_cast<std::uint64_t>(samples.size()));
  for (const TransitionSample& s : samples) {
    os.write(reinterpret_cast<const char*>(s.x.data()),
             static_cast<std::streamsize>(dim * sizeof(double)));
    os.write(reinterpret_cast<const char*>(s.x_delta.data()),
             static_cast<std::streamsize>(dim * sizeof(double)));
    write_pod(os, static_cast<std::uint8_t>(s.indicator));
  }
  if (!os) throw std::runtime_error("save_samples: write failed for " + path);
}

std::vector<TransitionSample> load_samples(const std::string& path) {
  std::ifstream is = open_checked(path, kSampleMagic);
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
  read_pod(is, dim);
  read_pod(is, count);
  std::vector<TransitionSample> out(count);
  for (TransitionSample& s : out) {
    s.x.resize(dim);
    s.x_delta.resize(dim);
    is.read(reinterpret_cast<char*>(s.x.data()),
            static_cast<std::streamsize>(dim * sizeof(double)));
    is.read(reinterpret_cast<char*>(s.x_delta.data()),
            static_cast<std::streamsize>(dim * sizeof(double)));
    std::uint8_t ind = 0;
    read_pod(is, ind);
    s.indicator = static_cast<HitIndicator>(ind);
  }
  if (!is) throw std::runtime_error("load_samples: truncated file " + path);
  return out;
}

void save_samples_csv(const std::vector<TransitionSample>& samples, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_samples_csv: cannot open " + path);
  const std::size_t dim = samples.empty() ? 0 : samples[0].x.size();
  for (std::size_t i = 0; i < dim; ++i) os << 'x' << i << ',';
  for (std::size_t i = 0; i < dim; ++i) os << "xd" << i << ',';
  os << "indicator\n";
  os.precision(17);
  for (const TransitionSample& s : samples) {
    for (double v : s.x) os << v << ',';
    for (double v : s.x_delta) os << v << ',';
    os << static_cast<int>(s.indicator) << '\n';
  }
  if (!os) throw std::runtime_error("save_samples_csv: write failed for " + path);
}

std::vector<TransitionSample> load_samples_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_samples_csv: cannot open " + path);
  std::string header;
  std::getline(is, header);
  std::size_t dim = 0;
  for (std::size_t pos = 0; (pos = header.find(",xd", pos)) != std::string::npos; ++pos) ++dim;
  std::vector<TransitionSample> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    TransitionSample s;
    s.x.resize(dim);
    s.x_delta.resize(dim);
    std::string cell;
    for (std::size_t i = 0; i < dim; ++i) {
      std::getline(ss, cell, ',');
      s.x[i] = std::stod(cell);
    }
    for (std::size_t i = 0; i < dim; ++i) {
      std::getline(ss, cell, ',');
      s.x_delta[i] = std::stod(cell);
    }
    std::getline(ss, cell, ',');
    s.indicator = static_cast<HitIndicator>(std::stoi(cell));
    out.push_back(std::move(s));
  }
  return out;
}

void save_points(const std::vector<Vec>& points, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_points: cannot open " + path);
  os.write(kPointMagic, 8);
  write_pod(os, std::uint32_t{1});
  const std::uint32_t dim = points.empty() ? 0u : static_cast<std::uint32_t>(points[0].size());
  write_pod(os, dim);
  write_pod(os, static_cast<std::uint64_t>(points.size()));
  for (const Vec& p : points)
    os.write(reinterpret_cast<const char*>(p.data()),
             static_cast<std::streamsize>(dim * sizeof(double)));
  if (!os) throw std::runtime_error("save_points: write failed for " + path);
}

std::vector<Vec> load_points(const std::string& path) {
  std::ifstream is = open_checked(path, kPointMagic);
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
  read_pod(is, dim);
  read_pod(is, count);
  std::vector<Vec> out(count, Vec(dim));
  for (Vec& p : out)
    is.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(dim * sizeof(double)));
  if (!is) throw std::runtime_error("load_points: truncated file " + path);
  return out;
}

}  // namespace committor
