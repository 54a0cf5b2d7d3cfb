#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "mmax/matrix.hpp"
#include "mmax/rng.hpp"
#include "mmax/tape.hpp"

namespace mmax::test {

inline std::string data_path(const std::string& name) { return std::string(MMAX_TEST_DATA) + "/" + name; }
inline std::string config_path(const std::string& name) { return std::string(MMAX_CONFIG_DIR) + "/" + name; }

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mmax-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(file(name), std::ios::binary) << text;
    return file(name);
  }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline Vector random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline void randomize(Parameter& p, Rng& rng, double scale = 1.0) {
  for (double& x : p.value.data()) x = rng.uniform(-scale, scale);
}

// Tape leaf that routes its gradient into p.grad, so tests can differentiate
// with respect to a primitive's inputs.
template <typename T>
Var leaf(BasicTape<T>& t, Parameter& p) {
  auto v = p.value.data();
  return t.push(typename BasicTape<T>::Values(v.begin(), v.end()), true,
                [&p](BasicTape<T>&, std::span<const T> g) {
                  auto dst = p.grad.data();
                  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += static_cast<double>(g[i]);
                });
}

inline Parameter vector_param(const std::string& name, const Vector& v) {
  Parameter p(name, v.size(), 1);
  std::copy(v.begin(), v.end(), p.value.data().begin());
  return p;
}

inline double linf(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace mmax::test
