#pragma once

// Access to the bundled tire-manufacturing fixture. The file is checked
// against its recorded SHA-256 digest before use.

#include <array>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "betachart/fit.hpp"
#include "betachart/io/csv.hpp"

namespace fixture {

inline std::string data_path(const std::string& name) {
  return std::string(BETACHART_DATA_DIR) + "/" + name;
}

inline std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Path of tire.csv after verifying its digest; throws on mismatch.
inline std::string tire_csv() {
  const std::string path = data_path("tire.csv");
  std::istringstream expected(slurp(path + ".sha256"));
  std::string want;
  expected >> want;
  const std::string got = sha256_hex(slurp(path));
  if (got != want) {
    throw std::runtime_error("fixture " + path + " was modified (sha256 " + got + ", expected " +
                             want + ")");
  }
  return path;
}

// Mean submodel x1, x2, x1*x2, x1*x4, x2*x5; dispersion x1, x1*x2.
inline betachart::ModelSpec tire_spec() {
  betachart::ModelSpec spec;
  spec.mean_cols = {"(Intercept)", "x1", "x2", "x1*x2", "x1*x4", "x2*x5"};
  spec.disp_cols = {"(Intercept)", "x1", "x1*x2"};
  return spec;
}

inline betachart::Dataset tire_data(const betachart::ModelSpec& spec = tire_spec()) {
  return betachart::io::read_csv(tire_csv(), "y", spec.mean_cols, spec.disp_cols);
}

}  // namespace fixture
