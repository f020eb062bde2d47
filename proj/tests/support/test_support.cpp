#include "test_support.hpp"

#include "riskdisc/error.hpp"

#include <fstream>

namespace testing {

std::filesystem::path fixture(const std::string& relative) {
  return std::filesystem::path(RISKDISC_FIXTURE_DIR) / relative;
}

TempDir::TempDir() {
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  for (;;) {
    auto candidate = base / ("riskdisc-test-" + std::to_string(rd()));
    if (std::filesystem::create_directory(candidate)) {
      path_ = std::move(candidate);
      return;
    }
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::filesystem::path copy_pipeline_fixture(const std::filesystem::path& dir) {
  std::filesystem::copy(fixture("pipeline"), dir, std::filesystem::copy_options::recursive);
  return dir / "config.json";
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
}

std::vector<double> random_gaussian(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& c : v) c = n(rng);
  return v;
}

riskdisc::UnitVector random_unit(std::mt19937_64& rng, std::size_t dim) {
  return riskdisc::UnitVector::normalize(random_gaussian(rng, dim));
}

riskdisc::UnitVector MapEncoder::encode(std::string_view text) const {
  const auto it = map_.find(std::string(text));
  if (it == map_.end()) throw riskdisc::NotFound("no vector for \"" + std::string(text) + "\"");
  return it->second;
}

}  // namespace testing
