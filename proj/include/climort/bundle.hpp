#ifndef CLIMORT_BUNDLE_HPP
#define CLIMORT_BUNDLE_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "climort/backfit.hpp"

namespace climort {

// Stamped into the first line of every output file.
struct OutputContext {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;

  std::string header_line() const;
};

// CSV emission with the standard comment header.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const OutputContext& ctx,
            const std::vector<std::string>& columns);

  void row(const std::vector<std::string>& fields);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t n_columns_;
};

// FittedModel round trip through a directory of parameter-block CSV files
// plus a manifest. The bundle is self-contained: reloading supports curve
// export, climate loadings and projection without the original inputs.
void save_bundle(const std::filesystem::path& dir, const FittedModel& model,
                 const OutputContext& ctx);

FittedModel load_bundle(const std::filesystem::path& dir);

void save_equivalence(const std::filesystem::path& dir, const EquivalenceReport& report,
                      const OutputContext& ctx);

}  // namespace climort

#endif
