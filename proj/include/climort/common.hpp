#ifndef CLIMORT_COMMON_HPP
#define CLIMORT_COMMON_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace climort {

inline constexpr const char* kVersion = "0.1.0";

// Bad inputs: files, schemas, configuration. CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric or model failures on valid inputs. CLI maps these to exit code 1.
class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

void warn(const std::string& msg);

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Independent substream seed for unit `index` under a master seed.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index);

std::uint64_t fnv1a64(std::string_view data);

// Shortest representation that round-trips a double through text.
std::string format_double(double v);

}  // namespace climort

#endif
