#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace pfdiff {

/// Seeded pseudo-random source. Independent streams are derived from a
/// (seed, name, index) triple so that parallel work stays reproducible.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    static Rng stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);
    static std::uint64_t derive_seed(std::uint64_t seed, std::string_view name,
                                     std::uint64_t index = 0);

    double uniform() { return unit_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }
    double normal() { return normal_(engine_); }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);
    /// Uniform integer in [lo, hi].
    long range(long lo, long hi);

    std::mt19937_64& engine() { return engine_; }

    std::string save_state() const;
    void load_state(const std::string& state);

  private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace pfdiff
