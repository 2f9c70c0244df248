#include "pfdiff/common/rng.h"

#include <sstream>

#include "pfdiff/common/error.h"

namespace pfdiff {

namespace {

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::uint64_t Rng::derive_seed(std::uint64_t seed, std::string_view name, std::uint64_t index) {
    const std::uint64_t h = fnv1a(name);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Rng Rng::stream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
    return Rng(derive_seed(seed, name, index));
}

std::size_t Rng::index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
}

long Rng::range(long lo, long hi) {
    std::uniform_int_distribution<long> dist(lo, hi);
    return dist(engine_);
}

std::string Rng::save_state() const {
    std::ostringstream os;
    os << engine_ << ' ' << normal_;
    return os.str();
}

void Rng::load_state(const std::string& state) {
    std::istringstream is(state);
    is >> engine_ >> normal_;
    if (!is) throw Error("corrupt RNG state");
}

}  // namespace pfdiff
