#ifndef SAM_RNG_HPP
#define SAM_RNG_HPP

#include <cstdint>
#include <vector>

namespace sam {

// splitmix64; self-contained so generated corpora are identical on every
// platform (std distributions are not portable).
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  // true with probability num/den
  bool chance(std::uint64_t num, std::uint64_t den) { return below(den) < num; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  Rng r(master ^ (0xA24BAED4963EE407ULL + index * 0x9E3779B97F4A7C15ULL));
  r.next();
  return r.next();
}

}  // namespace sam

#endif
