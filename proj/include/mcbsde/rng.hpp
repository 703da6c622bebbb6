#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mcbsde {

//! SplitMix64 scrambler, used to derive well-separated substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state)
{
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

//! Deterministic substream seed for (master_seed, index, tag). Scheduling-independent:
//! the stream depends only on these three values, never on thread layout.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index,
                                    std::uint64_t tag = 0)
{
  std::uint64_t s = master;
  std::uint64_t a = splitmix64(s);
  s = a ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  std::uint64_t b = splitmix64(s);
  s = b ^ (tag * 0x9e3779b97f4a7c15ULL + 1);
  return splitmix64(s);
}

//! Standard-normal sampler (polar method) on top of mt19937_64. Self-contained so
//! streams are reproducible independently of the standard library implementation.
class NormalSampler {
public:
  explicit NormalSampler(std::uint64_t seed) : eng_(seed) {}

  //! Uniform draw in the open interval (0,1).
  double uniform()
  {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal()
  {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

} // namespace mcbsde
