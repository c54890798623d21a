#ifndef IPSLAB_RNG_HPP
#define IPSLAB_RNG_HPP

#include <cmath>
#include <cstdint>

namespace ipslab {

// Keyed counter-based generation: every random quantity in the project is a
// pure function of (master seed, key words, counter). Streams can therefore
// be replayed independently and in any order, which is what lets several
// processes share one realization of the event field.

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Absorb one word into a running key.
inline std::uint64_t absorb(std::uint64_t h, std::uint64_t w) {
    return mix64(h ^ (w * 0xff51afd7ed558ccdULL));
}

inline std::uint64_t zigzag(std::int64_t x) {
    return (static_cast<std::uint64_t>(x) << 1) ^ static_cast<std::uint64_t>(x >> 63);
}

// Domain tags keep unrelated uses of the same seed from colliding.
namespace rng_domain {
constexpr std::uint64_t clock_stream = 0x636c6f636b737472ULL;
constexpr std::uint64_t replica = 0x7265706c69636173ULL;
constexpr std::uint64_t perc_site = 0x70657263736974, perc_base = 0x7065726362617365ULL;
constexpr std::uint64_t gillespie = 0x67696c6c65737069ULL;
constexpr std::uint64_t generic = 0x67656e6572696373ULL;
}  // namespace rng_domain

// Counter-based stream: value n is mix64(key + n * golden), no sequential state.
class CounterStream {
  public:
    explicit CounterStream(std::uint64_t key) : key_(key) {}

    std::uint64_t bits(std::uint64_t n) const { return mix64(key_ + n * 0x9e3779b97f4a7c15ULL); }

    // Uniform on the open interval (0,1); strictly positive so logs are finite.
    double uniform(std::uint64_t n) const {
        return static_cast<double>(bits(n) >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    double exponential(std::uint64_t n, double rate) const { return -std::log(uniform(n)) / rate; }

  private:
    std::uint64_t key_;
};

// Sequential convenience wrapper over a CounterStream.
class SplitRng {
  public:
    explicit SplitRng(std::uint64_t key) : stream_(key) {}

    std::uint64_t next_bits() { return stream_.bits(n_++); }
    double next_uniform() { return stream_.uniform(n_++); }
    double next_exponential(double rate) { return stream_.exponential(n_++, rate); }

    // Index into cumulative rates; rates must be nonnegative with positive total.
    std::size_t next_choice(const double* rates, std::size_t k) {
        double total = 0;
        for (std::size_t i = 0; i < k; ++i) total += rates[i];
        double u = next_uniform() * total;
        double acc = 0;
        for (std::size_t i = 0; i + 1 < k; ++i) {
            acc += rates[i];
            if (u < acc) return i;
        }
        return k - 1;
    }

  private:
    CounterStream stream_;
    std::uint64_t n_ = 0;
};

inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t domain) {
    return absorb(absorb(0x243f6a8885a308d3ULL, seed), domain);
}

inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t domain, std::uint64_t w1) {
    return absorb(derive_key(seed, domain), w1);
}

inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t domain, std::uint64_t w1,
                                std::uint64_t w2) {
    return absorb(derive_key(seed, domain, w1), w2);
}

inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t domain, std::uint64_t w1,
                                std::uint64_t w2, std::uint64_t w3) {
    return absorb(derive_key(seed, domain, w1, w2), w3);
}

// Seed for replica i; adding replicas never perturbs existing ones.
inline std::uint64_t replica_seed(std::uint64_t master, std::uint64_t replica_index) {
    return derive_key(master, rng_domain::replica, replica_index);
}

}  // namespace ipslab

#endif
