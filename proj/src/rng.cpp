#include "splitsde/rng.hpp"

#include <cmath>
#include <numbers>

#include "splitsde/errors.hpp"

namespace splitsde {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonZeroMean: return "NonZeroMean";
    case ErrorCode::PeriodMismatch: return "PeriodMismatch";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::KappaVanished: return "KappaVanished";
    case ErrorCode::PotentialInvalid: return "PotentialInvalid";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::SolverSingular: return "SolverSingular";
    case ErrorCode::MissingFrequency: return "MissingFrequency";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::Config: return "Config";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

namespace {

constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kPhiloxW0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kPhiloxW1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    __extension__ using u128 = unsigned __int128;
    const u128 p = static_cast<u128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

} // namespace

std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> ctr,
                                        std::array<std::uint64_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kPhiloxW0;
            key[1] += kPhiloxW1;
        }
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64(seed ^ splitmix64(tag));
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : seed_(seed), stream_(stream) {}

void CounterRng::refill() noexcept {
    words_ = philox4x64({block_, stream_, 0, 0}, {seed_, 0});
    ++block_;
    word_pos_ = 0;
}

std::uint64_t CounterRng::next_u64() noexcept {
    if (word_pos_ == 4) {
        refill();
    }
    return words_[word_pos_++];
}

double CounterRng::uniform() noexcept {
    // (k + 0.5) / 2^53 for k in [0, 2^53) never hits 0 or 1.
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() noexcept {
    if (normal_pos_ == 4) {
        for (int i = 0; i < 4; i += 2) {
            const double u1 = uniform();
            const double u2 = uniform();
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double a = 2.0 * std::numbers::pi * u2;
            normals_[i] = r * std::cos(a);
            normals_[i + 1] = r * std::sin(a);
        }
        normal_pos_ = 0;
    }
    return normals_[normal_pos_++];
}

} // namespace splitsde
