#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssmt {

enum class ErrorKind {
    NonTerminating,
    ExactUnavailable,
    FourierUnavailable,
    OutOfGrid,
    InvalidTilt,
    BudgetExhausted,
    NoRoot,
    DegeneratePath,
    MismatchedPath,
    SubcriticalityViolated,
    InvalidShift,
    LevelTooLow,
    EmptyMeasure,
    MalformedSequence,
    ConfigInvalid,
    IoError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

enum class Mode { BV, Diffusion };

const char* to_string(Mode mode);
Mode mode_from_string(const std::string& s);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using Rng = std::mt19937_64;

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t x);

// Seed of stream `stream` under `master`. Depends only on the pair, so
// replicas can be generated in any order.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

// Seed for a tree node: folds the Ulam label into the tree seed.
std::uint64_t label_seed(std::uint64_t tree_seed, const std::vector<std::uint32_t>& label);

Rng make_rng(std::uint64_t master, std::uint64_t stream);

}  // namespace ssmt
