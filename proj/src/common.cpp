#include "ssmt/common.hpp"

namespace ssmt {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonTerminating: return "NonTerminating";
        case ErrorKind::ExactUnavailable: return "ExactUnavailable";
        case ErrorKind::FourierUnavailable: return "FourierUnavailable";
        case ErrorKind::OutOfGrid: return "OutOfGrid";
        case ErrorKind::InvalidTilt: return "InvalidTilt";
        case ErrorKind::BudgetExhausted: return "BudgetExhausted";
        case ErrorKind::NoRoot: return "NoRoot";
        case ErrorKind::DegeneratePath: return "DegeneratePath";
        case ErrorKind::MismatchedPath: return "MismatchedPath";
        case ErrorKind::SubcriticalityViolated: return "SubcriticalityViolated";
        case ErrorKind::InvalidShift: return "InvalidShift";
        case ErrorKind::LevelTooLow: return "LevelTooLow";
        case ErrorKind::EmptyMeasure: return "EmptyMeasure";
        case ErrorKind::MalformedSequence: return "MalformedSequence";
        case ErrorKind::ConfigInvalid: return "ConfigInvalid";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

const char* to_string(Mode mode) { return mode == Mode::BV ? "BV" : "DIFFUSION"; }

Mode mode_from_string(const std::string& s) {
    if (s == "BV" || s == "bv") return Mode::BV;
    if (s == "DIFFUSION" || s == "diffusion") return Mode::Diffusion;
    throw Error(ErrorKind::ConfigInvalid, "unknown mode '" + s + "'");
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(mix64(master) ^ mix64(stream ^ 0x5851f42d4c957f2dULL));
}

std::uint64_t label_seed(std::uint64_t tree_seed, const std::vector<std::uint32_t>& label) {
    std::uint64_t h = mix64(tree_seed ^ 0x2545f4914f6cdd1dULL);
    for (std::uint32_t j : label) h = mix64(h ^ (static_cast<std::uint64_t>(j) + 1));
    return mix64(h + label.size());
}

Rng make_rng(std::uint64_t master, std::uint64_t stream) { return Rng(split_seed(master, stream)); }

}  // namespace ssmt
