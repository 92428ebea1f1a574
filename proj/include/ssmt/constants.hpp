#pragma once

#include <array>
#include <cstddef>

// Thresholds and default sample sizes of the statistical suites.
namespace ssmt::limits {

inline constexpr double kKsAlpha = 1e-3;
inline constexpr double kChiSquareAlpha = 1e-3;
inline constexpr double kMeanRelTol = 0.05;

inline constexpr double kFourierAbsTol = 1e-6;
inline constexpr double kMonteCarloPotentialRelTol = 0.03;
inline constexpr double kHitRelTol = 0.02;
inline constexpr double kEsscherExponentTol = 1e-10;
inline constexpr double kEsscherPotentialRelTol = 0.01;
inline constexpr double kCramerTol = 1e-3;
inline constexpr double kCramerLevel = -8.0;

inline constexpr double kHarmonicMassRelTol = 0.05;
inline constexpr double kHarmonicHitTol = 0.1;
inline constexpr std::array<double, 4> kHarmonicLevels{0.2, 0.1, 0.05, 0.02};

inline constexpr double kStructureLengthTol = 1e-9;
inline constexpr std::size_t kStructureSeeds = 100;
inline constexpr double kSelfConsistencySe = 3.0;
inline constexpr std::size_t kTailBucket = 8;
// gap floor for the memoryless-tail variant of the inter-atom gap test
inline constexpr double kGapFloor = 0.05;
inline constexpr double kZeroLengthSlopeTol = 0.1;

inline constexpr std::size_t kPotentialPaths = 100000;
inline constexpr std::size_t kLocalTimeSamples = 5000;
inline constexpr std::size_t kHitPaths = 100000;
inline constexpr std::size_t kConditionedSamples = 5000;
inline constexpr std::size_t kReferenceSpines = 5000;
inline constexpr std::size_t kMinSpines = 5000;
inline constexpr std::size_t kMinTreeReplicas = 1000;
inline constexpr double kSpineLevel = 0.5;

}  // namespace ssmt::limits
