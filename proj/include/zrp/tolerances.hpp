#pragma once

// Default tolerances and thresholds used by the verification experiments and
// the acceptance suite.  Every value here can be overridden per run from the
// command line; reports echo the values actually used.

namespace zrp::tol {

// exact identities (closed forms vs series routes)
inline constexpr double kIdentityAbs = 1e-10;
inline constexpr double kWeightNormalization = 1e-12;
inline constexpr double kRecursionRel = 1e-12;

// canonical ensembles
inline constexpr double kOracleAbs = 1e-10;
inline constexpr double kMarginalSum = 1e-10;
inline constexpr double kStationarityResidual = 1e-10;

// local limit theorem trend
inline constexpr double kLltBandAtEnd = 0.15;

// equivalence-of-ensembles experiment
inline constexpr double kEquivalenceFinalTv = 0.01;

// limit-law Kolmogorov-Smirnov bands
inline constexpr double kKsGaussian = 0.05;
inline constexpr double kKsGaussianB3 = 0.08;
inline constexpr double kKsStable = 0.05;
inline constexpr double kKsSecondLargest = 0.05;

// condensate-sampler fidelity
inline constexpr double kCondensateMaxKs = 0.02;
inline constexpr double kCondensateBulkTv = 0.01;

// sampler exactness
inline constexpr double kChiSquarePMin = 0.001;

// increment diagnostics
inline constexpr double kIncrementCorrBand = 0.05;

// performance floors (reported, not failed on)
inline constexpr double kExactSamplerFloorPerSec = 100.0;
inline constexpr double kGillespieFloorPerSec = 1e6;

}  // namespace zrp::tol
