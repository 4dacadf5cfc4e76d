#pragma once

#include <numbers>

namespace zeno {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double kSpeedOfLight = 2.99792458e8;     // m/s
inline constexpr double kSpeedOfLightCm = 2.99792458e10;  // cm/s
inline constexpr double kBoltzmann = 1.380649e-23;        // J/K
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg

// Rb-85 ladder used throughout: 5S1/2 -> 5P3/2 (D2) -> 4D3/2.
inline constexpr double kRb85MassAmu = 84.911789754;
inline constexpr double kRb85MassKg = kRb85MassAmu * kAtomicMassUnit;
inline constexpr double kD2WavelengthM = 780.241209e-9;       // first step
inline constexpr double kUpperStepWavelengthM = 1529.365e-9;  // second step
inline constexpr double kD2NaturalLinewidthHz = 6.0666e6;     // FWHM of 5P3/2

}  // namespace zeno
