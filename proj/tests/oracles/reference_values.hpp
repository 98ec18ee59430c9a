#pragma once

// Reference values computed independently with 40-digit arithmetic
// (mpmath: besseli, quadrature, derivative root finding) and frozen here.
// Values tagged "double path" were evaluated through the same
// double-rounded intermediates the implementation is contracted to use.

#include <array>
#include <cstddef>

namespace refvals {

struct BesselPoint {
    double x;
    double i0;
};

// Spans both branches of the implementation (series below 15, asymptotic
// above) including points straddling the switch.
inline constexpr std::array<BesselPoint, 19> kBesselI0Table{{
    {0.0, 1.0},
    {0.1, 1.0025015629340956},
    {0.25, 1.015686141223608},
    {0.5, 1.0634833707413236},
    {0.75, 1.1456467780440014},
    {1.0, 1.2660658777520084},
    {1.5, 1.646723189772891},
    {2.0, 2.2795853023360673},
    {3.0, 4.8807925858650245},
    {5.0, 27.239871823604446},
    {8.0, 427.5641157218048},
    {10.0, 2815.7166284662544},
    {12.0, 18948.925349296307},
    {14.9, 308375.5786874392},
    {15.0, 339649.3732979139},
    {15.1, 374103.411190409},
    {20.0, 43558282.559553534},
    {50.0, 2.9325537838493362e+20},
    {100.0, 1.0737517071310738e+42},
}};

// Circular vMF density at its mode for kappa = 2: e^k / (2 pi I0(k)).
inline constexpr double kVmfModeDensityKappa2 = 0.5158854120190136;

// Directional loss for a perfectly aligned pair at kappa = 1.
// Ideal: -log 2 + log(1 + e^-pi). The implementation clamps the cosine to
// 1 - 1e-7 before acos, shifting the value by ~4.5e-4 (double path).
inline constexpr double kAngmfAlignedKappa1Ideal = -0.6508409265647427;
inline constexpr double kAngmfAlignedKappa1Clamped = -0.6503937129656336;

// argmin over kappa of the directional loss at fixed angular error delta:
// root of -2k/(k^2+1) + delta - pi/(1+e^(k pi)).
inline constexpr double kKappaStarDeltaHalf = 3.7322697816599724;
// At delta = pi/2 the derivative is 0 at kappa = 0 and positive beyond:
// the optimum collapses to the uniform distribution.
inline constexpr double kKappaStarDeltaHalfPi = 0.0;

}  // namespace refvals
