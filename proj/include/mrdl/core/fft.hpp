#pragma once

#include "mrdl/core/field.hpp"

namespace mrdl {

// Unitary (1/sqrt(N) each way), DC-centered 2D DFT pair. The image origin
// and the k-space DC sample both sit at (floor(w/2), floor(h/2)), so a
// central impulse maps to a flat spectrum. Backed by FFTW; safe to call
// from multiple threads.

ComplexField forward_fft(const ComplexField& image);
ComplexField inverse_fft(const ComplexField& kspace);

}  // namespace mrdl
