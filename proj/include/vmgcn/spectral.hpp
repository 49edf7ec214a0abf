#pragma once

// Real/complex signal utilities used by the mode decomposition: boundary
// mirroring, DFTs backed by FFTW, and half-spectrum handling.
//
// Conventions:
//   forward:  X[m] = sum_t x[t] exp(-j 2 pi m t / L)
//   inverse:  x[t] = (1/L) sum_m X[m] exp(+j 2 pi m t / L)
// A half spectrum of a length-L real signal keeps bins 0..floor(L/2).

#include <complex>
#include <span>
#include <vector>

namespace vmgcn {

using Complex = std::complex<double>;

enum class SpectrumLayout { Full, Half };

struct Spectrum {
    std::vector<Complex> bins;
    std::size_t sample_count = 0;
    SpectrumLayout layout = SpectrumLayout::Full;

    static std::size_t half_size(std::size_t sample_count) { return sample_count / 2 + 1; }
};

/// reverse(first floor(L/2)) ++ x ++ reverse(last ceil(L/2)); length 2L.
std::vector<double> mirror_extend(std::span<const double> x);

/// Inverse of mirror_extend: positions [floor(L/2), floor(L/2) + L).
std::vector<double> truncate_center(std::span<const double> extended, std::size_t original_length);

Spectrum forward_dft(std::span<const double> x);

/// Drops negative-frequency bins. Throws Inconsistency when the input is
/// not Hermitian (relative tolerance 1e-10).
Spectrum to_half_spectrum(const Spectrum& full);

/// Rebuilds the full layout by conjugate symmetry.
Spectrum hermitian_complete(const Spectrum& half);

/// Real part of the inverse DFT. Half layouts are completed internally.
std::vector<double> inverse_dft_real(const Spectrum& sp);

/// Allocation-free variants used in the decomposition inner loop.
/// `half` must have floor(n/2)+1 bins; `out` receives n samples.
void inverse_half_into(std::span<const Complex> half, std::size_t n, std::span<double> out);

}  // namespace vmgcn
