#pragma once

// Variational mode decomposition solved by ADMM in the frequency domain.
//
// The signal is mirror-extended to length 2L, transformed, and only the
// non-negative half spectrum (bins 0..L) is updated. Bin m sits at the
// normalized frequency m / (2L), so every center frequency lives in
// [0, 0.5] cycles per sample of the original series.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vmgcn/spectral.hpp"
#include "vmgcn/time_series.hpp"

namespace vmgcn {

enum class OmegaInit { Uniform, Zero, Random };

struct VmdConfig {
    int num_modes = 4;
    double alpha = 2000.0;   // bandwidth penalty
    double tau = 0.0;        // dual ascent step; 0 disables the multiplier
    double epsilon = 1e-7;   // convergence tolerance
    int max_iter = 500;
    OmegaInit omega_init = OmegaInit::Uniform;
    std::uint64_t seed = 0;  // only used by OmegaInit::Random

    void validate() const;
    /// Canonical text form; the cache fingerprint hashes this.
    std::string canonical() const;
};

std::string to_string(OmegaInit init);
OmegaInit omega_init_from_string(const std::string& s);

struct ModeSet {
    std::vector<std::vector<double>> modes;  // K x L, ascending omega
    std::vector<double> omegas;              // normalized, ascending
    int iterations_used = 0;
    bool converged = false;
    double reconstruction_residual = 0.0;    // mean |f - sum_k u_k|

    std::size_t num_modes() const noexcept { return modes.size(); }
    std::size_t length() const noexcept { return modes.empty() ? 0 : modes.front().size(); }
    /// sum_k u_k(t)
    std::vector<double> reconstruction() const;
};

/// Half-spectrum state of one ADMM run, exposed for the update steps.
using HalfSpectrum = std::vector<Complex>;

struct LagrangianState {
    HalfSpectrum lambda_hat;
};

/// Normalized frequency of each half-spectrum bin for an extended length n.
std::vector<double> bin_frequencies(std::size_t extended_length);

/// Gauss-Seidel mode update. `modes_hat` holds the current sweep's values for
/// i < k and the previous sweep's for i > k; entry k is ignored.
HalfSpectrum update_mode(std::size_t k, std::span<const Complex> f_hat,
                         const std::vector<HalfSpectrum>& modes_hat,
                         std::span<const Complex> lambda_hat, std::span<const double> omegas,
                         std::span<const double> freqs, double alpha);

/// Power-weighted mean frequency. Returns `previous` when the mode carries
/// less than 1e-30 total power.
double update_center_frequency(std::span<const Complex> mode_hat, std::span<const double> freqs,
                               double previous);

LagrangianState update_multiplier(const LagrangianState& state, std::span<const Complex> f_hat,
                                  const std::vector<HalfSpectrum>& modes_hat, double tau);

/// sum_k ||u_k^new - u_k^old||^2 / ||u_k^old||^2, skipping modes whose
/// previous energy is below 1e-30.
double convergence_metric(const std::vector<HalfSpectrum>& previous,
                          const std::vector<HalfSpectrum>& current);

ModeSet decompose(std::span<const double> signal, const VmdConfig& cfg);
inline ModeSet decompose(const TimeSeries& s, const VmdConfig& cfg) { return decompose(s.values, cfg); }

/// Decomposes every series; results come back in input order regardless of
/// how the work is scheduled. `threads == 0` uses hardware concurrency.
std::vector<ModeSet> decompose_all(const std::vector<TimeSeries>& series, const VmdConfig& cfg,
                                   unsigned threads = 0);

/// phi(t) = f(t) - sum_k u_k(t)
std::vector<double> redemption(std::span<const double> signal, const ModeSet& ms);
inline std::vector<double> redemption(const TimeSeries& s, const ModeSet& ms) {
    return redemption(s.values, ms);
}

/// mean |phi(t)|. Callers normalize the signal first (see normalize_min_max)
/// so the value is comparable across nodes.
double reconstruction_loss(std::span<const double> signal, const ModeSet& ms);
inline double reconstruction_loss(const TimeSeries& s, const ModeSet& ms) {
    return reconstruction_loss(s.values, ms);
}

/// Affine map onto [0, 1]; a constant signal maps to all zeros.
std::vector<double> normalize_min_max(std::span<const double> x);

// ---------------------------------------------------------------------------
// Mode cache
//
// Text container, one file per node set:
//   #vmgcn-mode-cache 1
//   #fingerprint <16 hex digits>
//   #config <VmdConfig::canonical()>
//   node <id> K <K> L <L> iterations <n> converged <0|1> residual <r>
//   omegas <w_1> ... <w_K>
//   <L rows of K values, one time step per row>
// Numbers are written with 17 significant digits so a reload is exact.
// ---------------------------------------------------------------------------

struct ModeCacheEntry {
    std::string node_id;
    ModeSet modes;
};

std::uint64_t fingerprint(const std::string& canonical_text);
std::string fingerprint_hex(std::uint64_t fp);

void write_mode_cache(std::ostream& os, const VmdConfig& cfg, std::uint64_t fp,
                      const std::vector<ModeCacheEntry>& entries);

struct ModeCache {
    std::uint64_t fingerprint = 0;
    std::string config_text;
    std::vector<ModeCacheEntry> entries;
};

ModeCache read_mode_cache(std::istream& is);

}  // namespace vmgcn
