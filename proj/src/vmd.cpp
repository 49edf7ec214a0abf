#include "vmgcn/vmd.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "vmgcn/errors.hpp"

namespace vmgcn {

namespace {

constexpr double kPowerFloor = 1e-30;

double squared_norm(std::span<const Complex> v) {
    double s = 0.0;
    for (const auto& c : v) s += std::norm(c);
    return s;
}

std::string format_double(double v) {
    char buf[40];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, p);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw InvalidInput("bad number '" + s + "' in mode cache");
    return v;
}

std::vector<double> initial_omegas(const VmdConfig& cfg) {
    const auto k = static_cast<std::size_t>(cfg.num_modes);
    std::vector<double> omegas(k, 0.0);
    switch (cfg.omega_init) {
        case OmegaInit::Uniform:
            for (std::size_t i = 0; i < k; ++i) omegas[i] = 0.5 * static_cast<double>(i) / static_cast<double>(k);
            break;
        case OmegaInit::Zero:
            break;
        case OmegaInit::Random: {
            std::mt19937_64 rng(cfg.seed);
            for (auto& w : omegas) w = 0.5 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
            std::sort(omegas.begin(), omegas.end());
            break;
        }
    }
    return omegas;
}

}  // namespace

std::string to_string(OmegaInit init) {
    switch (init) {
        case OmegaInit::Uniform: return "uniform";
        case OmegaInit::Zero: return "zero";
        case OmegaInit::Random: return "random";
    }
    return "uniform";
}

OmegaInit omega_init_from_string(const std::string& s) {
    if (s == "uniform") return OmegaInit::Uniform;
    if (s == "zero") return OmegaInit::Zero;
    if (s == "random") return OmegaInit::Random;
    throw InvalidConfig("unknown omega_init '" + s + "' (expected uniform|zero|random)");
}

void VmdConfig::validate() const {
    if (num_modes < 1) throw InvalidConfig("num_modes must be >= 1");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidConfig("alpha must be a positive finite number");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw InvalidConfig("tau must be non-negative");
    if (!(epsilon > 0.0)) throw InvalidConfig("epsilon must be positive");
    if (max_iter < 1) throw InvalidConfig("max_iter must be >= 1");
}

std::string VmdConfig::canonical() const {
    std::string s = "K=" + std::to_string(num_modes) + " alpha=" + format_double(alpha) +
                    " tau=" + format_double(tau) + " epsilon=" + format_double(epsilon) +
                    " max_iter=" + std::to_string(max_iter) + " omega_init=" + to_string(omega_init);
    if (omega_init == OmegaInit::Random) s += " seed=" + std::to_string(seed);
    return s;
}

std::vector<double> ModeSet::reconstruction() const {
    std::vector<double> sum(length(), 0.0);
    for (const auto& mode : modes) {
        for (std::size_t t = 0; t < sum.size(); ++t) sum[t] += mode[t];
    }
    return sum;
}

std::vector<double> bin_frequencies(std::size_t extended_length) {
    const std::size_t bins = Spectrum::half_size(extended_length);
    std::vector<double> freqs(bins);
    for (std::size_t m = 0; m < bins; ++m) {
        freqs[m] = static_cast<double>(m) / static_cast<double>(extended_length);
    }
    return freqs;
}

HalfSpectrum update_mode(std::size_t k, std::span<const Complex> f_hat,
                         const std::vector<HalfSpectrum>& modes_hat,
                         std::span<const Complex> lambda_hat, std::span<const double> omegas,
                         std::span<const double> freqs, double alpha) {
    const std::size_t bins = f_hat.size();
    if (lambda_hat.size() != bins || freqs.size() != bins || k >= modes_hat.size() ||
        omegas.size() != modes_hat.size()) {
        throw ShapeMismatch("update_mode: inconsistent spectrum shapes");
    }
    HalfSpectrum out(bins);
    for (std::size_t m = 0; m < bins; ++m) {
        Complex others{0.0, 0.0};
        for (std::size_t i = 0; i < modes_hat.size(); ++i) {
            if (i != k) others += modes_hat[i][m];
        }
        const double d = freqs[m] - omegas[k];
        out[m] = (f_hat[m] - others + 0.5 * lambda_hat[m]) / (1.0 + 2.0 * alpha * d * d);
    }
    return out;
}

double update_center_frequency(std::span<const Complex> mode_hat, std::span<const double> freqs,
                               double previous) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t m = 0; m < mode_hat.size(); ++m) {
        const double p = std::norm(mode_hat[m]);
        num += freqs[m] * p;
        den += p;
    }
    if (den < kPowerFloor) return previous;
    return num / den;
}

LagrangianState update_multiplier(const LagrangianState& state, std::span<const Complex> f_hat,
                                  const std::vector<HalfSpectrum>& modes_hat, double tau) {
    LagrangianState next = state;
    if (tau == 0.0) return next;
    for (std::size_t m = 0; m < f_hat.size(); ++m) {
        Complex sum{0.0, 0.0};
        for (const auto& u : modes_hat) sum += u[m];
        next.lambda_hat[m] += tau * (f_hat[m] - sum);
    }
    return next;
}

double convergence_metric(const std::vector<HalfSpectrum>& previous,
                          const std::vector<HalfSpectrum>& current) {
    if (previous.size() != current.size()) throw ShapeMismatch("convergence_metric: mode count differs");
    double total = 0.0;
    for (std::size_t k = 0; k < previous.size(); ++k) {
        if (previous[k].size() != current[k].size()) throw ShapeMismatch("convergence_metric: bin count differs");
        const double base = squared_norm(previous[k]);
        if (base < kPowerFloor) continue;
        double diff = 0.0;
        for (std::size_t m = 0; m < previous[k].size(); ++m) diff += std::norm(current[k][m] - previous[k][m]);
        total += diff / base;
    }
    return total;
}

ModeSet decompose(std::span<const double> signal, const VmdConfig& cfg) {
    cfg.validate();
    const std::size_t len = signal.size();
    const auto num_modes = static_cast<std::size_t>(cfg.num_modes);
    if (len < 2 * num_modes || len < 2) {
        throw InvalidConfig("decompose needs L >= 2K (L=" + std::to_string(len) +
                            ", K=" + std::to_string(num_modes) + ")");
    }
    for (double v : signal) {
        if (!std::isfinite(v)) throw InvalidInput("decompose: signal contains non-finite values");
    }

    const std::vector<double> extended = mirror_extend(signal);
    const std::size_t ext_len = extended.size();
    const Spectrum f_half = to_half_spectrum(forward_dft(extended));
    const std::span<const Complex> f_hat(f_half.bins);
    const std::size_t bins = f_hat.size();
    const std::vector<double> freqs = bin_frequencies(ext_len);

    std::vector<double> omegas = initial_omegas(cfg);
    std::vector<HalfSpectrum> modes(num_modes, HalfSpectrum(bins, Complex{0.0, 0.0}));
    std::vector<HalfSpectrum> previous = modes;
    HalfSpectrum lambda(bins, Complex{0.0, 0.0});
    HalfSpectrum total(bins, Complex{0.0, 0.0});  // running sum of all modes

    const double alpha = cfg.alpha;
    const bool pin_dc = cfg.omega_init == OmegaInit::Zero;
    int iteration = 0;
    bool converged = false;

    while (iteration < cfg.max_iter) {
        ++iteration;
        previous = modes;
        for (std::size_t k = 0; k < num_modes; ++k) {
            HalfSpectrum& u = modes[k];
            const double wk = omegas[k];
            for (std::size_t m = 0; m < bins; ++m) {
                const Complex others = total[m] - u[m];
                const double d = freqs[m] - wk;
                u[m] = (f_hat[m] - others + 0.5 * lambda[m]) / (1.0 + 2.0 * alpha * d * d);
                total[m] = others + u[m];
            }
            if (!(pin_dc && k == 0 && iteration == 1)) {
                omegas[k] = update_center_frequency(u, freqs, omegas[k]);
            }
        }
        if (cfg.tau != 0.0) {
            for (std::size_t m = 0; m < bins; ++m) lambda[m] += cfg.tau * (f_hat[m] - total[m]);
        }
        // Modes start at zero, so the first sweep has no baseline to compare.
        if (iteration > 1 && convergence_metric(previous, modes) < cfg.epsilon) {
            converged = true;
            break;
        }
    }

    std::vector<std::size_t> order(num_modes);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return omegas[a] < omegas[b]; });

    ModeSet out;
    out.iterations_used = iteration;
    out.converged = converged;
    std::vector<double> time_domain(ext_len);
    for (std::size_t idx : order) {
        inverse_half_into(modes[idx], ext_len, time_domain);
        out.modes.push_back(truncate_center(time_domain, len));
        out.omegas.push_back(omegas[idx]);
    }
    const std::vector<double> phi = redemption(signal, out);
    double acc = 0.0;
    for (double v : phi) acc += std::abs(v);
    out.reconstruction_residual = acc / static_cast<double>(len);
    return out;
}

std::vector<ModeSet> decompose_all(const std::vector<TimeSeries>& series, const VmdConfig& cfg,
                                   unsigned threads) {
    cfg.validate();
    std::vector<ModeSet> results(series.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(series.size(), 1)));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < series.size(); i = next++) {
            try {
                results[i] = decompose(series[i].values, cfg);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

std::vector<double> redemption(std::span<const double> signal, const ModeSet& ms) {
    for (const auto& mode : ms.modes) {
        if (mode.size() != signal.size()) throw InvalidInput("redemption: mode length differs from signal");
    }
    std::vector<double> phi(signal.begin(), signal.end());
    for (const auto& mode : ms.modes) {
        for (std::size_t t = 0; t < phi.size(); ++t) phi[t] -= mode[t];
    }
    return phi;
}

double reconstruction_loss(std::span<const double> signal, const ModeSet& ms) {
    const std::vector<double> phi = redemption(signal, ms);
    if (phi.empty()) return 0.0;
    double acc = 0.0;
    for (double v : phi) acc += std::abs(v);
    return acc / static_cast<double>(phi.size());
}

std::vector<double> normalize_min_max(std::span<const double> x) {
    std::vector<double> out(x.size(), 0.0);
    if (x.empty()) return out;
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const double range = *hi - *lo;
    if (range <= 0.0) return out;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - *lo) / range;
    return out;
}

// --- cache -----------------------------------------------------------------

std::uint64_t fingerprint(const std::string& canonical_text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : canonical_text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fingerprint_hex(std::uint64_t fp) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[fp & 0xF];
        fp >>= 4;
    }
    return s;
}

void write_mode_cache(std::ostream& os, const VmdConfig& cfg, std::uint64_t fp,
                      const std::vector<ModeCacheEntry>& entries) {
    os << "#vmgcn-mode-cache 1\n";
    os << "#fingerprint " << fingerprint_hex(fp) << "\n";
    os << "#config " << cfg.canonical() << "\n";
    for (const auto& e : entries) {
        const ModeSet& ms = e.modes;
        os << "node " << e.node_id << " K " << ms.num_modes() << " L " << ms.length() << " iterations "
           << ms.iterations_used << " converged " << (ms.converged ? 1 : 0) << " residual "
           << format_double(ms.reconstruction_residual) << "\n";
        os << "omegas";
        for (double w : ms.omegas) os << ' ' << format_double(w);
        os << "\n";
        for (std::size_t t = 0; t < ms.length(); ++t) {
            for (std::size_t k = 0; k < ms.num_modes(); ++k) {
                if (k) os << ' ';
                os << format_double(ms.modes[k][t]);
            }
            os << "\n";
        }
    }
}

ModeCache read_mode_cache(std::istream& is) {
    ModeCache cache;
    std::string line;
    auto expect_header = [&](const std::string& prefix) {
        if (!std::getline(is, line) || line.rfind(prefix, 0) != 0) {
            throw InvalidInput("mode cache: missing '" + prefix + "' header");
        }
        return line.substr(prefix.size());
    };
    if (expect_header("#vmgcn-mode-cache ") != "1") throw InvalidInput("mode cache: unsupported version");
    const std::string fp_text = expect_header("#fingerprint ");
    cache.fingerprint = std::stoull(fp_text, nullptr, 16);
    cache.config_text = expect_header("#config ");

    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream head(line);
        std::string tag, id, ktag, ltag, itag, ctag, rtag, rtext;
        std::size_t k = 0, len = 0;
        int iterations = 0, conv = 0;
        head >> tag >> id >> ktag >> k >> ltag >> len >> itag >> iterations >> ctag >> conv >> rtag >> rtext;
        if (!head || tag != "node") throw InvalidInput("mode cache: malformed node record");
        ModeCacheEntry entry;
        entry.node_id = id;
        entry.modes.iterations_used = iterations;
        entry.modes.converged = conv != 0;
        entry.modes.reconstruction_residual = parse_double(rtext);

        if (!std::getline(is, line)) throw InvalidInput("mode cache: truncated omegas");
        std::istringstream om(line);
        std::string word;
        om >> word;
        if (word != "omegas") throw InvalidInput("mode cache: expected omegas line");
        while (om >> word) entry.modes.omegas.push_back(parse_double(word));
        if (entry.modes.omegas.size() != k) throw InvalidInput("mode cache: omega count mismatch");

        entry.modes.modes.assign(k, std::vector<double>(len));
        for (std::size_t t = 0; t < len; ++t) {
            if (!std::getline(is, line)) throw InvalidInput("mode cache: truncated mode matrix");
            std::istringstream row(line);
            for (std::size_t j = 0; j < k; ++j) {
                if (!(row >> word)) throw InvalidInput("mode cache: short mode row");
                entry.modes.modes[j][t] = parse_double(word);
            }
        }
        cache.entries.push_back(std::move(entry));
    }
    return cache;
}

}  // namespace vmgcn
