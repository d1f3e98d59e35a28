#include "dgen/schedule.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "dgen/textio.hpp"

namespace dgen {

std::string to_string(SigmaMode mode) {
    return mode == SigmaMode::Beta ? "beta" : "posterior_beta";
}

SigmaMode sigma_mode_from_string(const std::string& s) {
    if (s == "beta") return SigmaMode::Beta;
    if (s == "posterior_beta") return SigmaMode::PosteriorBeta;
    throw std::invalid_argument("sigma_mode: expected 'beta' or 'posterior_beta', got '" + s + "'");
}

Schedule Schedule::from_betas(std::vector<double> betas, SigmaMode mode) {
    if (betas.empty()) {
        throw std::invalid_argument("Schedule: T must be >= 1, got T=0");
    }
    Schedule s;
    s.mode_ = mode;
    s.beta_ = std::move(betas);
    const std::size_t T = s.beta_.size();
    s.alpha_.resize(T);
    s.sigma_sq_.resize(T);
    s.alpha_bar_.assign(T + 1, 1.0);
    for (std::size_t i = 0; i < T; ++i) {
        double b = s.beta_[i];
        if (!(b > 0.0 && b < 1.0)) {
            throw std::invalid_argument("Schedule: beta[" + std::to_string(i + 1) +
                                        "] must lie in (0,1), got " + format_double(b));
        }
        s.alpha_[i] = 1.0 - b;
        s.alpha_bar_[i + 1] = s.alpha_bar_[i] * s.alpha_[i];
    }
    for (std::size_t i = 0; i < T; ++i) {
        s.sigma_sq_[i] = mode == SigmaMode::Beta
                             ? s.beta_[i]
                             : s.beta_[i] * (1.0 - s.alpha_bar_[i]) / (1.0 - s.alpha_bar_[i + 1]);
    }
    return s;
}

double Schedule::alpha_bar(int t) const {
    if (t < 0 || t > steps()) {
        throw std::out_of_range("Schedule::alpha_bar: t=" + std::to_string(t) +
                                " outside [0," + std::to_string(steps()) + "]");
    }
    return alpha_bar_[static_cast<std::size_t>(t)];
}

int Schedule::check_step(int t) const {
    if (t < 1 || t > steps()) {
        throw std::out_of_range("Schedule: step t=" + std::to_string(t) +
                                " outside [1," + std::to_string(steps()) + "]");
    }
    return t;
}

std::uint64_t Schedule::fingerprint() const {
    // FNV-1a over the mode byte and the little-endian bytes of each beta.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](unsigned char byte) {
        h ^= byte;
        h *= 0x100000001B3ULL;
    };
    mix(mode_ == SigmaMode::Beta ? 0 : 1);
    for (double b : beta_) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(b));
        std::memcpy(&bits, &b, sizeof(bits));
        for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(bits >> (8 * i)));
    }
    return h;
}

std::string Schedule::to_csv() const {
    std::ostringstream out;
    out << "t,beta,alpha,alpha_bar,sigma_sq\n";
    for (int t = 1; t <= steps(); ++t) {
        out << t << ',' << format_double(beta(t)) << ',' << format_double(alpha(t)) << ','
            << format_double(alpha_bar(t)) << ',' << format_double(sigma_sq(t)) << '\n';
    }
    return out.str();
}

Schedule Schedule::from_csv(const std::string& text) {
    auto lines = split_lines(text);
    if (lines.empty() || lines[0] != "t,beta,alpha,alpha_bar,sigma_sq") {
        throw std::invalid_argument("Schedule::from_csv: bad header");
    }
    std::vector<double> betas;
    std::vector<double> sigmas;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto f = split_csv_line(lines[i]);
        if (f.size() != 5) throw std::invalid_argument("Schedule::from_csv: bad row " + lines[i]);
        betas.push_back(parse_double(f[1]));
        sigmas.push_back(parse_double(f[4]));
    }
    // The mode is recovered from the stored sigma column.
    SigmaMode mode = (!sigmas.empty() && sigmas.front() == 0.0) ? SigmaMode::PosteriorBeta
                                                                : SigmaMode::Beta;
    Schedule s = from_betas(std::move(betas), mode);
    return s;
}

Schedule make_linear_schedule(int T, double beta_start, double beta_end, SigmaMode mode) {
    if (T < 1) {
        throw std::invalid_argument("make_linear_schedule: T must be >= 1, got " + std::to_string(T));
    }
    if (!(beta_start > 0.0 && beta_start < 1.0)) {
        throw std::invalid_argument("make_linear_schedule: beta_start must lie in (0,1), got " +
                                    format_double(beta_start));
    }
    if (!(beta_end > 0.0 && beta_end < 1.0)) {
        throw std::invalid_argument("make_linear_schedule: beta_end must lie in (0,1), got " +
                                    format_double(beta_end));
    }
    if (beta_end < beta_start) {
        throw std::invalid_argument("make_linear_schedule: beta_end must be >= beta_start");
    }
    std::vector<double> betas(static_cast<std::size_t>(T));
    if (T == 1) {
        betas[0] = beta_start;
    } else {
        double step = (beta_end - beta_start) / static_cast<double>(T - 1);
        for (int t = 0; t < T; ++t) betas[static_cast<std::size_t>(t)] = beta_start + step * t;
    }
    return Schedule::from_betas(std::move(betas), mode);
}

double sigma_sq_for(const Schedule& s, SigmaMode mode, int t) {
    if (mode == s.sigma_mode()) return s.sigma_sq(t);
    return mode == SigmaMode::Beta
               ? s.beta(t)
               : s.beta(t) * (1.0 - s.alpha_bar(t - 1)) / (1.0 - s.alpha_bar(t));
}

double sde_consistency_gap(const Schedule& s) {
    double acc = 0.0;
    double gap = 0.0;
    for (int t = 1; t <= s.steps(); ++t) {
        acc += s.beta(t);
        gap = std::max(gap, std::fabs(s.alpha_bar(t) - std::exp(-acc)));
    }
    return gap;
}

}  // namespace dgen
