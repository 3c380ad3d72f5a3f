#include "lifestyles/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "lifestyles/parallel.hpp"
#include "lifestyles/rng.hpp"

namespace lifestyles {

void SyntheticConfig::validate() const {
    if (n_households < 1) throw ConfigError("n_households must be >= 1");
    if (n_days < 1) throw ConfigError("n_days must be >= 1");
    if (n_archetypes < 1) throw ConfigError("n_archetypes must be >= 1");
    if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
    if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be >= 0");
    if (!(magnitude_lo > 0.0) || magnitude_hi < magnitude_lo)
        throw ConfigError("magnitude range must satisfy 0 < lo <= hi");
    if (n_lifestyles > n_archetypes)
        throw ConfigError("n_lifestyles cannot exceed n_archetypes");
    if (switch_fraction < 0.0 || switch_fraction > 1.0)
        throw ConfigError("switch_fraction must lie in [0,1]");
    if (!(mixture_concentration > 0.0)) throw ConfigError("mixture_concentration must be > 0");
    if (psi_offdiagonal < 0.0 || psi_offdiagonal >= 1.0)
        throw ConfigError("psi_offdiagonal must lie in [0,1)");
}

std::vector<std::array<double, 24>> make_archetypes(std::size_t n) {
    std::vector<std::array<double, 24>> shapes(n);
    constexpr double two_pi = 6.283185307179586476925286766559;
    for (std::size_t i = 0; i < n; ++i) {
        double center = 24.0 * static_cast<double>(i) / static_cast<double>(n);
        double kappa = 3.0 + static_cast<double>(i % 3);
        double sum = 0.0;
        for (int h = 0; h < 24; ++h) {
            double v = std::exp(kappa * std::cos(two_pi * (h - center) / 24.0));
            shapes[i][static_cast<std::size_t>(h)] = v;
            sum += v;
        }
        for (auto& v : shapes[i]) v /= sum;
    }
    return shapes;
}

namespace {

std::vector<double> lifestyle_prototype(std::size_t lifestyle, std::size_t k) {
    std::vector<double> p(k, k > 1 ? 0.3 / static_cast<double>(k - 1) : 0.0);
    p[lifestyle % k] = k > 1 ? 0.7 : 1.0;
    return p;
}

}  // namespace

SyntheticResult generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t M = config.n_households;
    const std::size_t K = config.n_archetypes;
    const std::size_t L = config.n_lifestyles;

    SyntheticResult out;
    out.truth.archetypes = make_archetypes(K);

    out.truth.psi.assign(K, std::vector<double>(K, 0.0));
    for (std::size_t k = 0; k < K; ++k) {
        if (K == 1) {
            out.truth.psi[k][k] = 1.0;
        } else {
            for (std::size_t i = 0; i < K; ++i)
                out.truth.psi[k][i] = config.psi_offdiagonal / static_cast<double>(K - 1);
            out.truth.psi[k][k] = 1.0 - config.psi_offdiagonal;
        }
    }

    out.truth.theta.assign(M, std::vector<double>(K, 0.0));
    out.truth.seasonal_lifestyle.assign(M, {-1, -1, -1, -1});
    out.truth.annual_lifestyle.assign(M, -1);
    out.truth.switcher.assign(M, 0);
    out.data.households.resize(M);

    const std::int64_t day0 = config.start_date.day_number();

    parallel_for(M, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            Rng rng(derive_seed(seed, "synth.household." + std::to_string(j)));

            // one mixture per season; identical across seasons unless switched
            std::array<std::vector<double>, 4> season_theta;
            if (L == 0) {
                auto theta = rng.dirichlet(config.alpha, K);
                for (auto& t : season_theta) t = theta;
            } else {
                std::size_t base = static_cast<std::size_t>(rng.next_below(L));
                bool switches = L > 1 && rng.next_double() < config.switch_fraction;
                std::size_t switch_season = static_cast<std::size_t>(rng.next_below(4));
                std::size_t alt =
                    L > 1 ? (base + 1 + rng.next_below(L - 1)) % L : base;

                auto proto = lifestyle_prototype(base, K);
                for (auto& p : proto) p *= config.mixture_concentration;
                auto theta_base = rng.dirichlet(proto);

                std::vector<double> theta_alt;
                if (switches) {
                    auto proto_alt = lifestyle_prototype(alt, K);
                    for (auto& p : proto_alt) p *= config.mixture_concentration;
                    theta_alt = rng.dirichlet(proto_alt);
                }

                for (std::size_t s = 0; s < 4; ++s) {
                    bool switched = switches && s == switch_season;
                    season_theta[s] = switched ? theta_alt : theta_base;
                    out.truth.seasonal_lifestyle[j][s] =
                        static_cast<int>(switched ? alt : base);
                }
                out.truth.annual_lifestyle[j] = static_cast<int>(base);
                out.truth.switcher[j] = switches ? 1 : 0;
            }

            Household& home = out.data.households[j];
            {
                char idbuf[16];
                std::snprintf(idbuf, sizeof(idbuf), "H%06zu", j);
                home.id = idbuf;
            }
            home.days.resize(config.n_days);

            std::vector<double> theta_mean(K, 0.0);
            const double log_lo = std::log(config.magnitude_lo);
            const double log_hi = std::log(config.magnitude_hi);
            for (std::size_t d = 0; d < config.n_days; ++d) {
                ReadingDay& day = home.days[d];
                day.date = Date::from_day_number(day0 + static_cast<std::int64_t>(d));
                const auto& theta =
                    season_theta[static_cast<std::size_t>(season_of_month(day.date.month))];
                for (std::size_t k = 0; k < K; ++k) theta_mean[k] += theta[k];

                std::size_t z = rng.categorical(theta);
                std::size_t shape = rng.categorical(out.truth.psi[z]);
                double magnitude = std::exp(rng.uniform(log_lo, log_hi));
                for (int h = 0; h < 24; ++h) {
                    double v = out.truth.archetypes[shape][static_cast<std::size_t>(h)] +
                               rng.normal(0.0, config.noise_sd);
                    day.kwh[static_cast<std::size_t>(h)] = magnitude * std::max(0.0, v);
                }
            }
            for (std::size_t k = 0; k < K; ++k)
                out.truth.theta[j][k] = theta_mean[k] / static_cast<double>(config.n_days);
        }
    });

    out.data.validate();
    return out;
}

}  // namespace lifestyles
