#include "synthtab/gmm.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <set>

#include "synthtab/errors.hpp"
#include "synthtab/rng.hpp"

namespace synthtab {

namespace {

constexpr double kLogTwoPi = 1.83787706640934548356065947281123527;

double log_normal_pdf(double x, double mean, double std) {
    const double z = (x - mean) / std;
    return -0.5 * kLogTwoPi - std::log(std) - 0.5 * z * z;
}

double column_std(std::span<const double> values) {
    const size_t n = values.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

// log sum_j w_j phi(x; mu_j, sigma_j), skipping dead components
double log_mixture_density(double x, const GmmParams& p) {
    double best = -1e300;
    thread_local std::vector<double> terms;
    terms.clear();
    for (size_t j = 0; j < p.k(); ++j) {
        if (p.weights[j] <= 0.0) {
            terms.push_back(-1e300);
            continue;
        }
        const double t = std::log(p.weights[j]) + log_normal_pdf(x, p.means[j], p.stds[j]);
        terms.push_back(t);
        best = std::max(best, t);
    }
    double acc = 0.0;
    for (double t : terms) {
        if (t > -1e299) acc += std::exp(t - best);
    }
    return best + std::log(acc);
}

std::vector<double> kmeanspp_centers(std::span<const double> values, size_t k, Rng& rng,
                                     size_t subsample) {
    std::vector<double> pool(values.begin(), values.end());
    if (pool.size() > subsample) {
        // partial Fisher-Yates: the first `subsample` entries are a uniform draw
        for (size_t i = 0; i < subsample; ++i) {
            const size_t j = i + rng.below(pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(subsample);
    }
    std::vector<double> centers;
    centers.push_back(pool[rng.below(pool.size())]);
    std::vector<double> d2(pool.size());
    while (centers.size() < k) {
        double total = 0.0;
        for (size_t i = 0; i < pool.size(); ++i) {
            double best = 1e300;
            for (double c : centers) best = std::min(best, (pool[i] - c) * (pool[i] - c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) break; // every point already covered
        double target = rng.next_double() * total;
        size_t pick = pool.size() - 1;
        for (size_t i = 0; i < pool.size(); ++i) {
            target -= d2[i];
            if (target <= 0.0) {
                pick = i;
                break;
            }
        }
        centers.push_back(pool[pick]);
    }
    return centers;
}

} // namespace

double std_floor_for(std::span<const double> values) {
    const double s = column_std(values);
    return 1e-4 * (s > 0.0 ? s : 1.0);
}

GmmFitResult fit_gmm_traced(std::span<const double> values, const GmmFitOptions& opts) {
    if (values.empty()) throw ValidationError("fit_gmm: empty input");
    if (opts.k < 1) throw ValidationError("fit_gmm: k must be >= 1");

    const double floor = std_floor_for(values);
    const size_t n = values.size();

    std::set<double> distinct;
    for (double v : values) {
        distinct.insert(v);
        if (distinct.size() > opts.k) break;
    }
    const size_t k = std::min(opts.k, distinct.size());

    GmmFitResult result;
    GmmParams& p = result.params;

    Rng rng(mix_key(opts.seed, 0x676d6d));
    std::vector<double> centers = kmeanspp_centers(values, k, rng, opts.subsample);
    const size_t k_eff = centers.size();
    p.means = centers;
    p.weights.assign(k_eff, 1.0 / static_cast<double>(k_eff));
    const double init_std = std::max(column_std(values), floor);
    p.stds.assign(k_eff, init_std);

    if (k_eff == 1) {
        double mean = 0.0;
        for (double v : values) mean += v;
        p.means[0] = mean / static_cast<double>(n);
        double ss = 0.0;
        for (double v : values) ss += (v - p.means[0]) * (v - p.means[0]);
        p.stds[0] = std::max(std::sqrt(ss / static_cast<double>(n)), floor);
        result.log_likelihoods.push_back(gmm_log_likelihood(values, p));
        return result;
    }

    std::vector<double> resp(n * k_eff);
    double prev_ll = -1e300;
    for (size_t iter = 0; iter < opts.max_iter; ++iter) {
        // E step
        double ll = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double best = -1e300;
            for (size_t j = 0; j < k_eff; ++j) {
                double t = -1e300;
                if (p.weights[j] > 0.0) {
                    t = std::log(p.weights[j]) + log_normal_pdf(values[i], p.means[j], p.stds[j]);
                }
                resp[i * k_eff + j] = t;
                best = std::max(best, t);
            }
            double denom = 0.0;
            for (size_t j = 0; j < k_eff; ++j) {
                double& r = resp[i * k_eff + j];
                r = (r > -1e299) ? std::exp(r - best) : 0.0;
                denom += r;
            }
            for (size_t j = 0; j < k_eff; ++j) resp[i * k_eff + j] /= denom;
            ll += best + std::log(denom);
        }
        assert(result.log_likelihoods.empty() ||
               ll >= prev_ll - 1e-9 * (1.0 + std::abs(prev_ll)));
        result.log_likelihoods.push_back(ll);
        const bool converged = iter > 0 && std::abs(ll - prev_ll) < opts.tol * (1.0 + std::abs(ll));
        prev_ll = ll;
        if (converged) break;

        // M step; sigma is clamped to the floor, which keeps the constrained
        // maximization (and hence monotonicity) intact
        for (size_t j = 0; j < k_eff; ++j) {
            double mass = 0.0, mean_acc = 0.0;
            for (size_t i = 0; i < n; ++i) {
                mass += resp[i * k_eff + j];
                mean_acc += resp[i * k_eff + j] * values[i];
            }
            if (mass <= 1e-300) {
                p.weights[j] = 0.0;
                continue;
            }
            const double mean = mean_acc / mass;
            double var_acc = 0.0;
            for (size_t i = 0; i < n; ++i) {
                var_acc += resp[i * k_eff + j] * (values[i] - mean) * (values[i] - mean);
            }
            p.weights[j] = mass / static_cast<double>(n);
            p.means[j] = mean;
            p.stds[j] = std::max(std::sqrt(var_acc / mass), floor);
        }
    }

    // prune near-dead components, renormalize
    GmmParams pruned;
    for (size_t j = 0; j < k_eff; ++j) {
        if (p.weights[j] >= opts.prune_weight) {
            pruned.weights.push_back(p.weights[j]);
            pruned.means.push_back(p.means[j]);
            pruned.stds.push_back(p.stds[j]);
        }
    }
    if (pruned.weights.empty()) {
        size_t heaviest = 0;
        for (size_t j = 1; j < k_eff; ++j) {
            if (p.weights[j] > p.weights[heaviest]) heaviest = j;
        }
        pruned.weights.push_back(1.0);
        pruned.means.push_back(p.means[heaviest]);
        pruned.stds.push_back(p.stds[heaviest]);
    }
    double wsum = 0.0;
    for (double w : pruned.weights) wsum += w;
    for (double& w : pruned.weights) w /= wsum;
    result.params = std::move(pruned);
    return result;
}

GmmParams fit_gmm(std::span<const double> values, const GmmFitOptions& opts) {
    return fit_gmm_traced(values, opts).params;
}

double gmm_log_likelihood(std::span<const double> values, const GmmParams& params) {
    double ll = 0.0;
    for (double v : values) ll += log_mixture_density(v, params);
    return ll;
}

std::vector<double> gmm_responsibilities(double x, const GmmParams& p) {
    std::vector<double> r(p.k());
    double best = -1e300;
    for (size_t j = 0; j < p.k(); ++j) {
        r[j] = (p.weights[j] > 0.0)
                   ? std::log(p.weights[j]) + log_normal_pdf(x, p.means[j], p.stds[j])
                   : -1e300;
        best = std::max(best, r[j]);
    }
    double denom = 0.0;
    for (double& t : r) {
        t = (t > -1e299) ? std::exp(t - best) : 0.0;
        denom += t;
    }
    for (double& t : r) t /= denom;
    return r;
}

} // namespace synthtab
