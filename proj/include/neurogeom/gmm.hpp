#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "neurogeom/errors.hpp"
#include "neurogeom/volume.hpp"

// 1-D Gaussian-mixture tissue segmentation by EM over voxel intensities.
// Zero-intensity voxels are background and excluded from the fit; the fitted
// model is then evaluated at every voxel to produce per-class density maps.

namespace neurogeom {

struct TissuePosteriors {
    std::array<std::size_t, 3> dims{1, 1, 1};
    std::size_t class_count = 0;
    std::vector<std::vector<double>> posteriors;  // class_count maps, one value per voxel
    std::vector<double> class_means;
    std::vector<double> class_variances;
    std::vector<double> class_weights;
    std::vector<double> log_likelihood_trace;  // one entry per EM iteration
    std::size_t iterations = 0;
    bool converged = false;
};

namespace detail {

inline double log_gauss(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * 3.14159265358979323846 * var) + d * d / var);
}

}  // namespace detail

inline TissuePosteriors gmm_segment(const Volume3D& vol, std::size_t K = 3,
                                    std::size_t max_iters = 100, double tol = 1e-8) {
    if (vol.nt() != 1) throw Error(ErrorClass::usage, "gmm_segment expects a 3D volume");
    if (K < 1) throw Error(ErrorClass::usage, "K must be >= 1");

    std::vector<double> samples;
    std::vector<std::size_t> sample_index;
    samples.reserve(vol.size());
    for (std::size_t idx = 0; idx < vol.size(); ++idx) {
        const double v = vol.at_flat(idx);
        if (v != 0.0) {
            samples.push_back(v);
            sample_index.push_back(idx);
        }
    }

    {
        std::vector<double> distinct = samples;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < K)
            throw NotEnoughVoxels("only " + std::to_string(distinct.size()) +
                                  " distinct intensities for K=" + std::to_string(K));
    }

    const std::size_t n = samples.size();
    const double mean_all = std::accumulate(samples.begin(), samples.end(), 0.0) / double(n);
    double var_all = 0.0;
    for (double v : samples) var_all += (v - mean_all) * (v - mean_all);
    var_all /= double(n);

    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double range = *hi_it - *lo_it;
    const double var_floor = std::max(1e-6 * range * range, 1e-30);

    TissuePosteriors out;
    out.dims = {vol.nx(), vol.ny(), vol.nz()};
    out.class_count = K;
    out.class_means.resize(K);
    out.class_variances.resize(K);
    out.class_weights.assign(K, 1.0 / double(K));

    if (K == 1) {
        out.class_means[0] = mean_all;
        out.class_variances[0] = std::max(var_all, 1e-30);
        out.class_weights[0] = 1.0;
        out.posteriors.assign(1, std::vector<double>(vol.size(), 1.0));
        out.converged = true;
        return out;
    }

    // K-quantile initialization over the sorted intensities; deterministic.
    {
        std::vector<double> sorted = samples;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t k = 0; k < K; ++k) {
            const double q = (double(k) + 0.5) / double(K);
            const std::size_t pos =
                std::min(n - 1, static_cast<std::size_t>(q * double(n)));
            out.class_means[k] = sorted[pos];
        }
        std::fill(out.class_variances.begin(), out.class_variances.end(),
                  std::max(var_all, var_floor));
    }

    std::vector<double> resp(n * K);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        // E step with log-sum-exp
        double ll = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < K; ++k) {
                const double lg = std::log(out.class_weights[k]) +
                                  detail::log_gauss(samples[s], out.class_means[k],
                                                    out.class_variances[k]);
                resp[s * K + k] = lg;
                best = std::max(best, lg);
            }
            double sum = 0.0;
            for (std::size_t k = 0; k < K; ++k) sum += std::exp(resp[s * K + k] - best);
            const double log_norm = best + std::log(sum);
            for (std::size_t k = 0; k < K; ++k)
                resp[s * K + k] = std::exp(resp[s * K + k] - log_norm);
            ll += log_norm;
        }
        out.log_likelihood_trace.push_back(ll);
        out.iterations = iter + 1;

        if (std::abs(ll - prev_ll) < tol) {
            out.converged = true;
            break;
        }
        prev_ll = ll;

        // M step
        for (std::size_t k = 0; k < K; ++k) {
            double nk = 0.0, mu = 0.0;
            for (std::size_t s = 0; s < n; ++s) {
                nk += resp[s * K + k];
                mu += resp[s * K + k] * samples[s];
            }
            if (nk <= 0.0) throw DegenerateClass("class " + std::to_string(k) + " lost all mass");
            mu /= nk;
            double var = 0.0;
            for (std::size_t s = 0; s < n; ++s) {
                const double d = samples[s] - mu;
                var += resp[s * K + k] * d * d;
            }
            var /= nk;
            if (var < var_floor)
                throw DegenerateClass("class " + std::to_string(k) + " variance collapsed (" +
                                      std::to_string(var) + " < floor " +
                                      std::to_string(var_floor) + ")");
            out.class_means[k] = mu;
            out.class_variances[k] = var;
            out.class_weights[k] = nk / double(n);
        }
    }

    // Evaluate the fitted model at every voxel (including background zeros) so
    // the per-voxel posterior maps are complete and sum to 1.
    out.posteriors.assign(K, std::vector<double>(vol.size()));
    for (std::size_t idx = 0; idx < vol.size(); ++idx) {
        const double v = vol.at_flat(idx);
        double best = -std::numeric_limits<double>::infinity();
        std::vector<double> lg(K);
        for (std::size_t k = 0; k < K; ++k) {
            lg[k] = std::log(out.class_weights[k]) +
                    detail::log_gauss(v, out.class_means[k], out.class_variances[k]);
            best = std::max(best, lg[k]);
        }
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) sum += std::exp(lg[k] - best);
        const double log_norm = best + std::log(sum);
        for (std::size_t k = 0; k < K; ++k)
            out.posteriors[k][idx] = std::exp(lg[k] - log_norm);
    }
    return out;
}

}  // namespace neurogeom
