#include <cmath>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fedprov/kernels.hpp"
#include "fedprov/pca.hpp"
#include "kernel_jobs.hpp"

namespace fedprov {

KernelScores score_kernel_population(const RowMatrix& kernels, const RowMatrix& extras) {
    if (kernels.rows() < 3)
        throw Error(ErrorKind::insufficient_population, "kernel scoring needs at least 3 kernels");
    const PcaResult p = pca(kernels, 2);
    const auto n = static_cast<std::size_t>(kernels.rows());
    KernelScores out;
    out.population.assign(n, 0.0);
    out.extras.assign(static_cast<std::size_t>(extras.rows()), 0.0);
    if (p.eigenvalues.size() == 0) return out;

    auto dist = [&](const RowMatrix& y, std::vector<double>& dst) {
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            double s = 0.0;
            for (Eigen::Index k = 0; k < y.cols(); ++k) s += y(r, k) * y(r, k) / p.eigenvalues(k);
            dst[static_cast<std::size_t>(r)] = std::sqrt(s);
        }
    };
    dist(p.scores, out.population);
    if (extras.rows() > 0) dist(p.project(extras), out.extras);

    double mx = 0.0;
    for (double v : out.population) mx = std::max(mx, v);
    if (mx <= 0.0) {
        std::fill(out.population.begin(), out.population.end(), 0.0);
        std::fill(out.extras.begin(), out.extras.end(), 0.0);
        return out;
    }
    for (double& v : out.population) v /= mx;
    for (double& v : out.extras) v /= mx;
    return out;
}

namespace parallel {

RankTable rank_coordinates(std::span<const LayeredParams> updates) {
    RankTable out = detail::allocate_ranks(updates);
    if (updates.empty()) return out;
    const auto len = static_cast<std::ptrdiff_t>(updates[0].total_len());
#pragma omp parallel
    {
        std::vector<std::uint32_t> order;
#pragma omp for schedule(static)
        for (std::ptrdiff_t j = 0; j < len; ++j) detail::rank_coordinate(updates, static_cast<std::size_t>(j), order, out);
    }
    return out;
}

CamResult conv_anomaly(std::span<const LayeredParams> updates, std::span<const LayeredParams> extras) {
    CamResult out = detail::allocate_cam(updates, extras);
    const auto jobs = detail::conv_jobs(updates[0]);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(jobs.size()); ++j)
        detail::run_conv_job(updates, extras, jobs[static_cast<std::size_t>(j)], out);
    return out;
}

}  // namespace parallel

int configure_threads_from_env() {
#ifdef _OPENMP
    if (const char* env = std::getenv("FEDPROV_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) omp_set_num_threads(static_cast<int>(v));
    }
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace fedprov
