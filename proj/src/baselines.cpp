#include "fedprov/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fedprov/error.hpp"
#include "fedprov/pca.hpp"
#include "fedprov/rng.hpp"
#include "fedprov/robust.hpp"

namespace fedprov {

namespace {
void check_all(std::span<const LayeredParams> updates, const char* who) {
    for (const auto& u : updates) u.require_compatible(updates[0], who);
}
}  // namespace

std::vector<std::size_t> multi_krum(std::span<const LayeredParams> updates, std::size_t m, KrumCount count) {
    const std::size_t n = updates.size();
    if (n <= m + 2) throw Error(ErrorKind::invalid_argument, "multi_krum needs n > m + 2");
    check_all(updates, "multi_krum");
    const std::size_t want = count == KrumCount::classic ? (n >= 2 * m + 3 ? n - 2 * m - 2 : 0) : n - m - 2;
    if (want == 0) throw Error(ErrorKind::invalid_argument, "multi_krum: classic count n - 2m - 2 is not positive");

    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            auto a = updates[i].values();
            auto b = updates[j].values();
            for (std::size_t q = 0; q < a.size(); ++q) s += (a[q] - b[q]) * (a[q] - b[q]);
            dist[i][j] = dist[j][i] = s;
        }

    std::vector<std::size_t> remaining(n);
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<std::size_t> chosen;
    std::vector<double> peers;
    while (chosen.size() < want) {
        const std::size_t r = remaining.size();
        const std::size_t neigh = r > m + 2 ? r - m - 2 : 1;
        double best = 0.0;
        std::size_t best_pos = 0;
        for (std::size_t p = 0; p < r; ++p) {
            peers.clear();
            for (std::size_t q = 0; q < r; ++q)
                if (q != p) peers.push_back(dist[remaining[p]][remaining[q]]);
            const std::size_t take = std::min(neigh, peers.size());
            std::partial_sort(peers.begin(), peers.begin() + static_cast<std::ptrdiff_t>(take), peers.end());
            const double score = std::accumulate(peers.begin(), peers.begin() + static_cast<std::ptrdiff_t>(take), 0.0);
            if (p == 0 || score < best) {
                best = score;
                best_pos = p;
            }
        }
        chosen.push_back(remaining[best_pos]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_pos));
    }
    return chosen;
}

LayeredParams median_aggregate(std::span<const LayeredParams> updates) {
    if (updates.empty()) throw Error(ErrorKind::insufficient_population, "median_aggregate: no updates");
    check_all(updates, "median_aggregate");
    LayeredParams out = LayeredParams::zeros_like(updates[0]);
    std::vector<double> col(updates.size());
    auto dst = out.values();
    for (std::size_t j = 0; j < dst.size(); ++j) {
        for (std::size_t i = 0; i < updates.size(); ++i) col[i] = updates[i].values()[j];
        dst[j] = lower_median(col);
    }
    return out;
}

std::vector<std::size_t> dnc_detect(std::span<const LayeredParams> updates, std::size_t m, const DncConfig& cfg,
                                    std::uint64_t seed) {
    const std::size_t n = updates.size();
    if (n < 3) throw Error(ErrorKind::insufficient_population, "dnc_detect needs at least 3 updates");
    if (!(cfg.subsample > 0.0 && cfg.subsample <= 1.0) || cfg.c < 0.0)
        throw Error(ErrorKind::invalid_argument, "dnc_detect: subsample must be in (0,1] and c >= 0");
    check_all(updates, "dnc_detect");
    const std::size_t d = updates[0].total_len();
    const std::size_t sub = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.subsample * d)));
    const std::size_t flag = std::min(n, static_cast<std::size_t>(std::ceil(cfg.c * static_cast<double>(m))));

    std::set<std::size_t> bad;
    std::vector<std::size_t> coords(d);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        Rng rng(derive_seed(seed, {it}));
        std::iota(coords.begin(), coords.end(), 0);
        std::shuffle(coords.begin(), coords.end(), rng);
        RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(sub));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t q = 0; q < sub; ++q)
                x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)) = updates[i].values()[coords[q]];
        const PcaResult p = pca(x, 1);
        if (p.scores.cols() == 0 || flag == 0) continue;
        std::vector<double> score(n);
        for (std::size_t i = 0; i < n; ++i) score[i] = p.scores(static_cast<Eigen::Index>(i), 0) * p.scores(static_cast<Eigen::Index>(i), 0);
        if (std::all_of(score.begin(), score.end(), [](double s) { return s == 0.0; })) continue;
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return score[a] > score[b]; });
        for (std::size_t r = 0; r < flag; ++r) bad.insert(order[r]);
    }
    return {bad.begin(), bad.end()};
}

}  // namespace fedprov
