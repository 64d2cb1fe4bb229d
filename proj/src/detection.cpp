#include "fedprov/detection.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fedprov/error.hpp"
#include "fedprov/pca.hpp"

namespace fedprov {

LocalResult local_anomaly_detect(const RowMatrix& vectors, const MadConfig& mad) {
    const auto n = static_cast<std::size_t>(vectors.rows());
    if (n < 3) throw Error(ErrorKind::insufficient_population, "local anomaly detection needs at least 3 vectors");
    LocalResult out;
    out.scores.assign(n, 0.0);
    const PcaResult p = pca(vectors, 1);
    if (p.scores.cols() == 0) return out;
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = p.scores(static_cast<Eigen::Index>(i), 0);
    out.scores = mad_scores(z, mad);
    for (std::size_t i = 0; i < n; ++i)
        if (out.scores[i] > mad.lambda) out.flagged.push_back(i);
    return out;
}

double tsim(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::incompatible, "tsim: length mismatch");
    if (a.empty()) throw Error(ErrorKind::invalid_argument, "tsim: empty vectors");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        ma += a[j];
        mb += b[j];
    }
    ma /= n;
    mb /= n;
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double x = a[j] - ma, y = b[j] - mb;
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if (aa == 0.0 || bb == 0.0) return (aa == 0.0 && bb == 0.0) ? 1.0 : 0.0;
    return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

double ddist(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::incompatible, "ddist: length mismatch");
    if (a.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] - b[j];
    return s / static_cast<double>(a.size());
}

double slope(std::span<const double> values, SlopeMode mode) {
    return mode == SlopeMode::regression ? regression_slope(values) : endpoint_slope(values);
}

TaskReport task_detect(const std::vector<std::vector<std::vector<double>>>& cams, double tau, SlopeMode mode) {
    const std::size_t n = cams.size();
    if (n < 3) throw Error(ErrorKind::insufficient_population, "task detection needs at least 3 clients");
    const std::size_t k = cams[0].size();
    if (k < 2) throw Error(ErrorKind::invalid_argument, "task detection needs at least 2 conv layers");
    for (const auto& c : cams) {
        if (c.size() != k) throw Error(ErrorKind::incompatible, "task detection: layer count differs");
        for (std::size_t l = 0; l < k; ++l)
            if (c[l].size() != cams[0][l].size()) throw Error(ErrorKind::incompatible, "task detection: layer width differs");
    }

    // coordinate-wise median pattern
    std::vector<std::vector<double>> pattern(k);
    std::vector<double> column(n);
    for (std::size_t l = 0; l < k; ++l) {
        pattern[l].resize(cams[0][l].size());
        for (std::size_t e = 0; e < pattern[l].size(); ++e) {
            for (std::size_t i = 0; i < n; ++i) column[i] = cams[i][l][e];
            std::sort(column.begin(), column.end());
            pattern[l][e] = n % 2 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
        }
    }

    TaskReport r;
    r.tau = tau;
    r.alpha.assign(n, std::vector<double>(k));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t l = 0; l < k; ++l) r.alpha[i][l] = tsim(pattern[l], cams[i][l]);
        const auto& t = r.alpha[i];
        const double lo = *std::min_element(t.begin(), t.end());
        const double hi = *std::max_element(t.begin(), t.end());
        if (lo <= tau)
            r.determined.push_back(i);
        else if (hi <= 0.0 || (hi > lo && slope(t, mode) <= 0.0))   // a flat profile has no trend
            r.candidates.push_back(i);
    }
    return r;
}

DomainReport domain_detect(const std::vector<DomainEvidence>& evidence, const std::vector<std::size_t>& candidates,
                           const std::vector<std::size_t>& determined, const MadConfig& mad, SlopeMode mode) {
    DomainReport rep;
    std::set<std::size_t> out(determined.begin(), determined.end());

    std::vector<const DomainEvidence*> fitted;
    for (const auto& e : evidence)
        if (e.fitted) fitted.push_back(&e);
    std::size_t k = fitted.empty() ? 0 : fitted[0]->delta.size();
    for (const auto* e : fitted)
        if (e->delta.size() != k) throw Error(ErrorKind::incompatible, "domain detection: delta length differs");

    std::set<std::size_t> slope_flag, layer_flag;
    if (!fitted.empty()) {
        std::vector<double> slopes;
        for (const auto* e : fitted) {
            slopes.push_back(slope(e->delta, mode));
            double m = 0.0;
            for (double d : e->delta) m += d;
            rep.delta_slope[e->client] = slopes.back();
            rep.delta_mean[e->client] = k ? m / static_cast<double>(k) : 0.0;
        }
        for (auto idx : mad_flags(slopes, mad)) slope_flag.insert(fitted[idx]->client);
        std::vector<double> layer(fitted.size());
        for (std::size_t l = 0; l < k; ++l) {
            for (std::size_t i = 0; i < fitted.size(); ++i) layer[i] = fitted[i]->delta[l];
            for (auto idx : mad_flags(layer, mad)) layer_flag.insert(fitted[idx]->client);
        }
    }

    for (auto c : candidates) {
        if (out.count(c)) continue;
        const auto it = std::find_if(evidence.begin(), evidence.end(), [&](const auto& e) { return e.client == c; });
        bool confirm = false;
        if (it == evidence.end() || !it->fitted) {
            confirm = true;
        } else if (rep.delta_slope[c] > 0.0) {
            confirm = slope_flag.count(c) || layer_flag.count(c) || rep.delta_mean[c] > 0.0;
        }
        if (confirm) {
            rep.confirmed.push_back(c);
            out.insert(c);
        }
    }
    rep.determined.assign(out.begin(), out.end());
    return rep;
}

nlohmann::json verdict_to_json(const Verdict& v) {
    nlohmann::json j;
    j["client"] = v.client;
    j["round"] = v.round;
    j["flags"] = {{"signv", v.flags.signv}, {"sortv", v.flags.sortv}, {"classv", v.flags.classv},
                  {"task", v.flags.task}, {"domain", v.flags.domain}};
    nlohmann::json s = nlohmann::json::object();
    for (const auto& [name, val] : v.scores) s[name] = val;
    j["scores"] = s;
    j["confirmed"] = v.confirmed;
    return j;
}

Verdict verdict_from_json(const nlohmann::json& j) {
    try {
        Verdict v;
        v.client = j.at("client").get<std::size_t>();
        v.round = j.at("round").get<std::size_t>();
        const auto& f = j.at("flags");
        v.flags.signv = f.at("signv").get<bool>();
        v.flags.sortv = f.at("sortv").get<bool>();
        v.flags.classv = f.at("classv").get<bool>();
        v.flags.task = f.at("task").get<bool>();
        v.flags.domain = f.at("domain").get<bool>();
        for (const auto& [name, val] : j.at("scores").items()) v.scores[name] = val.get<double>();
        v.confirmed = j.at("confirmed").get<bool>();
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, std::string("verdict: ") + e.what());
    }
}

}  // namespace fedprov
