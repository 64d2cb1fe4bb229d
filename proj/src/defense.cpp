#include "fedprov/defense.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fedprov/baselines.hpp"
#include "fedprov/error.hpp"
#include "fedprov/features.hpp"
#include "fedprov/rng.hpp"

namespace fedprov {

namespace {

std::vector<Verdict> blank_verdicts(const DefenseInput& in) {
    std::vector<Verdict> out(in.ids.size());
    for (std::size_t i = 0; i < in.ids.size(); ++i) {
        out[i].client = in.ids[i];
        out[i].round = in.round;
    }
    return out;
}

// Verdicts that only carry an accept/reject decision.
DefenseOutput from_rejections(const DefenseInput& in, const std::set<std::size_t>& rejected_pos) {
    DefenseOutput o;
    o.accepted.assign(in.ids.size(), true);
    o.verdicts = blank_verdicts(in);
    for (auto p : rejected_pos) {
        o.accepted[p] = false;
        o.verdicts[p].confirmed = true;
    }
    return o;
}

class NoDefense : public Defense {
public:
    DefenseOutput run(const DefenseInput& in) override { return from_rejections(in, {}); }
};

class OracleDefense : public Defense {
public:
    DefenseOutput run(const DefenseInput& in) override {
        std::set<std::size_t> bad;
        for (std::size_t i = 0; i < in.truth.size(); ++i)
            if (in.truth[i]) bad.insert(i);
        return from_rejections(in, bad);
    }
};

class KrumDefense : public Defense {
public:
    KrumDefense(std::size_t m, KrumCount count) : m_(m), count_(count) {}
    DefenseOutput run(const DefenseInput& in) override {
        const std::size_t n = in.updates.size();
        std::size_t m = m_;
        while (m > 0 && n <= m + 2 + (count_ == KrumCount::classic ? m : 0)) --m;
        if (n < 3) return from_rejections(in, {});
        const auto keep = multi_krum(in.updates, m, count_);
        std::set<std::size_t> bad;
        for (std::size_t i = 0; i < n; ++i)
            if (std::find(keep.begin(), keep.end(), i) == keep.end()) bad.insert(i);
        return from_rejections(in, bad);
    }

private:
    std::size_t m_;
    KrumCount count_;
};

class MedianDefense : public Defense {
public:
    DefenseOutput run(const DefenseInput& in) override {
        DefenseOutput o = from_rejections(in, {});
        if (!in.updates.empty()) o.aggregate = median_aggregate(in.updates);
        return o;
    }
};

class DncDefense : public Defense {
public:
    DncDefense(std::size_t m, DncConfig cfg) : m_(m), cfg_(cfg) {}
    DefenseOutput run(const DefenseInput& in) override {
        if (in.updates.size() < 3) return from_rejections(in, {});
        const auto bad = dnc_detect(in.updates, m_, cfg_, derive_seed(in.seed, {stream::detect, in.round}));
        return from_rejections(in, {bad.begin(), bad.end()});
    }

private:
    std::size_t m_;
    DncConfig cfg_;
};

RowMatrix rows_of(std::size_t n, std::size_t width, const auto& fill) {
    RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < n; ++i) fill(i, x.row(static_cast<Eigen::Index>(i)).data());
    return x;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void FlTracer::refit(DomainModel& m) const {
    if (m.history.size() < 3) return;
    const std::size_t k = m.history.back().d.size();
    if (cfg_.fit_mode == "once") {
        if (!m.params.fitted) m.params = fit_domain_model(m.history, k);
        else if (cfg_.drift) refit_omega(m.params, m.history);
        return;
    }
    const std::size_t w = std::min(cfg_.fit_window, m.history.size());
    const std::span<const DomainObservation> recent(m.history.data() + (m.history.size() - w), w);
    m.params = fit_domain_model(recent, k);
    if (cfg_.drift) refit_omega(m.params, recent);
}

DefenseOutput FlTracer::run(const DefenseInput& in) {
    const std::size_t n = in.updates.size();
    DefenseOutput out;
    out.accepted.assign(n, true);
    out.verdicts = blank_verdicts(in);
    if (n < 3) return out;
    for (const auto& u : in.updates) u.require_compatible(in.updates[0], "fltracer");

    const std::size_t len = in.updates[0].total_len();
    const auto features = extract_features(in.updates);
    const auto sig = local_anomaly_detect(
        rows_of(n, len, [&](std::size_t i, double* dst) { std::copy(features[i].signv.begin(), features[i].signv.end(), dst); }),
        cfg_.mad);
    const auto srt = local_anomaly_detect(
        rows_of(n, len, [&](std::size_t i, double* dst) { std::copy(features[i].sortv.begin(), features[i].sortv.end(), dst); }),
        cfg_.mad);
    const std::size_t clen = features[0].classv.size();
    const auto cls = local_anomaly_detect(
        rows_of(n, clen, [&](std::size_t i, double* dst) { std::copy(features[i].classv.begin(), features[i].classv.end(), dst); }),
        cfg_.mad);

    std::vector<FeatureFlags> flags(n);
    for (auto i : sig.flagged) flags[i].signv = true;
    for (auto i : srt.flagged) flags[i].sortv = true;
    for (auto i : cls.flagged) flags[i].classv = true;

    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) norms[i] = in.updates[i].norm();
    const double med_norm = median_of(norms);

    std::vector<ClientEvidence> ev(n);
    const auto conv_layers = in.updates[0].layers_of(LayerKind::conv);
    const bool conv = conv_layers.size() >= 2;

    // domain observations to record for benign clients after the verdict
    std::vector<std::optional<DomainObservation>> observed(n);
    std::vector<std::vector<std::vector<double>>> cams(n);

    if (conv) {
        std::vector<LayeredParams> extras;
        extras.push_back(in.prev_global_update);
        LayeredParams total = LayeredParams::zeros_like(in.updates[0]);
        for (const auto& u : in.updates) total += u;
        for (std::size_t i = 0; i < n; ++i) extras.push_back((1.0 / static_cast<double>(n - 1)) * (total - in.updates[i]));
        CamResult cam = extract_cam(in.updates, extras);
        const TaskReport task = task_detect(cam.clients, cfg_.tau, cfg_.slope);

        std::vector<DomainEvidence> dom;
        for (std::size_t i = 0; i < n; ++i) {
            DomainEvidence e;
            e.client = in.ids[i];
            const auto it = models_.find(in.ids[i]);
            if (it != models_.end() && !it->second.reference.empty()) {
                const DomainModel& m = it->second;
                DomainObservation o;
                o.d = domain_distance(cam.clients[i], m.reference);
                o.dg = domain_distance(cam.extras[0], m.reference);
                o.dtheta = domain_distance(cam.extras[1 + i], m.reference);
                if (m.params.fitted && !m.history.empty()) {
                    const auto pred = predict_domain(m.params, m.history.back().d, m.history.back().dg);
                    e.fitted = true;
                    e.delta.resize(pred.size());
                    for (std::size_t l = 0; l < pred.size(); ++l) e.delta[l] = o.d[l] - pred[l];
                }
                observed[i] = std::move(o);
            }
            dom.push_back(std::move(e));
        }

        std::vector<std::size_t> cand_ids, det_ids;
        const bool bootstrap = in.round < cfg_.bootstrap_rounds;
        for (auto p : task.candidates)
            if (!bootstrap || dom[p].fitted) cand_ids.push_back(in.ids[p]);
        for (auto p : task.determined) det_ids.push_back(in.ids[p]);
        const DomainReport rep = domain_detect(dom, cand_ids, det_ids, cfg_.mad, cfg_.slope);

        for (std::size_t i = 0; i < n; ++i) {
            const auto id = in.ids[i];
            flags[i].task = std::binary_search(rep.determined.begin(), rep.determined.end(), id);
            flags[i].domain = std::find(rep.confirmed.begin(), rep.confirmed.end(), id) != rep.confirmed.end();
            ev[i].alpha = task.alpha[i];
            ev[i].conv_layers = conv_layers;
            const auto& a = task.alpha[i];
            out.verdicts[i].scores["alpha_min"] = *std::min_element(a.begin(), a.end());
            out.verdicts[i].scores["alpha_slope"] = slope(a, cfg_.slope);
            if (auto s = rep.delta_slope.find(id); s != rep.delta_slope.end()) out.verdicts[i].scores["delta_slope"] = s->second;
            if (auto s = rep.delta_mean.find(id); s != rep.delta_mean.end()) out.verdicts[i].scores["delta_mean"] = s->second;
        }
        for (std::size_t i = 0; i < n; ++i) cams[i] = std::move(cam.clients[i]);
    } else if (!features[0].featv.empty()) {
        for (std::size_t i = 0; i < n; ++i) {
            double top = 0.0;
            for (double r : features[i].featv) top = std::max(top, r);
            flags[i].task = top > cfg_.mad.lambda;
            out.verdicts[i].scores["featv_max"] = top;
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        auto& v = out.verdicts[i];
        v.flags = flags[i];
        v.confirmed = flags[i].any();
        v.scores["signv"] = sig.scores[i];
        v.scores["sortv"] = srt.scores[i];
        v.scores["classv"] = cls.scores[i];
        out.accepted[i] = !v.confirmed;
        ev[i].client = in.ids[i];
        ev[i].flags = flags[i];
        ev[i].norm_ratio = med_norm > 0.0 ? norms[i] / med_norm : 1.0;
        ev[i].scores = v.scores;
    }
    TraceConfig tc;
    tc.magnitude_ratio = cfg_.magnitude_ratio;
    out.records = trace(ev, in.round, tc);

    // single writer: domain state moves only after the round's verdicts are final
    if (conv) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!out.accepted[i]) continue;
            DomainModel& m = models_[in.ids[i]];
            if (observed[i]) {
                m.history.push_back(std::move(*observed[i]));
                const std::size_t keep = std::max<std::size_t>(cfg_.fit_window, 3);
                if (m.history.size() > keep) m.history.erase(m.history.begin(), m.history.end() - static_cast<std::ptrdiff_t>(keep));
            }
            update_reference(m, cams[i], true, cfg_.reference_window);
            refit(m);
        }
    }
    return out;
}

std::unique_ptr<Defense> make_defense(const DetectionConfig& cfg, std::size_t m) {
    if (cfg.defense == "none") return std::make_unique<NoDefense>();
    if (cfg.defense == "oracle") return std::make_unique<OracleDefense>();
    if (cfg.defense == "mkrum") return std::make_unique<KrumDefense>(m, cfg.krum_count);
    if (cfg.defense == "median") return std::make_unique<MedianDefense>();
    if (cfg.defense == "dnc") return std::make_unique<DncDefense>(m, cfg.dnc);
    if (cfg.defense == "fltracer") return std::make_unique<FlTracer>(cfg);
    throw Error(ErrorKind::invalid_argument, "unknown defense '" + cfg.defense + "'");
}

}  // namespace fedprov
