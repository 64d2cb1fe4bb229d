#include "fedprov/domain.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "fedprov/detection.hpp"
#include "fedprov/error.hpp"

namespace fedprov {

namespace {
constexpr double kOmegaEps = 1e-12;

// Ridge solution of min |X b - y|^2 + ridge |b|^2.
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double ridge) {
    Eigen::MatrixXd a = x.transpose() * x;
    a.diagonal().array() += ridge;
    return a.ldlt().solve(x.transpose() * y);
}

void check_entry(const DomainObservation& o, std::size_t k) {
    if (o.d.size() != k || o.dg.size() != k || o.dtheta.size() != k)
        throw Error(ErrorKind::incompatible, "domain history entry has the wrong layer count");
}
}  // namespace

DomainParams fit_domain_model(std::span<const DomainObservation> history, std::size_t layers, double ridge) {
    DomainParams m;
    m.f1.assign(layers, 0.0);
    m.f2 = m.omega = m.h = m.w = m.p = m.f1;
    if (history.size() < 3) return m;
    for (const auto& o : history) check_entry(o, layers);

    const auto steps = static_cast<Eigen::Index>(history.size() - 1);
    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd x1(steps, 3), x2(steps, 2);
        Eigen::VectorXd y1(steps), y2(steps);
        for (Eigen::Index s = 0; s < steps; ++s) {
            const auto& prev = history[static_cast<std::size_t>(s)];
            const auto& cur = history[static_cast<std::size_t>(s) + 1];
            x1(s, 0) = prev.d[l];
            x1(s, 1) = prev.dg[l];
            x1(s, 2) = 1.0;
            y1(s) = cur.d[l];
            x2(s, 0) = 1.0;
            x2(s, 1) = cur.dtheta[l];
            y2(s) = cur.dg[l] - prev.dg[l];
        }
        const Eigen::VectorXd b1 = ridge_solve(x1, y1, ridge);
        const Eigen::VectorXd b2 = ridge_solve(x2, y2, ridge);
        m.f1[l] = b1(0);
        m.f2[l] = b1(1);
        m.omega[l] = b2(0);
        m.p[l] = b2(1);
        // the fitted constant is H*Omega + W; attribute it to H when Omega is usable
        if (std::abs(m.omega[l]) > kOmegaEps)
            m.h[l] = b1(2) / m.omega[l];
        else
            m.w[l] = b1(2);
    }
    m.fitted = true;
    return m;
}

std::vector<double> predict_domain(const DomainParams& m, std::span<const double> d_prev,
                                   std::span<const double> dg_prev) {
    if (!m.fitted) throw Error(ErrorKind::not_fitted, "predict_domain: model not fitted");
    const std::size_t k = m.f1.size();
    if (d_prev.size() != k || dg_prev.size() != k)
        throw Error(ErrorKind::incompatible, "predict_domain: state length differs from model");
    std::vector<double> out(k);
    for (std::size_t l = 0; l < k; ++l)
        out[l] = m.f1[l] * d_prev[l] + m.f2[l] * dg_prev[l] + m.h[l] * m.omega[l] + m.w[l];
    return out;
}

void refit_omega(DomainParams& m, std::span<const DomainObservation> history) {
    if (!m.fitted || history.size() < 2) return;
    const std::size_t k = m.f1.size();
    for (std::size_t l = 0; l < k; ++l) {
        double s = 0.0;
        for (std::size_t t = 1; t < history.size(); ++t)
            s += history[t].dg[l] - history[t - 1].dg[l] - m.p[l] * history[t].dtheta[l];
        m.omega[l] = s / static_cast<double>(history.size() - 1);
    }
}

std::vector<double> domain_distance(const std::vector<std::vector<double>>& cam,
                                    const std::vector<std::vector<double>>& reference) {
    if (cam.size() != reference.size()) throw Error(ErrorKind::incompatible, "domain_distance: layer count differs");
    std::vector<double> out(cam.size());
    for (std::size_t l = 0; l < cam.size(); ++l) out[l] = ddist(cam[l], reference[l]);
    return out;
}

void update_reference(DomainModel& model, const std::vector<std::vector<double>>& cam, bool benign,
                      std::size_t window) {
    if (!benign) return;
    if (window == 0) window = 1;
    model.ref_window.push_back(cam);
    while (model.ref_window.size() > window) model.ref_window.pop_front();
    model.reference = model.ref_window.front();
    for (std::size_t w = 1; w < model.ref_window.size(); ++w)
        for (std::size_t l = 0; l < cam.size(); ++l)
            for (std::size_t e = 0; e < cam[l].size(); ++e) model.reference[l][e] += model.ref_window[w][l][e];
    const double inv = 1.0 / static_cast<double>(model.ref_window.size());
    for (auto& layer : model.reference)
        for (double& v : layer) v *= inv;
}

nlohmann::json domain_model_to_json(const DomainModel& m) {
    nlohmann::json j;
    j["f1"] = m.params.f1;
    j["f2"] = m.params.f2;
    j["omega"] = m.params.omega;
    j["h"] = m.params.h;
    j["w"] = m.params.w;
    j["p"] = m.params.p;
    j["fitted"] = m.params.fitted;
    j["reference"] = m.reference;
    j["ref_window"] = nlohmann::json::array();
    for (const auto& c : m.ref_window) j["ref_window"].push_back(c);
    j["history"] = nlohmann::json::array();
    for (const auto& o : m.history) j["history"].push_back({{"d", o.d}, {"dg", o.dg}, {"dtheta", o.dtheta}});
    return j;
}

DomainModel domain_model_from_json(const nlohmann::json& j) {
    try {
        DomainModel m;
        m.params.f1 = j.at("f1").get<std::vector<double>>();
        m.params.f2 = j.at("f2").get<std::vector<double>>();
        m.params.omega = j.at("omega").get<std::vector<double>>();
        m.params.h = j.at("h").get<std::vector<double>>();
        m.params.w = j.at("w").get<std::vector<double>>();
        m.params.p = j.at("p").get<std::vector<double>>();
        m.params.fitted = j.at("fitted").get<bool>();
        m.reference = j.at("reference").get<std::vector<std::vector<double>>>();
        for (const auto& c : j.at("ref_window")) m.ref_window.push_back(c.get<std::vector<std::vector<double>>>());
        for (const auto& o : j.at("history"))
            m.history.push_back({o.at("d").get<std::vector<double>>(), o.at("dg").get<std::vector<double>>(),
                                 o.at("dtheta").get<std::vector<double>>()});
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, std::string("domain model: ") + e.what());
    }
}

}  // namespace fedprov
