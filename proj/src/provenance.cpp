#include "fedprov/provenance.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "fedprov/error.hpp"

namespace fedprov {

const char* to_string(Objective o) { return o == Objective::backdoor ? "backdoor" : "untargeted"; }

const char* to_string(TracedType t) {
    switch (t) {
        case TracedType::sign_flipping: return "sign_flipping";
        case TracedType::adaptive_untargeted_or_noise_or_mra: return "adaptive_untargeted_or_noise_or_mra";
        case TracedType::dirty_label: return "dirty_label";
        case TracedType::backdoor: return "backdoor";
    }
    return "?";
}

TracedType traced_type_from_string(const std::string& s) {
    for (auto t : {TracedType::sign_flipping, TracedType::adaptive_untargeted_or_noise_or_mra, TracedType::dirty_label,
                   TracedType::backdoor})
        if (s == to_string(t)) return t;
    throw Error(ErrorKind::parse, "unknown traced type '" + s + "'");
}

std::optional<TracedType> expected_trace(AttackType t) {
    switch (t) {
        case AttackType::none: return std::nullopt;
        case AttackType::sign_flip: return TracedType::sign_flipping;
        case AttackType::add_noise:
        case AttackType::mb:
        case AttackType::mra: return TracedType::adaptive_untargeted_or_noise_or_mra;
        case AttackType::dirty_label: return TracedType::dirty_label;
        case AttackType::badnets:
        case AttackType::dba:
        case AttackType::blind:
        case AttackType::fra: return TracedType::backdoor;
    }
    return std::nullopt;
}

std::vector<std::size_t> joint_decision(const std::vector<ClientEvidence>& clients) {
    std::vector<std::size_t> out;
    for (const auto& c : clients)
        if (c.flags.any()) out.push_back(c.client);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {
double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::size_t> suspect_layers(const ClientEvidence& c) {
    std::vector<std::size_t> out;
    if (c.alpha.empty()) return out;
    const double med = median(c.alpha);
    std::vector<double> dev;
    for (double a : c.alpha) dev.push_back(std::abs(a - med));
    const double cut = med - median(dev);
    for (std::size_t l = 0; l < c.alpha.size(); ++l)
        if (c.alpha[l] <= cut) out.push_back(l < c.conv_layers.size() ? c.conv_layers[l] : l);
    return out;
}
}  // namespace

std::vector<ProvenanceRecord> trace(const std::vector<ClientEvidence>& clients, std::size_t round,
                                    const TraceConfig& cfg) {
    std::vector<ProvenanceRecord> out;
    for (const auto& c : clients) {
        if (!c.flags.any()) continue;
        ProvenanceRecord r;
        r.client = c.client;
        r.round = round;
        const bool cam = c.flags.task || c.flags.domain;
        if (c.flags.signv) r.locations.push_back("symbols");
        if (c.flags.sortv) r.locations.push_back("values/order");
        if (c.flags.classv) r.locations.push_back("classifier");
        if (cam) {
            r.locations.push_back("feature-extractor");
            r.suspect_layers = suspect_layers(c);
        }
        r.likely_mra = c.norm_ratio > cfg.magnitude_ratio;
        if (r.likely_mra)
            r.type = TracedType::adaptive_untargeted_or_noise_or_mra;
        else if (c.flags.signv)
            r.type = TracedType::sign_flipping;
        else if (c.flags.classv)
            r.type = TracedType::dirty_label;
        else if (cam)
            r.type = TracedType::backdoor;
        else
            r.type = TracedType::adaptive_untargeted_or_noise_or_mra;
        r.objective = r.type == TracedType::backdoor ? Objective::backdoor : Objective::untargeted;
        r.evidence = c.scores;
        r.evidence["norm_ratio"] = c.norm_ratio;
        out.push_back(std::move(r));
    }
    return out;
}

TracingAccuracy tracing_accuracy(const std::vector<ProvenanceRecord>& records,
                                 const std::map<std::size_t, AttackType>& truth) {
    TracingAccuracy acc;
    std::map<TracedType, std::pair<std::size_t, std::size_t>> tally;
    for (const auto& r : records) {
        const auto it = truth.find(r.client);
        if (it == truth.end()) continue;
        const auto want = expected_trace(it->second);
        if (!want) continue;
        auto& [ok, n] = tally[*want];
        ++n;
        ++acc.total;
        if (r.type == *want) {
            ++ok;
            ++acc.correct;
        }
    }
    for (const auto& [t, c] : tally) acc.per_type[t] = static_cast<double>(c.first) / static_cast<double>(c.second);
    if (acc.total) acc.overall = static_cast<double>(acc.correct) / static_cast<double>(acc.total);
    return acc;
}

nlohmann::json record_to_json(const ProvenanceRecord& r) {
    nlohmann::json j;
    j["client"] = r.client;
    j["round"] = r.round;
    j["objective"] = to_string(r.objective);
    j["type"] = to_string(r.type);
    j["locations"] = r.locations;
    j["suspect_layers"] = r.suspect_layers;
    j["likely_mra"] = r.likely_mra;
    nlohmann::json ev = nlohmann::json::object();
    for (const auto& [k, v] : r.evidence) ev[k] = v;
    j["evidence"] = ev;
    return j;
}

ProvenanceRecord record_from_json(const nlohmann::json& j) {
    try {
        ProvenanceRecord r;
        r.client = j.at("client").get<std::size_t>();
        r.round = j.at("round").get<std::size_t>();
        r.objective = j.at("objective").get<std::string>() == "backdoor" ? Objective::backdoor : Objective::untargeted;
        r.type = traced_type_from_string(j.at("type").get<std::string>());
        r.locations = j.at("locations").get<std::vector<std::string>>();
        r.suspect_layers = j.at("suspect_layers").get<std::vector<std::size_t>>();
        r.likely_mra = j.at("likely_mra").get<bool>();
        for (const auto& [k, v] : j.at("evidence").items()) r.evidence[k] = v.get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, std::string("provenance record: ") + e.what());
    }
}

void write_provenance_summary(std::ostream& out, const std::vector<ProvenanceRecord>& records) {
    if (records.empty()) {
        out << "no adversaries traced\n";
        return;
    }
    std::map<std::size_t, std::vector<const ProvenanceRecord*>> by_client;
    for (const auto& r : records) by_client[r.client].push_back(&r);
    std::map<std::string, std::vector<std::size_t>> groups;
    for (const auto& [client, rs] : by_client) {
        std::map<std::string, std::size_t> votes;
        for (const auto* r : rs) ++votes[to_string(r->type)];
        const auto top = std::max_element(votes.begin(), votes.end(),
                                          [](const auto& a, const auto& b) { return a.second < b.second; });
        groups[top->first].push_back(client);
        const auto* first = rs.front();
        std::set<std::string> locs;
        for (const auto* r : rs) locs.insert(r->locations.begin(), r->locations.end());
        out << "client " << client << ": first flagged round " << first->round << ", " << rs.size()
            << " flagged round(s), traced " << top->first << " (" << to_string(first->objective) << ")";
        if (!locs.empty()) {
            out << ", locations:";
            for (const auto& l : locs) out << ' ' << l;
        }
        if (!first->suspect_layers.empty()) {
            out << ", suspect layers:";
            for (auto l : first->suspect_layers) out << ' ' << l;
        }
        out << '\n';
    }
    for (const auto& [type, ids] : groups) {
        out << "group " << type << ":";
        for (auto id : ids) out << ' ' << id;
        out << '\n';
    }
}

}  // namespace fedprov
